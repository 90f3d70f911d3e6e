//! Tip-path plot: time-colored polyline, colorbar, metric axes and cycle markers.

use std::fmt::Write;

use crate::dynamics::Trajectory;
use crate::experiments::{tip_trajectory, TipPoint};
use crate::kinematics::RobotConfig;

const WIDTH: f64 = 720.0;
const HEIGHT: f64 = 480.0;
const PLOT: (f64, f64, f64, f64) = (80.0, 30.0, 560.0, 400.0); // left, top, width, height
const CHUNKS: usize = 96;

/// Viridis-like ramp sampled at five stops.
const STOPS: [(u8, u8, u8); 5] = [
    (68, 1, 84),
    (59, 82, 139),
    (33, 145, 140),
    (94, 201, 98),
    (253, 231, 37),
];

fn color(u: f64) -> String {
    let x = u.clamp(0.0, 1.0) * (STOPS.len() - 1) as f64;
    let i = (x.floor() as usize).min(STOPS.len() - 2);
    let f = x - i as f64;
    let (a, b) = (STOPS[i], STOPS[i + 1]);
    let mix = |p: u8, q: u8| (p as f64 + (q as f64 - p as f64) * f).round() as u8;
    format!("#{:02x}{:02x}{:02x}", mix(a.0, b.0), mix(a.1, b.1), mix(a.2, b.2))
}

struct Frame {
    x0: f64,
    y0: f64,
    scale: f64,
}

impl Frame {
    /// Equal-aspect fit of the points into the plot area, with a small margin.
    fn fit(points: &[TipPoint]) -> Self {
        let (mut xmin, mut xmax, mut ymin, mut ymax) = (f64::MAX, f64::MIN, f64::MAX, f64::MIN);
        for p in points {
            xmin = xmin.min(p.x);
            xmax = xmax.max(p.x);
            ymin = ymin.min(p.y);
            ymax = ymax.max(p.y);
        }
        let span = (xmax - xmin).max(ymax - ymin).max(1e-6) * 1.1;
        let scale = (PLOT.2 / span).min(PLOT.3 / span);
        let cx = 0.5 * (xmin + xmax);
        let cy = 0.5 * (ymin + ymax);
        Self {
            x0: cx - 0.5 * PLOT.2 / scale,
            y0: cy - 0.5 * PLOT.3 / scale,
            scale,
        }
    }

    fn px(&self, x: f64, y: f64) -> (f64, f64) {
        (
            PLOT.0 + (x - self.x0) * self.scale,
            PLOT.1 + PLOT.3 - (y - self.y0) * self.scale,
        )
    }
}

fn nice_step(range: f64) -> f64 {
    let raw = range / 5.0;
    let mag = 10f64.powf(raw.log10().floor());
    [1.0, 2.0, 5.0, 10.0]
        .into_iter()
        .map(|m| m * mag)
        .find(|s| *s >= raw)
        .unwrap_or(10.0 * mag)
}

fn label(v: f64, step: f64) -> String {
    let digits = (-step.log10().floor()).max(0.0) as usize;
    let s = format!("{v:.digits$}");
    if s.starts_with('-') && s[1..].chars().all(|c| c == '0' || c == '.') {
        s[1..].to_string()
    } else {
        s
    }
}

fn axes(svg: &mut String, frame: &Frame) {
    let (l, t, w, h) = PLOT;
    let _ = writeln!(
        svg,
        r##"<rect class="plot-area" x="{l}" y="{t}" width="{w}" height="{h}" fill="none" stroke="#444"/>"##
    );
    let x_range = w / frame.scale;
    let y_range = h / frame.scale;
    let step = nice_step(x_range.max(y_range));
    let mut v = (frame.x0 / step).ceil() * step;
    while v <= frame.x0 + x_range {
        let (px, _) = frame.px(v, frame.y0);
        let _ = writeln!(
            svg,
            r##"<line x1="{px:.2}" y1="{:.2}" x2="{px:.2}" y2="{:.2}" stroke="#444"/><text class="tick" x="{px:.2}" y="{:.2}" text-anchor="middle" font-size="11">{}</text>"##,
            t + h,
            t + h + 5.0,
            t + h + 18.0,
            label(v, step)
        );
        v += step;
    }
    let mut v = (frame.y0 / step).ceil() * step;
    while v <= frame.y0 + y_range {
        let (_, py) = frame.px(frame.x0, v);
        let _ = writeln!(
            svg,
            r##"<line x1="{:.2}" y1="{py:.2}" x2="{l}" y2="{py:.2}" stroke="#444"/><text class="tick" x="{:.2}" y="{:.2}" text-anchor="end" font-size="11">{}</text>"##,
            l - 5.0,
            l - 8.0,
            py + 4.0,
            label(v, step)
        );
        v += step;
    }
    let _ = writeln!(
        svg,
        r#"<text class="axis-label" x="{:.1}" y="{:.1}" text-anchor="middle" font-size="13">x (m)</text>"#,
        l + w / 2.0,
        HEIGHT - 8.0
    );
    let _ = writeln!(
        svg,
        r#"<text class="axis-label" x="16" y="{:.1}" text-anchor="middle" font-size="13" transform="rotate(-90 16 {:.1})">y (m)</text>"#,
        t + h / 2.0,
        t + h / 2.0
    );
}

fn colorbar(svg: &mut String, t_end: f64) {
    let (x, y, w, h) = (PLOT.0 + PLOT.2 + 30.0, PLOT.1, 16.0, PLOT.3);
    svg.push_str("<defs><linearGradient id=\"time\" x1=\"0\" y1=\"1\" x2=\"0\" y2=\"0\">\n");
    for i in 0..STOPS.len() {
        let u = i as f64 / (STOPS.len() - 1) as f64;
        let _ = writeln!(svg, r#"<stop offset="{u}" stop-color="{}"/>"#, color(u));
    }
    svg.push_str("</linearGradient></defs>\n");
    let _ = writeln!(
        svg,
        r##"<rect class="colorbar" x="{x}" y="{y}" width="{w}" height="{h}" fill="url(#time)" stroke="#444"/>"##
    );
    let _ = writeln!(
        svg,
        r#"<text x="{:.1}" y="{:.1}" font-size="11">{t_end:.0} s</text><text x="{:.1}" y="{:.1}" font-size="11">0 s</text>"#,
        x + w + 4.0,
        y + 10.0,
        x + w + 4.0,
        y + h
    );
    let _ = writeln!(
        svg,
        r#"<text x="{:.1}" y="{:.1}" font-size="12" text-anchor="middle">time</text>"#,
        x + w / 2.0,
        y + h + 22.0
    );
}

/// Standalone SVG of the body tip path with time encoded as color.
pub fn render_trajectory_svg(traj: &Trajectory, config: &RobotConfig) -> String {
    let tips = tip_trajectory(traj, config);
    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">"#
    );
    svg.push_str("<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n");
    if tips.is_empty() {
        svg.push_str("</svg>\n");
        return svg;
    }
    let frame = Frame::fit(&tips);
    axes(&mut svg, &frame);
    let t_start = tips[0].t;
    let t_end = tips[tips.len() - 1].t;
    colorbar(&mut svg, t_end);

    let first = tips[0];
    let stationary = tips
        .iter()
        .all(|p| (p.x - first.x).abs() < 1e-12 && (p.y - first.y).abs() < 1e-12);
    if stationary {
        let (px, py) = frame.px(first.x, first.y);
        let _ = writeln!(
            svg,
            r##"<circle class="tip-marker" cx="{px:.2}" cy="{py:.2}" r="4" fill="#222"/>"##
        );
        svg.push_str("</svg>\n");
        return svg;
    }

    svg.push_str("<g class=\"tip-path\" fill=\"none\" stroke-width=\"2\">\n");
    let per = (tips.len() - 1).div_ceil(CHUNKS).max(1);
    let duration = (t_end - t_start).max(f64::MIN_POSITIVE);
    let mut i = 0;
    while i + 1 < tips.len() {
        let j = (i + per).min(tips.len() - 1);
        let pts = tips[i..=j]
            .iter()
            .map(|p| {
                let (x, y) = frame.px(p.x, p.y);
                format!("{x:.2},{y:.2}")
            })
            .collect::<Vec<_>>()
            .join(" ");
        let u = (0.5 * (tips[i].t + tips[j].t) - t_start) / duration;
        let _ = writeln!(svg, r#"<polyline points="{pts}" stroke="{}"/>"#, color(u));
        i = j;
    }
    svg.push_str("</g>\n");

    for c in 1..=traj.full_cycles() {
        let p = tips[traj.cycle_boundary(c)];
        let (px, py) = frame.px(p.x, p.y);
        let _ = writeln!(
            svg,
            r##"<g class="cycle-marker"><circle cx="{px:.2}" cy="{py:.2}" r="3.5" fill="white" stroke="#222"/><text x="{px:.2}" y="{:.2}" font-size="10" text-anchor="middle">C{c}</text></g>"##,
            py - 7.0
        );
    }
    svg.push_str("</svg>\n");
    svg
}
