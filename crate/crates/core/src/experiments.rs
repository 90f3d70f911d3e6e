//! Gait presets, locomotion metrics and the reciprocity (scallop) harness.

use nalgebra::Vector2;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::actuation::{GaitMode, GaitSchedule};
use crate::dynamics::{
    simulate, simulate_prescribed, ShapeProgram, SimSettings, SinusoidShape, Trajectory,
    TwoPhaseShape, UnevenReciprocalShape,
};
use crate::error::{ConfigError, Result, SimError};
use crate::kinematics::RobotConfig;

/// Named gait for one of the tested flagellum configurations, built on `base`.
pub fn preset_gait(name: &str, base: &GaitSchedule) -> Result<GaitSchedule, ConfigError> {
    let mode: GaitMode = name.parse()?;
    Ok(base.with_mode(mode))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CycleMetrics {
    /// Body-center displacement of each cycle projected on the mean travel direction (m).
    pub per_cycle_displacement: Vec<f64>,
    /// Mean over the steady cycles (2..n, or the only cycle when n = 1).
    pub mean: f64,
    /// Sample standard deviation over the steady cycles.
    pub std: f64,
    pub net_displacement: f64,
    pub n_cycles: usize,
    pub cycle_period: f64,
}

impl CycleMetrics {
    pub fn steady(&self) -> &[f64] {
        if self.per_cycle_displacement.len() > 1 {
            &self.per_cycle_displacement[1..]
        } else {
            &self.per_cycle_displacement
        }
    }

    /// Coefficient of variation over the steady cycles.
    pub fn cv(&self) -> f64 {
        self.std / self.mean.abs()
    }

    /// Every steady cycle moves the same way.
    pub fn forward_consistent(&self) -> bool {
        let s = self.steady();
        s.iter().all(|d| *d > 0.0) || s.iter().all(|d| *d < 0.0)
    }
}

fn body_center(traj: &Trajectory, idx: usize) -> Vector2<f64> {
    let q = &traj.samples[idx].q;
    Vector2::new(q.x, q.y)
}

/// Final minus initial body-center position, and its length.
pub fn net_displacement(traj: &Trajectory) -> (Vector2<f64>, f64) {
    if traj.is_empty() {
        return (Vector2::zeros(), 0.0);
    }
    let d = body_center(traj, traj.len() - 1) - body_center(traj, 0);
    (d, d.norm())
}

/// Unit vector of the net travel, or the initial heading when there is none.
fn travel_direction(traj: &Trajectory) -> Vector2<f64> {
    let (d, norm) = net_displacement(traj);
    if norm > 0.0 {
        d / norm
    } else {
        let phi = traj.initial().phi_body;
        Vector2::new(phi.cos(), phi.sin())
    }
}

pub fn displacement_per_cycle(traj: &Trajectory) -> Result<CycleMetrics> {
    if traj.is_empty() {
        return Err(SimError::TrajectoryTooShort("empty trajectory".into()));
    }
    let n = traj.full_cycles();
    if n == 0 {
        return Err(SimError::TrajectoryTooShort(format!(
            "{} s covers less than one {} s cycle",
            traj.duration(),
            traj.period
        )));
    }
    let dir = travel_direction(traj);
    let per_cycle: Vec<f64> = (0..n)
        .map(|c| {
            let a = body_center(traj, traj.cycle_boundary(c));
            let b = body_center(traj, traj.cycle_boundary(c + 1));
            (b - a).dot(&dir)
        })
        .collect();
    let steady = if n > 1 { &per_cycle[1..] } else { &per_cycle[..] };
    let m = steady.len() as f64;
    let mean = steady.iter().sum::<f64>() / m;
    let std = if steady.len() > 1 {
        (steady.iter().map(|d| (d - mean).powi(2)).sum::<f64>() / (m - 1.0)).sqrt()
    } else {
        0.0
    };
    Ok(CycleMetrics {
        per_cycle_displacement: per_cycle,
        mean,
        std,
        net_displacement: net_displacement(traj).1,
        n_cycles: n,
        cycle_period: traj.period,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TipPoint {
    pub t: f64,
    pub x: f64,
    pub y: f64,
}

/// Path of the body's forward tip (center + length/2 along the body axis).
pub fn tip_trajectory(traj: &Trajectory, config: &RobotConfig) -> Vec<TipPoint> {
    let half = config.body.length / 2.0;
    traj.samples
        .iter()
        .map(|s| TipPoint {
            t: s.t,
            x: s.q.x + half * s.q.phi_body.cos(),
            y: s.q.y + half * s.q.phi_body.sin(),
        })
        .collect()
}

/// Net body displacement per cycle in body lengths, below which a stroke counts as reciprocal.
pub const SCALLOP_TOLERANCE_BL: f64 = 1e-6;
/// Required error reduction when the step is halved.
pub const MIN_SHRINK_RATIO: f64 = 3.5;
/// Residuals at or below this (body lengths per cycle) are rounding noise:
/// the time-symmetric integrator retraces a time-symmetric stroke exactly, so
/// there is no discretization error left to shrink.
pub const ROUNDOFF_FLOOR_BL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReciprocityProbe {
    pub name: String,
    /// Per-cycle net displacement at the requested step (body lengths).
    pub residual_bl: f64,
    /// Same at half the step.
    pub residual_half_bl: f64,
    pub shrink_ratio: f64,
    pub at_roundoff: bool,
}

impl ReciprocityProbe {
    pub fn within_tolerance(&self) -> bool {
        self.residual_bl <= SCALLOP_TOLERANCE_BL
    }

    pub fn converges(&self) -> bool {
        self.shrink_ratio >= MIN_SHRINK_RATIO || self.at_roundoff
    }

    pub fn symmetry_broken(&self) -> bool {
        !self.within_tolerance()
    }
}

/// Runs `shape` for one cycle at `dt` and `dt/2` and reports the net
/// body displacement per cycle in body lengths.
pub fn probe_reciprocity(
    name: &str,
    config: &RobotConfig,
    shape: &dyn ShapeProgram,
    settings: &SimSettings,
) -> Result<ReciprocityProbe> {
    let body = config.body.length;
    let run = |s: &SimSettings| -> Result<f64> {
        let traj = simulate_prescribed(config, shape, 1, s)?;
        Ok(net_displacement(&traj).1 / body)
    };
    let residual_bl = run(settings)?;
    let residual_half_bl = run(&settings.with_dt(settings.dt / 2.0))?;
    Ok(ReciprocityProbe {
        name: name.to_string(),
        residual_bl,
        residual_half_bl,
        shrink_ratio: residual_bl / residual_half_bl,
        at_roundoff: residual_bl <= ROUNDOFF_FLOOR_BL && residual_half_bl <= ROUNDOFF_FLOOR_BL,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScallopReport {
    /// Reciprocal strokes: must not swim.
    pub reciprocal: Vec<ReciprocityProbe>,
    /// Non-reciprocal control: must swim.
    pub control: ReciprocityProbe,
    pub passed: bool,
}

/// Checks that reciprocal strokes produce no net motion and that the residual
/// converges under step halving, with a non-reciprocal stroke as control.
///
/// Two reciprocal strokes are run: the plain sinusoid (all joints in phase)
/// and the same path traversed with uneven out/back timing, whose residual is
/// pure discretization error.
pub fn scallop_check(
    config: &RobotConfig,
    gait: &GaitSchedule,
    settings: &SimSettings,
) -> Result<ScallopReport> {
    let n_joints = config.joint_count();
    let segments = config.flagella[0].n_segments;
    let sinusoid = SinusoidShape {
        amplitude: gait.beta,
        period: gait.period,
        n_joints,
    };
    let uneven = UnevenReciprocalShape {
        amplitude: gait.beta,
        period: gait.period,
        n_joints,
        fraction: 0.3,
    };
    let two_phase = TwoPhaseShape {
        amplitude: gait.beta,
        period: gait.period,
        segments,
        n_joints,
    };
    let reciprocal = vec![
        probe_reciprocity("sinusoid", config, &sinusoid, settings)?,
        probe_reciprocity("uneven_reciprocal", config, &uneven, settings)?,
    ];
    let control = probe_reciprocity("two_phase", config, &two_phase, settings)?;
    let passed = reciprocal
        .iter()
        .all(|p| p.within_tolerance() && p.converges())
        && control.symmetry_broken();
    Ok(ScallopReport {
        reciprocal,
        control,
        passed,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PresetMetrics {
    pub preset: GaitMode,
    pub metrics: CycleMetrics,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub rows: Vec<PresetMetrics>,
    /// Presets sorted by decreasing mean per-cycle displacement.
    pub ordering: Vec<GaitMode>,
    /// |mean(controlled_flexible)| / |mean(fully_flexible)| when both were run.
    pub controlled_over_flexible: Option<f64>,
    /// |mean(controlled_flexible)| / |mean(fully_rigid)| when both were run.
    pub controlled_over_rigid: Option<f64>,
    pub config: RobotConfig,
    pub gait: GaitSchedule,
    pub settings: SimSettings,
    pub n_cycles: usize,
}

impl ComparisonReport {
    pub fn get(&self, mode: GaitMode) -> Option<&CycleMetrics> {
        self.rows.iter().find(|r| r.preset == mode).map(|r| &r.metrics)
    }
}

/// Runs each preset on the same robot and settings (concurrently) and tabulates the metrics.
pub fn compare_gaits(
    config: &RobotConfig,
    base: &GaitSchedule,
    presets: &[GaitMode],
    n_cycles: usize,
    settings: &SimSettings,
) -> Result<ComparisonReport> {
    if presets.len() < 2 {
        return Err(ConfigError::new("presets", "at least two presets are needed").into());
    }
    let rows = presets
        .par_iter()
        .map(|&mode| {
            let traj = simulate(config, &base.with_mode(mode), n_cycles, settings)?;
            Ok(PresetMetrics {
                preset: mode,
                metrics: displacement_per_cycle(&traj)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let mut ordering: Vec<&PresetMetrics> = rows.iter().collect();
    ordering.sort_by(|a, b| b.metrics.mean.total_cmp(&a.metrics.mean));
    let ordering = ordering.into_iter().map(|r| r.preset).collect();
    let mean = |m: GaitMode| {
        rows.iter()
            .find(|r| r.preset == m)
            .map(|r| r.metrics.mean.abs())
    };
    let ratio = |other: GaitMode| match (mean(GaitMode::ControlledFlexible), mean(other)) {
        (Some(a), Some(b)) => Some(a / b),
        _ => None,
    };
    Ok(ComparisonReport {
        controlled_over_flexible: ratio(GaitMode::FullyFlexible),
        controlled_over_rigid: ratio(GaitMode::FullyRigid),
        rows,
        ordering,
        config: config.clone(),
        gait: *base,
        settings: *settings,
        n_cycles,
    })
}
