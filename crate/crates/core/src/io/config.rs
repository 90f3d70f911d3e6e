//! Versioned JSON run document with a strict schema.
//!
//! ```json
//! {
//!   "version": 1,
//!   "fluid": {"viscosity": 1.49, "density": 1000, "drag_ratio": 2},
//!   "body": {"length": 0.126, "radius": 0.02},
//!   "flagella": [{"n_segments": 6, "segment_length": 0.015, "segment_radius": 0.002,
//!                 "attachment_offset": -0.063, "attachment_angle": 2.5, "mirror": false}],
//!   "mechanism": {"motor_rpm": 100, "thread_pitch": 0.0025, "shaft_travel": 0.053, "half_period": 5},
//!   "gait": {"mode": "controlled_flexible", "ramp": "geometric", "k_min": 5e-5, "k_max": 50,
//!            "beta": 0.7, "duty": 0.5, "phase_offset": 0},
//!   "sim": {"dt": 0.005, "scheme": "implicit_midpoint", "n_cycles": 10}
//! }
//! ```
//!
//! Every key except `version` is optional. Unknown keys are rejected.

use serde_json::{json, Map, Value};
use thiserror::Error;

use crate::actuation::{GaitMode, GaitSchedule, MechanismConfig, Ramp};
use crate::dynamics::{Scheme, SimSettings};
use crate::error::ConfigError;
use crate::kinematics::{validate_config, BodyConfig, FlagellumConfig, FluidModel, RobotConfig};

pub const CONFIG_VERSION: u64 = 1;
pub const DEFAULT_CYCLES: usize = 10;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DocumentError {
    #[error("syntax error at line {line}, column {column}: {message}")]
    Syntax {
        line: usize,
        column: usize,
        message: String,
    },
    #[error(transparent)]
    Invalid(#[from] ConfigError),
}

/// Everything needed for a run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub robot: RobotConfig,
    pub mechanism: MechanismConfig,
    pub gait: GaitSchedule,
    pub settings: SimSettings,
    pub n_cycles: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        let mechanism = MechanismConfig::default();
        let gait = GaitSchedule::new(GaitMode::ControlledFlexible, &mechanism);
        Self {
            robot: RobotConfig::default(),
            mechanism,
            gait,
            settings: SimSettings::for_period(gait.period),
            n_cycles: DEFAULT_CYCLES,
        }
    }
}

impl RunConfig {
    /// Full document with every key written out.
    pub fn to_value(&self) -> Value {
        let r = &self.robot;
        let flagella: Vec<Value> = r
            .flagella
            .iter()
            .map(|f| {
                json!({
                    "n_segments": f.n_segments,
                    "segment_length": f.segment_length,
                    "segment_radius": f.segment_radius,
                    "attachment_offset": f.attachment_offset,
                    "attachment_angle": f.attachment_angle,
                    "mirror": f.mirror,
                })
            })
            .collect();
        let (m, g, s) = (&self.mechanism, &self.gait, &self.settings);
        json!({
            "version": CONFIG_VERSION,
            "fluid": {
                "viscosity": r.fluid.viscosity,
                "density": r.fluid.density,
                "drag_ratio": r.drag_ratio,
            },
            "body": {"length": r.body.length, "radius": r.body.radius},
            "flagella": flagella,
            "mechanism": {
                "motor_rpm": m.motor_rpm,
                "thread_pitch": m.thread_pitch,
                "shaft_travel": m.shaft_travel,
                "half_period": m.half_period,
            },
            "gait": {
                "mode": g.mode.name(),
                "ramp": ramp_name(g.ramp),
                "k_min": g.k_min,
                "k_max": g.k_max,
                "beta": g.beta,
                "duty": g.duty,
                "phase_offset": g.phase_offset,
            },
            "sim": {
                "dt": s.dt,
                "scheme": s.scheme.name(),
                "n_cycles": self.n_cycles,
                "newton_tol": s.newton_tol,
                "newton_max_iter": s.newton_max_iter,
                "condition_limit": s.condition_limit,
            },
        })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_value()).expect("document serializes")
    }
}

const RAMPS: [(Ramp, &str); 3] = [
    (Ramp::Cosine, "cosine"),
    (Ramp::LinearSmoothed, "linear_smoothed"),
    (Ramp::Geometric, "geometric"),
];
const SCHEMES: [Scheme; 2] = [Scheme::ImplicitMidpoint, Scheme::BackwardEuler];

fn ramp_name(ramp: Ramp) -> &'static str {
    RAMPS.iter().find(|(r, _)| *r == ramp).map(|(_, n)| *n).unwrap()
}

/// A JSON object being read, with its path for messages.
struct Section<'a> {
    map: Option<&'a Map<String, Value>>,
    path: String,
}

impl<'a> Section<'a> {
    fn new(value: Option<&'a Value>, path: &str, allowed: &[&str]) -> Result<Self, ConfigError> {
        let map = match value {
            None => None,
            Some(Value::Object(m)) => Some(m),
            Some(_) => return Err(ConfigError::new(path, "must be an object")),
        };
        let section = Self {
            map,
            path: path.to_string(),
        };
        section.check_keys(allowed)?;
        Ok(section)
    }

    fn key_path(&self, key: &str) -> String {
        if self.path.is_empty() {
            key.to_string()
        } else {
            format!("{}.{key}", self.path)
        }
    }

    fn check_keys(&self, allowed: &[&str]) -> Result<(), ConfigError> {
        let Some(map) = self.map else { return Ok(()) };
        for key in map.keys() {
            if allowed.contains(&key.as_str()) {
                continue;
            }
            let nearest = allowed
                .iter()
                .map(|a| (strsim::jaro_winkler(key, a), *a))
                .max_by(|a, b| a.0.total_cmp(&b.0));
            let hint = match nearest {
                Some((score, name)) if score > 0.7 => format!("; did you mean '{name}'?"),
                _ => format!("; valid keys: {}", allowed.join(", ")),
            };
            return Err(ConfigError::new(self.key_path(key), format!("is not a known key{hint}")));
        }
        Ok(())
    }

    fn get(&self, key: &str) -> Option<&'a Value> {
        self.map.and_then(|m| m.get(key))
    }

    fn f64(&self, key: &str, default: f64) -> Result<f64, ConfigError> {
        match self.get(key) {
            None => Ok(default),
            Some(v) => v
                .as_f64()
                .ok_or_else(|| ConfigError::new(self.key_path(key), "must be a number")),
        }
    }

    fn usize(&self, key: &str, default: usize) -> Result<usize, ConfigError> {
        match self.get(key) {
            None => Ok(default),
            Some(v) => v
                .as_u64()
                .map(|n| n as usize)
                .ok_or_else(|| ConfigError::new(self.key_path(key), "must be a non-negative integer")),
        }
    }

    fn bool(&self, key: &str, default: bool) -> Result<bool, ConfigError> {
        match self.get(key) {
            None => Ok(default),
            Some(v) => v
                .as_bool()
                .ok_or_else(|| ConfigError::new(self.key_path(key), "must be true or false")),
        }
    }

    fn choice<T: Copy>(&self, key: &str, default: T, options: &[(T, &str)]) -> Result<T, ConfigError> {
        let Some(v) = self.get(key) else { return Ok(default) };
        let names: Vec<&str> = options.iter().map(|(_, n)| *n).collect();
        let bad = || ConfigError::new(self.key_path(key), format!("must be one of: {}", names.join(", ")));
        let s = v.as_str().ok_or_else(bad)?;
        options.iter().find(|(_, n)| *n == s).map(|(t, _)| *t).ok_or_else(bad)
    }
}

fn syntax_error(e: &serde_json::Error) -> DocumentError {
    let full = e.to_string();
    let message = full
        .rsplit_once(" at line ")
        .map(|(m, _)| m.to_string())
        .unwrap_or(full);
    DocumentError::Syntax {
        line: e.line(),
        column: e.column(),
        message,
    }
}

/// Parses and validates a run document. Missing keys take their defaults.
pub fn parse_config(text: &str) -> Result<RunConfig, DocumentError> {
    let doc: Value = serde_json::from_str(text).map_err(|e| syntax_error(&e))?;
    if !doc.is_object() {
        return Err(ConfigError::new("", "the document must be a JSON object").into());
    }
    let root = Section::new(
        Some(&doc),
        "",
        &["version", "fluid", "body", "flagella", "mechanism", "gait", "sim"],
    )?;
    match root.get("version") {
        None => return Err(ConfigError::new("version", "is required").into()),
        Some(v) if v.as_u64() == Some(CONFIG_VERSION) => {}
        Some(v) => {
            return Err(ConfigError::new(
                "version",
                format!("unsupported version {v} (expected {CONFIG_VERSION})"),
            )
            .into())
        }
    }
    let defaults = RunConfig::default();

    let fluid = Section::new(root.get("fluid"), "fluid", &["viscosity", "density", "drag_ratio"])?;
    let fd = defaults.robot.fluid;
    let fluid_model = FluidModel {
        viscosity: fluid.f64("viscosity", fd.viscosity)?,
        density: fluid.f64("density", fd.density)?,
    };
    let drag_ratio = fluid.f64("drag_ratio", defaults.robot.drag_ratio)?;

    let body = Section::new(root.get("body"), "body", &["length", "radius"])?;
    let bd = defaults.robot.body;
    let body = BodyConfig {
        length: body.f64("length", bd.length)?,
        radius: body.f64("radius", bd.radius)?,
    };

    let flagella = match root.get("flagella") {
        None => defaults.robot.flagella.clone(),
        Some(Value::Array(items)) => items
            .iter()
            .enumerate()
            .map(|(i, item)| parse_flagellum(item, i))
            .collect::<Result<_, _>>()?,
        Some(_) => return Err(ConfigError::new("flagella", "must be an array").into()),
    };
    let robot = validate_config(RobotConfig {
        body,
        flagella,
        fluid: fluid_model,
        drag_ratio,
    })?;

    let mech = Section::new(
        root.get("mechanism"),
        "mechanism",
        &["motor_rpm", "thread_pitch", "shaft_travel", "half_period"],
    )?;
    let md = defaults.mechanism;
    let mechanism = MechanismConfig {
        motor_rpm: mech.f64("motor_rpm", md.motor_rpm)?,
        thread_pitch: mech.f64("thread_pitch", md.thread_pitch)?,
        shaft_travel: mech.f64("shaft_travel", md.shaft_travel)?,
        half_period: mech.f64("half_period", md.half_period)?,
    }
    .validate()?;

    let gait = Section::new(
        root.get("gait"),
        "gait",
        &["mode", "ramp", "k_min", "k_max", "beta", "duty", "phase_offset"],
    )?;
    let gd = GaitSchedule::new(GaitMode::ControlledFlexible, &mechanism);
    let modes: Vec<(GaitMode, &str)> = GaitMode::ALL.iter().map(|m| (*m, m.name())).collect();
    let gait = GaitSchedule {
        mode: gait.choice("mode", gd.mode, &modes)?,
        ramp: gait.choice("ramp", gd.ramp, &RAMPS)?,
        k_min: gait.f64("k_min", gd.k_min)?,
        k_max: gait.f64("k_max", gd.k_max)?,
        beta: gait.f64("beta", gd.beta)?,
        duty: gait.f64("duty", gd.duty)?,
        phase_offset: gait.f64("phase_offset", gd.phase_offset)?,
        ..gd
    }
    .validate()?;

    let sim = Section::new(
        root.get("sim"),
        "sim",
        &["dt", "scheme", "n_cycles", "newton_tol", "newton_max_iter", "condition_limit"],
    )?;
    let sd = SimSettings::for_period(gait.period);
    let schemes: Vec<(Scheme, &str)> = SCHEMES.iter().map(|s| (*s, s.name())).collect();
    let settings = SimSettings {
        dt: sim.f64("dt", sd.dt)?,
        scheme: sim.choice("scheme", sd.scheme, &schemes)?,
        newton_tol: sim.f64("newton_tol", sd.newton_tol)?,
        newton_max_iter: sim.usize("newton_max_iter", sd.newton_max_iter)?,
        condition_limit: sim.f64("condition_limit", sd.condition_limit)?,
    }
    .validate()?;
    let steps = gait.period / settings.dt;
    if (steps - steps.round()).abs() > 1e-6 * steps {
        return Err(ConfigError::new(
            "sim.dt",
            format!("must divide the period {} s into a whole number of steps", gait.period),
        )
        .into());
    }
    let n_cycles = sim.usize("n_cycles", DEFAULT_CYCLES)?;
    if n_cycles == 0 {
        return Err(ConfigError::new("sim.n_cycles", "must be >= 1").into());
    }
    Ok(RunConfig {
        robot,
        mechanism,
        gait,
        settings,
        n_cycles,
    })
}

fn parse_flagellum(item: &Value, i: usize) -> Result<FlagellumConfig, ConfigError> {
    let path = format!("flagella[{i}]");
    let f = Section::new(
        Some(item),
        &path,
        &[
            "n_segments",
            "segment_length",
            "segment_radius",
            "attachment_offset",
            "attachment_angle",
            "mirror",
        ],
    )?;
    let d = FlagellumConfig::default();
    Ok(FlagellumConfig {
        n_segments: f.usize("n_segments", d.n_segments)?,
        segment_length: f.f64("segment_length", d.segment_length)?,
        segment_radius: f.f64("segment_radius", d.segment_radius)?,
        attachment_offset: f.f64("attachment_offset", d.attachment_offset)?,
        attachment_angle: f.f64("attachment_angle", d.attachment_angle)?,
        mirror: f.bool("mirror", d.mirror)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn version_only_gives_defaults() {
        let run = parse_config(r#"{"version":1}"#).unwrap();
        assert_eq!(run, RunConfig::default());
        assert_eq!(run.robot.fluid.viscosity, 1.49);
        assert_eq!(run.robot.body.length, 0.126);
        assert!(run.robot.flagella.iter().all(|f| f.n_segments == 6));
        assert_eq!(run.gait.period, 10.0);
    }

    #[test]
    fn version_is_required() {
        let e = parse_config("{}").unwrap_err();
        assert!(matches!(e, DocumentError::Invalid(ref c) if c.path == "version"), "{e}");
        assert!(parse_config(r#"{"version":2}"#).is_err());
    }

    #[test]
    fn invariant_violations_name_the_field() {
        let e = parse_config(r#"{"version":1,"gait":{"k_min":-1}}"#).unwrap_err();
        assert!(e.to_string().starts_with("gait.k_min"), "{e}");
        let e = parse_config(r#"{"version":1,"flagella":[{}, {"segment_length":0}]}"#).unwrap_err();
        assert!(e.to_string().starts_with("flagella[1].segment_length"), "{e}");
        let e = parse_config(r#"{"version":1,"sim":{"dt":0.3}}"#).unwrap_err();
        assert!(e.to_string().starts_with("sim.dt"), "{e}");
        let e = parse_config(r#"{"version":1,"gait":{"mode":"wobbly"}}"#).unwrap_err();
        assert!(e.to_string().contains("fully_flexible"), "{e}");
    }

    #[test]
    fn unknown_keys_suggest_the_nearest() {
        let e = parse_config(r#"{"version":1,"flagela":[]}"#).unwrap_err();
        let msg = e.to_string();
        assert!(msg.starts_with("flagela"), "{msg}");
        assert!(msg.contains("did you mean 'flagella'"), "{msg}");
        let e = parse_config(r#"{"version":1,"gait":{"kmax":3}}"#).unwrap_err();
        assert!(e.to_string().contains("'k_max'"), "{e}");
    }

    #[test]
    fn syntax_errors_carry_position() {
        let e = parse_config("{\n  \"version\": 1,\n  \"gait\": {,}\n}").unwrap_err();
        match e {
            DocumentError::Syntax { line, column, .. } => {
                assert_eq!(line, 3);
                assert!(column > 0);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn round_trip_is_stable() {
        let text = r#"{"version":1,"gait":{"beta":-0.4,"ramp":"cosine","duty":0.35},
            "flagella":[{"attachment_angle":3.0}],"sim":{"scheme":"backward_euler","n_cycles":3}}"#;
        let a = parse_config(text).unwrap();
        let b = parse_config(&a.to_json()).unwrap();
        assert_eq!(a, b);
        assert_eq!(b.robot.flagella.len(), 1);
        assert_eq!(b.settings.scheme, Scheme::BackwardEuler);
        assert_eq!(b.n_cycles, 3);
    }
}
