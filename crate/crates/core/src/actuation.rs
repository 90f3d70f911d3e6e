//! Motor, threaded shaft and carriage, and the stiffness / rest-angle
//! schedules the cables impose on every joint.
//!
//! Phase convention: `φ = (t / T) mod 1`. The power stroke occupies the first
//! part of the cycle (half, unless the duty is changed); at `φ = 0` the
//! flagella are rigid and straight, at the end of the power stroke they are
//! flexible and bent to `β`.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{ConfigError, Result, SimError};
use crate::kinematics::GeneralizedCoords;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MechanismConfig {
    pub motor_rpm: f64,
    /// Shaft thread pitch in m/rev.
    pub thread_pitch: f64,
    pub shaft_travel: f64,
    /// Time between motor reversals.
    pub half_period: f64,
}

impl Default for MechanismConfig {
    /// 100 RPM gear motor on an M25×2.5 thread, 53 mm of travel, 5 s reversals.
    fn default() -> Self {
        Self {
            motor_rpm: 100.0,
            thread_pitch: 0.0025,
            shaft_travel: 0.053,
            half_period: 5.0,
        }
    }
}

impl MechanismConfig {
    pub fn validate(self) -> Result<Self, ConfigError> {
        for (name, v) in [
            ("mechanism.motor_rpm", self.motor_rpm),
            ("mechanism.thread_pitch", self.thread_pitch),
            ("mechanism.shaft_travel", self.shaft_travel),
            ("mechanism.half_period", self.half_period),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(ConfigError::new(name, "must be > 0"));
            }
        }
        if self.stroke_length() > self.shaft_travel {
            return Err(ConfigError::new(
                "mechanism.half_period",
                format!(
                    "carriage stroke {:.6} m overruns shaft travel {} m",
                    self.stroke_length(),
                    self.shaft_travel
                ),
            ));
        }
        Ok(self)
    }

    /// Carriage speed in m/s.
    pub fn carriage_speed(&self) -> f64 {
        self.motor_rpm / 60.0 * self.thread_pitch
    }

    /// Distance the carriage covers in one half period.
    pub fn stroke_length(&self) -> f64 {
        self.carriage_speed() * self.half_period
    }

    pub fn period(&self) -> f64 {
        2.0 * self.half_period
    }
}

/// Triangular wave: the carriage rises for one half period and returns during the next.
pub fn carriage_position(t: f64, mech: &MechanismConfig) -> f64 {
    let tau = t.rem_euclid(mech.period());
    let speed = mech.carriage_speed();
    if tau < mech.half_period {
        speed * tau
    } else {
        speed * (mech.period() - tau)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GaitMode {
    ControlledFlexible,
    FullyFlexible,
    FullyRigid,
    ReciprocalPrescribed,
}

impl GaitMode {
    pub const ALL: [GaitMode; 4] = [
        GaitMode::ControlledFlexible,
        GaitMode::FullyFlexible,
        GaitMode::FullyRigid,
        GaitMode::ReciprocalPrescribed,
    ];

    pub fn name(self) -> &'static str {
        match self {
            GaitMode::ControlledFlexible => "controlled_flexible",
            GaitMode::FullyFlexible => "fully_flexible",
            GaitMode::FullyRigid => "fully_rigid",
            GaitMode::ReciprocalPrescribed => "reciprocal_prescribed",
        }
    }
}

impl fmt::Display for GaitMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for GaitMode {
    type Err = ConfigError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        GaitMode::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| {
                ConfigError::new(
                    "gait.mode",
                    format!(
                        "unknown gait '{s}' (expected one of: {})",
                        GaitMode::ALL.map(|m| m.name()).join(", ")
                    ),
                )
            })
    }
}

/// Shape of the transition between the rigid and flexible states.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Ramp {
    /// `(1 + cos 2πu) / 2`
    Cosine,
    /// Triangle wave passed through a smoothstep, so the slope vanishes at the extremes.
    LinearSmoothed,
    /// Cosine level, but stiffness interpolated geometrically between k_min and k_max,
    /// so the joints are already soft well before the flexible extreme.
    #[default]
    Geometric,
}

impl Ramp {
    /// Rigidity level in `[0, 1]` at warped phase `u`: 1 at `u = 0`, 0 at `u = 1/2`.
    fn level(self, u: f64) -> f64 {
        match self {
            Ramp::Cosine | Ramp::Geometric => 0.5 * (1.0 + (2.0 * PI * u).cos()),
            Ramp::LinearSmoothed => {
                let tri = (1.0 - 2.0 * u).abs();
                tri * tri * (3.0 - 2.0 * tri)
            }
        }
    }
}

pub const DEFAULT_K_MIN: f64 = 5e-5;
pub const DEFAULT_K_MAX: f64 = 50.0;
pub const DEFAULT_BETA: f64 = 0.7;
pub const MAX_STIFFNESS_RATIO: f64 = 1e6;

/// Periodic per-joint stiffness and rest-angle program.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaitSchedule {
    pub period: f64,
    pub k_min: f64,
    pub k_max: f64,
    pub beta: f64,
    pub ramp: Ramp,
    pub mode: GaitMode,
    /// Fraction of the cycle spent in the power stroke.
    pub duty: f64,
    /// Delay of the stiffness schedule relative to the rest-angle schedule, in cycles.
    pub phase_offset: f64,
}

impl Default for GaitSchedule {
    fn default() -> Self {
        Self::new(GaitMode::ControlledFlexible, &MechanismConfig::default())
    }
}

impl GaitSchedule {
    pub fn new(mode: GaitMode, mech: &MechanismConfig) -> Self {
        Self {
            period: mech.period(),
            k_min: DEFAULT_K_MIN,
            k_max: DEFAULT_K_MAX,
            beta: DEFAULT_BETA,
            ramp: Ramp::default(),
            mode,
            duty: 0.5,
            phase_offset: 0.0,
        }
    }

    pub fn with_mode(self, mode: GaitMode) -> Self {
        Self { mode, ..self }
    }

    pub fn validate(self) -> Result<Self, ConfigError> {
        if !(self.period.is_finite() && self.period > 0.0) {
            return Err(ConfigError::new("gait.period", "must be > 0"));
        }
        if !(self.k_min.is_finite() && self.k_min > 0.0) {
            return Err(ConfigError::new("gait.k_min", "must be > 0"));
        }
        if !(self.k_max.is_finite() && self.k_max >= self.k_min) {
            return Err(ConfigError::new("gait.k_max", "must be >= gait.k_min"));
        }
        if self.k_max / self.k_min > MAX_STIFFNESS_RATIO {
            return Err(ConfigError::new(
                "gait.k_max",
                format!("k_max / k_min must not exceed {MAX_STIFFNESS_RATIO:e}"),
            ));
        }
        if !(self.beta.abs() < PI / 2.0) {
            return Err(ConfigError::new("gait.beta", "must satisfy |beta| < pi/2"));
        }
        if !(self.duty > 0.0 && self.duty < 1.0) {
            return Err(ConfigError::new("gait.duty", "must lie in (0, 1)"));
        }
        if !(self.phase_offset >= 0.0 && self.phase_offset < 1.0) {
            return Err(ConfigError::new("gait.phase_offset", "must lie in [0, 1)"));
        }
        Ok(self)
    }

    /// Phase in `[0, 1)` at time `t`.
    pub fn phase(&self, t: f64) -> f64 {
        let p = (t / self.period).rem_euclid(1.0);
        // rem_euclid can round up to exactly 1.0 for tiny negative inputs
        if p >= 1.0 {
            0.0
        } else {
            p
        }
    }

    /// Piecewise-linear warp sending `[0, duty]` to `[0, 1/2]` and `[duty, 1)` to `[1/2, 1)`.
    /// Both ramps have zero slope where the pieces meet, so the warped schedules stay C¹.
    fn warp(&self, phase: f64) -> f64 {
        if phase < self.duty {
            0.5 * phase / self.duty
        } else {
            0.5 + 0.5 * (phase - self.duty) / (1.0 - self.duty)
        }
    }

    /// Reciprocal joint-angle program used by the prescribed mode: `β sin 2πφ`.
    pub fn prescribed_angle(&self, t: f64) -> f64 {
        self.beta * (2.0 * PI * t / self.period).sin()
    }

    pub fn prescribed_rate(&self, t: f64) -> f64 {
        self.beta * 2.0 * PI / self.period * (2.0 * PI * t / self.period).cos()
    }

    pub fn at_time(&self, t: f64) -> JointActuation {
        self.actuation(self.phase(t))
    }

    fn actuation(&self, phase: f64) -> JointActuation {
        let bend = 1.0 - self.ramp.level(self.warp(phase));
        let rigid = self
            .ramp
            .level(self.warp((phase - self.phase_offset).rem_euclid(1.0)));
        let stiffness = match self.mode {
            GaitMode::ControlledFlexible => match self.ramp {
                Ramp::Geometric => self.k_min * (self.k_max / self.k_min).powf(rigid),
                _ => self.k_min + (self.k_max - self.k_min) * rigid,
            },
            GaitMode::FullyFlexible => self.k_min,
            GaitMode::FullyRigid | GaitMode::ReciprocalPrescribed => self.k_max,
        };
        let rest_angle = match self.mode {
            GaitMode::ReciprocalPrescribed => self.beta * (2.0 * PI * phase).sin(),
            _ => self.beta * bend,
        };
        JointActuation {
            stiffness,
            rest_angle,
        }
    }
}

/// Stiffness and rest angle applied to a joint.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JointActuation {
    /// N·m/rad
    pub stiffness: f64,
    pub rest_angle: f64,
}

/// Actuation shared by every joint at phase `φ ∈ [0, 1)`.
pub fn gait_evaluate(gait: &GaitSchedule, phase: f64) -> Result<JointActuation> {
    if !(0.0..1.0).contains(&phase) {
        return Err(SimError::PhaseOutOfRange(phase));
    }
    Ok(gait.actuation(phase))
}

/// Torsional-spring generalized force `-k_j (θ_j - θ_rest,j)`; zero on the body pose.
pub fn elastic_generalized_force(q: &GeneralizedCoords, actuation: &[JointActuation]) -> Result<Vec<f64>> {
    if actuation.len() != q.joint_angles.len() {
        return Err(SimError::DimensionMismatch {
            expected: q.joint_angles.len(),
            actual: actuation.len(),
        });
    }
    let mut out = vec![0.0; q.dim()];
    for ((slot, theta), a) in out[3..].iter_mut().zip(&q.joint_angles).zip(actuation) {
        *slot = -a.stiffness * (theta - a.rest_angle);
    }
    Ok(out)
}

/// Elastic potential `Σ ½ k (θ - θ_rest)²`.
pub fn elastic_energy(joint_angles: &[f64], actuation: &JointActuation) -> f64 {
    joint_angles
        .iter()
        .map(|th| 0.5 * actuation.stiffness * (th - actuation.rest_angle).powi(2))
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn controlled() -> GaitSchedule {
        GaitSchedule::default()
    }

    #[test]
    fn carriage_follows_triangle_wave() {
        let mech = MechanismConfig::default();
        assert_eq!(carriage_position(0.0, &mech), 0.0);
        let top = carriage_position(5.0, &mech);
        assert!((top - 0.020_833_333_333).abs() < 1e-12);
        assert!(top <= mech.shaft_travel);
        assert!(carriage_position(10.0, &mech).abs() < 1e-15);
        assert!((carriage_position(2.5, &mech) - top / 2.0).abs() < 1e-15);
        assert!((carriage_position(7.5, &mech) - top / 2.0).abs() < 1e-15);
        assert!((carriage_position(12.5, &mech) - top / 2.0).abs() < 1e-15);
    }

    #[test]
    fn mechanism_validation() {
        assert!(MechanismConfig::default().validate().is_ok());
        let overrun = MechanismConfig {
            half_period: 20.0,
            ..MechanismConfig::default()
        };
        assert!(overrun.validate().is_err());
        let bad = MechanismConfig {
            motor_rpm: 0.0,
            ..MechanismConfig::default()
        };
        assert_eq!(bad.validate().unwrap_err().path, "mechanism.motor_rpm");
    }

    #[test]
    fn controlled_schedule_landmarks() {
        let g = controlled();
        let a = gait_evaluate(&g, 0.0).unwrap();
        assert_eq!((a.stiffness, a.rest_angle), (g.k_max, 0.0));
        let a = gait_evaluate(&g, 0.5).unwrap();
        assert!((a.stiffness - g.k_min).abs() < 1e-15);
        assert!((a.rest_angle - g.beta).abs() < 1e-15);
        let a = gait_evaluate(&g, 0.25).unwrap();
        assert!((a.stiffness - (g.k_max * g.k_min).sqrt()).abs() < 1e-12);
        assert!((a.rest_angle - g.beta / 2.0).abs() < 1e-12);

        let cos = GaitSchedule {
            ramp: Ramp::Cosine,
            ..g
        };
        let a = gait_evaluate(&cos, 0.0).unwrap();
        assert_eq!((a.stiffness, a.rest_angle), (cos.k_max, 0.0));
        let a = gait_evaluate(&cos, 0.5).unwrap();
        assert!((a.stiffness - cos.k_min).abs() < 1e-15);
        let a = gait_evaluate(&cos, 0.25).unwrap();
        assert!((a.stiffness - (cos.k_max + cos.k_min) / 2.0).abs() < 1e-12);
        assert!((a.rest_angle - cos.beta / 2.0).abs() < 1e-12);
    }

    #[test]
    fn constant_stiffness_modes() {
        for phase in [0.0, 0.13, 0.5, 0.77, 0.999] {
            let a = gait_evaluate(&controlled().with_mode(GaitMode::FullyFlexible), phase).unwrap();
            assert_eq!(a.stiffness, DEFAULT_K_MIN);
            let b = gait_evaluate(&controlled().with_mode(GaitMode::FullyRigid), phase).unwrap();
            assert_eq!(b.stiffness, DEFAULT_K_MAX);
            assert_eq!(a.rest_angle, b.rest_angle);
        }
    }

    #[test]
    fn phase_out_of_range() {
        assert!(gait_evaluate(&controlled(), 1.0).is_err());
        assert!(gait_evaluate(&controlled(), -0.1).is_err());
    }

    #[test]
    fn schedules_are_c1_across_the_cycle_boundary() {
        for ramp in [Ramp::Cosine, Ramp::LinearSmoothed, Ramp::Geometric] {
            for duty in [0.5, 0.3, 0.8] {
                let g = GaitSchedule {
                    ramp,
                    duty,
                    phase_offset: 0.2,
                    ..controlled()
                };
                let h = 1e-6;
                for t0 in [0.0, g.duty * g.period, 0.2 * g.period, 0.5 * g.period] {
                    let f = |t: f64| {
                        let a = g.at_time(t);
                        (a.stiffness, a.rest_angle)
                    };
                    let (k0, r0) = f(t0);
                    let (km, rm) = f(t0 - h);
                    let (kp, rp) = f(t0 + h);
                    // continuity
                    let tol = 1e-5 * g.k_max;
                    assert!((kp - k0).abs() < tol && (k0 - km).abs() < tol);
                    assert!((rp - r0).abs() < 1e-5 && (r0 - rm).abs() < 1e-5);
                    // one-sided slopes agree
                    let (dk_l, dk_r) = ((k0 - km) / h, (kp - k0) / h);
                    let (dr_l, dr_r) = ((r0 - rm) / h, (rp - r0) / h);
                    assert!((dk_l - dk_r).abs() < 1e-4 * g.k_max, "{ramp:?} {duty} {t0}: {dk_l} {dk_r}");
                    assert!((dr_l - dr_r).abs() < 1e-4, "{ramp:?} {duty} {t0}: {dr_l} {dr_r}");
                }
                let a = g.at_time(3.3);
                let b = g.at_time(3.3 + 4.0 * g.period);
                assert!((a.stiffness - b.stiffness).abs() < 1e-12 * g.k_max);
                assert!((a.rest_angle - b.rest_angle).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn duty_moves_the_flexible_extreme() {
        let g = GaitSchedule {
            duty: 0.3,
            ..controlled()
        };
        let a = gait_evaluate(&g, 0.3).unwrap();
        assert!((a.stiffness - g.k_min).abs() < 1e-15);
        assert!((a.rest_angle - g.beta).abs() < 1e-15);
    }

    #[test]
    fn elastic_force_is_hookean_and_internal() {
        let q = GeneralizedCoords {
            x: 1.0,
            y: -2.0,
            phi_body: 0.3,
            joint_angles: vec![0.1],
        };
        let act = [JointActuation {
            stiffness: 1.0,
            rest_angle: 0.0,
        }];
        let f = elastic_generalized_force(&q, &act).unwrap();
        assert_eq!(f, vec![0.0, 0.0, 0.0, -0.1]);
        let act = [JointActuation {
            stiffness: 3.0,
            rest_angle: 0.1,
        }];
        assert!(elastic_generalized_force(&q, &act).unwrap().iter().all(|v| *v == 0.0));
        assert!(elastic_generalized_force(&q, &[]).is_err());
    }

    #[test]
    fn validation_bounds() {
        let g = GaitSchedule {
            k_min: -1.0,
            ..controlled()
        };
        assert_eq!(g.validate().unwrap_err().path, "gait.k_min");
        let g = GaitSchedule {
            k_max: 1e3,
            ..controlled()
        };
        assert_eq!(g.validate().unwrap_err().path, "gait.k_max");
        let g = GaitSchedule {
            beta: 1.6,
            ..controlled()
        };
        assert_eq!(g.validate().unwrap_err().path, "gait.beta");
        assert!(controlled().validate().is_ok());
        assert_eq!("fully_rigid".parse::<GaitMode>().unwrap(), GaitMode::FullyRigid);
        assert!("rigid".parse::<GaitMode>().is_err());
    }
}
