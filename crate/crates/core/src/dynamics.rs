//! Overdamped dynamics: `R(q) q̇ = Q_elastic(q, t)`.
//!
//! Inertia is absent, so the state is the configuration alone. Two modes:
//! the elastic mode integrates every coordinate under the joint springs, the
//! prescribed mode imposes joint angles and integrates only the body pose
//! from the 3×3 force/torque balance.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn, Matrix3, Vector2, Vector3};
use serde::{Deserialize, Serialize};

use crate::actuation::{GaitMode, GaitSchedule, JointActuation};
use crate::error::{Result, SimError};
use crate::hydrodynamics::DragModel;
use crate::kinematics::{check_dim, validate_config, GeneralizedCoords, RobotConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    #[default]
    ImplicitMidpoint,
    BackwardEuler,
}

impl Scheme {
    pub fn name(self) -> &'static str {
        match self {
            Scheme::ImplicitMidpoint => "implicit_midpoint",
            Scheme::BackwardEuler => "backward_euler",
        }
    }

    /// Fraction of the step at which forces are evaluated.
    fn theta(self) -> f64 {
        match self {
            Scheme::ImplicitMidpoint => 0.5,
            Scheme::BackwardEuler => 1.0,
        }
    }
}

/// Steps per cycle used when no step is given.
pub const DEFAULT_STEPS_PER_CYCLE: usize = 2000;
pub const MAX_STEP_HALVINGS: u32 = 10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimSettings {
    pub dt: f64,
    pub scheme: Scheme,
    pub newton_tol: f64,
    pub newton_max_iter: usize,
    pub condition_limit: f64,
}

impl SimSettings {
    /// Defaults with `dt = period / 2000`.
    pub fn for_period(period: f64) -> Self {
        Self {
            dt: period / DEFAULT_STEPS_PER_CYCLE as f64,
            scheme: Scheme::ImplicitMidpoint,
            newton_tol: 1e-10,
            newton_max_iter: 50,
            condition_limit: 1e12,
        }
    }

    pub fn with_dt(self, dt: f64) -> Self {
        Self { dt, ..self }
    }

    pub fn validate(self) -> Result<Self, crate::error::ConfigError> {
        use crate::error::ConfigError;
        if !(self.dt.is_finite() && self.dt > 0.0) {
            return Err(ConfigError::new("sim.dt", "must be > 0"));
        }
        if !(self.newton_tol > 0.0) {
            return Err(ConfigError::new("sim.newton_tol", "must be > 0"));
        }
        if self.newton_max_iter == 0 {
            return Err(ConfigError::new("sim.newton_max_iter", "must be >= 1"));
        }
        if !(self.condition_limit > 1.0) {
            return Err(ConfigError::new("sim.condition_limit", "must be > 1"));
        }
        Ok(self)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub t: f64,
    pub q: GeneralizedCoords,
    pub phase: f64,
    /// Joint stiffness in effect (N·m/rad); zero in prescribed mode.
    pub k: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub samples: Vec<Sample>,
    pub dt: f64,
    pub period: f64,
    pub config: RobotConfig,
    pub gait: Option<GaitSchedule>,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn duration(&self) -> f64 {
        match (self.samples.first(), self.samples.last()) {
            (Some(a), Some(b)) => b.t - a.t,
            _ => 0.0,
        }
    }

    /// Number of complete cycles covered.
    pub fn full_cycles(&self) -> usize {
        ((self.duration() / self.period) + 1e-9).floor() as usize
    }

    /// Index of the sample at the end of cycle `c` (0 = start).
    pub fn cycle_boundary(&self, c: usize) -> usize {
        let steps = (self.period / self.dt).round() as usize;
        (c * steps).min(self.samples.len() - 1)
    }

    pub fn initial(&self) -> &GeneralizedCoords {
        &self.samples[0].q
    }

    pub fn last(&self) -> &GeneralizedCoords {
        &self.samples[self.samples.len() - 1].q
    }
}

/// Reusable buffers for repeated solves against one robot.
pub(crate) struct System<'a> {
    pub config: &'a RobotConfig,
    drag: DragModel,
    r: DMatrix<f64>,
    hinges: Vec<Vector2<f64>>,
    condition_limit: f64,
}

impl<'a> System<'a> {
    pub fn new(config: &'a RobotConfig, condition_limit: f64) -> Result<Self> {
        let n = config.dof();
        Ok(Self {
            config,
            drag: DragModel::new(config)?,
            r: DMatrix::zeros(n, n),
            hinges: Vec::new(),
            condition_limit,
        })
    }

    pub fn dof(&self) -> usize {
        self.r.nrows()
    }

    pub fn assemble(&mut self, q: &[f64]) -> &DMatrix<f64> {
        self.drag
            .assemble_into(self.config, q, &mut self.r, &mut self.hinges);
        &self.r
    }

    /// Cholesky factor of the current `R` with a condition guard. The
    /// condition number is estimated from the factor's diagonal, which gives
    /// a lower bound on the true 2-norm condition number.
    fn factor_current(&self) -> Result<Cholesky<f64, Dyn>> {
        let chol = Cholesky::new(self.r.clone()).ok_or(SimError::SingularConfiguration {
            condition: f64::INFINITY,
            limit: self.condition_limit,
        })?;
        let diag = chol.l_dirty().diagonal();
        let (lo, hi) = diag
            .iter()
            .fold((f64::INFINITY, 0.0_f64), |(lo, hi), &d| (lo.min(d), hi.max(d)));
        let condition = (hi / lo).powi(2);
        if !(condition <= self.condition_limit) {
            return Err(SimError::SingularConfiguration {
                condition,
                limit: self.condition_limit,
            });
        }
        Ok(chol)
    }

    /// `q̇ = R(q)⁻¹ Q_elastic`, with all joints sharing `act`.
    pub fn velocity(&mut self, q: &[f64], act: JointActuation) -> Result<DVector<f64>> {
        self.assemble(q);
        let chol = self.factor_current()?;
        Ok(chol.solve(&elastic_force(q, act)))
    }

    /// Body pose rate for prescribed joint rates: `ġ = -R_bb⁻¹ R_bs θ̇`.
    pub fn pose_rate(&mut self, q: &[f64], joint_rates: &[f64]) -> Result<Vector3<f64>> {
        self.assemble(q);
        let r = &self.r;
        let rbb = Matrix3::from_fn(|i, j| r[(i, j)]);
        let mut rhs = Vector3::zeros();
        for (j, rate) in joint_rates.iter().enumerate() {
            for i in 0..3 {
                rhs[i] -= r[(i, 3 + j)] * rate;
            }
        }
        let chol = rbb.cholesky().ok_or(SimError::SingularConfiguration {
            condition: f64::INFINITY,
            limit: self.condition_limit,
        })?;
        Ok(chol.solve(&rhs))
    }
}

fn elastic_force(q: &[f64], act: JointActuation) -> DVector<f64> {
    let mut f = DVector::zeros(q.len());
    for (slot, theta) in f.as_mut_slice()[3..].iter_mut().zip(&q[3..]) {
        *slot = -act.stiffness * (theta - act.rest_angle);
    }
    f
}

/// Quasi-static velocity at configuration `q` and time `t`.
pub fn solve_velocity(
    q: &GeneralizedCoords,
    t: f64,
    config: &RobotConfig,
    gait: &GaitSchedule,
) -> Result<DVector<f64>> {
    check_dim(config, q.dim())?;
    let mut sys = System::new(config, SimSettings::for_period(gait.period).condition_limit)?;
    sys.velocity(q.to_vector().as_slice(), gait.at_time(t))
}

enum StepFailure {
    Diverged(f64),
    Fatal(SimError),
}

impl From<SimError> for StepFailure {
    fn from(e: SimError) -> Self {
        StepFailure::Fatal(e)
    }
}

/// One implicit step of the elastic mode with a simplified Newton iteration:
/// the iteration matrix `R + θ dt K` keeps the stiff spring term exact and
/// drops the slowly varying `∂R/∂q` contribution.
fn elastic_step_once(
    sys: &mut System<'_>,
    q0: &DVector<f64>,
    t: f64,
    dt: f64,
    settings: &SimSettings,
    gait: &GaitSchedule,
) -> std::result::Result<DVector<f64>, StepFailure> {
    let theta = settings.scheme.theta();
    let act = gait.at_time(t + theta * dt);
    let mut q1 = q0.clone();
    let mut qe = q0.clone();
    let mut residual = f64::INFINITY;
    for _ in 0..settings.newton_max_iter {
        qe.copy_from(q0);
        qe.axpy(theta, &q1, 1.0 - theta);
        let v = sys.velocity(qe.as_slice(), act)?;
        let r = &q1 - q0 - &v * dt;
        residual = r.norm();
        if !residual.is_finite() {
            return Err(StepFailure::Diverged(residual));
        }
        if residual <= settings.newton_tol {
            return Ok(q1);
        }
        let rr = &sys.r * &r;
        let mut m = sys.r.clone();
        for j in 3..m.nrows() {
            m[(j, j)] += theta * dt * act.stiffness;
        }
        let Some(chol) = Cholesky::new(m) else {
            return Err(StepFailure::Diverged(residual));
        };
        let delta = chol.solve(&rr);
        q1 -= &delta;
        // The raw residual carries round-off of order eps·k/c from the stiff
        // joints, so a converged correction also ends the iteration.
        if delta.norm() <= settings.newton_tol {
            return Ok(q1);
        }
    }
    Err(StepFailure::Diverged(residual))
}

fn advance<F>(
    q0: &DVector<f64>,
    t: f64,
    dt: f64,
    depth: u32,
    step_once: &mut F,
) -> Result<DVector<f64>>
where
    F: FnMut(&DVector<f64>, f64, f64) -> std::result::Result<DVector<f64>, StepFailure>,
{
    match step_once(q0, t, dt) {
        Ok(q1) => Ok(q1),
        Err(StepFailure::Fatal(e)) => Err(e),
        Err(StepFailure::Diverged(residual)) => {
            if depth >= MAX_STEP_HALVINGS {
                return Err(SimError::NewtonDiverged {
                    t,
                    retries: depth,
                    residual,
                });
            }
            let mid = advance(q0, t, dt / 2.0, depth + 1, step_once)?;
            advance(&mid, t + dt / 2.0, dt / 2.0, depth + 1, step_once)
        }
    }
}

/// Advances the elastic mode from `t` to `t + dt`, halving the step internally
/// up to ten times when the Newton iteration fails.
pub fn step(
    state: &GeneralizedCoords,
    t: f64,
    settings: &SimSettings,
    config: &RobotConfig,
    gait: &GaitSchedule,
) -> Result<GeneralizedCoords> {
    check_dim(config, state.dim())?;
    let mut sys = System::new(config, settings.condition_limit)?;
    let q0 = state.to_vector();
    let q1 = advance(&q0, t, settings.dt, 0, &mut |q, t, dt| {
        elastic_step_once(&mut sys, q, t, dt, settings, gait)
    })?;
    Ok(GeneralizedCoords::from_slice(q1.as_slice()))
}

/// Straight flagella at the schedule's initial rest angle, body at the origin along +x.
pub fn initial_state(config: &RobotConfig, gait: &GaitSchedule) -> GeneralizedCoords {
    GeneralizedCoords::uniform(config, gait.at_time(0.0).rest_angle)
}

fn step_count(n_cycles: usize, period: f64, dt: f64) -> Result<usize> {
    if n_cycles < 1 {
        return Err(SimError::TrajectoryTooShort("n_cycles must be >= 1".into()));
    }
    let per_cycle = period / dt;
    let rounded = per_cycle.round();
    if rounded < 1.0 || (per_cycle - rounded).abs() > 1e-6 * per_cycle {
        return Err(crate::error::ConfigError::new(
            "sim.dt",
            format!("must divide the period {period} s into a whole number of steps"),
        )
        .into());
    }
    Ok(n_cycles * rounded as usize)
}

/// Runs the gait for `n_cycles` from the straight initial state.
pub fn simulate(
    config: &RobotConfig,
    gait: &GaitSchedule,
    n_cycles: usize,
    settings: &SimSettings,
) -> Result<Trajectory> {
    simulate_from(config, gait, &initial_state(config, gait), n_cycles, settings)
}

/// As [`simulate`] from an arbitrary initial configuration. The
/// reciprocal-prescribed gait is routed to the prescribed mode.
pub fn simulate_from(
    config: &RobotConfig,
    gait: &GaitSchedule,
    initial: &GeneralizedCoords,
    n_cycles: usize,
    settings: &SimSettings,
) -> Result<Trajectory> {
    let config = validate_config(config.clone())?;
    let gait = gait.validate()?;
    let settings = settings.validate()?;
    check_dim(&config, initial.dim())?;
    if gait.mode == GaitMode::ReciprocalPrescribed {
        let shape = SinusoidShape {
            amplitude: gait.beta,
            period: gait.period,
            n_joints: config.joint_count(),
        };
        let mut traj = simulate_prescribed_from(&config, &shape, initial, n_cycles, &settings)?;
        traj.gait = Some(gait);
        return Ok(traj);
    }
    let steps = step_count(n_cycles, gait.period, settings.dt)?;
    let dt = settings.dt;
    let mut sys = System::new(&config, settings.condition_limit)?;
    let mut q = initial.to_vector();
    let mut samples = Vec::with_capacity(steps + 1);
    let record = |q: &DVector<f64>, t: f64, samples: &mut Vec<Sample>| {
        samples.push(Sample {
            t,
            q: GeneralizedCoords::from_slice(q.as_slice()),
            phase: gait.phase(t),
            k: gait.at_time(t).stiffness,
        });
    };
    record(&q, 0.0, &mut samples);
    for i in 0..steps {
        let t = i as f64 * dt;
        q = advance(&q, t, dt, 0, &mut |q, t, dt| {
            elastic_step_once(&mut sys, q, t, dt, &settings, &gait)
        })?;
        let t1 = (i + 1) as f64 * dt;
        if !q.iter().all(|v| v.is_finite()) {
            return Err(SimError::NonFinite(t1));
        }
        record(&q, t1, &mut samples);
    }
    Ok(Trajectory {
        samples,
        dt,
        period: gait.period,
        config,
        gait: Some(gait),
    })
}

/// Time-periodic joint-angle program for the prescribed mode.
pub trait ShapeProgram {
    fn period(&self) -> f64;
    fn n_joints(&self) -> usize;
    fn angles(&self, t: f64, out: &mut [f64]);
    fn rates(&self, t: f64, out: &mut [f64]);
}

/// Every joint at `A sin(2πt/T)`: reciprocal and time-symmetric.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SinusoidShape {
    pub amplitude: f64,
    pub period: f64,
    pub n_joints: usize,
}

impl ShapeProgram for SinusoidShape {
    fn period(&self) -> f64 {
        self.period
    }

    fn n_joints(&self) -> usize {
        self.n_joints
    }

    fn angles(&self, t: f64, out: &mut [f64]) {
        out.fill(self.amplitude * (2.0 * std::f64::consts::PI * t / self.period).sin());
    }

    fn rates(&self, t: f64, out: &mut [f64]) {
        let w = 2.0 * std::f64::consts::PI / self.period;
        out.fill(self.amplitude * w * (w * t).cos());
    }
}

/// Reciprocal stroke with uneven timing: every joint follows
/// `A sin²(π s(t/T))`, where `s` spends `fraction` of the cycle going out and
/// the rest coming back. The shape path retraces itself exactly, but the
/// time samples are not symmetric, so discretization error does not cancel.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UnevenReciprocalShape {
    pub amplitude: f64,
    pub period: f64,
    pub n_joints: usize,
    pub fraction: f64,
}

impl UnevenReciprocalShape {
    /// Warped time in `[0, 1)` and its derivative with respect to `t`.
    fn warp(&self, t: f64) -> (f64, f64) {
        let p = (t / self.period).rem_euclid(1.0);
        let a = self.fraction;
        if p < a {
            let u = p / a;
            (0.5 * u, 0.5 / (a * self.period))
        } else {
            let u = (p - a) / (1.0 - a);
            (0.5 + 0.5 * u, 0.5 / ((1.0 - a) * self.period))
        }
    }
}

impl ShapeProgram for UnevenReciprocalShape {
    fn period(&self) -> f64 {
        self.period
    }

    fn n_joints(&self) -> usize {
        self.n_joints
    }

    fn angles(&self, t: f64, out: &mut [f64]) {
        let (s, _) = self.warp(t);
        out.fill(self.amplitude * 0.5 * (1.0 - (2.0 * std::f64::consts::PI * s).cos()));
    }

    fn rates(&self, t: f64, out: &mut [f64]) {
        let (s, ds) = self.warp(t);
        let x = 2.0 * std::f64::consts::PI * s;
        out.fill(self.amplitude * std::f64::consts::PI * x.sin() * ds);
    }
}

/// Non-reciprocal stroke: the chain bends as a whole during the first half
/// and straightens base-first during the second, so proximal and distal
/// joints trace a loop in shape space.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TwoPhaseShape {
    pub amplitude: f64,
    pub period: f64,
    /// Joints per flagellum.
    pub segments: usize,
    pub n_joints: usize,
}

impl TwoPhaseShape {
    fn joint_value(&self, p: f64, seg: usize) -> (f64, f64) {
        use std::f64::consts::PI;
        let smooth = |u: f64| (0.5 * (1.0 - (PI * u).cos()), 0.5 * PI * (PI * u).sin());
        if p < 0.5 {
            let (v, dv) = smooth(2.0 * p);
            (self.amplitude * v, self.amplitude * dv * 2.0)
        } else {
            // joint `seg` straightens over its own window within the second half
            let n = self.segments as f64;
            let width = 2.0 / (n + 1.0);
            let start = seg as f64 * width / 2.0;
            let u = ((2.0 * (p - 0.5) - start) / width).clamp(0.0, 1.0);
            let inside = u > 0.0 && u < 1.0;
            let (v, dv) = smooth(u);
            let rate = if inside { -self.amplitude * dv * 2.0 / width } else { 0.0 };
            (self.amplitude * (1.0 - v), rate)
        }
    }
}

impl ShapeProgram for TwoPhaseShape {
    fn period(&self) -> f64 {
        self.period
    }

    fn n_joints(&self) -> usize {
        self.n_joints
    }

    fn angles(&self, t: f64, out: &mut [f64]) {
        let p = (t / self.period).rem_euclid(1.0);
        for (j, a) in out.iter_mut().enumerate() {
            *a = self.joint_value(p, j % self.segments).0;
        }
    }

    fn rates(&self, t: f64, out: &mut [f64]) {
        let p = (t / self.period).rem_euclid(1.0);
        for (j, a) in out.iter_mut().enumerate() {
            *a = self.joint_value(p, j % self.segments).1 / self.period;
        }
    }
}

fn prescribed_step_once(
    sys: &mut System<'_>,
    shape: &dyn ShapeProgram,
    g0: &DVector<f64>,
    t: f64,
    dt: f64,
    settings: &SimSettings,
) -> std::result::Result<DVector<f64>, StepFailure> {
    let n = sys.dof();
    let theta = settings.scheme.theta();
    let te = t + theta * dt;
    let mut q = vec![0.0; n];
    let mut rates = vec![0.0; n - 3];
    shape.angles(te, &mut q[3..]);
    shape.rates(te, &mut rates);
    let pose0 = Vector3::new(g0[0], g0[1], g0[2]);
    let mut pose1 = pose0;
    let mut residual = f64::INFINITY;
    // fixed-point iteration: the pose map is a contraction with rate O(dt)
    for _ in 0..settings.newton_max_iter {
        let pe = pose0 * (1.0 - theta) + pose1 * theta;
        q[..3].copy_from_slice(pe.as_slice());
        let v = sys.pose_rate(&q, &rates)?;
        let next = pose0 + v * dt;
        residual = (next - pose1).norm();
        pose1 = next;
        if !residual.is_finite() {
            break;
        }
        if residual <= settings.newton_tol {
            let mut out = DVector::zeros(n);
            out.as_mut_slice()[..3].copy_from_slice(pose1.as_slice());
            shape.angles(t + dt, &mut out.as_mut_slice()[3..]);
            return Ok(out);
        }
    }
    Err(StepFailure::Diverged(residual))
}

/// Imposes `shape` on the joints and integrates only the body pose.
pub fn simulate_prescribed(
    config: &RobotConfig,
    shape: &dyn ShapeProgram,
    n_cycles: usize,
    settings: &SimSettings,
) -> Result<Trajectory> {
    let mut initial = GeneralizedCoords::uniform(config, 0.0);
    if initial.joint_angles.len() == shape.n_joints() {
        shape.angles(0.0, &mut initial.joint_angles);
    }
    simulate_prescribed_from(config, shape, &initial, n_cycles, settings)
}

pub fn simulate_prescribed_from(
    config: &RobotConfig,
    shape: &dyn ShapeProgram,
    initial: &GeneralizedCoords,
    n_cycles: usize,
    settings: &SimSettings,
) -> Result<Trajectory> {
    let config = validate_config(config.clone())?;
    let settings = settings.validate()?;
    check_dim(&config, initial.dim())?;
    if shape.n_joints() != config.joint_count() {
        return Err(SimError::DimensionMismatch {
            expected: config.joint_count(),
            actual: shape.n_joints(),
        });
    }
    let period = shape.period();
    let steps = step_count(n_cycles, period, settings.dt)?;
    let dt = settings.dt;
    let mut sys = System::new(&config, settings.condition_limit)?;
    let mut q = initial.to_vector();
    shape.angles(0.0, &mut q.as_mut_slice()[3..]);
    let phase = |t: f64| {
        let p = (t / period).rem_euclid(1.0);
        if p >= 1.0 {
            0.0
        } else {
            p
        }
    };
    let mut samples = Vec::with_capacity(steps + 1);
    samples.push(Sample {
        t: 0.0,
        q: GeneralizedCoords::from_slice(q.as_slice()),
        phase: 0.0,
        k: 0.0,
    });
    for i in 0..steps {
        let t = i as f64 * dt;
        q = advance(&q, t, dt, 0, &mut |q, t, dt| {
            prescribed_step_once(&mut sys, shape, q, t, dt, &settings)
        })?;
        let t1 = (i + 1) as f64 * dt;
        if !q.iter().all(|v| v.is_finite()) {
            return Err(SimError::NonFinite(t1));
        }
        samples.push(Sample {
            t: t1,
            q: GeneralizedCoords::from_slice(q.as_slice()),
            phase: phase(t1),
            k: 0.0,
        });
    }
    Ok(Trajectory {
        samples,
        dt,
        period,
        config,
        gait: None,
    })
}
