//! Property checks behind `flexswim verify`: each returns the measured
//! quantity so callers can apply their own thresholds.

use nalgebra::{DMatrix, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::actuation::{carriage_position, elastic_generalized_force, GaitSchedule, JointActuation, MechanismConfig};
use crate::dynamics::{initial_state, simulate, simulate_from, SimSettings, Trajectory};
use crate::error::Result;
use crate::experiments::scallop_check;
use crate::hydrodynamics::{
    assemble_resistance_matrix, link_drag_operator, link_drag_wrench, DragCoefficients, DragModel,
};
use crate::kinematics::{forward_kinematics, link_jacobian, GeneralizedCoords, LinkFrame, RobotConfig};

pub const RANDOM_STATES: usize = 100;
pub const SYMMETRY_TOL: f64 = 1e-12;
pub const ANALYTIC_TOL: f64 = 1e-10;
pub const JACOBIAN_TOL: f64 = 1e-6;
pub const TRAJECTORY_TOL: f64 = 1e-8;
pub const MIN_ORDER: f64 = 1.9;

/// Random pose and joint angles in `[-1, 1]` rad.
pub fn random_state(config: &RobotConfig, rng: &mut impl Rng) -> GeneralizedCoords {
    let mut q = GeneralizedCoords::uniform(config, 0.0);
    q.x = rng.gen_range(-1.0..1.0);
    q.y = rng.gen_range(-1.0..1.0);
    q.phi_body = rng.gen_range(-3.2..3.2);
    for a in &mut q.joint_angles {
        *a = rng.gen_range(-1.0..1.0);
    }
    q
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ResistanceStats {
    /// max |R - Rᵀ| / max |R|
    pub asymmetry: f64,
    /// Smallest eigenvalue over the largest.
    pub min_eigen_ratio: f64,
    /// Relative difference to a dense `Σ Jᵀ D J` built from the link Jacobians.
    pub assembly_error: f64,
}

fn dense_resistance(q: &GeneralizedCoords, config: &RobotConfig) -> Result<DMatrix<f64>> {
    let frames = forward_kinematics(q, config)?;
    let n = config.dof();
    let mut r = DMatrix::zeros(n, n);
    let mut link = 1;
    let body = DragModel::body_coefficients(config)?;
    let d = link_drag_operator(frames.body(), &body);
    let j = link_jacobian(q, config, 0)?;
    r += j.transpose() * DMatrix::from_iterator(3, 3, d.iter().copied()) * &j;
    for f in &config.flagella {
        let c = crate::hydrodynamics::rft_coefficients(&config.fluid, f, config.drag_ratio)?;
        for _ in 0..f.n_segments {
            let d = link_drag_operator(&frames.links[link], &c);
            let j = link_jacobian(q, config, link)?;
            r += j.transpose() * DMatrix::from_iterator(3, 3, d.iter().copied()) * &j;
            link += 1;
        }
    }
    Ok(r)
}

/// Symmetry, definiteness and assembly of `R(q)` over `n` random states.
pub fn resistance_stats(config: &RobotConfig, n: usize, seed: u64) -> Result<ResistanceStats> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut stats = ResistanceStats {
        asymmetry: 0.0,
        min_eigen_ratio: f64::INFINITY,
        assembly_error: 0.0,
    };
    for _ in 0..n {
        let q = random_state(config, &mut rng);
        let r = assemble_resistance_matrix(&q, config)?.0;
        let scale = r.amax();
        stats.asymmetry = stats.asymmetry.max((&r - r.transpose()).amax() / scale);
        let eig = r.clone().symmetric_eigenvalues();
        stats.min_eigen_ratio = stats.min_eigen_ratio.min(eig.min() / eig.max());
        let dense = dense_resistance(&q, config)?;
        stats.assembly_error = stats.assembly_error.max((&r - dense).amax() / scale);
    }
    Ok(stats)
}

/// Largest relative deviation of a single rod's drag from the analytic
/// `diag(c_t L, c_n L, c_n L³/12)` in its own frame, over `n` random rods.
pub fn single_rod_error(n: usize, seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    for _ in 0..n {
        let length = rng.gen_range(0.01..1.0);
        let c = DragCoefficients::slender_rod(rng.gen_range(0.1..5.0), length, length / 50.0, 2.0)
            .expect("slender");
        let theta: f64 = rng.gen_range(-3.2..3.2);
        let frame = LinkFrame {
            center: nalgebra::Vector2::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)),
            orientation: theta,
            length,
        };
        let d = link_drag_operator(&frame, &c);
        let (cs, sn) = (theta.cos(), theta.sin());
        let rot = nalgebra::Matrix3::new(cs, -sn, 0.0, sn, cs, 0.0, 0.0, 0.0, 1.0);
        let local = rot.transpose() * d * rot;
        let want = nalgebra::Matrix3::from_diagonal(&Vector3::new(
            c.c_t * length,
            c.c_n * length,
            c.c_n * length.powi(3) / 12.0,
        ));
        worst = worst.max((local - want).amax() / want.amax());
    }
    worst
}

/// Relative deviation from linearity of the link wrench in velocity and in viscosity.
pub fn drag_linearity_error(n: usize, seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    let vec = |w: crate::hydrodynamics::Wrench| Vector3::new(w.force.x, w.force.y, w.torque);
    for _ in 0..n {
        let mu = rng.gen_range(0.1..5.0);
        let c = DragCoefficients::slender_rod(mu, 0.1, 0.002, 2.0).expect("slender");
        let c2 = DragCoefficients::slender_rod(2.0 * mu, 0.1, 0.002, 2.0).expect("slender");
        let frame = LinkFrame {
            center: nalgebra::Vector2::zeros(),
            orientation: rng.gen_range(-3.2..3.2),
            length: 0.1,
        };
        let u = Vector3::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
        let v = Vector3::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
        let a: f64 = rng.gen_range(-3.0..3.0);
        let lhs = vec(link_drag_wrench(&frame, u * a + v, &c));
        let rhs = vec(link_drag_wrench(&frame, u, &c)) * a + vec(link_drag_wrench(&frame, v, &c));
        worst = worst.max((lhs - rhs).amax() / rhs.amax().max(1e-300));
        let doubled = vec(link_drag_wrench(&frame, u, &c2));
        let twice = vec(link_drag_wrench(&frame, u, &c)) * 2.0;
        worst = worst.max((doubled - twice).amax() / twice.amax());
    }
    worst
}

/// Worst relative error of the link Jacobians against central differences of forward kinematics.
pub fn jacobian_fd_error(config: &RobotConfig, n: usize, seed: u64) -> Result<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let h = 1e-7;
    let mut worst: f64 = 0.0;
    for _ in 0..n {
        let q = random_state(config, &mut rng);
        let v = q.to_vector();
        for link in 0..config.link_count() {
            let j = link_jacobian(&q, config, link)?;
            let scale = j.amax().max(1.0);
            for col in 0..config.dof() {
                let mut plus = v.clone();
                let mut minus = v.clone();
                plus[col] += h;
                minus[col] -= h;
                let fp = &forward_kinematics(&GeneralizedCoords::from_slice(plus.as_slice()), config)?.links[link];
                let fm = &forward_kinematics(&GeneralizedCoords::from_slice(minus.as_slice()), config)?.links[link];
                let fd = Vector3::new(
                    (fp.center.x - fm.center.x) / (2.0 * h),
                    (fp.center.y - fm.center.y) / (2.0 * h),
                    (fp.orientation - fm.orientation) / (2.0 * h),
                );
                let an = Vector3::new(j[(0, col)], j[(1, col)], j[(2, col)]);
                worst = worst.max((fd - an).amax() / scale);
            }
        }
    }
    Ok(worst)
}

/// Max deviation between a run from a rigidly moved start and the moved reference run.
pub fn se2_equivariance_error(
    config: &RobotConfig,
    gait: &GaitSchedule,
    settings: &SimSettings,
    n_cycles: usize,
    reference: Option<&Trajectory>,
) -> Result<f64> {
    let q0 = initial_state(config, gait);
    let owned;
    let a = match reference {
        Some(t) => t,
        None => {
            owned = simulate_from(config, gait, &q0, n_cycles, settings)?;
            &owned
        }
    };
    let (dx, dy, rot) = (0.37, -0.81, 2.3_f64);
    let moved = GeneralizedCoords {
        x: dx,
        y: dy,
        phi_body: rot,
        ..q0
    };
    let b = simulate_from(config, gait, &moved, n_cycles, settings)?;
    let (c, s) = (rot.cos(), rot.sin());
    let mut worst: f64 = 0.0;
    for (p, m) in a.samples.iter().zip(&b.samples) {
        let ex = (c * p.q.x - s * p.q.y + dx - m.q.x).abs();
        let ey = (s * p.q.x + c * p.q.y + dy - m.q.y).abs();
        let ephi = (p.q.phi_body + rot - m.q.phi_body).abs();
        let ej = p
            .q
            .joint_angles
            .iter()
            .zip(&m.q.joint_angles)
            .map(|(u, v)| (u - v).abs())
            .fold(0.0, f64::max);
        worst = worst.max(ex).max(ey).max(ephi).max(ej);
    }
    Ok(worst)
}

/// Every flagellum has a mirrored twin at the same attachment.
pub fn is_mirror_symmetric(config: &RobotConfig) -> bool {
    config.flagella.iter().all(|f| {
        let twins = config.flagella.iter().filter(|g| **g == f.mirrored()).count();
        let same = config.flagella.iter().filter(|g| *g == f).count();
        twins == same
    })
}

/// Largest |y| or |phi_body| along the run.
pub fn lateral_drift(traj: &Trajectory) -> f64 {
    traj.samples
        .iter()
        .map(|s| s.q.y.abs().max(s.q.phi_body.abs()))
        .fold(0.0, f64::max)
}

/// Observed order from one cycle at `4dt`, `2dt` and `dt`.
pub fn integrator_order(config: &RobotConfig, gait: &GaitSchedule, settings: &SimSettings) -> Result<f64> {
    let end = |dt: f64| -> Result<_> { Ok(simulate(config, gait, 1, &settings.with_dt(dt))?.last().to_vector()) };
    let a = end(4.0 * settings.dt)?;
    let b = end(2.0 * settings.dt)?;
    let c = end(settings.dt)?;
    Ok(((&a - &b).norm() / (&b - &c).norm()).log2())
}

/// Largest |pose component| of the elastic force over random states and actuations.
pub fn elastic_pose_leak(config: &RobotConfig, n: usize, seed: u64) -> Result<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    for _ in 0..n {
        let q = random_state(config, &mut rng);
        let act: Vec<JointActuation> = (0..config.joint_count())
            .map(|_| JointActuation {
                stiffness: rng.gen_range(1e-3..10.0),
                rest_angle: rng.gen_range(-1.0..1.0),
            })
            .collect();
        let f = elastic_generalized_force(&q, &act)?;
        worst = worst.max(f[0].abs()).max(f[1].abs()).max(f[2].abs());
    }
    Ok(worst)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerifyReport {
    pub checks: Vec<Check>,
}

impl VerifyReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }
}

fn check(name: &str, passed: bool, detail: String) -> Check {
    Check {
        name: name.into(),
        passed,
        detail,
    }
}

/// Runs the whole property suite on one configuration. Errors from the
/// simulations are reported as failed checks, not propagated.
pub fn verify_suite(
    config: &RobotConfig,
    mech: &MechanismConfig,
    gait: &GaitSchedule,
    settings: &SimSettings,
    n_cycles: usize,
) -> VerifyReport {
    let mut checks = Vec::new();
    let mut push = |name: &str, r: Result<(bool, String)>| {
        checks.push(match r {
            Ok((ok, detail)) => check(name, ok, detail),
            Err(e) => check(name, false, format!("error: {e}")),
        })
    };

    push(
        "scallop",
        scallop_check(config, gait, settings).map(|r| {
            let mut parts: Vec<String> = r
                .reciprocal
                .iter()
                .map(|p| {
                    format!(
                        "{} {:.3e} BL/cycle (dt/2: {:.3e}, ratio {:.2}{})",
                        p.name,
                        p.residual_bl,
                        p.residual_half_bl,
                        p.shrink_ratio,
                        if p.at_roundoff { ", round-off" } else { "" }
                    )
                })
                .collect();
            parts.push(format!("control {} {:.3e} BL/cycle", r.control.name, r.control.residual_bl));
            (r.passed, parts.join("; "))
        }),
    );
    push(
        "resistance_matrix",
        resistance_stats(config, RANDOM_STATES, 11).map(|s| {
            (
                s.asymmetry <= SYMMETRY_TOL && s.min_eigen_ratio > 0.0 && s.assembly_error <= ANALYTIC_TOL,
                format!(
                    "asymmetry {:.2e}, min eigenvalue ratio {:.2e}, assembly error {:.2e}",
                    s.asymmetry, s.min_eigen_ratio, s.assembly_error
                ),
            )
        }),
    );
    let rod = single_rod_error(RANDOM_STATES, 12);
    push("single_rod", Ok((rod <= ANALYTIC_TOL, format!("max relative error {rod:.2e}"))));
    let lin = drag_linearity_error(RANDOM_STATES, 13);
    push("drag_linearity", Ok((lin <= ANALYTIC_TOL, format!("max relative error {lin:.2e}"))));
    push(
        "jacobian",
        jacobian_fd_error(config, 20, 14).map(|e| (e <= JACOBIAN_TOL, format!("max error {e:.2e}"))),
    );
    push(
        "elastic_internal",
        elastic_pose_leak(config, RANDOM_STATES, 15).map(|e| (e == 0.0, format!("max pose component {e:e}"))),
    );

    let reference = simulate(config, gait, n_cycles, settings);
    push(
        "se2_equivariance",
        reference.as_ref().map_err(Clone::clone).and_then(|r| {
            se2_equivariance_error(config, gait, settings, n_cycles, Some(r))
                .map(|e| (e <= TRAJECTORY_TOL, format!("{n_cycles} cycles, max deviation {e:.2e}")))
        }),
    );
    if is_mirror_symmetric(config) {
        push(
            "mirror_symmetry",
            reference.as_ref().map_err(Clone::clone).map(|r| {
                let d = lateral_drift(r);
                (d <= TRAJECTORY_TOL, format!("max |y|, |phi_body| {d:.2e}"))
            }),
        );
    }
    push(
        "integrator_order",
        integrator_order(config, gait, settings).map(|p| (p >= MIN_ORDER, format!("observed order {p:.3}"))),
    );
    let top = carriage_position(mech.half_period, mech);
    push(
        "mechanism",
        Ok((
            top <= mech.shaft_travel,
            format!("carriage reaches {:.3} mm of {:.1} mm travel", top * 1e3, mech.shaft_travel * 1e3),
        )),
    );
    VerifyReport { checks }
}
