//! Acceptance suite: one PASS/FAIL line per criterion, non-zero exit if any fails.

use std::time::Instant;

use flexswim::actuation::{carriage_position, GaitMode, GaitSchedule, MechanismConfig};
use flexswim::dynamics::{simulate, SimSettings};
use flexswim::experiments::{compare_gaits, displacement_per_cycle, scallop_check};
use flexswim::hydrodynamics::reynolds_number;
use flexswim::kinematics::RobotConfig;
use flexswim::optimize::{evaluate_objective, optimize_gait, sweep_grid, GaitParams, GridSpec, ParamBounds, ParamName};
use flexswim::verify::{
    drag_linearity_error, integrator_order, jacobian_fd_error, lateral_drift, resistance_stats,
    se2_equivariance_error, single_rod_error, ANALYTIC_TOL, JACOBIAN_TOL, MIN_ORDER, SYMMETRY_TOL,
    TRAJECTORY_TOL,
};

type Outcome = Result<(bool, String), Box<dyn std::error::Error>>;

fn setup() -> (RobotConfig, GaitSchedule, SimSettings) {
    let gait = GaitSchedule::default();
    (RobotConfig::default(), gait, SimSettings::for_period(gait.period))
}

fn scallop() -> Outcome {
    let (config, gait, settings) = setup();
    let start = Instant::now();
    let report = scallop_check(&config, &gait, &settings)?;
    let code = flexswim::cli::run(["flexswim", "verify"]);
    let elapsed = start.elapsed().as_secs_f64();
    let sinusoid = &report.reciprocal[0];
    let ok = report.passed && code == 0 && elapsed <= 10.0 && sinusoid.residual_bl <= 1e-6;
    let probes: Vec<String> = report
        .reciprocal
        .iter()
        .map(|p| format!("{} {:.2e} BL (ratio {:.2}{})", p.name, p.residual_bl, p.shrink_ratio, if p.at_roundoff { ", round-off" } else { "" }))
        .collect();
    Ok((
        ok,
        format!(
            "{}; control {:.2e} BL; verify exit {code}; {elapsed:.1} s",
            probes.join(", "),
            report.control.residual_bl
        ),
    ))
}

fn symmetry_breaking() -> Outcome {
    let (config, gait, settings) = setup();
    let presets = [GaitMode::ControlledFlexible, GaitMode::FullyFlexible, GaitMode::FullyRigid];
    let a = compare_gaits(&config, &gait, &presets, 10, &settings)?;
    let b = compare_gaits(&config, &gait, &presets, 10, &settings.with_dt(settings.dt / 2.0))?;
    let check = |r: &flexswim::experiments::ComparisonReport| {
        let c = r.get(GaitMode::ControlledFlexible).unwrap().mean;
        let f = r.get(GaitMode::FullyFlexible).unwrap().mean;
        r.controlled_over_rigid.unwrap() >= 1e3 && c > f && c.abs() > f.abs()
    };
    let ok = check(&a) && check(&b) && a.ordering == b.ordering;
    let body = config.body.length;
    let m = |mode| a.get(mode).unwrap().mean / body;
    Ok((
        ok,
        format!(
            "BL/cycle controlled {:.3e}, flexible {:.3e}, rigid {:.3e}; controlled/flexible {:.2} (dt/2: {:.2}), controlled/rigid {:.0} (dt/2: {:.0}); ordering {:?} (dt/2 same: {})",
            m(GaitMode::ControlledFlexible),
            m(GaitMode::FullyFlexible),
            m(GaitMode::FullyRigid),
            a.controlled_over_flexible.unwrap(),
            b.controlled_over_flexible.unwrap(),
            a.controlled_over_rigid.unwrap(),
            b.controlled_over_rigid.unwrap(),
            a.ordering.iter().map(|m| m.name()).collect::<Vec<_>>(),
            a.ordering == b.ordering
        ),
    ))
}

fn steady_gait() -> Outcome {
    let (config, gait, settings) = setup();
    let traj = simulate(&config, &gait, 10, &settings)?;
    let m = displacement_per_cycle(&traj)?;
    let ok = m.mean != 0.0 && m.forward_consistent() && m.cv() < 0.10;
    Ok((
        ok,
        format!(
            "mean {:.4} mm/cycle, cv over cycles 2-10 {:.2e}, forward-consistent {}",
            m.mean * 1e3,
            m.cv(),
            m.forward_consistent()
        ),
    ))
}

fn hydrodynamics() -> Outcome {
    let (config, _, _) = setup();
    let s = resistance_stats(&config, 100, 2024)?;
    let rod = single_rod_error(100, 2025);
    let lin = drag_linearity_error(100, 2026);
    let ok = s.asymmetry <= SYMMETRY_TOL && s.min_eigen_ratio > 0.0 && rod <= ANALYTIC_TOL && lin <= ANALYTIC_TOL;
    Ok((
        ok,
        format!(
            "asymmetry {:.1e}, min eigenvalue ratio {:.2e}, rod error {rod:.1e}, linearity error {lin:.1e}",
            s.asymmetry, s.min_eigen_ratio
        ),
    ))
}

fn kinematics_dynamics() -> Outcome {
    let (config, gait, settings) = setup();
    let reference = simulate(&config, &gait, 10, &settings)?;
    let se2 = se2_equivariance_error(&config, &gait, &settings, 10, Some(&reference))?;
    let mirror = lateral_drift(&reference);
    let jac = jacobian_fd_error(&config, 20, 7)?;
    let order = integrator_order(&config, &gait, &settings)?;
    let ok = se2 <= TRAJECTORY_TOL && mirror <= TRAJECTORY_TOL && jac <= JACOBIAN_TOL && order >= MIN_ORDER;
    Ok((
        ok,
        format!("SE(2) {se2:.1e}, mirror {mirror:.1e}, Jacobian {jac:.1e}, order {order:.3}"),
    ))
}

fn mechanism() -> Outcome {
    let mech = MechanismConfig::default();
    let top = carriage_position(5.0, &mech);
    let re = reynolds_number(7e-4, 0.126, &RobotConfig::default().fluid)?;
    let ok = (top - 0.020_833).abs() < 1e-6 && top <= 0.053 && (re - 0.0592).abs() <= 1e-4;
    Ok((ok, format!("carriage {:.3} mm of 53 mm, Re {re:.4}", top * 1e3)))
}

fn optimizer() -> Outcome {
    let (config, gait, settings) = setup();
    let settings = settings.with_dt(gait.period / 500.0);
    let (lo, hi) = (0.2, 0.8);
    let grid = sweep_grid(&GridSpec::linspace(ParamName::Duty, lo, hi, 11), &gait, &config, &settings)?;
    let oracle = grid.best().ok_or("empty sweep")?.params.duty;
    let bounds = ParamBounds::point(GaitParams::from_gait(&gait)).with(ParamName::Duty, lo, hi);
    let a = optimize_gait(&bounds, 50, 42, &gait, &config, &settings)?;
    let b = optimize_gait(&bounds, 50, 42, &gait, &config, &settings)?;
    let default = evaluate_objective(&GaitParams::from_gait(&gait), &gait, &config, &settings)?;
    let step = (hi - lo) / 10.0;
    let ok = (a.best_params.duty - oracle).abs() <= step + 1e-12
        && a.best_objective >= default
        && a == b
        && a.evaluations <= 50;
    Ok((
        ok,
        format!(
            "optimum duty {:.4} vs grid argmax {oracle:.2} (step {step:.2}); objective {:.4} mm vs default {:.4} mm; {} evaluations; repeat identical {}",
            a.best_params.duty,
            a.best_objective * 1e3,
            default * 1e3,
            a.evaluations,
            a == b
        ),
    ))
}

fn performance() -> Outcome {
    let (config, gait, settings) = setup();
    let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build()?;
    let start = Instant::now();
    pool.install(|| simulate(&config, &gait, 10, &settings))?;
    let sim = start.elapsed().as_secs_f64();
    let start = Instant::now();
    let grid = GridSpec::linspace(ParamName::Beta, 0.2, 1.2, 33);
    let table = sweep_grid(&grid, &gait, &config, &settings)?;
    let sweep = start.elapsed().as_secs_f64();
    let ok = sim <= 5.0 && sweep <= 60.0 && table.rows.len() == 33;
    Ok((
        ok,
        format!(
            "10-cycle simulation {sim:.2} s; 33-point sweep {sweep:.1} s on {} threads",
            rayon::current_num_threads()
        ),
    ))
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 8] = [
        ("scallop theorem", scallop),
        ("symmetry breaking", symmetry_breaking),
        ("steady displacement per cycle", steady_gait),
        ("hydrodynamics", hydrodynamics),
        ("kinematics and dynamics", kinematics_dynamics),
        ("mechanism arithmetic", mechanism),
        ("optimizer", optimizer),
        ("performance", performance),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let (ok, detail) = match f() {
            Ok(r) => r,
            Err(e) => (false, format!("error: {e}")),
        };
        if !ok {
            failed += 1;
        }
        println!("criterion {} {}: {} ({detail})", i + 1, name, if ok { "PASS" } else { "FAIL" });
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
