use flexswim::actuation::GaitSchedule;
use flexswim::dynamics::SimSettings;
use flexswim::kinematics::RobotConfig;
use flexswim::optimize::{
    evaluate_objective, optimize_gait, sweep_grid, GaitParams, GridSpec, ParamBounds, ParamName,
};

fn setup() -> (RobotConfig, GaitSchedule, SimSettings) {
    let gait = GaitSchedule::default();
    let settings = SimSettings::for_period(gait.period).with_dt(gait.period / 400.0);
    (RobotConfig::default(), gait, settings)
}

#[test]
fn objective_is_positive_for_the_default_gait_and_repeatable() {
    let (config, gait, settings) = setup();
    let p = GaitParams::from_gait(&gait);
    let a = evaluate_objective(&p, &gait, &config, &settings).unwrap();
    let b = evaluate_objective(&p, &gait, &config, &settings).unwrap();
    assert!(a > 0.0);
    assert_eq!(a.to_bits(), b.to_bits());
}

#[test]
fn equal_stiffnesses_are_the_reciprocal_limit() {
    let (config, gait, settings) = setup();
    let p = GaitParams::from_gait(&gait).with(ParamName::KMin, gait.k_max);
    let v = evaluate_objective(&p, &gait, &config, &settings).unwrap();
    assert!(v.abs() / config.body.length <= 1e-6, "{v}");
}

#[test]
fn sweep_rows_match_single_evaluations() {
    let (config, gait, settings) = setup();
    let one = sweep_grid(&GridSpec::linspace(ParamName::Duty, 0.4, 0.4, 1), &gait, &config, &settings).unwrap();
    assert_eq!(one.rows.len(), 1);
    let direct = evaluate_objective(&one.rows[0].params, &gait, &config, &settings).unwrap();
    assert_eq!(one.rows[0].objective, Some(direct));

    let grid = GridSpec::linspace(ParamName::KMin, 1e-3, 50.0, 2).and(ParamName::Duty, vec![0.3, 0.5, 0.7]);
    assert_eq!(grid.len(), 6);
    let table = sweep_grid(&grid, &gait, &config, &settings).unwrap();
    let duties: Vec<f64> = table.rows.iter().map(|r| r.params.duty).collect();
    assert_eq!(duties, vec![0.3, 0.5, 0.7, 0.3, 0.5, 0.7]);
    // k_min = k_max rows only swim through joint lag, far below the switching gait
    let best = table.best().unwrap().objective.unwrap();
    for row in &table.rows[3..] {
        assert!(row.objective.unwrap().abs() < 0.05 * best, "{row:?}");
    }
    assert!(table.best().unwrap().params.k_min < 1.0);
}

#[test]
fn failed_rows_carry_their_error() {
    let (config, gait, settings) = setup();
    let grid = GridSpec::linspace(ParamName::Beta, 0.5, 2.0, 2);
    let table = sweep_grid(&grid, &gait, &config, &settings).unwrap();
    assert!(table.rows[0].objective.is_some());
    assert!(table.rows[1].objective.is_none());
    assert!(table.rows[1].error.as_deref().unwrap().contains("gait.beta"));
}

#[test]
fn collapsed_bounds_take_one_evaluation() {
    let (config, gait, settings) = setup();
    let p = GaitParams::from_gait(&gait);
    let r = optimize_gait(&ParamBounds::point(p), 10, 3, &gait, &config, &settings).unwrap();
    assert_eq!(r.evaluations, 1);
    assert_eq!(r.best_params, p);
}

#[test]
fn search_respects_bounds_budget_and_seed() {
    let (config, gait, settings) = setup();
    let bounds = ParamBounds::point(GaitParams::from_gait(&gait))
        .with(ParamName::Beta, 0.3, 1.0)
        .with(ParamName::PhaseOffset, 0.0, 0.3);
    let a = optimize_gait(&bounds, 14, 9, &gait, &config, &settings).unwrap();
    assert!(a.history.len() <= 14);
    assert!(a.history.iter().all(|e| bounds.contains(&e.params)));
    assert_eq!(a.history[0].params, GaitParams::from_gait(&gait));
    let best: Vec<f64> = a.history.iter().filter_map(|e| e.best_so_far).collect();
    assert!(best.windows(2).all(|w| w[1] >= w[0]));
    assert_eq!(*best.last().unwrap(), a.best_objective);
    let b = optimize_gait(&bounds, 14, 9, &gait, &config, &settings).unwrap();
    assert_eq!(a, b);
}

#[test]
fn bad_inputs_are_rejected() {
    let (config, gait, settings) = setup();
    let p = GaitParams::from_gait(&gait);
    assert!(optimize_gait(&ParamBounds::point(p), 5, 0, &gait, &config, &settings).is_err());
    let inverted = ParamBounds::point(p).with(ParamName::Duty, 0.8, 0.2);
    assert!(optimize_gait(&inverted, 20, 0, &gait, &config, &settings).is_err());
    assert!("stiffness".parse::<ParamName>().is_err());
}
