use flexswim::actuation::{
    carriage_position, elastic_generalized_force, gait_evaluate, GaitMode, GaitSchedule, JointActuation,
    MechanismConfig, Ramp,
};
use flexswim::hydrodynamics::assemble_resistance_matrix;
use flexswim::kinematics::{forward_kinematics, GeneralizedCoords, RobotConfig};
use proptest::prelude::*;

fn state(config: &RobotConfig) -> impl Strategy<Value = GeneralizedCoords> {
    let n = config.joint_count();
    (-1.0..1.0f64, -1.0..1.0f64, -3.2..3.2f64, prop::collection::vec(-1.2..1.2f64, n)).prop_map(
        |(x, y, phi_body, joint_angles)| GeneralizedCoords {
            x,
            y,
            phi_body,
            joint_angles,
        },
    )
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn resistance_is_symmetric_positive_definite(q in state(&RobotConfig::default())) {
        let r = assemble_resistance_matrix(&q, &RobotConfig::default()).unwrap().0;
        prop_assert!((&r - r.transpose()).amax() <= 1e-12 * r.amax());
        prop_assert!(r.clone().cholesky().is_some());
        prop_assert!(r.symmetric_eigenvalues().min() > 0.0);
    }

    #[test]
    fn resistance_does_not_depend_on_position(q in state(&RobotConfig::default()), dx in -5.0..5.0f64, dy in -5.0..5.0f64) {
        let config = RobotConfig::default();
        let moved = GeneralizedCoords { x: q.x + dx, y: q.y + dy, ..q.clone() };
        let a = assemble_resistance_matrix(&q, &config).unwrap().0;
        let b = assemble_resistance_matrix(&moved, &config).unwrap().0;
        prop_assert!((&a - &b).amax() <= 1e-12 * a.amax());
    }

    #[test]
    fn links_stay_connected(q in state(&RobotConfig::default())) {
        let config = RobotConfig::default();
        let frames = forward_kinematics(&q, &config).unwrap();
        let mut link = 1;
        for f in &config.flagella {
            for s in 1..f.n_segments {
                let gap = (frames.links[link + s].proximal() - frames.links[link + s - 1].distal()).norm();
                prop_assert!(gap < 1e-12);
            }
            link += f.n_segments;
        }
    }

    #[test]
    fn elastic_force_has_no_pose_component(
        q in state(&RobotConfig::default()),
        k in 1e-6..100.0f64,
        rest in -1.5..1.5f64,
    ) {
        let act = vec![JointActuation { stiffness: k, rest_angle: rest }; q.joint_angles.len()];
        let f = elastic_generalized_force(&q, &act).unwrap();
        prop_assert_eq!(&f[..3], &[0.0, 0.0, 0.0]);
        for (fj, th) in f[3..].iter().zip(&q.joint_angles) {
            prop_assert!((fj + k * (th - rest)).abs() <= 1e-12 * (1.0 + fj.abs()));
        }
    }

    #[test]
    fn schedules_are_bounded_and_periodic(
        phase in 0.0..1.0f64,
        duty in 0.1..0.9f64,
        offset in 0.0..0.99f64,
        beta in -1.5..1.5f64,
        ramp in prop::sample::select(vec![Ramp::Cosine, Ramp::LinearSmoothed, Ramp::Geometric]),
        mode in prop::sample::select(GaitMode::ALL.to_vec()),
    ) {
        let g = GaitSchedule { duty, phase_offset: offset, beta, ramp, mode, ..GaitSchedule::default() };
        let a = gait_evaluate(&g, phase).unwrap();
        prop_assert!(a.stiffness >= g.k_min * (1.0 - 1e-12) && a.stiffness <= g.k_max * (1.0 + 1e-12));
        prop_assert!(a.rest_angle.abs() <= beta.abs() + 1e-12);
        let t = phase * g.period;
        let b = g.at_time(t + 3.0 * g.period);
        prop_assert!((g.at_time(t).stiffness - b.stiffness).abs() <= 1e-9 * g.k_max);
        prop_assert!((g.at_time(t).rest_angle - b.rest_angle).abs() <= 1e-9);
    }

    #[test]
    fn carriage_stays_on_the_shaft(t in 0.0..1000.0f64) {
        let mech = MechanismConfig::default();
        let x = carriage_position(t, &mech);
        prop_assert!(x >= 0.0 && x <= mech.stroke_length() + 1e-15);
        prop_assert!(x <= mech.shaft_travel);
        prop_assert!((carriage_position(t + mech.period(), &mech) - x).abs() < 1e-9);
    }
}
