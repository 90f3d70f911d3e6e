//! Carriage travel and the stiffness / rest-angle program over one cycle,
//! for each ramp shape.

use flexswim::actuation::{carriage_position, gait_evaluate, GaitSchedule, MechanismConfig, Ramp};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mech = MechanismConfig::default();
    println!(
        "carriage: {:.3} mm/s, stroke {:.3} mm of {:.0} mm travel, period {} s",
        mech.carriage_speed() * 1e3,
        mech.stroke_length() * 1e3,
        mech.shaft_travel * 1e3,
        mech.period()
    );

    let base = GaitSchedule::default();
    println!(
        "\n{:>5} {:>12} {:>10} {:>12} {:>12} {:>12}",
        "phase", "carriage mm", "rest rad", "k geometric", "k cosine", "k smoothed"
    );
    for i in 0..=10 {
        let phase = (i as f64 / 10.0).min(0.999);
        let at = |ramp| gait_evaluate(&GaitSchedule { ramp, ..base }, phase);
        let g = at(Ramp::Geometric)?;
        println!(
            "{phase:>5.3} {:>12.3} {:>10.4} {:>12.4e} {:>12.4e} {:>12.4e}",
            carriage_position(phase * mech.period(), &mech) * 1e3,
            g.rest_angle,
            g.stiffness,
            at(Ramp::Cosine)?.stiffness,
            at(Ramp::LinearSmoothed)?.stiffness,
        );
    }
    Ok(())
}
