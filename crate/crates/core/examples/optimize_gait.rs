//! Nelder–Mead over duty and bend amplitude, starting at the default gait.
//!
//! ```text
//! cargo run --release --example optimize_gait -- [budget] [seed]
//! ```

use flexswim::actuation::GaitSchedule;
use flexswim::dynamics::SimSettings;
use flexswim::kinematics::RobotConfig;
use flexswim::optimize::{optimize_gait, GaitParams, ParamBounds, ParamName};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let budget: usize = args.next().map(|s| s.parse()).transpose()?.unwrap_or(30);
    let seed: u64 = args.next().map(|s| s.parse()).transpose()?.unwrap_or(1);

    let config = RobotConfig::default();
    let gait = GaitSchedule::default();
    // a coarser step keeps each evaluation cheap
    let settings = SimSettings::for_period(gait.period).with_dt(gait.period / 500.0);

    let bounds = ParamBounds::point(GaitParams::from_gait(&gait))
        .with(ParamName::Duty, 0.2, 0.8)
        .with(ParamName::Beta, 0.3, 1.2);
    let result = optimize_gait(&bounds, budget, seed, &gait, &config, &settings)?;

    for e in &result.history {
        println!(
            "#{:<3} duty {:.3} beta {:.3} -> {} (best {:.4} mm)",
            e.index,
            e.params.duty,
            e.params.beta,
            e.objective.map_or("failed".to_string(), |v| format!("{:.4} mm", v * 1e3)),
            e.best_so_far.unwrap_or(f64::NAN) * 1e3
        );
    }
    let b = result.best_params;
    println!(
        "best: duty {:.3}, beta {:.3}, {:.4} mm/cycle after {} evaluations",
        b.duty,
        b.beta,
        result.best_objective * 1e3,
        result.evaluations
    );
    Ok(())
}
