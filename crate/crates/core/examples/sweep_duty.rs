//! Brute-force objective over the power-stroke duty cycle.

use flexswim::actuation::GaitSchedule;
use flexswim::dynamics::SimSettings;
use flexswim::kinematics::RobotConfig;
use flexswim::optimize::{sweep_grid, GridSpec, ParamName};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let config = RobotConfig::default();
    let gait = GaitSchedule::default();
    let settings = SimSettings::for_period(gait.period);

    let grid = GridSpec::linspace(ParamName::Duty, 0.2, 0.8, 11);
    let table = sweep_grid(&grid, &gait, &config, &settings)?;
    for row in &table.rows {
        match row.objective {
            Some(v) => println!("duty {:.2}  {:.4} mm/cycle", row.params.duty, v * 1e3),
            None => println!("duty {:.2}  failed: {:?}", row.params.duty, row.error),
        }
    }
    if let Some(best) = table.best() {
        println!("best duty {:.2}", best.params.duty);
    }
    Ok(())
}
