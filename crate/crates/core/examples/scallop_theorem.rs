//! Reciprocal strokes go nowhere; a stroke that traces a loop in shape space swims.

use flexswim::actuation::GaitSchedule;
use flexswim::dynamics::SimSettings;
use flexswim::experiments::scallop_check;
use flexswim::kinematics::RobotConfig;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let config = RobotConfig::default();
    let gait = GaitSchedule::default();
    let report = scallop_check(&config, &gait, &SimSettings::for_period(gait.period))?;
    for p in report.reciprocal.iter().chain(std::iter::once(&report.control)) {
        println!(
            "{:<18} {:.3e} BL/cycle, at dt/2 {:.3e} (ratio {:.2})",
            p.name, p.residual_bl, p.residual_half_bl, p.shrink_ratio
        );
    }
    println!("{}", if report.passed { "pass" } else { "FAIL" });
    Ok(())
}
