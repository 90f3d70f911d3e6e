//! The four tested flagellum configurations side by side.

use flexswim::actuation::{GaitMode, GaitSchedule};
use flexswim::dynamics::SimSettings;
use flexswim::experiments::compare_gaits;
use flexswim::kinematics::RobotConfig;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let config = RobotConfig::default();
    let gait = GaitSchedule::default();
    let settings = SimSettings::for_period(gait.period);
    let report = compare_gaits(&config, &gait, &GaitMode::ALL, 10, &settings)?;

    let body = config.body.length;
    for row in &report.rows {
        let m = &row.metrics;
        println!(
            "{:<22} {:+.4e} BL/cycle  cv {:.3}",
            row.preset.name(),
            m.mean / body,
            m.cv()
        );
    }
    let order: Vec<&str> = report.ordering.iter().map(|m| m.name()).collect();
    println!("ordering: {}", order.join(" > "));
    if let (Some(f), Some(r)) = (report.controlled_over_flexible, report.controlled_over_rigid) {
        println!("controlled / flexible = {f:.2}, controlled / rigid = {r:.0}");
    }
    Ok(())
}
