//! Simulate the controlled-flexible gait and write the trajectory as CSV and SVG.
//!
//! ```text
//! cargo run --release --example simulate_swimmer -- [cycles] [out_dir]
//! ```

use std::path::PathBuf;
use std::time::Instant;

use flexswim::actuation::GaitSchedule;
use flexswim::dynamics::{simulate, SimSettings};
use flexswim::experiments::displacement_per_cycle;
use flexswim::io::{render_trajectory_svg, write_trajectory_csv};
use flexswim::kinematics::RobotConfig;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let cycles: usize = args.next().map(|s| s.parse()).transpose()?.unwrap_or(6);
    let out = PathBuf::from(args.next().unwrap_or_else(|| "target/simulate_swimmer".into()));

    let config = RobotConfig::default();
    let gait = GaitSchedule::default();
    let settings = SimSettings::for_period(gait.period);

    let start = Instant::now();
    let traj = simulate(&config, &gait, cycles, &settings)?;
    println!("{} steps in {:.2?}", traj.len() - 1, start.elapsed());

    let m = displacement_per_cycle(&traj)?;
    for (c, d) in m.per_cycle_displacement.iter().enumerate() {
        println!("C{}: {:+.4} mm", c + 1, d * 1e3);
    }
    println!(
        "steady mean {:.4} mm/cycle, cv {:.2e}, net {:.3} mm",
        m.mean * 1e3,
        m.cv(),
        m.net_displacement * 1e3
    );

    std::fs::create_dir_all(&out)?;
    let bytes = write_trajectory_csv(&traj, &out.join("trajectory.csv"))?;
    std::fs::write(out.join("trajectory.svg"), render_trajectory_svg(&traj, &config))?;
    println!("wrote {} ({bytes} bytes of CSV)", out.display());
    Ok(())
}
