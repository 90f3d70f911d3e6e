//! Forward kinematics of the default four-flagellum robot and one link Jacobian.
//!
//! ```text
//! cargo run --example robot_geometry
//! ```

use flexswim::kinematics::{forward_kinematics, link_jacobian, GeneralizedCoords, RobotConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let config = RobotConfig::default();
    println!(
        "{} flagella, {} links, {} generalized coordinates",
        config.flagella.len(),
        config.link_count(),
        config.dof()
    );

    // every joint bent by 0.3 rad
    let q = GeneralizedCoords::uniform(&config, 0.3);
    let frames = forward_kinematics(&q, &config)?;
    println!("{:>4} {:>10} {:>10} {:>10}", "link", "x (m)", "y (m)", "angle");
    for (i, link) in frames.links.iter().enumerate() {
        println!(
            "{i:>4} {:>10.5} {:>10.5} {:>10.4}",
            link.center.x, link.center.y, link.orientation
        );
    }

    // tip segment of the first flagellum
    let tip = config.flagella[0].n_segments;
    let j = link_jacobian(&q, &config, tip)?;
    println!("\nJacobian of link {tip} (rows vx, vy, omega; first 10 columns):");
    for r in 0..3 {
        let row: Vec<String> = (0..10).map(|c| format!("{:7.4}", j[(r, c)])).collect();
        println!("  {}", row.join(" "));
    }
    Ok(())
}
