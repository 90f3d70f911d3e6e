//! Slender-rod drag coefficients, the resistance matrix of the robot and the
//! Reynolds number of its swimming speed.

use flexswim::hydrodynamics::{assemble_resistance_matrix, reynolds_number, rft_coefficients, DragModel};
use flexswim::kinematics::{GeneralizedCoords, RobotConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let config = RobotConfig::default();
    let flag = rft_coefficients(&config.fluid, &config.flagella[0], config.drag_ratio)?;
    let body = DragModel::body_coefficients(&config)?;
    println!("flagellum: c_t = {:.4} N·s/m², c_n = {:.4} N·s/m²", flag.c_t, flag.c_n);
    println!("body:      c_t = {:.4} N·s/m², c_n = {:.4} N·s/m²", body.c_t, body.c_n);

    let q = GeneralizedCoords::uniform(&config, 0.5);
    let r = assemble_resistance_matrix(&q, &config)?;
    let eig = r.0.clone().symmetric_eigenvalues();
    println!(
        "R is {n}x{n}; eigenvalues span [{:.3e}, {:.3e}]",
        eig.min(),
        eig.max(),
        n = r.dim()
    );
    println!("pose block:\n{:.4}", r.0.view((0, 0), (3, 3)));

    // 7 mm/s over a 12.6 cm body in glycerine
    let re = reynolds_number(7e-4, config.body.length, &config.fluid)?;
    println!("Re = {re:.4}");
    Ok(())
}
