//! Trajectory CSV: `t,x,y,phi,phase,k,theta_<flagellum>_<segment>...`, one row per sample.

use std::fs;
use std::io;
use std::path::Path;

use crate::dynamics::Trajectory;
use crate::kinematics::RobotConfig;

pub fn header(config: &RobotConfig) -> Vec<String> {
    let mut cols: Vec<String> = ["t", "x", "y", "phi", "phase", "k"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    for (f, flag) in config.flagella.iter().enumerate() {
        for j in 0..flag.n_segments {
            cols.push(format!("theta_{f}_{j}"));
        }
    }
    cols
}

/// The whole file as text. Values carry 17 significant digits, so they read back exactly.
pub fn trajectory_csv(traj: &Trajectory) -> String {
    let mut out = header(&traj.config).join(",");
    out.push('\n');
    for s in &traj.samples {
        let q = &s.q;
        let row = [s.t, q.x, q.y, q.phi_body, s.phase, s.k]
            .into_iter()
            .chain(q.joint_angles.iter().copied())
            .map(|v| format!("{v:.16e}"))
            .collect::<Vec<_>>()
            .join(",");
        out.push_str(&row);
        out.push('\n');
    }
    out
}

/// Writes the CSV and returns the number of bytes written.
pub fn write_trajectory_csv(traj: &Trajectory, path: &Path) -> io::Result<usize> {
    let text = trajectory_csv(traj);
    fs::write(path, &text)?;
    Ok(text.len())
}

#[derive(Debug, Clone, PartialEq)]
pub struct CsvTable {
    pub header: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

pub fn read_trajectory_csv(text: &str) -> io::Result<CsvTable> {
    let bad = |msg: String| io::Error::new(io::ErrorKind::InvalidData, msg);
    let mut lines = text.lines();
    let header: Vec<String> = lines
        .next()
        .ok_or_else(|| bad("empty file".into()))?
        .split(',')
        .map(str::to_string)
        .collect();
    let rows = lines
        .enumerate()
        .map(|(i, line)| {
            let row: Vec<f64> = line
                .split(',')
                .map(|v| v.parse::<f64>())
                .collect::<Result<_, _>>()
                .map_err(|e| bad(format!("line {}: {e}", i + 2)))?;
            if row.len() != header.len() {
                return Err(bad(format!(
                    "line {}: {} fields, header has {}",
                    i + 2,
                    row.len(),
                    header.len()
                )));
            }
            Ok(row)
        })
        .collect::<io::Result<_>>()?;
    Ok(CsvTable { header, rows })
}
