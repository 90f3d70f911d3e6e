//! Low-Reynolds-number simulation of a flagellated robot whose joint stiffness
//! switches during each beat. Resistive-force drag, overdamped implicit
//! dynamics, gait presets, metrics, sweeps and a bounded optimizer.

pub mod actuation;
pub mod cli;
pub mod dynamics;
pub mod error;
pub mod experiments;
pub mod hydrodynamics;
pub mod io;
pub mod kinematics;
pub mod optimize;
pub mod verify;
