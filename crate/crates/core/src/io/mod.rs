//! Run documents, trajectory files and plots.

pub mod config;
pub mod csv;
pub mod svg;

pub use config::{parse_config, DocumentError, RunConfig, CONFIG_VERSION};
pub use csv::{read_trajectory_csv, trajectory_csv, write_trajectory_csv, CsvTable};
pub use svg::render_trajectory_svg;
