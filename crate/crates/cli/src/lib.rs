//! File formats and subcommands behind the `lsh-quickshift` binary.

pub mod commands;
pub mod csv_input;
pub mod error;
pub mod ppm;
pub mod report;

pub use commands::{cmd_bench, cmd_cluster, cmd_modes, cmd_segment, run, Cli, Command};
pub use csv_input::load_csv;
pub use error::{CliError, Result};
pub use ppm::{load_ppm, Image, ImageFeatureSpec};
pub use report::RunReport;
