//! File formats, parameter sweeps and the oracle verification suite on top
//! of [`thermal_entangle_core`].

pub mod commands;
pub mod config;
pub mod error;
pub mod table;
pub mod verify;

pub use config::{Format, Grid, Mode, RunConfig};
pub use error::CliError;
pub use table::Table;
