//! Library half of the `qsplit` command: scenario files, model builders,
//! the run pipeline and the verification battery.

pub mod compare;
pub mod config;
pub mod error;
pub mod matrix_io;
pub mod models;
pub mod run;
pub mod verify;

pub use error::{CliError, Result};
