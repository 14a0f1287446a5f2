pub mod cli;
pub mod config;
pub mod diagnostics;
pub mod dyadic;
pub mod ensembles;
pub mod error;
pub mod linalg;
pub mod thompson;
pub mod ttn;

pub use error::{Error, Result};
