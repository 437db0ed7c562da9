//! File formats, raw-data ingestion, timing helpers and the command-line
//! front end for bit-merging curves.

#![warn(missing_docs)]

pub mod bench;
pub mod cli;
mod error;
pub mod formats;
pub mod ingest;

pub use bmcurve_core;
pub use error::{CliError, Result};
