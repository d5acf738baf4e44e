//! Host-side tooling for the fbmstcn speech enhancer: WAV and checkpoint
//! formats, run configuration, training manifests, timing, reports and the
//! command line.

pub mod acceptance;
pub mod checkpoint;
pub mod cli;
pub mod config_file;
pub mod error;
pub mod manifest;
pub mod report;
pub mod rtf;
pub mod wav;

pub use error::{AppError, Result};
