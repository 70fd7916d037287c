//! File formats, run configuration and pipelines for the tactile SLAM
//! workbench. The numerics live in `tslam-core`.

pub mod config;
pub mod error;
pub mod formats;
pub mod manifest;
pub mod meshio;
pub mod pipeline;
pub mod report;

pub use config::RunConfig;
pub use error::{Result, WorkbenchError};
pub use pipeline::{PolicyChoice, Workbench};
