//! Evaluation tooling for promptable video segmentation.

pub mod automask;
pub mod dataset;
pub mod error;
pub mod frames;
pub mod mask;
pub mod memory;
pub mod metrics;
pub mod prompt;
pub mod protocols;
pub mod report;
pub mod segmenter;

pub use error::{Error, Result};
