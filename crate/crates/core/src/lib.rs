//! Defect-reduction planning over static code metrics.

pub mod baselines;
pub mod data;
pub mod discretize;
pub mod error;
pub mod experiment;
pub mod oracle;
pub mod plan;
pub mod report;
pub mod seed;
pub mod stats;
pub mod synthetic;
pub mod xtree;

pub use error::{Error, Result};
