//! Fractionally integrated processes with nonlinear short-memory innovations:
//! simulation, invariance-principle limits, and long-memory tests.
//!
//! Shared types are re-exported at the crate root.

pub mod error;
pub mod fbm;
pub mod fft;
pub mod fracops;
pub mod harness;
pub mod innovations;
pub mod memtests;
mod num_serde;
pub mod quad;
pub mod seed;
pub mod series;

pub use error::{Error, Result};
pub use fbm::{FbmPath, Functional, QuantileTable, TableStore};
pub use fracops::{FracSpec, ProcessKind, Truncation};
pub use harness::{ExperimentConfig, McReport};
pub use innovations::{InnovationModel, InnovationProcess, InnovationSpec, Noise};
pub use memtests::{LrvEstimate, Statistic, TestReport};
pub use series::SeriesPath;
