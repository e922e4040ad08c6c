//! Cascade linear-SVM inference with a simulated partially reconfigurable
//! accelerator.
//!
//! - [`svm`]: decision function, model/artifact/instance file formats
//! - [`cascade`]: early-exit multi-stage classification and evaluation
//! - [`fabric`]: device, bitstream library, register-mapped core, runtime swaps
//! - [`perf`]: calibrated latency, resource and power models
//! - [`run`]: end-to-end runs in monolithic, cascade and DPR modes
//! - [`synth`]: seeded synthetic models and instance streams

pub mod cascade;
pub mod error;
pub mod fabric;
pub mod perf;
pub mod run;
pub mod svm;
pub mod synth;

pub use error::{Error, ErrorClass, Result};
