//! Analytical latency, resource and power models.

mod calibration;
mod estimate;
mod latency;
pub mod report;

pub use calibration::Calibration;
pub use estimate::{
    estimate_power, estimate_resources, utilization_hundredths, utilization_percent,
    PowerEstimate, PowerModelParams, ResourceModelParams, SystemDescriptor,
};
pub use latency::{
    cascade_processing_time, core_latency_cycles, processing_time, speedup_vs_software,
    LatencyParams,
};
