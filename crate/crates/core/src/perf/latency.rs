use serde::{Deserialize, Serialize};

use crate::cascade::CascadeSpec;
use crate::error::{Error, Result};

/// Cycle model of the dot-product loop.
///
/// The loop makes `features + 1` trips. Sequentially each trip costs
/// `iteration_latency`; pipelined, the first result appears after
/// `pipeline_depth` cycles and the remaining trips issue every
/// `initiation_interval` cycles. `fixed_overhead` covers interface handshake.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LatencyParams {
    pub pipelined: bool,
    pub iteration_latency: u64,
    pub initiation_interval: u64,
    pub pipeline_depth: u64,
    pub fixed_overhead: u64,
}

impl LatencyParams {
    /// 28 trips * 9 + 26 = 278 cycles at 27 features.
    pub const fn sequential_default() -> Self {
        LatencyParams {
            pipelined: false,
            iteration_latency: 9,
            initiation_interval: 5,
            pipeline_depth: 13,
            fixed_overhead: 26,
        }
    }

    /// 13 + 27 * 5 = 148 cycles at 27 features.
    pub const fn pipelined_default() -> Self {
        LatencyParams {
            pipelined: true,
            iteration_latency: 9,
            initiation_interval: 5,
            pipeline_depth: 13,
            fixed_overhead: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.pipelined && self.initiation_interval == 0 {
            return Err(Error::Structural("initiation interval must be at least 1".into()));
        }
        Ok(())
    }
}

impl Default for LatencyParams {
    fn default() -> Self {
        LatencyParams::pipelined_default()
    }
}

pub fn core_latency_cycles(num_features: usize, p: &LatencyParams) -> u64 {
    let trips = num_features as u64 + 1;
    if p.pipelined {
        p.pipeline_depth + (trips - 1) * p.initiation_interval + p.fixed_overhead
    } else {
        trips * p.iteration_latency + p.fixed_overhead
    }
}

pub fn processing_time(cycles: u64, clock_hz: f64) -> f64 {
    cycles as f64 / clock_hz
}

/// Compute time for an instance that left the cascade at `exit_stage`
/// (1-based), excluding any reconfiguration.
pub fn cascade_processing_time(
    spec: &CascadeSpec,
    exit_stage: usize,
    clock_hz: f64,
    p: &LatencyParams,
) -> Result<f64> {
    if exit_stage == 0 || exit_stage > spec.len() {
        return Err(Error::Structural(format!(
            "exit stage {exit_stage} outside 1..={}",
            spec.len()
        )));
    }
    Ok(spec.stages()[..exit_stage]
        .iter()
        .map(|s| processing_time(core_latency_cycles(s.weights.dimension(), p), clock_hz))
        .sum())
}

pub fn speedup_vs_software(hw_time: f64, baseline_time: f64) -> Result<f64> {
    if !(hw_time > 0.0 && baseline_time > 0.0) {
        return Err(Error::Structural("times must be positive".into()));
    }
    Ok(baseline_time / hw_time)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::svm::WeightArtifact;

    #[test]
    fn calibrated_totals() {
        assert_eq!(core_latency_cycles(27, &LatencyParams::sequential_default()), 278);
        assert_eq!(core_latency_cycles(27, &LatencyParams::pipelined_default()), 148);
    }

    #[test]
    fn thirteen_features_by_hand() {
        // trips = 14: 14*9 + 26 = 152; 13 + 13*5 = 78
        assert_eq!(core_latency_cycles(13, &LatencyParams::sequential_default()), 152);
        assert_eq!(core_latency_cycles(13, &LatencyParams::pipelined_default()), 78);
    }

    #[test]
    fn monotone_and_pipelining_wins() {
        let (s, p) = (LatencyParams::sequential_default(), LatencyParams::pipelined_default());
        for n in 1..512 {
            assert!(core_latency_cycles(n + 1, &s) > core_latency_cycles(n, &s));
            assert!(core_latency_cycles(n + 1, &p) > core_latency_cycles(n, &p));
            if n + 1 >= 4 {
                assert!(core_latency_cycles(n, &p) < core_latency_cycles(n, &s));
            }
        }
    }

    #[test]
    fn processing_times() {
        assert_eq!(processing_time(148, 100e6), 1.48e-6);
        assert_eq!(processing_time(0, 100e6), 0.0);
        assert!((processing_time(148, 250e6) - 0.592e-6).abs() < 1e-18);
    }

    #[test]
    fn cascade_times() {
        let w = |n: &str| WeightArtifact::new(n, vec![0.0; 27], 0.0).unwrap();
        let spec = CascadeSpec::from_weights([w("M"), w("N")]).unwrap();
        let p = LatencyParams::default();
        assert_eq!(cascade_processing_time(&spec, 1, 100e6, &p).unwrap(), 1.48e-6);
        assert_eq!(cascade_processing_time(&spec, 2, 100e6, &p).unwrap(), 2.96e-6);
        assert!(cascade_processing_time(&spec, 3, 100e6, &p).is_err());
        let three = CascadeSpec::from_weights([w("A"), w("B"), w("C")]).unwrap();
        let one = processing_time(148, 100e6);
        assert!((cascade_processing_time(&three, 3, 100e6, &p).unwrap() - 3.0 * one).abs() < 1e-20);
    }

    #[test]
    fn speedup() {
        assert_eq!(speedup_vs_software(1.8e-6, 9.0e-6).unwrap(), 5.0);
        assert_eq!(speedup_vs_software(2.0, 2.0).unwrap(), 1.0);
        assert_eq!(speedup_vs_software(1.0, 8.0).unwrap() * 2.0, speedup_vs_software(0.5, 8.0).unwrap());
        assert!(speedup_vs_software(0.0, 1.0).is_err());
    }
}
