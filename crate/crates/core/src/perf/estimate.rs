//! Resource and power estimation for the system variants.
//!
//! Defaults are solved from measured implementation results: the monolithic
//! and dual-core rows fix `base` and `per_core` by a two-equation linear
//! solve, the single-partition rows fix the partition margin, and the
//! timer-included monolithic row fixes the timer footprint.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fabric::{Device, FootprintDelta, ResourceFootprint};

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SystemDescriptor {
    pub cores: u32,
    /// Single reconfigurable partition hosting one core at a time.
    pub dpr: bool,
    /// Include the cycle-counter peripheral.
    pub timer: bool,
    /// Optional key into the per-variant correction table.
    pub variant: Option<String>,
}

impl SystemDescriptor {
    pub fn monolithic() -> Self {
        SystemDescriptor {
            cores: 1,
            dpr: false,
            timer: false,
            variant: None,
        }
    }

    pub fn cascade(cores: u32) -> Self {
        SystemDescriptor {
            cores,
            ..SystemDescriptor::monolithic()
        }
    }

    pub fn dpr() -> Self {
        SystemDescriptor {
            dpr: true,
            ..SystemDescriptor::monolithic()
        }
    }

    pub fn with_timer(mut self, timer: bool) -> Self {
        self.timer = timer;
        self
    }

    pub fn with_variant(mut self, variant: impl Into<String>) -> Self {
        self.variant = Some(variant.into());
        self
    }

    fn validate(&self) -> Result<()> {
        if self.cores == 0 {
            return Err(Error::Structural("system needs at least one core".into()));
        }
        if self.dpr && self.cores != 1 {
            return Err(Error::Structural(
                "a reconfigurable system hosts exactly one loaded core".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResourceModelParams {
    /// Static wrapper: processing-system glue and interconnect.
    pub base: ResourceFootprint,
    pub per_core: ResourceFootprint,
    pub dpr_margin: ResourceFootprint,
    pub timer: ResourceFootprint,
    /// Per-variant corrections applied after the linear model.
    pub corrections: BTreeMap<String, FootprintDelta>,
}

impl Default for ResourceModelParams {
    fn default() -> Self {
        let mut corrections = BTreeMap::new();
        corrections.insert(
            "N".to_string(),
            FootprintDelta {
                luts: -2,
                ..Default::default()
            },
        );
        corrections.insert(
            "RM-N".to_string(),
            FootprintDelta {
                luts: -5,
                ..Default::default()
            },
        );
        ResourceModelParams {
            base: ResourceFootprint::new(307, 238, 68, 0, 0),
            per_core: ResourceFootprint::new(739, 620, 2, 1, 5),
            dpr_margin: ResourceFootprint::new(4, 9, 0, 0, 0),
            timer: ResourceFootprint::new(260, 590, 0, 0, 0),
            corrections,
        }
    }
}

pub fn estimate_resources(
    desc: &SystemDescriptor,
    params: &ResourceModelParams,
    device: &Device,
) -> Result<ResourceFootprint> {
    desc.validate()?;
    let mut total = params.base + params.per_core.scale(desc.cores as u64);
    if desc.dpr {
        total = total + params.dpr_margin;
    }
    if desc.timer {
        total = total + params.timer;
    }
    if let Some(v) = &desc.variant {
        let delta = params
            .corrections
            .get(v)
            .ok_or_else(|| Error::Structural(format!("unknown variant `{v}`")))?;
        total = total.apply(*delta);
    }
    total.check_fits(&device.capacity)?;
    Ok(total)
}

/// Utilization in hundredths of a percent, rounded half up.
pub fn utilization_hundredths(used: u64, capacity: u64) -> u64 {
    (used as u128 * 10_000 * 2 + capacity as u128).div_euclid(2 * capacity as u128) as u64
}

/// Utilization as printed in implementation reports: the two-decimal figure
/// is rounded half up to one decimal and a trailing `.0` is dropped
/// (`1046 / 106400 -> "1"`, `10 / 220 -> "4.6"`).
pub fn utilization_percent(used: u64, capacity: u64) -> String {
    let tenths = (utilization_hundredths(used, capacity) + 5) / 10;
    if tenths % 10 == 0 {
        format!("{}", tenths / 10)
    } else {
        format!("{}.{}", tenths / 10, tenths % 10)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PowerModelParams {
    pub base_watts: f64,
    pub per_core_watts: f64,
    pub dpr_overhead_watts: f64,
    pub static_fraction: f64,
    pub ps_fraction_of_dynamic: f64,
}

impl Default for PowerModelParams {
    fn default() -> Self {
        PowerModelParams {
            base_watts: 1.52,
            per_core_watts: 0.02,
            dpr_overhead_watts: 0.01,
            static_fraction: 0.10,
            ps_fraction_of_dynamic: 0.95,
        }
    }
}

impl PowerModelParams {
    pub fn validate(&self) -> Result<()> {
        let frac_ok = |f: f64| f > 0.0 && f < 1.0;
        if !(frac_ok(self.static_fraction) && frac_ok(self.ps_fraction_of_dynamic)) {
            return Err(Error::Structural("power fractions must lie in (0, 1)".into()));
        }
        if [self.base_watts, self.per_core_watts, self.dpr_overhead_watts]
            .iter()
            .any(|w| !(w.is_finite() && *w >= 0.0))
        {
            return Err(Error::Structural("power terms must be finite and nonnegative".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerEstimate {
    pub total_watts: f64,
    pub static_watts: f64,
    pub ps_dynamic_watts: f64,
    pub pl_dynamic_watts: f64,
}

pub fn estimate_power(desc: &SystemDescriptor, params: &PowerModelParams) -> Result<PowerEstimate> {
    desc.validate()?;
    params.validate()?;
    let mut total = params.base_watts + desc.cores as f64 * params.per_core_watts;
    if desc.dpr {
        total += params.dpr_overhead_watts;
    }
    let static_watts = params.static_fraction * total;
    let dynamic = total - static_watts;
    let ps = params.ps_fraction_of_dynamic * dynamic;
    Ok(PowerEstimate {
        total_watts: total,
        static_watts,
        ps_dynamic_watts: ps,
        pl_dynamic_watts: dynamic - ps,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn est(d: SystemDescriptor) -> ResourceFootprint {
        estimate_resources(&d, &ResourceModelParams::default(), &Device::xc7z020()).unwrap()
    }

    #[test]
    fn linear_solve_of_defaults() {
        let mono = ResourceFootprint::new(1046, 858, 70, 1, 5);
        let dual = ResourceFootprint::new(1785, 1478, 72, 2, 10);
        let per_core = dual.checked_sub(mono).unwrap();
        let base = mono.checked_sub(per_core).unwrap();
        let p = ResourceModelParams::default();
        assert_eq!(per_core, p.per_core);
        assert_eq!(base, p.base);
        // Timer: timer-included monolithic minus plain monolithic.
        assert_eq!(
            ResourceFootprint::new(1306, 1448, 70, 1, 5).checked_sub(mono).unwrap(),
            p.timer
        );
    }

    #[test]
    fn reproduces_rows() {
        assert_eq!(est(SystemDescriptor::monolithic()), ResourceFootprint::new(1046, 858, 70, 1, 5));
        assert_eq!(
            est(SystemDescriptor::monolithic().with_variant("N")),
            ResourceFootprint::new(1046, 856, 70, 1, 5)
        );
        assert_eq!(est(SystemDescriptor::cascade(2)), ResourceFootprint::new(1785, 1478, 72, 2, 10));
        assert_eq!(est(SystemDescriptor::dpr()), ResourceFootprint::new(1050, 867, 70, 1, 5));
        assert_eq!(
            est(SystemDescriptor::dpr().with_variant("RM-N")),
            ResourceFootprint::new(1050, 862, 70, 1, 5)
        );
        assert_eq!(
            est(SystemDescriptor::dpr().with_timer(true)),
            ResourceFootprint::new(1310, 1457, 70, 1, 5)
        );
    }

    #[test]
    fn additivity() {
        let p = ResourceModelParams::default();
        for n in 1..40 {
            let a = est(SystemDescriptor::cascade(n));
            let b = est(SystemDescriptor::cascade(n + 1));
            assert_eq!(b.checked_sub(a), Some(p.per_core));
        }
    }

    #[test]
    fn capacity_and_descriptor_errors() {
        let p = ResourceModelParams::default();
        let d = Device::xc7z020();
        let e = estimate_resources(&SystemDescriptor::cascade(45), &p, &d).unwrap_err();
        match e {
            Error::Capacity { violations } => {
                assert_eq!(violations[0].resource, "dsp");
            }
            e => panic!("{e:?}"),
        }
        let mut bad = SystemDescriptor::dpr();
        bad.cores = 2;
        assert!(estimate_resources(&bad, &p, &d).is_err());
        assert!(estimate_resources(&SystemDescriptor::cascade(0), &p, &d).is_err());
        assert!(estimate_resources(&SystemDescriptor::monolithic().with_variant("Q"), &p, &d).is_err());
    }

    #[test]
    fn printed_percentages() {
        let cases = [
            (1046, 106_400, "1"),
            (858, 53_200, "1.6"),
            (70, 17_400, "0.4"),
            (1, 140, "0.7"),
            (5, 220, "2.3"),
            (1785, 106_400, "1.7"),
            (1478, 53_200, "2.8"),
            (72, 17_400, "0.4"),
            (2, 140, "1.4"),
            (10, 220, "4.6"),
            (1050, 106_400, "1"),
            (867, 53_200, "1.6"),
        ];
        for (u, c, s) in cases {
            assert_eq!(utilization_percent(u, c), s, "{u}/{c}");
        }
    }

    #[test]
    fn power_rows() {
        let p = PowerModelParams::default();
        assert_eq!(estimate_power(&SystemDescriptor::monolithic(), &p).unwrap().total_watts, 1.54);
        assert_eq!(estimate_power(&SystemDescriptor::cascade(2), &p).unwrap().total_watts, 1.56);
        assert_eq!(estimate_power(&SystemDescriptor::dpr(), &p).unwrap().total_watts, 1.55);
    }

    #[test]
    fn power_breakdown_and_additivity() {
        let p = PowerModelParams::default();
        for n in 1..20 {
            let a = estimate_power(&SystemDescriptor::cascade(n), &p).unwrap();
            let b = estimate_power(&SystemDescriptor::cascade(n + 1), &p).unwrap();
            assert!((b.total_watts - a.total_watts - p.per_core_watts).abs() < 1e-12);
            let sum = a.static_watts + a.ps_dynamic_watts + a.pl_dynamic_watts;
            assert!((sum - a.total_watts).abs() <= 1e-12);
            assert!((a.static_watts / a.total_watts - 0.10).abs() < 1e-12);
        }
    }
}
