use std::fmt;
use std::ops::Add;

use serde::{Deserialize, Serialize};

use crate::error::{CapacityViolation, Error, Result};

/// Counts of fabric resources.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ResourceFootprint {
    pub slices: u64,
    pub luts: u64,
    pub lut_ram: u64,
    pub bram: u64,
    pub dsp: u64,
}

pub const RESOURCE_NAMES: [&str; 5] = ["slices", "luts", "lut_ram", "bram", "dsp"];

impl ResourceFootprint {
    pub const fn new(slices: u64, luts: u64, lut_ram: u64, bram: u64, dsp: u64) -> Self {
        ResourceFootprint {
            slices,
            luts,
            lut_ram,
            bram,
            dsp,
        }
    }

    pub fn to_array(self) -> [u64; 5] {
        [self.slices, self.luts, self.lut_ram, self.bram, self.dsp]
    }

    pub fn from_array(a: [u64; 5]) -> Self {
        ResourceFootprint::new(a[0], a[1], a[2], a[3], a[4])
    }

    fn zip(self, other: Self, f: impl Fn(u64, u64) -> u64) -> Self {
        let (a, b) = (self.to_array(), other.to_array());
        ResourceFootprint::from_array(std::array::from_fn(|i| f(a[i], b[i])))
    }

    /// Component-wise maximum.
    pub fn max(self, other: Self) -> Self {
        self.zip(other, u64::max)
    }

    pub fn scale(self, n: u64) -> Self {
        ResourceFootprint::from_array(self.to_array().map(|v| v * n))
    }

    /// Component-wise difference, `None` if any component would go negative.
    pub fn checked_sub(self, other: Self) -> Option<Self> {
        let (a, b) = (self.to_array(), other.to_array());
        let mut out = [0; 5];
        for i in 0..5 {
            out[i] = a[i].checked_sub(b[i])?;
        }
        Some(ResourceFootprint::from_array(out))
    }

    pub fn apply(self, delta: FootprintDelta) -> Self {
        let (a, d) = (self.to_array(), delta.to_array());
        ResourceFootprint::from_array(std::array::from_fn(|i| a[i].saturating_add_signed(d[i])))
    }

    pub fn is_zero(&self) -> bool {
        self.to_array().iter().all(|&v| v == 0)
    }

    pub fn violations(&self, capacity: &ResourceFootprint) -> Vec<CapacityViolation> {
        let (a, c) = (self.to_array(), capacity.to_array());
        (0..5)
            .filter(|&i| a[i] > c[i])
            .map(|i| CapacityViolation {
                resource: RESOURCE_NAMES[i],
                required: a[i],
                available: c[i],
            })
            .collect()
    }

    pub fn check_fits(&self, capacity: &ResourceFootprint) -> Result<()> {
        let violations = self.violations(capacity);
        if violations.is_empty() {
            Ok(())
        } else {
            Err(Error::Capacity { violations })
        }
    }
}

impl Add for ResourceFootprint {
    type Output = ResourceFootprint;

    fn add(self, rhs: Self) -> Self {
        self.zip(rhs, |a, b| a + b)
    }
}

impl fmt::Display for ResourceFootprint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {} {} {} {}", self.slices, self.luts, self.lut_ram, self.bram, self.dsp)
    }
}

/// Signed per-resource correction.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct FootprintDelta {
    pub slices: i64,
    pub luts: i64,
    pub lut_ram: i64,
    pub bram: i64,
    pub dsp: i64,
}

impl FootprintDelta {
    pub fn to_array(self) -> [i64; 5] {
        [self.slices, self.luts, self.lut_ram, self.bram, self.dsp]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Device {
    pub name: String,
    pub capacity: ResourceFootprint,
    pub clock_hz: f64,
}

impl Device {
    pub fn new(name: impl Into<String>, capacity: ResourceFootprint, clock_hz: f64) -> Result<Self> {
        let name = name.into();
        crate::svm::validate_name(&name)?;
        if capacity.to_array().iter().any(|&v| v == 0) {
            return Err(Error::Structural("device capacity must be positive in every resource".into()));
        }
        if !(clock_hz.is_finite() && clock_hz > 0.0) {
            return Err(Error::Structural(format!("clock must be positive, got {clock_hz}")));
        }
        Ok(Device {
            name,
            capacity,
            clock_hz,
        })
    }

    /// Zynq-7020 (ZC702 board) at 100 MHz.
    pub fn xc7z020() -> Self {
        Device {
            name: "xc7z020".into(),
            capacity: ResourceFootprint::new(106_400, 53_200, 17_400, 140, 220),
            clock_hz: 100e6,
        }
    }
}

impl Default for Device {
    fn default() -> Self {
        Device::xc7z020()
    }
}
