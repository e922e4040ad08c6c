//! Register-mapped SVM core.
//!
//! Word-addressed 32-bit register file:
//!
//! | offset            | name       | access | meaning                                  |
//! |-------------------|------------|--------|------------------------------------------|
//! | 0                 | CTRL       | rw     | bit 0 START (self-clearing)              |
//! | 1                 | STATUS     | ro     | bit 0 DONE, bit 1 IDLE                   |
//! | 2                 | DIM        | ro     | feature count of the loaded module       |
//! | 128               | RESULT     | ro     | +1 / -1 as a signed word                 |
//! | 129, 130          | DISTANCE   | ro     | f64 bit pattern, low word first          |
//! | 256 + 2i, 257 + 2i| FEATURE[i] | rw     | f64 bit pattern, low word first          |
//!
//! Features are held at double width so the datapath reproduces the software
//! decision value exactly.

use crate::error::{Error, Result};
use crate::perf::{core_latency_cycles, LatencyParams};
use crate::svm::{classify, ClassLabel, DecisionOutcome, FeatureVector, WeightArtifact};

pub const REG_CTRL: usize = 0;
pub const REG_STATUS: usize = 1;
pub const REG_DIM: usize = 2;
pub const REG_RESULT: usize = 128;
pub const REG_DISTANCE_LO: usize = 129;
pub const REG_DISTANCE_HI: usize = 130;
pub const REG_FEATURE_BASE: usize = 256;

pub const CTRL_START: u32 = 1;
pub const STATUS_DONE: u32 = 1;
pub const STATUS_IDLE: u32 = 2;

/// Largest feature count the input window can hold.
pub const MAX_FEATURES: usize = 1024;
const REG_WORDS: usize = REG_FEATURE_BASE + 2 * MAX_FEATURES;

pub fn feature_reg(i: usize) -> usize {
    REG_FEATURE_BASE + 2 * i
}

/// One core instance: loaded weights plus its register file.
#[derive(Debug, Clone, PartialEq)]
pub struct SvmCore {
    weights: WeightArtifact,
    regs: Vec<u32>,
}

impl SvmCore {
    pub fn new(weights: WeightArtifact) -> Result<Self> {
        if weights.dimension() > MAX_FEATURES {
            return Err(Error::Structural(format!(
                "module has {} features, register window holds {MAX_FEATURES}",
                weights.dimension()
            )));
        }
        let mut regs = vec![0u32; REG_WORDS];
        regs[REG_STATUS] = STATUS_IDLE;
        regs[REG_DIM] = weights.dimension() as u32;
        Ok(SvmCore { weights, regs })
    }

    pub fn weights(&self) -> &WeightArtifact {
        &self.weights
    }

    pub fn dimension(&self) -> usize {
        self.weights.dimension()
    }

    fn check(&self, offset: usize) -> Result<()> {
        if offset >= REG_WORDS {
            return Err(Error::Structural(format!("register offset {offset} out of range")));
        }
        Ok(())
    }

    pub fn read(&self, offset: usize) -> Result<u32> {
        self.check(offset)?;
        Ok(self.regs[offset])
    }

    /// Host write. Returns `true` when the write raised START; the caller
    /// then drives [`SvmCore::execute`].
    pub fn write(&mut self, offset: usize, value: u32) -> Result<bool> {
        self.check(offset)?;
        let window = feature_reg(0)..feature_reg(self.dimension());
        match offset {
            REG_CTRL => {
                self.regs[REG_CTRL] = value;
                Ok(value & CTRL_START != 0)
            }
            o if window.contains(&o) => {
                self.regs[o] = value;
                Ok(false)
            }
            o => Err(Error::Structural(format!("register {o} is not writable"))),
        }
    }

    pub fn write_f64(&mut self, lo: usize, v: f64) -> Result<()> {
        let bits = v.to_bits();
        self.write(lo, bits as u32)?;
        self.write(lo + 1, (bits >> 32) as u32)?;
        Ok(())
    }

    pub fn read_f64(&self, lo: usize) -> Result<f64> {
        let bits = self.read(lo)? as u64 | (self.read(lo + 1)? as u64) << 32;
        Ok(f64::from_bits(bits))
    }

    /// Runs the datapath on the current input window. Clears START, sets
    /// DONE, latches RESULT and DISTANCE; returns the outcome and cycle cost.
    pub fn execute(&mut self, latency: &LatencyParams) -> Result<(DecisionOutcome, u64)> {
        let x: Vec<f64> = (0..self.dimension())
            .map(|i| self.read_f64(feature_reg(i)))
            .collect::<Result<_>>()?;
        // Arbitrary register contents may decode to NaN/inf; the datapath
        // treats those like any other value and reports the resulting sign.
        let outcome = match FeatureVector::new(x.clone()) {
            Ok(fv) => classify(&self.weights, &fv)?,
            Err(_) => {
                let d = self.weights.ac().iter().zip(&x).map(|(a, b)| a * b).sum::<f64>()
                    - self.weights.bias();
                DecisionOutcome::from_distance(d)
            }
        };
        self.regs[REG_CTRL] &= !CTRL_START;
        self.regs[REG_RESULT] = outcome.label.value() as i32 as u32;
        let bits = outcome.distance.to_bits();
        self.regs[REG_DISTANCE_LO] = bits as u32;
        self.regs[REG_DISTANCE_HI] = (bits >> 32) as u32;
        self.regs[REG_STATUS] = STATUS_DONE | STATUS_IDLE;
        Ok((outcome, core_latency_cycles(self.dimension(), latency)))
    }

    /// Host-side transaction: write features, raise START, poll DONE, read
    /// RESULT and DISTANCE back through the register interface.
    pub fn host_run(&mut self, x: &FeatureVector, latency: &LatencyParams) -> Result<(DecisionOutcome, u64)> {
        if x.dimension() != self.dimension() {
            return Err(Error::dim(self.dimension(), x.dimension()));
        }
        for (i, v) in x.values().iter().enumerate() {
            self.write_f64(feature_reg(i), *v)?;
        }
        let started = self.write(REG_CTRL, CTRL_START)?;
        debug_assert!(started);
        let (_, cycles) = self.execute(latency)?;
        if self.read(REG_STATUS)? & STATUS_DONE == 0 {
            return Err(Error::Structural("core did not signal DONE".into()));
        }
        let label = match self.read(REG_RESULT)? as i32 {
            1 => ClassLabel::Positive,
            -1 => ClassLabel::Negative,
            r => return Err(Error::Structural(format!("RESULT register holds {r}"))),
        };
        let distance = self.read_f64(REG_DISTANCE_LO)?;
        Ok((DecisionOutcome { label, distance }, cycles))
    }
}
