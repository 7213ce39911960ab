use alloc::vec;
use alloc::vec::Vec;

use crate::{Error, Result};

/// Two-sided 95% normal quantile.
pub const Z_95: f64 = 1.959963984540054;

/// A statistic over time with confidence half-widths.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ExperimentSeries {
    pub times: Vec<f64>,
    pub values: Vec<f64>,
    pub ci_half_widths: Vec<f64>,
    pub n_samples: usize,
    /// Two-sided confidence level of the half-widths.
    pub confidence: f64,
}

impl ExperimentSeries {
    pub fn new(times: Vec<f64>, values: Vec<f64>, ci_half_widths: Vec<f64>, n_samples: usize) -> Result<Self> {
        if times.len() != values.len() {
            return Err(Error::LengthMismatch(times.len(), values.len()));
        }
        if times.len() != ci_half_widths.len() {
            return Err(Error::LengthMismatch(times.len(), ci_half_widths.len()));
        }
        if times.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::invalid("times", "must be strictly increasing"));
        }
        Ok(ExperimentSeries {
            times,
            values,
            ci_half_widths,
            n_samples,
            confidence: 0.95,
        })
    }

    /// A series without uncertainty (deterministic or synthetic values).
    pub fn exact(times: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        let n = values.len();
        Self::new(times, values, vec![0.0; n], 1)
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Batch-means accumulator: samples are routed to one of `n_blocks` blocks
/// and the spread of block means gives the confidence half-width.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockMeans {
    sums: Vec<f64>,
    counts: Vec<u64>,
}

impl BlockMeans {
    pub fn new(n_blocks: usize) -> Self {
        BlockMeans {
            sums: vec![0.0; n_blocks.max(1)],
            counts: vec![0; n_blocks.max(1)],
        }
    }

    pub fn n_blocks(&self) -> usize {
        self.sums.len()
    }

    pub fn push(&mut self, block: usize, value: f64) {
        self.sums[block] += value;
        self.counts[block] += 1;
    }

    /// Adds a pre-reduced partial sum to a block.
    pub fn push_sum(&mut self, block: usize, sum: f64, count: u64) {
        self.sums[block] += sum;
        self.counts[block] += count;
    }

    pub fn count(&self) -> u64 {
        self.counts.iter().sum()
    }

    pub fn mean(&self) -> f64 {
        self.sums.iter().sum::<f64>() / self.count() as f64
    }

    /// `z · sd(block means) / sqrt(#blocks)` over nonempty blocks; 0 with
    /// fewer than two nonempty blocks.
    pub fn ci_half_width(&self, z: f64) -> f64 {
        let means: Vec<f64> = self
            .sums
            .iter()
            .zip(&self.counts)
            .filter(|(_, &c)| c > 0)
            .map(|(s, &c)| s / c as f64)
            .collect();
        let b = means.len();
        if b < 2 {
            return 0.0;
        }
        let m = means.iter().sum::<f64>() / b as f64;
        let var = means.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / (b - 1) as f64;
        z * libm::sqrt(var / b as f64)
    }
}

/// Block of item `i` out of `n` when split into `n_blocks` contiguous blocks.
pub fn block_of(i: usize, n: usize, n_blocks: usize) -> usize {
    ((i as u128 * n_blocks as u128) / n.max(1) as u128) as usize
}
