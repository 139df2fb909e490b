//! Intensity histograms.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::volume::min_max;

/// Equal-width bins over `[lo, hi]`; bin `k` covers `[lo + k·w, lo + (k+1)·w)`
/// and the last bin is closed on the right.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Histogram {
    pub lo: f64,
    pub hi: f64,
    pub counts: Vec<u64>,
}

impl Histogram {
    /// Histogram of `values`. With `range = None` the range is the data
    /// min/max; a constant input collapses to a single bin.
    pub fn compute(values: &[f64], nbins: usize, range: Option<(f64, f64)>) -> Result<Self> {
        if nbins == 0 {
            return Err(Error::invalid("histogram needs at least one bin"));
        }
        let (lo, hi) = match range {
            Some((lo, hi)) => {
                if !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
                    return Err(Error::invalid(alloc::format!("histogram range [{lo}, {hi}] is empty")));
                }
                (lo, hi)
            }
            None => match min_max(values) {
                None => return Ok(Histogram { lo: 0.0, hi: 0.0, counts: vec![0] }),
                Some((lo, hi)) if lo == hi => {
                    let n = values.iter().filter(|v| v.is_finite()).count() as u64;
                    return Ok(Histogram {
                        lo: lo as f64,
                        hi: hi as f64,
                        counts: vec![n],
                    });
                }
                Some((lo, hi)) => (lo as f64, hi as f64),
            },
        };
        let mut counts = vec![0u64; nbins];
        let width = (hi - lo) / nbins as f64;
        for &v in values {
            let v = v as f64;
            if !(v >= lo && v <= hi) {
                continue;
            }
            let k = if v == hi {
                nbins - 1
            } else {
                (((v - lo) / width) as usize).min(nbins - 1)
            };
            counts[k] += 1;
        }
        Ok(Histogram { lo, hi, counts })
    }

    pub fn bin_width(&self) -> f64 {
        (self.hi - self.lo) / self.counts.len() as f64
    }

    /// Lower edge of bin `k` (`k == len` gives `hi`).
    pub fn edge(&self, k: usize) -> f64 {
        if k == self.counts.len() {
            self.hi
        } else {
            self.lo + k as f64 * self.bin_width()
        }
    }

    pub fn center(&self, k: usize) -> f64 {
        self.lo + (k as f64 + 0.5) * self.bin_width()
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }
}
