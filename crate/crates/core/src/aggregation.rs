//! Aggregated p-values for "predictor `i` is not causal" and intersections thereof.
//!
//! `p*_S = max { p_I : I ⊆ [m] \ S }`. The maximum is read from a precomputed
//! subset-max transform, so each query is a single lookup at the complement.

use crate::error::{IcpError, Result};
use crate::subset::{subset_max_transform, PValueTable, SubsetMask};

#[derive(Clone, Debug)]
pub struct AggregatedPValues {
    m: usize,
    /// `subset_max[T] = max_{I ⊆ T} p_I`
    subset_max: Vec<f64>,
    p_star_single: Vec<f64>,
    table_max: f64,
}

impl AggregatedPValues {
    pub fn new(table: &PValueTable) -> Self {
        let m = table.m();
        let subset_max = subset_max_transform(table);
        let full = (1usize << m) - 1;
        let p_star_single = (0..m).map(|i| subset_max[full ^ (1 << i)]).collect();
        let table_max = subset_max[full];
        Self { m, subset_max, p_star_single, table_max }
    }

    pub fn m(&self) -> usize {
        self.m
    }

    /// `p*_S`.
    pub fn p_star_set(&self, s: SubsetMask) -> f64 {
        self.p_star_bits(s.bits())
    }

    pub(crate) fn p_star_bits(&self, bits: u32) -> f64 {
        let full = (1usize << self.m) - 1;
        self.subset_max[full ^ bits as usize]
    }

    /// `p*_i` for a 0-based predictor index.
    pub fn p_star_single(&self, i: usize) -> Result<f64> {
        self.p_star_single
            .get(i)
            .copied()
            .ok_or_else(|| IcpError::Config(format!("predictor index {} out of range 1..={}", i + 1, self.m)))
    }

    pub fn p_star_all(&self) -> &[f64] {
        &self.p_star_single
    }

    /// True when every `p_S <= tau`.
    pub fn all_rejected(&self, tau: f64) -> bool {
        self.table_max <= tau
    }

    /// `max(p*_i, prod_S 1[p_S <= tau])`.
    pub fn p_tilde_single(&self, i: usize, tau: f64) -> Result<f64> {
        if !(tau > 0.0 && tau < 1.0) {
            return Err(IcpError::Config(format!("tau must lie in (0, 1), got {tau}")));
        }
        let p = self.p_star_single(i)?;
        Ok(if self.all_rejected(tau) { 1.0 } else { p })
    }

    pub fn p_tilde_all(&self, tau: f64) -> Result<Vec<f64>> {
        (0..self.m).map(|i| self.p_tilde_single(i, tau)).collect()
    }
}

/// `p*_S` computed straight from the table.
pub fn p_star_set(table: &PValueTable, s: SubsetMask) -> f64 {
    AggregatedPValues::new(table).p_star_set(s)
}

pub fn p_star_single(table: &PValueTable, i: usize) -> Result<f64> {
    AggregatedPValues::new(table).p_star_single(i)
}

pub fn p_tilde_single(table: &PValueTable, i: usize, tau: f64) -> Result<f64> {
    AggregatedPValues::new(table).p_tilde_single(i, tau)
}
