//! The ICP discovery set and its two p-value based reformulations.

use serde::Serialize;

use crate::aggregation::AggregatedPValues;
use crate::error::Result;
use crate::invariance::check_alpha;
use crate::subset::{full_bits, PValueTable, SubsetMask};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DiscoveryReport {
    pub alpha: f64,
    pub s_icp: SubsetMask,
    pub s_tilde: SubsetMask,
    pub s_hat: SubsetMask,
    /// Every `p_S <= alpha`; in this regime `s_icp` is empty while `s_hat` is everything.
    pub all_rejected: bool,
}

impl DiscoveryReport {
    pub fn new(table: &PValueTable, alpha: f64) -> Result<Self> {
        check_alpha(alpha)?;
        let agg = AggregatedPValues::new(table);
        Ok(Self {
            alpha,
            s_icp: s_icp(table, alpha)?,
            s_tilde: s_tilde_from(&agg, alpha)?,
            s_hat: s_hat_from(&agg, alpha)?,
            all_rejected: agg.all_rejected(alpha),
        })
    }

    pub fn to_named(&self, names: &[String]) -> NamedDiscoveryReport {
        let named = |s: SubsetMask| s.names(names).into_iter().map(String::from).collect();
        NamedDiscoveryReport {
            alpha: self.alpha,
            s_icp: named(self.s_icp),
            s_tilde: named(self.s_tilde),
            s_hat: named(self.s_hat),
            all_rejected: self.all_rejected,
        }
    }
}

/// Report with predictor names in place of masks, as emitted by the CLI.
#[derive(Clone, Debug, Serialize)]
pub struct NamedDiscoveryReport {
    pub alpha: f64,
    pub s_icp: Vec<String>,
    pub s_tilde: Vec<String>,
    pub s_hat: Vec<String>,
    pub all_rejected: bool,
}

/// Intersection of all sets with `p_S > alpha`; empty if there are none.
pub fn s_icp(table: &PValueTable, alpha: f64) -> Result<SubsetMask> {
    check_alpha(alpha)?;
    let m = table.m();
    let mut acc = full_bits(m);
    let mut any = false;
    for (bits, &p) in table.values().iter().enumerate() {
        if p > alpha {
            acc &= bits as u32;
            any = true;
        }
    }
    SubsetMask::new(if any { acc } else { 0 }, m)
}

/// `{ i : p*_i <= alpha }`.
pub fn s_hat(table: &PValueTable, alpha: f64) -> Result<SubsetMask> {
    check_alpha(alpha)?;
    s_hat_from(&AggregatedPValues::new(table), alpha)
}

/// `{ i : p~*_i(alpha) <= alpha }`.
pub fn s_tilde(table: &PValueTable, alpha: f64) -> Result<SubsetMask> {
    check_alpha(alpha)?;
    s_tilde_from(&AggregatedPValues::new(table), alpha)
}

fn threshold(values: &[f64], alpha: f64, m: usize) -> Result<SubsetMask> {
    let idx: Vec<usize> = values.iter().enumerate().filter(|(_, &p)| p <= alpha).map(|(i, _)| i).collect();
    SubsetMask::from_indices(&idx, m)
}

fn s_hat_from(agg: &AggregatedPValues, alpha: f64) -> Result<SubsetMask> {
    threshold(agg.p_star_all(), alpha, agg.m())
}

fn s_tilde_from(agg: &AggregatedPValues, alpha: f64) -> Result<SubsetMask> {
    threshold(&agg.p_tilde_all(alpha)?, alpha, agg.m())
}
