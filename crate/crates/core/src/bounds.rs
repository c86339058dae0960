//! Simultaneous true discovery bounds.
//!
//! For a query set `R`, `t(R) = min { |R \ I| : I ⊆ R, p*_I > alpha }` is a lower
//! bound on the number of causal predictors in `R` that holds for all `R` at
//! once with probability at least `1 - alpha`. The same number is obtained as
//! `min { |R ∩ S| : p_S > alpha }`, directly from the accepted sets.
//!
//! When no candidate exists the bound is `|R|`. This matches what closed testing
//! gives when every hypothesis is rejected.

use serde::Serialize;

use crate::aggregation::AggregatedPValues;
use crate::error::{IcpError, Result};
use crate::invariance::check_alpha;
use crate::subset::{full_bits, submasks, subset_max_in_place, PValueTable, SubsetMask};

/// Limit for the literal closed testing computation.
pub const ORACLE_MAX_M: usize = 12;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct BoundResult {
    pub set: SubsetMask,
    pub td_lower: usize,
    pub fd_upper: usize,
}

impl BoundResult {
    fn new(set: SubsetMask, td_lower: usize) -> Self {
        debug_assert!(td_lower <= set.len());
        Self { set, td_lower, fd_upper: set.len() - td_lower }
    }

    pub fn to_named(&self, names: &[String]) -> NamedBound {
        NamedBound {
            set: self.set.names(names).into_iter().map(String::from).collect(),
            td_lower: self.td_lower,
            fd_upper: self.fd_upper,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct NamedBound {
    pub set: Vec<String>,
    pub td_lower: usize,
    pub fd_upper: usize,
}

/// Bound evaluator bound to one table and level.
#[derive(Clone, Debug)]
pub struct TdBounds {
    m: usize,
    alpha: f64,
    agg: AggregatedPValues,
    /// Masks with `p_S > alpha`.
    accepted: Vec<u32>,
}

impl TdBounds {
    pub fn new(table: &PValueTable, alpha: f64) -> Result<Self> {
        check_alpha(alpha)?;
        let accepted =
            table.values().iter().enumerate().filter(|(_, &p)| p > alpha).map(|(bits, _)| bits as u32).collect();
        Ok(Self { m: table.m(), alpha, agg: AggregatedPValues::new(table), accepted })
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn aggregated(&self) -> &AggregatedPValues {
        &self.agg
    }

    fn check_set(&self, r: SubsetMask) -> Result<()> {
        if r.m() != self.m {
            return Err(IcpError::Config(format!("query set over {} predictors for a table over {}", r.m(), self.m)));
        }
        Ok(())
    }

    /// Shortcut bound by enumerating the `2^|R|` subsets of `R`.
    pub fn td_bound(&self, r: SubsetMask) -> Result<usize> {
        self.check_set(r)?;
        let bits = r.bits();
        let best = submasks(bits)
            .filter(|&i| self.agg.p_star_bits(i) > self.alpha)
            .map(|i| (bits & !i).count_ones() as usize)
            .min();
        Ok(best.unwrap_or(r.len()))
    }

    /// Bound read directly off the accepted sets: `min |R ∩ S|` over `p_S > alpha`.
    pub fn td_bound_direct(&self, r: SubsetMask) -> Result<usize> {
        self.check_set(r)?;
        let bits = r.bits();
        let best = self.accepted.iter().map(|&s| (bits & s).count_ones() as usize).min();
        Ok(best.unwrap_or(r.len()))
    }

    /// Bounds for every mask, indexed by mask.
    ///
    /// `u(R)` is the size of the largest `I ⊆ R` with `p*_I > alpha`: seed each
    /// mask with `|R|` when it qualifies, then take subset maxima.
    pub fn td_bound_all(&self) -> Vec<usize> {
        let n = 1usize << self.m;
        let mut u: Vec<u8> = (0..n)
            .map(|r| if self.agg.p_star_bits(r as u32) > self.alpha { r.count_ones() as u8 } else { 0 })
            .collect();
        subset_max_in_place(&mut u, self.m);
        u.iter().enumerate().map(|(r, &u)| r.count_ones() as usize - u as usize).collect()
    }

    /// Bounds for a batch of queries, switching to the whole-powerset sweep
    /// when per-query enumeration would cost more.
    pub fn bounds_for(&self, sets: &[SubsetMask]) -> Result<Vec<BoundResult>> {
        for &r in sets {
            self.check_set(r)?;
        }
        let per_query: f64 = sets.iter().map(|r| (r.len() as f64).exp2()).sum();
        let sweep = (self.m as f64) * (self.m as f64).exp2();
        if per_query > sweep {
            let all = self.td_bound_all();
            Ok(sets.iter().map(|&r| BoundResult::new(r, all[r.bits() as usize])).collect())
        } else {
            sets.iter().map(|&r| Ok(BoundResult::new(r, self.td_bound(r)?))).collect()
        }
    }

    /// Every mask's bound as a `BoundResult`, in mask order.
    pub fn all_results(&self) -> Vec<BoundResult> {
        self.td_bound_all()
            .into_iter()
            .enumerate()
            .map(|(bits, t)| BoundResult::new(SubsetMask::new(bits as u32, self.m).expect("in range"), t))
            .collect()
    }

    /// `{ i : t({i}) = 1 }`, the largest set whose bound equals its size.
    pub fn fwer_set_recovery(&self) -> SubsetMask {
        let idx: Vec<usize> = (0..self.m).filter(|&i| self.agg.p_star_bits(1 << i) <= self.alpha).collect();
        SubsetMask::from_indices(&idx, self.m).expect("in range")
    }

    /// Inclusion-minimal sets with `t(R) >= 1`, smallest first.
    ///
    /// Sizes are scanned in increasing order. A set with `t >= 1` is minimal
    /// exactly when every set one element smaller has `t = 0`, because the
    /// bound is monotone under inclusion.
    pub fn defining_sets(&self, max_report: usize, max_size: Option<usize>) -> Result<DefiningSets> {
        if self.m > DEFINING_SETS_MAX_M {
            return Err(IcpError::Config(format!(
                "defining set search supports at most {DEFINING_SETS_MAX_M} predictors"
            )));
        }
        let t = self.td_bound_all();
        let limit = max_size.unwrap_or(self.m).min(self.m);
        let mut by_size: Vec<Vec<u32>> = vec![Vec::new(); self.m + 1];
        for r in 0..=full_bits(self.m) {
            by_size[r.count_ones() as usize].push(r);
        }
        let mut sets = Vec::new();
        let mut truncated = false;
        'outer: for sized in &by_size[1..=limit] {
            for &r in sized {
                if t[r as usize] == 0 {
                    continue;
                }
                let minimal = (0..self.m).filter(|&i| r & (1 << i) != 0).all(|i| t[(r ^ (1 << i)) as usize] == 0);
                if minimal {
                    if sets.len() == max_report {
                        truncated = true;
                        break 'outer;
                    }
                    sets.push(SubsetMask::new(r, self.m)?);
                }
            }
        }
        Ok(DefiningSets { sets, truncated })
    }
}

pub const DEFINING_SETS_MAX_M: usize = 24;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DefiningSets {
    pub sets: Vec<SubsetMask>,
    /// More minimal sets exist than were reported.
    pub truncated: bool,
}

pub fn td_bound(table: &PValueTable, alpha: f64, r: SubsetMask) -> Result<usize> {
    TdBounds::new(table, alpha)?.td_bound(r)
}

pub fn td_bound_direct(table: &PValueTable, alpha: f64, r: SubsetMask) -> Result<usize> {
    TdBounds::new(table, alpha)?.td_bound_direct(r)
}

pub fn td_bound_all(table: &PValueTable, alpha: f64) -> Result<Vec<usize>> {
    Ok(TdBounds::new(table, alpha)?.td_bound_all())
}

pub fn defining_sets(table: &PValueTable, alpha: f64, max_report: usize) -> Result<DefiningSets> {
    TdBounds::new(table, alpha)?.defining_sets(max_report, None)
}

pub fn fwer_set_recovery(table: &PValueTable, alpha: f64) -> Result<SubsetMask> {
    Ok(TdBounds::new(table, alpha)?.fwer_set_recovery())
}

/// Closed testing carried out step by step, for verification only.
///
/// Local test of `H*_I` rejects when `p*_I <= alpha`; closed testing rejects `I`
/// when every superset is locally rejected; `t(R) = |R| - u(R)` where `u(R)` is
/// the largest subset of `R` not rejected by closed testing.
#[derive(Clone, Debug)]
pub struct ClosedTestingOracle {
    m: usize,
    closed_rejected: Vec<bool>,
}

impl ClosedTestingOracle {
    pub fn new(table: &PValueTable, alpha: f64) -> Result<Self> {
        check_alpha(alpha)?;
        let m = table.m();
        if m > ORACLE_MAX_M {
            return Err(IcpError::OracleTooLarge(m));
        }
        let full = full_bits(m);
        let p = table.values();
        // p*_I by direct maximisation over subsets of the complement
        let local_rejected: Vec<bool> =
            (0..=full).map(|i| submasks(full & !i).map(|s| p[s as usize]).fold(0.0, f64::max) <= alpha).collect();
        let closed_rejected =
            (0..=full).map(|i| submasks(full & !i).all(|extra| local_rejected[(i | extra) as usize])).collect();
        Ok(Self { m, closed_rejected })
    }

    pub fn td_bound(&self, r: SubsetMask) -> Result<usize> {
        if r.m() != self.m {
            return Err(IcpError::Config("query set has the wrong predictor count".into()));
        }
        let u = submasks(r.bits())
            .filter(|&i| !self.closed_rejected[i as usize])
            .map(|i| i.count_ones() as usize)
            .max()
            .unwrap_or(0);
        Ok(r.len() - u)
    }
}

pub fn closed_testing_oracle(table: &PValueTable, alpha: f64, r: SubsetMask) -> Result<usize> {
    ClosedTestingOracle::new(table, alpha)?.td_bound(r)
}
