//! Randomized agreement checks between the equivalent formulations.
//!
//! Used by the `oracle-check` subcommand and the test suites. Random tables are
//! drawn from several regimes so that accepted families range from empty to
//! everything, and a grid regime produces exact ties with common levels.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::bounds::{ClosedTestingOracle, TdBounds, ORACLE_MAX_M};
use crate::error::Result;
use crate::sets::DiscoveryReport;
use crate::subset::{check_m, full_bits, PValueTable, SubsetMask};

const GRID: [f64; 6] = [0.0, 0.01, 0.05, 0.2, 0.5, 1.0];

/// A random p-value table; the regime is drawn first, then the entries.
pub fn random_table<R: Rng + ?Sized>(m: usize, rng: &mut R) -> PValueTable {
    let n = 1usize << m;
    let p: Vec<f64> = match rng.random_range(0..5) {
        // mostly small values with a few large ones
        0 | 1 => {
            let q = [0.0, 0.02, 0.1, 0.3, 0.7, 1.0][rng.random_range(0..6)];
            (0..n).map(|_| if rng.random::<f64>() < q { rng.random() } else { 0.03 * rng.random::<f64>() }).collect()
        }
        // accepted sets are the supersets of a few planted sets
        2 => {
            let k = rng.random_range(1..=3);
            let planted: Vec<u32> = (0..k).map(|_| rng.random::<u32>() & full_bits(m)).collect();
            (0..n as u32)
                .map(|s| {
                    if planted.iter().any(|&t| t & !s == 0) && rng.random::<f64>() < 0.6 {
                        rng.random()
                    } else {
                        0.05 * rng.random::<f64>()
                    }
                })
                .collect()
        }
        // exact ties with common alpha values
        3 => (0..n).map(|_| GRID[rng.random_range(0..GRID.len())]).collect(),
        _ => (0..n).map(|_| rng.random()).collect(),
    };
    PValueTable::new(m, p).expect("entries lie in [0, 1]")
}

/// Structured tables that stress the boundary cases.
pub fn adversarial_tables(m: usize) -> Vec<PValueTable> {
    let n = 1usize << m;
    let mut out = Vec::new();
    for v in [0.0, 0.01, 0.05, 0.2, 1.0] {
        out.push(PValueTable::constant(m, v).expect("valid"));
    }
    for hot in [0, n - 1, n / 2, 1] {
        let mut p = vec![0.0; n];
        p[hot] = 1.0;
        out.push(PValueTable::new(m, p).expect("valid"));
    }
    // staircase in set size, rising and falling
    let up: Vec<f64> = (0..n).map(|s| (s.count_ones() as f64 / m as f64).min(1.0)).collect();
    let down: Vec<f64> = up.iter().map(|v| 1.0 - v).collect();
    out.push(PValueTable::new(m, up).expect("valid"));
    out.push(PValueTable::new(m, down).expect("valid"));
    out
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct CheckCounts {
    pub checked: u64,
    pub mismatches: u64,
}

impl CheckCounts {
    fn record(&mut self, ok: bool) {
        self.checked += 1;
        if !ok {
            self.mismatches += 1;
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct OracleReport {
    pub m: usize,
    pub trials: usize,
    pub seed: u64,
    /// shortcut bound vs. bound from accepted sets, every R
    pub shortcut_vs_direct: CheckCounts,
    /// shortcut bound vs. literal closed testing (skipped above m = 12)
    pub shortcut_vs_closed_testing: CheckCounts,
    /// per-set enumeration vs. whole-powerset sweep
    pub enumeration_vs_sweep: CheckCounts,
    /// ICP set vs. thresholded p~*
    pub icp_vs_tilde: CheckCounts,
    /// ICP set vs. thresholded p* whenever some p_S > alpha
    pub icp_vs_hat: CheckCounts,
    /// t(S_icp) = |S_icp| whenever some p_S > alpha
    pub icp_coherence: CheckCounts,
    /// R ⊆ R' implies t(R) <= t(R') on all single-element extensions
    pub monotonicity: CheckCounts,
}

impl OracleReport {
    pub fn total_mismatches(&self) -> u64 {
        [
            &self.shortcut_vs_direct,
            &self.shortcut_vs_closed_testing,
            &self.enumeration_vs_sweep,
            &self.icp_vs_tilde,
            &self.icp_vs_hat,
            &self.icp_coherence,
            &self.monotonicity,
        ]
        .iter()
        .map(|c| c.mismatches)
        .sum()
    }

    /// Runs every check on one table and level.
    pub fn check_table(&mut self, table: &PValueTable, alpha: f64) -> Result<()> {
        let m = table.m();
        let bounds = TdBounds::new(table, alpha)?;
        let all = bounds.td_bound_all();
        let oracle = if m <= ORACLE_MAX_M { Some(ClosedTestingOracle::new(table, alpha)?) } else { None };
        for r in 0..=full_bits(m) {
            let s = SubsetMask::new(r, m)?;
            let t = bounds.td_bound(s)?;
            self.shortcut_vs_direct.record(t == bounds.td_bound_direct(s)?);
            self.enumeration_vs_sweep.record(t == all[r as usize]);
            if let Some(o) = &oracle {
                self.shortcut_vs_closed_testing.record(t == o.td_bound(s)?);
            }
            for i in 0..m {
                if r & (1 << i) == 0 {
                    self.monotonicity.record(all[r as usize] <= all[(r | (1 << i)) as usize]);
                }
            }
        }
        let report = DiscoveryReport::new(table, alpha)?;
        self.icp_vs_tilde.record(report.s_icp == report.s_tilde);
        if !report.all_rejected {
            self.icp_vs_hat.record(report.s_icp == report.s_hat);
            self.icp_coherence.record(all[report.s_icp.bits() as usize] == report.s_icp.len());
        }
        Ok(())
    }
}

/// `trials` random tables over `m` predictors, each checked at every level in `alphas`.
pub fn run_oracle_check(m: usize, trials: usize, alphas: &[f64], seed: u64) -> Result<OracleReport> {
    check_m(m)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut report = OracleReport { m, trials, seed, ..Default::default() };
    for _ in 0..trials {
        let table = random_table(m, &mut rng);
        for &alpha in alphas {
            report.check_table(&table, alpha)?;
        }
    }
    Ok(report)
}
