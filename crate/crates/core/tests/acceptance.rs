//! Acceptance criteria. Each criterion prints one PASS/FAIL line; the process
//! exits nonzero if any criterion fails.

mod common;

use std::time::{Duration, Instant};

use common::{f_cdf_quadrature, t_cdf_quadrature};
use icp_core::bounds::{ClosedTestingOracle, TdBounds};
use icp_core::check::{adversarial_tables, random_table, run_oracle_check, OracleReport};
use icp_core::sets::{s_hat, s_icp, s_tilde};
use icp_core::sim::{dirac_uniform_study, CoverageStudy, SimReport};
use icp_core::stats::{f_cdf, student_t_cdf};
use icp_core::{Result, SubsetMask};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const ALPHAS: [f64; 3] = [0.01, 0.05, 0.2];
const STUDY_SEED: u64 = 2024;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Result<Outcome> {
    Ok(Outcome { pass, detail })
}

/// Shortcut bound equals the bound from accepted sets on 10^4 tables, m in 2..=10.
fn ac1_shortcut_equals_direct() -> Result<Outcome> {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let (mut checked, mut mismatches) = (0u64, 0u64);
    for k in 0..10_000 {
        let m = 2 + k % 9;
        let table = random_table(m, &mut rng);
        for alpha in ALPHAS {
            let b = TdBounds::new(&table, alpha)?;
            for r in 0..1u32 << m {
                let s = SubsetMask::new(r, m)?;
                checked += 1;
                if b.td_bound(s)? != b.td_bound_direct(s)? {
                    mismatches += 1;
                }
            }
        }
    }
    for m in 2..=10 {
        for table in adversarial_tables(m) {
            for alpha in ALPHAS {
                let b = TdBounds::new(&table, alpha)?;
                for r in 0..1u32 << m {
                    let s = SubsetMask::new(r, m)?;
                    checked += 1;
                    if b.td_bound(s)? != b.td_bound_direct(s)? {
                        mismatches += 1;
                    }
                }
            }
        }
    }
    outcome(mismatches == 0, format!("{mismatches} mismatches over {checked} (table, alpha, R) triples"))
}

/// Shortcut bound equals literal closed testing on 10^3 tables, m <= 8.
fn ac2_shortcut_equals_closed_testing() -> Result<Outcome> {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let (mut checked, mut mismatches) = (0u64, 0u64);
    for k in 0..1_000 {
        let m = 1 + k % 8;
        let table = random_table(m, &mut rng);
        for alpha in ALPHAS {
            let b = TdBounds::new(&table, alpha)?;
            let o = ClosedTestingOracle::new(&table, alpha)?;
            for r in 0..1u32 << m {
                let s = SubsetMask::new(r, m)?;
                checked += 1;
                if b.td_bound(s)? != o.td_bound(s)? {
                    mismatches += 1;
                }
            }
        }
    }
    outcome(mismatches == 0, format!("{mismatches} mismatches over {checked} (table, alpha, R) triples"))
}

/// S~ == S_icp always, and S^ == S_icp whenever some p_S > alpha, on 10^4 tables.
fn ac3_discovery_set_equivalences() -> Result<Outcome> {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let (mut tilde_bad, mut hat_bad, mut hat_checked) = (0, 0, 0);
    let mut total = 0;
    for k in 0..10_000 {
        let m = 1 + k % 8;
        let table = random_table(m, &mut rng);
        for alpha in ALPHAS {
            total += 1;
            let icp = s_icp(&table, alpha)?;
            if s_tilde(&table, alpha)? != icp {
                tilde_bad += 1;
            }
            if table.max() > alpha {
                hat_checked += 1;
                if s_hat(&table, alpha)? != icp {
                    hat_bad += 1;
                }
            }
        }
    }
    outcome(
        tilde_bad == 0 && hat_bad == 0,
        format!("tilde mismatches {tilde_bad}/{total}, hat mismatches {hat_bad}/{hat_checked}"),
    )
}

fn study() -> Result<(SimReport, Duration)> {
    let start = Instant::now();
    let report = CoverageStudy::new(500, 0.05, STUDY_SEED).run()?;
    Ok((report, start.elapsed()))
}

/// Coverage, |S*| and |S_icp| over 500 replications.
fn ac4_coverage_replication(report: &SimReport, elapsed: Duration) -> Result<Outcome> {
    let cov_ok = report.coverage_hits >= 0.95 && (0.958..=1.0).contains(&report.coverage_hits);
    let causal_ok = (report.avg_causal - 4.144).abs() <= 0.5;
    let disc_ok = (report.avg_discoveries - 0.52).abs() <= 0.35;
    let time_ok = elapsed < Duration::from_secs(3600);
    outcome(
        cov_ok && causal_ok && disc_ok && time_ok,
        format!(
            "coverage {:.3} (need >= 0.958), avg |S*| {:.3} (4.144 ± 0.5), avg |S_icp| {:.3} (0.52 ± 0.35), {:.1?}",
            report.coverage_hits, report.avg_causal, report.avg_discoveries, elapsed
        ),
    )
}

fn ac4_smoke() -> Result<Outcome> {
    let start = Instant::now();
    let r = CoverageStudy::new(100, 0.05, STUDY_SEED + 1).run()?;
    let elapsed = start.elapsed();
    let sane = [r.coverage_hits, r.fwer_hits, r.icp_fwer_hits].iter().all(|f| (0.0..=1.0).contains(f));
    outcome(
        sane && elapsed < Duration::from_secs(600),
        format!("100 replications in {elapsed:.1?}, coverage {:.3}", r.coverage_hits),
    )
}

/// Empirical P(S_icp ⊆ S*) in the same study.
fn ac5_fwer(report: &SimReport) -> Result<Outcome> {
    let floor = 0.95 - 3.0 * (0.05f64 * 0.95 / 500.0).sqrt();
    outcome(
        report.icp_fwer_hits >= floor,
        format!(
            "P(S_icp ⊆ S*) = {:.3} (need >= {floor:.4}); thresholded p*: {:.3}",
            report.icp_fwer_hits, report.fwer_hits
        ),
    )
}

/// Dirac-uniform configuration with only H_{0,S*} true.
fn ac6_dirac_uniform() -> Result<Outcome> {
    let n = 10_000;
    let m = 6;
    let s_star = SubsetMask::from_one_based(&[1, 3, 4], m)?;
    let r = dirac_uniform_study(s_star, n, 0.05, 6)?;
    let slack = 3.0 * (0.05f64 * 0.95 / n as f64).sqrt();
    let nulls: Vec<f64> = (0..m).filter(|&i| !s_star.contains(i)).map(|i| r.rejection_rate[i]).collect();
    let rate_ok = nulls.iter().all(|&p| (p - 0.05).abs() <= slack);
    outcome(
        r.nulls_equal_p_sstar && r.causal_are_zero && rate_ok,
        format!(
            "null p* == p_S* in every replication: {}, causal p* == 0: {}, null rejection rates {:?} (0.05 ± {slack:.4})",
            r.nulls_equal_p_sstar, r.causal_are_zero, nulls
        ),
    )
}

/// t(S_icp) = |S_icp| and monotonicity on every random-table suite.
fn ac7_coherence() -> Result<Outcome> {
    let mut merged = OracleReport::default();
    for m in 1..=10 {
        let r = run_oracle_check(m, 300, &ALPHAS, 70 + m as u64)?;
        merged.icp_coherence.checked += r.icp_coherence.checked;
        merged.icp_coherence.mismatches += r.icp_coherence.mismatches;
        merged.monotonicity.checked += r.monotonicity.checked;
        merged.monotonicity.mismatches += r.monotonicity.mismatches;
    }
    let bad = merged.icp_coherence.mismatches + merged.monotonicity.mismatches;
    outcome(
        bad == 0,
        format!(
            "coherence {}/{} violations, monotonicity {}/{} violations",
            merged.icp_coherence.mismatches,
            merged.icp_coherence.checked,
            merged.monotonicity.mismatches,
            merged.monotonicity.checked
        ),
    )
}

/// t and F CDFs against quadrature on a 200-point grid, plus exact anchors.
fn ac8_numerics() -> Result<Outcome> {
    let dofs = [1.0, 2.0, 5.0, 10.0, 50.0];
    let mut worst_t = 0.0f64;
    let mut worst_f = 0.0f64;
    let mut points = 0;
    for &nu in &dofs {
        for k in 0..40 {
            let x = -10.0 + 20.0 * k as f64 / 39.0;
            worst_t = worst_t.max((student_t_cdf(x, nu)? - t_cdf_quadrature(x, nu)).abs());
            points += 1;
        }
    }
    let xs = [0.05, 0.3, 0.7, 1.0, 1.5, 2.5, 4.0, 8.0];
    for &d1 in &dofs {
        for &d2 in &dofs {
            for &x in &xs {
                worst_f = worst_f.max((f_cdf(x, d1, d2)? - f_cdf_quadrature(x, d1, d2)).abs());
            }
        }
    }
    let anchors = [
        (student_t_cdf(0.0, 7.0)?, 0.5),
        (student_t_cdf(1.0, 1.0)?, 0.75),
        (f_cdf(1.0, 5.0, 5.0)?, 0.5),
        (f_cdf(1.0, 50.0, 50.0)?, 0.5),
    ];
    let worst_anchor = anchors.iter().map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    outcome(
        worst_t <= 1e-8 && worst_f <= 1e-8 && worst_anchor <= 1e-12,
        format!(
            "max |t - quad| {worst_t:.2e} over {points} points, max |F - quad| {worst_f:.2e} over 200 points, anchors {worst_anchor:.2e}"
        ),
    )
}

fn main() {
    let mut results: Vec<(&str, Result<Outcome>)> = Vec::new();
    results.push(("AC1 shortcut bound == direct bound", ac1_shortcut_equals_direct()));
    results.push(("AC2 shortcut bound == closed testing", ac2_shortcut_equals_closed_testing()));
    results.push(("AC3 S~ == S_icp, S^ == S_icp", ac3_discovery_set_equivalences()));
    match study() {
        Ok((report, elapsed)) => {
            results.push(("AC4 coverage study (500 reps)", ac4_coverage_replication(&report, elapsed)));
            results.push(("AC5 FWER of S_icp", ac5_fwer(&report)));
        }
        Err(e) => {
            results.push(("AC4 coverage study (500 reps)", Err(e)));
            results.push(("AC5 FWER of S_icp", outcome(false, "study failed".into())));
        }
    }
    results.push(("AC4 smoke (100 reps)", ac4_smoke()));
    results.push(("AC6 Dirac-uniform study", ac6_dirac_uniform()));
    results.push(("AC7 bound coherence and monotonicity", ac7_coherence()));
    results.push(("AC8 t/F numerics", ac8_numerics()));

    let mut failed = 0;
    for (name, res) in &results {
        match res {
            Ok(o) if o.pass => println!("PASS  {name}: {}", o.detail),
            Ok(o) => {
                failed += 1;
                println!("FAIL  {name}: {}", o.detail);
            }
            Err(e) => {
                failed += 1;
                println!("FAIL  {name}: error {e}");
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", results.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
