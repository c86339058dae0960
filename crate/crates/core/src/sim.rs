//! Linear SEM generator with mean-shift interventions and simulation studies.
//!
//! Each environment `e` draws `X = B X + eps + b_e` with `B` strictly lower
//! triangular, so the system is solved by forward substitution. One variable is
//! the response; its parents in `B` are the true causal predictors.

use rand::seq::index::sample;
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::{ChaCha20Rng, ChaCha8Rng};
use rand_distr::{Distribution, Normal, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::aggregation::AggregatedPValues;
use crate::bounds::TdBounds;
use crate::error::{IcpError, Result};
use crate::invariance::{build_pvalue_table, check_alpha, EnvDataset, TestConfig};
use crate::sets::DiscoveryReport;
use crate::subset::{PValueTable, SubsetMask};

/// How the entries of `sigma` scale the Gaussian noise.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NoiseScale {
    /// noise covariance is `diag(sigma)`
    #[default]
    Variance,
    /// noise covariance is `diag(sigma^2)`
    StdDev,
}

impl NoiseScale {
    fn std_dev(self, sigma: f64) -> f64 {
        match self {
            NoiseScale::Variance => sigma.sqrt(),
            NoiseScale::StdDev => sigma,
        }
    }
}

/// Distribution over random SEM configurations.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SemParams {
    pub d: usize,
    /// 0-based index of the response variable.
    pub response: usize,
    pub n_env: usize,
    pub n_per_env: usize,
    pub edge_prob: f64,
    pub weight_range: (f64, f64),
    pub sigma_range: (f64, f64),
    pub shift_mean: f64,
    pub shift_sd: f64,
    pub n_intervened: usize,
    pub noise_scale: NoiseScale,
}

impl Default for SemParams {
    fn default() -> Self {
        Self {
            d: 10,
            response: 5,
            n_env: 5,
            n_per_env: 100,
            edge_prob: 0.8,
            weight_range: (1.0, 2.0),
            sigma_range: (0.5, 1.5),
            shift_mean: 10.0,
            shift_sd: 5.0,
            n_intervened: 3,
            noise_scale: NoiseScale::Variance,
        }
    }
}

impl SemParams {
    /// Draws a configuration; deterministic in `seed`.
    pub fn sample(&self, seed: u64) -> Result<SemConfig> {
        if self.d < 2 || self.response >= self.d || self.n_env < 2 || self.n_intervened >= self.d {
            return Err(IcpError::Config("inconsistent SEM parameters".into()));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let d = self.d;
        let mut b = vec![vec![0.0; d]; d];
        for (j, row) in b.iter_mut().enumerate() {
            for w in row.iter_mut().take(j) {
                if rng.random::<f64>() < self.edge_prob {
                    *w = rng.random_range(self.weight_range.0..self.weight_range.1);
                }
            }
        }
        let sigma = (0..d).map(|_| rng.random_range(self.sigma_range.0..self.sigma_range.1)).collect();
        let shift = Normal::new(self.shift_mean, self.shift_sd)
            .map_err(|e| IcpError::Config(format!("shift distribution: {e}")))?;
        let candidates: Vec<usize> = (0..d).filter(|&j| j != self.response).collect();
        let mut shifts = vec![vec![0.0; d]];
        for _ in 1..self.n_env {
            let mut v = vec![0.0; d];
            for k in sample(&mut rng, candidates.len(), self.n_intervened) {
                v[candidates[k]] = shift.sample(&mut rng);
            }
            shifts.push(v);
        }
        let config = SemConfig {
            d,
            response: self.response,
            b,
            sigma,
            noise_scale: self.noise_scale,
            shifts,
            n_per_env: self.n_per_env,
            seed: rng.next_u64(),
        };
        config.validate()?;
        Ok(config)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SemConfig {
    pub d: usize,
    /// 0-based index of the response variable.
    pub response: usize,
    /// `b[j][k]` is the weight of variable `k` in the equation of variable `j`.
    pub b: Vec<Vec<f64>>,
    pub sigma: Vec<f64>,
    pub noise_scale: NoiseScale,
    /// One shift vector per environment; the first is zero.
    pub shifts: Vec<Vec<f64>>,
    pub n_per_env: usize,
    /// Seed for the noise draws in [`generate`].
    pub seed: u64,
}

impl SemConfig {
    pub fn validate(&self) -> Result<()> {
        let d = self.d;
        let bad = |msg: &str| Err(IcpError::Config(msg.to_string()));
        if self.response >= d || self.b.len() != d || self.sigma.len() != d {
            return bad("dimensions of B, sigma and response do not match d");
        }
        for (j, row) in self.b.iter().enumerate() {
            if row.len() != d || row[j..].iter().any(|&w| w != 0.0) {
                return bad("B must be strictly lower triangular");
            }
        }
        if self.sigma.iter().any(|&s| s.is_nan() || s <= 0.0) {
            return bad("noise scales must be positive");
        }
        if self.shifts.len() < 2 || self.shifts.iter().any(|v| v.len() != d) {
            return bad("need at least two environments with length-d shift vectors");
        }
        if self.shifts[0].iter().any(|&v| v != 0.0) {
            return bad("the first environment must be unshifted");
        }
        if self.shifts.iter().any(|v| v[self.response] != 0.0) {
            return bad("the response may not be intervened on");
        }
        if self.n_per_env < 2 {
            return bad("need at least two samples per environment");
        }
        Ok(())
    }

    pub fn n_env(&self) -> usize {
        self.shifts.len()
    }

    /// Variable indices of the predictors, in original order.
    pub fn predictor_vars(&self) -> Vec<usize> {
        (0..self.d).filter(|&j| j != self.response).collect()
    }

    /// Parents of the response, indexed by predictor position.
    pub fn causal_set(&self) -> Result<SubsetMask> {
        let idx: Vec<usize> = self
            .predictor_vars()
            .iter()
            .enumerate()
            .filter(|(_, &v)| self.b[self.response][v] != 0.0)
            .map(|(pos, _)| pos)
            .collect();
        SubsetMask::from_indices(&idx, self.d - 1)
    }

    /// Solves `x = B x + rhs` for one observation by forward substitution.
    pub fn solve(&self, rhs: &[f64]) -> Vec<f64> {
        let mut x = vec![0.0; self.d];
        for j in 0..self.d {
            x[j] = rhs[j] + (0..j).map(|k| self.b[j][k] * x[k]).sum::<f64>();
        }
        x
    }
}

pub fn sample_config(seed: u64) -> Result<SemConfig> {
    SemParams::default().sample(seed)
}

/// A generated dataset together with its ground truth.
#[derive(Clone, Debug)]
pub struct SemSample {
    pub data: EnvDataset,
    pub causal: SubsetMask,
}

/// Draws `n_per_env` observations per environment; names are `X1..Xd` without the response.
pub fn generate(config: &SemConfig) -> Result<SemSample> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let preds = config.predictor_vars();
    let mut columns = vec![Vec::with_capacity(config.n_per_env * config.n_env()); preds.len()];
    let mut y = Vec::new();
    let mut env = Vec::new();
    let sd: Vec<f64> = config.sigma.iter().map(|&s| config.noise_scale.std_dev(s)).collect();
    for (e, shift) in config.shifts.iter().enumerate() {
        for _ in 0..config.n_per_env {
            let rhs: Vec<f64> = (0..config.d)
                .map(|j| {
                    let z: f64 = StandardNormal.sample(&mut rng);
                    sd[j] * z + shift[j]
                })
                .collect();
            let x = config.solve(&rhs);
            for (col, &v) in columns.iter_mut().zip(&preds) {
                col.push(x[v]);
            }
            y.push(x[config.response]);
            env.push(e + 1);
        }
    }
    let names = preds.iter().map(|v| format!("X{}", v + 1)).collect();
    let data = EnvDataset::new(columns, y, env, names)?;
    Ok(SemSample { data, causal: config.causal_set()? })
}

/// Independent child seed for replication `rep`: the ChaCha stream index is the counter.
pub fn child_seed(base_seed: u64, rep: u64) -> u64 {
    let mut rng = ChaCha20Rng::seed_from_u64(base_seed);
    rng.set_stream(rep);
    rng.next_u64()
}

#[derive(Clone, Debug, Serialize)]
pub struct ReplicationRecord {
    pub rep: usize,
    pub seed: u64,
    pub causal: Vec<usize>,
    pub s_icp: Vec<usize>,
    pub s_hat: Vec<usize>,
    pub covered: bool,
    pub all_rejected: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct SimReport {
    pub replications: usize,
    pub alpha: f64,
    pub base_seed: u64,
    /// fraction with `|R ∩ S*| >= t(R)` for every R
    pub coverage_hits: f64,
    /// fraction with `Ŝ ⊆ S*` (thresholded p*)
    pub fwer_hits: f64,
    /// fraction with `Ŝ^ICP ⊆ S*`
    pub icp_fwer_hits: f64,
    pub avg_causal: f64,
    pub avg_discoveries: f64,
    /// mean of `t(R)` per mask
    pub mean_td_lower: Vec<f64>,
    /// mean of `|R| - t(R)` per mask
    pub mean_fd_upper: Vec<f64>,
    pub predictor_names: Vec<String>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub records: Vec<ReplicationRecord>,
}

#[derive(Clone, Debug)]
pub struct CoverageStudy {
    pub replications: usize,
    pub alpha: f64,
    pub base_seed: u64,
    pub params: SemParams,
    pub keep_records: bool,
}

impl CoverageStudy {
    pub fn new(replications: usize, alpha: f64, base_seed: u64) -> Self {
        Self { replications, alpha, base_seed, params: SemParams::default(), keep_records: false }
    }

    /// Runs one replication end to end.
    pub fn replicate(&self, rep: usize) -> Result<(ReplicationRecord, Vec<usize>)> {
        let seed = child_seed(self.base_seed, rep as u64);
        let config = self.params.sample(seed)?;
        let sample = generate(&config)?;
        let table = build_pvalue_table(&sample.data, &TestConfig::new(self.alpha)?, None)?;
        let bounds = TdBounds::new(&table, self.alpha)?;
        let t = bounds.td_bound_all();
        let truth = sample.causal.bits();
        let covered = t.iter().enumerate().all(|(r, &tr)| (r as u32 & truth).count_ones() as usize >= tr);
        let report = DiscoveryReport::new(&table, self.alpha)?;
        let record = ReplicationRecord {
            rep,
            seed,
            causal: sample.causal.one_based(),
            s_icp: report.s_icp.one_based(),
            s_hat: report.s_hat.one_based(),
            covered,
            all_rejected: report.all_rejected,
        };
        Ok((record, t))
    }

    pub fn run(&self) -> Result<SimReport> {
        if self.replications == 0 {
            return Err(IcpError::Config("need at least one replication".into()));
        }
        check_alpha(self.alpha)?;
        let m = self.params.d - 1;
        let results =
            (0..self.replications).into_par_iter().map(|rep| self.replicate(rep)).collect::<Result<Vec<_>>>()?;

        let n = self.replications as f64;
        let frac = |f: &dyn Fn(&ReplicationRecord) -> bool| results.iter().filter(|(r, _)| f(r)).count() as f64 / n;
        let subset = |a: &[usize], b: &[usize]| a.iter().all(|i| b.contains(i));
        let mut mean_td = vec![0.0; 1 << m];
        for (_, t) in &results {
            for (acc, &v) in mean_td.iter_mut().zip(t) {
                *acc += v as f64;
            }
        }
        mean_td.iter_mut().for_each(|v| *v /= n);
        let mean_fd = mean_td.iter().enumerate().map(|(r, &t)| r.count_ones() as f64 - t).collect();
        let names = self.params.sample(0)?.predictor_vars().iter().map(|v| format!("X{}", v + 1)).collect();

        Ok(SimReport {
            replications: self.replications,
            alpha: self.alpha,
            base_seed: self.base_seed,
            coverage_hits: frac(&|r| r.covered),
            fwer_hits: frac(&|r| subset(&r.s_hat, &r.causal)),
            icp_fwer_hits: frac(&|r| subset(&r.s_icp, &r.causal)),
            avg_causal: results.iter().map(|(r, _)| r.causal.len() as f64).sum::<f64>() / n,
            avg_discoveries: results.iter().map(|(r, _)| r.s_icp.len() as f64).sum::<f64>() / n,
            mean_td_lower: mean_td,
            mean_fd_upper: mean_fd,
            predictor_names: names,
            records: if self.keep_records { results.into_iter().map(|(r, _)| r).collect() } else { Vec::new() },
        })
    }
}

pub fn run_coverage_study(replications: usize, alpha: f64, base_seed: u64) -> Result<SimReport> {
    CoverageStudy::new(replications, alpha, base_seed).run()
}

/// Empirical behaviour of `p*_i` when `p_S* ~ U(0,1)` and every other `p_S = 0`.
#[derive(Clone, Debug, Serialize)]
pub struct DiracUniformReport {
    pub m: usize,
    pub s_star: Vec<usize>,
    pub replications: usize,
    pub alpha: f64,
    /// `p*_i == p_S*` for every null `i` in every replication
    pub nulls_equal_p_sstar: bool,
    /// `p*_i == 0` for every `i ∈ S*` in every replication
    pub causal_are_zero: bool,
    /// empirical `P(p*_i <= alpha)` per predictor
    pub rejection_rate: Vec<f64>,
    /// sorted draws of `p*_i`, one vector per predictor
    #[serde(skip)]
    pub samples: Vec<Vec<f64>>,
}

impl DiracUniformReport {
    /// Empirical CDF of `p*_i` at `x`.
    pub fn ecdf(&self, i: usize, x: f64) -> f64 {
        let s = &self.samples[i];
        s.partition_point(|&v| v <= x) as f64 / s.len() as f64
    }
}

/// The table used by the Dirac-uniform study: zero except at `S*`.
pub fn dirac_uniform_table(s_star: SubsetMask, p_sstar: f64) -> Result<PValueTable> {
    let mut p = vec![0.0; 1 << s_star.m()];
    p[s_star.bits() as usize] = p_sstar;
    PValueTable::new(s_star.m(), p)
}

pub fn dirac_uniform_study(
    s_star: SubsetMask,
    replications: usize,
    alpha: f64,
    seed: u64,
) -> Result<DiracUniformReport> {
    check_alpha(alpha)?;
    if s_star.is_empty() {
        return Err(IcpError::Config("S* must be nonempty".into()));
    }
    if replications == 0 {
        return Err(IcpError::Config("need at least one replication".into()));
    }
    let m = s_star.m();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut samples = vec![Vec::with_capacity(replications); m];
    let mut nulls_equal = true;
    let mut causal_zero = true;
    for _ in 0..replications {
        let u: f64 = rng.random();
        let agg = AggregatedPValues::new(&dirac_uniform_table(s_star, u)?);
        for (i, col) in samples.iter_mut().enumerate() {
            let p = agg.p_star_single(i)?;
            if s_star.contains(i) {
                causal_zero &= p == 0.0;
            } else {
                nulls_equal &= p == u;
            }
            col.push(p);
        }
    }
    let rejection_rate =
        samples.iter().map(|s| s.iter().filter(|&&p| p <= alpha).count() as f64 / replications as f64).collect();
    for s in &mut samples {
        s.sort_by(f64::total_cmp);
    }
    Ok(DiracUniformReport {
        m,
        s_star: s_star.one_based(),
        replications,
        alpha,
        nulls_equal_p_sstar: nulls_equal,
        causal_are_zero: causal_zero,
        rejection_rate,
        samples,
    })
}
