//! Invariance p-values `p_S` from multi-environment data.
//!
//! For a candidate set `S` the response is regressed on `X_S` (plus intercept)
//! using all environments pooled. If `S` gives an invariant model, the residuals
//! have the same distribution in every environment. Each environment is compared
//! against the pooled rest with a Welch t-test on the means and a two-sided
//! F-test on the variances, and the `2E` resulting p-values are combined with
//! Bonferroni.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{IcpError, Result};
use crate::ols::{ols_fit, OlsFit};
use crate::stats::{f_cdf, f_sf, student_t_two_sided};
use crate::subset::{check_m, PValueTable, SubsetMask};

/// Observations of `(X, y, e)` from at least two environments.
#[derive(Clone, Debug, PartialEq)]
pub struct EnvDataset {
    columns: Vec<Vec<f64>>,
    y: Vec<f64>,
    env: Vec<usize>,
    n_env: usize,
    names: Vec<String>,
}

impl EnvDataset {
    /// `columns[j]` holds predictor `j`; `env` holds labels in `1..=E`.
    pub fn new(columns: Vec<Vec<f64>>, y: Vec<f64>, env: Vec<usize>, names: Vec<String>) -> Result<Self> {
        let n = y.len();
        let m = columns.len();
        check_m(m)?;
        if names.len() != m {
            return Err(IcpError::Config(format!("{} names for {m} predictors", names.len())));
        }
        if env.len() != n || columns.iter().any(|c| c.len() != n) {
            return Err(IcpError::Config("predictor, response and environment lengths differ".into()));
        }
        if n < m + 2 {
            return Err(IcpError::InsufficientData(format!(
                "{n} observations for {m} predictors; need at least {}",
                m + 2
            )));
        }
        for (j, col) in columns.iter().enumerate() {
            if let Some(row) = col.iter().position(|v| !v.is_finite()) {
                return Err(IcpError::NonFinite { column: names[j].clone(), row: row + 1 });
            }
        }
        if let Some(row) = y.iter().position(|v| !v.is_finite()) {
            return Err(IcpError::NonFinite { column: "response".into(), row: row + 1 });
        }
        let n_env = env.iter().copied().max().unwrap_or(0);
        if env.contains(&0) {
            return Err(IcpError::Config("environment labels are 1-based".into()));
        }
        if n_env < 2 {
            return Err(IcpError::SingleEnvironment("environment".into()));
        }
        let mut counts = vec![0usize; n_env];
        for &e in &env {
            counts[e - 1] += 1;
        }
        if let Some(e) = counts.iter().position(|&c| c < 2) {
            return Err(IcpError::InsufficientData(format!(
                "environment {} has {} observations; need at least 2",
                e + 1,
                counts[e]
            )));
        }
        Ok(Self { columns, y, env, n_env, names })
    }

    pub fn n(&self) -> usize {
        self.y.len()
    }

    pub fn m(&self) -> usize {
        self.columns.len()
    }

    pub fn n_env(&self) -> usize {
        self.n_env
    }

    pub fn column(&self, j: usize) -> &[f64] {
        &self.columns[j]
    }

    pub fn y(&self) -> &[f64] {
        &self.y
    }

    pub fn env(&self) -> &[usize] {
        &self.env
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    /// Dataset with rows reordered by `order` (a permutation of `0..n`).
    pub fn permute_rows(&self, order: &[usize]) -> Result<Self> {
        let pick = |v: &[f64]| order.iter().map(|&i| v[i]).collect::<Vec<_>>();
        Self::new(
            self.columns.iter().map(|c| pick(c)).collect(),
            pick(&self.y),
            order.iter().map(|&i| self.env[i]).collect(),
            self.names.clone(),
        )
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TestKind {
    #[default]
    ResidualMeanVar,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TestConfig {
    pub alpha: f64,
    pub test_kind: TestKind,
}

impl TestConfig {
    pub fn new(alpha: f64) -> Result<Self> {
        check_alpha(alpha)?;
        Ok(Self { alpha, test_kind: TestKind::ResidualMeanVar })
    }
}

pub(crate) fn check_alpha(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha < 1.0 {
        Ok(())
    } else {
        Err(IcpError::Config(format!("alpha must lie in (0, 1), got {alpha}")))
    }
}

fn design_for(data: &EnvDataset, s: SubsetMask) -> Result<Vec<&[f64]>> {
    if s.m() != data.m() {
        return Err(IcpError::Config(format!(
            "set over {} predictors used with a {}-predictor dataset",
            s.m(),
            data.m()
        )));
    }
    Ok(s.indices().into_iter().map(|j| data.column(j)).collect())
}

/// Pooled OLS of `y` on `X_S`; fails if the design is rank deficient.
pub fn ols_fit_for_set(data: &EnvDataset, s: SubsetMask) -> Result<OlsFit> {
    let fit = ols_fit(&design_for(data, s)?, data.y())?;
    if !fit.is_full_rank() {
        return Err(IcpError::RankDeficient { set: s.to_string() });
    }
    Ok(fit)
}

struct Moments {
    n: f64,
    mean: f64,
    var: f64,
}

fn moments(values: impl Iterator<Item = f64> + Clone) -> Moments {
    let (n, sum) = values.clone().fold((0usize, 0.0), |(c, s), v| (c + 1, s + v));
    let mean = sum / n as f64;
    let ss: f64 = values.map(|v| (v - mean) * (v - mean)).sum();
    Moments { n: n as f64, mean, var: ss / (n as f64 - 1.0) }
}

fn welch_pvalue(a: &Moments, b: &Moments) -> Result<f64> {
    let va = a.var / a.n;
    let vb = b.var / b.n;
    let se2 = va + vb;
    let diff = a.mean - b.mean;
    if se2 == 0.0 {
        return Ok(if diff == 0.0 { 1.0 } else { 0.0 });
    }
    let df = se2 * se2 / (va * va / (a.n - 1.0) + vb * vb / (b.n - 1.0));
    student_t_two_sided(diff / se2.sqrt(), df)
}

fn variance_ratio_pvalue(a: &Moments, b: &Moments) -> Result<f64> {
    if b.var == 0.0 {
        return Ok(if a.var == 0.0 { 1.0 } else { 0.0 });
    }
    let f = a.var / b.var;
    let (d1, d2) = (a.n - 1.0, b.n - 1.0);
    Ok((2.0 * f_cdf(f, d1, d2)?.min(f_sf(f, d1, d2)?)).min(1.0))
}

/// Bonferroni-combined p-value from one-vs-rest comparisons of residuals.
pub fn residual_pvalue(residuals: &[f64], env: &[usize], n_env: usize) -> Result<f64> {
    let mut min_p = 1.0f64;
    for e in 1..=n_env {
        let inside = residuals.iter().zip(env).filter(|(_, &l)| l == e).map(|(r, _)| *r);
        let outside = residuals.iter().zip(env).filter(|(_, &l)| l != e).map(|(r, _)| *r);
        let a = moments(inside);
        let b = moments(outside);
        if a.n < 2.0 || b.n < 2.0 {
            return Err(IcpError::InsufficientData(format!(
                "environment {e} needs at least 2 observations on each side"
            )));
        }
        min_p = min_p.min(welch_pvalue(&a, &b)?).min(variance_ratio_pvalue(&a, &b)?);
    }
    Ok((2.0 * n_env as f64 * min_p).min(1.0))
}

/// `p_S` for the hypothesis that `S` yields an invariant linear model.
pub fn invariance_pvalue(data: &EnvDataset, s: SubsetMask, cfg: &TestConfig) -> Result<f64> {
    check_alpha(cfg.alpha)?;
    let fit = ols_fit(&design_for(data, s)?, data.y())?;
    match cfg.test_kind {
        TestKind::ResidualMeanVar => residual_pvalue(&fit.residuals, data.env(), data.n_env()),
    }
}

/// `p_S` for every subset. Sets larger than `max_size` are not tested and get `p_S = 0`.
pub fn build_pvalue_table(data: &EnvDataset, cfg: &TestConfig, max_size: Option<usize>) -> Result<PValueTable> {
    let m = data.m();
    check_m(m)?;
    let p = (0..1u32 << m)
        .into_par_iter()
        .map(|bits| {
            let s = SubsetMask::new(bits, m)?;
            match max_size {
                Some(k) if s.len() > k => Ok(0.0),
                _ => invariance_pvalue(data, s, cfg),
            }
        })
        .collect::<Result<Vec<f64>>>()?;
    PValueTable::new(m, p)
}
