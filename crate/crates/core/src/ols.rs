//! Least squares with an intercept, via column-pivoted Gram-Schmidt.
//!
//! Columns whose remaining norm after orthogonalization falls below
//! `RANK_TOL` times the first pivot norm are treated as collinear and dropped;
//! their coefficients are reported as zero.

use crate::error::{IcpError, Result};

pub const RANK_TOL: f64 = 1e-10;

#[derive(Clone, Debug, PartialEq)]
pub struct OlsFit {
    /// One coefficient per predictor column, followed by the intercept.
    pub coefficients: Vec<f64>,
    pub residuals: Vec<f64>,
    pub rank: usize,
    /// Design positions (same indexing as `coefficients`) that were dropped.
    pub dropped: Vec<usize>,
}

impl OlsFit {
    pub fn is_full_rank(&self) -> bool {
        self.dropped.is_empty()
    }

    pub fn intercept(&self) -> f64 {
        *self.coefficients.last().expect("intercept is always present")
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

/// Regresses `y` on `columns` plus an intercept, dropping collinear columns.
pub fn ols_fit(columns: &[&[f64]], y: &[f64]) -> Result<OlsFit> {
    let n = y.len();
    if n == 0 {
        return Err(IcpError::InsufficientData("no observations".into()));
    }
    if let Some(c) = columns.iter().find(|c| c.len() != n) {
        return Err(IcpError::Config(format!("column length {} does not match response length {n}", c.len())));
    }
    let ones = vec![1.0; n];
    let mut design: Vec<&[f64]> = columns.to_vec();
    design.push(&ones);
    let p = design.len();

    let mut work: Vec<Vec<f64>> = design.iter().map(|c| c.to_vec()).collect();
    let mut remaining: Vec<usize> = (0..p).collect();
    let mut pivots: Vec<usize> = Vec::with_capacity(p);
    let mut q: Vec<Vec<f64>> = Vec::with_capacity(p);
    let mut first_norm = None;

    while !remaining.is_empty() {
        let (pos, norm) = remaining
            .iter()
            .enumerate()
            .map(|(pos, &j)| (pos, dot(&work[j], &work[j]).sqrt()))
            .fold((0, -1.0), |best, cur| if cur.1 > best.1 { cur } else { best });
        let first = *first_norm.get_or_insert(norm);
        if norm <= RANK_TOL * first || norm == 0.0 {
            break;
        }
        let j = remaining.swap_remove(pos);
        let mut v = std::mem::take(&mut work[j]);
        // second orthogonalization pass against earlier directions
        for qk in &q {
            let c = dot(qk, &v);
            axpy(-c, qk, &mut v);
        }
        let norm = dot(&v, &v).sqrt();
        v.iter_mut().for_each(|x| *x /= norm);
        for &k in &remaining {
            let c = dot(&v, &work[k]);
            axpy(-c, &v, &mut work[k]);
        }
        q.push(v);
        pivots.push(j);
    }

    let rank = pivots.len();
    let mut residuals = y.to_vec();
    let mut qty = vec![0.0; rank];
    for _ in 0..2 {
        for (k, qk) in q.iter().enumerate() {
            let c = dot(qk, &residuals);
            qty[k] += c;
            axpy(-c, qk, &mut residuals);
        }
    }

    // R[k][l] = q_k . a_{pivots[l]}, upper triangular in pivot order
    let mut coef_piv = vec![0.0; rank];
    for k in (0..rank).rev() {
        let mut s = qty[k];
        for l in k + 1..rank {
            s -= dot(&q[k], design[pivots[l]]) * coef_piv[l];
        }
        coef_piv[k] = s / dot(&q[k], design[pivots[k]]);
    }
    let mut coefficients = vec![0.0; p];
    for (k, &j) in pivots.iter().enumerate() {
        coefficients[j] = coef_piv[k];
    }
    let mut dropped = remaining;
    dropped.sort_unstable();

    Ok(OlsFit { coefficients, residuals, rank, dropped })
}
