//! Test-only oracles that share no code with the library's numerics.
#![allow(dead_code, clippy::needless_range_loop)]

use std::f64::consts::FRAC_PI_2;

fn simpson(f: &dyn Fn(f64) -> f64, a: f64, fa: f64, b: f64, fb: f64) -> (f64, f64, f64) {
    let m = 0.5 * (a + b);
    let fm = f(m);
    (m, fm, (b - a) / 6.0 * (fa + 4.0 * fm + fb))
}

#[allow(clippy::too_many_arguments)]
fn adapt(
    f: &dyn Fn(f64) -> f64,
    a: f64,
    fa: f64,
    b: f64,
    fb: f64,
    whole: f64,
    m: f64,
    fm: f64,
    tol: f64,
    depth: u32,
) -> f64 {
    let (lm, flm, left) = simpson(f, a, fa, m, fm);
    let (rm, frm, right) = simpson(f, m, fm, b, fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * tol {
        return left + right + delta / 15.0;
    }
    adapt(f, a, fa, m, fm, left, lm, flm, tol / 2.0, depth - 1)
        + adapt(f, m, fm, b, fb, right, rm, frm, tol / 2.0, depth - 1)
}

/// Adaptive Simpson quadrature of `f` over `[a, b]`, started from 256 panels so
/// that narrow peaks are not skipped by the first error estimate.
pub fn integrate(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    const PANELS: usize = 256;
    if a == b {
        return 0.0;
    }
    let h = (b - a) / PANELS as f64;
    (0..PANELS)
        .map(|k| {
            let lo = a + k as f64 * h;
            let hi = if k + 1 == PANELS { b } else { lo + h };
            let (flo, fhi) = (f(lo), f(hi));
            let (m, fm, whole) = simpson(f, lo, flo, hi, fhi);
            adapt(f, lo, flo, hi, fhi, whole, m, fm, tol / PANELS as f64, 50)
        })
        .sum()
}

const TOL: f64 = 1e-14;

/// Student-t CDF by quadrature after substituting `x = sqrt(nu) tan(theta)`,
/// which maps the density to `cos(theta)^(nu-1)` on a finite interval.
pub fn t_cdf_quadrature(x: f64, nu: f64) -> f64 {
    let g = |th: f64| th.cos().powf(nu - 1.0);
    let total = integrate(&g, 0.0, FRAC_PI_2, TOL);
    let part = integrate(&g, 0.0, (x.abs() / nu.sqrt()).atan(), TOL);
    0.5 + x.signum() * 0.5 * part / total
}

/// F CDF by quadrature after substituting `x = (d2/d1) tan(theta)^2`, giving the
/// integrand `sin(theta)^(d1-1) cos(theta)^(d2-1)` on `[0, pi/2]`.
pub fn f_cdf_quadrature(x: f64, d1: f64, d2: f64) -> f64 {
    let g = |th: f64| th.sin().powf(d1 - 1.0) * th.cos().powf(d2 - 1.0);
    let total = integrate(&g, 0.0, FRAC_PI_2, TOL);
    let part = integrate(&g, 0.0, (d1 * x / d2).sqrt().atan(), TOL);
    part / total
}

/// Least squares with intercept through the normal equations and Gaussian elimination.
pub fn normal_equations(columns: &[Vec<f64>], y: &[f64]) -> Vec<f64> {
    let n = y.len();
    let p = columns.len() + 1;
    let col = |j: usize, i: usize| if j < columns.len() { columns[j][i] } else { 1.0 };
    let mut a = vec![vec![0.0; p + 1]; p];
    for r in 0..p {
        for c in 0..p {
            a[r][c] = (0..n).map(|i| col(r, i) * col(c, i)).sum();
        }
        a[r][p] = (0..n).map(|i| col(r, i) * y[i]).sum();
    }
    for k in 0..p {
        let piv = (k..p).max_by(|&i, &j| a[i][k].abs().total_cmp(&a[j][k].abs())).unwrap();
        a.swap(k, piv);
        for r in k + 1..p {
            let f = a[r][k] / a[k][k];
            for c in k..=p {
                a[r][c] -= f * a[k][c];
            }
        }
    }
    let mut b = vec![0.0; p];
    for k in (0..p).rev() {
        b[k] = (a[k][p] - (k + 1..p).map(|c| a[k][c] * b[c]).sum::<f64>()) / a[k][k];
    }
    b
}

/// Diagonal of `(X'X)^{-1}` for the design `[columns, 1]`, by Gauss-Jordan.
pub fn inverse_gram_diagonal(columns: &[Vec<f64>]) -> Vec<f64> {
    let n = columns[0].len();
    let p = columns.len() + 1;
    let col = |j: usize, i: usize| if j < columns.len() { columns[j][i] } else { 1.0 };
    let mut a = vec![vec![0.0; 2 * p]; p];
    for r in 0..p {
        for c in 0..p {
            a[r][c] = (0..n).map(|i| col(r, i) * col(c, i)).sum();
        }
        a[r][p + r] = 1.0;
    }
    for k in 0..p {
        let piv = (k..p).max_by(|&i, &j| a[i][k].abs().total_cmp(&a[j][k].abs())).unwrap();
        a.swap(k, piv);
        let d = a[k][k];
        a[k].iter_mut().for_each(|v| *v /= d);
        for r in 0..p {
            if r != k {
                let f = a[r][k];
                for c in 0..2 * p {
                    a[r][c] -= f * a[k][c];
                }
            }
        }
    }
    (0..p).map(|k| a[k][p + k]).collect()
}
