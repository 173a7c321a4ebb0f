use super::matrix::SquareMatrix;
use crate::{Error, Result};

/// Relative size below which a column's component orthogonal to the
/// previously kept columns counts as zero.
pub const COLLINEARITY_TOL: f64 = 1e-10;

#[derive(Debug, Clone)]
pub struct OlsFit {
    /// Coefficients of the kept columns, in input order.
    pub beta: Vec<f64>,
    /// Input indices of the kept columns.
    pub kept: Vec<usize>,
    pub dropped_collinear: Vec<String>,
    pub residuals: Vec<f64>,
    /// `(X'X)^-1` over the kept columns.
    pub xtx_inv: SquareMatrix,
}

fn norm(v: &[f64]) -> f64 {
    // scaled to avoid overflow on large columns
    let scale = v.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    if scale == 0.0 {
        return 0.0;
    }
    scale * v.iter().map(|x| (x / scale).powi(2)).sum::<f64>().sqrt()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Least squares by Householder QR, processing columns in input order. A
/// column whose residual norm against the columns kept so far is at most
/// [`COLLINEARITY_TOL`] times its own norm is dropped, so of two collinear
/// columns the later one goes.
pub fn ols(y: &[f64], x: &[Vec<f64>], labels: &[String]) -> Result<OlsFit> {
    let n = y.len();
    if n == 0 {
        return Err(Error::EmptySample);
    }
    if x.iter().any(|c| c.len() != n) || labels.len() != x.len() {
        return Err(Error::Validation("ols: inconsistent dimensions".into()));
    }

    let mut work: Vec<Vec<f64>> = x.to_vec();
    let mut qty = y.to_vec();
    // r_cols[c] holds column c of R (length c + 1)
    let mut r_cols: Vec<Vec<f64>> = Vec::new();
    let mut kept = Vec::new();
    let mut dropped = Vec::new();

    for j in 0..x.len() {
        let rank = kept.len();
        let orig = norm(&x[j]);
        let below = if rank < n { norm(&work[j][rank..]) } else { 0.0 };
        if orig == 0.0 || below <= COLLINEARITY_TOL * orig {
            dropped.push(labels[j].clone());
            continue;
        }
        let (head, tail) = work.split_at_mut(j + 1);
        let col = &mut head[j];
        let alpha = if col[rank] > 0.0 { -below } else { below };
        let mut v = col[rank..].to_vec();
        v[0] -= alpha;
        let vnorm2 = dot(&v, &v);
        let reflect = |target: &mut [f64]| {
            let s = 2.0 * dot(&v, target) / vnorm2;
            for (t, vi) in target.iter_mut().zip(&v) {
                *t -= s * vi;
            }
        };
        for other in tail.iter_mut() {
            reflect(&mut other[rank..]);
        }
        reflect(&mut qty[rank..]);

        let mut rc = col[..rank].to_vec();
        rc.push(alpha);
        r_cols.push(rc);
        kept.push(j);
    }

    let k = kept.len();
    if k == 0 {
        return Err(Error::Rank);
    }
    let r = |row: usize, c: usize| r_cols[c][row];

    let mut beta = vec![0.0; k];
    for i in (0..k).rev() {
        let s: f64 = (i + 1..k).map(|c| r(i, c) * beta[c]).sum();
        beta[i] = (qty[i] - s) / r(i, i);
    }

    // R^-1 by back substitution, column by column
    let mut rinv = vec![0.0; k * k];
    for c in 0..k {
        rinv[c * k + c] = 1.0 / r(c, c);
        for i in (0..c).rev() {
            let s: f64 = (i + 1..=c).map(|t| r(i, t) * rinv[t * k + c]).sum();
            rinv[i * k + c] = -s / r(i, i);
        }
    }
    let mut xtx_inv = SquareMatrix::zeros(k);
    for a in 0..k {
        for b in a..k {
            let s: f64 = (b..k).map(|t| rinv[a * k + t] * rinv[b * k + t]).sum();
            xtx_inv.set(a, b, s);
            xtx_inv.set(b, a, s);
        }
    }

    let mut residuals = y.to_vec();
    for (c, &j) in kept.iter().enumerate() {
        for (e, xv) in residuals.iter_mut().zip(&x[j]) {
            *e -= beta[c] * xv;
        }
    }
    if !dropped.is_empty() {
        log::warn!("dropped collinear regressors: {}", dropped.join(", "));
    }

    Ok(OlsFit {
        beta,
        kept,
        dropped_collinear: dropped,
        residuals,
        xtx_inv,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::{DMatrix, DVector};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn labels(n: usize) -> Vec<String> {
        (1..=n).map(|i| format!("x{i}")).collect()
    }

    #[test]
    fn exact_line() {
        let fit = ols(&[2.0, 4.0, 6.0], &[vec![1.0, 2.0, 3.0]], &labels(1)).unwrap();
        assert!((fit.beta[0] - 2.0).abs() < 1e-14);
        assert!(fit.residuals.iter().all(|e| e.abs() < 1e-14));
    }

    #[test]
    fn later_collinear_column_dropped() {
        let x1 = vec![1.0, 2.0, 3.0, 4.0];
        let x2: Vec<f64> = x1.iter().map(|v| 2.0 * v).collect();
        let y = vec![1.1, 1.9, 3.2, 3.9];
        let alone = ols(&y, std::slice::from_ref(&x1), &labels(1)).unwrap();
        let both = ols(&y, &[x1, x2], &labels(2)).unwrap();
        assert_eq!(both.dropped_collinear, vec!["x2".to_string()]);
        assert_eq!(both.kept, vec![0]);
        assert!((both.beta[0] - alone.beta[0]).abs() < 1e-14);
    }

    #[test]
    fn errors() {
        assert!(matches!(ols(&[], &[], &[]), Err(Error::EmptySample)));
        assert!(matches!(
            ols(&[1.0, 2.0], &[vec![0.0, 0.0]], &labels(1)),
            Err(Error::Rank)
        ));
    }

    #[test]
    fn matches_normal_equations_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(50);
        let n = 50;
        let x: Vec<Vec<f64>> = (0..3)
            .map(|_| (0..n).map(|_| rng.random_range(-2.0..2.0)).collect())
            .collect();
        let y: Vec<f64> = (0..n)
            .map(|i| 0.5 * x[0][i] - 1.5 * x[1][i] + 2.0 * x[2][i] + rng.random_range(-0.1..0.1))
            .collect();
        let fit = ols(&y, &x, &labels(3)).unwrap();

        let xm = DMatrix::from_fn(n, 3, |i, j| x[j][i]);
        let xtx = xm.transpose() * &xm;
        let inv = xtx.clone().try_inverse().unwrap();
        let b = &inv * xm.transpose() * DVector::from_vec(y.clone());
        for j in 0..3 {
            assert!((fit.beta[j] - b[j]).abs() < 1e-10);
            for k in 0..3 {
                assert!((fit.xtx_inv.get(j, k) - inv[(j, k)]).abs() < 1e-10);
            }
        }
    }
}
