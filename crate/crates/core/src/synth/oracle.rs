//! Brute-force regression with one explicit dummy column per fixed-effect
//! level, solved through the pseudo-inverse of the normal equations. Used to
//! cross-check the absorbing estimator on small instances.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::estimator::SquareMatrix;
use crate::hdfe::Factor;
use crate::{Error, Result};

pub const ORACLE_MAX_ROWS: usize = 2_000;

/// Eigenvalues of `Z'Z` below this fraction of the largest count as zero.
const RANK_TOL: f64 = 1e-10;

pub enum OracleVcov<'a> {
    Classical,
    Cluster(&'a Factor),
}

#[derive(Debug, Clone)]
pub struct OracleFit {
    pub beta: Vec<f64>,
    pub vcov: SquareMatrix,
    /// Rank of `[X | dummies]`.
    pub rank: usize,
    /// Rank of the dummy block alone.
    pub dummy_rank: usize,
    pub n: usize,
    pub rss: f64,
}

fn dummies(fe: &[Factor], n: usize) -> DMatrix<f64> {
    let total: usize = fe.iter().map(Factor::n_levels).sum();
    let mut d = DMatrix::zeros(n, total);
    let mut offset = 0;
    for f in fe {
        for (i, &l) in f.levels().iter().enumerate() {
            d[(i, offset + l as usize)] = 1.0;
        }
        offset += f.n_levels();
    }
    d
}

/// Moore-Penrose inverse of a symmetric PSD matrix and its numerical rank.
fn sym_pinv(a: DMatrix<f64>) -> (DMatrix<f64>, usize) {
    let eig = SymmetricEigen::new(a);
    let top = eig.eigenvalues.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let mut inv_vals = eig.eigenvalues.clone();
    let mut rank = 0;
    for v in inv_vals.iter_mut() {
        if *v > RANK_TOL * top {
            *v = 1.0 / *v;
            rank += 1;
        } else {
            *v = 0.0;
        }
    }
    let q = &eig.eigenvectors;
    (q * DMatrix::from_diagonal(&inv_vals) * q.transpose(), rank)
}

/// Rank of the stacked dummy matrix of `fe`.
pub fn dummy_rank(fe: &[Factor]) -> usize {
    let n = fe.first().map_or(0, Factor::n_rows);
    if n == 0 {
        return 0;
    }
    let d = dummies(fe, n);
    sym_pinv(d.transpose() * &d).1
}

/// Regresses `y` on `x` plus dummies for every level of every factor, with no
/// separate intercept. Classical or CR1 covariance of the `x` block uses the
/// rank of the full design as the parameter count.
pub fn oracle_ols_dummies(y: &[f64], x: &[Vec<f64>], fe: &[Factor], vcov: OracleVcov<'_>) -> Result<OracleFit> {
    let n = y.len();
    if n > ORACLE_MAX_ROWS {
        return Err(Error::Validation(format!(
            "oracle limited to {ORACLE_MAX_ROWS} rows, got {n}"
        )));
    }
    if n == 0 {
        return Err(Error::EmptySample);
    }
    let k = x.len();
    let d = dummies(fe, n);
    let z = DMatrix::from_fn(n, k + d.ncols(), |i, j| if j < k { x[j][i] } else { d[(i, j - k)] });
    let (p, rank) = sym_pinv(z.transpose() * &z);
    let dummy_rank = if d.ncols() == 0 { 0 } else { sym_pinv(d.transpose() * &d).1 };
    if rank == 0 {
        return Err(Error::Rank);
    }
    let yv = DVector::from_column_slice(y);
    let coef = &p * z.transpose() * &yv;
    let e = &yv - &z * &coef;
    let rss = e.dot(&e);

    let df = n.checked_sub(rank).filter(|&d| d >= 1).ok_or(Error::DofExhausted {
        n,
        k,
        m: rank.saturating_sub(k),
    })?;
    let full = match vcov {
        OracleVcov::Classical => &p * (rss / df as f64),
        OracleVcov::Cluster(cl) => {
            let g = cl.n_levels();
            if g < 2 {
                return Err(Error::InsufficientClusters(g));
            }
            let mut meat = DMatrix::zeros(z.ncols(), z.ncols());
            for level in 0..g as u32 {
                let mut s = DVector::zeros(z.ncols());
                for i in (0..n).filter(|&i| cl.levels()[i] == level) {
                    s += z.row(i).transpose() * e[i];
                }
                meat += &s * s.transpose();
            }
            let c = g as f64 / (g as f64 - 1.0) * (n as f64 - 1.0) / df as f64;
            &p * meat * &p * c
        }
    };
    let mut v = SquareMatrix::zeros(k);
    for a in 0..k {
        for b in 0..k {
            v.set(a, b, full[(a, b)]);
        }
    }
    Ok(OracleFit {
        beta: coef.rows(0, k).iter().copied().collect(),
        vcov: v,
        rank,
        dummy_rank,
        n,
        rss,
    })
}
