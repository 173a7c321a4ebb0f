use serde::{Deserialize, Serialize};

use super::matrix::SquareMatrix;
use crate::hdfe::Factor;
use crate::{Error, Result};

/// Observation count, estimated slopes and absorbed fixed-effect parameters.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Dof {
    pub n: usize,
    pub k: usize,
    pub m: usize,
}

impl Dof {
    /// `n - k - m`, which must be at least one.
    pub fn residual(&self) -> Result<usize> {
        match self.n.checked_sub(self.k + self.m) {
            Some(d) if d >= 1 => Ok(d),
            _ => Err(Error::DofExhausted {
                n: self.n,
                k: self.k,
                m: self.m,
            }),
        }
    }

    pub fn k_total(&self) -> usize {
        self.k + self.m
    }
}

/// `sigma2 * (X'X)^-1` with `sigma2 = RSS / (n - k - m)`.
pub fn classical_vcov(residuals: &[f64], xtx_inv: &SquareMatrix, dof: Dof) -> Result<SquareMatrix> {
    let df = dof.residual()?;
    let rss: f64 = residuals.iter().map(|e| e * e).sum();
    let mut v = xtx_inv.clone();
    v.scale(rss / df as f64);
    Ok(v)
}

/// CR1 sandwich `c * B (sum_g s_g s_g') B` with `B = (X'X)^-1`,
/// `s_g = X_g' e_g` and `c = G/(G-1) * (N-1)/(N-K)`, `K = k + m`.
///
/// `regressors` are the kept (demeaned) columns matching `xtx_inv`.
pub fn cluster_vcov(
    residuals: &[f64],
    regressors: &[&[f64]],
    xtx_inv: &SquareMatrix,
    clusters: &Factor,
    dof: Dof,
) -> Result<SquareMatrix> {
    let g = clusters.n_levels();
    if g < 2 {
        return Err(Error::InsufficientClusters(g));
    }
    let k = regressors.len();
    if xtx_inv.dim != k || clusters.n_rows() != residuals.len() {
        return Err(Error::Validation("cluster_vcov: inconsistent dimensions".into()));
    }
    let df = dof.residual()?;

    let mut scores = vec![0.0; g * k];
    for (i, (&level, &e)) in clusters.levels().iter().zip(residuals).enumerate() {
        let row = &mut scores[level as usize * k..(level as usize + 1) * k];
        for (s, col) in row.iter_mut().zip(regressors) {
            *s += col[i] * e;
        }
    }
    let mut meat = SquareMatrix::zeros(k);
    for s in scores.chunks_exact(k) {
        for a in 0..k {
            for b in 0..k {
                meat.data[a * k + b] += s[a] * s[b];
            }
        }
    }
    let mut v = xtx_inv.mul(&meat).mul(xtx_inv);
    v.symmetrize();
    let (gf, nf) = (g as f64, dof.n as f64);
    v.scale(gf / (gf - 1.0) * (nf - 1.0) / df as f64);
    Ok(v)
}
