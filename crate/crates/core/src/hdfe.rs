//! Absorption of high-dimensional fixed effects.
//!
//! Fixed effects are removed by cyclic alternating projections: each sweep
//! subtracts level means factor by factor until no level mean exceeds
//! `tolerance * max|column|`. Singleton levels are pruned beforehand, and the
//! number of absorbed parameters is computed exactly for up to two factors
//! from the connected components of the bipartite level graph.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

pub const DEFAULT_TOLERANCE: f64 = 1e-12;
pub const DEFAULT_MAX_ITERS: usize = 10_000;

/// A categorical variable: one compact level id (`0..n_levels`) per row.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Factor {
    pub name: String,
    levels: Vec<u32>,
    counts: Vec<u32>,
}

impl Factor {
    /// Levels are numbered in sorted key order.
    pub fn from_keys<K: Ord>(name: impl Into<String>, keys: &[K]) -> Self {
        let mut ids: BTreeMap<&K, u32> = keys.iter().map(|k| (k, 0)).collect();
        for (i, v) in ids.values_mut().enumerate() {
            *v = i as u32;
        }
        let levels = keys.iter().map(|k| ids[k]).collect();
        Self::from_levels(name, levels)
    }

    /// Renumbers arbitrary level ids compactly, preserving their order.
    pub fn from_levels(name: impl Into<String>, raw: Vec<u32>) -> Self {
        let mut used: Vec<u32> = raw.clone();
        used.sort_unstable();
        used.dedup();
        let remap: std::collections::HashMap<u32, u32> =
            used.iter().enumerate().map(|(i, &l)| (l, i as u32)).collect();
        let levels: Vec<u32> = raw.iter().map(|l| remap[l]).collect();
        let mut counts = vec![0u32; used.len()];
        for &l in &levels {
            counts[l as usize] += 1;
        }
        Factor {
            name: name.into(),
            levels,
            counts,
        }
    }

    pub fn levels(&self) -> &[u32] {
        &self.levels
    }

    pub fn n_levels(&self) -> usize {
        self.counts.len()
    }

    pub fn n_rows(&self) -> usize {
        self.levels.len()
    }

    pub fn counts(&self) -> &[u32] {
        &self.counts
    }

    pub fn subset(&self, rows: &[usize]) -> Factor {
        Factor::from_levels(self.name.clone(), rows.iter().map(|&i| self.levels[i]).collect())
    }
}

#[derive(Debug, Clone)]
pub struct FeSpec {
    pub factors: Vec<Factor>,
    pub tolerance: f64,
    pub max_iters: usize,
}

impl FeSpec {
    pub fn new(factors: Vec<Factor>) -> Result<Self> {
        Self::with_tolerance(factors, DEFAULT_TOLERANCE, DEFAULT_MAX_ITERS)
    }

    pub fn with_tolerance(factors: Vec<Factor>, tolerance: f64, max_iters: usize) -> Result<Self> {
        if !(tolerance > 0.0 && tolerance.is_finite()) {
            return Err(Error::Config(format!("tolerance must be positive, got {tolerance}")));
        }
        if max_iters == 0 {
            return Err(Error::Config("max_iters must be at least 1".into()));
        }
        if let Some(first) = factors.first() {
            if factors.iter().any(|f| f.n_rows() != first.n_rows()) {
                return Err(Error::Validation("fixed-effect factors differ in length".into()));
            }
        }
        Ok(FeSpec {
            factors,
            tolerance,
            max_iters,
        })
    }

    pub fn n_rows(&self) -> Option<usize> {
        self.factors.first().map(Factor::n_rows)
    }

    pub fn subset(&self, rows: &[usize]) -> FeSpec {
        FeSpec {
            factors: self.factors.iter().map(|f| f.subset(rows)).collect(),
            tolerance: self.tolerance,
            max_iters: self.max_iters,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SingletonDrop {
    /// Surviving row indices, ascending.
    pub kept: Vec<usize>,
    pub dropped: usize,
}

/// Repeatedly removes rows that are alone in a level of any factor until no
/// such row remains. The result is the unique largest subset in which every
/// level has at least two rows, so it does not depend on visiting order.
pub fn drop_singletons(spec: &FeSpec) -> SingletonDrop {
    let Some(n) = spec.n_rows() else {
        return SingletonDrop { kept: Vec::new(), dropped: 0 };
    };
    let mut alive = vec![true; n];
    let mut counts: Vec<Vec<u32>> = spec.factors.iter().map(|f| f.counts.clone()).collect();
    loop {
        let mut changed = false;
        for fi in 0..spec.factors.len() {
            for i in 0..n {
                if alive[i] && counts[fi][spec.factors[fi].levels[i] as usize] == 1 {
                    alive[i] = false;
                    changed = true;
                    for (f, c) in spec.factors.iter().zip(counts.iter_mut()) {
                        c[f.levels[i] as usize] -= 1;
                    }
                }
            }
        }
        if !changed {
            break;
        }
    }
    let kept: Vec<usize> = (0..n).filter(|&i| alive[i]).collect();
    if kept.is_empty() && n > 0 {
        log::warn!("singleton dropping removed all {n} rows");
    }
    SingletonDrop {
        dropped: n - kept.len(),
        kept,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DofCount {
    pub m: usize,
    /// False when a third or later factor was counted as `levels - 1`.
    pub exact: bool,
}

struct UnionFind {
    parent: Vec<usize>,
}

impl UnionFind {
    fn new(n: usize) -> Self {
        UnionFind { parent: (0..n).collect() }
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    fn union(&mut self, a: usize, b: usize) -> bool {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return false;
        }
        let (lo, hi) = if ra < rb { (ra, rb) } else { (rb, ra) };
        self.parent[hi] = lo;
        true
    }
}

/// Connected components of the bipartite graph whose nodes are the levels of
/// `a` and `b` and whose edges are rows.
pub fn connected_components(a: &Factor, b: &Factor) -> usize {
    let la = a.n_levels();
    let mut uf = UnionFind::new(la + b.n_levels());
    let mut merges = 0;
    for (&x, &y) in a.levels.iter().zip(&b.levels) {
        if uf.union(x as usize, la + y as usize) {
            merges += 1;
        }
    }
    la + b.n_levels() - merges
}

/// Rank of the stacked dummy matrix of all factors (exact for up to two).
pub fn count_absorbed_dof(spec: &FeSpec) -> DofCount {
    match spec.factors.as_slice() {
        [] => DofCount { m: 0, exact: true },
        [one] => DofCount {
            m: one.n_levels(),
            exact: true,
        },
        [a, b, rest @ ..] => {
            let two = a.n_levels() + b.n_levels() - connected_components(a, b);
            let extra: usize = rest.iter().map(|f| f.n_levels().saturating_sub(1)).sum();
            DofCount {
                m: two + extra,
                exact: rest.is_empty(),
            }
        }
    }
}

#[derive(Debug, Clone)]
pub struct AbsorptionResult {
    pub columns: Vec<Vec<f64>>,
    pub iterations_used: usize,
    pub singleton_rows_dropped: usize,
    pub absorbed_dof: DofCount,
    /// Original row index of each output row.
    pub kept_rows: Vec<usize>,
}

/// Subtracts the mean of each level of `factor` from `col`; returns the
/// largest absolute level mean removed.
fn demean_once(col: &mut [f64], factor: &Factor, sums: &mut Vec<f64>) -> f64 {
    sums.clear();
    sums.resize(factor.n_levels(), 0.0);
    for (&l, &v) in factor.levels.iter().zip(col.iter()) {
        sums[l as usize] += v;
    }
    let mut biggest = 0.0f64;
    for (s, &c) in sums.iter_mut().zip(&factor.counts) {
        *s /= f64::from(c);
        biggest = biggest.max(s.abs());
    }
    for (&l, v) in factor.levels.iter().zip(col.iter_mut()) {
        *v -= sums[l as usize];
    }
    biggest
}

/// Sweeps every factor once over `col`; returns the largest change relative
/// to `scale`.
fn sweep(col: &mut [f64], factors: &[Factor], scale: f64, sums: &mut Vec<f64>) -> f64 {
    if scale == 0.0 {
        return 0.0;
    }
    factors
        .iter()
        .map(|f| demean_once(col, f, sums))
        .fold(0.0, f64::max)
        / scale
}

/// Removes the fixed effects in `spec` from every column (column-major
/// input, one `Vec` per column). Expects singletons to be gone already.
pub fn absorb(columns: &[Vec<f64>], spec: &FeSpec) -> Result<AbsorptionResult> {
    let n = columns.first().map_or(0, Vec::len);
    if columns.iter().any(|c| c.len() != n) || spec.n_rows().is_some_and(|r| r != n) {
        return Err(Error::Validation("absorb: column and factor lengths differ".into()));
    }
    let mut out: Vec<Vec<f64>> = columns.to_vec();
    let scales: Vec<f64> = out
        .iter()
        .map(|c| c.iter().fold(0.0f64, |m, v| m.max(v.abs())))
        .collect();

    let iterations_used = if spec.factors.is_empty() {
        0
    } else if spec.factors.len() == 1 {
        out.par_iter_mut().zip(&scales).for_each_init(Vec::new, |sums, (c, &s)| {
            sweep(c, &spec.factors, s, sums);
        });
        1
    } else {
        let mut done = None;
        let mut last_change = f64::INFINITY;
        for iter in 1..=spec.max_iters {
            let change = out
                .par_iter_mut()
                .zip(&scales)
                .map_init(Vec::new, |sums, (c, &s)| sweep(c, &spec.factors, s, sums))
                .reduce(|| 0.0, f64::max);
            last_change = change;
            if change < spec.tolerance {
                done = Some(iter);
                break;
            }
        }
        match done {
            Some(iter) => iter,
            None => {
                return Err(Error::Convergence {
                    iterations: spec.max_iters,
                    last_change,
                })
            }
        }
    };

    Ok(AbsorptionResult {
        columns: out,
        iterations_used,
        singleton_rows_dropped: 0,
        absorbed_dof: count_absorbed_dof(spec),
        kept_rows: (0..n).collect(),
    })
}

/// Singleton dropping followed by [`absorb`] on the surviving rows.
pub fn within_transform(columns: &[Vec<f64>], spec: &FeSpec) -> Result<AbsorptionResult> {
    let drop = drop_singletons(spec);
    let sub_spec = spec.subset(&drop.kept);
    let sub_cols: Vec<Vec<f64>> = columns
        .iter()
        .map(|c| drop.kept.iter().map(|&i| c[i]).collect())
        .collect();
    let mut res = absorb(&sub_cols, &sub_spec)?;
    res.singleton_rows_dropped = drop.dropped;
    res.kept_rows = drop.kept;
    Ok(res)
}
