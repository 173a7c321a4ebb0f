use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc;

use super::matrix::SquareMatrix;
use super::vcov::Dof;
use super::VcovKind;

/// Two-sided 95% normal critical value.
pub const Z_95: f64 = 1.96;

/// Everything [`summarize_fit`] needs besides derived statistics.
#[derive(Debug, Clone)]
pub struct FitParts {
    pub labels: Vec<String>,
    pub beta: Vec<f64>,
    pub vcov: SquareMatrix,
    pub vcov_kind: VcovKind,
    pub n_clusters: Option<usize>,
    pub dof: Dof,
    pub m_exact: bool,
    pub rss: f64,
    pub tss_raw: f64,
    pub tss_within: f64,
    pub reported_constant: f64,
    pub dropped_collinear: Vec<String>,
    pub singletons_dropped: usize,
    pub iterations: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub labels: Vec<String>,
    pub beta: Vec<f64>,
    pub vcov: SquareMatrix,
    pub vcov_kind: VcovKind,
    pub se: Vec<f64>,
    /// Infinite when `se` is zero and `beta` is not.
    #[serde(with = "nonfinite")]
    pub t_stat: Vec<f64>,
    pub p_value: Vec<f64>,
    pub ci95: Vec<(f64, f64)>,
    pub stars: Vec<String>,
    pub n_obs: usize,
    pub k_regressors: usize,
    pub m_absorbed: usize,
    /// False when `m_absorbed` used the approximation for 3+ factors.
    pub m_exact: bool,
    pub n_clusters: Option<usize>,
    pub r2_full: f64,
    pub r2_within: f64,
    pub sigma2: f64,
    /// `ybar - xbar'beta` over the estimation sample; point estimate only.
    pub reported_constant: f64,
    pub dropped_collinear: Vec<String>,
    pub singletons_dropped: usize,
    pub iterations: usize,
}

impl FitResult {
    pub fn index_of(&self, label: &str) -> Option<usize> {
        self.labels.iter().position(|l| l == label)
    }
}

/// JSON has no infinities; they travel as the strings `inf` / `-inf`.
mod nonfinite {
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    #[derive(Serialize, Deserialize)]
    #[serde(untagged)]
    enum Repr {
        Num(f64),
        Text(String),
    }

    pub fn serialize<S: Serializer>(v: &[f64], s: S) -> Result<S::Ok, S::Error> {
        v.iter()
            .map(|&x| match x {
                x if x.is_finite() => Repr::Num(x),
                x if x.is_nan() => Repr::Text("nan".into()),
                x if x > 0.0 => Repr::Text("inf".into()),
                _ => Repr::Text("-inf".into()),
            })
            .collect::<Vec<_>>()
            .serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<f64>, D::Error> {
        Vec::<Repr>::deserialize(d)?
            .into_iter()
            .map(|r| match r {
                Repr::Num(x) => Ok(x),
                Repr::Text(t) => match t.as_str() {
                    "inf" => Ok(f64::INFINITY),
                    "-inf" => Ok(f64::NEG_INFINITY),
                    "nan" => Ok(f64::NAN),
                    other => Err(serde::de::Error::custom(format!("bad number `{other}`"))),
                },
            })
            .collect()
    }
}

/// Two-sided p-value under the standard normal.
pub fn p_value(t: f64) -> f64 {
    erfc(t.abs() / std::f64::consts::SQRT_2)
}

pub fn stars(p: f64) -> &'static str {
    if p < 0.01 {
        "***"
    } else if p < 0.05 {
        "**"
    } else if p < 0.1 {
        "*"
    } else {
        ""
    }
}

fn r_squared(rss: f64, tss: f64) -> f64 {
    if tss > 0.0 {
        1.0 - rss / tss
    } else if rss == 0.0 {
        1.0
    } else {
        0.0
    }
}

pub fn summarize_fit(parts: FitParts) -> FitResult {
    let se: Vec<f64> = parts.vcov.diag().iter().map(|v| v.max(0.0).sqrt()).collect();
    let t_stat: Vec<f64> = parts
        .beta
        .iter()
        .zip(&se)
        .map(|(&b, &s)| {
            if s > 0.0 {
                b / s
            } else if b == 0.0 {
                0.0
            } else {
                b.signum() * f64::INFINITY
            }
        })
        .collect();
    let p: Vec<f64> = t_stat.iter().map(|&t| p_value(t)).collect();
    let resid_df = parts.dof.n.saturating_sub(parts.dof.k_total()).max(1);
    FitResult {
        ci95: parts
            .beta
            .iter()
            .zip(&se)
            .map(|(&b, &s)| (b - Z_95 * s, b + Z_95 * s))
            .collect(),
        stars: p.iter().map(|&v| stars(v).to_string()).collect(),
        labels: parts.labels,
        beta: parts.beta,
        vcov: parts.vcov,
        vcov_kind: parts.vcov_kind,
        se,
        t_stat,
        p_value: p,
        n_obs: parts.dof.n,
        k_regressors: parts.dof.k,
        m_absorbed: parts.dof.m,
        m_exact: parts.m_exact,
        n_clusters: parts.n_clusters,
        r2_full: r_squared(parts.rss, parts.tss_raw),
        r2_within: r_squared(parts.rss, parts.tss_within),
        sigma2: parts.rss / resid_df as f64,
        reported_constant: parts.reported_constant,
        dropped_collinear: parts.dropped_collinear,
        singletons_dropped: parts.singletons_dropped,
        iterations: parts.iterations,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parts(beta: f64, se: f64) -> FitParts {
        let mut vcov = SquareMatrix::zeros(1);
        vcov.set(0, 0, se * se);
        FitParts {
            labels: vec!["x".into()],
            beta: vec![beta],
            vcov,
            vcov_kind: VcovKind::Classical,
            n_clusters: None,
            dof: Dof { n: 100, k: 1, m: 10 },
            m_exact: true,
            rss: 0.0,
            tss_raw: 4.0,
            tss_within: 2.0,
            reported_constant: 0.0,
            dropped_collinear: vec![],
            singletons_dropped: 0,
            iterations: 1,
        }
    }

    #[test]
    fn inference_arithmetic() {
        let f = summarize_fit(parts(0.001, 0.0005));
        assert!((f.t_stat[0] - 2.0).abs() < 1e-12);
        assert!((f.p_value[0] - 0.0455).abs() < 1e-4);
        assert_eq!(f.stars[0], "**");
        assert!((f.ci95[0].0 - 0.00002).abs() < 1e-12);
        assert!((f.ci95[0].1 - 0.00198).abs() < 1e-12);
        // perfect fit
        assert_eq!(f.r2_full, 1.0);
        assert_eq!(f.r2_within, 1.0);
    }

    #[test]
    fn zero_se_limit() {
        let f = summarize_fit(parts(0.3, 0.0));
        assert_eq!(f.p_value[0], 0.0);
        assert_eq!(f.stars[0], "***");
        let z = summarize_fit(parts(0.0, 0.0));
        assert_eq!(z.p_value[0], 1.0);
        assert_eq!(z.stars[0], "");
    }

    #[test]
    fn star_thresholds() {
        assert_eq!(stars(0.009), "***");
        assert_eq!(stars(0.01), "**");
        assert_eq!(stars(0.049), "**");
        assert_eq!(stars(0.05), "*");
        assert_eq!(stars(0.099), "*");
        assert_eq!(stars(0.1), "");
    }
}
