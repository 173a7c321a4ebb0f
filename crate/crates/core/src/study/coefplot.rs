use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::format::fmt_sig;
use crate::estimator::{FitResult, Z_95};
use crate::tembin::BinSpec;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoefPoint {
    pub label: String,
    pub display: String,
    pub beta: f64,
    pub lo: f64,
    pub hi: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoefPlotArtifact {
    pub title: String,
    pub points: Vec<CoefPoint>,
    pub zero_line: bool,
}

/// Picks `order` out of `fit` with 95% intervals `beta ± 1.96 se`.
pub fn emit_coefplot(fit: &FitResult, order: &[String], bins: &BinSpec) -> Result<CoefPlotArtifact> {
    let points = order
        .iter()
        .map(|label| {
            let j = fit
                .index_of(label)
                .ok_or_else(|| Error::UnknownVariable(label.clone()))?;
            Ok(point(label.clone(), bins.pretty_label(label), fit.beta[j], fit.se[j]))
        })
        .collect::<Result<_>>()?;
    Ok(CoefPlotArtifact {
        title: "Coefficient plot".into(),
        points,
        zero_line: true,
    })
}

pub(crate) fn point(label: String, display: String, beta: f64, se: f64) -> CoefPoint {
    CoefPoint {
        label,
        display,
        beta,
        lo: beta - Z_95 * se,
        hi: beta + Z_95 * se,
    }
}

fn xml_escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

const WIDTH: f64 = 720.0;
const HEIGHT: f64 = 440.0;
const LEFT: f64 = 96.0;
const RIGHT: f64 = 24.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 96.0;
const CAP: f64 = 6.0;
const N_TICKS: usize = 5;

impl CoefPlotArtifact {
    /// `label,beta,lo,hi` rows with shortest round-trip float text.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("label,beta,lo,hi\n");
        for p in &self.points {
            let _ = writeln!(out, "{},{},{},{}", p.label, p.beta, p.lo, p.hi);
        }
        out
    }

    fn y_range(&self) -> (f64, f64) {
        let mut lo = self.points.iter().map(|p| p.lo).fold(f64::INFINITY, f64::min);
        let mut hi = self.points.iter().map(|p| p.hi).fold(f64::NEG_INFINITY, f64::max);
        if self.zero_line || !lo.is_finite() {
            lo = lo.min(0.0);
            hi = hi.max(0.0);
        }
        if hi.partial_cmp(&lo) != Some(std::cmp::Ordering::Greater) {
            return (lo - 1.0, hi + 1.0);
        }
        let pad = 0.05 * (hi - lo);
        (lo - pad, hi + pad)
    }

    /// Vertical coefficient plot: one capped interval and marker per point.
    pub fn to_svg(&self) -> String {
        let (y0, y1) = self.y_range();
        let plot_h = HEIGHT - TOP - BOTTOM;
        let plot_w = WIDTH - LEFT - RIGHT;
        let y = |v: f64| TOP + (y1 - v) / (y1 - y0) * plot_h;
        let n = self.points.len().max(1) as f64;
        let x = |i: usize| LEFT + (i as f64 + 0.5) / n * plot_w;

        let mut s = String::new();
        let _ = writeln!(
            s,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
        );
        let _ = writeln!(s, r#"<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="24" text-anchor="middle" font-size="15">{}</text>"#,
            WIDTH / 2.0,
            xml_escape(&self.title)
        );
        let _ = writeln!(
            s,
            r#"<rect x="{LEFT:.2}" y="{TOP:.2}" width="{plot_w:.2}" height="{plot_h:.2}" fill="none" stroke="black"/>"#
        );
        for t in 0..N_TICKS {
            let v = y0 + (y1 - y0) * t as f64 / (N_TICKS - 1) as f64;
            let py = y(v);
            let _ = writeln!(
                s,
                r#"<line x1="{:.2}" y1="{py:.2}" x2="{LEFT:.2}" y2="{py:.2}" stroke="black"/>"#,
                LEFT - 4.0
            );
            let _ = writeln!(
                s,
                r#"<text x="{:.2}" y="{:.2}" text-anchor="end">{}</text>"#,
                LEFT - 8.0,
                py + 4.0,
                fmt_sig(v)
            );
        }
        if self.zero_line {
            let pz = y(0.0);
            let _ = writeln!(
                s,
                r##"<line x1="{LEFT:.2}" y1="{pz:.2}" x2="{:.2}" y2="{pz:.2}" stroke="#888888" stroke-dasharray="4 3"/>"##,
                LEFT + plot_w
            );
        }
        for (i, p) in self.points.iter().enumerate() {
            let px = x(i);
            let (plo, phi, pb) = (y(p.lo), y(p.hi), y(p.beta));
            let _ = writeln!(
                s,
                r##"<line x1="{px:.2}" y1="{plo:.2}" x2="{px:.2}" y2="{phi:.2}" stroke="#1f4e79"/>"##
            );
            for py in [plo, phi] {
                let _ = writeln!(
                    s,
                    r##"<line x1="{:.2}" y1="{py:.2}" x2="{:.2}" y2="{py:.2}" stroke="#1f4e79"/>"##,
                    px - CAP,
                    px + CAP
                );
            }
            let _ = writeln!(s, r##"<circle cx="{px:.2}" cy="{pb:.2}" r="3.5" fill="#1f4e79"/>"##);
            let ly = HEIGHT - BOTTOM + 14.0;
            let _ = writeln!(
                s,
                r#"<text x="{px:.2}" y="{ly:.2}" text-anchor="end" transform="rotate(-45 {px:.2} {ly:.2})">{}</text>"#,
                xml_escape(&p.display)
            );
        }
        s.push_str("</svg>\n");
        s
    }
}
