//! Acceptance gate. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails.

use std::collections::BTreeMap;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::{Duration, Instant};

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use thermopanel::estimator::{
    cluster_vcov, estimate, fit_spec, ols, Dimension, Dof, FitResult, RegressionSpec, SquareMatrix,
};
use thermopanel::hdfe::{connected_components, count_absorbed_dof, drop_singletons, Factor, FeSpec};
use thermopanel::paneldata::{
    join_firm_weather, parse_firm_csv, parse_weather_csv, JoinOptions, PanelDataset, PanelRow, WeatherSchema,
};
use thermopanel::study::{run_descriptives, run_pipeline, run_robustness, StudyConfig, TableArtifact};
use thermopanel::synth::{dummy_rank, generate_panel, oracle_ols_dummies, OracleVcov, SynthScenario};
use thermopanel::tembin::{bin_index, build_lagged, count_bins, BinSpec, FeatureMatrix, CONTROL_LABELS, N_BINS};

type Criterion = (&'static str, fn() -> Outcome);

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn normal(rng: &mut ChaCha8Rng) -> f64 {
    StandardNormal.sample(rng)
}

fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

fn rel_diff(a: &SquareMatrix, b: &SquareMatrix) -> f64 {
    let scale = b.data.iter().map(|v| v.abs()).fold(0.0, f64::max);
    max_abs_diff(&a.data, &b.data) / scale.max(f64::MIN_POSITIVE)
}

fn pick(rows: &[usize], v: &[f64]) -> Vec<f64> {
    rows.iter().map(|&i| v[i]).collect()
}

fn pick_keys(rows: &[usize], v: &[u32]) -> Vec<u32> {
    rows.iter().map(|&i| v[i]).collect()
}

/// Random unbalanced firm-year panel with `k` regressors.
struct SmallPanel {
    y: Vec<f64>,
    x: Vec<Vec<f64>>,
    firm: Vec<u32>,
    year: Vec<u32>,
    city: Vec<u32>,
}

fn small_panel(rng: &mut ChaCha8Rng) -> SmallPanel {
    let n_firms = rng.random_range(3..=20u32);
    let n_years = rng.random_range(2..=5u32);
    let n_cities = rng.random_range(2..=6u32);
    let keep = rng.random_range(0.55..1.0);
    let k = rng.random_range(1..=3usize);
    let betas: Vec<f64> = (0..k).map(|_| normal(rng)).collect();
    let firm_city: Vec<u32> = (0..n_firms).map(|_| rng.random_range(0..n_cities)).collect();
    let firm_fe: Vec<f64> = (0..n_firms).map(|_| normal(rng)).collect();
    let year_fe: Vec<f64> = (0..n_years).map(|_| normal(rng)).collect();
    let mut p = SmallPanel {
        y: vec![],
        x: vec![vec![]; k],
        firm: vec![],
        year: vec![],
        city: vec![],
    };
    for f in 0..n_firms {
        for t in 0..n_years {
            if !rng.random_bool(keep) || p.y.len() >= 200 {
                continue;
            }
            let mut y = firm_fe[f as usize] + year_fe[t as usize] + 0.5 * normal(rng);
            for (j, b) in betas.iter().enumerate() {
                // regressors correlated with the firm effect
                let v = normal(rng) + 0.7 * firm_fe[f as usize];
                p.x[j].push(v);
                y += b * v;
            }
            p.y.push(y);
            p.firm.push(f);
            p.year.push(t);
            p.city.push(firm_city[f as usize]);
        }
    }
    p
}

fn labels(k: usize) -> Vec<String> {
    (0..k).map(|j| format!("x{j}")).collect()
}

fn criterion_oracle() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(20_240_601);
    let (mut worst_b, mut worst_vc, mut worst_vr) = (0.0f64, 0.0f64, 0.0f64);
    let mut done = 0;
    let mut skipped = 0;
    while done < 200 {
        let p = small_panel(&mut rng);
        let fe = FeSpec::new(vec![Factor::from_keys("firm", &p.firm), Factor::from_keys("year", &p.year)]).unwrap();
        let kept = drop_singletons(&fe).kept;
        let city = Factor::from_keys("city", &pick_keys(&kept, &p.city));
        if kept.len() < 12 || city.n_levels() < 2 {
            skipped += 1;
            continue;
        }
        let lab = labels(p.x.len());
        let classical = estimate(&p.y, &p.x, &lab, &fe, None);
        let city_full = Factor::from_keys("city", &p.city);
        let clustered = estimate(&p.y, &p.x, &lab, &fe, Some((Dimension::City, &city_full)));
        let (Ok(classical), Ok(clustered)) = (classical, clustered) else {
            skipped += 1;
            continue;
        };

        // The oracle sees the same post-singleton sample with explicit dummies.
        let y = pick(&kept, &p.y);
        let x: Vec<Vec<f64>> = p.x.iter().map(|c| pick(&kept, c)).collect();
        let ofe = [
            Factor::from_keys("firm", &pick_keys(&kept, &p.firm)),
            Factor::from_keys("year", &pick_keys(&kept, &p.year)),
        ];
        let oc = oracle_ols_dummies(&y, &x, &ofe, OracleVcov::Classical).unwrap();
        let or = oracle_ols_dummies(&y, &x, &ofe, OracleVcov::Cluster(&city)).unwrap();
        worst_b = worst_b.max(max_abs_diff(&classical.beta, &oc.beta));
        worst_b = worst_b.max(max_abs_diff(&clustered.beta, &or.beta));
        worst_vc = worst_vc.max(rel_diff(&classical.vcov, &oc.vcov));
        worst_vr = worst_vr.max(rel_diff(&clustered.vcov, &or.vcov));
        done += 1;
    }
    let secs = start.elapsed().as_secs_f64();
    outcome(
        worst_b < 1e-8 && worst_vc < 1e-8 && worst_vr < 1e-8 && secs < 60.0,
        format!(
            "200 panels ({skipped} degenerate draws redrawn): max |dβ| {worst_b:.2e}, classical vcov rel {worst_vc:.2e}, CR1 vcov rel {worst_vr:.2e}, {secs:.2}s"
        ),
    )
}

/// HC1 computed from scratch: `n/(n-k) (X'X)^-1 X' diag(e^2) X (X'X)^-1`.
fn hc1_oracle(y: &[f64], x: &[Vec<f64>]) -> DMatrix<f64> {
    let n = y.len();
    let k = x.len();
    let xm = DMatrix::from_fn(n, k, |i, j| x[j][i]);
    let yv = DVector::from_column_slice(y);
    let xtx_inv = (xm.transpose() * &xm).try_inverse().unwrap();
    let b = &xtx_inv * xm.transpose() * &yv;
    let e = &yv - &xm * b;
    let mut meat = DMatrix::zeros(k, k);
    for i in 0..n {
        let r = xm.row(i).transpose() * e[i];
        meat += &r * r.transpose();
    }
    &xtx_inv * meat * &xtx_inv * (n as f64 / (n - k) as f64)
}

fn criterion_hc1() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let mut worst = 0.0f64;
    for _ in 0..50 {
        let n = rng.random_range(20..300usize);
        let k = rng.random_range(1..=5usize);
        let x: Vec<Vec<f64>> = (0..k).map(|_| (0..n).map(|_| normal(&mut rng)).collect()).collect();
        let y: Vec<f64> = (0..n)
            .map(|i| x.iter().map(|c| c[i]).sum::<f64>() + normal(&mut rng) * (1.0 + x[0][i].abs()))
            .collect();
        let fit = ols(&y, &x, &labels(k)).unwrap();
        let cols: Vec<&[f64]> = x.iter().map(|c| c.as_slice()).collect();
        let singletons = Factor::from_levels("row", (0..n as u32).collect());
        let v = cluster_vcov(&fit.residuals, &cols, &fit.xtx_inv, &singletons, Dof { n, k, m: 0 }).unwrap();
        let h = hc1_oracle(&y, &x);
        let mut hm = SquareMatrix::zeros(k);
        for a in 0..k {
            for b in 0..k {
                hm.set(a, b, h[(a, b)]);
            }
        }
        worst = worst.max(rel_diff(&v, &hm));
    }
    outcome(worst < 1e-12, format!("50 instances: max relative difference {worst:.2e}"))
}

fn criterion_dof() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    let mut mismatches = 0;
    let mut multi = 0;
    for inst in 0..100 {
        let (mut firms, mut years) = (Vec::new(), Vec::new());
        // first 30 instances: disjoint blocks of firms and years
        let blocks = if inst < 30 { rng.random_range(2..=4u32) } else { 1 };
        for b in 0..blocks {
            let nf = rng.random_range(1..=8u32);
            let ny = rng.random_range(1..=5u32);
            for f in 0..nf {
                for t in 0..ny {
                    if rng.random_bool(0.6) || (f == 0 && t == 0) {
                        firms.push(b * 100 + f);
                        years.push(b * 100 + t);
                    }
                }
            }
        }
        let a = Factor::from_keys("firm", &firms);
        let y = Factor::from_keys("year", &years);
        if connected_components(&a, &y) >= 2 {
            multi += 1;
        }
        let spec = FeSpec::new(vec![a.clone(), y.clone()]).unwrap();
        let m = count_absorbed_dof(&spec).m;
        if m != dummy_rank(&[a, y]) {
            mismatches += 1;
        }
    }
    outcome(
        mismatches == 0 && multi >= 10,
        format!("100 instances, {multi} with >= 2 components, {mismatches} mismatches"),
    )
}

fn spec2(bins: &BinSpec) -> RegressionSpec {
    let regs: Vec<String> = bins
        .ascii_labels()
        .into_iter()
        .chain(CONTROL_LABELS.iter().map(|s| s.to_string()))
        .collect();
    let mut s = RegressionSpec::new("baseline (2)", regs);
    s.include_controls = true;
    s
}

/// Synthetic data through the CSV writers, parsers and join.
fn csv_round_trip(scenario: &SynthScenario) -> PanelDataset {
    let synth = generate_panel(scenario).unwrap();
    let weather = parse_weather_csv(synth.weather_csv().as_bytes(), &WeatherSchema::default()).unwrap();
    let firms = parse_firm_csv(synth.firm_csv().as_bytes()).unwrap();
    assert!(weather.errors.is_empty() && firms.errors.is_empty());
    join_firm_weather(&firms.records, &weather.records, &JoinOptions::default()).unwrap()
}

fn criterion_recovery() -> Outcome {
    let start = Instant::now();
    let bins = BinSpec::default();
    let spec = spec2(&bins);
    let mut hits = vec![0usize; N_BINS + 3];
    let mut planted = Vec::new();
    for seed in 0..100u64 {
        let scenario = SynthScenario {
            seed,
            ..SynthScenario::default()
        };
        let panel = csv_round_trip(&scenario);
        let features = FeatureMatrix::from_panel(&panel, &bins, true);
        let fit = fit_spec(&panel, &features, &spec).unwrap();
        planted = scenario.beta_bins.iter().chain(&scenario.beta_controls).copied().collect();
        for (j, truth) in planted.iter().enumerate() {
            let (lo, hi) = fit.ci95[j];
            if lo <= *truth && *truth <= hi {
                hits[j] += 1;
            }
        }
    }
    let secs = start.elapsed().as_secs_f64();
    let min = hits.iter().copied().min().unwrap_or(0);
    let labels: Vec<String> = bins.ascii_labels().into_iter().chain(CONTROL_LABELS.map(String::from)).collect();
    let worst = labels[hits.iter().position(|&h| h == min).unwrap()].clone();
    outcome(
        min >= 90 && secs < 300.0 && planted.len() == 12,
        format!("coverage per coefficient {hits:?}/100 (min {min}, {worst}), {secs:.1}s"),
    )
}

fn criterion_partition() -> Outcome {
    let spec = BinSpec::default();
    let edges = spec.edges().to_vec();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut bad = 0;
    for _ in 0..10_000 {
        let len = rng.random_range(0..=400usize);
        let temps: Vec<f64> = (0..len)
            .map(|_| {
                if rng.random_bool(0.1) {
                    edges[rng.random_range(0..edges.len())]
                } else {
                    (rng.random_range(-35.0..45.0f64) * 10.0).round() / 10.0
                }
            })
            .collect();
        let c = count_bins(&temps, &spec).unwrap();
        // independent classifier: number of edges strictly below t
        let mut naive = [0u32; N_BINS + 1];
        for &t in &temps {
            naive[edges.iter().filter(|&&e| e < t).count()] += 1;
        }
        let mut expect = [0u32; N_BINS];
        let mut slot = 0;
        for (i, &v) in naive.iter().enumerate() {
            if i != spec.reference_interval() {
                expect[slot] = v;
                slot += 1;
            }
        }
        let ok = c.counts.iter().sum::<u32>() + c.reference_days == c.total_days
            && c.total_days as usize == len
            && c.counts == expect
            && c.reference_days == naive[spec.reference_interval()];
        if !ok {
            bad += 1;
        }
    }
    let boundaries = bin_index(-10.0, &spec).unwrap() == 0
        && bin_index(-9.9, &spec).unwrap() == 1
        && bin_index(15.0, &spec).unwrap() == spec.reference_interval()
        && bin_index(15.1, &spec).unwrap() == 6
        && bin_index(30.0, &spec).unwrap() == 8
        && bin_index(30.1, &spec).unwrap() == 9;
    outcome(
        bad == 0 && boundaries,
        format!("10000 series, {bad} violations; boundaries -10 -> coldest, 15 -> reference, 30 -> 25~30: {boundaries}"),
    )
}

fn criterion_lag_trim() -> Outcome {
    let mut all_ok = true;
    let mut detail = String::new();
    for seed in 0..5 {
        let scenario = SynthScenario {
            n_firms: 40,
            seed,
            ..SynthScenario::default()
        };
        let panel = csv_round_trip(&scenario);
        let bins = BinSpec::default();
        let features = FeatureMatrix::from_panel(&panel, &bins, true);
        let lagged = build_lagged(&panel, &features, 1).unwrap();
        let years: std::collections::BTreeSet<i32> = lagged.panel.rows.iter().map(|r| r.year).collect();
        let expected: std::collections::BTreeSet<i32> = (2006..=2014).collect();
        let table = run_robustness(&panel, &StudyConfig::default()).unwrap();
        let n_obs = table.columns()[0].fit().unwrap().n_obs;
        let ok = years == expected && lagged.panel.len() == 40 * 9 && n_obs == 40 * 9;
        all_ok &= ok;
        if seed == 0 {
            detail = format!(
                "input years {}-{}, lagged years {:?}..{:?}, {} rows",
                scenario.start_year,
                scenario.end_year(),
                years.first(),
                years.last(),
                lagged.panel.len()
            );
        }
    }
    outcome(all_ok, format!("5 panels; {detail}"))
}

fn artifact_bytes(panel: &PanelDataset, config: &StudyConfig) -> BTreeMap<String, String> {
    let a = run_pipeline(panel, config).unwrap();
    let mut out = BTreeMap::new();
    for t in &a.tables {
        out.insert(format!("{}.txt", t.kind.file_stem()), t.to_text());
        out.insert(format!("{}.json", t.kind.file_stem()), t.to_json().unwrap());
    }
    for (stem, p) in &a.plots {
        out.insert(format!("{stem}.svg"), p.to_svg());
        out.insert(format!("{stem}.csv"), p.to_csv());
    }
    out
}

fn criterion_determinism() -> Outcome {
    let panel = csv_round_trip(&SynthScenario {
        seed: 11,
        ..SynthScenario::default()
    });
    let config = StudyConfig {
        industry_min_obs: 100,
        ..StudyConfig::default()
    };
    let runs: Vec<_> = (0..3).map(|_| artifact_bytes(&panel, &config)).collect();
    let pool = |n| rayon::ThreadPoolBuilder::new().num_threads(n).build().unwrap();
    let one = pool(1).install(|| artifact_bytes(&panel, &config));
    let many = pool(4).install(|| artifact_bytes(&panel, &config));
    let same = runs.iter().all(|r| *r == runs[0]) && one == runs[0] && many == runs[0];
    let bytes: usize = runs[0].values().map(String::len).sum();
    outcome(
        same && runs[0].len() == 14,
        format!("{} artifacts ({bytes} bytes) identical across 3 runs and 1 vs 4 threads: {same}", runs[0].len()),
    )
}

fn peak_rss_kb() -> Option<u64> {
    let status = std::fs::read_to_string("/proc/self/status").ok()?;
    let line = status.lines().find(|l| l.starts_with("VmHWM:"))?;
    line.split_whitespace().nth(1)?.parse().ok()
}

fn criterion_scale() -> Outcome {
    const ROWS: usize = 1_381_908;
    let gen_start = Instant::now();
    let scenario = SynthScenario {
        n_firms: 138_191,
        seed: 8,
        ..SynthScenario::default()
    };
    let panel = {
        let mut synth = generate_panel(&scenario).unwrap();
        synth.truth.rows = Vec::new();
        // two missing firm-years leave the panel slightly unbalanced
        synth.firms.remove(15);
        synth.firms.remove(1_000_003);
        join_firm_weather(&synth.firms, &synth.weather, &JoinOptions::default()).unwrap()
    };
    let gen_secs = gen_start.elapsed().as_secs_f64();
    let bins = BinSpec::default();
    let spec = spec2(&bins);
    let start = Instant::now();
    let features = FeatureMatrix::from_panel(&panel, &bins, true);
    let fit: FitResult = fit_spec(&panel, &features, &spec).unwrap();
    let secs = start.elapsed().as_secs_f64();
    let peak_gb = peak_rss_kb().map(|kb| kb as f64 / 1024.0 / 1024.0);
    let converged = fit.iterations < spec.max_iters;
    outcome(
        panel.len() == ROWS && secs < 60.0 && peak_gb.is_some_and(|g| g < 4.0) && converged,
        format!(
            "{} rows, spec (2) in {secs:.2}s ({} iterations), peak RSS {:.2} GB, data build {gen_secs:.1}s",
            panel.len(),
            fit.iterations,
            peak_gb.unwrap_or(f64::NAN)
        ),
    )
}

/// Welford's one-pass mean and variance, an independent route to the same
/// statistics.
fn welford(xs: &[f64]) -> (f64, f64) {
    let (mut mean, mut m2) = (0.0, 0.0);
    for (i, &x) in xs.iter().enumerate() {
        let d = x - mean;
        mean += d / (i + 1) as f64;
        m2 += d * (x - mean);
    }
    (mean, (m2 / (xs.len() - 1) as f64).sqrt())
}

fn criterion_descriptives() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let bins = BinSpec::default();
    let mut worst = 0.0f64;
    let mut round_trip = true;
    let template = csv_round_trip(&SynthScenario {
        n_firms: 30,
        n_years: 10,
        ..SynthScenario::default()
    });
    for _ in 0..50 {
        let n = rng.random_range(2..=template.len());
        let scale = 10f64.powf(rng.random_range(-4.0..4.0));
        let shift = rng.random_range(-10.0..10.0) * scale;
        let values: Vec<f64> = (0..n).map(|_| shift + scale * normal(&mut rng)).collect();
        let rows: Vec<PanelRow> = template.rows[..n]
            .iter()
            .zip(&values)
            .map(|(r, &v)| PanelRow { cvalue: v, ..r.clone() })
            .collect();
        let panel = PanelDataset {
            rows,
            join_report: template.join_report.clone(),
        };
        let table = run_descriptives(&panel, &bins, &["cvalue".into()]).unwrap();
        let thermopanel::study::TableBody::Statistics(stats) = &table.body else {
            return outcome(false, "descriptives body is not a statistics table".into());
        };
        let s = &stats[0];
        let (mean, sd) = welford(&values);
        let min = values.iter().copied().fold(f64::INFINITY, f64::min);
        let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let rel = |a: f64, b: f64| (a - b).abs() / b.abs().max(scale);
        worst = worst
            .max(rel(s.mean.unwrap(), mean))
            .max(rel(s.sd.unwrap(), sd))
            .max(rel(s.min.unwrap(), min))
            .max(rel(s.max.unwrap(), max));
        if s.n != n {
            worst = f64::INFINITY;
        }
        let json = table.to_json().unwrap();
        let back = TableArtifact::from_json(&json).unwrap();
        round_trip &= back == table && back.to_json().unwrap() == json && back.to_text() == table.to_text();
    }
    outcome(
        worst < 1e-12 && round_trip,
        format!("50 columns: max scaled difference {worst:.2e}; JSON round trip lossless: {round_trip}"),
    )
}

fn main() {
    let criteria: [Criterion; 9] = [
        ("oracle equivalence", criterion_oracle),
        ("CR1 with singleton clusters equals HC1", criterion_hc1),
        ("absorbed dof equals dummy rank", criterion_dof),
        ("planted-coefficient recovery", criterion_recovery),
        ("bin partition invariant", criterion_partition),
        ("lag trim", criterion_lag_trim),
        ("determinism", criterion_determinism),
        ("scale", criterion_scale),
        ("descriptives oracle", criterion_descriptives),
    ];
    let mut failed = 0;
    let total = Instant::now();
    for (i, (name, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let result = catch_unwind(AssertUnwindSafe(run)).unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            outcome(false, format!("panicked: {msg}"))
        });
        if !result.pass {
            failed += 1;
        }
        println!(
            "{} [{}] {name}: {} ({:.1}s)",
            if result.pass { "PASS" } else { "FAIL" },
            i + 1,
            result.detail,
            start.elapsed().as_secs_f64()
        );
    }
    let elapsed: Duration = total.elapsed();
    println!("{} of {} criteria passed in {:.1}s", criteria.len() - failed, criteria.len(), elapsed.as_secs_f64());
    if failed > 0 {
        std::process::exit(1);
    }
}
