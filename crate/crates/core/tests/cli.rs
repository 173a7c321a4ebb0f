use std::fs;
use std::path::Path;
use std::process::{Command, Output};

const BIN: &str = env!("CARGO_BIN_EXE_thermopanel");

fn run(args: &[&str]) -> Output {
    Command::new(BIN).args(args).env_remove("RUST_LOG").output().unwrap()
}

fn synth(dir: &Path, seed: &str) {
    let out = run(&["synth", "--out", dir.to_str().unwrap(), "--seed", seed, "--n-firms", "120", "--n-years", "6"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
}

fn inputs(dir: &Path) -> [String; 4] {
    [
        "--firms".into(),
        dir.join("firms.csv").display().to_string(),
        "--weather".into(),
        dir.join("weather.csv").display().to_string(),
    ]
}

fn args<'a>(sub: &'a str, io: &'a [String; 4], extra: &'a [&'a str]) -> Vec<&'a str> {
    let mut v = vec![sub];
    v.extend(io.iter().map(String::as_str));
    v.extend_from_slice(extra);
    v
}

#[test]
fn pipeline_writes_every_artifact() {
    let tmp = tempfile::tempdir().unwrap();
    let data = tmp.path().join("data");
    let out = tmp.path().join("out");
    synth(&data, "5");
    let io = inputs(&data);
    let o = run(&args("pipeline", &io, &["--out", out.to_str().unwrap(), "--industry-min-obs", "50"]));
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    for name in [
        "join_report.txt",
        "join_report.json",
        "ingest_log.txt",
        "descriptives.txt",
        "descriptives.json",
        "baseline.txt",
        "baseline.json",
        "robustness.txt",
        "het_ownership.json",
        "het_industry.txt",
        "coefplot_baseline.svg",
        "coefplot_baseline.csv",
        "coefplot_industry.svg",
        "coefplot_industry.csv",
    ] {
        assert!(out.join(name).exists(), "missing {name}");
    }
    let report = fs::read_to_string(out.join("join_report.txt")).unwrap();
    assert!(report.contains("rows_joined: 720"));
    let stdout = String::from_utf8(o.stdout).unwrap();
    assert!(stdout.contains("Baseline regression"));

    // coefplot from the written table
    let o = run(&[
        "coefplot",
        "--fit",
        out.join("baseline.json").to_str().unwrap(),
        "--column",
        "4",
        "--out",
        tmp.path().join("plot").to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = fs::read_to_string(tmp.path().join("plot/coefplot.csv")).unwrap();
    assert_eq!(csv.lines().count(), 10);
    assert!(csv.lines().nth(1).unwrap().starts_with("le_m10,"));
}

#[test]
fn reruns_are_byte_identical() {
    let tmp = tempfile::tempdir().unwrap();
    let data = tmp.path().join("data");
    synth(&data, "8");
    let io = inputs(&data);
    let mut outputs = Vec::new();
    for (i, threads) in ["1", "3"].iter().enumerate() {
        let out = tmp.path().join(format!("out{i}"));
        let o = Command::new(BIN)
            .args(args("pipeline", &io, &["--out", out.to_str().unwrap(), "--industry-min-obs", "50"]))
            .env("RAYON_NUM_THREADS", threads)
            .output()
            .unwrap();
        assert!(o.status.success());
        let mut files: Vec<(String, Vec<u8>)> = fs::read_dir(&out)
            .unwrap()
            .map(|e| {
                let e = e.unwrap();
                (e.file_name().to_string_lossy().into_owned(), fs::read(e.path()).unwrap())
            })
            .collect();
        files.sort();
        outputs.push(files);
    }
    assert_eq!(outputs[0], outputs[1]);
}

#[test]
fn exit_codes() {
    let tmp = tempfile::tempdir().unwrap();
    let data = tmp.path().join("data");
    synth(&data, "2");
    let io = inputs(&data);
    let out = tmp.path().join("out");
    let out_s = out.to_str().unwrap();

    // missing input file: validation
    let o = run(&["baseline", "--firms", "/nonexistent.csv", "--weather", "/nonexistent.csv", "--out", out_s]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("nonexistent"));

    // bad config key: validation
    let cfg = tmp.path().join("bad.cfg");
    fs::write(&cfg, "coverage = 300\nflavour = mint\n").unwrap();
    let o = run(&args("baseline", &io, &["--config", cfg.to_str().unwrap(), "--out", out_s]));
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("line 2"));

    // unknown cluster dimension: validation
    let o = run(&args("baseline", &io, &["--cluster", "galaxy", "--out", out_s]));
    assert_eq!(o.status.code(), Some(2));

    // no industry passes the default screen: estimation
    let o = run(&args("het-industry", &io, &["--out", out_s]));
    assert_eq!(o.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&o.stderr).contains("10000"));

    // unknown subcommand: usage error
    assert_eq!(run(&["tabulate"]).status.code(), Some(2));
}

#[test]
fn config_file_and_flag_precedence() {
    let tmp = tempfile::tempdir().unwrap();
    let data = tmp.path().join("data");
    synth(&data, "3");
    let out = tmp.path().join("out");
    let cfg = tmp.path().join("run.cfg");
    fs::write(
        &cfg,
        format!(
            "# study config\nfirms = {}\nweather = {}\nout = {}\nlag = 3\nindustry_min_obs = 50\n",
            data.join("firms.csv").display(),
            data.join("weather.csv").display(),
            out.display()
        ),
    )
    .unwrap();
    // flag overrides the file's lag
    let o = run(&["robustness", "--config", cfg.to_str().unwrap(), "--lag", "2"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = fs::read_to_string(out.join("robustness.txt")).unwrap();
    assert!(text.contains("lagged by 2 year(s)"));
    assert!(text.contains("L2_") || text.contains("L2wind"));
}

#[test]
fn ingest_reports_bad_lines() {
    let tmp = tempfile::tempdir().unwrap();
    let data = tmp.path().join("data");
    synth(&data, "4");
    let firms = data.join("firms.csv");
    let mut text = fs::read_to_string(&firms).unwrap();
    text.push_str("F9999,notayear,C001,private,I01,0.5\n");
    fs::write(&firms, text).unwrap();
    let io = inputs(&data);
    let out = tmp.path().join("out");
    let o = run(&args("ingest", &io, &["--out", out.to_str().unwrap()]));
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let log = fs::read_to_string(out.join("ingest_log.txt")).unwrap();
    assert!(log.contains("firm line errors: 1"));
    assert!(out.join("panel.csv").exists());
}
