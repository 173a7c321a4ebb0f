use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use thermopanel::estimator::{Dimension, FitResult};
use thermopanel::paneldata::PanelDataset;
use thermopanel::study::{
    self, bin_coefplot, default_describe_vars, emit_coefplot, ensure_dir, load_panel, read_text, run_baseline,
    run_descriptives, run_industry_het, run_ownership_het, run_pipeline, run_robustness, write_ingest, write_plot,
    write_table, write_text, StudyConfig, TableArtifact,
};
use thermopanel::synth::{generate_panel, SynthScenario};
use thermopanel::{Error, Result};

#[derive(Parser)]
#[command(name = "thermopanel", version, about = "Temperature bins and firm asset structure: panel estimation pipeline")]
struct Cli {
    /// Repeat for more log output (-v info, -vv debug).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone, Default)]
struct Common {
    /// key = value config file; flags override it.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    firms: Option<PathBuf>,
    #[arg(long)]
    weather: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Minimum valid temperature days per firm-year.
    #[arg(long)]
    coverage: Option<u32>,
    /// Cluster dimension for columns (3) and (4): firm, year, city, year_city.
    #[arg(long)]
    cluster: Option<String>,
    #[arg(long)]
    lag: Option<u32>,
    #[arg(long)]
    industry_min_obs: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Parse and join the inputs; write the join report and joined panel.
    Ingest(Common),
    /// Descriptive statistics table.
    Describe {
        #[command(flatten)]
        common: Common,
        /// Comma-separated variables (default: outcome, controls, bins).
        #[arg(long, value_delimiter = ',')]
        vars: Vec<String>,
    },
    /// Baseline regression table, columns (1)-(4).
    Baseline(Common),
    /// Lagged-regressor robustness table.
    Robustness(Common),
    /// Per-ownership regressions.
    HetOwnership(Common),
    /// Per-industry hottest-bin regressions and plot.
    HetIndustry {
        #[command(flatten)]
        common: Common,
        /// Regress on all nine bins instead of the hottest one.
        #[arg(long)]
        all_bins: bool,
    },
    /// Coefficient plot from a fit or table JSON, or from a fresh baseline run.
    Coefplot {
        #[command(flatten)]
        common: Common,
        /// FitResult JSON, or table JSON together with --column.
        #[arg(long)]
        fit: Option<PathBuf>,
        /// 1-based table column.
        #[arg(long, default_value_t = 2)]
        column: usize,
        /// Comma-separated labels in plot order (default: bins, coldest first).
        #[arg(long, value_delimiter = ',')]
        order: Vec<String>,
    },
    /// Write a synthetic weather file, firm file and truth record.
    Synth(SynthArgs),
    /// Ingest, then every table and plot.
    Pipeline(Common),
}

#[derive(Args)]
struct SynthArgs {
    #[arg(long, default_value = "synth")]
    out: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    n_firms: Option<usize>,
    #[arg(long)]
    n_years: Option<usize>,
    #[arg(long)]
    n_cities: Option<usize>,
    #[arg(long)]
    n_industries: Option<usize>,
    #[arg(long)]
    start_year: Option<i32>,
    #[arg(long)]
    noise_sd: Option<f64>,
    #[arg(long)]
    effect_lag: Option<u32>,
    #[arg(long)]
    missing_temp_rate: Option<f64>,
}

fn resolve(common: &Common) -> Result<StudyConfig> {
    let mut cfg = StudyConfig::default();
    if let Some(path) = &common.config {
        cfg.apply_text(&read_text(path)?)?;
    }
    if let Some(p) = &common.firms {
        cfg.firms = Some(p.clone());
    }
    if let Some(p) = &common.weather {
        cfg.weather = Some(p.clone());
    }
    if let Some(p) = &common.out {
        cfg.out_dir = p.clone();
    }
    if let Some(v) = common.coverage {
        cfg.coverage = v;
    }
    if let Some(c) = &common.cluster {
        cfg.cluster = Dimension::parse(c)?;
    }
    if let Some(v) = common.lag {
        cfg.lag = v;
    }
    if let Some(v) = common.industry_min_obs {
        cfg.industry_min_obs = v;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn prepare(common: &Common) -> Result<(StudyConfig, PanelDataset)> {
    let cfg = resolve(common)?;
    ensure_dir(&cfg.out_dir)?;
    let (panel, log) = load_panel(&cfg)?;
    write_ingest(&cfg.out_dir, &panel, &log)?;
    Ok((cfg, panel))
}

fn emit(dir: &Path, table: &TableArtifact) -> Result<()> {
    write_table(dir, table)?;
    print!("{}", table.to_text());
    Ok(())
}

fn load_fit(path: &Path, column: usize) -> Result<FitResult> {
    let text = read_text(path)?;
    if let Ok(fit) = serde_json::from_str::<FitResult>(&text) {
        return Ok(fit);
    }
    let table = TableArtifact::from_json(&text)?;
    let col = column
        .checked_sub(1)
        .and_then(|i| table.columns().get(i))
        .ok_or_else(|| Error::Validation(format!("table has no column {column}")))?;
    col.fit()
        .cloned()
        .ok_or_else(|| Error::Validation(format!("column {column} was not estimated")))
}

fn run(command: Command) -> Result<()> {
    match command {
        Command::Ingest(common) => {
            let (cfg, panel) = prepare(&common)?;
            write_text(&cfg.out_dir.join("panel.csv"), &panel.to_csv(&cfg.bin_spec()?))?;
            print!("{}", panel.join_report.to_text());
        }
        Command::Describe { common, vars } => {
            let (cfg, panel) = prepare(&common)?;
            let bins = cfg.bin_spec()?;
            let vars = if vars.is_empty() { default_describe_vars(&bins) } else { vars };
            emit(&cfg.out_dir, &run_descriptives(&panel, &bins, &vars)?)?;
        }
        Command::Baseline(common) => {
            let (cfg, panel) = prepare(&common)?;
            emit(&cfg.out_dir, &run_baseline(&panel, &cfg)?)?;
        }
        Command::Robustness(common) => {
            let (cfg, panel) = prepare(&common)?;
            emit(&cfg.out_dir, &run_robustness(&panel, &cfg)?)?;
        }
        Command::HetOwnership(common) => {
            let (cfg, panel) = prepare(&common)?;
            emit(&cfg.out_dir, &run_ownership_het(&panel, &cfg)?)?;
        }
        Command::HetIndustry { common, all_bins } => {
            let (mut cfg, panel) = prepare(&common)?;
            cfg.industry_all_bins |= all_bins;
            let het = run_industry_het(&panel, &cfg)?;
            emit(&cfg.out_dir, &het.table)?;
            write_plot(&cfg.out_dir, "coefplot_industry", &het.plot)?;
        }
        Command::Coefplot {
            common,
            fit,
            column,
            order,
        } => {
            let plot = match fit {
                Some(path) => {
                    let cfg = resolve(&common)?;
                    ensure_dir(&cfg.out_dir)?;
                    let bins = cfg.bin_spec()?;
                    let fit = load_fit(&path, column)?;
                    let order = if order.is_empty() { bins.ascii_labels() } else { order };
                    (cfg, emit_coefplot(&fit, &order, &bins)?)
                }
                None => {
                    let (cfg, panel) = prepare(&common)?;
                    let bins = cfg.bin_spec()?;
                    let table = run_baseline(&panel, &cfg)?;
                    let plot = if order.is_empty() {
                        bin_coefplot(&table, column.saturating_sub(1), &bins)?
                    } else {
                        let fit = table
                            .columns()
                            .get(column.saturating_sub(1))
                            .and_then(|c| c.fit())
                            .ok_or_else(|| Error::Validation(format!("no estimated column {column}")))?;
                        emit_coefplot(fit, &order, &bins)?
                    };
                    (cfg, plot)
                }
            };
            let (cfg, plot) = plot;
            write_plot(&cfg.out_dir, "coefplot", &plot)?;
            print!("{}", plot.to_csv());
        }
        Command::Synth(args) => {
            let mut sc = SynthScenario::default();
            sc.seed = args.seed.unwrap_or(sc.seed);
            sc.n_firms = args.n_firms.unwrap_or(sc.n_firms);
            sc.n_years = args.n_years.unwrap_or(sc.n_years);
            sc.n_cities = args.n_cities.unwrap_or(sc.n_cities);
            sc.n_industries = args.n_industries.unwrap_or(sc.n_industries);
            sc.start_year = args.start_year.unwrap_or(sc.start_year);
            sc.noise_sd = args.noise_sd.unwrap_or(sc.noise_sd);
            sc.effect_lag = args.effect_lag.unwrap_or(sc.effect_lag);
            sc.missing_temp_rate = args.missing_temp_rate.unwrap_or(sc.missing_temp_rate);
            let panel = generate_panel(&sc)?;
            ensure_dir(&args.out)?;
            write_text(&args.out.join("weather.csv"), &panel.weather_csv())?;
            write_text(&args.out.join("firms.csv"), &panel.firm_csv())?;
            write_text(&args.out.join("truth.json"), &panel.truth_json()?)?;
            println!(
                "wrote {} firm rows and {} weather rows to {}",
                panel.firms.len(),
                panel.weather.len(),
                args.out.display()
            );
        }
        Command::Pipeline(common) => {
            let (cfg, panel) = prepare(&common)?;
            let artifacts = run_pipeline(&panel, &cfg)?;
            for t in &artifacts.tables {
                emit(&cfg.out_dir, t)?;
            }
            for (stem, plot) in &artifacts.plots {
                study::write_plot(&cfg.out_dir, stem, plot)?;
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let mut msg = e.to_string();
            let mut source = std::error::Error::source(&e);
            while let Some(s) = source {
                let text = s.to_string();
                if !msg.contains(&text) {
                    msg.push_str(&format!(": {text}"));
                }
                source = s.source();
            }
            eprintln!("error: {msg}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
