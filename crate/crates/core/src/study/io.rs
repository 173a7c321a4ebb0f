use std::fs::{self, File};
use std::io::BufReader;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::coefplot::CoefPlotArtifact;
use super::config::StudyConfig;
use super::tables::TableArtifact;
use crate::paneldata::{join_firm_weather, parse_firm_csv, parse_weather_csv, JoinOptions, LineError, PanelDataset};
use crate::{Error, Result};

fn open(path: &Path) -> Result<BufReader<File>> {
    File::open(path).map(BufReader::new).map_err(|source| Error::File {
        path: path.to_path_buf(),
        source,
    })
}

fn write(path: &Path, contents: &str) -> Result<()> {
    fs::write(path, contents).map_err(|source| Error::File {
        path: path.to_path_buf(),
        source,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IngestLog {
    pub firm_errors: Vec<LineError>,
    pub weather_errors: Vec<LineError>,
    pub firm_rows: usize,
    pub weather_rows: usize,
}

impl IngestLog {
    pub fn to_text(&self) -> String {
        let mut s = format!(
            "firm rows parsed: {}\nweather rows parsed: {}\nfirm line errors: {}\nweather line errors: {}\n",
            self.firm_rows,
            self.weather_rows,
            self.firm_errors.len(),
            self.weather_errors.len()
        );
        for e in &self.firm_errors {
            s.push_str(&format!("firms {e}\n"));
        }
        for e in &self.weather_errors {
            s.push_str(&format!("weather {e}\n"));
        }
        s
    }
}

/// Reads both input files named in `config` and joins them. Malformed lines
/// are skipped and reported in the log.
pub fn load_panel(config: &StudyConfig) -> Result<(PanelDataset, IngestLog)> {
    let firms_path = config
        .firms
        .as_deref()
        .ok_or_else(|| Error::Config("no firm input path (--firms)".into()))?;
    let weather_path = config
        .weather
        .as_deref()
        .ok_or_else(|| Error::Config("no weather input path (--weather)".into()))?;
    let firms = parse_firm_csv(open(firms_path)?)?;
    let weather = parse_weather_csv(open(weather_path)?, &config.weather_schema())?;
    for e in firms.errors.iter().take(20) {
        log::warn!("{}: {e}", firms_path.display());
    }
    for e in weather.errors.iter().take(20) {
        log::warn!("{}: {e}", weather_path.display());
    }
    let opts = JoinOptions {
        min_coverage_days: config.coverage,
        bin_spec: config.bin_spec()?,
    };
    let panel = join_firm_weather(&firms.records, &weather.records, &opts)?;
    log::info!("joined panel: {} rows", panel.len());
    let log = IngestLog {
        firm_rows: firms.records.len(),
        weather_rows: weather.records.len(),
        firm_errors: firms.errors,
        weather_errors: weather.errors,
    };
    Ok((panel, log))
}

pub fn ensure_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|source| Error::File {
        path: dir.to_path_buf(),
        source,
    })
}

/// Writes `<stem>.txt` and `<stem>.json`.
pub fn write_table(dir: &Path, table: &TableArtifact) -> Result<()> {
    let stem = table.kind.file_stem();
    write(&dir.join(format!("{stem}.txt")), &table.to_text())?;
    write(&dir.join(format!("{stem}.json")), &table.to_json()?)
}

/// Writes `<stem>.svg` and `<stem>.csv`.
pub fn write_plot(dir: &Path, stem: &str, plot: &CoefPlotArtifact) -> Result<()> {
    write(&dir.join(format!("{stem}.svg")), &plot.to_svg())?;
    write(&dir.join(format!("{stem}.csv")), &plot.to_csv())
}

/// Writes the join report and ingest log.
pub fn write_ingest(dir: &Path, panel: &PanelDataset, log: &IngestLog) -> Result<()> {
    write(&dir.join("join_report.txt"), &panel.join_report.to_text())?;
    let mut json = serde_json::to_string_pretty(&panel.join_report)?;
    json.push('\n');
    write(&dir.join("join_report.json"), &json)?;
    write(&dir.join("ingest_log.txt"), &log.to_text())
}

pub fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|source| Error::File {
        path: path.to_path_buf(),
        source,
    })
}

pub fn write_text(path: &Path, contents: &str) -> Result<()> {
    write(path, contents)
}
