use std::fmt::Write as _;
use std::io::Read;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use super::units::{fahrenheit_to_celsius, KNOT_TO_MS, MILE_TO_KM};
use super::{DailyWeatherRecord, LineError, Parsed, SEA_PRESSURE_RANGE_HPA, TEMP_RANGE_C};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum TempUnit {
    #[default]
    Celsius,
    Fahrenheit,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum SpeedUnit {
    #[default]
    MetersPerSecond,
    Knots,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum DistanceUnit {
    #[default]
    Kilometers,
    Miles,
}

/// Column names of a weather CSV and the units its numeric columns are in.
/// Values are converted to Celsius, m/s and km on read.
///
/// `county_code`, `date` and the temperature column must be present in the
/// header; a missing wind, pressure or visibility column reads as all-missing.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeatherSchema {
    pub county_code: String,
    pub date: String,
    pub temp: String,
    pub wind: String,
    pub sea_pressure: String,
    pub visibility: String,
    pub temp_unit: TempUnit,
    pub wind_unit: SpeedUnit,
    pub visibility_unit: DistanceUnit,
}

impl Default for WeatherSchema {
    fn default() -> Self {
        WeatherSchema {
            county_code: "county_code".into(),
            date: "date".into(),
            temp: "temp_c".into(),
            wind: "wind".into(),
            sea_pressure: "sea_hpa".into(),
            visibility: "visb".into(),
            temp_unit: TempUnit::Celsius,
            wind_unit: SpeedUnit::MetersPerSecond,
            visibility_unit: DistanceUnit::Kilometers,
        }
    }
}

impl WeatherSchema {
    /// GSOD-style columns: `temp` in °F, `wdsp` in knots, `slp` in hPa,
    /// `visib` in miles.
    pub fn gsod_imperial() -> Self {
        WeatherSchema {
            temp: "temp".into(),
            wind: "wdsp".into(),
            sea_pressure: "slp".into(),
            visibility: "visib".into(),
            temp_unit: TempUnit::Fahrenheit,
            wind_unit: SpeedUnit::Knots,
            visibility_unit: DistanceUnit::Miles,
            ..Self::default()
        }
    }
}

struct Columns {
    county: usize,
    date: usize,
    temp: usize,
    wind: Option<usize>,
    sea: Option<usize>,
    visb: Option<usize>,
    width: usize,
}

fn resolve_columns(header: &csv::ByteRecord, schema: &WeatherSchema) -> Result<Columns> {
    let find = |name: &str| header.iter().position(|h| h == name.as_bytes());
    let required = |name: &str| {
        find(name).ok_or_else(|| Error::Schema(format!("weather header lacks column `{name}`")))
    };
    Ok(Columns {
        county: required(&schema.county_code)?,
        date: required(&schema.date)?,
        temp: required(&schema.temp)?,
        wind: find(&schema.wind),
        sea: find(&schema.sea_pressure),
        visb: find(&schema.visibility),
        width: header.len(),
    })
}

pub(crate) fn csv_reader<R: Read>(source: R) -> csv::Reader<R> {
    csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(source)
}

pub(crate) fn csv_error(e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        other => Error::Schema(format!("unreadable CSV: {other:?}")),
    }
}

pub(crate) fn field_str<'a>(rec: &'a csv::ByteRecord, idx: usize, name: &str) -> std::result::Result<&'a str, String> {
    let raw = rec.get(idx).unwrap_or_default();
    std::str::from_utf8(raw).map_err(|_| format!("field `{name}` is not valid UTF-8"))
}

/// Empty field → `Ok(None)`.
pub(crate) fn parse_opt_f64(s: &str, name: &str) -> std::result::Result<Option<f64>, String> {
    if s.is_empty() {
        return Ok(None);
    }
    match s.parse::<f64>() {
        Ok(v) if v.is_finite() => Ok(Some(v)),
        _ => Err(format!("field `{name}` is not a finite number: `{s}`")),
    }
}

/// Parses a header-prefixed weather CSV. Bad lines are collected in
/// [`Parsed::errors`] with their line numbers; the remaining lines still parse.
pub fn parse_weather_csv<R: Read>(source: R, schema: &WeatherSchema) -> Result<Parsed<DailyWeatherRecord>> {
    let mut reader = csv_reader(source);
    let header = reader.byte_headers().map_err(csv_error)?.clone();
    let cols = resolve_columns(&header, schema)?;

    let mut out = Parsed::default();
    let mut rec = csv::ByteRecord::new();
    loop {
        match reader.read_byte_record(&mut rec) {
            Ok(true) => {}
            Ok(false) => break,
            Err(e) => return Err(csv_error(e)),
        }
        let line = rec.position().map(|p| p.line()).unwrap_or(0);
        match parse_line(&rec, &cols, schema, &mut out) {
            Ok(r) => out.records.push(r),
            Err(message) => out.errors.push(LineError { line, message }),
        }
    }
    Ok(out)
}

fn parse_line(
    rec: &csv::ByteRecord,
    cols: &Columns,
    schema: &WeatherSchema,
    out: &mut Parsed<DailyWeatherRecord>,
) -> std::result::Result<DailyWeatherRecord, String> {
    if rec.len() != cols.width {
        return Err(format!("expected {} fields, found {}", cols.width, rec.len()));
    }
    let county = field_str(rec, cols.county, &schema.county_code)?;
    if county.is_empty() {
        return Err("empty county code".into());
    }
    let date_s = field_str(rec, cols.date, &schema.date)?;
    let date = NaiveDate::parse_from_str(date_s, "%Y-%m-%d")
        .map_err(|_| format!("invalid date `{date_s}`"))?;

    let opt = |idx: Option<usize>, name: &str| -> std::result::Result<Option<f64>, String> {
        match idx {
            Some(i) => parse_opt_f64(field_str(rec, i, name)?, name),
            None => Ok(None),
        }
    };
    let mut temp = opt(Some(cols.temp), &schema.temp)?;
    let mut wind = opt(cols.wind, &schema.wind)?;
    let sea = opt(cols.sea, &schema.sea_pressure)?;
    let mut visb = opt(cols.visb, &schema.visibility)?;

    if schema.temp_unit == TempUnit::Fahrenheit {
        temp = temp.map(fahrenheit_to_celsius);
    }
    if schema.wind_unit == SpeedUnit::Knots {
        wind = wind.map(|k| k * KNOT_TO_MS);
    }
    if schema.visibility_unit == DistanceUnit::Miles {
        visb = visb.map(|m| m * MILE_TO_KM);
    }

    if let Some(t) = temp {
        if !(TEMP_RANGE_C.0..=TEMP_RANGE_C.1).contains(&t) {
            return Err(format!("temperature {t} °C outside [{}, {}]", TEMP_RANGE_C.0, TEMP_RANGE_C.1));
        }
    }
    if let Some(p) = sea {
        if !(SEA_PRESSURE_RANGE_HPA.0..=SEA_PRESSURE_RANGE_HPA.1).contains(&p) {
            return Err(format!(
                "sea-level pressure {p} hPa outside [{}, {}]",
                SEA_PRESSURE_RANGE_HPA.0, SEA_PRESSURE_RANGE_HPA.1
            ));
        }
    }
    if wind.is_some_and(|w| w < 0.0) || visb.is_some_and(|v| v < 0.0) {
        return Err("negative wind speed or visibility".into());
    }

    for (v, name) in [(temp, "temp"), (wind, "wind"), (sea, "sea"), (visb, "visb")] {
        if v.is_none() {
            out.count_missing(name);
        }
    }
    Ok(DailyWeatherRecord {
        county_code: county.to_string(),
        date,
        mean_temp_c: temp,
        wind,
        sea_pressure: sea,
        visibility: visb,
    })
}

/// Writes records in the default metric schema. Values use the shortest
/// representation that parses back to the same `f64`.
pub fn write_weather_csv(records: &[DailyWeatherRecord]) -> String {
    let mut out = String::from("county_code,date,temp_c,wind,sea_hpa,visb\n");
    let opt = |v: Option<f64>| v.map(|x| format!("{x}")).unwrap_or_default();
    for r in records {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{}",
            r.county_code,
            r.date.format("%Y-%m-%d"),
            opt(r.mean_temp_c),
            opt(r.wind),
            opt(r.sea_pressure),
            opt(r.visibility)
        );
    }
    out
}
