use std::fmt::Write as _;
use std::io::Read;

use super::weather::{csv_error, csv_reader, field_str, parse_opt_f64};
use super::{FirmYearRecord, LineError, Ownership, Parsed};
use crate::{Error, Result};

const COLUMNS: [&str; 6] = ["firm_id", "year", "city_code", "ownership", "industry_code", "cvalue"];

/// Parses the firm-year CSV. Columns are located by header name; an empty
/// `cvalue` is kept as missing and counted, an out-of-range one is a line
/// error.
pub fn parse_firm_csv<R: Read>(source: R) -> Result<Parsed<FirmYearRecord>> {
    let mut reader = csv_reader(source);
    let header = reader.byte_headers().map_err(csv_error)?.clone();
    let mut idx = [0usize; 6];
    for (slot, name) in COLUMNS.iter().enumerate() {
        idx[slot] = header
            .iter()
            .position(|h| h == name.as_bytes())
            .ok_or_else(|| Error::Schema(format!("firm header lacks column `{name}`")))?;
    }

    let mut out = Parsed::default();
    let mut rec = csv::ByteRecord::new();
    loop {
        match reader.read_byte_record(&mut rec) {
            Ok(true) => {}
            Ok(false) => break,
            Err(e) => return Err(csv_error(e)),
        }
        let line = rec.position().map(|p| p.line()).unwrap_or(0);
        if rec.len() != header.len() {
            out.errors.push(LineError {
                line,
                message: format!("expected {} fields, found {}", header.len(), rec.len()),
            });
            continue;
        }
        match parse_line(&rec, &idx) {
            Ok(r) => {
                if r.cvalue.is_none() {
                    out.count_missing("cvalue");
                }
                out.records.push(r);
            }
            Err(message) => out.errors.push(LineError { line, message }),
        }
    }
    Ok(out)
}

fn parse_line(rec: &csv::ByteRecord, idx: &[usize; 6]) -> std::result::Result<FirmYearRecord, String> {
    let get = |slot: usize| field_str(rec, idx[slot], COLUMNS[slot]);
    let nonempty = |slot: usize| -> std::result::Result<String, String> {
        let s = get(slot)?;
        if s.is_empty() {
            Err(format!("empty `{}`", COLUMNS[slot]))
        } else {
            Ok(s.to_string())
        }
    };
    let firm_id = nonempty(0)?;
    let year_s = get(1)?;
    let year: i32 = year_s
        .parse()
        .map_err(|_| format!("invalid year `{year_s}`"))?;
    if !(1000..=9999).contains(&year) {
        return Err(format!("year {year} out of range"));
    }
    let city_code = nonempty(2)?;
    let ownership: Ownership = get(3)?.parse().map_err(|e: Error| e.to_string())?;
    let industry_code = nonempty(4)?;
    let cvalue = parse_opt_f64(get(5)?, "cvalue")?;
    if let Some(c) = cvalue {
        if !(0.0..=1.0).contains(&c) {
            return Err(format!("cvalue {c} outside [0, 1]"));
        }
    }
    Ok(FirmYearRecord {
        firm_id,
        year,
        city_code,
        ownership,
        industry_code,
        cvalue,
    })
}

pub fn write_firm_csv(records: &[FirmYearRecord]) -> String {
    let mut out = COLUMNS.join(",");
    out.push('\n');
    for r in records {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{}",
            r.firm_id,
            r.year,
            r.city_code,
            r.ownership,
            r.industry_code,
            r.cvalue.map(|c| format!("{c}")).unwrap_or_default()
        );
    }
    out
}
