use std::collections::HashMap;
use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use chrono::NaiveDate;
use serde::Deserialize;

use crate::error::{Error, Result};

/// Daily closes of one index, ordered by date.
#[derive(Debug, Clone, PartialEq)]
pub struct PriceSeries {
    pub ticker: String,
    pub country: String,
    pub observations: Vec<(NaiveDate, f64)>,
}

#[derive(Debug, Deserialize)]
struct PriceRow {
    date: String,
    ticker: String,
    close: String,
    #[serde(default)]
    country: Option<String>,
}

/// Reads a `date,ticker,close[,country]` CSV (ISO-8601 dates, header row
/// required). Series come back in order of first appearance.
pub fn load_prices(path: impl AsRef<Path>) -> Result<Vec<PriceSeries>> {
    let path = path.as_ref();
    let file = File::open(path)?;
    read_prices(file, &path.display().to_string())
}

pub fn read_prices<R: Read>(reader: R, source: &str) -> Result<Vec<PriceSeries>> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(reader);
    let headers = rdr
        .headers()
        .map_err(|e| Error::parse(source, 1, e.to_string()))?
        .clone();
    for required in ["date", "ticker", "close"] {
        if !headers.iter().any(|h| h == required) {
            return Err(Error::parse(
                source,
                1,
                format!("missing column {required:?}"),
            ));
        }
    }

    let mut index: HashMap<String, usize> = HashMap::new();
    let mut series: Vec<PriceSeries> = Vec::new();
    let mut record = csv::StringRecord::new();
    loop {
        let line = rdr.position().line() + 1;
        match rdr.read_record(&mut record) {
            Ok(false) => break,
            Ok(true) => {}
            Err(e) => return Err(Error::parse(source, line, e.to_string())),
        }
        let line = record.position().map_or(line, |p| p.line());
        let row: PriceRow = record
            .deserialize(Some(&headers))
            .map_err(|e| Error::parse(source, line, e.to_string()))?;
        let date = NaiveDate::parse_from_str(&row.date, "%Y-%m-%d")
            .map_err(|e| Error::parse(source, line, format!("bad date {:?}: {e}", row.date)))?;
        let close: f64 = row
            .close
            .parse()
            .map_err(|_| Error::parse(source, line, format!("bad close {:?}", row.close)))?;
        if row.ticker.is_empty() {
            return Err(Error::parse(source, line, "empty ticker"));
        }
        if !(close.is_finite() && close > 0.0) {
            return Err(Error::NonPositivePrice {
                ticker: row.ticker,
                date,
                value: close,
            });
        }
        let slot = *index.entry(row.ticker.clone()).or_insert_with(|| {
            series.push(PriceSeries {
                ticker: row.ticker.clone(),
                country: String::new(),
                observations: Vec::new(),
            });
            series.len() - 1
        });
        let entry = &mut series[slot];
        if let Some(country) = row.country.filter(|c| !c.is_empty()) {
            entry.country = country;
        }
        entry.observations.push((date, close));
    }

    for s in &mut series {
        s.observations.sort_by_key(|(d, _)| *d);
        if let Some(w) = s.observations.windows(2).find(|w| w[0].0 == w[1].0) {
            return Err(Error::DuplicateDate {
                ticker: s.ticker.clone(),
                date: w[0].0,
            });
        }
    }
    Ok(series)
}

pub fn write_prices<W: Write>(series: &[PriceSeries], out: W) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(out);
    wtr.write_record(["date", "ticker", "close", "country"])
        .map_err(csv_io)?;
    for s in series {
        for (date, close) in &s.observations {
            wtr.write_record([
                date.to_string(),
                s.ticker.clone(),
                close.to_string(),
                s.country.clone(),
            ])
            .map_err(csv_io)?;
        }
    }
    wtr.flush()?;
    Ok(())
}

pub(crate) fn csv_io(e: csv::Error) -> Error {
    Error::Io(std::io::Error::other(e))
}
