use std::io::Write;

use ndarray::Array2;
use rayon::prelude::*;
use serde::Serialize;

use super::estimator::DestinationIndex;
use super::surrogate::{effective_te_indexed, EteEstimate};
use super::{Bandwidth, BoxWidth, LogBase, TeConfig};
use crate::error::{Error, Result};
use crate::rmt::NormalizedPanel;
use crate::scalar::Real;
use crate::seed::derive;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MissingPair {
    pub source: usize,
    pub destination: usize,
    pub reason: String,
}

/// Effective transfer entropy between every ordered pair of panel rows.
/// Entry `(i, j)` is the flow from row `j` into row `i`; the diagonal is 0
/// and pairs that could not be estimated are NaN and listed in `missing`.
#[derive(Debug, Clone, PartialEq)]
pub struct EteMatrix<T> {
    pub labels: Vec<String>,
    pub values: Array2<T>,
    /// Uncorrected transfer entropy, same layout.
    pub te: Array2<T>,
    pub surrogate_std: Array2<f64>,
    pub skip_rates: Array2<f64>,
    pub h_by_destination: Vec<f64>,
    pub missing: Vec<MissingPair>,
    pub config: TeConfig,
}

/// JSON companion of the CSV export.
#[derive(Debug, Clone, Serialize)]
pub struct EteSidecar<'a> {
    pub k: usize,
    pub l: usize,
    /// Common kernel width, or `None` when destinations differ.
    pub h: Option<f64>,
    pub h_by_destination: &'a [f64],
    pub bandwidth: Bandwidth,
    pub box_width: BoxWidth,
    pub log_base: LogBase,
    #[serde(rename = "M")]
    pub surrogates: usize,
    pub seed: u64,
    pub theiler: Option<usize>,
    pub labels: &'a [String],
    pub skip_rates: Vec<Vec<f64>>,
    pub missing: &'a [MissingPair],
}

/// Seed of the surrogates for the flow `source → destination`.
pub fn pair_seed(seed: u64, source: usize, destination: usize) -> u64 {
    derive(seed, &[source as u64, destination as u64])
}

/// Evaluates all `n(n − 1)` ordered pairs in parallel. Each pair's
/// surrogates depend only on `(cfg.seed, source, destination)`, so the
/// result does not depend on the schedule.
pub fn ete_matrix<T: Real>(panel: &NormalizedPanel<T>, cfg: &TeConfig) -> Result<EteMatrix<T>> {
    cfg.validate()?;
    let n = panel.n_series();
    if n < 2 {
        return Err(Error::InvalidInput(format!(
            "need at least 2 series, got {n}"
        )));
    }
    let rows: Vec<Vec<T>> = (0..n).map(|i| panel.row(i).to_vec()).collect();
    let indices: Vec<Result<DestinationIndex<T>>> = rows
        .par_iter()
        .map(|x| DestinationIndex::for_config(x, cfg))
        .collect();
    let pairs: Vec<(usize, usize)> = (0..n)
        .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
        .collect();
    let results: Vec<Result<EteEstimate>> = pairs
        .par_iter()
        .map(|&(i, j)| match &indices[i] {
            Ok(index) => {
                effective_te_indexed(index, &rows[j], cfg.surrogates, pair_seed(cfg.seed, j, i))
            }
            Err(e) => Err(Error::InvalidInput(format!("destination unusable: {e}"))),
        })
        .collect();

    let mut values = Array2::zeros((n, n));
    let mut te = Array2::zeros((n, n));
    let mut surrogate_std = Array2::zeros((n, n));
    let mut skip_rates = Array2::zeros((n, n));
    let mut missing = Vec::new();
    for (&(i, j), result) in pairs.iter().zip(results) {
        match result {
            Ok(e) => {
                values[[i, j]] = T::lit(e.ete);
                te[[i, j]] = T::lit(e.te.value);
                surrogate_std[[i, j]] = e.surrogate_std;
                skip_rates[[i, j]] = e.te.skip_rate();
            }
            Err(e) => {
                log::warn!(
                    "no estimate for {} -> {}: {e}",
                    panel.labels()[j],
                    panel.labels()[i]
                );
                values[[i, j]] = T::nan();
                te[[i, j]] = T::nan();
                surrogate_std[[i, j]] = f64::NAN;
                skip_rates[[i, j]] = f64::NAN;
                missing.push(MissingPair {
                    source: j,
                    destination: i,
                    reason: e.to_string(),
                });
            }
        }
    }
    let h_by_destination = indices
        .iter()
        .map(|r| r.as_ref().map_or(f64::NAN, |ix| ix.h()))
        .collect();
    Ok(EteMatrix {
        labels: panel.labels().to_vec(),
        values,
        te,
        surrogate_std,
        skip_rates,
        h_by_destination,
        missing,
        config: cfg.clone(),
    })
}

impl<T: Real> EteMatrix<T> {
    pub fn dim(&self) -> usize {
        self.labels.len()
    }

    /// Square CSV: a `label` column followed by one column per source.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        write_labeled_matrix(&self.labels, &self.values, out)
    }

    pub fn sidecar(&self) -> EteSidecar<'_> {
        let first = self.h_by_destination.first().copied();
        let uniform = first.filter(|h| {
            self.h_by_destination
                .iter()
                .all(|v| (v - h).abs() <= 1e-12 * h.abs())
        });
        EteSidecar {
            k: self.config.k,
            l: self.config.l,
            h: uniform,
            h_by_destination: &self.h_by_destination,
            bandwidth: self.config.bandwidth,
            box_width: self.config.box_width,
            log_base: self.config.log_base,
            surrogates: self.config.surrogates,
            seed: self.config.seed,
            theiler: self.config.theiler,
            labels: &self.labels,
            skip_rates: self
                .skip_rates
                .rows()
                .into_iter()
                .map(|r| r.to_vec())
                .collect(),
            missing: &self.missing,
        }
    }
}

/// Writes a square matrix with a header of labels; NaN is written as `NaN`.
pub fn write_labeled_matrix<T: Real, W: Write>(
    labels: &[String],
    m: &Array2<T>,
    out: W,
) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let header = std::iter::once("label".to_string()).chain(labels.iter().cloned());
    w.write_record(header).map_err(csv_err)?;
    for (label, row) in labels.iter().zip(m.rows()) {
        let record = std::iter::once(label.clone()).chain(row.iter().map(|v| v.to_string()));
        w.write_record(record).map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

/// Reads the layout written by [`write_labeled_matrix`].
pub fn read_labeled_matrix<R: std::io::Read>(
    input: R,
    source: &str,
) -> Result<(Vec<String>, Array2<f64>)> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_reader(input);
    let header = rdr.headers().map_err(csv_err)?.clone();
    if header.get(0) != Some("label") {
        return Err(Error::parse(source, 1, "first column must be `label`"));
    }
    let labels: Vec<String> = header.iter().skip(1).map(str::to_string).collect();
    let n = labels.len();
    let mut m = Array2::zeros((n, n));
    let mut rows = 0;
    for (i, record) in rdr.records().enumerate() {
        let line = i as u64 + 2;
        let record = record.map_err(csv_err)?;
        if i >= n || record.len() != n + 1 {
            return Err(Error::parse(
                source,
                line,
                format!("expected {n} rows of {} fields", n + 1),
            ));
        }
        if record.get(0) != Some(labels[i].as_str()) {
            return Err(Error::parse(
                source,
                line,
                "row label does not match the header order",
            ));
        }
        for (j, field) in record.iter().skip(1).enumerate() {
            m[[i, j]] = field
                .parse::<f64>()
                .map_err(|e| Error::parse(source, line, format!("column {}: {e}", j + 1)))?;
        }
        rows += 1;
    }
    if rows != n {
        return Err(Error::parse(
            source,
            rows as u64 + 1,
            format!("expected {n} rows, got {rows}"),
        ));
    }
    Ok((labels, m))
}

fn csv_err(e: csv::Error) -> Error {
    Error::Io(std::io::Error::other(e))
}
