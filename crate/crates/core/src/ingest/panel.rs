use chrono::NaiveDate;
use ndarray::{s, Array2, ArrayView1, Axis};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Real;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PanelKind {
    Price,
    Return,
    Polarity,
    Normalized,
}

/// `N` labeled series sampled on one shared calendar, stored row-per-series.
#[derive(Debug, Clone, PartialEq)]
pub struct AlignedPanel<T> {
    labels: Vec<String>,
    calendar: Vec<NaiveDate>,
    values: Array2<T>,
    kind: PanelKind,
}

impl<T: Real> AlignedPanel<T> {
    pub fn new(
        labels: Vec<String>,
        calendar: Vec<NaiveDate>,
        values: Array2<T>,
        kind: PanelKind,
    ) -> Result<Self> {
        let (rows, cols) = values.dim();
        if rows != labels.len() {
            return Err(Error::ShapeMismatch(format!(
                "{rows} rows but {} labels",
                labels.len()
            )));
        }
        if cols != calendar.len() {
            return Err(Error::ShapeMismatch(format!(
                "{cols} columns but calendar of {}",
                calendar.len()
            )));
        }
        if calendar.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidInput(
                "calendar dates must be strictly increasing".into(),
            ));
        }
        if let Some(((r, c), v)) = values.indexed_iter().find(|(_, v)| !v.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "non-finite value {v} for {} on {}",
                labels[r], calendar[c]
            )));
        }
        Ok(Self {
            labels,
            calendar,
            values,
            kind,
        })
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn calendar(&self) -> &[NaiveDate] {
        &self.calendar
    }

    pub fn values(&self) -> &Array2<T> {
        &self.values
    }

    pub fn kind(&self) -> PanelKind {
        self.kind
    }

    pub fn n_series(&self) -> usize {
        self.values.nrows()
    }

    pub fn len(&self) -> usize {
        self.values.ncols()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn row(&self, i: usize) -> ArrayView1<'_, T> {
        self.values.row(i)
    }

    pub fn row_of(&self, label: &str) -> Option<ArrayView1<'_, T>> {
        self.labels
            .iter()
            .position(|l| l == label)
            .map(|i| self.values.row(i))
    }

    pub fn into_parts(self) -> (Vec<String>, Vec<NaiveDate>, Array2<T>, PanelKind) {
        (self.labels, self.calendar, self.values, self.kind)
    }

    /// Columns `start..end` as a new panel of the same kind.
    pub fn columns(&self, start: usize, end: usize) -> Result<Self> {
        if start >= end || end > self.len() {
            return Err(Error::InvalidInput(format!(
                "column range {start}..{end} outside 0..{}",
                self.len()
            )));
        }
        Ok(Self {
            labels: self.labels.clone(),
            calendar: self.calendar[start..end].to_vec(),
            values: self.values.slice(s![.., start..end]).to_owned(),
            kind: self.kind,
        })
    }

    /// Rows selected by index, in the given order.
    pub fn select_rows(&self, rows: &[usize]) -> Result<Self> {
        if let Some(&bad) = rows.iter().find(|&&r| r >= self.n_series()) {
            return Err(Error::InvalidInput(format!("row {bad} out of range")));
        }
        Ok(Self {
            labels: rows.iter().map(|&r| self.labels[r].clone()).collect(),
            calendar: self.calendar.clone(),
            values: self.values.select(Axis(0), rows),
            kind: self.kind,
        })
    }

    pub fn with_labels(mut self, labels: Vec<String>) -> Result<Self> {
        if labels.len() != self.n_series() {
            return Err(Error::ShapeMismatch(format!(
                "{} labels for {} rows",
                labels.len(),
                self.n_series()
            )));
        }
        self.labels = labels;
        Ok(self)
    }

    /// Stacks `other` beneath `self`; both must share a calendar.
    pub fn stack(&self, other: &Self) -> Result<Self> {
        if self.calendar != other.calendar {
            return Err(Error::CalendarMismatch);
        }
        let values = ndarray::concatenate(Axis(0), &[self.values.view(), other.values.view()])
            .map_err(|e| Error::ShapeMismatch(e.to_string()))?;
        let mut labels = self.labels.clone();
        labels.extend(other.labels.iter().cloned());
        let kind = if self.kind == other.kind {
            self.kind
        } else {
            PanelKind::Normalized
        };
        Ok(Self {
            labels,
            calendar: self.calendar.clone(),
            values,
            kind,
        })
    }

    pub fn cast<U: Real>(&self) -> AlignedPanel<U> {
        AlignedPanel {
            labels: self.labels.clone(),
            calendar: self.calendar.clone(),
            values: self.values.mapv(|v| U::lit(v.as_f64())),
            kind: self.kind,
        }
    }

    pub(crate) fn from_parts_unchecked(
        labels: Vec<String>,
        calendar: Vec<NaiveDate>,
        values: Array2<T>,
        kind: PanelKind,
    ) -> Self {
        debug_assert_eq!(values.dim(), (labels.len(), calendar.len()));
        Self {
            labels,
            calendar,
            values,
            kind,
        }
    }

    /// Series view as `(label, [(date, value)])`, the input shape of
    /// [`align_panel`](super::align_panel).
    pub fn to_series(&self) -> Vec<super::LabeledSeries> {
        self.labels
            .iter()
            .enumerate()
            .map(|(i, label)| super::LabeledSeries {
                label: label.clone(),
                points: self
                    .calendar
                    .iter()
                    .zip(self.values.row(i))
                    .map(|(d, v)| (*d, v.as_f64()))
                    .collect(),
            })
            .collect()
    }
}
