use std::ops::Deref;

use ndarray::{Array2, ArrayView1};

use crate::error::{Error, Result};
use crate::ingest::{AlignedPanel, PanelKind};
use crate::scalar::Real;

/// One-step relative returns: column `t` holds `(S(t+1) - S(t)) / S(t)` and
/// is dated at `t`, so the last price date has no return column.
pub fn compute_returns<T: Real>(prices: &AlignedPanel<T>) -> Result<AlignedPanel<T>> {
    let t = prices.len();
    if t < 2 {
        return Err(Error::DegenerateSeries { needed: 2, got: t });
    }
    let v = prices.values();
    if let Some(((r, c), x)) = v.indexed_iter().find(|(_, x)| **x <= T::zero()) {
        return Err(Error::NonPositivePrice {
            ticker: prices.labels()[r].clone(),
            date: prices.calendar()[c],
            value: x.as_f64(),
        });
    }
    let mut out = Array2::zeros((prices.n_series(), t - 1));
    for (i, row) in v.rows().into_iter().enumerate() {
        for j in 0..t - 1 {
            out[[i, j]] = (row[j + 1] - row[j]) / row[j];
        }
    }
    AlignedPanel::new(
        prices.labels().to_vec(),
        prices.calendar()[..t - 1].to_vec(),
        out,
        PanelKind::Return,
    )
}

/// Panel whose rows have zero mean and unit population standard deviation.
#[derive(Debug, Clone, PartialEq)]
pub struct NormalizedPanel<T>(AlignedPanel<T>);

impl<T> Deref for NormalizedPanel<T> {
    type Target = AlignedPanel<T>;
    fn deref(&self) -> &AlignedPanel<T> {
        &self.0
    }
}

impl<T: Real> NormalizedPanel<T> {
    pub fn into_inner(self) -> AlignedPanel<T> {
        self.0
    }

    pub fn panel(&self) -> &AlignedPanel<T> {
        &self.0
    }

    /// Stacks two normalized panels (first block on top).
    pub fn stack(&self, other: &Self) -> Result<Self> {
        Ok(Self(self.0.stack(&other.0)?))
    }
}

/// Population mean and standard deviation.
pub fn mean_std<T: Real>(x: ArrayView1<'_, T>) -> (T, T) {
    let n = T::from_usize_lossy(x.len());
    let mean = x.iter().copied().sum::<T>() / n;
    let var = x.iter().map(|&v| (v - mean) * (v - mean)).sum::<T>() / n;
    (mean, var.sqrt())
}

/// Row-wise `(x - mean) / sigma` with the population convention, so that
/// `X Xᵀ / T` has an exact unit diagonal.
pub fn normalize_panel<T: Real>(panel: &AlignedPanel<T>) -> Result<NormalizedPanel<T>> {
    if panel.len() < 2 {
        return Err(Error::DegenerateSeries {
            needed: 2,
            got: panel.len(),
        });
    }
    let mut out = panel.values().clone();
    for (i, mut row) in out.rows_mut().into_iter().enumerate() {
        let (mean, sd) = mean_std(row.view());
        let scale = row.iter().fold(T::zero(), |m, v| m.max(v.abs()));
        if !(sd > scale * T::epsilon() * T::lit(16.0)) {
            return Err(Error::ZeroVariance {
                label: panel.labels()[i].clone(),
            });
        }
        row.mapv_inplace(|v| (v - mean) / sd);
    }
    let (labels, calendar, _, _) = panel.clone().into_parts();
    Ok(NormalizedPanel(AlignedPanel::from_parts_unchecked(
        labels,
        calendar,
        out,
        PanelKind::Normalized,
    )))
}
