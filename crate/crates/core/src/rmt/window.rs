use chrono::NaiveDate;
use rayon::prelude::*;

use super::correlation::{correlation_matrix, eigendecompose, mean_correlation};
use super::eigen::Spectrum;
use super::returns::{normalize_panel, NormalizedPanel};
use crate::error::{Error, Result};
use crate::scalar::Real;

#[derive(Debug, Clone, PartialEq)]
pub struct WindowSpectrum<T> {
    /// Column index of the first day in the window.
    pub start: usize,
    pub start_date: NaiveDate,
    pub spectrum: Spectrum<T>,
    pub mean_corr: T,
}

pub fn window_count(len: usize, window: usize, step: usize) -> Result<usize> {
    if window == 0 || step == 0 {
        return Err(Error::InvalidInput(
            "window and step must be positive".into(),
        ));
    }
    if window > len {
        return Err(Error::WindowTooLong { window, len });
    }
    Ok((len - window) / step + 1)
}

/// Correlation spectrum of every `window`-day slice, advancing by `step`.
/// Each slice is re-normalized before its correlation matrix is formed.
/// Windows are evaluated in parallel; output is ordered by start.
pub fn sliding_spectra<T: Real>(
    panel: &NormalizedPanel<T>,
    window: usize,
    step: usize,
) -> Result<Vec<WindowSpectrum<T>>> {
    let count = window_count(panel.len(), window, step)?;
    (0..count)
        .into_par_iter()
        .map(|w| {
            let start = w * step;
            let slice = normalize_panel(&panel.columns(start, start + window)?)?;
            let c = correlation_matrix(&slice);
            Ok(WindowSpectrum {
                start,
                start_date: panel.calendar()[start],
                spectrum: eigendecompose(&c)?,
                mean_corr: mean_correlation(&c),
            })
        })
        .collect()
}
