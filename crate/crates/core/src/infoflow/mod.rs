//! Transfer entropy between time series with a box-kernel density estimate,
//! its shuffled-surrogate bias correction and the all-pairs matrix.

mod estimator;
mod matrix;
mod oracle;
mod surrogate;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Real;

pub use estimator::{transfer_entropy, TeEstimate};
pub use matrix::{
    ete_matrix, pair_seed, read_labeled_matrix, write_labeled_matrix, EteMatrix, EteSidecar,
    MissingPair,
};
pub use oracle::discrete_te_oracle;
pub use surrogate::{effective_te, shuffle_surrogate, EteEstimate};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", tag = "mode", content = "h")]
pub enum Bandwidth {
    Fixed(f64),
    /// Silverman's rule on the destination series.
    Silverman,
}

/// How the kernel width `h` maps to the box.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BoxWidth {
    /// Points within `h` of the query in every coordinate.
    #[default]
    Half,
    /// The box has total side `h`, so points within `h/2`.
    Full,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum LogBase {
    #[default]
    #[serde(rename = "2")]
    Two,
    #[serde(rename = "e")]
    E,
}

impl LogBase {
    /// Converts a natural-log quantity into this base.
    pub fn from_nats(self, nats: f64) -> f64 {
        match self {
            Self::Two => nats / std::f64::consts::LN_2,
            Self::E => nats,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TeConfig {
    /// History length of the destination.
    pub k: usize,
    /// History length of the source.
    pub l: usize,
    pub bandwidth: Bandwidth,
    pub box_width: BoxWidth,
    pub log_base: LogBase,
    /// Number of shuffled surrogates.
    pub surrogates: usize,
    pub seed: u64,
    /// Exclude neighbors closer than this many samples in time (`Some(0)`
    /// excludes only the sample itself). Off by default.
    pub theiler: Option<usize>,
}

impl Default for TeConfig {
    fn default() -> Self {
        Self {
            k: 1,
            l: 1,
            bandwidth: Bandwidth::Silverman,
            box_width: BoxWidth::Half,
            log_base: LogBase::Two,
            surrogates: 1000,
            seed: 0,
            theiler: None,
        }
    }
}

impl TeConfig {
    pub fn validate(&self) -> Result<()> {
        if self.k == 0 || self.l == 0 {
            return Err(Error::InvalidInput(format!(
                "history lengths must be at least 1 (k = {}, l = {})",
                self.k, self.l
            )));
        }
        if let Bandwidth::Fixed(h) = self.bandwidth {
            if !(h > 0.0 && h.is_finite()) {
                return Err(Error::InvalidInput(format!(
                    "bandwidth must be positive, got {h}"
                )));
            }
        }
        Ok(())
    }

    /// Kernel width for a given destination series.
    pub fn bandwidth_for<T: Real>(&self, destination: &[T]) -> Result<f64> {
        match self.bandwidth {
            Bandwidth::Fixed(h) => Ok(h),
            Bandwidth::Silverman => {
                let n = destination.len();
                let mean = destination.iter().map(|v| v.as_f64()).sum::<f64>() / n.max(1) as f64;
                let var = destination
                    .iter()
                    .map(|v| (v.as_f64() - mean).powi(2))
                    .sum::<f64>()
                    / n.max(1) as f64;
                silverman_bandwidth(var.sqrt(), n)
            }
        }
    }

    /// Max-norm radius: candidates count when every coordinate differs by
    /// strictly less than this.
    pub fn radius(&self, h: f64) -> f64 {
        match self.box_width {
            BoxWidth::Half => h,
            BoxWidth::Full => h / 2.0,
        }
    }
}

/// `h = (4σ⁵ / (3n))^(1/5)`.
pub fn silverman_bandwidth(sigma: f64, n: usize) -> Result<f64> {
    if !(sigma > 0.0 && sigma.is_finite()) {
        return Err(Error::InvalidInput(format!(
            "standard deviation must be positive, got {sigma}"
        )));
    }
    if n < 2 {
        return Err(Error::InvalidInput(format!(
            "need at least 2 samples, got {n}"
        )));
    }
    Ok((4.0 * sigma.powi(5) / (3.0 * n as f64)).powf(0.2))
}

/// Delay vectors `(x_n, x_{n-1}, …, x_{n-k+1})` with their successors `x_{n+1}`.
#[derive(Debug, Clone, PartialEq)]
pub struct Embedding<T> {
    pub histories: Vec<Vec<T>>,
    pub successors: Vec<T>,
}

pub fn embed<T: Real>(x: &[T], k: usize) -> Result<Embedding<T>> {
    if k == 0 || x.len() <= k {
        return Err(Error::SeriesTooShort {
            len: x.len(),
            k,
            l: 0,
        });
    }
    let (histories, successors) = (k - 1..x.len() - 1)
        .map(|n| ((0..k).map(|c| x[n - c]).collect(), x[n + 1]))
        .unzip();
    Ok(Embedding {
        histories,
        successors,
    })
}

/// Number of usable samples for a pair: time index `n` runs from
/// `max(k, l) - 1` to `len - 2`.
pub(crate) fn sample_count(len: usize, k: usize, l: usize) -> usize {
    len.saturating_sub(k.max(l))
}
