use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use super::estimator::{DestinationIndex, TeEstimate};
use super::TeConfig;
use crate::error::{Error, Result};
use crate::scalar::Real;
use crate::seed::derive;

/// Uniformly random permutation of `y`.
pub fn shuffle_surrogate<T: Clone, R: Rng + ?Sized>(y: &[T], rng: &mut R) -> Vec<T> {
    let mut out = y.to_vec();
    out.shuffle(rng);
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EteEstimate {
    /// `TE − mean(TE of shuffled sources)`.
    pub ete: f64,
    pub te: TeEstimate,
    pub surrogate_mean: f64,
    /// Sample standard deviation of the surrogate values.
    pub surrogate_std: f64,
    pub surrogates: usize,
}

/// Effective transfer entropy `Y → X`, with surrogates seeded from
/// `cfg.seed`. Surrogate `i` shuffles with seed `derive(cfg.seed, [i])`.
pub fn effective_te<T: Real>(x: &[T], y: &[T], cfg: &TeConfig) -> Result<EteEstimate> {
    let index = DestinationIndex::for_config(x, cfg)?;
    effective_te_indexed(&index, y, cfg.surrogates, cfg.seed)
}

pub(crate) fn effective_te_indexed<T: Real>(
    index: &DestinationIndex<T>,
    y: &[T],
    surrogates: usize,
    seed: u64,
) -> Result<EteEstimate> {
    if surrogates == 0 {
        return Err(Error::InvalidInput(
            "effective transfer entropy needs at least one surrogate".into(),
        ));
    }
    let te = index.estimate(y)?;
    let values = (0..surrogates)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(derive(seed, &[i as u64]));
            let shuffled = shuffle_surrogate(y, &mut rng);
            index.estimate(&shuffled).map(|e| e.value)
        })
        .collect::<Result<Vec<f64>>>()?;
    let m = surrogates as f64;
    let mean = values.iter().sum::<f64>() / m;
    let std = if surrogates > 1 {
        (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (m - 1.0)).sqrt()
    } else {
        0.0
    };
    Ok(EteEstimate {
        ete: te.value - mean,
        te,
        surrogate_mean: mean,
        surrogate_std: std,
        surrogates,
    })
}
