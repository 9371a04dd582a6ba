use std::collections::HashMap;
use std::hash::Hash;

use super::{sample_count, LogBase};
use crate::error::{Error, Result};

/// Plug-in transfer entropy `TE_{Y→X}` of symbol sequences from joint
/// frequency tables. Exact for the empirical distribution; used as an
/// independent check of the kernel estimator on discretized data.
pub fn discrete_te_oracle<S: Copy + Eq + Hash>(
    x: &[S],
    y: &[S],
    k: usize,
    l: usize,
    log_base: LogBase,
) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::ShapeMismatch(format!("{} vs {}", x.len(), y.len())));
    }
    let m = k.max(l);
    if k == 0 || l == 0 || x.len() < m + 1 {
        return Err(Error::SeriesTooShort { len: x.len(), k, l });
    }
    let n_s = sample_count(x.len(), k, l);

    let mut joint: HashMap<(S, Vec<S>, Vec<S>), usize> = HashMap::new();
    let mut past: HashMap<Vec<S>, usize> = HashMap::new();
    let mut past_source: HashMap<(Vec<S>, Vec<S>), usize> = HashMap::new();
    let mut next_past: HashMap<(S, Vec<S>), usize> = HashMap::new();
    for n in m - 1..m - 1 + n_s {
        let xs: Vec<S> = (0..k).map(|c| x[n - c]).collect();
        let ys: Vec<S> = (0..l).map(|c| y[n - c]).collect();
        let next = x[n + 1];
        *joint.entry((next, xs.clone(), ys.clone())).or_default() += 1;
        *past.entry(xs.clone()).or_default() += 1;
        *past_source.entry((xs.clone(), ys)).or_default() += 1;
        *next_past.entry((next, xs)).or_default() += 1;
    }

    let total = n_s as f64;
    let mut te = 0.0;
    for ((next, xs, ys), &c) in &joint {
        let p_joint = c as f64 / total;
        let p_past = past[xs] as f64 / total;
        let p_past_source = past_source[&(xs.clone(), ys.clone())] as f64 / total;
        let p_next_past = next_past[&(*next, xs.clone())] as f64 / total;
        te += p_joint * (p_joint * p_past / (p_past_source * p_next_past)).ln();
    }
    Ok(log_base.from_nats(te))
}
