use serde::Serialize;

use super::{sample_count, LogBase, TeConfig};
use crate::error::{Error, Result};
use crate::scalar::Real;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TeEstimate {
    /// Transfer entropy in the configured log base.
    pub value: f64,
    /// Samples that entered the average.
    pub samples: usize,
    /// Samples dropped because one of their box counts was zero.
    pub skipped: usize,
    /// Kernel width used.
    pub h: f64,
}

impl TeEstimate {
    pub fn skip_rate(&self) -> f64 {
        let total = self.samples + self.skipped;
        if total == 0 {
            0.0
        } else {
            self.skipped as f64 / total as f64
        }
    }
}

/// `TE_{Y→X}`: information the past of `y` adds about the next value of `x`
/// beyond the past of `x`.
///
/// Each probability is the fraction of samples inside a max-norm box around
/// the query; the sample average of
/// `log[p(x⁺, x, y) p(x) / (p(x, y) p(x⁺, x))]` is returned.
pub fn transfer_entropy<T: Real>(x: &[T], y: &[T], cfg: &TeConfig) -> Result<TeEstimate> {
    let index = DestinationIndex::for_config(x, cfg)?;
    index.estimate(y)
}

/// Everything about a destination series that does not depend on the
/// source: samples sorted by the current value `x_n`, the candidate range of
/// each sample along that coordinate and the source-free box counts. Built
/// once and reused for the original source and all its surrogates.
pub(crate) struct DestinationIndex<T> {
    k: usize,
    l: usize,
    m: usize,
    radius: T,
    h: f64,
    log_base: LogBase,
    theiler: Option<usize>,
    /// `order[p]` is the sample index at sorted position `p`.
    order: Vec<usize>,
    /// `position[s]` inverts `order`.
    position: Vec<usize>,
    next: Vec<T>,
    /// `past[c][p]` is `x_{n-c}` for the sample at position `p`.
    past: Vec<Vec<T>>,
    ranges: Vec<(usize, usize)>,
    count_x: Vec<u32>,
    count_next_x: Vec<u32>,
}

#[inline]
fn near<T: Real>(a: T, b: T, r: T) -> bool {
    (a - b).abs() < r
}

impl<T: Real> DestinationIndex<T> {
    pub(crate) fn for_config(x: &[T], cfg: &TeConfig) -> Result<Self> {
        cfg.validate()?;
        let h = cfg.bandwidth_for(x)?;
        Self::new(x, cfg.k, cfg.l, h, cfg.radius(h), cfg.log_base, cfg.theiler)
    }

    fn new(
        x: &[T],
        k: usize,
        l: usize,
        h: f64,
        radius: f64,
        log_base: LogBase,
        theiler: Option<usize>,
    ) -> Result<Self> {
        let m = k.max(l);
        if x.len() < m + 2 {
            return Err(Error::SeriesTooShort { len: x.len(), k, l });
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("series has non-finite values".into()));
        }
        let n_s = sample_count(x.len(), k, l);
        let time = |s: usize| s + m - 1;
        let mut order: Vec<usize> = (0..n_s).collect();
        order.sort_by(|&a, &b| {
            x[time(a)]
                .partial_cmp(&x[time(b)])
                .expect("finite values")
                .then(a.cmp(&b))
        });
        let mut position = vec![0; n_s];
        for (p, &s) in order.iter().enumerate() {
            position[s] = p;
        }
        let next: Vec<T> = order.iter().map(|&s| x[time(s) + 1]).collect();
        let past: Vec<Vec<T>> = (0..k)
            .map(|c| order.iter().map(|&s| x[time(s) - c]).collect())
            .collect();
        let r = T::lit(radius);
        let key = &past[0];
        let ranges = key
            .iter()
            .map(|&v| {
                let lo = key.partition_point(|&u| u < v && !near(u, v, r));
                let hi = key.partition_point(|&u| u <= v || near(u, v, r));
                (lo, hi)
            })
            .collect();
        let mut index = Self {
            k,
            l,
            m,
            radius: r,
            h,
            log_base,
            theiler,
            order,
            position,
            next,
            past,
            ranges,
            count_x: Vec::new(),
            count_next_x: Vec::new(),
        };
        let (cx, cnx) = index.destination_counts();
        index.count_x = cx;
        index.count_next_x = cnx;
        Ok(index)
    }

    pub(crate) fn h(&self) -> f64 {
        self.h
    }

    pub(crate) fn series_len(&self) -> usize {
        self.order.len() + self.m
    }

    fn past_matches(&self, p: usize, q: usize) -> bool {
        (1..self.k).all(|c| near(self.past[c][q], self.past[c][p], self.radius))
    }

    /// Positions whose samples lie inside the Theiler window of `p`, other
    /// than those already outside the candidate range.
    fn excluded(&self, p: usize) -> impl Iterator<Item = usize> + '_ {
        let s = self.order[p];
        let (lo, hi) = self.ranges[p];
        let w = self.theiler.unwrap_or(0);
        let first = s.saturating_sub(w);
        let last = (s + w).min(self.order.len() - 1);
        (first..=last)
            .filter(move |_| self.theiler.is_some())
            .map(move |t| self.position[t])
            .filter(move |&q| q >= lo && q < hi)
    }

    fn destination_counts(&self) -> (Vec<u32>, Vec<u32>) {
        let n_s = self.order.len();
        let mut cx = vec![0u32; n_s];
        let mut cnx = vec![0u32; n_s];
        for p in 0..n_s {
            let (lo, hi) = self.ranges[p];
            let next = self.next[p];
            let (mut a, mut b) = (0u32, 0u32);
            for q in lo..hi {
                if self.past_matches(p, q) {
                    a += 1;
                    b += near(self.next[q], next, self.radius) as u32;
                }
            }
            for q in self.excluded(p) {
                if self.past_matches(p, q) {
                    a -= 1;
                    b -= near(self.next[q], next, self.radius) as u32;
                }
            }
            cx[p] = a;
            cnx[p] = b;
        }
        (cx, cnx)
    }

    /// Source history `y_{n-c}` arranged by sorted position.
    fn source_past(&self, y: &[T]) -> Vec<Vec<T>> {
        (0..self.l)
            .map(|c| self.order.iter().map(|&s| y[s + self.m - 1 - c]).collect())
            .collect()
    }

    pub(crate) fn estimate(&self, y: &[T]) -> Result<TeEstimate> {
        if y.len() != self.series_len() {
            return Err(Error::ShapeMismatch(format!(
                "source length {} but destination length {}",
                y.len(),
                self.series_len()
            )));
        }
        if y.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("series has non-finite values".into()));
        }
        let ypast = self.source_past(y);
        let r = self.radius;
        let source_matches = |p: usize, q: usize| ypast.iter().all(|col| near(col[q], col[p], r));
        let n_s = self.order.len();
        let (mut total, mut used, mut skipped) = (0.0f64, 0usize, 0usize);
        for p in 0..n_s {
            let (lo, hi) = self.ranges[p];
            let next = self.next[p];
            let (mut cxy, mut cj) = (0u32, 0u32);
            if self.k == 1 && self.l == 1 {
                // Branch-free and bounds-check-free; the common case.
                let (ys, yp) = (&ypast[0][lo..hi], ypast[0][p]);
                for (&nq, &yq) in self.next[lo..hi].iter().zip(ys) {
                    let hit = near(yq, yp, r) as u32;
                    cxy += hit;
                    cj += hit & near(nq, next, r) as u32;
                }
            } else {
                for q in lo..hi {
                    if source_matches(p, q) && self.past_matches(p, q) {
                        cxy += 1;
                        cj += near(self.next[q], next, r) as u32;
                    }
                }
            }
            for q in self.excluded(p) {
                if source_matches(p, q) && self.past_matches(p, q) {
                    cxy -= 1;
                    cj -= near(self.next[q], next, r) as u32;
                }
            }
            let (cx, cnx) = (self.count_x[p], self.count_next_x[p]);
            if cj == 0 || cx == 0 || cxy == 0 || cnx == 0 {
                skipped += 1;
                continue;
            }
            let num = cj as u64 * cx as u64;
            let den = cxy as u64 * cnx as u64;
            total += (num as f64 / den as f64).ln();
            used += 1;
        }
        if used == 0 {
            return Err(Error::AllSamplesSkipped(n_s));
        }
        Ok(TeEstimate {
            value: self.log_base.from_nats(total / used as f64),
            samples: used,
            skipped,
            h: self.h,
        })
    }
}
