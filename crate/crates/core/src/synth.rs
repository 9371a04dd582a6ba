//! Seeded synthetic data: factor panels, coupled channels and a complete
//! on-disk fixture for end-to-end runs.

use std::fs;
use std::path::Path;

use chrono::{Datelike, Days, NaiveDate, Weekday};
use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::ingest::{write_news, write_prices, NewsDocument, PriceSeries};
use crate::seed::derive;
use crate::sentiment::Lexicon;

/// `x_i(t) = β_i f(t) + √(1 − β_i²) ε_i(t)` with one common Gaussian factor,
/// so the population correlation of rows `i ≠ j` is `β_i β_j`.
pub fn one_factor_panel<R: Rng + ?Sized>(loadings: &[f64], t: usize, rng: &mut R) -> Array2<f64> {
    assert!(
        loadings.iter().all(|b| b.abs() <= 1.0),
        "factor loadings must lie in [-1, 1]"
    );
    let factor: Vec<f64> = (0..t).map(|_| StandardNormal.sample(rng)).collect();
    let mut out = Array2::zeros((loadings.len(), t));
    for (i, &b) in loadings.iter().enumerate() {
        let idio = (1.0 - b * b).sqrt();
        for j in 0..t {
            let e: f64 = StandardNormal.sample(rng);
            out[[i, j]] = b * factor[j] + idio * e;
        }
    }
    out
}

/// Loadings `√ρ` for every series: equicorrelated with coefficient `ρ`.
pub fn equal_loadings(n: usize, rho: f64) -> Vec<f64> {
    vec![rho.sqrt(); n]
}

/// `n` loadings evenly spaced over `[lo, hi]`.
pub fn spread_loadings(n: usize, lo: f64, hi: f64) -> Vec<f64> {
    if n == 1 {
        return vec![(lo + hi) / 2.0];
    }
    (0..n)
        .map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64)
        .collect()
}

/// I.i.d. standard normal `n x t` panel.
pub fn gaussian_panel<R: Rng + ?Sized>(n: usize, t: usize, rng: &mut R) -> Array2<f64> {
    Array2::from_shape_simple_fn((n, t), || StandardNormal.sample(rng))
}

/// Copied binary channel: `y` is i.i.d. ±1 and `x(t+1) = y(t)`, each value
/// jittered by uniform noise of half-width `jitter`. Returns `(x, y)`.
pub fn copied_binary_channel<R: Rng + ?Sized>(
    n: usize,
    jitter: f64,
    rng: &mut R,
) -> (Vec<f64>, Vec<f64>) {
    let symbols: Vec<f64> = (0..n + 1)
        .map(|_| if rng.gen::<bool>() { 1.0 } else { -1.0 })
        .collect();
    let mut noise = |v: f64| {
        if jitter > 0.0 {
            v + rng.gen_range(-jitter..jitter)
        } else {
            v
        }
    };
    // x(t) = symbols[t] and y(t) = symbols[t + 1], so x(t + 1) = y(t).
    let x: Vec<f64> = symbols[..n].iter().map(|&v| noise(v)).collect();
    let y: Vec<f64> = symbols[1..].iter().map(|&v| noise(v)).collect();
    (x, y)
}

/// Business days (Monday to Friday) starting at `start`.
pub fn business_days(start: NaiveDate, count: usize) -> Vec<NaiveDate> {
    let mut out = Vec::with_capacity(count);
    let mut d = start;
    while out.len() < count {
        if !matches!(d.weekday(), Weekday::Sat | Weekday::Sun) {
            out.push(d);
        }
        d = d + Days::new(1);
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct FixtureSpec {
    pub n: usize,
    /// Price dates; the return panel is one shorter.
    pub days: usize,
    pub start: NaiveDate,
    pub seed: u64,
    pub docs_per_day: usize,
    pub words_per_doc: usize,
}

impl Default for FixtureSpec {
    fn default() -> Self {
        Self {
            n: 10,
            days: 218,
            start: NaiveDate::from_ymd_opt(2015, 7, 1).expect("valid date"),
            seed: 20150701,
            docs_per_day: 3,
            words_per_doc: 12,
        }
    }
}

const POSITIVE: &[(&str, f64)] = &[
    ("gain", 2.0),
    ("rally", 2.4),
    ("growth", 1.8),
    ("strong", 1.9),
    ("record", 1.2),
    ("optimism", 2.6),
    ("recovery", 1.6),
    ("surge", 2.1),
];
const NEGATIVE: &[(&str, f64)] = &[
    ("loss", -2.0),
    ("crisis", -3.1),
    ("decline", -1.7),
    ("weak", -1.9),
    ("fear", -2.4),
    ("default", -2.2),
    ("slump", -2.3),
    ("panic", -3.0),
];
const FILLER: &[&str] = &[
    "the",
    "market",
    "shares",
    "index",
    "investors",
    "said",
    "on",
    "today",
    "trading",
    "bank",
];

/// Tickers, keywords, prices, news and lexicon for a synthetic market.
///
/// Latent daily sentiment follows a one-factor model; each index return
/// loads on a market factor and on the previous day's sentiment of its own
/// keyword, so there is genuine polarity-to-return information flow.
pub struct Fixture {
    pub prices: Vec<PriceSeries>,
    pub news: Vec<NewsDocument>,
    pub lexicon: Lexicon,
    pub keywords: Vec<String>,
}

pub fn generate_fixture(spec: &FixtureSpec) -> Result<Fixture> {
    if spec.n == 0 || spec.days < 3 || spec.docs_per_day == 0 || spec.words_per_doc == 0 {
        return Err(Error::InvalidInput(
            "fixture dimensions must be positive".into(),
        ));
    }
    let dates = business_days(spec.start, spec.days);
    let mut rng = ChaCha8Rng::seed_from_u64(derive(spec.seed, &[1]));
    let sentiment = one_factor_panel(&spread_loadings(spec.n, 0.3, 0.8), spec.days, &mut rng);
    let market = one_factor_panel(&spread_loadings(spec.n, 0.35, 0.75), spec.days, &mut rng);

    let tickers: Vec<String> = (0..spec.n).map(|i| format!("IDX{:02}", i + 1)).collect();
    let keywords: Vec<String> = (0..spec.n).map(|i| format!("topic{:02}", i + 1)).collect();

    let mut prices = Vec::with_capacity(spec.n);
    for i in 0..spec.n {
        let mut level = 100.0 + 10.0 * i as f64;
        let mut obs = Vec::with_capacity(spec.days);
        for (t, &date) in dates.iter().enumerate() {
            if t > 0 {
                let r = 0.01 * (0.8 * market[[i, t]] + 0.6 * sentiment[[i, t - 1]]);
                level *= 1.0 + r;
            }
            obs.push((date, round_to(level, 4)));
        }
        prices.push(PriceSeries {
            ticker: tickers[i].clone(),
            country: format!("C{:02}", i + 1),
            observations: obs,
        });
    }

    let mut news = Vec::new();
    for (t, &date) in dates.iter().enumerate() {
        for (i, kw) in keywords.iter().enumerate() {
            let p_pos = 1.0 / (1.0 + (-1.5 * sentiment[[i, t]]).exp());
            for _ in 0..spec.docs_per_day {
                let mut words = vec![kw.clone()];
                for w in 0..spec.words_per_doc {
                    if w % 3 == 2 {
                        words.push(FILLER[rng.gen_range(0..FILLER.len())].to_string());
                    } else if rng.gen::<f64>() < p_pos {
                        words.push(POSITIVE[rng.gen_range(0..POSITIVE.len())].0.to_string());
                    } else {
                        words.push(NEGATIVE[rng.gen_range(0..NEGATIVE.len())].0.to_string());
                    }
                }
                news.push(NewsDocument {
                    keyword: kw.clone(),
                    date,
                    body: words.join(" "),
                });
            }
        }
    }

    let lexicon = Lexicon::new(POSITIVE.iter().chain(NEGATIVE).map(|&(w, s)| (w, s)))?;
    Ok(Fixture {
        prices,
        news,
        lexicon,
        keywords,
    })
}

/// Writes `prices.csv`, `news.ndjson` and `lexicon.tsv` into `dir`.
pub fn write_fixture(fixture: &Fixture, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir)?;
    write_prices(&fixture.prices, fs::File::create(dir.join("prices.csv"))?)?;
    write_news(&fixture.news, fs::File::create(dir.join("news.ndjson"))?)?;
    fixture
        .lexicon
        .write_tsv(fs::File::create(dir.join("lexicon.tsv"))?)?;
    Ok(())
}

fn round_to(v: f64, places: i32) -> f64 {
    let f = 10f64.powi(places);
    (v * f).round() / f
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn copied_channel_alignment() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let (x, y) = copied_binary_channel(50, 0.0, &mut rng);
        assert_eq!(x.len(), 50);
        assert_eq!(y.len(), 50);
        for t in 0..49 {
            assert_eq!(x[t + 1], y[t]);
        }
        assert!(x.iter().chain(&y).all(|v| v.abs() == 1.0));
    }

    #[test]
    fn one_factor_population_correlation() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let x = one_factor_panel(&[0.9, 0.5], 200_000, &mut rng);
        let r = crate::rmt::pearson(x.row(0).as_slice().unwrap(), x.row(1).as_slice().unwrap())
            .unwrap();
        assert!((r - 0.45).abs() < 0.01);
    }

    #[test]
    fn business_days_skip_weekends() {
        let d = business_days(NaiveDate::from_ymd_opt(2015, 7, 3).unwrap(), 3);
        assert_eq!(
            d,
            vec![
                NaiveDate::from_ymd_opt(2015, 7, 3).unwrap(),
                NaiveDate::from_ymd_opt(2015, 7, 6).unwrap(),
                NaiveDate::from_ymd_opt(2015, 7, 7).unwrap(),
            ]
        );
    }

    #[test]
    fn fixture_is_deterministic() {
        let spec = FixtureSpec {
            n: 2,
            days: 10,
            ..FixtureSpec::default()
        };
        let a = generate_fixture(&spec).unwrap();
        let b = generate_fixture(&spec).unwrap();
        assert_eq!(a.prices, b.prices);
        assert_eq!(a.news, b.news);
        assert_eq!(a.news.len(), 2 * 10 * spec.docs_per_day);
        assert!(a.prices.iter().all(|p| p.observations.len() == 10));
    }
}
