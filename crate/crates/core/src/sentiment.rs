//! Lexicon scoring of news text into daily polarity series.
//!
//! Text is reduced to lowercase alphanumeric tokens, each document scores as
//! the mean valence of the tokens found in the lexicon, and a day's polarity
//! is the mean over that day's scored documents.

use std::collections::HashMap;
use std::fs;
use std::io::Write;
use std::path::Path;

use chrono::NaiveDate;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::{csv_io, NewsDocument};

pub const MIN_SCORE: f64 = -4.0;
pub const MAX_SCORE: f64 = 4.0;

#[derive(Debug, Clone, PartialEq)]
pub struct Lexicon {
    entries: HashMap<String, f64>,
}

impl Lexicon {
    pub fn new<I, S>(entries: I) -> Result<Self>
    where
        I: IntoIterator<Item = (S, f64)>,
        S: Into<String>,
    {
        let mut map = HashMap::new();
        for (i, (token, score)) in entries.into_iter().enumerate() {
            let token = token.into();
            validate_entry(&token, score).map_err(|message| Error::InvalidLexicon {
                line: i as u64 + 1,
                message,
            })?;
            map.insert(token, score);
        }
        if map.is_empty() {
            return Err(Error::InvalidLexicon {
                line: 0,
                message: "lexicon is empty".into(),
            });
        }
        Ok(Self { entries: map })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_tsv(&fs::read_to_string(path)?)
    }

    /// Parses `token<TAB>score` lines. Extra tab-separated columns are
    /// ignored, so valence files that append rating statistics load as-is.
    /// Blank lines and lines starting with `#` are skipped; tokens are
    /// lowercased.
    pub fn from_tsv(text: &str) -> Result<Self> {
        let mut map = HashMap::new();
        for (i, line) in text.lines().enumerate() {
            let line_no = i as u64 + 1;
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let mut cols = line.split('\t');
            let token = cols.next().unwrap_or_default().trim().to_lowercase();
            let score: f64 = cols
                .next()
                .and_then(|s| s.trim().parse().ok())
                .ok_or_else(|| Error::InvalidLexicon {
                    line: line_no,
                    message: format!("missing or unparsable score in {line:?}"),
                })?;
            validate_entry(&token, score).map_err(|message| Error::InvalidLexicon {
                line: line_no,
                message,
            })?;
            if map.insert(token.clone(), score).is_some() {
                return Err(Error::InvalidLexicon {
                    line: line_no,
                    message: format!("duplicate token {token:?}"),
                });
            }
        }
        if map.is_empty() {
            return Err(Error::InvalidLexicon {
                line: 0,
                message: "lexicon is empty".into(),
            });
        }
        Ok(Self { entries: map })
    }

    pub fn get(&self, token: &str) -> Option<f64> {
        self.entries.get(token).copied()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Entries sorted by token.
    pub fn sorted_entries(&self) -> Vec<(&str, f64)> {
        let mut v: Vec<_> = self.entries.iter().map(|(k, v)| (k.as_str(), *v)).collect();
        v.sort_by(|a, b| a.0.cmp(b.0));
        v
    }

    pub fn write_tsv<W: Write>(&self, mut out: W) -> Result<()> {
        for (token, score) in self.sorted_entries() {
            writeln!(out, "{token}\t{score}")?;
        }
        Ok(())
    }
}

fn validate_entry(token: &str, score: f64) -> std::result::Result<(), String> {
    if token.is_empty() {
        return Err("empty token".into());
    }
    if token.chars().any(char::is_whitespace) {
        return Err(format!("token {token:?} contains whitespace"));
    }
    if token.chars().any(char::is_uppercase) {
        return Err(format!("token {token:?} is not lowercase"));
    }
    if !(MIN_SCORE..=MAX_SCORE).contains(&score) {
        return Err(format!("score {score} for {token:?} outside [-4, 4]"));
    }
    Ok(())
}

/// Maximal runs of alphanumeric characters, lowercased.
pub fn clean_text(raw: &str) -> Vec<String> {
    raw.split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(str::to_lowercase)
        .collect()
}

/// Mean lexicon score over the tokens the lexicon knows.
pub fn score_text<S: AsRef<str>>(tokens: &[S], lexicon: &Lexicon) -> Result<f64> {
    let (sum, hits) = tokens
        .iter()
        .filter_map(|t| lexicon.get(t.as_ref()))
        .fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    if hits == 0 {
        return Err(Error::NoLexiconHit);
    }
    Ok(sum / hits as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Aggregation {
    /// Score each document, then average the document scores.
    #[default]
    PerDocument,
    /// Pool every token of the day's documents and score once.
    PooledTokens,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Imputation {
    /// News-free days get polarity 0.
    #[default]
    Neutral,
    /// News-free days repeat the previous day's polarity (0 before the first).
    CarryForward,
}

/// Treatment of documents dated outside the calendar (e.g. weekends).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OffCalendar {
    #[default]
    Drop,
    /// Attribute the document to the next calendar date.
    NextDate,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct PolarityOptions {
    pub aggregation: Aggregation,
    pub impute: Imputation,
    pub off_calendar: OffCalendar,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolarityObservation {
    pub date: NaiveDate,
    pub polarity: f64,
    /// Documents that contributed a score.
    pub doc_count: usize,
    /// Documents present that day without any lexicon hit.
    pub unscored: usize,
    pub imputed: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PolaritySeries {
    pub keyword: String,
    pub observations: Vec<PolarityObservation>,
}

impl PolaritySeries {
    pub fn values(&self) -> Vec<f64> {
        self.observations.iter().map(|o| o.polarity).collect()
    }

    pub fn imputed_days(&self) -> usize {
        self.observations.iter().filter(|o| o.imputed).count()
    }
}

pub fn daily_polarity(
    docs: &[NewsDocument],
    keyword: &str,
    calendar: &[NaiveDate],
    lexicon: &Lexicon,
    options: PolarityOptions,
) -> Result<PolaritySeries> {
    if calendar.is_empty() {
        return Err(Error::InvalidInput("calendar is empty".into()));
    }
    if calendar.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidInput(
            "calendar must be strictly increasing".into(),
        ));
    }

    // Per-document token lists, in input order, attributed to a calendar slot.
    let assigned: Vec<(usize, Vec<String>)> = docs
        .par_iter()
        .filter(|d| d.keyword == keyword)
        .filter_map(|d| {
            let slot = match calendar.binary_search(&d.date) {
                Ok(i) => Some(i),
                Err(i) => match options.off_calendar {
                    OffCalendar::Drop => None,
                    OffCalendar::NextDate => (i < calendar.len()).then_some(i),
                },
            }?;
            Some((slot, clean_text(&d.body)))
        })
        .collect();

    let mut per_day: Vec<Vec<&[String]>> = vec![Vec::new(); calendar.len()];
    for (slot, tokens) in &assigned {
        per_day[*slot].push(tokens);
    }

    let mut observations = Vec::with_capacity(calendar.len());
    let mut previous = 0.0;
    for (date, day_docs) in calendar.iter().zip(&per_day) {
        let (score, doc_count, unscored) = match options.aggregation {
            Aggregation::PerDocument => {
                let mut sum = 0.0;
                let mut n = 0usize;
                for tokens in day_docs {
                    if let Ok(s) = score_text(tokens, lexicon) {
                        sum += s;
                        n += 1;
                    }
                }
                let score = (n > 0).then(|| sum / n as f64);
                (score, n, day_docs.len() - n)
            }
            Aggregation::PooledTokens => {
                let scored: Vec<&[String]> = day_docs
                    .iter()
                    .copied()
                    .filter(|t| t.iter().any(|w| lexicon.get(w).is_some()))
                    .collect();
                let pooled: Vec<&String> = scored.iter().flat_map(|t| t.iter()).collect();
                let score = score_text(&pooled, lexicon).ok();
                (score, scored.len(), day_docs.len() - scored.len())
            }
        };
        let (polarity, imputed) = match score {
            Some(s) => (s, false),
            None => match options.impute {
                Imputation::Neutral => (0.0, true),
                Imputation::CarryForward => (previous, true),
            },
        };
        previous = polarity;
        observations.push(PolarityObservation {
            date: *date,
            polarity,
            doc_count,
            unscored,
            imputed,
        });
    }
    Ok(PolaritySeries {
        keyword: keyword.to_string(),
        observations,
    })
}

pub fn write_polarity_csv<W: Write>(series: &[PolaritySeries], out: W) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(out);
    wtr.write_record(["keyword", "date", "polarity", "doc_count", "imputed"])
        .map_err(csv_io)?;
    for s in series {
        for o in &s.observations {
            wtr.write_record([
                s.keyword.clone(),
                o.date.to_string(),
                o.polarity.to_string(),
                o.doc_count.to_string(),
                o.imputed.to_string(),
            ])
            .map_err(csv_io)?;
        }
    }
    wtr.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn lex(pairs: &[(&str, f64)]) -> Lexicon {
        Lexicon::new(pairs.iter().map(|(t, s)| (t.to_string(), *s))).unwrap()
    }

    fn day(i: u64) -> NaiveDate {
        NaiveDate::from_ymd_opt(2015, 7, 1).unwrap() + chrono::Days::new(i)
    }

    #[test]
    fn tokenizes_on_non_alphanumerics() {
        assert_eq!(
            clean_text("Markets FELL, sharply!!"),
            ["markets", "fell", "sharply"]
        );
        assert!(clean_text("").is_empty());
        assert_eq!(clean_text("U.S.-China 2015"), ["u", "s", "china", "2015"]);
    }

    #[test]
    fn scores_mean_of_hits() {
        let l = lex(&[("up", 2.0), ("down", -3.0)]);
        assert_eq!(score_text(&["up", "down"], &l).unwrap(), -0.5);
        assert_eq!(score_text(&["up", "the", "down"], &l).unwrap(), -0.5);
        assert!(matches!(
            score_text(&["the", "a"], &l),
            Err(Error::NoLexiconHit)
        ));
    }

    #[test]
    fn symmetric_lexicon_mean_vanishes() {
        let l = lex(&[("good", 1.0), ("bad", -1.0)]);
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let tokens: Vec<&str> = (0..1000)
            .map(|_| if rng.gen_bool(0.5) { "good" } else { "bad" })
            .collect();
        let direct = tokens
            .iter()
            .map(|t| if *t == "good" { 1.0 } else { -1.0 })
            .sum::<f64>()
            / 1000.0;
        let s = score_text(&tokens, &l).unwrap();
        assert!((s - direct).abs() < 1e-15);
        assert!(s.abs() < 0.1, "mean {s}");
    }

    #[test]
    fn lexicon_validation() {
        assert!(Lexicon::from_tsv("good\t5.0\n").is_err());
        assert!(Lexicon::from_tsv("two words\t1.0\n").is_err());
        assert!(Lexicon::from_tsv("good\tx\n").is_err());
        assert!(Lexicon::from_tsv("# only a comment\n").is_err());
        assert!(Lexicon::from_tsv("good\t1\ngood\t2\n").is_err());
        let l = Lexicon::from_tsv("# c\nGood\t1.9\t0.9\t[2, 2]\n\nbad\t-2.5\n").unwrap();
        assert_eq!(l.get("good"), Some(1.9));
        assert_eq!(l.len(), 2);
    }

    fn doc(day_idx: u64, body: &str) -> NewsDocument {
        NewsDocument {
            keyword: "Mexico".into(),
            date: day(day_idx),
            body: body.into(),
        }
    }

    #[test]
    fn day_is_mean_of_documents() {
        let l = lex(&[("gain", 0.4), ("loss", -0.2)]);
        let docs = vec![doc(0, "A gain."), doc(0, "A loss.")];
        let s = daily_polarity(&docs, "Mexico", &[day(0)], &l, PolarityOptions::default()).unwrap();
        let o = &s.observations[0];
        assert!((o.polarity - 0.1).abs() < 1e-15);
        assert_eq!(o.doc_count, 2);
        assert!(!o.imputed);
    }

    #[test]
    fn empty_day_is_imputed() {
        let l = lex(&[("gain", 0.4)]);
        let docs = vec![doc(0, "gain"), doc(0, "nothing here")];
        let cal = [day(0), day(1)];
        let s = daily_polarity(&docs, "Mexico", &cal, &l, PolarityOptions::default()).unwrap();
        assert_eq!(s.observations.len(), 2);
        assert_eq!(s.observations[0].unscored, 1);
        assert_eq!(s.observations[1].polarity, 0.0);
        assert!(s.observations[1].imputed);

        let carry = PolarityOptions {
            impute: Imputation::CarryForward,
            ..Default::default()
        };
        let s = daily_polarity(&docs, "Mexico", &cal, &l, carry).unwrap();
        assert_eq!(s.observations[1].polarity, 0.4);
        assert!(s.observations[1].imputed);
    }

    #[test]
    fn off_calendar_documents() {
        let l = lex(&[("gain", 1.0), ("loss", -1.0)]);
        let docs = vec![doc(0, "gain"), doc(1, "loss")];
        let cal = [day(0), day(2)];
        let dropped =
            daily_polarity(&docs, "Mexico", &cal, &l, PolarityOptions::default()).unwrap();
        assert!(dropped.observations[1].imputed);
        let rolled = PolarityOptions {
            off_calendar: OffCalendar::NextDate,
            ..Default::default()
        };
        let rolled = daily_polarity(&docs, "Mexico", &cal, &l, rolled).unwrap();
        assert_eq!(rolled.observations[1].polarity, -1.0);
    }

    #[test]
    fn pooled_aggregation_weights_by_words() {
        let l = lex(&[("gain", 1.0), ("loss", -1.0)]);
        let docs = vec![doc(0, "gain gain gain"), doc(0, "loss")];
        let per_doc =
            daily_polarity(&docs, "Mexico", &[day(0)], &l, PolarityOptions::default()).unwrap();
        assert_eq!(per_doc.observations[0].polarity, 0.0);
        let pooled = PolarityOptions {
            aggregation: Aggregation::PooledTokens,
            ..Default::default()
        };
        let pooled = daily_polarity(&docs, "Mexico", &[day(0)], &l, pooled).unwrap();
        assert_eq!(pooled.observations[0].polarity, 0.5);
    }

    #[test]
    fn csv_export_columns() {
        let l = lex(&[("gain", 1.0)]);
        let s = daily_polarity(
            &[doc(0, "gain")],
            "Mexico",
            &[day(0), day(1)],
            &l,
            PolarityOptions::default(),
        )
        .unwrap();
        let mut buf = Vec::new();
        write_polarity_csv(&[s], &mut buf).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "keyword,date,polarity,doc_count,imputed\nMexico,2015-07-01,1,1,false\nMexico,2015-07-02,0,0,true\n"
        );
    }

    const WORDS: [(&str, f64); 6] = [
        ("up", 2.0),
        ("down", -3.0),
        ("calm", 0.5),
        ("panic", -3.7),
        ("boom", 3.1),
        ("flat", -0.4),
    ];

    proptest! {
        #[test]
        fn score_bounded_and_order_free(idx in proptest::collection::vec(0usize..8, 1..40), seed in any::<u64>()) {
            let l = lex(&WORDS);
            let tokens: Vec<&str> = idx.iter().map(|&i| WORDS.get(i).map_or("filler", |w| w.0)).collect();
            let Ok(s) = score_text(&tokens, &l) else {
                prop_assert!(tokens.iter().all(|t| *t == "filler"));
                return Ok(());
            };
            let used: Vec<f64> = tokens.iter().filter_map(|t| l.get(t)).collect();
            let lo = used.iter().cloned().fold(f64::INFINITY, f64::min);
            let hi = used.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            prop_assert!(s >= lo - 1e-12 && s <= hi + 1e-12);

            let mut shuffled = tokens.clone();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rand::seq::SliceRandom::shuffle(shuffled.as_mut_slice(), &mut rng);
            let s2 = score_text(&shuffled, &l).unwrap();
            prop_assert!((s - s2).abs() < 1e-12);
        }

        #[test]
        fn scaling_lexicon_scales_polarity(c in 0.01f64..1.0, picks in proptest::collection::vec((0u64..5, 0usize..7), 0..30)) {
            let base = lex(&WORDS);
            let scaled = lex(&WORDS.map(|(t, s)| (t, s * c)));
            let docs: Vec<NewsDocument> = picks
                .iter()
                .map(|&(d, w)| doc(d, WORDS.get(w).map_or("nothing", |x| x.0)))
                .collect();
            let cal: Vec<NaiveDate> = (0..5).map(day).collect();
            let a = daily_polarity(&docs, "Mexico", &cal, &base, PolarityOptions::default()).unwrap();
            let b = daily_polarity(&docs, "Mexico", &cal, &scaled, PolarityOptions::default()).unwrap();
            prop_assert_eq!(a.observations.len(), cal.len());
            for (x, y) in a.observations.iter().zip(&b.observations) {
                prop_assert_eq!(x.imputed, y.imputed);
                if !x.imputed {
                    prop_assert!((x.polarity * c - y.polarity).abs() < 1e-12);
                }
            }
        }
    }
}
