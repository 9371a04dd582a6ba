use std::collections::{BTreeMap, BTreeSet};

use chrono::NaiveDate;
use ndarray::Array2;
use serde::{Deserialize, Serialize};

use super::{AlignedPanel, PanelKind};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct LabeledSeries {
    pub label: String,
    pub points: Vec<(NaiveDate, f64)>,
}

impl LabeledSeries {
    pub fn new(label: impl Into<String>, points: Vec<(NaiveDate, f64)>) -> Self {
        Self {
            label: label.into(),
            points,
        }
    }
}

impl From<&super::PriceSeries> for LabeledSeries {
    fn from(p: &super::PriceSeries) -> Self {
        Self::new(p.ticker.clone(), p.observations.clone())
    }
}

/// How the shared calendar is formed from the surviving series.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CalendarRule {
    /// Only dates every surviving series actually observed.
    #[default]
    Intersection,
    /// Every date any surviving series observed; gaps are forward-filled up
    /// to the fill limit and dates that still have a hole are removed.
    Union,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AlignPolicy {
    pub calendar: CalendarRule,
    /// Longest run of consecutive missing dates that may be forward-filled.
    pub max_fill: usize,
    /// Series missing a larger fraction of the full date union are dropped.
    pub max_missing_fraction: f64,
}

impl Default for AlignPolicy {
    fn default() -> Self {
        Self {
            calendar: CalendarRule::Intersection,
            max_fill: 3,
            max_missing_fraction: 0.10,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DroppedSeries {
    pub label: String,
    pub missing_fraction: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct AlignReport {
    pub dropped: Vec<DroppedSeries>,
    /// Forward-filled cells that made it into the panel.
    pub filled: usize,
    /// Candidate dates removed because some series had no value there.
    pub removed_dates: Vec<NaiveDate>,
}

#[derive(Debug, Clone)]
pub struct Alignment {
    pub panel: AlignedPanel<f64>,
    pub report: AlignReport,
}

pub fn align_panel(
    series: &[LabeledSeries],
    policy: &AlignPolicy,
    kind: PanelKind,
) -> Result<Alignment> {
    if series.is_empty() {
        return Err(Error::InvalidInput("no series to align".into()));
    }
    if !(0.0..=1.0).contains(&policy.max_missing_fraction) {
        return Err(Error::InvalidInput(format!(
            "max_missing_fraction {} outside [0, 1]",
            policy.max_missing_fraction
        )));
    }

    let mut maps: Vec<BTreeMap<NaiveDate, f64>> = Vec::with_capacity(series.len());
    for s in series {
        let mut m = BTreeMap::new();
        for &(date, v) in &s.points {
            if !v.is_finite() {
                continue;
            }
            if m.insert(date, v).is_some() {
                return Err(Error::DuplicateDate {
                    ticker: s.label.clone(),
                    date,
                });
            }
        }
        maps.push(m);
    }

    let universe: BTreeSet<NaiveDate> = maps.iter().flat_map(|m| m.keys().copied()).collect();
    if universe.is_empty() {
        return Err(Error::EmptyCalendar);
    }

    let mut report = AlignReport::default();
    let mut kept = Vec::new();
    for (s, m) in series.iter().zip(&maps) {
        let missing = universe.len() - m.len();
        let fraction = missing as f64 / universe.len() as f64;
        if fraction > policy.max_missing_fraction {
            log::warn!(
                "dropping {}: {:.1}% of dates missing",
                s.label,
                100.0 * fraction
            );
            report.dropped.push(DroppedSeries {
                label: s.label.clone(),
                missing_fraction: fraction,
            });
        } else {
            kept.push((s.label.clone(), m));
        }
    }
    if kept.is_empty() {
        return Err(Error::AllSeriesDropped);
    }

    // Candidate calendar is every date a surviving series observed; each
    // column holds the (possibly forward-filled) value or `None`.
    let candidate: Vec<NaiveDate> = kept
        .iter()
        .flat_map(|(_, m)| m.keys().copied())
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    let columns: Vec<Vec<Option<(f64, bool)>>> = kept
        .iter()
        .map(|(_, m)| match policy.calendar {
            CalendarRule::Intersection => candidate
                .iter()
                .map(|d| m.get(d).map(|&v| (v, false)))
                .collect(),
            CalendarRule::Union => forward_fill(&candidate, m, policy.max_fill),
        })
        .collect();

    let mut calendar = Vec::new();
    let mut keep_idx = Vec::new();
    for (j, date) in candidate.iter().enumerate() {
        if columns.iter().all(|c| c[j].is_some()) {
            calendar.push(*date);
            keep_idx.push(j);
        } else {
            report.removed_dates.push(*date);
        }
    }
    if calendar.is_empty() {
        return Err(Error::EmptyCalendar);
    }

    let mut values = Array2::zeros((kept.len(), calendar.len()));
    for (i, col) in columns.iter().enumerate() {
        for (out_j, &j) in keep_idx.iter().enumerate() {
            let (v, filled) = col[j].expect("kept dates are complete");
            values[[i, out_j]] = v;
            report.filled += filled as usize;
        }
    }
    let labels = kept.into_iter().map(|(l, _)| l).collect();
    Ok(Alignment {
        panel: AlignedPanel::new(labels, calendar, values, kind)?,
        report,
    })
}

fn forward_fill(
    dates: &[NaiveDate],
    observed: &BTreeMap<NaiveDate, f64>,
    max_fill: usize,
) -> Vec<Option<(f64, bool)>> {
    let mut out = Vec::with_capacity(dates.len());
    let mut last: Option<f64> = None;
    let mut run = 0usize;
    for d in dates {
        match observed.get(d) {
            Some(&v) => {
                last = Some(v);
                run = 0;
                out.push(Some((v, false)));
            }
            None => {
                run += 1;
                out.push(match last {
                    Some(v) if run <= max_fill => Some((v, true)),
                    _ => None,
                });
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn day(i: u32) -> NaiveDate {
        NaiveDate::from_ymd_opt(2015, 7, 1).unwrap() + chrono::Days::new(i as u64)
    }

    fn series(label: &str, days: &[u32]) -> LabeledSeries {
        LabeledSeries::new(
            label,
            days.iter().map(|&d| (day(d), d as f64 + 0.5)).collect(),
        )
    }

    #[test]
    fn identical_calendars_are_unchanged() {
        let a = series("a", &[0, 1, 2, 3]);
        let b = series("b", &[0, 1, 2, 3]);
        let out = align_panel(&[a.clone(), b], &AlignPolicy::default(), PanelKind::Price).unwrap();
        assert_eq!(out.panel.n_series(), 2);
        assert_eq!(out.panel.len(), 4);
        assert_eq!(out.panel.row(0).to_vec(), vec![0.5, 1.5, 2.5, 3.5]);
        assert_eq!(out.report, AlignReport::default());
    }

    #[test]
    fn interior_gap_forward_filled_under_union() {
        let a = series("a", &[0, 1, 2, 3, 4]);
        let b = series("b", &[0, 1, 3, 4]);
        let policy = AlignPolicy {
            calendar: CalendarRule::Union,
            max_fill: 1,
            max_missing_fraction: 0.5,
        };
        let out = align_panel(&[a, b], &policy, PanelKind::Price).unwrap();
        assert_eq!(out.panel.len(), 5);
        assert_eq!(out.panel.row(1).to_vec(), vec![0.5, 1.5, 1.5, 3.5, 4.5]);
        assert_eq!(out.report.filled, 1);
    }

    #[test]
    fn gap_longer_than_fill_limit_removes_dates() {
        let a = series("a", &[0, 1, 2, 3, 4, 5]);
        let b = series("b", &[0, 1, 4, 5]);
        let policy = AlignPolicy {
            calendar: CalendarRule::Union,
            max_fill: 1,
            max_missing_fraction: 0.5,
        };
        let out = align_panel(&[a, b], &policy, PanelKind::Price).unwrap();
        assert_eq!(out.report.removed_dates, vec![day(3)]);
        assert_eq!(out.panel.row(1).to_vec(), vec![0.5, 1.5, 1.5, 4.5, 5.5]);
    }

    #[test]
    fn intersection_drops_dates_missing_anywhere() {
        let a = series("a", &(0..20).collect::<Vec<_>>());
        let b = series("b", &(0..20).filter(|&d| d != 7).collect::<Vec<_>>());
        let out = align_panel(&[a, b], &AlignPolicy::default(), PanelKind::Price).unwrap();
        assert_eq!(out.panel.len(), 19);
        assert!(!out.panel.calendar().contains(&day(7)));
        assert_eq!(out.report.removed_dates, vec![day(7)]);
    }

    #[test]
    fn sparse_series_dropped() {
        let a = series("a", &(0..10).collect::<Vec<_>>());
        let b = series("b", &[0, 1, 2, 3, 4, 5, 6]);
        let policy = AlignPolicy {
            max_missing_fraction: 0.2,
            ..AlignPolicy::default()
        };
        let out = align_panel(&[a, b], &policy, PanelKind::Price).unwrap();
        assert_eq!(out.panel.n_series(), 1);
        assert_eq!(out.panel.labels(), &["a".to_string()]);
        assert_eq!(out.report.dropped.len(), 1);
        assert!((out.report.dropped[0].missing_fraction - 0.3).abs() < 1e-12);
    }

    #[test]
    fn all_dropped_and_empty_calendar_errors() {
        let a = series("a", &[0, 1]);
        let b = series("b", &[2, 3]);
        let strict = AlignPolicy {
            max_missing_fraction: 0.1,
            ..AlignPolicy::default()
        };
        assert!(matches!(
            align_panel(&[a.clone(), b.clone()], &strict, PanelKind::Price),
            Err(Error::AllSeriesDropped)
        ));
        let lax = AlignPolicy {
            max_missing_fraction: 1.0,
            ..AlignPolicy::default()
        };
        assert!(matches!(
            align_panel(&[a, b], &lax, PanelKind::Price),
            Err(Error::EmptyCalendar)
        ));
    }

    #[test]
    fn realigning_is_idempotent() {
        let a = series("a", &[0, 1, 2, 3, 5, 6]);
        let b = series("b", &[0, 1, 3, 4, 5, 6]);
        for rule in [CalendarRule::Intersection, CalendarRule::Union] {
            let policy = AlignPolicy {
                calendar: rule,
                max_fill: 1,
                max_missing_fraction: 0.5,
            };
            let once = align_panel(&[a.clone(), b.clone()], &policy, PanelKind::Price).unwrap();
            let twice = align_panel(&once.panel.to_series(), &policy, PanelKind::Price).unwrap();
            assert_eq!(once.panel, twice.panel);
        }
    }
}
