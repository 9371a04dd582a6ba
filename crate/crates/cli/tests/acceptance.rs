//! Acceptance checks, one PASS/FAIL line each. Exits non-zero if any fails.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::Instant;

use chrono::NaiveDate;
use ndarray::Array2;
use newsflow::cwoe::{
    structure_metric, structure_study, synth_noisy, PartitionedCorrelation, StructureVariant,
};
use newsflow::infoflow::{
    discrete_te_oracle, effective_te, silverman_bandwidth, transfer_entropy, Bandwidth, LogBase,
    TeConfig,
};
use newsflow::ingest::{AlignedPanel, PanelKind};
use newsflow::network::{block_nodes, rescale_ete, threshold_sweep, Ratio, RatioMode};
use newsflow::rmt::{
    correlation_matrix, ipr, mp_bounds, mp_density, normalize_panel, pearson, sliding_spectra,
    window_count, MpParams, NormalizedPanel,
};
use newsflow::synth::{
    copied_binary_channel, equal_loadings, gaussian_panel, one_factor_panel, spread_loadings,
};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

const MP_EXACT_TOL: f64 = 1e-12;
const MP_DERIVED_TOL: f64 = 5e-4;
const MP_NORM_TOL: f64 = 1e-6;
const SILVERMAN_TOL: f64 = 1e-3;
const WISHART_SLACK: f64 = 0.15;
const WISHART_MIN_INSIDE: usize = 95;
const ORACLE_TOL: f64 = 1e-9;
const COPY_TE_TOL: f64 = 0.05;
const COPY_REVERSE_MAX: f64 = 0.02;
const COPY_ETE_RANGE: (f64, f64) = (0.93, 1.02);
const NULL_ETE_MAX: f64 = 0.02;
const CWOE_IDENTITY_TOL: f64 = 0.02;
const CWOE_NEIGHBORING_MAX: f64 = 0.10;

type Check = Result<String, String>;
type Criterion = (&'static str, fn() -> Check);

fn panel(values: Array2<f64>) -> NormalizedPanel<f64> {
    let start = NaiveDate::from_ymd_opt(2015, 1, 1).unwrap();
    let cal = (0..values.ncols())
        .map(|i| start + chrono::Days::new(i as u64))
        .collect();
    let labels = (0..values.nrows()).map(|i| format!("s{i}")).collect();
    normalize_panel(&AlignedPanel::new(labels, cal, values, PanelKind::Return).unwrap()).unwrap()
}

fn verdict(ok: bool, detail: String) -> Check {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn c1_mp_bounds() -> Check {
    let a = mp_bounds(4.0f64, 1.0).map_err(|e| e.to_string())?;
    let b = mp_bounds(5.425f64, 1.0).map_err(|e| e.to_string())?;
    let ok = (a.lambda_minus - 0.25).abs() <= MP_EXACT_TOL
        && (a.lambda_plus - 2.25).abs() <= MP_EXACT_TOL
        && (b.lambda_minus - 0.3258).abs() <= MP_DERIVED_TOL
        && (b.lambda_plus - 2.0430).abs() <= MP_DERIVED_TOL;
    verdict(
        ok,
        format!(
            "Q=4: ({}, {}); Q=5.425: ({:.5}, {:.5})",
            a.lambda_minus, a.lambda_plus, b.lambda_minus, b.lambda_plus
        ),
    )
}

/// Simpson's rule after `λ = m − r cos θ`, which removes the square-root
/// endpoints: `∫ρ dλ = ∫₀^π ρ(λ(θ)) r sin θ dθ`.
fn mp_mass(q: f64) -> f64 {
    let p = mp_bounds(q, 1.0f64).unwrap();
    let (m, r) = (
        (p.lambda_plus + p.lambda_minus) / 2.0,
        (p.lambda_plus - p.lambda_minus) / 2.0,
    );
    let n = 4000;
    let step = std::f64::consts::PI / n as f64;
    let f = |th: f64| mp_density(m - r * th.cos(), &p) * r * th.sin();
    let mut sum = f(0.0) + f(std::f64::consts::PI);
    for i in 1..n {
        sum += f(i as f64 * step) * if i % 2 == 1 { 4.0 } else { 2.0 };
    }
    sum * step / 3.0
}

fn c2_mp_density() -> Check {
    let masses: Vec<(f64, f64)> = [1.5, 4.0, 5.425].iter().map(|&q| (q, mp_mass(q))).collect();
    let ok = masses.iter().all(|(_, m)| (m - 1.0).abs() <= MP_NORM_TOL);
    let detail = masses
        .iter()
        .map(|(q, m)| format!("Q={q}: {:.3e}", m - 1.0))
        .collect::<Vec<_>>()
        .join(", ");
    verdict(ok, format!("mass - 1 = {detail}"))
}

fn c3_silverman() -> Check {
    let h = silverman_bandwidth(1.0, 217).map_err(|e| e.to_string())?;
    verdict((h - 0.3612).abs() <= SILVERMAN_TOL, format!("h = {h:.5}"))
}

fn c4_window_count() -> Check {
    let n = window_count(217, 160, 1).map_err(|e| e.to_string())?;
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let spectra = sliding_spectra(&panel(gaussian_panel(5, 217, &mut rng)), 160, 1)
        .map_err(|e| e.to_string())?;
    verdict(
        n == 58 && spectra.len() == 58,
        format!("count {n}, sliding spectra {}", spectra.len()),
    )
}

fn c5_wishart_null() -> Check {
    let (n, t) = (40, 160);
    let mp = MpParams::<f64>::for_panel(n, t).unwrap();
    let inside = (0..100u64)
        .filter(|&seed| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let s = correlation_matrix(&panel(gaussian_panel(n, t, &mut rng)))
                .spectrum()
                .unwrap();
            s.smallest() >= mp.lambda_minus - WISHART_SLACK
                && s.largest() <= mp.lambda_plus + WISHART_SLACK
        })
        .count();
    verdict(
        inside >= WISHART_MIN_INSIDE,
        format!("{inside}/100 seeds inside the band"),
    )
}

fn c6_one_factor() -> Check {
    let (n, t) = (40, 217);
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let p = panel(one_factor_panel(&equal_loadings(n, 0.3), t, &mut rng));
    let s = correlation_matrix(&p)
        .spectrum()
        .map_err(|e| e.to_string())?;
    let mp = MpParams::<f64>::for_panel(n, t).unwrap();
    let top = s.top_vector();
    let single_signed = top.iter().all(|&v| v > 0.0);
    let top_ipr = ipr(top).map_err(|e| e.to_string())?;
    let windows = sliding_spectra(&p, 160, 1).map_err(|e| e.to_string())?;
    let lmax: Vec<f64> = windows.iter().map(|w| w.spectrum.largest()).collect();
    let cbar: Vec<f64> = windows.iter().map(|w| w.mean_corr).collect();
    let r = pearson(&lmax, &cbar).map_err(|e| e.to_string())?;
    verdict(
        s.largest() > mp.lambda_plus && single_signed && r > 0.9 && top_ipr <= 2.0 / n as f64 && windows.len() == 58,
        format!(
            "λmax {:.3} > λ+ {:.3}, single-signed {single_signed}, pearson {r:.4} over {} windows, IPR {top_ipr:.4} <= {:.3}",
            s.largest(),
            mp.lambda_plus,
            windows.len(),
            2.0 / n as f64
        ),
    )
}

fn c7_oracle() -> Check {
    let n = 2000;
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let y: Vec<i64> = (0..n).map(|_| rng.gen_range(0..3)).collect();
    let mut x = vec![0i64; n];
    for t in 1..n {
        x[t] = if rng.gen::<f64>() < 0.7 {
            y[t - 1]
        } else {
            rng.gen_range(0..3)
        };
    }
    let (xf, yf): (Vec<f64>, Vec<f64>) = (
        x.iter().map(|&v| v as f64).collect(),
        y.iter().map(|&v| v as f64).collect(),
    );
    let mut worst = 0.0f64;
    let mut parts = Vec::new();
    for k in 1..=3 {
        let cfg = TeConfig {
            k,
            l: k,
            bandwidth: Bandwidth::Fixed(0.4),
            ..TeConfig::default()
        };
        let kernel = transfer_entropy(&xf, &yf, &cfg)
            .map_err(|e| e.to_string())?
            .value;
        let oracle = discrete_te_oracle(&x, &y, k, k, LogBase::Two).map_err(|e| e.to_string())?;
        worst = worst.max((kernel - oracle).abs());
        parts.push(format!("k={k}: {kernel:.6}"));
    }
    verdict(
        worst <= ORACLE_TOL,
        format!("{}; max |Δ| {worst:.2e}", parts.join(", ")),
    )
}

fn c8_copied_channel() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let (x, y) = copied_binary_channel(10_000, 1e-3, &mut rng);
    let cfg = TeConfig {
        surrogates: 100,
        seed: 8,
        ..TeConfig::default()
    };
    let forward = transfer_entropy(&x, &y, &cfg)
        .map_err(|e| e.to_string())?
        .value;
    let reverse = transfer_entropy(&y, &x, &cfg)
        .map_err(|e| e.to_string())?
        .value;
    let ete = effective_te(&x, &y, &cfg).map_err(|e| e.to_string())?.ete;
    verdict(
        (forward - 1.0).abs() <= COPY_TE_TOL
            && reverse < COPY_REVERSE_MAX
            && (COPY_ETE_RANGE.0..=COPY_ETE_RANGE.1).contains(&ete),
        format!("TE {forward:.4} bits, reverse {reverse:.4}, ETE {ete:.4}"),
    )
}

fn c9_ete_null() -> Check {
    let n = 5000;
    let mut worst = 0.0f64;
    for pair in 0..20u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(900 + pair);
        let x: Vec<f64> = (0..n).map(|_| StandardNormal.sample(&mut rng)).collect();
        let y: Vec<f64> = (0..n).map(|_| StandardNormal.sample(&mut rng)).collect();
        let cfg = TeConfig {
            surrogates: 100,
            seed: pair,
            ..TeConfig::default()
        };
        let e = effective_te(&x, &y, &cfg).map_err(|e| e.to_string())?;
        worst = worst.max(e.ete.abs());
    }
    verdict(
        worst < NULL_ETE_MAX,
        format!("max |ETE| over 20 pairs {worst:.4} bits"),
    )
}

fn c10_cwoe() -> Check {
    // ξ = I: the surrogate correlation converges to I₈.
    let eye = newsflow::rmt::CorrelationMatrix::<f64>::identity(4);
    let s = synth_noisy(&eye, &eye, 100_000, 10).map_err(|e| e.to_string())?;
    let dev = s
        .c_prime
        .indexed_iter()
        .map(|((i, j), v)| (v - if i == j { 1.0 } else { 0.0 }).abs())
        .fold(0.0, f64::max);

    // One-factor blocks with loadings spread over [0.1, 0.9] in random order.
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let mut lr = spread_loadings(40, 0.1, 0.9);
    lr.shuffle(&mut rng);
    let mut lp = spread_loadings(40, 0.1, 0.9);
    lp.shuffle(&mut rng);
    let r = panel(one_factor_panel(&lr, 217, &mut rng));
    let p = panel(one_factor_panel(&lp, 217, &mut rng));
    let c = PartitionedCorrelation::from_panels(&r, &p).map_err(|e| e.to_string())?;
    let self_metric = [
        StructureVariant::Neighboring,
        StructureVariant::Corresponding,
    ]
    .iter()
    .map(|&v| structure_metric(c.full().view(), c.full().view(), v).unwrap())
    .fold(0.0, f64::max);
    let study = structure_study(&c, 217, 100, 10, StructureVariant::Neighboring)
        .map_err(|e| e.to_string())?;
    verdict(
        dev <= CWOE_IDENTITY_TOL && self_metric == 0.0 && study.mean < CWOE_NEIGHBORING_MAX,
        format!(
            "ξ=I max deviation {dev:.4}; metric(C, C) = {self_metric}; neighboring over 100 realizations {:.4} ± {:.4}",
            study.mean, study.std
        ),
    )
}

/// Ratio and threshold chosen by enumerating every distinct edge weight as
/// a cut point. Returns `(th, ratio)`.
fn brute_force_argmax(m: &Array2<f64>, n_returns: usize) -> Option<(f64, Ratio)> {
    let n = m.nrows();
    let mut weights: Vec<f64> = m
        .indexed_iter()
        .filter(|((i, j), _)| i != j)
        .map(|(_, &v)| v)
        .collect();
    weights.sort_by(f64::total_cmp);
    weights.dedup();
    let mut points = Vec::new();
    for &w in &weights {
        let (mut pol, mut ret) = (0usize, 0usize);
        for i in 0..n {
            for j in 0..n {
                if i != j && m[[i, j]] >= w {
                    if j < n_returns {
                        ret += 1;
                    } else {
                        pol += 1;
                    }
                }
            }
        }
        points.push((w, Ratio::of(pol as f64, ret as f64)));
    }
    let best = points
        .iter()
        .filter_map(|&(w, r)| r.finite().map(|v| (w, v)))
        .fold(None, |acc: Option<(f64, f64)>, (w, v)| match acc {
            Some((_, b)) if v < b => acc,
            _ => Some((w, v)),
        });
    best.map(|(w, v)| (w, Ratio::Finite(v)))
        .or_else(|| {
            points
                .iter()
                .rev()
                .find(|p| p.1 == Ratio::Infinite)
                .copied()
        })
        .or_else(|| {
            points
                .iter()
                .rev()
                .find(|p| p.1 == Ratio::Undefined)
                .copied()
        })
}

fn c11_network_oracle() -> Check {
    let n = 8;
    let labels: Vec<String> = (0..n).map(|i| format!("n{i}")).collect();
    let nodes = block_nodes(&labels, n / 2);
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut mismatches = 0;
    for _ in 0..50 {
        let mut raw = Array2::from_shape_fn((n, n), |(i, j)| {
            if i == j {
                0.0
            } else {
                rng.gen_range(0..=100) as f64 / 100.0
            }
        });
        // Pin the range so rescaling leaves the j/100 weights exact.
        raw[[0, 1]] = 0.0;
        raw[[1, 0]] = 1.0;
        let m = rescale_ete(&raw).map_err(|e| e.to_string())?;
        let expected = brute_force_argmax(&m, n / 2);

        let mut cuts: Vec<f64> = m
            .indexed_iter()
            .filter(|((i, j), _)| i != j)
            .map(|(_, &v)| v)
            .collect();
        cuts.sort_by(f64::total_cmp);
        cuts.dedup();
        for grid in [newsflow::network::default_grid(), cuts] {
            let sweep = threshold_sweep(&m, &nodes, &grid, RatioMode::Aggregate)
                .map_err(|e| e.to_string())?;
            let got = sweep.argmax.map(|p| (p.th, p.ratio));
            if got != expected {
                mismatches += 1;
            }
        }
    }
    verdict(
        mismatches == 0,
        format!("{mismatches} mismatches over 50 matrices x 2 grids"),
    )
}

fn files_under(root: &Path) -> BTreeMap<PathBuf, Vec<u8>> {
    let mut out = BTreeMap::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(dir) = stack.pop() {
        for entry in fs::read_dir(&dir).unwrap() {
            let path = entry.unwrap().path();
            if path.is_dir() {
                stack.push(path);
            } else {
                out.insert(
                    path.strip_prefix(root).unwrap().to_path_buf(),
                    fs::read(&path).unwrap(),
                );
            }
        }
    }
    out
}

fn c12_determinism() -> Check {
    let bin = env!("CARGO_BIN_EXE_newsflow");
    let shipped = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures/synthetic");
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;

    let regen = tmp.path().join("fixture");
    let status = Command::new(bin)
        .args(["fixture", "--out"])
        .arg(&regen)
        .output()
        .map_err(|e| e.to_string())?;
    if !status.status.success() {
        return Err(String::from_utf8_lossy(&status.stderr).into_owned());
    }
    let shipped_files: BTreeMap<_, _> = files_under(&shipped)
        .into_iter()
        .filter(|(k, _)| !k.starts_with("out"))
        .collect();
    let fixture_matches = files_under(&regen) == shipped_files;

    let mut runs = Vec::new();
    for (name, jobs) in [("a", "1"), ("b", "1"), ("c", "8")] {
        let out = tmp.path().join(name);
        let res = Command::new(bin)
            .arg("--config")
            .arg(shipped.join("config.toml"))
            .arg("--output-dir")
            .arg(&out)
            .args(["--jobs", jobs, "run"])
            .output()
            .map_err(|e| e.to_string())?;
        if !res.status.success() {
            return Err(format!(
                "run {name} failed: {}",
                String::from_utf8_lossy(&res.stderr)
            ));
        }
        runs.push(files_under(&out));
    }
    let files = runs[0].len();
    let same = runs[0] == runs[1] && runs[0] == runs[2];
    let has_m100 = runs[0]
        .get(Path::new("te/ete_k1_l1.json"))
        .map(|b| String::from_utf8_lossy(b).contains("\"M\": 100"))
        .unwrap_or(false);
    verdict(
        same && fixture_matches && has_m100 && files > 0,
        format!("{files} files identical across runs and jobs 1/8: {same}; shipped fixture reproducible: {fixture_matches}"),
    )
}

fn main() {
    let checks: [Criterion; 12] = [
        ("MP bounds", c1_mp_bounds),
        ("MP density normalization", c2_mp_density),
        ("Silverman bandwidth", c3_silverman),
        ("window count", c4_window_count),
        ("Wishart null", c5_wishart_null),
        ("one-factor market mode", c6_one_factor),
        ("TE oracle equivalence", c7_oracle),
        ("copied binary channel", c8_copied_channel),
        ("ETE null", c9_ete_null),
        ("CWOE", c10_cwoe),
        ("network sweep oracle", c11_network_oracle),
        ("end-to-end determinism", c12_determinism),
    ];
    let mut failed = 0;
    for (i, (name, check)) in checks.iter().enumerate() {
        let start = Instant::now();
        let result = check();
        let secs = start.elapsed().as_secs_f64();
        match result {
            Ok(detail) => println!("PASS {:>2} {name}: {detail} [{secs:.1}s]", i + 1),
            Err(detail) => {
                failed += 1;
                println!("FAIL {:>2} {name}: {detail} [{secs:.1}s]", i + 1);
            }
        }
    }
    println!(
        "{} of {} criteria passed",
        checks.len() - failed,
        checks.len()
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
