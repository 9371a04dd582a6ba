use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::{Path, PathBuf};

use chrono::NaiveDate;
use ndarray::Array2;
use newsflow::cwoe::{
    structure_study, synth_noisy, PartitionedCorrelation, StructureStudy, StructureVariant,
};
use newsflow::infoflow::{ete_matrix, read_labeled_matrix, write_labeled_matrix, EteSidecar};
use newsflow::ingest::{
    align_panel, load_news, load_prices, AlignReport, AlignedPanel, LabeledSeries, NewsDocument,
    PanelKind,
};
use newsflow::network::{
    relative_out_degree, rescale_ete, threshold_graph, threshold_sweep, write_edges, write_nodes,
    write_sweep, Node, NodeClass, Ratio, RatioMode, SweepPoint,
};
use newsflow::rmt::{
    compute_returns, correlation_matrix, fit_student_t, normalize_panel, pearson, sliding_spectra,
    MpParams, NormalizedPanel,
};
use newsflow::seed::derive;
use newsflow::sentiment::{daily_polarity, write_polarity_csv, Lexicon, PolaritySeries};
use serde::Serialize;

use crate::config::{file_sha256, InputField, RunConfig};
use crate::error::CliError;
use crate::output::{pretty, slug, Artifact, Artifacts, TOOL_VERSION};

pub const STAGES: [&str; 5] = ["sentiment", "rmt", "cwoe", "te", "network"];
const ALL_INPUTS: [InputField; 3] = [InputField::Prices, InputField::News, InputField::Lexicon];

pub struct Ctx {
    pub cfg: RunConfig,
    pub hash: String,
}

impl Ctx {
    pub fn new(cfg: RunConfig) -> Result<Self, CliError> {
        cfg.validate()?;
        let hash = cfg.hash();
        Ok(Self { cfg, hash })
    }

    fn out(&self) -> &Path {
        &self.cfg.output_dir
    }
}

/// Inputs parsed and placed on the return calendar.
pub struct Data {
    pub calendar: Vec<NaiveDate>,
    /// `(ticker, keyword)` in price-file order, after alignment drops.
    pub pairs: Vec<(String, String)>,
    pub returns: AlignedPanel<f64>,
    pub polarity: Vec<PolaritySeries>,
    pub align: AlignReport,
    pub documents: usize,
    pub skipped_empty: usize,
}

#[derive(Serialize)]
struct LoadStats<'a> {
    series: usize,
    days: usize,
    first_date: Option<NaiveDate>,
    last_date: Option<NaiveDate>,
    documents: usize,
    skipped_empty: usize,
    align: &'a AlignReport,
}

impl Data {
    fn stats(&self) -> LoadStats<'_> {
        LoadStats {
            series: self.pairs.len(),
            days: self.calendar.len(),
            first_date: self.calendar.first().copied(),
            last_date: self.calendar.last().copied(),
            documents: self.documents,
            skipped_empty: self.skipped_empty,
            align: &self.align,
        }
    }

    fn return_panel(&self) -> Result<NormalizedPanel<f64>, CliError> {
        let labels = self.pairs.iter().map(|(t, _)| format!("R:{t}")).collect();
        Ok(normalize_panel(&self.returns.clone().with_labels(labels)?)?)
    }

    fn polarity_panel(&self) -> Result<NormalizedPanel<f64>, CliError> {
        let mut values = Array2::zeros((self.polarity.len(), self.calendar.len()));
        for (i, s) in self.polarity.iter().enumerate() {
            for (j, v) in s.values().into_iter().enumerate() {
                values[[i, j]] = v;
            }
        }
        let labels = self
            .polarity
            .iter()
            .map(|s| format!("P:{}", s.keyword))
            .collect();
        let panel = AlignedPanel::new(labels, self.calendar.clone(), values, PanelKind::Polarity)?;
        Ok(normalize_panel(&panel)?)
    }

    /// Return rows on top of polarity rows.
    pub fn panels(&self) -> Result<(NormalizedPanel<f64>, NormalizedPanel<f64>), CliError> {
        Ok((self.return_panel()?, self.polarity_panel()?))
    }
}

pub fn load_data(cfg: &RunConfig, only: Option<&[String]>) -> Result<Data, CliError> {
    cfg.validate_inputs(&ALL_INPUTS)?;
    let prices = load_prices(cfg.inputs.prices.as_ref().expect("validated"))?;
    let lexicon = Lexicon::load(cfg.inputs.lexicon.as_ref().expect("validated"))?;
    let configured: Option<BTreeSet<String>> = cfg
        .inputs
        .keywords
        .as_ref()
        .map(|k| k.iter().cloned().collect());
    let news = load_news(
        cfg.inputs.news.as_ref().expect("validated"),
        configured.as_ref(),
    )?;

    let keywords: Vec<String> = match &cfg.inputs.keywords {
        Some(k) => k.clone(),
        None => news
            .documents
            .iter()
            .map(|d| d.keyword.clone())
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect(),
    };
    if keywords.len() != prices.len() {
        return Err(CliError::data(format!(
            "{} price series but {} keywords; list `inputs.keywords` in ticker order",
            prices.len(),
            keywords.len()
        )));
    }
    let keyword_of: BTreeMap<&str, &str> = prices
        .iter()
        .zip(&keywords)
        .map(|(p, k)| (p.ticker.as_str(), k.as_str()))
        .collect();

    let series: Vec<LabeledSeries> = prices.iter().map(LabeledSeries::from).collect();
    let aligned = align_panel(&series, &cfg.align, PanelKind::Price)?;
    let returns = compute_returns(&aligned.panel)?;
    let calendar = returns.calendar().to_vec();
    let mut pairs: Vec<(String, String)> = returns
        .labels()
        .iter()
        .map(|t| (t.clone(), keyword_of[t.as_str()].to_string()))
        .collect();

    let mut keep_rows: Vec<usize> = (0..pairs.len()).collect();
    if let Some(only) = only {
        let known: BTreeSet<&str> = pairs.iter().map(|(_, k)| k.as_str()).collect();
        if let Some(bad) = only.iter().find(|k| !known.contains(k.as_str())) {
            return Err(CliError::validation(format!(
                "--keywords: unknown keyword {bad:?}"
            )));
        }
        keep_rows.retain(|&i| only.contains(&pairs[i].1));
    }
    let returns = returns.select_rows(&keep_rows)?;
    pairs = keep_rows.iter().map(|&i| pairs[i].clone()).collect();

    let documents: Vec<NewsDocument> = news.documents;
    let polarity = pairs
        .iter()
        .map(|(_, kw)| daily_polarity(&documents, kw, &calendar, &lexicon, cfg.sentiment))
        .collect::<newsflow::Result<Vec<_>>>()?;
    Ok(Data {
        calendar,
        pairs,
        returns,
        polarity,
        align: aligned.report,
        documents: documents.len(),
        skipped_empty: news.skipped_empty,
    })
}

#[derive(Serialize)]
struct KeywordSummary<'a> {
    keyword: &'a str,
    ticker: &'a str,
    rows: usize,
    imputed_days: usize,
    documents: usize,
}

pub fn cmd_sentiment(ctx: &Ctx, data: &Data) -> Result<PathBuf, CliError> {
    let mut art = Artifacts::new(ctx.out(), "sentiment");
    let mut keywords = Vec::new();
    for ((ticker, kw), series) in data.pairs.iter().zip(&data.polarity) {
        art.with(&format!("polarity_{}.csv", slug(kw)), |buf| {
            write_polarity_csv(std::slice::from_ref(series), buf)
        })?;
        keywords.push(KeywordSummary {
            keyword: kw,
            ticker,
            rows: series.observations.len(),
            imputed_days: series.imputed_days(),
            documents: series
                .observations
                .iter()
                .map(|o| o.doc_count + o.unscored)
                .sum(),
        });
    }
    #[derive(Serialize)]
    struct Body<'a> {
        input: LoadStats<'a>,
        options: newsflow::sentiment::PolarityOptions,
        keywords: Vec<KeywordSummary<'a>>,
    }
    art.finish(
        &ctx.hash,
        &Body {
            input: data.stats(),
            options: ctx.cfg.sentiment,
            keywords,
        },
    )
}

#[derive(Serialize)]
struct StudentTSummary {
    fit: Option<newsflow::rmt::StudentTFit>,
    error: Option<String>,
}

#[derive(Serialize)]
struct SetSummary {
    set: &'static str,
    n: usize,
    t: usize,
    q: f64,
    lambda_minus: f64,
    lambda_plus: f64,
    lambda_max: f64,
    lambda_max_above_plus: bool,
    above_plus: usize,
    top_ipr: f64,
    mean_correlation: f64,
    windows: Option<usize>,
    /// Pearson correlation of the window λ_max and mean correlation series.
    lambda_max_vs_mean_corr: Option<f64>,
    student_t: StudentTSummary,
}

pub fn cmd_rmt(ctx: &Ctx, data: &Data) -> Result<PathBuf, CliError> {
    let rmt = &ctx.cfg.rmt;
    let (r, p) = data.panels()?;
    let combined = r.stack(&p)?;
    let mut art = Artifacts::new(ctx.out(), "rmt");
    let mut sets = Vec::new();
    for (name, panel) in [("returns", &r), ("polarity", &p), ("combined", &combined)] {
        let c = correlation_matrix(panel);
        let spectrum = c.spectrum()?;
        let mp = MpParams::<f64>::for_panel(panel.n_series(), panel.len())?;
        let iprs = spectrum.iprs();

        let mut csv = String::from("index,eigenvalue,ipr,above_plus\n");
        for (i, (l, ipr)) in spectrum.eigenvalues().iter().zip(&iprs).enumerate() {
            csv.push_str(&format!("{i},{l},{ipr},{}\n", *l > mp.lambda_plus));
        }
        art.write(&format!("{name}/spectrum.csv"), csv.as_bytes())?;

        let mut csv = String::from("lambda,density\n");
        for (l, d) in mp.overlay(rmt.overlay_points) {
            csv.push_str(&format!("{l},{d}\n"));
        }
        art.write(&format!("{name}/mp_overlay.csv"), csv.as_bytes())?;

        let mut csv = String::from("label,component\n");
        for (label, v) in panel.labels().iter().zip(spectrum.top_vector()) {
            csv.push_str(&format!("{label},{v}\n"));
        }
        art.write(&format!("{name}/top_eigenvector.csv"), csv.as_bytes())?;
        art.with(&format!("{name}/correlation.csv"), |buf| {
            write_labeled_matrix(panel.labels(), c.as_array(), buf)
        })?;

        let (windows, comovement) = if rmt.windows {
            let ws = sliding_spectra(panel, rmt.window, rmt.step)?;
            let mut csv = String::from("start,start_date,lambda_max,mean_corr,top_ipr\n");
            let mut lmax = Vec::with_capacity(ws.len());
            let mut cbar = Vec::with_capacity(ws.len());
            for w in &ws {
                let top = newsflow::rmt::ipr(w.spectrum.top_vector())?;
                csv.push_str(&format!(
                    "{},{},{},{},{top}\n",
                    w.start,
                    w.start_date,
                    w.spectrum.largest(),
                    w.mean_corr
                ));
                lmax.push(w.spectrum.largest());
                cbar.push(w.mean_corr);
            }
            art.write(&format!("{name}/windows.csv"), csv.as_bytes())?;
            (Some(ws.len()), pearson(&lmax, &cbar).ok())
        } else {
            (None, None)
        };

        let pooled: Vec<f64> = panel.values().iter().copied().collect();
        let student_t = match fit_student_t(&pooled) {
            Ok(fit) => StudentTSummary {
                fit: Some(fit),
                error: None,
            },
            Err(e) => StudentTSummary {
                fit: None,
                error: Some(e.to_string()),
            },
        };
        sets.push(SetSummary {
            set: name,
            n: panel.n_series(),
            t: panel.len(),
            q: mp.q,
            lambda_minus: mp.lambda_minus,
            lambda_plus: mp.lambda_plus,
            lambda_max: spectrum.largest(),
            lambda_max_above_plus: spectrum.largest() > mp.lambda_plus,
            above_plus: spectrum.count_above(mp.lambda_plus),
            top_ipr: *iprs.last().expect("non-empty spectrum"),
            mean_correlation: newsflow::rmt::mean_correlation(&c),
            windows,
            lambda_max_vs_mean_corr: comovement,
            student_t,
        });
    }
    #[derive(Serialize)]
    struct Body<'a> {
        window: Option<usize>,
        step: Option<usize>,
        sets: &'a [SetSummary],
    }
    art.finish(
        &ctx.hash,
        &Body {
            window: rmt.windows.then_some(rmt.window),
            step: rmt.windows.then_some(rmt.step),
            sets: &sets,
        },
    )
}

pub fn cmd_cwoe(ctx: &Ctx, data: &Data) -> Result<PathBuf, CliError> {
    let (r, p) = data.panels()?;
    let labels: Vec<String> = r.labels().iter().chain(p.labels()).cloned().collect();
    let c = PartitionedCorrelation::from_panels(&r, &p)?;
    let t = ctx.cfg.cwoe.t.unwrap_or(r.len());
    let seed = ctx.cfg.seed();
    let mut art = Artifacts::new(ctx.out(), "cwoe");
    art.with("c.csv", |buf| write_labeled_matrix(&labels, c.full(), buf))?;
    // Realization 0 of the study below.
    let first = synth_noisy(
        &c.returns_correlation()?,
        &c.polarity_correlation()?,
        t,
        derive(seed, &[0]),
    )?;
    art.with("c_prime.csv", |buf| {
        write_labeled_matrix(&labels, &first.c_prime, buf)
    })?;

    let studies = [
        StructureVariant::Neighboring,
        StructureVariant::Corresponding,
    ]
    .into_iter()
    .map(|v| structure_study(&c, t, ctx.cfg.cwoe.realizations, seed, v))
    .collect::<newsflow::Result<Vec<StructureStudy>>>()?;
    #[derive(Serialize)]
    struct Body<'a> {
        n: usize,
        t: usize,
        realizations: usize,
        seed: u64,
        studies: &'a [StructureStudy],
    }
    art.finish(
        &ctx.hash,
        &Body {
            n: c.n(),
            t,
            realizations: ctx.cfg.cwoe.realizations,
            seed,
            studies: &studies,
        },
    )
}

fn ete_name(k: usize, l: usize) -> String {
    format!("ete_k{k}_l{l}")
}

pub fn cmd_te(ctx: &Ctx, data: &Data) -> Result<PathBuf, CliError> {
    let (r, p) = data.panels()?;
    let combined = r.stack(&p)?;
    let mut art = Artifacts::new(ctx.out(), "te");
    #[derive(Serialize)]
    struct MatrixSummary {
        k: usize,
        l: usize,
        h: Option<f64>,
        missing: usize,
        max_ete: f64,
        csv: String,
    }
    let mut matrices = Vec::new();
    for (k, l) in ctx.cfg.te.pairs() {
        let te_cfg = ctx.cfg.te.te_config(k, l, ctx.cfg.seed());
        let m = ete_matrix(&combined, &te_cfg)?;
        let name = ete_name(k, l);
        art.with(&format!("{name}.csv"), |buf| m.write_csv(buf))?;
        art.with(&format!("te_k{k}_l{l}.csv"), |buf| {
            write_labeled_matrix(&m.labels, &m.te, buf)
        })?;
        let sidecar = m.sidecar();
        #[derive(Serialize)]
        struct Sidecar<'a> {
            tool_version: &'a str,
            config_hash: &'a str,
            #[serde(flatten)]
            sidecar: EteSidecar<'a>,
        }
        art.json(
            &format!("{name}.json"),
            &Sidecar {
                tool_version: TOOL_VERSION,
                config_hash: &ctx.hash,
                sidecar: sidecar.clone(),
            },
        )?;
        matrices.push(MatrixSummary {
            k,
            l,
            h: sidecar.h,
            missing: m.missing.len(),
            max_ete: m
                .values
                .iter()
                .copied()
                .filter(|v| v.is_finite())
                .fold(f64::NEG_INFINITY, f64::max),
            csv: format!("te/{name}.csv"),
        });
    }
    #[derive(Serialize)]
    struct Body {
        nodes: usize,
        samples: usize,
        surrogates: usize,
        matrices: Vec<MatrixSummary>,
    }
    art.finish(
        &ctx.hash,
        &Body {
            nodes: combined.n_series(),
            samples: combined.len(),
            surrogates: ctx.cfg.te.surrogates,
            matrices,
        },
    )
}

/// Nodes classed by label prefix: `P:` is polarity, anything else a return.
pub fn nodes_from_labels(labels: &[String]) -> Vec<Node> {
    labels
        .iter()
        .map(|l| Node {
            label: l.clone(),
            class: if l.starts_with("P:") {
                NodeClass::Polarity
            } else {
                NodeClass::Return
            },
        })
        .collect()
}

#[derive(Serialize)]
struct ArgmaxRecord {
    mode: RatioMode,
    th: Option<f64>,
    ratio: Option<Ratio>,
    edges: Option<usize>,
    polarity_out: Option<usize>,
    return_out: Option<usize>,
}

impl ArgmaxRecord {
    fn new(mode: RatioMode, p: Option<SweepPoint>) -> Self {
        Self {
            mode,
            th: p.map(|p| p.th),
            ratio: p.map(|p| p.ratio),
            edges: p.map(|p| p.edges),
            polarity_out: p.map(|p| p.polarity_out),
            return_out: p.map(|p| p.return_out),
        }
    }
}

pub fn cmd_network(ctx: &Ctx, ete: Option<&Path>) -> Result<PathBuf, CliError> {
    let net = &ctx.cfg.network;
    let pairs = ctx.cfg.te.pairs();
    let (k, l) = (
        net.k.unwrap_or(pairs[0].0),
        net.l.or(net.k).unwrap_or(pairs[0].1),
    );
    let source = match ete {
        Some(p) => p.to_path_buf(),
        None => ctx.out().join("te").join(format!("{}.csv", ete_name(k, l))),
    };
    if !source.is_file() {
        return Err(CliError::validation(format!(
            "ETE matrix {} not found; run `te` first or pass --ete",
            source.display()
        )));
    }
    let text = fs::read(&source)?;
    let (labels, m) = read_labeled_matrix(text.as_slice(), &source.display().to_string())?;
    let nodes = nodes_from_labels(&labels);
    let rescaled = rescale_ete(&m)?;
    let grid = net.grid();

    let mut art = Artifacts::new(ctx.out(), "network");
    art.with("rescaled.csv", |buf| {
        write_labeled_matrix(&labels, &rescaled, buf)
    })?;
    let mut argmax = Vec::new();
    let mut chosen = None;
    for (mode, file) in [
        (RatioMode::Aggregate, "sweep.csv"),
        (RatioMode::PerNodeMean, "sweep_per_node.csv"),
    ] {
        let sweep = threshold_sweep(&rescaled, &nodes, &grid, mode)?;
        art.with(file, |buf| write_sweep(&sweep, buf))?;
        if mode == net.mode {
            chosen = sweep.argmax;
        }
        argmax.push(ArgmaxRecord::new(mode, sweep.argmax));
    }
    let graph = match chosen {
        Some(p) => {
            let g = threshold_graph(&rescaled, &nodes, p.th)?;
            art.with("edges.csv", |buf| write_edges(&g, buf))?;
            art.with("nodes.csv", |buf| write_nodes(&g, buf))?;
            Some((p.th, relative_out_degree(&g, net.mode), g.edges.len()))
        }
        None => None,
    };
    #[derive(Serialize)]
    struct GraphSummary {
        th: f64,
        ratio: Ratio,
        edges: usize,
    }
    #[derive(Serialize)]
    struct Body {
        k: usize,
        l: usize,
        nodes: usize,
        grid_points: usize,
        mode: RatioMode,
        argmax: Vec<ArgmaxRecord>,
        graph: Option<GraphSummary>,
    }
    art.finish(
        &ctx.hash,
        &Body {
            k,
            l,
            nodes: nodes.len(),
            grid_points: grid.len(),
            mode: net.mode,
            argmax,
            graph: graph.map(|(th, ratio, edges)| GraphSummary { th, ratio, edges }),
        },
    )
}

#[derive(Debug, Serialize)]
#[serde(tag = "status", rename_all = "lowercase")]
enum StageEntry {
    Present {
        summary: String,
        artifacts: Vec<Artifact>,
    },
    /// Produced under a different configuration.
    Stale {
        summary: String,
        config_hash: String,
    },
    Absent,
}

#[derive(Serialize)]
struct InputEntry {
    path: String,
    sha256: Option<String>,
}

pub fn cmd_report(ctx: &Ctx) -> Result<PathBuf, CliError> {
    let mut stages = BTreeMap::new();
    for stage in STAGES {
        let rel = format!("{stage}/summary.json");
        let path = ctx.out().join(&rel);
        let entry = match fs::read(&path) {
            Err(_) => StageEntry::Absent,
            Ok(bytes) => {
                let v: serde_json::Value = serde_json::from_slice(&bytes)
                    .map_err(|e| CliError::data(format!("{}: {e}", path.display())))?;
                let hash = v["config_hash"].as_str().unwrap_or_default().to_string();
                if hash == ctx.hash {
                    let artifacts = serde_json::from_value(v["artifacts"].clone())
                        .map_err(|e| CliError::data(format!("{}: {e}", path.display())))?;
                    StageEntry::Present {
                        summary: rel,
                        artifacts,
                    }
                } else {
                    StageEntry::Stale {
                        summary: rel,
                        config_hash: hash,
                    }
                }
            }
        };
        stages.insert(stage, entry);
    }
    let inputs: BTreeMap<&str, InputEntry> = [
        ("prices", &ctx.cfg.inputs.prices),
        ("news", &ctx.cfg.inputs.news),
        ("lexicon", &ctx.cfg.inputs.lexicon),
    ]
    .into_iter()
    .filter_map(|(name, p)| {
        p.as_ref().map(|p| {
            (
                name,
                InputEntry {
                    path: p.display().to_string(),
                    sha256: file_sha256(p).ok(),
                },
            )
        })
    })
    .collect();
    #[derive(Serialize)]
    struct Bundle<'a> {
        tool_version: &'a str,
        config_hash: &'a str,
        config: serde_json::Value,
        inputs: BTreeMap<&'a str, InputEntry>,
        stages: BTreeMap<&'a str, StageEntry>,
    }
    let mut config = serde_json::to_value(&ctx.cfg)?;
    if let Some(obj) = config.as_object_mut() {
        obj.remove("output_dir");
        obj.remove("jobs");
    }
    let bundle = Bundle {
        tool_version: TOOL_VERSION,
        config_hash: &ctx.hash,
        config,
        inputs,
        stages,
    };
    fs::create_dir_all(ctx.out())?;
    let path = ctx.out().join("report.json");
    fs::write(&path, pretty(&bundle)?)?;
    Ok(path)
}
