mod config;
mod error;
mod output;
mod stages;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use chrono::NaiveDate;
use clap::{Args, Parser, Subcommand};
use newsflow::infoflow::{BoxWidth, LogBase};
use newsflow::network::RatioMode;
use newsflow::synth::{generate_fixture, write_fixture, FixtureSpec};
use serde::de::DeserializeOwned;

use config::{HSetting, RunConfig};
use error::CliError;
use stages::{load_data, Ctx};

#[derive(Parser)]
#[command(
    name = "newsflow",
    version,
    about = "Spectral and information-flow analysis of return and news polarity panels"
)]
struct Cli {
    /// TOML run configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true)]
    output_dir: Option<PathBuf>,
    /// Worker threads (0 = all cores).
    #[arg(long, global = true)]
    jobs: Option<usize>,
    #[arg(long, global = true)]
    prices: Option<PathBuf>,
    #[arg(long, global = true)]
    news: Option<PathBuf>,
    #[arg(long, global = true)]
    lexicon: Option<PathBuf>,
    /// Repeat for more log output.
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Daily polarity series per keyword.
    Sentiment {
        /// Emit only these keywords.
        #[arg(long, num_args = 1..)]
        keywords: Option<Vec<String>>,
    },
    /// Correlation spectra, noise band, IPR and sliding windows.
    Rmt(RmtArgs),
    /// Correlation structure against correlated Wishart surrogates.
    Cwoe(CwoeArgs),
    /// Effective transfer entropy matrices.
    Te(TeArgs),
    /// Threshold sweep and graph of an ETE matrix.
    Network(NetworkArgs),
    /// Bundle of every stage's outputs.
    Report,
    /// Every stage in order, then the report.
    Run {
        #[command(flatten)]
        rmt: RmtArgs,
        #[command(flatten)]
        cwoe: CwoeArgs,
        #[command(flatten)]
        te: TeArgs,
    },
    /// Download articles for one keyword (key from NYT_API_KEY).
    Fetch {
        #[arg(long)]
        keyword: String,
        #[arg(long)]
        begin: NaiveDate,
        #[arg(long)]
        end: NaiveDate,
        /// Destination newline-delimited JSON file.
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value = newsflow::ingest::fetch::DEFAULT_ENDPOINT)]
        endpoint: String,
        #[arg(long)]
        cache_dir: Option<PathBuf>,
        #[arg(long, default_value_t = 100)]
        max_pages: u32,
    },
    /// Write the synthetic fixture and a matching config.
    Fixture {
        #[arg(long)]
        out: PathBuf,
        /// Indices (and keywords).
        #[arg(long, default_value_t = 10)]
        n: usize,
        /// Price dates; one more than the return length.
        #[arg(long, default_value_t = 218)]
        days: usize,
        /// Seed of the generated data.
        #[arg(long, default_value_t = 20150701)]
        data_seed: u64,
    },
}

#[derive(Args, Default)]
struct RmtArgs {
    #[arg(long)]
    window: Option<usize>,
    #[arg(long)]
    step: Option<usize>,
    /// Full-sample spectrum only.
    #[arg(long)]
    no_windows: bool,
}

#[derive(Args, Default)]
struct CwoeArgs {
    #[arg(long)]
    realizations: Option<usize>,
}

#[derive(Args, Default)]
struct TeArgs {
    /// Destination history lengths.
    #[arg(long, num_args = 1..)]
    k: Option<Vec<usize>>,
    /// Source history lengths, paired with --k.
    #[arg(long, num_args = 1..)]
    l: Option<Vec<usize>>,
    /// `silverman` or a fixed kernel width.
    #[arg(long, value_parser = HSetting::parse)]
    h: Option<HSetting>,
    /// Surrogates per pair.
    #[arg(long)]
    m: Option<usize>,
    #[arg(long)]
    theiler: Option<usize>,
    /// `half` or `full`.
    #[arg(long, value_parser = parse_enum::<BoxWidth>)]
    box_width: Option<BoxWidth>,
    /// `2` or `e`.
    #[arg(long, value_parser = parse_enum::<LogBase>)]
    log_base: Option<LogBase>,
}

#[derive(Args)]
struct NetworkArgs {
    /// Analyze the matrix with these history lengths.
    #[arg(long)]
    k: Option<usize>,
    #[arg(long)]
    l: Option<usize>,
    #[arg(long)]
    grid_points: Option<usize>,
    /// `aggregate` or `per-node-mean`.
    #[arg(long, value_parser = parse_enum::<RatioMode>)]
    mode: Option<RatioMode>,
    /// Read this ETE CSV instead of the `te` output.
    #[arg(long)]
    ete: Option<PathBuf>,
}

fn parse_enum<T: DeserializeOwned>(s: &str) -> Result<T, String> {
    serde_json::from_value(serde_json::Value::String(s.to_string())).map_err(|e| e.to_string())
}

impl RmtArgs {
    fn apply(&self, cfg: &mut RunConfig) {
        if let Some(w) = self.window {
            cfg.rmt.window = w;
        }
        if let Some(s) = self.step {
            cfg.rmt.step = s;
        }
        if self.no_windows {
            cfg.rmt.windows = false;
        }
    }
}

impl CwoeArgs {
    fn apply(&self, cfg: &mut RunConfig) {
        if let Some(r) = self.realizations {
            cfg.cwoe.realizations = r;
        }
    }
}

impl TeArgs {
    fn apply(&self, cfg: &mut RunConfig) {
        if let Some(k) = &self.k {
            cfg.te.k = k.clone();
            if self.l.is_none() {
                cfg.te.l = None;
            }
        }
        if let Some(l) = &self.l {
            cfg.te.l = Some(l.clone());
        }
        if let Some(h) = self.h {
            cfg.te.h = h;
        }
        if let Some(m) = self.m {
            cfg.te.surrogates = m;
        }
        if let Some(t) = self.theiler {
            cfg.te.theiler = Some(t);
        }
        if let Some(b) = self.box_width {
            cfg.te.box_width = b;
        }
        if let Some(b) = self.log_base {
            cfg.te.log_base = b;
        }
    }
}

impl NetworkArgs {
    fn apply(&self, cfg: &mut RunConfig) {
        if self.k.is_some() {
            cfg.network.k = self.k;
        }
        if self.l.is_some() {
            cfg.network.l = self.l;
        }
        if let Some(g) = self.grid_points {
            cfg.network.grid_points = g;
        }
        if let Some(m) = self.mode {
            cfg.network.mode = m;
        }
    }
}

fn build_config(cli: &Cli) -> Result<RunConfig, CliError> {
    let mut cfg = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    if cli.seed.is_some() {
        cfg.seed = cli.seed;
    }
    if let Some(o) = &cli.output_dir {
        cfg.output_dir = o.clone();
    }
    if let Some(j) = cli.jobs {
        cfg.jobs = j;
    }
    for (flag, field) in [
        (&cli.prices, &mut cfg.inputs.prices),
        (&cli.news, &mut cfg.inputs.news),
        (&cli.lexicon, &mut cfg.inputs.lexicon),
    ] {
        if flag.is_some() {
            field.clone_from(flag);
        }
    }
    match &cli.command {
        Command::Rmt(a) => a.apply(&mut cfg),
        Command::Cwoe(a) => a.apply(&mut cfg),
        Command::Te(a) => a.apply(&mut cfg),
        Command::Network(a) => a.apply(&mut cfg),
        Command::Run { rmt, cwoe, te } => {
            rmt.apply(&mut cfg);
            cwoe.apply(&mut cfg);
            te.apply(&mut cfg);
        }
        _ => {}
    }
    Ok(cfg)
}

fn run(cli: Cli) -> Result<(), CliError> {
    match &cli.command {
        Command::Fixture {
            out,
            n,
            days,
            data_seed,
        } => return cmd_fixture(out, *n, *days, *data_seed),
        Command::Fetch {
            keyword,
            begin,
            end,
            out,
            endpoint,
            cache_dir,
            max_pages,
        } => {
            return cmd_fetch(
                keyword,
                *begin,
                *end,
                out,
                endpoint,
                cache_dir.clone(),
                *max_pages,
            )
        }
        _ => {}
    }

    let cfg = build_config(&cli)?;
    let ctx = Ctx::new(cfg)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(ctx.cfg.jobs)
        .build()
        .map_err(|e| CliError::internal(e.to_string()))?;
    pool.install(|| {
        let written = match &cli.command {
            Command::Sentiment { keywords } => {
                let data = load_data(&ctx.cfg, keywords.as_deref())?;
                vec![stages::cmd_sentiment(&ctx, &data)?]
            }
            Command::Rmt(_) => vec![stages::cmd_rmt(&ctx, &load_data(&ctx.cfg, None)?)?],
            Command::Cwoe(_) => vec![stages::cmd_cwoe(&ctx, &load_data(&ctx.cfg, None)?)?],
            Command::Te(_) => vec![stages::cmd_te(&ctx, &load_data(&ctx.cfg, None)?)?],
            Command::Network(a) => vec![stages::cmd_network(&ctx, a.ete.as_deref())?],
            Command::Report => vec![stages::cmd_report(&ctx)?],
            Command::Run { .. } => {
                let data = load_data(&ctx.cfg, None)?;
                vec![
                    stages::cmd_sentiment(&ctx, &data)?,
                    stages::cmd_rmt(&ctx, &data)?,
                    stages::cmd_cwoe(&ctx, &data)?,
                    stages::cmd_te(&ctx, &data)?,
                    stages::cmd_network(&ctx, None)?,
                    stages::cmd_report(&ctx)?,
                ]
            }
            Command::Fixture { .. } | Command::Fetch { .. } => unreachable!(),
        };
        for path in written {
            println!("{}", path.display());
        }
        Ok(())
    })
}

const FIXTURE_CONFIG: &str = r#"seed = 1
output_dir = "out"

[inputs]
prices = "prices.csv"
news = "news.ndjson"
lexicon = "lexicon.tsv"

[rmt]
window = 160
step = 1

[cwoe]
realizations = 100

[te]
k = [1, 2, 3, 4]
h = "silverman"
surrogates = 100

[network]
grid_points = 101
"#;

fn cmd_fixture(out: &Path, n: usize, days: usize, data_seed: u64) -> Result<(), CliError> {
    let spec = FixtureSpec {
        n,
        days,
        seed: data_seed,
        ..FixtureSpec::default()
    };
    let fixture = generate_fixture(&spec)?;
    write_fixture(&fixture, out)?;
    fs::write(out.join("config.toml"), FIXTURE_CONFIG)?;
    println!("{}", out.display());
    Ok(())
}

#[cfg(feature = "fetch")]
fn cmd_fetch(
    keyword: &str,
    begin: NaiveDate,
    end: NaiveDate,
    out: &Path,
    endpoint: &str,
    cache_dir: Option<PathBuf>,
    max_pages: u32,
) -> Result<(), CliError> {
    use newsflow::ingest::fetch::{ArticleClient, FetchConfig, HttpTransport};
    use newsflow::ingest::write_news;

    let mut config =
        FetchConfig::from_env(endpoint).map_err(|e| CliError::validation(e.to_string()))?;
    config.cache_dir = cache_dir;
    config.max_pages = max_pages;
    let client = ArticleClient::new(HttpTransport::new(Duration::from_secs(30))?, config);
    let outcome = client.fetch_articles(keyword, begin, end)?;
    let mut buf = Vec::new();
    write_news(&outcome.documents, &mut buf)?;
    fs::write(out, buf)?;
    println!("{} ({} documents)", out.display(), outcome.documents.len());
    Ok(())
}

#[cfg(not(feature = "fetch"))]
fn cmd_fetch(
    _: &str,
    _: NaiveDate,
    _: NaiveDate,
    _: &Path,
    _: &str,
    _: Option<PathBuf>,
    _: u32,
) -> Result<(), CliError> {
    Err(CliError::validation("built without the `fetch` feature"))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code as u8)
        }
    }
}
