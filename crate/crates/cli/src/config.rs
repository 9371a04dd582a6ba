use std::fs;
use std::path::{Path, PathBuf};

use newsflow::infoflow::{Bandwidth, BoxWidth, LogBase, TeConfig};
use newsflow::ingest::AlignPolicy;
use newsflow::network::RatioMode;
use newsflow::sentiment::PolarityOptions;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// Root of every random stream. Required.
    pub seed: Option<u64>,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    /// Worker threads; 0 lets the pool decide.
    #[serde(default)]
    pub jobs: usize,
    #[serde(default)]
    pub inputs: Inputs,
    #[serde(default)]
    pub align: AlignPolicy,
    #[serde(default)]
    pub sentiment: PolarityOptions,
    #[serde(default)]
    pub rmt: RmtSection,
    #[serde(default)]
    pub cwoe: CwoeSection,
    #[serde(default)]
    pub te: TeSection,
    #[serde(default)]
    pub network: NetworkSection,
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("out")
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Inputs {
    pub prices: Option<PathBuf>,
    pub news: Option<PathBuf>,
    pub lexicon: Option<PathBuf>,
    /// Keyword of each ticker, in price-file order. Defaults to the sorted
    /// distinct keywords of the news file.
    pub keywords: Option<Vec<String>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RmtSection {
    pub window: usize,
    pub step: usize,
    pub windows: bool,
    pub overlay_points: usize,
}

impl Default for RmtSection {
    fn default() -> Self {
        Self {
            window: 160,
            step: 1,
            windows: true,
            overlay_points: 200,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CwoeSection {
    pub realizations: usize,
    /// Length of the synthetic noise; defaults to the panel length.
    pub t: Option<usize>,
}

impl Default for CwoeSection {
    fn default() -> Self {
        Self {
            realizations: 100,
            t: None,
        }
    }
}

/// `h = "silverman"` or a fixed positive width.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum HSetting {
    Fixed(f64),
    Rule(HRule),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum HRule {
    Silverman,
}

impl HSetting {
    pub fn parse(s: &str) -> Result<Self, String> {
        if s.eq_ignore_ascii_case("silverman") {
            return Ok(Self::Rule(HRule::Silverman));
        }
        s.parse::<f64>()
            .map(Self::Fixed)
            .map_err(|_| format!("expected `silverman` or a number, got {s:?}"))
    }

    fn bandwidth(self) -> Bandwidth {
        match self {
            Self::Fixed(h) => Bandwidth::Fixed(h),
            Self::Rule(HRule::Silverman) => Bandwidth::Silverman,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TeSection {
    pub k: Vec<usize>,
    /// Paired with `k` entry by entry; defaults to `k`.
    pub l: Option<Vec<usize>>,
    pub h: HSetting,
    pub box_width: BoxWidth,
    pub log_base: LogBase,
    pub surrogates: usize,
    pub theiler: Option<usize>,
}

impl Default for TeSection {
    fn default() -> Self {
        Self {
            k: vec![1],
            l: None,
            h: HSetting::Rule(HRule::Silverman),
            box_width: BoxWidth::Half,
            log_base: LogBase::Two,
            surrogates: 1000,
            theiler: None,
        }
    }
}

impl TeSection {
    pub fn pairs(&self) -> Vec<(usize, usize)> {
        let l = self.l.as_ref().unwrap_or(&self.k);
        self.k.iter().copied().zip(l.iter().copied()).collect()
    }

    pub fn te_config(&self, k: usize, l: usize, seed: u64) -> TeConfig {
        TeConfig {
            k,
            l,
            bandwidth: self.h.bandwidth(),
            box_width: self.box_width,
            log_base: self.log_base,
            surrogates: self.surrogates,
            seed,
            theiler: self.theiler,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NetworkSection {
    /// History lengths of the ETE matrix to analyze; default the first pair.
    pub k: Option<usize>,
    pub l: Option<usize>,
    /// Thresholds `i / (grid_points − 1)` for `i = 0..grid_points`.
    pub grid_points: usize,
    /// Ratio used for the argmax graph export.
    pub mode: RatioMode,
}

impl Default for NetworkSection {
    fn default() -> Self {
        Self {
            k: None,
            l: None,
            grid_points: 101,
            mode: RatioMode::Aggregate,
        }
    }
}

impl NetworkSection {
    pub fn grid(&self) -> Vec<f64> {
        let d = (self.grid_points - 1) as f64;
        (0..self.grid_points).map(|i| i as f64 / d).collect()
    }
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            seed: None,
            output_dir: default_output_dir(),
            jobs: 0,
            inputs: Inputs::default(),
            align: AlignPolicy::default(),
            sentiment: PolarityOptions::default(),
            rmt: RmtSection::default(),
            cwoe: CwoeSection::default(),
            te: TeSection::default(),
            network: NetworkSection::default(),
        }
    }
}

impl RunConfig {
    /// Parses a TOML file. Relative paths inside it are resolved against the
    /// file's directory.
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = fs::read_to_string(path)
            .map_err(|e| CliError::validation(format!("config {}: {e}", path.display())))?;
        let mut cfg: RunConfig = toml::from_str(&text)
            .map_err(|e| CliError::validation(format!("config {}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new(""));
        let rebase = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        rebase(&mut cfg.output_dir);
        for p in [
            &mut cfg.inputs.prices,
            &mut cfg.inputs.news,
            &mut cfg.inputs.lexicon,
        ]
        .into_iter()
        .flatten()
        {
            rebase(p);
        }
        Ok(cfg)
    }

    pub fn seed(&self) -> u64 {
        self.seed.expect("validated config has a seed")
    }

    /// Checks the settings shared by every stage.
    pub fn validate(&self) -> Result<(), CliError> {
        if self.seed.is_none() {
            return Err(CliError::validation("`seed` is required"));
        }
        if self.rmt.window == 0 || self.rmt.step == 0 {
            return Err(CliError::validation(
                "`rmt.window` and `rmt.step` must be positive",
            ));
        }
        if self.cwoe.realizations == 0 {
            return Err(CliError::validation("`cwoe.realizations` must be positive"));
        }
        if self.te.k.is_empty() {
            return Err(CliError::validation(
                "`te.k` must list at least one history length",
            ));
        }
        if let Some(l) = &self.te.l {
            if l.len() != self.te.k.len() {
                return Err(CliError::validation(format!(
                    "`te.l` has {} entries but `te.k` has {}",
                    l.len(),
                    self.te.k.len()
                )));
            }
        }
        if self.te.surrogates == 0 {
            return Err(CliError::validation("`te.surrogates` must be positive"));
        }
        for (k, l) in self.te.pairs() {
            self.te
                .te_config(k, l, 0)
                .validate()
                .map_err(|e| CliError::validation(format!("`te`: {e}")))?;
        }
        if self.network.grid_points < 2 {
            return Err(CliError::validation(
                "`network.grid_points` must be at least 2",
            ));
        }
        Ok(())
    }

    /// Checks that the input files exist.
    pub fn validate_inputs(&self, needed: &[InputField]) -> Result<(), CliError> {
        for field in needed {
            let (name, path) = match field {
                InputField::Prices => ("inputs.prices", &self.inputs.prices),
                InputField::News => ("inputs.news", &self.inputs.news),
                InputField::Lexicon => ("inputs.lexicon", &self.inputs.lexicon),
            };
            match path {
                None => return Err(CliError::validation(format!("`{name}` is not set"))),
                Some(p) if !p.is_file() => {
                    return Err(CliError::validation(format!(
                        "`{name}`: {} does not exist",
                        p.display()
                    )))
                }
                Some(_) => {}
            }
        }
        Ok(())
    }

    /// SHA-256 over every field except `output_dir` and `jobs`, which do not
    /// affect results.
    pub fn hash(&self) -> String {
        let mut semantic = serde_json::to_value(self).expect("config serializes");
        let obj = semantic.as_object_mut().expect("config is an object");
        obj.remove("output_dir");
        obj.remove("jobs");
        let bytes = serde_json::to_vec(&semantic).expect("config serializes");
        hex(&Sha256::digest(bytes))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InputField {
    Prices,
    News,
    Lexicon,
}

pub fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

pub fn file_sha256(path: &Path) -> std::io::Result<String> {
    Ok(hex(&Sha256::digest(fs::read(path)?)))
}
