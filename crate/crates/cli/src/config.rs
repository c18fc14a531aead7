//! Run configuration: TOML files with sections, strict about unknown keys,
//! plus the command-line overrides shared by all subcommands.

use crate::AppError;
use emlfit::expr::{BlockKind, GrammarConfig};
use emlfit::fit::BoundsMap;
use emlfit::opt::Multistart;
use emlfit::response::Embedding;
use emlfit::select::ScoreConfig;
use emlfit::toybench::NetworkParams;
use serde::Deserialize;
use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

fn default_out_dir() -> PathBuf {
    PathBuf::from("out")
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InputSection {
    pub path: PathBuf,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GrammarSection {
    pub kind: String,
    pub max_depth: usize,
    pub max_nodes: usize,
}

impl Default for GrammarSection {
    fn default() -> Self {
        GrammarSection {
            kind: "eml".into(),
            max_depth: 3,
            max_nodes: 5,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EmbeddingSection {
    pub kind: String,
    /// Dose per trace label, required by the dose-ode embedding when labels
    /// are not numeric.
    pub doses: BTreeMap<String, f64>,
}

impl Default for EmbeddingSection {
    fn default() -> Self {
        EmbeddingSection {
            kind: "static".into(),
            doses: BTreeMap::new(),
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SplitSection {
    /// Hold out indices congruent to this offset mod 4.
    pub offset: usize,
}

impl Default for SplitSection {
    fn default() -> Self {
        SplitSection { offset: 3 }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScoreSection {
    pub lambda_depth: f64,
    pub lambda_nodes: f64,
}

impl Default for ScoreSection {
    fn default() -> Self {
        ScoreSection {
            lambda_depth: 0.0,
            lambda_nodes: 0.0,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FitSection {
    pub n_starts: usize,
    pub seed: u64,
}

impl Default for FitSection {
    fn default() -> Self {
        FitSection {
            n_starts: 32,
            seed: 1,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputSection {
    pub dir: PathBuf,
}

impl Default for OutputSection {
    fn default() -> Self {
        OutputSection {
            dir: default_out_dir(),
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CascadeSection {
    pub k_max: usize,
}

impl Default for CascadeSection {
    fn default() -> Self {
        CascadeSection { k_max: 10 }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ToybenchSection {
    pub t_max: f64,
    pub n_points: usize,
    pub n_a: usize,
    pub n_i: usize,
    pub k_r: f64,
    pub k_on_a: f64,
    pub k_off_a: f64,
    pub tau_a: f64,
    pub k_on_i: f64,
    pub k_off_i: f64,
    pub tau_i: f64,
    pub a_amp: f64,
    pub i_amp: f64,
    pub k_a: f64,
    pub k_i: f64,
    pub y0: f64,
    pub sigma_noise: f64,
    pub seed: u64,
}

impl Default for ToybenchSection {
    fn default() -> Self {
        let p = NetworkParams::default();
        ToybenchSection {
            t_max: 80.0,
            n_points: 241,
            n_a: p.n_fast,
            n_i: p.n_slow,
            k_r: p.input_rate,
            k_on_a: p.on_fast,
            k_off_a: p.off_fast,
            tau_a: p.tau_fast,
            k_on_i: p.on_slow,
            k_off_i: p.off_slow,
            tau_i: p.tau_slow,
            a_amp: p.amp_fast,
            i_amp: p.amp_slow,
            k_a: p.half_fast,
            k_i: p.half_slow,
            y0: p.baseline,
            sigma_noise: p.noise_sd,
            seed: p.seed,
        }
    }
}

impl ToybenchSection {
    pub fn network_params(&self) -> NetworkParams {
        NetworkParams {
            n_fast: self.n_a,
            n_slow: self.n_i,
            input_rate: self.k_r,
            on_fast: self.k_on_a,
            off_fast: self.k_off_a,
            tau_fast: self.tau_a,
            on_slow: self.k_on_i,
            off_slow: self.k_off_i,
            tau_slow: self.tau_i,
            amp_fast: self.a_amp,
            amp_slow: self.i_amp,
            half_fast: self.k_a,
            half_slow: self.k_i,
            baseline: self.y0,
            noise_sd: self.sigma_noise,
            seed: self.seed,
        }
    }

    pub fn validate(&self) -> Result<(), AppError> {
        if self.t_max <= 0.0 || self.n_points < 8 {
            return Err(AppError::Config(
                "toybench grid needs t_max > 0 and at least 8 points".into(),
            ));
        }
        let p = self.network_params();
        let positive = [
            p.input_rate,
            p.on_fast,
            p.off_fast,
            p.tau_fast,
            p.on_slow,
            p.off_slow,
            p.tau_slow,
        ];
        if positive.iter().any(|&v| v <= 0.0) || p.n_fast < 1 || p.n_slow < 1 {
            return Err(AppError::Config(
                "toybench rates, timescales, and chain lengths must be positive".into(),
            ));
        }
        if p.noise_sd < 0.0 {
            return Err(AppError::Config("sigma_noise must be nonnegative".into()));
        }
        Ok(())
    }
}

/// Configuration file for `emlfit search`.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SearchConfigFile {
    pub input: InputSection,
    #[serde(default)]
    pub grammar: GrammarSection,
    #[serde(default)]
    pub embedding: EmbeddingSection,
    #[serde(default)]
    pub split: SplitSection,
    #[serde(default)]
    pub score: ScoreSection,
    #[serde(default)]
    pub fit: FitSection,
    #[serde(default)]
    pub bounds: BTreeMap<String, [f64; 2]>,
    #[serde(default)]
    pub output: OutputSection,
}

/// Configuration file for `emlfit cascade-bench`.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BenchConfigFile {
    #[serde(default)]
    pub cascade: CascadeSection,
    /// Optional observed trace; the benchmark network is generated in-run
    /// when absent.
    pub input: Option<InputSection>,
    #[serde(default)]
    pub toybench: ToybenchSection,
    #[serde(default)]
    pub split: SplitSection,
    #[serde(default)]
    pub fit: FitSection,
    #[serde(default)]
    pub output: OutputSection,
}

/// Configuration file for `emlfit toybench`.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ToyConfigFile {
    #[serde(default)]
    pub toybench: ToybenchSection,
    #[serde(default)]
    pub split: SplitSection,
    #[serde(default)]
    pub output: OutputSection,
}

/// Command-line overrides accepted by every subcommand; grammar-shaped ones
/// only apply to `search`.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub grammar: Option<String>,
    pub max_depth: Option<usize>,
    pub max_nodes: Option<usize>,
    pub embedding: Option<String>,
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
}

/// Read a config file; unreadable configs are config errors.
pub fn read_to_string(path: &Path) -> Result<String, AppError> {
    std::fs::read_to_string(path)
        .map_err(|e| AppError::Config(format!("cannot read {}: {e}", path.display())))
}

pub fn parse_search_config(text: &str) -> Result<SearchConfigFile, AppError> {
    toml::from_str(text).map_err(|e| AppError::Config(e.to_string()))
}

pub fn parse_bench_config(text: &str) -> Result<BenchConfigFile, AppError> {
    toml::from_str(text).map_err(|e| AppError::Config(e.to_string()))
}

pub fn parse_toy_config(text: &str) -> Result<ToyConfigFile, AppError> {
    toml::from_str(text).map_err(|e| AppError::Config(e.to_string()))
}

pub fn block_kind(name: &str) -> Result<BlockKind, AppError> {
    match name {
        "eml" => Ok(BlockKind::Eml),
        "hill" => Ok(BlockKind::Hill),
        other => Err(AppError::Config(format!(
            "unknown grammar '{other}' (expected eml or hill)"
        ))),
    }
}

pub fn embedding_kind(name: &str) -> Result<Embedding, AppError> {
    match name {
        "static" => Ok(Embedding::Static),
        "relax" => Ok(Embedding::Relaxation),
        "dose-ode" => Ok(Embedding::DoseOde),
        other => Err(AppError::Config(format!(
            "unknown embedding '{other}' (expected static, relax, or dose-ode)"
        ))),
    }
}

/// A fully validated search run.
#[derive(Debug, Clone)]
pub struct SearchPlan {
    pub input: PathBuf,
    pub grammar: GrammarConfig,
    pub embedding: Embedding,
    pub doses: BTreeMap<String, f64>,
    pub split_offset: usize,
    pub score: ScoreConfig,
    pub multistart: Multistart,
    pub bounds: BoundsMap,
    pub out_dir: PathBuf,
}

impl SearchConfigFile {
    pub fn plan(mut self, overrides: &Overrides) -> Result<SearchPlan, AppError> {
        if let Some(g) = &overrides.grammar {
            self.grammar.kind = g.clone();
        }
        if let Some(d) = overrides.max_depth {
            self.grammar.max_depth = d;
        }
        if let Some(n) = overrides.max_nodes {
            self.grammar.max_nodes = n;
        }
        if let Some(e) = &overrides.embedding {
            self.embedding.kind = e.clone();
        }
        if let Some(s) = overrides.seed {
            self.fit.seed = s;
        }
        if let Some(o) = &overrides.out {
            self.output.dir = o.clone();
        }

        let kind = block_kind(&self.grammar.kind)?;
        if self.grammar.max_nodes == 0 {
            return Err(AppError::Config("max_nodes must be at least 1".into()));
        }
        if self.grammar.max_nodes > 11 {
            return Err(AppError::Config(
                "max_nodes above 11 makes the exhaustive search impractical".into(),
            ));
        }
        let embedding = embedding_kind(&self.embedding.kind)?;
        if self.split.offset >= 4 {
            return Err(AppError::Config("split offset must be in 0..4".into()));
        }
        if self.score.lambda_depth < 0.0 || self.score.lambda_nodes < 0.0 {
            return Err(AppError::Config("penalty weights must be nonnegative".into()));
        }
        if self.fit.n_starts == 0 {
            return Err(AppError::Config("n_starts must be at least 1".into()));
        }
        let mut bounds = BoundsMap::new();
        for (name, [lo, hi]) in &self.bounds {
            if lo >= hi {
                return Err(AppError::Config(format!(
                    "bounds override '{name}' needs lo < hi"
                )));
            }
            bounds.insert(name.clone(), (*lo, *hi));
        }
        Ok(SearchPlan {
            input: self.input.path,
            grammar: GrammarConfig::new(kind, self.grammar.max_depth, self.grammar.max_nodes),
            embedding,
            doses: self.embedding.doses,
            split_offset: self.split.offset,
            score: ScoreConfig {
                lambda_depth: self.score.lambda_depth,
                lambda_nodes: self.score.lambda_nodes,
            },
            multistart: Multistart {
                n_starts: self.fit.n_starts,
                seed: self.fit.seed,
            },
            bounds,
            out_dir: self.output.dir,
        })
    }
}
