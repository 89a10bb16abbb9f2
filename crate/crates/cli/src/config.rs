//! Experiment configuration files (TOML).
//!
//! Every field is optional. Missing inference fields fall back to the
//! defaults of the command being run: the artificial-network settings for
//! `generate`, `infer` and `sweep`, the SOS settings for `sos`.
//!
//! ```toml
//! name = "table1"
//! seed = 1
//! model = "table1"          # or a path to a model JSON file
//!
//! [data]
//! series = 6
//! samples = 15
//! seed = 2024               # defaults to the master seed
//!
//! [inference]
//! cardinality = 4           # defaults to the gene count
//! penalty_weight = 1.0
//! prune_threshold = 0.05
//! space = "artificial"      # or "sos", or a table with weight/beta/tau ranges
//!
//! [inference.bat]
//! population = 200
//! iterations = 2000
//! alpha = 0.1
//! gamma = 0.1
//!
//! [sweep]
//! parameter = "population"
//! values = [50, 100, 200]
//! repetitions = 5
//! stop_fitness = 1e-7
//!
//! [sos]
//! runs = 15
//! confidence_threshold = 0.5
//! ```

use std::fs;
use std::path::{Path, PathBuf};

use grnbat_core::inference::Interval;
use grnbat_core::{GeneParams, GrnModel, InferenceConfig, SearchSpace};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{CliError, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub name: String,
    pub seed: u64,
    /// `"table1"` or the path of a model JSON file.
    pub model: String,
    pub out: Option<PathBuf>,
    pub data: DataSection,
    pub inference: InferenceSection,
    pub sweep: SweepSection,
    pub sos: SosSection,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            name: "experiment".into(),
            seed: 1,
            model: "table1".into(),
            out: None,
            data: DataSection::default(),
            inference: InferenceSection::default(),
            sweep: SweepSection::default(),
            sos: SosSection::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DataSection {
    pub series: usize,
    pub samples: usize,
    pub seed: Option<u64>,
    pub noise_percent: f64,
    pub noise_seed: Option<u64>,
}

impl Default for DataSection {
    fn default() -> Self {
        Self { series: 6, samples: 15, seed: None, noise_percent: 0.0, noise_seed: None }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct InferenceSection {
    pub cardinality: Option<usize>,
    pub penalty_weight: Option<f64>,
    pub prune_threshold: Option<f64>,
    pub space: Option<SpaceChoice>,
    pub bat: BatSection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SpaceChoice {
    Named(String),
    Custom { weight: [f64; 2], beta: [f64; 2], tau: [f64; 2] },
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BatSection {
    pub population: Option<usize>,
    pub iterations: Option<usize>,
    pub alpha: Option<f64>,
    pub gamma: Option<f64>,
    pub q_min: Option<f64>,
    pub q_max: Option<f64>,
    pub walk_step: Option<f64>,
    pub target_fitness: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepParameter {
    Population,
    Iterations,
    SeriesCount,
    AlphaGammaGrid,
}

impl SweepParameter {
    pub fn as_str(self) -> &'static str {
        match self {
            SweepParameter::Population => "population",
            SweepParameter::Iterations => "iterations",
            SweepParameter::SeriesCount => "series_count",
            SweepParameter::AlphaGammaGrid => "alpha_gamma_grid",
        }
    }
}

impl std::str::FromStr for SweepParameter {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "population" => Ok(Self::Population),
            "iterations" => Ok(Self::Iterations),
            "series_count" => Ok(Self::SeriesCount),
            "alpha_gamma_grid" => Ok(Self::AlphaGammaGrid),
            other => Err(format!(
                "unknown sweep parameter {other:?} (population, iterations, series_count, alpha_gamma_grid)"
            )),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepSection {
    pub parameter: Option<SweepParameter>,
    /// Values for the one-dimensional sweeps.
    pub values: Vec<f64>,
    /// Grid axes for `alpha_gamma_grid`.
    pub alpha_values: Vec<f64>,
    pub gamma_values: Vec<f64>,
    pub repetitions: usize,
    pub stop_fitness: f64,
}

impl Default for SweepSection {
    fn default() -> Self {
        Self {
            parameter: None,
            values: Vec::new(),
            alpha_values: vec![0.1, 0.2],
            gamma_values: vec![0.1, 0.2],
            repetitions: 5,
            stop_fitness: 1e-7,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SosSection {
    pub runs: usize,
    pub confidence_threshold: f64,
    /// Expression file; the bundled table is used when absent.
    pub input: Option<PathBuf>,
    /// Expected SHA-256 of `input`, hex encoded.
    pub sha256: Option<String>,
}

impl Default for SosSection {
    fn default() -> Self {
        Self { runs: 15, confidence_threshold: 0.5, input: None, sha256: None }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))
    }

    /// Hex SHA-256 of the canonical JSON form of this configuration.
    pub fn digest(&self) -> String {
        let json = serde_json::to_vec(self).expect("config serializes");
        hex::encode(Sha256::digest(&json))
    }

    pub fn data_seed(&self) -> u64 {
        self.data.seed.unwrap_or(self.seed)
    }

    pub fn model(&self) -> Result<GrnModel> {
        if self.model == "table1" {
            return Ok(grnbat_core::small_artificial_network());
        }
        let path = Path::new(&self.model);
        let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        let file: ModelFile =
            serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        Ok(GrnModel::new(file.genes, file.delta_t)?)
    }

    pub fn model_source(&self) -> String {
        if self.model == "table1" {
            "builtin:table1".into()
        } else {
            format!("file:{}", self.model)
        }
    }

    /// Applies the `[inference]` overrides to `base` and validates the result.
    pub fn inference(&self, mut base: InferenceConfig, gene_count: usize) -> Result<InferenceConfig> {
        let s = &self.inference;
        if let Some(c) = s.cardinality {
            base.cardinality = c;
        }
        if let Some(c) = s.penalty_weight {
            base.penalty_weight = c;
        }
        if let Some(t) = s.prune_threshold {
            base.prune_threshold = t;
        }
        if let Some(space) = &s.space {
            base.space = match space {
                SpaceChoice::Named(n) if n == "artificial" => SearchSpace::ARTIFICIAL,
                SpaceChoice::Named(n) if n == "sos" => SearchSpace::SOS,
                SpaceChoice::Named(n) => {
                    return Err(CliError::Config(format!(
                        "inference.space: unknown name {n:?} (artificial, sos)"
                    )))
                }
                SpaceChoice::Custom { weight, beta, tau } => SearchSpace {
                    weight_range: Interval::new(weight[0], weight[1]),
                    beta_range: Interval::new(beta[0], beta[1]),
                    tau_range: Interval::new(tau[0], tau[1]),
                },
            };
        }
        let b = &s.bat;
        let bat = &mut base.bat;
        macro_rules! set {
            ($($field:ident => $target:ident),*) => {$(
                if let Some(v) = b.$field {
                    bat.$target = v;
                }
            )*};
        }
        set!(population => population, iterations => max_iterations, alpha => alpha, gamma => gamma,
             q_min => q_min, q_max => q_max, walk_step => walk_step, target_fitness => target_fitness);
        base.bat.bounds = base.space.bounds(gene_count)?;
        base.validate(gene_count)?;
        Ok(base)
    }

    pub fn artificial_inference(&self, gene_count: usize, seed: u64) -> Result<InferenceConfig> {
        let mut base = InferenceConfig::artificial(gene_count, seed);
        base.cardinality = gene_count;
        self.inference(base, gene_count)
    }

    pub fn sos_inference(&self, seed: u64) -> Result<InferenceConfig> {
        self.inference(InferenceConfig::sos(seed), grnbat_core::SOS_GENES.len())
    }
}

/// On-disk model description.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ModelFile {
    pub genes: Vec<GeneParams>,
    #[serde(default = "unit_step")]
    pub delta_t: f64,
}

fn unit_step() -> f64 {
    1.0
}
