//! Decoupled per-gene fitting.
//!
//! Gene `i` is fitted on its own: the candidate `[w_i1..w_iN, beta_i, tau_i]`
//! predicts each observed transition `t -> t+1` from the observed levels of
//! every gene at `t`, and the squared errors are summed over all series. A
//! cardinality penalty charges the `N - I` smallest weight magnitudes.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bat::{optimize, BatConfig, Bounds};
use crate::error::{GrnError, Result};
use crate::eval::RegulationMatrix;
use crate::rnn::{predict_raw, Dataset, GeneParams, GrnModel, TAU_MIN};

/// Closed interval `[lo, hi]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub const fn new(lo: f64, hi: f64) -> Self {
        Self { lo, hi }
    }

    pub fn contains(&self, v: f64) -> bool {
        self.lo <= v && v <= self.hi
    }
}

/// Box searched for each gene's parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SearchSpace {
    pub weight_range: Interval,
    pub beta_range: Interval,
    pub tau_range: Interval,
}

impl SearchSpace {
    /// `w in [-30, 30]`, `beta in [-10, 10]`, `tau in [0.1, 20]`.
    pub const ARTIFICIAL: Self = Self {
        weight_range: Interval::new(-30.0, 30.0),
        beta_range: Interval::new(-10.0, 10.0),
        tau_range: Interval::new(TAU_MIN, 20.0),
    };

    /// `w in [-10, 10]`, `beta in [-10, 10]`, `tau in [0.1, 10]`.
    pub const SOS: Self = Self {
        weight_range: Interval::new(-10.0, 10.0),
        beta_range: Interval::new(-10.0, 10.0),
        tau_range: Interval::new(TAU_MIN, 10.0),
    };

    pub fn validate(&self) -> Result<()> {
        for (name, iv) in [
            ("weight_range", self.weight_range),
            ("beta_range", self.beta_range),
            ("tau_range", self.tau_range),
        ] {
            if !(iv.lo < iv.hi) {
                return Err(GrnError::InvalidConfig(format!("{name} [{}, {}] is empty", iv.lo, iv.hi)));
            }
        }
        if self.tau_range.lo < TAU_MIN {
            return Err(GrnError::InvalidConfig(format!(
                "tau_range lower end {} is below {TAU_MIN}",
                self.tau_range.lo
            )));
        }
        Ok(())
    }

    /// Optimiser box for an `N`-gene problem, laid out as `[w_1..w_N, beta, tau]`.
    pub fn bounds(&self, gene_count: usize) -> Result<Bounds> {
        let mut lower = vec![self.weight_range.lo; gene_count];
        let mut upper = vec![self.weight_range.hi; gene_count];
        lower.extend([self.beta_range.lo, self.tau_range.lo]);
        upper.extend([self.beta_range.hi, self.tau_range.hi]);
        Bounds::new(lower, upper)
    }

    pub fn contains(&self, params: &GeneParams) -> bool {
        params.weights.iter().all(|w| self.weight_range.contains(*w))
            && self.beta_range.contains(params.beta)
            && self.tau_range.contains(params.tau)
    }
}

/// Decodes an optimiser position `[w_1..w_N, beta, tau]`.
pub fn decode_position(position: &[f64]) -> GeneParams {
    let n = position.len() - 2;
    GeneParams::new(position[..n].to_vec(), position[n], position[n + 1])
}

pub fn encode_params(params: &GeneParams) -> Vec<f64> {
    let mut v = params.weights.clone();
    v.extend([params.beta, params.tau]);
    v
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InferenceConfig {
    /// Maximum number of regulators per gene (`I`).
    pub cardinality: usize,
    /// Penalty weight (`c`).
    pub penalty_weight: f64,
    pub space: SearchSpace,
    /// Optimiser settings; `bounds` and `seed` are overwritten per gene.
    pub bat: BatConfig,
    pub prune_threshold: f64,
}

impl InferenceConfig {
    /// Defaults for the 4-gene artificial benchmark.
    pub fn artificial(gene_count: usize, seed: u64) -> Self {
        let space = SearchSpace::ARTIFICIAL;
        let bounds = space.bounds(gene_count).expect("static search space is valid");
        Self {
            cardinality: gene_count,
            penalty_weight: 1.0,
            space,
            bat: BatConfig::standard(bounds, seed),
            prune_threshold: 0.05,
        }
    }

    /// Defaults for the 8-gene SOS data: `I = 2`, 500 bats, the SOS box.
    pub fn sos(seed: u64) -> Self {
        let space = SearchSpace::SOS;
        let bounds = space.bounds(8).expect("static search space is valid");
        let mut bat = BatConfig::standard(bounds, seed);
        bat.population = 500;
        Self { cardinality: 2, penalty_weight: 1.0, space, bat, prune_threshold: 0.05 }
    }

    pub fn validate(&self, gene_count: usize) -> Result<()> {
        if self.cardinality > gene_count {
            return Err(GrnError::InvalidConfig(format!(
                "cardinality {} exceeds gene count {gene_count}",
                self.cardinality
            )));
        }
        if !(self.penalty_weight >= 0.0) {
            return Err(GrnError::InvalidConfig("penalty_weight must be nonnegative".into()));
        }
        if !(self.prune_threshold >= 0.0) {
            return Err(GrnError::InvalidConfig("prune_threshold must be nonnegative".into()));
        }
        self.space.validate()?;
        self.bat.validate()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneResult {
    pub params: GeneParams,
    /// Squared error plus penalty at `params`.
    pub fitness: f64,
    pub iterations_used: usize,
    pub fitness_history: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InferredNetwork {
    pub model: GrnModel,
    pub per_gene: Vec<GeneResult>,
}

impl InferredNetwork {
    pub fn weight_matrix(&self) -> Vec<Vec<f64>> {
        self.model.weight_matrix()
    }
}

/// `c` times the sum of the `N - I` smallest weight magnitudes.
pub fn penalty_term(weights: &[f64], cardinality: usize, c: f64) -> f64 {
    let n = weights.len();
    if cardinality >= n || c == 0.0 {
        return 0.0;
    }
    let mut mags: Vec<f64> = weights.iter().map(|w| w.abs()).collect();
    mags.sort_by(f64::total_cmp);
    c * mags[..n - cardinality].iter().sum::<f64>()
}

/// Sum of squared one-step prediction errors of gene `gene_index` over every series.
///
/// Returns `+inf` if any prediction is non-finite.
pub fn squared_error(gene_index: usize, dataset: &Dataset, candidate: &GeneParams) -> Result<f64> {
    let n = dataset.gene_count();
    candidate.validate(n)?;
    if gene_index >= n {
        return Err(GrnError::DimensionMismatch { context: "gene index", expected: n, actual: gene_index });
    }
    Ok(squared_error_unchecked(gene_index, dataset, &candidate.weights, candidate.beta, candidate.tau))
}

fn squared_error_unchecked(
    gene_index: usize,
    dataset: &Dataset,
    weights: &[f64],
    beta: f64,
    tau: f64,
) -> f64 {
    let dt = dataset.delta_t();
    let mut total = 0.0;
    for series in dataset.series() {
        let mut rows = series.rows();
        let Some(mut prev) = rows.next() else { continue };
        for next in rows {
            let err = predict_raw(weights, beta, tau, gene_index, prev, dt) - next[gene_index];
            total += err * err;
            prev = next;
        }
    }
    if total.is_finite() {
        total
    } else {
        f64::INFINITY
    }
}

/// Squared error plus cardinality penalty for one gene.
pub fn gene_objective(
    gene_index: usize,
    dataset: &Dataset,
    candidate: &GeneParams,
    config: &InferenceConfig,
) -> Result<f64> {
    let err = squared_error(gene_index, dataset, candidate)?;
    Ok(err + penalty_term(&candidate.weights, config.cardinality, config.penalty_weight))
}

/// Mixes a master seed with a gene index (splitmix64 finaliser).
pub fn sub_seed(master: u64, index: u64) -> u64 {
    let mut z = master ^ index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Fits gene `gene_index` with one optimiser run seeded by `config.bat.seed`.
pub fn infer_gene(gene_index: usize, dataset: &Dataset, config: &InferenceConfig) -> Result<GeneResult> {
    let n = dataset.gene_count();
    config.validate(n)?;
    if gene_index >= n {
        return Err(GrnError::DimensionMismatch { context: "gene index", expected: n, actual: gene_index });
    }
    let mut bat = config.bat.clone();
    bat.bounds = config.space.bounds(n)?;
    let (cardinality, c) = (config.cardinality, config.penalty_weight);
    let objective = |x: &[f64]| {
        let (weights, rest) = x.split_at(n);
        squared_error_unchecked(gene_index, dataset, weights, rest[0], rest[1])
            + penalty_term(weights, cardinality, c)
    };
    let result = optimize(&objective, &bat)?;
    Ok(GeneResult {
        params: decode_position(&result.best_position),
        fitness: result.best_fitness,
        iterations_used: result.iterations_used,
        fitness_history: result.fitness_history,
    })
}

/// Fits every gene independently (in parallel) and assembles the network.
///
/// Gene `i` runs with seed `sub_seed(config.bat.seed, i)`.
pub fn infer_network(dataset: &Dataset, config: &InferenceConfig) -> Result<InferredNetwork> {
    let n = dataset.gene_count();
    config.validate(n)?;
    let per_gene = (0..n)
        .into_par_iter()
        .map(|i| {
            let mut cfg = config.clone();
            cfg.bat.seed = sub_seed(config.bat.seed, i as u64);
            infer_gene(i, dataset, &cfg)
        })
        .collect::<Result<Vec<_>>>()?;
    let model = GrnModel::new(per_gene.iter().map(|g| g.params.clone()).collect(), dataset.delta_t())?;
    Ok(InferredNetwork { model, per_gene })
}

/// Signed structure of `weights`: `sign(w)` where `|w| >= threshold`, else 0.
pub fn extract_structure(weights: &[Vec<f64>], threshold: f64) -> RegulationMatrix {
    let entries = weights
        .iter()
        .map(|row| {
            row.iter().map(|&w| if w != 0.0 && w.abs() >= threshold { w.signum() as i8 } else { 0 }).collect()
        })
        .collect();
    RegulationMatrix::from_rows_unchecked(entries)
}
