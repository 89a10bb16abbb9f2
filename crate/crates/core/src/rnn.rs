//! Discrete recurrent-network model of gene expression dynamics.
//!
//! Each gene `i` evolves as a convex mix of its current level and a sigmoid of
//! the weighted regulator levels:
//!
//! ```text
//! e_i(t+dt) = (dt/tau_i) * sigmoid(sum_j w_ij e_j(t) + beta_i) + (1 - dt/tau_i) * e_i(t)
//! ```

use serde::{Deserialize, Serialize};

use crate::error::{GrnError, Result};

/// Smallest decay constant accepted by the model. `tau = 0` would divide by zero.
pub const TAU_MIN: f64 = 0.1;

/// Logistic sigmoid `1 / (1 + e^-z)`.
#[inline]
pub fn sigmoid(z: f64) -> f64 {
    1.0 / (1.0 + (-z).exp())
}

/// Parameters of a single gene: incoming regulation weights, basal level and decay constant.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneParams {
    pub weights: Vec<f64>,
    pub beta: f64,
    pub tau: f64,
}

impl GeneParams {
    pub fn new(weights: Vec<f64>, beta: f64, tau: f64) -> Self {
        Self { weights, beta, tau }
    }

    pub fn validate(&self, gene_count: usize) -> Result<()> {
        GrnError::check_len("gene weights", gene_count, self.weights.len())?;
        if !(self.tau >= TAU_MIN) {
            return Err(GrnError::InvalidModel(format!("tau {} below lower bound {TAU_MIN}", self.tau)));
        }
        if !self.beta.is_finite() || self.weights.iter().any(|w| !w.is_finite()) {
            return Err(GrnError::InvalidModel("non-finite weight or basal level".into()));
        }
        Ok(())
    }

    #[inline]
    pub(crate) fn predict_unchecked(&self, gene_index: usize, state: &[f64], delta_t: f64) -> f64 {
        predict_raw(&self.weights, self.beta, self.tau, gene_index, state, delta_t)
    }
}

/// One-step update of a single gene without validation.
#[inline]
pub(crate) fn predict_raw(
    weights: &[f64],
    beta: f64,
    tau: f64,
    gene_index: usize,
    state: &[f64],
    delta_t: f64,
) -> f64 {
    let z: f64 = weights.iter().zip(state).map(|(w, e)| w * e).sum::<f64>() + beta;
    let ratio = delta_t / tau;
    ratio * sigmoid(z) + (1.0 - ratio) * state[gene_index]
}

/// A full network: one [`GeneParams`] per gene plus the sampling step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GrnModel {
    genes: Vec<GeneParams>,
    delta_t: f64,
}

impl GrnModel {
    pub fn new(genes: Vec<GeneParams>, delta_t: f64) -> Result<Self> {
        if genes.is_empty() {
            return Err(GrnError::InvalidModel("model has no genes".into()));
        }
        if !(delta_t > 0.0) || !delta_t.is_finite() {
            return Err(GrnError::InvalidModel(format!("delta_t {delta_t} must be positive")));
        }
        let n = genes.len();
        for g in &genes {
            g.validate(n)?;
        }
        Ok(Self { genes, delta_t })
    }

    pub fn gene_count(&self) -> usize {
        self.genes.len()
    }

    pub fn genes(&self) -> &[GeneParams] {
        &self.genes
    }

    pub fn delta_t(&self) -> f64 {
        self.delta_t
    }

    /// Row-major `N x N` weight matrix; row `i` holds the regulators of gene `i`.
    pub fn weight_matrix(&self) -> Vec<Vec<f64>> {
        self.genes.iter().map(|g| g.weights.clone()).collect()
    }

    /// Advances the state by one time step.
    pub fn step(&self, state: &[f64]) -> Result<Vec<f64>> {
        GrnError::check_len("step state", self.gene_count(), state.len())?;
        Ok(self.step_unchecked(state))
    }

    fn step_unchecked(&self, state: &[f64]) -> Vec<f64> {
        self.genes.iter().enumerate().map(|(i, g)| g.predict_unchecked(i, state, self.delta_t)).collect()
    }

    /// Runs the map from `initial_state`, returning `steps` samples (the first is the initial state).
    pub fn simulate(&self, initial_state: &[f64], steps: usize) -> Result<TimeSeries> {
        GrnError::check_len("initial state", self.gene_count(), initial_state.len())?;
        if steps == 0 {
            return Err(GrnError::InvalidConfig("simulate needs at least one step".into()));
        }
        let n = self.gene_count();
        let mut values = Vec::with_capacity(n * steps);
        values.extend_from_slice(initial_state);
        let mut state = initial_state.to_vec();
        for _ in 1..steps {
            state = self.step_unchecked(&state);
            values.extend_from_slice(&state);
        }
        TimeSeries::new(n, values, self.delta_t)
    }
}

/// One-step-ahead prediction of gene `gene_index` from the observed state at time `t`.
pub fn predict_gene(
    params: &GeneParams,
    gene_index: usize,
    observed_state: &[f64],
    delta_t: f64,
) -> Result<f64> {
    params.validate(observed_state.len())?;
    if gene_index >= observed_state.len() {
        return Err(GrnError::DimensionMismatch {
            context: "gene index",
            expected: observed_state.len(),
            actual: gene_index,
        });
    }
    Ok(params.predict_unchecked(gene_index, observed_state, delta_t))
}

/// `T x N` matrix of expression levels sampled every `delta_t`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimeSeries {
    gene_count: usize,
    values: Vec<f64>,
    delta_t: f64,
}

impl TimeSeries {
    /// Builds a series from row-major values.
    pub fn new(gene_count: usize, values: Vec<f64>, delta_t: f64) -> Result<Self> {
        if gene_count == 0 {
            return Err(GrnError::Empty("time series with zero genes".into()));
        }
        if values.is_empty() || !values.len().is_multiple_of(gene_count) {
            return Err(GrnError::DimensionMismatch {
                context: "time series values",
                expected: gene_count,
                actual: values.len(),
            });
        }
        if let Some(pos) = values.iter().position(|v| !v.is_finite()) {
            return Err(GrnError::InvalidModel(format!(
                "non-finite expression value at sample {}, gene {}",
                pos / gene_count,
                pos % gene_count
            )));
        }
        if !(delta_t > 0.0) {
            return Err(GrnError::InvalidConfig(format!("delta_t {delta_t} must be positive")));
        }
        Ok(Self { gene_count, values, delta_t })
    }

    pub fn from_rows(rows: &[Vec<f64>], delta_t: f64) -> Result<Self> {
        let n = rows.first().map(Vec::len).unwrap_or(0);
        let mut values = Vec::with_capacity(n * rows.len());
        for row in rows {
            GrnError::check_len("time series row", n, row.len())?;
            values.extend_from_slice(row);
        }
        Self::new(n, values, delta_t)
    }

    pub fn gene_count(&self) -> usize {
        self.gene_count
    }

    pub fn sample_count(&self) -> usize {
        self.values.len() / self.gene_count
    }

    pub fn delta_t(&self) -> f64 {
        self.delta_t
    }

    pub fn row(&self, t: usize) -> &[f64] {
        &self.values[t * self.gene_count..(t + 1) * self.gene_count]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.values.chunks_exact(self.gene_count)
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn get(&self, t: usize, gene: usize) -> f64 {
        self.values[t * self.gene_count + gene]
    }

    pub(crate) fn map_values(&self, f: impl FnMut(f64) -> f64) -> Result<Self> {
        Self::new(self.gene_count, self.values.iter().copied().map(f).collect(), self.delta_t)
    }
}

/// A nonempty collection of series that share gene count and sampling step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    series: Vec<TimeSeries>,
}

impl Dataset {
    pub fn new(series: Vec<TimeSeries>) -> Result<Self> {
        let first = series.first().ok_or_else(|| GrnError::Empty("dataset has no series".into()))?;
        let (n, dt) = (first.gene_count(), first.delta_t());
        for s in &series {
            GrnError::check_len("dataset series gene count", n, s.gene_count())?;
            if s.delta_t() != dt {
                return Err(GrnError::InvalidConfig(format!(
                    "series delta_t {} differs from {dt}",
                    s.delta_t()
                )));
            }
        }
        Ok(Self { series })
    }

    pub fn series(&self) -> &[TimeSeries] {
        &self.series
    }

    pub fn gene_count(&self) -> usize {
        self.series[0].gene_count()
    }

    pub fn delta_t(&self) -> f64 {
        self.series[0].delta_t()
    }

    /// Total number of samples over all series.
    pub fn sample_total(&self) -> usize {
        self.series.iter().map(TimeSeries::sample_count).sum()
    }

    /// Keeps only the first `count` series.
    pub fn truncated(&self, count: usize) -> Result<Self> {
        Self::new(self.series.iter().take(count).cloned().collect())
    }
}
