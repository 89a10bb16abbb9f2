//! Structure and parameter accuracy metrics, plus ensemble statistics over repeated runs.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{GrnError, Result};
use crate::inference::InferredNetwork;

/// Square matrix of edge signs in `{-1, 0, +1}`; row `i` lists the regulators of gene `i`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RegulationMatrix {
    entries: Vec<Vec<i8>>,
}

impl RegulationMatrix {
    pub fn new(entries: Vec<Vec<i8>>) -> Result<Self> {
        let n = entries.len();
        if n == 0 {
            return Err(GrnError::Empty("regulation matrix".into()));
        }
        for (i, row) in entries.iter().enumerate() {
            GrnError::check_len("regulation matrix row", n, row.len())?;
            if let Some(j) = row.iter().position(|v| !(-1..=1).contains(v)) {
                return Err(GrnError::InvalidModel(format!(
                    "regulation entry ({i}, {j}) = {} is not -1, 0 or 1",
                    row[j]
                )));
            }
        }
        Ok(Self { entries })
    }

    pub(crate) fn from_rows_unchecked(entries: Vec<Vec<i8>>) -> Self {
        Self { entries }
    }

    pub fn zeros(n: usize) -> Self {
        Self { entries: vec![vec![0; n]; n] }
    }

    pub fn size(&self) -> usize {
        self.entries.len()
    }

    pub fn rows(&self) -> &[Vec<i8>] {
        &self.entries
    }

    pub fn get(&self, i: usize, j: usize) -> i8 {
        self.entries[i][j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: i8) {
        assert!((-1..=1).contains(&v), "regulation sign out of range: {v}");
        self.entries[i][j] = v;
    }

    pub fn edge_count(&self) -> usize {
        self.entries.iter().flatten().filter(|v| **v != 0).count()
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionCounts {
    pub tp: usize,
    pub fp: usize,
    pub tn: usize,
    pub fn_: usize,
}

impl ConfusionCounts {
    pub fn total(&self) -> usize {
        self.tp + self.fp + self.tn + self.fn_
    }
}

/// Cell-by-cell comparison of an inferred structure against the truth.
///
/// With `sign_strict`, a present edge with the wrong sign counts as a miss.
pub fn compare_structures(
    truth: &RegulationMatrix,
    inferred: &RegulationMatrix,
    sign_strict: bool,
) -> Result<ConfusionCounts> {
    GrnError::check_len("structure comparison", truth.size(), inferred.size())?;
    let mut c = ConfusionCounts::default();
    for (t_row, i_row) in truth.rows().iter().zip(inferred.rows()) {
        for (&t, &p) in t_row.iter().zip(i_row) {
            match (t != 0, p != 0) {
                (true, true) if !sign_strict || t == p => c.tp += 1,
                (true, _) => c.fn_ += 1,
                (false, true) => c.fp += 1,
                (false, false) => c.tn += 1,
            }
        }
    }
    Ok(c)
}

/// Sensitivity and specificity; `None` where the denominator is zero.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SensSpec {
    pub sensitivity: Option<f64>,
    pub specificity: Option<f64>,
}

pub fn sensitivity_specificity(counts: &ConfusionCounts) -> SensSpec {
    let ratio = |num: usize, other: usize| {
        let den = num + other;
        (den > 0).then(|| num as f64 / den as f64)
    };
    SensSpec { sensitivity: ratio(counts.tp, counts.fn_), specificity: ratio(counts.tn, counts.fp) }
}

/// Inferred parametric error: sum of absolute weight differences over all cells.
pub fn ipe(truth: &[Vec<f64>], inferred: &[Vec<f64>]) -> Result<f64> {
    GrnError::check_len("ipe rows", truth.len(), inferred.len())?;
    let mut total = 0.0;
    for (a, b) in truth.iter().zip(inferred) {
        GrnError::check_len("ipe columns", a.len(), b.len())?;
        total += a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum::<f64>();
    }
    Ok(total)
}

/// Per-edge statistics over repeated inference runs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleStats {
    pub mean: Vec<Vec<f64>>,
    /// Sample standard deviation (`n - 1` denominator; 0 for a single run).
    pub std: Vec<Vec<f64>>,
    /// Probability that an edge's weight magnitude exceeds the global reference level.
    pub confidence: Vec<Vec<f64>>,
    /// Mean of `|mean|` over all edges.
    pub reference_level: f64,
    pub runs: usize,
}

pub fn ensemble_aggregate(networks: &[InferredNetwork]) -> Result<EnsembleStats> {
    let mats: Vec<Vec<Vec<f64>>> = networks.iter().map(InferredNetwork::weight_matrix).collect();
    aggregate_weights(&mats)
}

/// Aggregates raw weight matrices.
///
/// An edge's confidence is `P(X > g)` for `X ~ Normal(|mean|, std)`, where `g`
/// is the mean magnitude over every edge. Zero-spread edges get 1 when
/// `|mean| > g`, else 0.
pub fn aggregate_weights(matrices: &[Vec<Vec<f64>>]) -> Result<EnsembleStats> {
    let first =
        matrices.first().ok_or_else(|| GrnError::Empty("ensemble needs at least one network".into()))?;
    let n = first.len();
    for m in matrices {
        GrnError::check_len("ensemble rows", n, m.len())?;
        for row in m {
            GrnError::check_len("ensemble columns", n, row.len())?;
        }
    }
    let runs = matrices.len();
    let mut mean = vec![vec![0.0; n]; n];
    let mut std = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in 0..n {
            let mu = matrices.iter().map(|m| m[i][j]).sum::<f64>() / runs as f64;
            mean[i][j] = mu;
            if runs > 1 {
                let ss: f64 = matrices.iter().map(|m| (m[i][j] - mu).powi(2)).sum();
                std[i][j] = (ss / (runs - 1) as f64).sqrt();
            }
        }
    }
    let reference_level = mean.iter().flatten().map(|m| m.abs()).sum::<f64>() / (n * n) as f64;
    let confidence = mean
        .iter()
        .zip(&std)
        .map(|(mrow, srow)| {
            mrow.iter().zip(srow).map(|(&mu, &sd)| upper_tail(mu.abs(), sd, reference_level)).collect()
        })
        .collect();
    Ok(EnsembleStats { mean, std, confidence, reference_level, runs })
}

fn upper_tail(mu: f64, sd: f64, level: f64) -> f64 {
    match Normal::new(mu, sd) {
        Ok(dist) if sd > 0.0 => 1.0 - dist.cdf(level),
        _ => {
            if mu > level {
                1.0
            } else {
                0.0
            }
        }
    }
}

/// Keeps edges whose confidence reaches `threshold`, signed by the mean weight.
pub fn edge_decision(stats: &EnsembleStats, threshold: f64) -> RegulationMatrix {
    let entries = stats
        .mean
        .iter()
        .zip(&stats.confidence)
        .map(|(mrow, crow)| {
            mrow.iter()
                .zip(crow)
                .map(|(&mu, &conf)| if conf >= threshold { mu.signum() as i8 * (mu != 0.0) as i8 } else { 0 })
                .collect()
        })
        .collect();
    RegulationMatrix::from_rows_unchecked(entries)
}
