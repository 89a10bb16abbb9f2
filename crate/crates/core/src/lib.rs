//! Gene regulatory network inference from expression time series.
//!
//! A discrete recurrent-network model ([`rnn`]) is fitted gene by gene
//! ([`inference`]) with the Bat Algorithm ([`bat`]). [`data`] provides the
//! benchmark network, synthetic data and file formats; [`eval`] scores the
//! recovered structure and parameters.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bat;
pub mod data;
pub mod error;
pub mod eval;
pub mod inference;
pub mod rnn;

pub use bat::{
    local_search, optimize, update_bat, update_loudness_pulse, Bat, BatConfig, Bounds, OptimizeResult, Swarm,
};
pub use data::{
    add_noise, generate_dataset, load_expression_table, noise_multiplier, normalize,
    small_artificial_network, sos_truth, write_expression_table, Delimiter, ExpressionTable, Manifest,
    NoiseSpec, NormalizationWarning, Normalized, SOS_GENES,
};
pub use error::{GrnError, Result};
pub use eval::{
    aggregate_weights, compare_structures, edge_decision, ensemble_aggregate, ipe, sensitivity_specificity,
    ConfusionCounts, EnsembleStats, RegulationMatrix, SensSpec,
};
pub use inference::{
    decode_position, encode_params, extract_structure, gene_objective, infer_gene, infer_network,
    penalty_term, squared_error, sub_seed, GeneResult, InferenceConfig, InferredNetwork, Interval,
    SearchSpace,
};
pub use rnn::{predict_gene, sigmoid, Dataset, GeneParams, GrnModel, TimeSeries, TAU_MIN};
