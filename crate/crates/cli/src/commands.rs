use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use grnbat_core::{
    add_noise, compare_structures, edge_decision, ensemble_aggregate, extract_structure, generate_dataset,
    infer_network, ipe, normalize, sensitivity_specificity, sos_truth, sub_seed, write_expression_table,
    Dataset, EnsembleStats, ExpressionTable, GrnError, InferenceConfig, InferredNetwork, Manifest, NoiseSpec,
    RegulationMatrix, SOS_GENES,
};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::config::{RunConfig, SweepParameter};
use crate::error::{CliError, Result};
use crate::output::{ensure_dir, median, write_atomic, write_json, write_table, Format};

/// The bundled 8-gene SOS expression table.
pub const BUNDLED_SOS: &str = include_str!("../data/sos_standin.tsv");
pub const BUNDLED_SOS_SHA256: &str = "849babf4450ed1b967e6479b7e6ff2c0959424026b59022bd5b7540ed4671337";

const NOISE_STREAM: u64 = 0x006e_6f69_7365;

/// Settings shared by every command of one invocation.
#[derive(Debug, Clone)]
pub struct Context {
    pub config: RunConfig,
    pub digest: String,
    pub format: Format,
    pub out: PathBuf,
}

impl Context {
    pub fn new(config: RunConfig, format: Format, out: Option<PathBuf>) -> Self {
        let digest = config.digest();
        let out = out.or_else(|| config.out.clone()).unwrap_or_else(|| Path::new("runs").join(&config.name));
        Self { config, digest, format, out }
    }
}

#[derive(Debug, Serialize)]
struct Metadata<'a, T: Serialize> {
    tool: &'static str,
    version: &'static str,
    command: &'static str,
    seed: u64,
    config_digest: &'a str,
    config: &'a RunConfig,
    wall_time_seconds: f64,
    #[serde(flatten)]
    details: T,
}

fn write_metadata<T: Serialize>(
    ctx: &Context,
    dir: &Path,
    command: &'static str,
    seed: u64,
    started: Instant,
    details: T,
) -> Result<()> {
    let meta = Metadata {
        tool: "grnbat",
        version: env!("CARGO_PKG_VERSION"),
        command,
        seed,
        config_digest: &ctx.digest,
        config: &ctx.config,
        wall_time_seconds: started.elapsed().as_secs_f64(),
        details,
    };
    write_json(&dir.join("run.json"), &meta)
}

fn gene_names(n: usize) -> Vec<String> {
    (1..=n).map(|i| format!("g{i}")).collect()
}

fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Synthetic dataset described by the `[data]` section, noise included.
pub fn synthetic_dataset(config: &RunConfig, seed: u64) -> Result<Dataset> {
    let model = config.model()?;
    let data = generate_dataset(&model, config.data.series, config.data.samples, seed)?;
    if config.data.noise_percent > 0.0 {
        let spec = NoiseSpec {
            percent: config.data.noise_percent,
            seed: config.data.noise_seed.unwrap_or_else(|| sub_seed(seed, NOISE_STREAM)),
        };
        return Ok(add_noise(&data, spec)?);
    }
    Ok(data)
}

fn write_dataset(
    dir: &Path,
    dataset: &Dataset,
    names: &[String],
    times: Option<&[Vec<f64>]>,
    stem: &str,
    mut manifest: Manifest,
) -> Result<PathBuf> {
    ensure_dir(dir)?;
    manifest.series.clear();
    for (k, s) in dataset.series().iter().enumerate() {
        let mut table = ExpressionTable::from_series(s, names.to_vec())?;
        if let Some(t) = times {
            table = ExpressionTable::new(table.gene_names, t[k].clone(), table.values)?;
        }
        let file = format!("{stem}_{:02}.tsv", k + 1);
        write_expression_table(dir.join(&file), &table)?;
        manifest.series.push(file.into());
    }
    let path = dir.join("manifest.json");
    manifest.save(&path)?;
    Ok(path)
}

#[derive(Debug)]
pub struct GenerateOutcome {
    pub manifest_path: PathBuf,
    pub dataset: Dataset,
}

/// Simulates the configured model and writes one file per series plus a manifest.
pub fn generate(ctx: &Context, seed: u64) -> Result<GenerateOutcome> {
    let started = Instant::now();
    let dataset = synthetic_dataset(&ctx.config, seed)?;
    let names = gene_names(dataset.gene_count());
    let noisy = ctx.config.data.noise_percent > 0.0;
    let manifest = Manifest {
        format_version: Manifest::FORMAT_VERSION,
        delta_t: dataset.delta_t(),
        gene_names: names.clone(),
        series: Vec::new(),
        source: ctx.config.model_source(),
        seed: Some(seed),
        noise_percent: noisy.then_some(ctx.config.data.noise_percent),
        noise_seed: noisy.then(|| ctx.config.data.noise_seed.unwrap_or_else(|| sub_seed(seed, NOISE_STREAM))),
        config_digest: Some(ctx.digest.clone()),
    };
    let manifest_path = write_dataset(&ctx.out, &dataset, &names, None, "series", manifest)?;
    #[derive(Serialize)]
    struct Details {
        series: usize,
        samples: usize,
        model_source: String,
    }
    write_metadata(
        ctx,
        &ctx.out,
        "generate",
        seed,
        started,
        Details {
            series: ctx.config.data.series,
            samples: ctx.config.data.samples,
            model_source: ctx.config.model_source(),
        },
    )?;
    Ok(GenerateOutcome { manifest_path, dataset })
}

/// Writes a noisy copy of the dataset behind `manifest_path` into `ctx.out`.
pub fn noise(ctx: &Context, manifest_path: &Path, percent: f64, seed: u64) -> Result<PathBuf> {
    let started = Instant::now();
    let manifest = Manifest::load(manifest_path)?;
    let tables = manifest.load_tables(manifest_path)?;
    let dataset = manifest.load_dataset(manifest_path)?;
    let noisy = add_noise(&dataset, NoiseSpec { percent, seed })?;
    let times: Vec<Vec<f64>> = tables.iter().map(|t| t.sample_times.clone()).collect();
    let mut out_manifest = manifest.clone();
    out_manifest.noise_percent = Some(percent);
    out_manifest.noise_seed = Some(seed);
    out_manifest.config_digest = Some(ctx.digest.clone());
    let stem = format!("series_ns{percent}");
    let path = write_dataset(&ctx.out, &noisy, &manifest.gene_names, Some(&times), &stem, out_manifest)?;
    #[derive(Serialize)]
    struct Details<'a> {
        input_manifest: &'a Path,
        noise_percent: f64,
    }
    write_metadata(
        ctx,
        &ctx.out,
        "noise",
        seed,
        started,
        Details { input_manifest: manifest_path, noise_percent: percent },
    )?;
    Ok(path)
}

/// Reference network for scoring.
#[derive(Debug, Clone, PartialEq)]
pub enum Truth {
    Weights(Vec<Vec<f64>>),
    Structure(RegulationMatrix),
}

#[derive(Deserialize)]
struct TruthFile {
    weights: Option<Vec<Vec<f64>>>,
    structure: Option<Vec<Vec<i8>>>,
    genes: Option<Vec<grnbat_core::GeneParams>>,
}

impl Truth {
    /// `table1`, `sos`, or a JSON file with a `weights`, `structure` or `genes` field.
    pub fn load(spec: &str) -> Result<Self> {
        match spec {
            "table1" => Ok(Truth::Weights(grnbat_core::small_artificial_network().weight_matrix())),
            "sos" => Ok(Truth::Structure(sos_truth())),
            path => {
                let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
                let f: TruthFile =
                    serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{path}: {e}")))?;
                if let Some(w) = f.weights {
                    Ok(Truth::Weights(w))
                } else if let Some(g) = f.genes {
                    Ok(Truth::Weights(g.into_iter().map(|g| g.weights).collect()))
                } else if let Some(s) = f.structure {
                    Ok(Truth::Structure(RegulationMatrix::new(s)?))
                } else {
                    Err(CliError::Config(format!("{path}: expected a weights, structure or genes field")))
                }
            }
        }
    }

    pub fn structure(&self) -> RegulationMatrix {
        match self {
            Truth::Weights(w) => extract_structure(w, 0.0),
            Truth::Structure(s) => s.clone(),
        }
    }
}

/// Structure and parameter scores of one inferred weight matrix.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub tp: usize,
    pub fp: usize,
    pub tn: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
    pub sensitivity: Option<f64>,
    pub specificity: Option<f64>,
    /// Only available when the truth carries weights.
    pub ipe: Option<f64>,
}

pub fn score(truth: &Truth, weights: &[Vec<f64>], threshold: f64, sign_strict: bool) -> Result<Metrics> {
    let inferred = extract_structure(weights, threshold);
    let c = compare_structures(&truth.structure(), &inferred, sign_strict)?;
    let s = sensitivity_specificity(&c);
    let ipe = match truth {
        Truth::Weights(w) => Some(ipe(w, weights)?),
        Truth::Structure(_) => None,
    };
    Ok(Metrics {
        tp: c.tp,
        fp: c.fp,
        tn: c.tn,
        fn_: c.fn_,
        sensitivity: s.sensitivity,
        specificity: s.specificity,
        ipe,
    })
}

#[derive(Serialize)]
struct ParamRow<'a> {
    seed: u64,
    config_digest: &'a str,
    gene: &'a str,
    parameter: String,
    value: f64,
}

#[derive(Serialize)]
struct HistoryRow<'a> {
    seed: u64,
    config_digest: &'a str,
    gene: &'a str,
    iteration: usize,
    best_fitness: f64,
}

#[derive(Serialize)]
struct EdgeRow<'a> {
    seed: u64,
    config_digest: &'a str,
    target: &'a str,
    regulator: &'a str,
    weight: f64,
    edge: i8,
}

/// One seed of an `infer` run.
#[derive(Debug, Clone)]
pub struct InferRun {
    pub seed: u64,
    pub network: InferredNetwork,
    pub structure: RegulationMatrix,
    pub metrics: Option<Metrics>,
    pub wall_time_seconds: f64,
}

impl InferRun {
    pub fn max_gene_fitness(&self) -> f64 {
        self.network.per_gene.iter().map(|g| g.fitness).fold(f64::NEG_INFINITY, f64::max)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SummaryRow {
    pub seed: u64,
    pub config_digest: String,
    pub max_gene_fitness: f64,
    pub tp: Option<usize>,
    pub fp: Option<usize>,
    pub tn: Option<usize>,
    #[serde(rename = "fn")]
    pub fn_: Option<usize>,
    pub sensitivity: Option<f64>,
    pub specificity: Option<f64>,
    pub ipe: Option<f64>,
}

/// Median and best-seed statistics over the seeds of one `infer` call.
#[derive(Debug, Clone, Serialize)]
pub struct SeedSummary {
    pub seeds: Vec<u64>,
    pub median_max_gene_fitness: Option<f64>,
    pub median_sensitivity: Option<f64>,
    pub median_specificity: Option<f64>,
    pub median_fp: Option<f64>,
    pub median_fn: Option<f64>,
    pub median_ipe: Option<f64>,
    /// Seed with the fewest structure errors, then the lowest IPE, then the lowest fitness.
    pub best_seed: Option<u64>,
    pub best_sensitivity: Option<f64>,
    pub best_specificity: Option<f64>,
    pub best_ipe: Option<f64>,
}

fn summarize(runs: &[InferRun]) -> SeedSummary {
    let col = |f: &dyn Fn(&InferRun) -> Option<f64>| -> Option<f64> {
        let v: Vec<f64> = runs.iter().filter_map(f).collect();
        if v.len() == runs.len() {
            median(&v)
        } else {
            None
        }
    };
    let best = runs.iter().min_by(|a, b| {
        let key = |r: &InferRun| {
            let m = r.metrics;
            (
                m.map_or(usize::MAX, |m| m.fp + m.fn_),
                m.and_then(|m| m.ipe).unwrap_or(f64::INFINITY),
                r.max_gene_fitness(),
            )
        };
        let (ka, kb) = (key(a), key(b));
        ka.0.cmp(&kb.0).then(ka.1.total_cmp(&kb.1)).then(ka.2.total_cmp(&kb.2))
    });
    SeedSummary {
        seeds: runs.iter().map(|r| r.seed).collect(),
        median_max_gene_fitness: col(&|r| Some(r.max_gene_fitness())),
        median_sensitivity: col(&|r| r.metrics.and_then(|m| m.sensitivity)),
        median_specificity: col(&|r| r.metrics.and_then(|m| m.specificity)),
        median_fp: col(&|r| r.metrics.map(|m| m.fp as f64)),
        median_fn: col(&|r| r.metrics.map(|m| m.fn_ as f64)),
        median_ipe: col(&|r| r.metrics.and_then(|m| m.ipe)),
        best_seed: best.map(|r| r.seed),
        best_sensitivity: best.and_then(|r| r.metrics.and_then(|m| m.sensitivity)),
        best_specificity: best.and_then(|r| r.metrics.and_then(|m| m.specificity)),
        best_ipe: best.and_then(|r| r.metrics.and_then(|m| m.ipe)),
    }
}

#[derive(Debug, Clone)]
pub struct InferOutcome {
    pub runs: Vec<InferRun>,
    pub summary: SeedSummary,
}

fn write_network(
    ctx: &Context,
    dir: &Path,
    seed: u64,
    names: &[String],
    net: &InferredNetwork,
    structure: &RegulationMatrix,
) -> Result<()> {
    let d = ctx.digest.as_str();
    let mut params = Vec::new();
    let mut history = Vec::new();
    let mut edges = Vec::new();
    for (i, (g, name)) in net.per_gene.iter().zip(names).enumerate() {
        for (j, w) in g.params.weights.iter().enumerate() {
            params.push(ParamRow {
                seed,
                config_digest: d,
                gene: name,
                parameter: format!("w_{}", names[j]),
                value: *w,
            });
            edges.push(EdgeRow {
                seed,
                config_digest: d,
                target: name,
                regulator: &names[j],
                weight: *w,
                edge: structure.get(i, j),
            });
        }
        for (p, v) in [("beta", g.params.beta), ("tau", g.params.tau), ("fitness", g.fitness)] {
            params.push(ParamRow { seed, config_digest: d, gene: name, parameter: p.into(), value: v });
        }
        for (t, f) in g.fitness_history.iter().enumerate() {
            history.push(HistoryRow { seed, config_digest: d, gene: name, iteration: t, best_fitness: *f });
        }
    }
    write_table(dir, "params", ctx.format, &params)?;
    write_table(dir, "history", ctx.format, &history)?;
    write_table(dir, "structure", ctx.format, &edges)?;
    Ok(())
}

#[derive(Serialize)]
struct InferDetails<'a> {
    gene_names: &'a [String],
    inference: &'a InferenceConfig,
    weights: Vec<Vec<f64>>,
    per_gene_fitness: Vec<f64>,
    per_gene_iterations: Vec<usize>,
    structure: &'a RegulationMatrix,
    metrics: Option<Metrics>,
}

/// Fits `dataset` once per seed and writes one directory per seed plus a summary.
pub fn infer(
    ctx: &Context,
    dataset: &Dataset,
    names: &[String],
    seeds: &[u64],
    truth: Option<&Truth>,
) -> Result<InferOutcome> {
    if seeds.is_empty() {
        return Err(CliError::Config("no seeds given".into()));
    }
    let n = dataset.gene_count();
    if names.len() != n {
        return Err(
            GrnError::DimensionMismatch { context: "gene names", expected: n, actual: names.len() }.into()
        );
    }
    let mut runs = Vec::with_capacity(seeds.len());
    for &seed in seeds {
        let started = Instant::now();
        let cfg = ctx.config.artificial_inference(n, seed)?;
        let network = infer_network(dataset, &cfg)?;
        let weights = network.weight_matrix();
        let structure = extract_structure(&weights, cfg.prune_threshold);
        let metrics = truth.map(|t| score(t, &weights, cfg.prune_threshold, false)).transpose()?;
        let dir = ctx.out.join(format!("seed-{seed}"));
        ensure_dir(&dir)?;
        write_network(ctx, &dir, seed, names, &network, &structure)?;
        write_metadata(
            ctx,
            &dir,
            "infer",
            seed,
            started,
            InferDetails {
                gene_names: names,
                inference: &cfg,
                weights,
                per_gene_fitness: network.per_gene.iter().map(|g| g.fitness).collect(),
                per_gene_iterations: network.per_gene.iter().map(|g| g.iterations_used).collect(),
                structure: &structure,
                metrics,
            },
        )?;
        runs.push(InferRun {
            seed,
            network,
            structure,
            metrics,
            wall_time_seconds: started.elapsed().as_secs_f64(),
        });
    }
    let rows: Vec<SummaryRow> = runs
        .iter()
        .map(|r| SummaryRow {
            seed: r.seed,
            config_digest: ctx.digest.clone(),
            max_gene_fitness: r.max_gene_fitness(),
            tp: r.metrics.map(|m| m.tp),
            fp: r.metrics.map(|m| m.fp),
            tn: r.metrics.map(|m| m.tn),
            fn_: r.metrics.map(|m| m.fn_),
            sensitivity: r.metrics.and_then(|m| m.sensitivity),
            specificity: r.metrics.and_then(|m| m.specificity),
            ipe: r.metrics.and_then(|m| m.ipe),
        })
        .collect();
    write_table(&ctx.out, "summary", ctx.format, &rows)?;
    let summary = summarize(&runs);
    write_json(&ctx.out.join("summary.json"), &summary)?;
    Ok(InferOutcome { runs, summary })
}

/// Loads the dataset behind a manifest together with its gene names.
pub fn load_manifest(path: &Path) -> Result<(Dataset, Vec<String>)> {
    let m = Manifest::load(path)?;
    let data = m.load_dataset(path)?;
    Ok((data, m.gene_names))
}

#[derive(Deserialize)]
struct ReportFile {
    weights: Vec<Vec<f64>>,
    #[serde(default)]
    inference: Option<ReportInference>,
}

#[derive(Deserialize)]
struct ReportInference {
    prune_threshold: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct EvalRecord {
    pub format_version: u32,
    pub report: PathBuf,
    pub truth: String,
    pub threshold: f64,
    pub sign_strict: bool,
    pub tp: usize,
    pub fp: usize,
    pub tn: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
    pub sensitivity: Option<f64>,
    pub specificity: Option<f64>,
    pub ipe: Option<f64>,
}

impl EvalRecord {
    pub fn metrics(&self) -> Metrics {
        Metrics {
            tp: self.tp,
            fp: self.fp,
            tn: self.tn,
            fn_: self.fn_,
            sensitivity: self.sensitivity,
            specificity: self.specificity,
            ipe: self.ipe,
        }
    }
}

/// Scores a report (any JSON with a `weights` matrix, such as an `infer` run.json).
pub fn eval(
    truth_spec: &str,
    report: &Path,
    threshold: Option<f64>,
    sign_strict: bool,
) -> Result<EvalRecord> {
    let truth = Truth::load(truth_spec)?;
    let text = fs::read_to_string(report).map_err(|e| CliError::io(report, e))?;
    let r: ReportFile =
        serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", report.display())))?;
    let threshold = threshold.or(r.inference.map(|i| i.prune_threshold)).unwrap_or(0.05);
    let metrics = score(&truth, &r.weights, threshold, sign_strict)?;
    Ok(EvalRecord {
        format_version: 1,
        report: report.to_path_buf(),
        truth: truth_spec.to_string(),
        threshold,
        sign_strict,
        tp: metrics.tp,
        fp: metrics.fp,
        tn: metrics.tn,
        fn_: metrics.fn_,
        sensitivity: metrics.sensitivity,
        specificity: metrics.specificity,
        ipe: metrics.ipe,
    })
}

pub fn write_eval(record: &EvalRecord, dir: &Path, format: Format) -> Result<PathBuf> {
    write_table(dir, "metrics", format, std::slice::from_ref(record))
}

/// One run of one sweep cell. Column names are fixed for every sweep parameter.
#[derive(Debug, Clone, Serialize)]
pub struct SweepRow {
    pub parameter: &'static str,
    pub population: usize,
    pub iterations: usize,
    pub series_count: usize,
    pub alpha: f64,
    pub gamma: f64,
    pub seed: u64,
    pub config_digest: String,
    pub max_gene_fitness: f64,
    pub ipe: Option<f64>,
    pub tp: usize,
    pub fp: usize,
    pub tn: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
    /// Iterations until every gene reached the stop fitness; empty if one never did.
    pub iterations_to_stop: Option<usize>,
    pub history_non_increasing: bool,
}

/// Medians over the runs of one sweep cell.
#[derive(Debug, Clone, Serialize)]
pub struct SweepCell {
    pub parameter: &'static str,
    pub population: usize,
    pub iterations: usize,
    pub series_count: usize,
    pub alpha: f64,
    pub gamma: f64,
    pub runs: usize,
    pub median_max_gene_fitness: Option<f64>,
    pub median_ipe: Option<f64>,
    pub median_fp: Option<f64>,
    pub median_tn: Option<f64>,
    pub median_fn: Option<f64>,
    /// Empty when at least half the runs never reached the stop fitness.
    pub median_iterations_to_stop: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct SweepOutcome {
    pub rows: Vec<SweepRow>,
    pub cells: Vec<SweepCell>,
}

#[derive(Debug, Clone, Copy)]
struct CellSetting {
    population: usize,
    iterations: usize,
    series_count: usize,
    alpha: f64,
    gamma: f64,
}

fn as_count(v: f64, what: &str) -> Result<usize> {
    if v >= 1.0 && v.fract() == 0.0 {
        Ok(v as usize)
    } else {
        Err(CliError::Config(format!("{what} value {v} is not a positive integer")))
    }
}

/// Runs every cell of the configured sweep over `seeds`.
///
/// `sweep_<parameter>.<ext>` holds one row per run and
/// `sweep_<parameter>_cells.<ext>` the per-cell medians; both are rewritten
/// after each finished cell.
pub fn sweep(ctx: &Context, parameter: SweepParameter, seeds: &[u64], truth: &Truth) -> Result<SweepOutcome> {
    let started = Instant::now();
    let spec = &ctx.config.sweep;
    if seeds.is_empty() {
        return Err(CliError::Config("no seeds given".into()));
    }
    let mut base_cfg = ctx.config.clone();
    if parameter == SweepParameter::SeriesCount {
        let max = spec.values.iter().copied().fold(0.0, f64::max);
        base_cfg.data.series = base_cfg.data.series.max(as_count(max, "series_count")?);
    }
    let data = synthetic_dataset(&base_cfg, ctx.config.data_seed())?;
    let n = data.gene_count();
    let template = ctx.config.artificial_inference(n, 0)?;
    let base = CellSetting {
        population: template.bat.population,
        iterations: template.bat.max_iterations,
        series_count: ctx.config.data.series,
        alpha: template.bat.alpha,
        gamma: template.bat.gamma,
    };
    let mut cells = Vec::new();
    match parameter {
        SweepParameter::AlphaGammaGrid => {
            for &alpha in &spec.alpha_values {
                for &gamma in &spec.gamma_values {
                    cells.push(CellSetting { alpha, gamma, ..base });
                }
            }
        }
        _ => {
            for &v in &spec.values {
                let mut c = base;
                match parameter {
                    SweepParameter::Population => c.population = as_count(v, "population")?,
                    SweepParameter::Iterations => c.iterations = as_count(v, "iterations")?,
                    SweepParameter::SeriesCount => c.series_count = as_count(v, "series_count")?,
                    SweepParameter::AlphaGammaGrid => unreachable!(),
                }
                cells.push(c);
            }
        }
    }
    if cells.is_empty() {
        return Err(CliError::Config("sweep has no values".into()));
    }
    ensure_dir(&ctx.out)?;
    let name = parameter.as_str();
    let mut rows: Vec<SweepRow> = Vec::new();
    let mut summaries: Vec<SweepCell> = Vec::new();
    for cell in &cells {
        let cell_data = data.truncated(cell.series_count)?;
        let cell_rows = seeds
            .par_iter()
            .map(|&seed| -> Result<SweepRow> {
                let mut cfg = ctx.config.artificial_inference(n, seed)?;
                cfg.bat.population = cell.population;
                cfg.bat.max_iterations = cell.iterations;
                cfg.bat.alpha = cell.alpha;
                cfg.bat.gamma = cell.gamma;
                cfg.bat.target_fitness = spec.stop_fitness;
                cfg.validate(n)?;
                let net = infer_network(&cell_data, &cfg)?;
                let m = score(truth, &net.weight_matrix(), cfg.prune_threshold, false)?;
                let reached = net.per_gene.iter().all(|g| g.fitness <= spec.stop_fitness);
                Ok(SweepRow {
                    parameter: name,
                    population: cell.population,
                    iterations: cell.iterations,
                    series_count: cell.series_count,
                    alpha: cell.alpha,
                    gamma: cell.gamma,
                    seed,
                    config_digest: ctx.digest.clone(),
                    max_gene_fitness: net
                        .per_gene
                        .iter()
                        .map(|g| g.fitness)
                        .fold(f64::NEG_INFINITY, f64::max),
                    ipe: m.ipe,
                    tp: m.tp,
                    fp: m.fp,
                    tn: m.tn,
                    fn_: m.fn_,
                    iterations_to_stop: reached
                        .then(|| net.per_gene.iter().map(|g| g.iterations_used).max().unwrap_or(0)),
                    history_non_increasing: net
                        .per_gene
                        .iter()
                        .all(|g| g.fitness_history.windows(2).all(|w| w[1] <= w[0])),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        summaries.push(cell_summary(name, cell, &cell_rows));
        rows.extend(cell_rows);
        write_table(&ctx.out, &format!("sweep_{name}"), ctx.format, &rows)?;
        write_table(&ctx.out, &format!("sweep_{name}_cells"), ctx.format, &summaries)?;
    }
    #[derive(Serialize)]
    struct Details<'a> {
        parameter: &'a str,
        seeds: &'a [u64],
        cells: &'a [SweepCell],
    }
    write_metadata(
        ctx,
        &ctx.out,
        "sweep",
        ctx.config.seed,
        started,
        Details { parameter: name, seeds, cells: &summaries },
    )?;
    Ok(SweepOutcome { rows, cells: summaries })
}

fn cell_summary(name: &'static str, cell: &CellSetting, rows: &[SweepRow]) -> SweepCell {
    let med = |f: &dyn Fn(&SweepRow) -> f64| median(&rows.iter().map(f).collect::<Vec<_>>());
    let ipes: Vec<f64> = rows.iter().filter_map(|r| r.ipe).collect();
    let iters = med(&|r| r.iterations_to_stop.map_or(f64::INFINITY, |i| i as f64));
    SweepCell {
        parameter: name,
        population: cell.population,
        iterations: cell.iterations,
        series_count: cell.series_count,
        alpha: cell.alpha,
        gamma: cell.gamma,
        runs: rows.len(),
        median_max_gene_fitness: med(&|r| r.max_gene_fitness),
        median_ipe: if ipes.len() == rows.len() { median(&ipes) } else { None },
        median_fp: med(&|r| r.fp as f64),
        median_tn: med(&|r| r.tn as f64),
        median_fn: med(&|r| r.fn_ as f64),
        median_iterations_to_stop: iters.filter(|v| v.is_finite()),
    }
}

/// Expression table for `sos`: the given file or the bundled one, hash-checked.
pub fn sos_table(input: Option<&Path>, expected_sha256: Option<&str>) -> Result<(ExpressionTable, String)> {
    let (text, expected) = match input {
        Some(p) => (
            fs::read_to_string(p).map_err(|e| CliError::io(p, e))?,
            expected_sha256.map(str::to_ascii_lowercase),
        ),
        None => (BUNDLED_SOS.to_string(), Some(BUNDLED_SOS_SHA256.to_string())),
    };
    let digest = sha256_hex(text.as_bytes());
    if let Some(e) = expected {
        if e != digest {
            return Err(CliError::Config(format!(
                "expression file sha256 {digest} does not match expected {e}"
            )));
        }
    }
    let table = ExpressionTable::parse(&text)?;
    Ok((order_sos_genes(table)?, digest))
}

fn order_sos_genes(table: ExpressionTable) -> Result<ExpressionTable> {
    if table.gene_count() != SOS_GENES.len() {
        return Err(GrnError::DimensionMismatch {
            context: "SOS gene count",
            expected: SOS_GENES.len(),
            actual: table.gene_count(),
        }
        .into());
    }
    let mut order = Vec::with_capacity(SOS_GENES.len());
    for g in SOS_GENES {
        let pos = table
            .gene_names
            .iter()
            .position(|n| n.eq_ignore_ascii_case(g))
            .ok_or_else(|| CliError::Config(format!("SOS table has no column for {g}")))?;
        order.push(pos);
    }
    let values = table.values.iter().map(|row| order.iter().map(|&j| row[j]).collect()).collect();
    Ok(ExpressionTable::new(SOS_GENES.iter().map(|s| s.to_string()).collect(), table.sample_times, values)?)
}

#[derive(Debug, Clone, Serialize)]
pub struct SosEdgeRow {
    pub seed: u64,
    pub config_digest: String,
    pub target: &'static str,
    pub regulator: &'static str,
    pub mean: f64,
    pub std: f64,
    pub confidence: f64,
    pub edge: i8,
    pub known: i8,
}

/// Ensemble result for one master seed.
#[derive(Debug, Clone, Serialize)]
pub struct SosResult {
    pub seed: u64,
    pub runs: usize,
    pub confidence_threshold: f64,
    pub stats: EnsembleStats,
    pub structure: RegulationMatrix,
    pub presence: Metrics,
    pub sign_strict: Metrics,
    /// Known regulations present in the ensemble structure, sign ignored.
    pub recovered_known: usize,
    pub known_total: usize,
}

#[derive(Debug, Clone)]
pub struct SosOutcome {
    pub results: Vec<SosResult>,
    pub input_sha256: String,
    pub best_seed: u64,
}

fn matrix_text(m: &RegulationMatrix) -> String {
    let mut out = String::from("target");
    for g in SOS_GENES {
        out.push('\t');
        out.push_str(g);
    }
    out.push('\n');
    for (g, row) in SOS_GENES.iter().zip(m.rows()) {
        out.push_str(g);
        for v in row {
            out.push('\t');
            out.push_str(&v.to_string());
        }
        out.push('\n');
    }
    out
}

/// Normalises the SOS table, runs the configured number of inferences per seed
/// and aggregates them into a confidence-thresholded structure.
pub fn sos(ctx: &Context, input: Option<&Path>, seeds: &[u64]) -> Result<SosOutcome> {
    if seeds.is_empty() {
        return Err(CliError::Config("no seeds given".into()));
    }
    let runs = ctx.config.sos.runs;
    if runs == 0 {
        return Err(CliError::Config("sos.runs must be at least 1".into()));
    }
    let threshold = ctx.config.sos.confidence_threshold;
    if !(0.0..=1.0).contains(&threshold) {
        return Err(CliError::Config(format!("sos.confidence_threshold {threshold} outside [0, 1]")));
    }
    let input = input.or(ctx.config.sos.input.as_deref());
    let (table, input_sha256) = sos_table(input, ctx.config.sos.sha256.as_deref())?;
    let normalized = normalize(&table)?;
    for w in &normalized.warnings {
        eprintln!("warning: {}: {}", w.gene, w.message);
    }
    let truth = sos_truth();
    let mut results = Vec::new();
    for &seed in seeds {
        let started = Instant::now();
        let networks = (0..runs)
            .into_par_iter()
            .map(|r| -> Result<InferredNetwork> {
                let cfg = ctx.config.sos_inference(sub_seed(seed, r as u64))?;
                Ok(infer_network(&normalized.dataset, &cfg)?)
            })
            .collect::<Result<Vec<_>>>()?;
        let stats = ensemble_aggregate(&networks)?;
        let structure = edge_decision(&stats, threshold);
        let presence = metrics_for(&truth, &structure, false)?;
        let strict = metrics_for(&truth, &structure, true)?;
        let result = SosResult {
            seed,
            runs,
            confidence_threshold: threshold,
            stats,
            structure,
            presence,
            sign_strict: strict,
            recovered_known: presence.tp,
            known_total: truth.edge_count(),
        };
        let dir = ctx.out.join(format!("seed-{seed}"));
        ensure_dir(&dir)?;
        let mut edges = Vec::new();
        for (i, target) in SOS_GENES.iter().enumerate() {
            for (j, regulator) in SOS_GENES.iter().enumerate() {
                edges.push(SosEdgeRow {
                    seed,
                    config_digest: ctx.digest.clone(),
                    target,
                    regulator,
                    mean: result.stats.mean[i][j],
                    std: result.stats.std[i][j],
                    confidence: result.stats.confidence[i][j],
                    edge: result.structure.get(i, j),
                    known: truth.get(i, j),
                });
            }
        }
        write_table(&dir, "ensemble", ctx.format, &edges)?;
        write_atomic(&dir.join("structure.tsv"), matrix_text(&result.structure).as_bytes())?;
        #[derive(Serialize)]
        struct Details<'a> {
            input_sha256: &'a str,
            gene_names: [&'static str; 8],
            normalization_warnings: &'a [grnbat_core::NormalizationWarning],
            result: &'a SosResult,
        }
        write_metadata(
            ctx,
            &dir,
            "sos",
            seed,
            started,
            Details {
                input_sha256: &input_sha256,
                gene_names: SOS_GENES,
                normalization_warnings: &normalized.warnings,
                result: &result,
            },
        )?;
        results.push(result);
    }
    let best_seed = results
        .iter()
        .max_by(|a, b| {
            a.recovered_known
                .cmp(&b.recovered_known)
                .then(b.presence.fp.cmp(&a.presence.fp))
                .then(b.seed.cmp(&a.seed))
        })
        .map(|r| r.seed)
        .expect("at least one seed");
    #[derive(Serialize)]
    struct Summary<'a> {
        seeds: &'a [u64],
        config_digest: &'a str,
        input_sha256: &'a str,
        best_seed: u64,
        recovered_known: Vec<usize>,
        false_positives: Vec<usize>,
    }
    write_json(
        &ctx.out.join("summary.json"),
        &Summary {
            seeds,
            config_digest: &ctx.digest,
            input_sha256: &input_sha256,
            best_seed,
            recovered_known: results.iter().map(|r| r.recovered_known).collect(),
            false_positives: results.iter().map(|r| r.presence.fp).collect(),
        },
    )?;
    Ok(SosOutcome { results, input_sha256, best_seed })
}

fn metrics_for(truth: &RegulationMatrix, inferred: &RegulationMatrix, strict: bool) -> Result<Metrics> {
    let c = compare_structures(truth, inferred, strict)?;
    let s = sensitivity_specificity(&c);
    Ok(Metrics {
        tp: c.tp,
        fp: c.fp,
        tn: c.tn,
        fn_: c.fn_,
        sensitivity: s.sensitivity,
        specificity: s.specificity,
        ipe: None,
    })
}
