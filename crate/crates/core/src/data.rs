//! Built-in benchmark networks, synthetic data generation, noise injection and
//! delimited expression files.
//!
//! # Expression file format
//!
//! Plain text, tab- or comma-delimited (detected from the header line). The
//! header names the genes, optionally preceded by a `time` column. Every
//! following line is one sample, in increasing time order, holding decimal
//! reals (scientific notation accepted). [`ExpressionTable::to_delimited`]
//! always writes a `time` column and prints values in shortest round-trip
//! form, so write-then-read reproduces every bit.
//!
//! # Manifest format
//!
//! A JSON document listing the series files of a dataset (see [`Manifest`]).
//! Relative paths are resolved against the manifest's directory.

use std::collections::HashSet;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{GrnError, Result};
use crate::eval::RegulationMatrix;
use crate::rnn::{Dataset, GeneParams, GrnModel, TimeSeries};

/// The 4-gene artificial network used as the noise-free benchmark.
pub fn small_artificial_network() -> GrnModel {
    let genes = vec![
        GeneParams::new(vec![20.0, -20.0, 0.0, 0.0], 0.0, 10.0),
        GeneParams::new(vec![15.0, -10.0, 0.0, 0.0], -5.0, 5.0),
        GeneParams::new(vec![0.0, -8.0, 12.0, 0.0], 0.0, 5.0),
        GeneParams::new(vec![0.0, 0.0, 8.0, -12.0], 0.0, 5.0),
    ];
    GrnModel::new(genes, 1.0).expect("benchmark model is valid")
}

/// Genes of the E. coli SOS DNA-repair network, in matrix order.
pub const SOS_GENES: [&str; 8] = ["uvrD", "lexA", "umuDC", "recA", "uvrA", "uvrY", "ruvA", "polB"];

/// Known SOS regulations: lexA represses all eight genes (itself included)
/// and recA acts positively on lexA. Row = target, column = regulator.
pub fn sos_truth() -> RegulationMatrix {
    let mut m = RegulationMatrix::zeros(SOS_GENES.len());
    for target in 0..SOS_GENES.len() {
        m.set(target, 1, -1);
    }
    m.set(1, 3, 1);
    m
}

/// `M` series of `T` samples each, started from uniform random states in `[0, 1]^N`.
pub fn generate_dataset(model: &GrnModel, series: usize, samples: usize, seed: u64) -> Result<Dataset> {
    if series == 0 || samples == 0 {
        return Err(GrnError::InvalidConfig("series and samples must both be positive".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = model.gene_count();
    let list = (0..series)
        .map(|_| {
            let init: Vec<f64> = (0..n).map(|_| rng.random::<f64>()).collect();
            model.simulate(&init, samples)
        })
        .collect::<Result<Vec<_>>>()?;
    Dataset::new(list)
}

/// Multiplicative uniform noise of `percent` percent.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseSpec {
    pub percent: f64,
    pub seed: u64,
}

/// `d * [(1 - ns/100) + 2 u ns/100]` with `u ~ U[0, 1]`.
#[inline]
pub fn noise_multiplier(percent: f64, u: f64) -> f64 {
    let frac = percent / 100.0;
    (1.0 - frac) + 2.0 * u * frac
}

/// Applies independent multiplicative noise to every value, series by series and row by row.
pub fn add_noise(dataset: &Dataset, spec: NoiseSpec) -> Result<Dataset> {
    if !(spec.percent >= 0.0) {
        return Err(GrnError::InvalidConfig(format!("noise percent {} must be nonnegative", spec.percent)));
    }
    if spec.percent == 0.0 {
        return Ok(dataset.clone());
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let series = dataset
        .series()
        .iter()
        .map(|s| s.map_values(|d| d * noise_multiplier(spec.percent, rng.random::<f64>())))
        .collect::<Result<Vec<_>>>()?;
    Dataset::new(series)
}

/// In-memory image of an expression file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExpressionTable {
    pub gene_names: Vec<String>,
    pub sample_times: Vec<f64>,
    /// One row per sample.
    pub values: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Delimiter {
    Tab,
    Comma,
}

impl Delimiter {
    fn as_char(self) -> char {
        match self {
            Delimiter::Tab => '\t',
            Delimiter::Comma => ',',
        }
    }

    fn detect(header: &str) -> Self {
        if header.contains('\t') {
            Delimiter::Tab
        } else if header.contains(',') {
            Delimiter::Comma
        } else {
            Delimiter::Tab
        }
    }
}

impl ExpressionTable {
    pub fn new(gene_names: Vec<String>, sample_times: Vec<f64>, values: Vec<Vec<f64>>) -> Result<Self> {
        if gene_names.is_empty() {
            return Err(GrnError::Empty("expression table has no genes".into()));
        }
        if values.is_empty() {
            return Err(GrnError::Empty("expression table has no samples".into()));
        }
        let mut seen = HashSet::new();
        for name in &gene_names {
            if !seen.insert(name.as_str()) {
                return Err(GrnError::InvalidConfig(format!("duplicate gene name {name:?}")));
            }
        }
        GrnError::check_len("sample times", values.len(), sample_times.len())?;
        for row in &values {
            GrnError::check_len("expression row", gene_names.len(), row.len())?;
        }
        if let Some(w) = sample_times.windows(2).position(|w| !(w[0] < w[1])) {
            return Err(GrnError::InvalidConfig(format!(
                "sample times not strictly increasing at row {}",
                w + 1
            )));
        }
        Ok(Self { gene_names, sample_times, values })
    }

    /// Wraps one simulated series, timestamping rows at `t * delta_t`.
    pub fn from_series(series: &TimeSeries, gene_names: Vec<String>) -> Result<Self> {
        let times = (0..series.sample_count()).map(|t| t as f64 * series.delta_t()).collect();
        Self::new(gene_names, times, series.rows().map(<[f64]>::to_vec).collect())
    }

    pub fn gene_count(&self) -> usize {
        self.gene_names.len()
    }

    pub fn sample_count(&self) -> usize {
        self.values.len()
    }

    pub fn to_time_series(&self, delta_t: f64) -> Result<TimeSeries> {
        TimeSeries::from_rows(&self.values, delta_t)
    }

    /// Parses delimited text. Rows and columns in errors are 1-based file positions.
    pub fn parse(text: &str) -> Result<Self> {
        let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
        let (_, header) = lines.next().ok_or_else(|| GrnError::Empty("expression file is empty".into()))?;
        let delim = Delimiter::detect(header).as_char();
        let mut fields: Vec<String> = header.split(delim).map(|f| f.trim().to_string()).collect();
        let has_time = fields.first().is_some_and(|f| f.eq_ignore_ascii_case("time"));
        if has_time {
            fields.remove(0);
        }
        if let Some(pos) = fields.iter().position(String::is_empty) {
            return Err(GrnError::Parse {
                row: 1,
                column: pos + 1 + has_time as usize,
                message: "empty gene name".into(),
            });
        }
        let width = fields.len() + has_time as usize;
        let mut times = Vec::new();
        let mut values = Vec::new();
        for (line_no, line) in lines {
            let row = line_no + 1;
            let cells: Vec<&str> = line.split(delim).map(str::trim).collect();
            if cells.len() != width {
                return Err(GrnError::Parse {
                    row,
                    column: cells.len().min(width) + 1,
                    message: format!("expected {width} cells, found {}", cells.len()),
                });
            }
            let mut parsed = Vec::with_capacity(width);
            for (c, cell) in cells.iter().enumerate() {
                let v: f64 = cell.parse().map_err(|_| GrnError::Parse {
                    row,
                    column: c + 1,
                    message: if cell.is_empty() {
                        "missing value".into()
                    } else {
                        format!("not a number: {cell:?}")
                    },
                })?;
                if !v.is_finite() {
                    return Err(GrnError::Parse {
                        row,
                        column: c + 1,
                        message: format!("non-finite value {cell:?}"),
                    });
                }
                parsed.push(v);
            }
            if has_time {
                times.push(parsed.remove(0));
            } else {
                times.push(values.len() as f64);
            }
            values.push(parsed);
        }
        if values.is_empty() {
            return Err(GrnError::Empty("expression file has a header but no samples".into()));
        }
        Self::new(fields, times, values)
    }

    /// Writes the table with a leading `time` column.
    pub fn to_delimited(&self, delimiter: Delimiter) -> String {
        let d = delimiter.as_char();
        let mut out = String::from("time");
        for name in &self.gene_names {
            out.push(d);
            out.push_str(name);
        }
        out.push('\n');
        for (t, row) in self.sample_times.iter().zip(&self.values) {
            write!(out, "{t}").unwrap();
            for v in row {
                write!(out, "{d}{v}").unwrap();
            }
            out.push('\n');
        }
        out
    }
}

pub fn load_expression_table(path: impl AsRef<Path>) -> Result<ExpressionTable> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| GrnError::io(path, e))?;
    ExpressionTable::parse(&text)
}

pub fn write_expression_table(path: impl AsRef<Path>, table: &ExpressionTable) -> Result<()> {
    let path = path.as_ref();
    let delim = match path.extension().and_then(|e| e.to_str()) {
        Some("csv") => Delimiter::Comma,
        _ => Delimiter::Tab,
    };
    fs::write(path, table.to_delimited(delim)).map_err(|e| GrnError::io(path, e))
}

/// A constant gene column that could not be rescaled.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormalizationWarning {
    pub gene: String,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Normalized {
    pub table: ExpressionTable,
    /// Single-series dataset with unit time step.
    pub dataset: Dataset,
    /// Original `(min, max)` of each gene column.
    pub ranges: Vec<(f64, f64)>,
    pub warnings: Vec<NormalizationWarning>,
}

/// Per-gene min-max scaling to `[0, 1]`; constant columns become 0.5.
pub fn normalize(table: &ExpressionTable) -> Result<Normalized> {
    let n = table.gene_count();
    let mut ranges = vec![(f64::INFINITY, f64::NEG_INFINITY); n];
    for row in &table.values {
        for (r, v) in ranges.iter_mut().zip(row) {
            r.0 = r.0.min(*v);
            r.1 = r.1.max(*v);
        }
    }
    let mut warnings = Vec::new();
    for (name, (lo, hi)) in table.gene_names.iter().zip(&ranges) {
        if lo == hi {
            warnings.push(NormalizationWarning {
                gene: name.clone(),
                message: format!("constant column ({lo}) mapped to 0.5"),
            });
        }
    }
    let values: Vec<Vec<f64>> = table
        .values
        .iter()
        .map(|row| {
            row.iter()
                .zip(&ranges)
                .map(|(v, (lo, hi))| if lo == hi { 0.5 } else { (v - lo) / (hi - lo) })
                .collect()
        })
        .collect();
    let scaled = ExpressionTable::new(table.gene_names.clone(), table.sample_times.clone(), values)?;
    let dataset = Dataset::new(vec![scaled.to_time_series(1.0)?])?;
    Ok(Normalized { table: scaled, dataset, ranges, warnings })
}

/// Dataset index file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub format_version: u32,
    pub delta_t: f64,
    pub gene_names: Vec<String>,
    /// Series file paths, relative to the manifest unless absolute.
    pub series: Vec<PathBuf>,
    /// Where the data came from, e.g. `builtin:table1`.
    #[serde(default)]
    pub source: String,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub noise_percent: Option<f64>,
    #[serde(default)]
    pub noise_seed: Option<u64>,
    /// SHA-256 of the configuration that produced the data.
    #[serde(default)]
    pub config_digest: Option<String>,
}

impl Manifest {
    pub const FORMAT_VERSION: u32 = 1;

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| GrnError::io(path, e))?;
        let m: Manifest = serde_json::from_str(&text).map_err(|e| GrnError::Parse {
            row: e.line(),
            column: e.column(),
            message: e.to_string(),
        })?;
        if m.format_version != Self::FORMAT_VERSION {
            return Err(GrnError::InvalidConfig(format!(
                "unsupported manifest format_version {}",
                m.format_version
            )));
        }
        Ok(m)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let mut text = serde_json::to_string_pretty(self).expect("manifest serializes");
        text.push('\n');
        fs::write(path, text).map_err(|e| GrnError::io(path, e))
    }

    pub fn resolve(&self, manifest_path: &Path) -> Vec<PathBuf> {
        let base = manifest_path.parent().unwrap_or(Path::new("."));
        self.series.iter().map(|p| if p.is_absolute() { p.clone() } else { base.join(p) }).collect()
    }

    /// Reads every listed series.
    pub fn load_tables(&self, manifest_path: &Path) -> Result<Vec<ExpressionTable>> {
        self.resolve(manifest_path)
            .iter()
            .map(|p| {
                let t = load_expression_table(p)?;
                if t.gene_names != self.gene_names {
                    return Err(GrnError::InvalidConfig(format!(
                        "{} gene names do not match the manifest",
                        p.display()
                    )));
                }
                Ok(t)
            })
            .collect()
    }

    pub fn load_dataset(&self, manifest_path: &Path) -> Result<Dataset> {
        let series = self
            .load_tables(manifest_path)?
            .iter()
            .map(|t| t.to_time_series(self.delta_t))
            .collect::<Result<Vec<_>>>()?;
        Dataset::new(series)
    }
}
