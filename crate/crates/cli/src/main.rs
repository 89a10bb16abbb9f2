use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use grnbat_cli::commands::{self, Truth};
use grnbat_cli::config::SweepParameter;
use grnbat_cli::{CliError, Context, Format, Result, RunConfig};

/// Gene regulatory network inference with the Bat Algorithm.
#[derive(Debug, Parser)]
#[command(name = "grnbat", version)]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct Global {
    /// Experiment configuration (TOML).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Master seed; overrides the configuration.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Comma-separated seeds for multi-seed commands.
    #[arg(long, global = true, value_delimiter = ',')]
    seeds: Vec<u64>,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    format: Format,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Simulate the configured network and write its time series.
    Generate,
    /// Write a noisy copy of a generated dataset.
    Noise {
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long)]
        percent: f64,
    },
    /// Fit the network to a dataset, once per seed.
    Infer {
        #[arg(long)]
        manifest: PathBuf,
        /// `table1`, `sos` or a JSON file; adds structure and IPE scores.
        #[arg(long)]
        truth: Option<String>,
    },
    /// Score a saved weight matrix against a reference network.
    Eval {
        #[arg(long)]
        truth: String,
        /// JSON file with a `weights` field, e.g. an infer run.json.
        #[arg(long)]
        report: PathBuf,
        #[arg(long)]
        threshold: Option<f64>,
        /// Count a recovered edge only if its sign matches.
        #[arg(long)]
        sign_strict: bool,
    },
    /// Repeat inference over a grid of one setting.
    Sweep {
        #[arg(long)]
        parameter: Option<SweepParameter>,
        #[arg(long, default_value = "table1")]
        truth: String,
    },
    /// Ensemble inference on the 8-gene SOS expression data.
    Sos {
        /// Expression table; the bundled one is used otherwise.
        #[arg(long)]
        input: Option<PathBuf>,
        /// Expected SHA-256 of `--input`.
        #[arg(long)]
        sha256: Option<String>,
        #[arg(long)]
        runs: Option<usize>,
    },
}

fn run(cli: Cli) -> Result<()> {
    let g = cli.global;
    let mut config = match &g.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    if let Some(s) = g.seed {
        config.seed = s;
    }
    if let Command::Sos { input, sha256, runs } = &cli.command {
        if input.is_some() {
            config.sos.input = input.clone();
            config.sos.sha256 = sha256.clone();
        }
        if let Some(r) = runs {
            config.sos.runs = *r;
        }
    }
    let seeds = if g.seeds.is_empty() { vec![config.seed] } else { g.seeds.clone() };
    let ctx = Context::new(config, g.format, g.out);
    match cli.command {
        Command::Generate => {
            let o = commands::generate(&ctx, ctx.config.data_seed())?;
            println!("wrote {}", o.manifest_path.display());
        }
        Command::Noise { manifest, percent } => {
            let p = commands::noise(&ctx, &manifest, percent, ctx.config.seed)?;
            println!("wrote {}", p.display());
        }
        Command::Infer { manifest, truth } => {
            let truth = truth.as_deref().map(Truth::load).transpose()?;
            let (data, names) = commands::load_manifest(&manifest)?;
            let o = commands::infer(&ctx, &data, &names, &seeds, truth.as_ref())?;
            for r in &o.runs {
                print!("seed {}: max gene fitness {:.3e}", r.seed, r.max_gene_fitness());
                if let Some(m) = r.metrics {
                    print!("  tp {} fp {} tn {} fn {}", m.tp, m.fp, m.tn, m.fn_);
                    if let Some(e) = m.ipe {
                        print!("  ipe {e:.4}");
                    }
                }
                println!();
            }
            println!("wrote {}", ctx.out.display());
        }
        Command::Eval { truth, report, threshold, sign_strict } => {
            let r = commands::eval(&truth, &report, threshold, sign_strict)?;
            let m = r.metrics();
            let pct = |v: Option<f64>| v.map_or("n/a".to_string(), |v| format!("{v:.3}"));
            println!("threshold {}  sign strict {}", r.threshold, r.sign_strict);
            println!("tp {}  fp {}  tn {}  fn {}", m.tp, m.fp, m.tn, m.fn_);
            println!("sensitivity {}  specificity {}", pct(m.sensitivity), pct(m.specificity));
            if let Some(e) = m.ipe {
                println!("ipe {e:.6}");
            }
            let p = commands::write_eval(&r, &ctx.out, ctx.format)?;
            println!("wrote {}", p.display());
        }
        Command::Sweep { parameter, truth } => {
            let parameter = parameter
                .or(ctx.config.sweep.parameter)
                .ok_or_else(|| CliError::Config("sweep needs --parameter or sweep.parameter".into()))?;
            let seeds = if g.seeds.is_empty() {
                let s = ctx.config.seed;
                (s..s + ctx.config.sweep.repetitions as u64).collect()
            } else {
                seeds
            };
            let truth = Truth::load(&truth)?;
            let o = commands::sweep(&ctx, parameter, &seeds, &truth)?;
            for c in &o.cells {
                println!(
                    "pop {} iter {} series {} alpha {} gamma {}: median max fitness {:.3e}, median ipe {}",
                    c.population,
                    c.iterations,
                    c.series_count,
                    c.alpha,
                    c.gamma,
                    c.median_max_gene_fitness.unwrap_or(f64::NAN),
                    c.median_ipe.map_or("n/a".into(), |v| format!("{v:.4}")),
                );
            }
            println!("wrote {}", ctx.out.display());
        }
        Command::Sos { .. } => {
            let o = commands::sos(&ctx, None, &seeds)?;
            for r in &o.results {
                println!(
                    "seed {}: {} of {} known regulations, {} other edges",
                    r.seed, r.recovered_known, r.known_total, r.presence.fp
                );
            }
            println!("best seed {}; wrote {}", o.best_seed, ctx.out.display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
