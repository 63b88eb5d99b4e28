//! Command-line harness: train one or more variant/β settings across seeds,
//! write CSV logs, checkpoints, aggregates and an optional SVG chart.

use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::Parser;
use macrpo::harness::{emit_plot, run_experiment, RunOptions, Series};
use macrpo::{parse_config, Variant};

#[derive(Debug, Parser)]
#[command(name = "macrpo", version, about = "Multi-agent cooperative recurrent PPO experiments")]
struct Cli {
    /// key=value config file (`#` comments allowed)
    #[arg(long)]
    config: Option<PathBuf>,

    /// Environment: coopnav, diagnostic or diagnostic-continuous
    #[arg(long)]
    env: Option<String>,

    /// Variant(s), comma separated: ff-nic, ff-ica, lstm-nic, lstm-ica, lstm-icf
    #[arg(long, value_delimiter = ',')]
    variant: Vec<String>,

    /// β value(s), comma separated
    #[arg(long, value_delimiter = ',')]
    beta: Vec<f64>,

    /// Single seed
    #[arg(long)]
    seed: Option<u64>,

    /// Seed list, comma separated (overrides --seed)
    #[arg(long, value_delimiter = ',')]
    seeds: Vec<u64>,

    #[arg(long)]
    iterations: Option<usize>,

    /// Output directory
    #[arg(long, default_value = "runs")]
    out: PathBuf,

    /// Write plot.svg comparing all runs
    #[arg(long)]
    plot: bool,

    /// Extra config overrides, e.g. --set horizon=64
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,

    /// Continue each seed from its latest checkpoint
    #[arg(long)]
    resume: bool,

    /// Run seeds concurrently
    #[arg(long)]
    seed_parallel: bool,

    #[arg(long, short)]
    quiet: bool,
}

fn main() -> Result<()> {
    let cli = Cli::parse();

    let mut overrides: Vec<(String, String)> = Vec::new();
    for kv in &cli.overrides {
        let (k, v) = kv
            .split_once('=')
            .with_context(|| format!("--set expects KEY=VALUE, got {kv:?}"))?;
        overrides.push((k.trim().to_string(), v.trim().to_string()));
    }
    if let Some(env) = &cli.env {
        overrides.push(("env".into(), env.clone()));
    }
    if let Some(seed) = cli.seed {
        overrides.push(("seed".into(), seed.to_string()));
    }
    if let Some(it) = cli.iterations {
        overrides.push(("iterations".into(), it.to_string()));
    }
    let base = parse_config(cli.config.as_deref(), &overrides)?;

    let variants: Vec<Variant> = if cli.variant.is_empty() {
        vec![base.variant]
    } else {
        cli.variant
            .iter()
            .map(|v| Variant::parse(v).with_context(|| format!("unknown variant {v:?}")))
            .collect::<Result<_>>()?
    };
    let betas = if cli.beta.is_empty() { vec![base.beta] } else { cli.beta.clone() };
    let seeds = if cli.seeds.is_empty() { vec![base.seed] } else { cli.seeds.clone() };

    let opts = RunOptions {
        seed_parallel: cli.seed_parallel,
        resume: cli.resume,
        verbose: !cli.quiet,
    };
    let mut series = Vec::new();
    for &variant in &variants {
        for &beta in &betas {
            let mut cfg = base.clone();
            cfg.variant = variant;
            cfg.beta = beta;
            cfg.validate()?;
            let label = if betas.len() > 1 || !matches!(variant, Variant::FfNic | Variant::LstmNic) {
                format!("{variant} β={beta}")
            } else {
                variant.to_string()
            };
            let dir = cli.out.join(format!("{variant}-beta{beta}"));
            let manifest = run_experiment(&cfg, &seeds, &dir, &label, &opts)?;
            let agg = manifest.aggregate();
            if let Some(last) = agg.last() {
                println!(
                    "{label}: iteration {} mean eval return {:.4} ± {:.4} over {} seed(s) -> {}",
                    last.iteration,
                    last.mean,
                    last.std,
                    last.n_seeds,
                    dir.display()
                );
            } else {
                println!("{label}: no iterations run -> {}", dir.display());
            }
            series.push(Series { label, points: agg });
        }
    }

    if cli.plot {
        if series.iter().all(|s| s.points.is_empty()) {
            bail!("--plot needs at least one iteration");
        }
        let path = cli.out.join("plot.svg");
        emit_plot(&path, &format!("{} (N = {})", base.env.name(), base.agents()), &series)?;
        println!("plot -> {}", path.display());
    }
    Ok(())
}
