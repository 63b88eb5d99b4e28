//! Experiment orchestration: per-seed training loops, CSV logs, checkpoints,
//! cross-seed aggregates and SVG charts.

mod csv;
mod plot;

use std::fs::{self, OpenOptions};
use std::io::Write;
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use crate::config::ExperimentConfig;
use crate::error::{Error, Result};
use crate::nn::decode_checkpoint;
use crate::trainer::{TrainStats, Trainer};

pub use self::csv::{aggregate, format_row, parse_aggregate, parse_csv, AggregateRow, AGGREGATE_HEADER, CSV_HEADER};
pub use self::plot::{emit_plot, render_svg, Series};

#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    /// Run seeds concurrently (each writes only its own files).
    pub seed_parallel: bool,
    /// Continue from `seed_<s>.ckpt` when present.
    pub resume: bool,
    /// Print one progress line per iteration to stderr.
    pub verbose: bool,
}

/// Everything a finished (or partially finished) run produced.
#[derive(Debug, Clone)]
pub struct RunManifest {
    pub label: String,
    pub config: ExperimentConfig,
    pub seeds: Vec<u64>,
    pub out_dir: PathBuf,
    pub csv_paths: Vec<PathBuf>,
    pub checkpoint_paths: Vec<PathBuf>,
    pub aggregate_path: PathBuf,
    /// Per-seed rows, in seed order.
    pub rows: Vec<Vec<TrainStats>>,
}

impl RunManifest {
    pub fn aggregate(&self) -> Vec<AggregateRow> {
        aggregate(&self.rows)
    }
}

fn write_file(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

pub fn csv_path(out_dir: &Path, seed: u64) -> PathBuf {
    out_dir.join(format!("seed_{seed}.csv"))
}

pub fn checkpoint_path(out_dir: &Path, seed: u64) -> PathBuf {
    out_dir.join(format!("seed_{seed}.ckpt"))
}

fn run_seed(cfg: &ExperimentConfig, seed: u64, out_dir: &Path, opts: &RunOptions) -> Result<Vec<TrainStats>> {
    let mut cfg = cfg.clone();
    cfg.seed = seed;
    let mut trainer = Trainer::new(cfg.clone())?;
    let csv = csv_path(out_dir, seed);
    let ckpt = checkpoint_path(out_dir, seed);
    let mut rows = Vec::new();

    if opts.resume && ckpt.exists() {
        let text = fs::read_to_string(&ckpt).map_err(|e| Error::io(&ckpt, e))?;
        trainer.restore(&decode_checkpoint(&text)?)?;
        if csv.exists() {
            let existing = fs::read_to_string(&csv).map_err(|e| Error::io(&csv, e))?;
            rows = parse_csv(&existing)?;
            rows.retain(|r| r.iteration <= trainer.iteration);
        }
    }
    let mut text = String::from(CSV_HEADER);
    text.push('\n');
    for r in &rows {
        text.push_str(&format_row(r));
        text.push('\n');
    }
    write_file(&csv, &text)?;

    let mut file = OpenOptions::new()
        .append(true)
        .open(&csv)
        .map_err(|e| Error::io(&csv, e))?;
    while trainer.iteration < cfg.iterations {
        let stats = trainer.train_iteration()?;
        writeln!(file, "{}", format_row(&stats)).map_err(|e| Error::io(&csv, e))?;
        file.flush().map_err(|e| Error::io(&csv, e))?;
        if opts.verbose {
            eprintln!(
                "[{} seed {seed}] iter {:>4}  eval {:>10.4} ± {:<8.4} actor {:>9.5} critic {:>9.5} H {:.4}",
                cfg.variant,
                stats.iteration,
                stats.mean_eval_return,
                stats.std_eval_return,
                stats.actor_loss,
                stats.critic_loss,
                stats.entropy
            );
        }
        rows.push(stats);
        if cfg.checkpoint_every > 0 && trainer.iteration % cfg.checkpoint_every == 0 {
            write_file(&ckpt, &trainer.checkpoint_text())?;
        }
    }
    Ok(rows)
}

/// Trains every seed for `cfg.iterations` iterations, evaluating after each one,
/// then writes the cross-seed aggregate.
pub fn run_experiment(
    cfg: &ExperimentConfig,
    seeds: &[u64],
    out_dir: &Path,
    label: &str,
    opts: &RunOptions,
) -> Result<RunManifest> {
    cfg.validate()?;
    if seeds.is_empty() {
        return Err(Error::config("seeds", "at least one seed is required"));
    }
    fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    write_file(&out_dir.join("config.txt"), &cfg.to_text())?;

    let rows: Vec<Vec<TrainStats>> = if opts.seed_parallel {
        seeds
            .par_iter()
            .map(|&s| run_seed(cfg, s, out_dir, opts))
            .collect::<Result<_>>()?
    } else {
        seeds
            .iter()
            .map(|&s| run_seed(cfg, s, out_dir, opts))
            .collect::<Result<_>>()?
    };

    let aggregate_path = out_dir.join("aggregate.csv");
    let agg = aggregate(&rows);
    let mut text = String::from(AGGREGATE_HEADER);
    text.push('\n');
    for r in &agg {
        text.push_str(&r.format());
        text.push('\n');
    }
    write_file(&aggregate_path, &text)?;

    let manifest = RunManifest {
        label: label.to_string(),
        config: cfg.clone(),
        seeds: seeds.to_vec(),
        out_dir: out_dir.to_path_buf(),
        csv_paths: seeds.iter().map(|&s| csv_path(out_dir, s)).collect(),
        checkpoint_paths: seeds.iter().map(|&s| checkpoint_path(out_dir, s)).collect(),
        aggregate_path,
        rows,
    };
    let mut listing = format!("label={label}\nseeds={}\n", join(seeds));
    for p in manifest.csv_paths.iter().chain([&manifest.aggregate_path]) {
        listing.push_str(&format!("file={}\n", p.display()));
    }
    write_file(&out_dir.join("manifest.txt"), &listing)?;
    Ok(manifest)
}

fn join(seeds: &[u64]) -> String {
    seeds.iter().map(u64::to_string).collect::<Vec<_>>().join(",")
}
