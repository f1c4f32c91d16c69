//! Command-line entry point.
//!
//! Exit status: 0 on success, 1 on runtime failure, 2 on validation failure.
//! Failures print one JSON object on stderr.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde_json::json;

use synthts::bench::{self, BenchOptions};
use synthts::config::ConfigFile;
use synthts::dataset::{
    expand_grid, generate_instance_with_workers, read_instance, run_count, write_instance, GridCell,
    Manifest, SplitSpec,
};
use synthts::exchange::{self, PredictionFormat};
use synthts::metrics::{aggregate_runs, radar_rows};
use synthts::report;
use synthts::{Error, Result};

#[derive(Parser)]
#[command(name = "synthts", version, about = "Synthetic multivariate time-series benchmark")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate one dataset instance from a config file.
    Generate(GenerateArgs),
    /// Generate every cell of a grid; existing valid cells are skipped.
    Grid(GridArgs),
    /// Fit the linear baseline and write evaluation reports.
    Bench(BenchArgs),
    /// Score an external prediction file against an instance.
    Eval(EvalArgs),
    /// Aggregate reports under a grid root into plot-ready tables.
    Report(ReportArgs),
    /// Check a config file or an instance directory.
    Validate(ValidateArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Bin,
    Csv,
}

#[derive(Args)]
struct GenerateArgs {
    /// TOML config; desk-scale defaults when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory for the instance.
    #[arg(long, env = "SYNTHTS_OUT")]
    out: PathBuf,
    /// Data seed, overriding the config.
    #[arg(long, env = "SYNTHTS_SEED")]
    seed: Option<u64>,
    /// `csv` also writes instance.csv next to the binary matrices.
    #[arg(long, value_enum, default_value = "bin")]
    format: Format,
    #[arg(long)]
    workers: Option<usize>,
}

#[derive(Args)]
struct GridArgs {
    /// TOML config with a [grid] section.
    #[arg(long, alias = "config")]
    grid: PathBuf,
    /// Grid root; one subdirectory per cell.
    #[arg(long, env = "SYNTHTS_OUT")]
    out: PathBuf,
    /// Master seed the per-repeat data seeds derive from.
    #[arg(long, env = "SYNTHTS_SEED")]
    seed: Option<u64>,
    #[arg(long, value_enum, default_value = "bin")]
    format: Format,
    /// Cells generated concurrently.
    #[arg(long)]
    workers: Option<usize>,
}

#[derive(Args)]
struct WindowArgs {
    /// Config whose [split] and [windows] sections set defaults.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Train,val,test fractions, e.g. 0.7,0.1,0.2.
    #[arg(long)]
    split: Option<SplitSpec>,
    #[arg(long)]
    lookback: Option<usize>,
    #[arg(long)]
    horizon: Option<usize>,
    #[arg(long)]
    stride: Option<usize>,
}

impl WindowArgs {
    fn options(&self) -> Result<BenchOptions> {
        let mut o = match &self.config {
            Some(p) => ConfigFile::load(p)?.bench_options(),
            None => BenchOptions::default(),
        };
        o.split = self.split.unwrap_or(o.split);
        o.lookback = self.lookback.unwrap_or(o.lookback);
        o.horizon = self.horizon.unwrap_or(o.horizon);
        o.stride = self.stride.unwrap_or(o.stride);
        o.validate()?;
        Ok(o)
    }
}

#[derive(Args)]
struct BenchArgs {
    /// Instance directory or grid root.
    path: PathBuf,
    #[command(flatten)]
    windows: WindowArgs,
    /// Ridge penalty.
    #[arg(long)]
    lambda: Option<f64>,
    /// Fit one map per variate instead of a pooled map.
    #[arg(long)]
    per_variate: bool,
    /// Summary CSV; defaults to <path>/bench.csv.
    #[arg(long, env = "SYNTHTS_OUT")]
    out: Option<PathBuf>,
    #[arg(long)]
    workers: Option<usize>,
}

#[derive(Args)]
struct EvalArgs {
    #[arg(long)]
    predictions: PathBuf,
    #[arg(long)]
    instance: PathBuf,
    /// Prediction file format; inferred from the extension when omitted.
    #[arg(long, value_enum)]
    format: Option<Format>,
    /// Model name recorded in the report.
    #[arg(long, default_value = "external")]
    model: String,
    #[arg(long, default_value_t = 0)]
    train_seed: u64,
    #[command(flatten)]
    windows: WindowArgs,
    /// Report CSV; defaults to the report directory of the instance.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ReportArgs {
    /// Grid root or instance directory.
    root: PathBuf,
    /// Table directory; defaults to the root.
    #[arg(long, env = "SYNTHTS_OUT")]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ValidateArgs {
    /// Instance directory to revalidate.
    path: Option<PathBuf>,
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, env = "SYNTHTS_SEED")]
    seed: Option<u64>,
}

fn print(value: serde_json::Value) {
    println!("{value}");
}

fn warn(value: serde_json::Value) {
    eprintln!("{value}");
}

fn load_config(path: Option<&Path>) -> Result<ConfigFile> {
    path.map_or_else(|| Ok(ConfigFile::default()), ConfigFile::load)
}

fn cmd_generate(a: GenerateArgs) -> Result<()> {
    let cfg = load_config(a.config.as_deref())?.instance(a.seed)?;
    let inst = generate_instance_with_workers(&cfg, a.workers)?;
    write_instance(&inst, &a.out, matches!(a.format, Format::Csv))?;
    print(json!({
        "manifest": a.out.join("manifest.json"),
        "clean_sha256": inst.manifest.checksums.clean_sha256,
        "mixed_sha256": inst.manifest.checksums.mixed_sha256,
    }));
    Ok(())
}

/// Whether `dir` already holds a valid instance for `cell`.
fn cell_done(dir: &Path, cell: &GridCell) -> bool {
    Manifest::exists(dir) && matches!(read_instance(dir), Ok(inst) if inst.manifest.config == cell.config)
}

fn cmd_grid(a: GridArgs) -> Result<()> {
    let file = ConfigFile::load(&a.grid)?;
    let axes = file.grid(a.seed)?;
    let cells = expand_grid(&axes)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(a.workers.unwrap_or(0))
        .build()
        .map_err(|e| Error::invalid("workers", e.to_string()))?;
    let csv = matches!(a.format, Format::Csv);
    let outcomes: Vec<Result<(bool, Manifest)>> = pool.install(|| {
        cells
            .par_iter()
            .map(|cell| {
                let dir = a.out.join(&cell.key);
                if cell_done(&dir, cell) {
                    return Ok((false, Manifest::read(&dir)?));
                }
                let inst = generate_instance_with_workers(&cell.config, None)?;
                write_instance(&inst, &dir, csv)?;
                Ok((true, inst.manifest))
            })
            .collect()
    });

    std::fs::create_dir_all(&a.out).map_err(|e| Error::io(&a.out, e))?;
    let summary = a.out.join("grid_summary.csv");
    let mut w = csv::Writer::from_path(&summary)?;
    w.write_record([
        "key",
        "seasonal_kind",
        "band_lo",
        "band_hi",
        "trend",
        "noise",
        "snr",
        "repeat",
        "data_seed",
        "status",
        "clean_sha256",
        "mixed_sha256",
    ])?;
    let (mut generated, mut skipped) = (0, 0);
    for (cell, outcome) in cells.iter().zip(outcomes) {
        let (fresh, manifest) = outcome?;
        if fresh {
            generated += 1;
        } else {
            skipped += 1;
        }
        let c = &cell.config;
        w.write_record([
            cell.key.clone(),
            c.seasonal_kind.to_string(),
            c.frequency_band.lo.to_string(),
            c.frequency_band.hi.to_string(),
            c.trend.is_some().to_string(),
            synthts::dataset::noise_label(c.noise).to_string(),
            c.snr.global.to_string(),
            cell.repeat.to_string(),
            c.data_seed.to_string(),
            if fresh { "generated" } else { "skipped" }.to_string(),
            manifest.checksums.clean_sha256,
            manifest.checksums.mixed_sha256,
        ])?;
    }
    w.flush().map_err(|e| Error::io(&summary, e))?;
    print(json!({
        "cells": cells.len(),
        "generated": generated,
        "skipped": skipped,
        "runs": run_count(&axes, &cells),
        "summary": summary,
    }));
    Ok(())
}

fn cmd_bench(a: BenchArgs) -> Result<()> {
    if let Some(n) = a.workers {
        // ignore the error when a global pool already exists
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    let mut opts = a.windows.options()?;
    opts.lambda = a.lambda.unwrap_or(opts.lambda);
    opts.per_variate |= a.per_variate;
    let dirs = report::instance_dirs(&a.path)?;
    if dirs.is_empty() {
        return Err(Error::invalid("path", format!("no instance under {}", a.path.display())));
    }
    let mut reports = Vec::with_capacity(dirs.len());
    for dir in &dirs {
        let inst = read_instance(dir)?;
        let (model, rep) = bench::bench_instance(&inst, &opts)?;
        let path = report::write_report(dir, &rep)?;
        let model_path = path.with_extension("model");
        let info = model.save(&model_path)?;
        std::fs::write(model_path.with_extension("model.json"), serde_json::to_vec_pretty(&info)?)
            .map_err(|e| Error::io(&model_path, e))?;
        print(json!({
            "instance": dir,
            "report": path,
            "mse_clean": rep.mse_clean,
            "mse_noisy": rep.mse_noisy,
            "windows": rep.windows,
        }));
        reports.push(rep);
    }
    let out = a.out.unwrap_or_else(|| a.path.join("bench.csv"));
    report::write_report_rows(&out, &reports)
}

fn cmd_eval(a: EvalArgs) -> Result<()> {
    let opts = a.windows.options()?;
    let inst = read_instance(&a.instance)?;
    let format = match a.format {
        Some(Format::Bin) => PredictionFormat::Binary,
        Some(Format::Csv) => PredictionFormat::Csv,
        None => PredictionFormat::from_path(&a.predictions),
    };
    let pred = exchange::read_predictions(&a.predictions, format)?;
    let rep = bench::evaluate_forecasts(&inst, &pred, &opts, &a.model, a.train_seed)?;
    let path = report::write_report(&a.instance, &rep)?;
    let csv = a.out.unwrap_or_else(|| path.with_extension("csv"));
    report::write_report_rows(&csv, std::slice::from_ref(&rep))?;
    report::write_profile(&csv.with_extension("profile.csv"), &rep)?;
    print(json!({
        "report": path,
        "csv": csv,
        "mse_clean": rep.mse_clean,
        "mse_noisy": rep.mse_noisy,
        "windows": rep.windows,
    }));
    Ok(())
}

fn cmd_report(a: ReportArgs) -> Result<()> {
    let (reports, missing) = report::collect_reports(&a.root)?;
    for dir in &missing {
        warn(json!({"warning": "missing_report", "instance": dir}));
    }
    if reports.is_empty() {
        return Err(Error::invalid("reports", format!("no reports under {}", a.root.display())));
    }
    let rows = aggregate_runs(&reports)?;
    let out = a.out.unwrap_or(a.root);
    report::write_heatmap(&out.join("heatmap.csv"), &rows)?;
    report::write_radar(&out.join("radar.csv"), &radar_rows(&rows))?;
    report::write_spectral_overlay(&out.join("spectral_overlay.csv"), &rows)?;
    print(json!({
        "reports": reports.len(),
        "cells": rows.len(),
        "missing": missing.len(),
        "heatmap": out.join("heatmap.csv"),
    }));
    Ok(())
}

fn cmd_validate(a: ValidateArgs) -> Result<()> {
    if let Some(path) = &a.config {
        let file = ConfigFile::load(path)?;
        let cfg = file.instance(a.seed)?;
        let cells = match &file.grid {
            Some(_) => expand_grid(&file.grid(a.seed)?)?.len(),
            None => 1,
        };
        print(
            json!({"config": path, "valid": true, "samples": cfg.samples, "variates": cfg.variates, "cells": cells}),
        );
    }
    if let Some(dir) = &a.path {
        let inst = read_instance(dir)?;
        print(json!({"instance": dir, "valid": true, "clean_sha256": inst.manifest.checksums.clean_sha256}));
    }
    if a.config.is_none() && a.path.is_none() {
        return Err(Error::invalid("validate", "pass an instance directory or --config"));
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Generate(a) => cmd_generate(a),
        Command::Grid(a) => cmd_grid(a),
        Command::Bench(a) => cmd_bench(a),
        Command::Eval(a) => cmd_eval(a),
        Command::Report(a) => cmd_report(a),
        Command::Validate(a) => cmd_validate(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            warn(json!({
                "error": e.kind(),
                "field": e.field(),
                "message": e.to_string(),
            }));
            ExitCode::from(if e.is_validation() { 2 } else { 1 })
        }
    }
}
