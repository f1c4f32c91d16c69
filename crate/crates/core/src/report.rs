//! Flat CSV tables for plotting and the on-disk report layout.
//!
//! Reports live in `<instance>/reports/<model>_s<train_seed>.json`.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::dataset::{noise_label, Manifest};
use crate::error::{Error, Result};
use crate::metrics::{AggregateRow, EvalReport, RadarRow};

pub const REPORT_DIR: &str = "reports";

pub fn report_path(instance_dir: &Path, model: &str, train_seed: u64) -> PathBuf {
    instance_dir.join(REPORT_DIR).join(format!("{model}_s{train_seed}.json"))
}

pub fn write_report(instance_dir: &Path, report: &EvalReport) -> Result<PathBuf> {
    let path = report_path(instance_dir, &report.key.model, report.train_seed);
    let dir = instance_dir.join(REPORT_DIR);
    fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
    fs::write(&path, serde_json::to_vec_pretty(report)?).map_err(|e| Error::io(&path, e))?;
    Ok(path)
}

pub fn read_report(path: &Path) -> Result<EvalReport> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::malformed(path.display().to_string(), e.to_string()))
}

/// `root` itself when it holds a manifest, else its immediate
/// subdirectories that do, sorted by name.
pub fn instance_dirs(root: &Path) -> Result<Vec<PathBuf>> {
    if Manifest::exists(root) {
        return Ok(vec![root.to_path_buf()]);
    }
    let mut dirs: Vec<PathBuf> = fs::read_dir(root)
        .map_err(|e| Error::io(root, e))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.is_dir() && Manifest::exists(p))
        .collect();
    dirs.sort();
    Ok(dirs)
}

/// Every report under `root`, plus instance directories that have none.
pub fn collect_reports(root: &Path) -> Result<(Vec<EvalReport>, Vec<PathBuf>)> {
    let mut reports = Vec::new();
    let mut missing = Vec::new();
    for dir in instance_dirs(root)? {
        let rdir = dir.join(REPORT_DIR);
        let mut files: Vec<PathBuf> = match fs::read_dir(&rdir) {
            Ok(entries) => entries
                .filter_map(|e| e.ok().map(|e| e.path()))
                .filter(|p| p.extension().is_some_and(|x| x == "json") && !is_model_info(p))
                .collect(),
            Err(_) => Vec::new(),
        };
        files.sort();
        if files.is_empty() {
            missing.push(dir);
        }
        for f in files {
            reports.push(read_report(&f)?);
        }
    }
    Ok((reports, missing))
}

fn is_model_info(p: &Path) -> bool {
    p.file_name().and_then(|n| n.to_str()).is_some_and(|n| n.ends_with(".model.json"))
}

#[derive(Serialize)]
struct ReportRow<'a> {
    model: &'a str,
    seasonal_kind: String,
    band_lo: f64,
    band_hi: f64,
    trend: bool,
    noise: &'a str,
    snr: f64,
    data_seed: u64,
    train_seed: u64,
    windows: usize,
    mse_clean: f64,
    mse_noisy: f64,
}

#[derive(Serialize)]
struct HeatmapRow<'a> {
    model: &'a str,
    seasonal_kind: String,
    band_lo: f64,
    band_hi: f64,
    trend: bool,
    noise: &'a str,
    snr: f64,
    runs: usize,
    mse_clean_mean: f64,
    mse_clean_std: f64,
    mse_noisy_mean: f64,
    mse_noisy_std: f64,
}

fn writer(path: &Path) -> Result<csv::Writer<fs::File>> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    Ok(csv::Writer::from_path(path)?)
}

/// One row per report, without the vector-valued fields.
pub fn write_report_rows(path: &Path, reports: &[EvalReport]) -> Result<()> {
    let mut w = writer(path)?;
    for r in reports {
        let k = &r.key;
        w.serialize(ReportRow {
            model: &k.model,
            seasonal_kind: k.seasonal_kind.to_string(),
            band_lo: k.band.lo,
            band_hi: k.band.hi,
            trend: k.trend,
            noise: noise_label(k.noise),
            snr: k.snr,
            data_seed: r.data_seed,
            train_seed: r.train_seed,
            windows: r.windows,
            mse_clean: r.mse_clean,
            mse_noisy: r.mse_noisy,
        })?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn write_heatmap(path: &Path, rows: &[AggregateRow]) -> Result<()> {
    let mut w = writer(path)?;
    for r in rows {
        let k = &r.key;
        w.serialize(HeatmapRow {
            model: &k.model,
            seasonal_kind: k.seasonal_kind.to_string(),
            band_lo: k.band.lo,
            band_hi: k.band.hi,
            trend: k.trend,
            noise: noise_label(k.noise),
            snr: k.snr,
            runs: r.runs,
            mse_clean_mean: r.mse_clean.mean,
            mse_clean_std: r.mse_clean.std,
            mse_noisy_mean: r.mse_noisy.mean,
            mse_noisy_std: r.mse_noisy.std,
        })?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn write_radar(path: &Path, rows: &[RadarRow]) -> Result<()> {
    let mut w = writer(path)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Long format `cell,bin,epsilon`, one curve per aggregated cell.
pub fn write_spectral_overlay(path: &Path, rows: &[AggregateRow]) -> Result<()> {
    let mut w = writer(path)?;
    w.write_record(["cell", "bin", "epsilon"])?;
    for r in rows {
        let label = r.key.label();
        for (bin, e) in r.spectral_error.iter().enumerate() {
            w.write_record([label.as_str(), &bin.to_string(), &e.to_string()])?;
        }
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// `step,mse` for one report.
pub fn write_profile(path: &Path, report: &EvalReport) -> Result<()> {
    let mut w = writer(path)?;
    w.write_record(["step", "mse"])?;
    for (h, m) in report.per_step_mse.iter().enumerate() {
        w.write_record([h.to_string(), m.to_string()])?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}
