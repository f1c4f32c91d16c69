//! Time- and frequency-domain evaluation and aggregation over runs.

use std::cmp::Ordering;
use std::collections::BTreeMap;

use rustfft::num_complex::Complex;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};
use serde_with::{serde_as, DisplayFromStr};

use crate::components::{FrequencyBand, Waveform};
use crate::dataset::{noise_label, InstanceConfig, NoiseKind};
use crate::error::{Error, Result};
use crate::stats;

/// Dense `[window][variate][step]` tensor of forecasts or targets.
#[derive(Debug, Clone, PartialEq)]
pub struct WindowTensor {
    windows: usize,
    variates: usize,
    steps: usize,
    data: Vec<f64>,
}

impl WindowTensor {
    pub fn zeros(windows: usize, variates: usize, steps: usize) -> Self {
        WindowTensor { windows, variates, steps, data: vec![0.0; windows * variates * steps] }
    }

    pub fn from_vec(windows: usize, variates: usize, steps: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != windows * variates * steps {
            return Err(Error::shape(
                "window tensor",
                format!("{windows}x{variates}x{steps}"),
                format!("{} values", data.len()),
            ));
        }
        Ok(WindowTensor { windows, variates, steps, data })
    }

    pub fn dims(&self) -> (usize, usize, usize) {
        (self.windows, self.variates, self.steps)
    }

    pub fn windows(&self) -> usize {
        self.windows
    }

    pub fn variates(&self) -> usize {
        self.variates
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn series(&self, window: usize, variate: usize) -> &[f64] {
        let at = (window * self.variates + variate) * self.steps;
        &self.data[at..at + self.steps]
    }

    pub fn series_mut(&mut self, window: usize, variate: usize) -> &mut [f64] {
        let at = (window * self.variates + variate) * self.steps;
        &mut self.data[at..at + self.steps]
    }

    pub fn get(&self, window: usize, variate: usize, step: usize) -> f64 {
        self.data[(window * self.variates + variate) * self.steps + step]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    /// Concatenates windows `first, first + every, ...` of one variate.
    pub fn stitch(&self, variate: usize, first: usize, every: usize) -> Vec<f64> {
        (first..self.windows)
            .step_by(every.max(1))
            .flat_map(|w| self.series(w, variate).iter().copied())
            .collect()
    }
}

fn check_dims(pred: &WindowTensor, target: &WindowTensor) -> Result<()> {
    if pred.dims() != target.dims() {
        return Err(Error::shape(
            "predictions",
            format!("{:?}", target.dims()),
            format!("{:?}", pred.dims()),
        ));
    }
    if pred.data.is_empty() {
        return Err(Error::shape("predictions", "at least one value", "none"));
    }
    Ok(())
}

/// Mean squared error over windows, variates and steps.
pub fn mse(pred: &WindowTensor, target: &WindowTensor) -> Result<f64> {
    check_dims(pred, target)?;
    let sum: f64 = pred.data.iter().zip(&target.data).map(|(p, t)| (p - t) * (p - t)).sum();
    Ok(sum / pred.data.len() as f64)
}

/// Per-step MSE across windows and variates; its mean equals [`mse`].
pub fn horizon_profile(pred: &WindowTensor, target: &WindowTensor) -> Result<Vec<f64>> {
    check_dims(pred, target)?;
    let h = pred.steps;
    let mut acc = vec![0.0; h];
    for (p, t) in pred.data.chunks_exact(h).zip(target.data.chunks_exact(h)) {
        for (a, (x, y)) in acc.iter_mut().zip(p.iter().zip(t)) {
            *a += (x - y) * (x - y);
        }
    }
    let rows = (pred.windows * pred.variates) as f64;
    Ok(acc.into_iter().map(|a| a / rows).collect())
}

/// One-sided DFT magnitudes `|X_k|` for `k = 0..=n/2`, unscaled.
pub fn spectrum(series: &[f64]) -> Vec<f64> {
    let n = series.len();
    if n == 0 {
        return Vec::new();
    }
    let mut buf: Vec<Complex<f64>> = series.iter().map(|&x| Complex::new(x, 0.0)).collect();
    FftPlanner::new().plan_fft_forward(n).process(&mut buf);
    buf.truncate(n / 2 + 1);
    buf.into_iter().map(|c| c.norm()).collect()
}

/// Time-domain energy `Σ x²` recovered from a one-sided spectrum of a
/// length-`n` real series.
pub fn spectral_energy(one_sided: &[f64], n: usize) -> f64 {
    let mut total = 0.0;
    for (k, m) in one_sided.iter().enumerate() {
        let mirrored = k != 0 && !(n % 2 == 0 && k == n / 2);
        total += if mirrored { 2.0 } else { 1.0 } * m * m;
    }
    total / n as f64
}

/// `|spectrum(pred)(l) − spectrum(clean)(l)|` for every bin.
pub fn spectral_error(pred: &[f64], clean: &[f64]) -> Result<Vec<f64>> {
    if pred.len() != clean.len() {
        return Err(Error::shape("stitched series", clean.len(), pred.len()));
    }
    Ok(spectrum(pred).into_iter().zip(spectrum(clean)).map(|(a, b)| (a - b).abs()).collect())
}

/// Lowest frequency index whose full period fits in a lookback of `t`
/// samples over a series of `n`: `ceil(n / t)`.
pub fn capture_threshold(n: usize, t: usize) -> usize {
    assert!(n >= 1 && t >= 1, "capture_threshold needs n, t >= 1");
    n.div_ceil(t)
}

/// Aggregation key: model plus the heatmap axes of a grid cell.
#[serde_as]
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellKey {
    pub model: String,
    pub seasonal_kind: Waveform,
    pub band: FrequencyBand,
    pub trend: bool,
    pub noise: Option<NoiseKind>,
    #[serde_as(as = "DisplayFromStr")]
    pub snr: f64,
}

impl CellKey {
    pub fn new(model: &str, config: &InstanceConfig) -> Self {
        CellKey {
            model: model.into(),
            seasonal_kind: config.seasonal_kind,
            band: config.frequency_band,
            trend: config.trend.is_some(),
            noise: config.noise,
            snr: config.snr.global,
        }
    }

    pub fn label(&self) -> String {
        format!(
            "{}/{}/b{}/{}/{}/snr{}",
            self.model,
            self.seasonal_kind,
            self.band,
            if self.trend { "trend" } else { "notrend" },
            noise_label(self.noise),
            self.snr
        )
    }
}

impl Eq for CellKey {}

impl Ord for CellKey {
    fn cmp(&self, other: &Self) -> Ordering {
        self.model
            .cmp(&other.model)
            .then(self.seasonal_kind.cmp(&other.seasonal_kind))
            .then(self.band.lo.total_cmp(&other.band.lo))
            .then(self.band.hi.total_cmp(&other.band.hi))
            .then(self.trend.cmp(&other.trend))
            .then(self.noise.cmp(&other.noise))
            .then(self.snr.total_cmp(&other.snr))
    }
}

impl PartialOrd for CellKey {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Evaluation of one model on one instance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub key: CellKey,
    pub data_seed: u64,
    pub train_seed: u64,
    pub windows: usize,
    pub mse_clean: f64,
    pub mse_noisy: f64,
    pub per_step_mse: Vec<f64>,
    /// Mean over variates of the per-bin spectral error of stitched forecasts.
    pub spectral_error: Vec<f64>,
}

/// Scores forecasts against clean and observed targets. With `stitch_every`
/// set, windows `0, k, 2k, ...` are assumed to tile the target range and
/// feed the spectral error.
pub fn evaluate(
    key: CellKey,
    data_seed: u64,
    train_seed: u64,
    pred: &WindowTensor,
    clean: &WindowTensor,
    mixed: &WindowTensor,
    stitch_every: Option<usize>,
) -> Result<EvalReport> {
    let mse_clean = mse(pred, clean)?;
    let mse_noisy = mse(pred, mixed)?;
    let per_step_mse = horizon_profile(pred, clean)?;
    let spectral_error = match stitch_every {
        Some(k) => {
            let mut acc: Vec<f64> = Vec::new();
            for v in 0..pred.variates() {
                let eps = spectral_error(&pred.stitch(v, 0, k), &clean.stitch(v, 0, k))?;
                if acc.is_empty() {
                    acc = eps;
                } else {
                    acc.iter_mut().zip(eps).for_each(|(a, e)| *a += e);
                }
            }
            let v = pred.variates() as f64;
            acc.into_iter().map(|a| a / v).collect()
        }
        None => Vec::new(),
    };
    Ok(EvalReport {
        key,
        data_seed,
        train_seed,
        windows: pred.windows(),
        mse_clean,
        mse_noisy,
        per_step_mse,
        spectral_error,
    })
}

/// Mean and sample standard deviation of one metric over runs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub mean: f64,
    pub std: f64,
}

/// Order-independent summary: values are sorted and shifted by the
/// smallest one before summation, so identical runs give std exactly 0.
pub fn summarize(values: &[f64]) -> Summary {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let Some(&base) = v.first() else {
        return Summary { mean: f64::NAN, std: f64::NAN };
    };
    let d: Vec<f64> = v.iter().map(|x| x - base).collect();
    Summary { mean: base + stats::mean(&d), std: stats::sample_std(&d) }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregateRow {
    pub key: CellKey,
    pub runs: usize,
    pub mse_clean: Summary,
    pub mse_noisy: Summary,
    pub per_step_mse: Vec<f64>,
    pub spectral_error: Vec<f64>,
}

fn elementwise_mean(vectors: &[&[f64]]) -> Vec<f64> {
    let len = vectors.iter().map(|v| v.len()).min().unwrap_or(0);
    (0..len).map(|i| summarize(&vectors.iter().map(|v| v[i]).collect::<Vec<_>>()).mean).collect()
}

/// Groups reports by [`CellKey`] and summarizes each group. Rows come out in
/// key order and do not depend on the order of `reports`.
pub fn aggregate_runs(reports: &[EvalReport]) -> Result<Vec<AggregateRow>> {
    if reports.is_empty() {
        return Err(Error::invalid("reports", "nothing to aggregate"));
    }
    let mut groups: BTreeMap<&CellKey, Vec<&EvalReport>> = BTreeMap::new();
    for r in reports {
        groups.entry(&r.key).or_default().push(r);
    }
    Ok(groups
        .into_iter()
        .map(|(key, runs)| {
            let clean: Vec<f64> = runs.iter().map(|r| r.mse_clean).collect();
            let noisy: Vec<f64> = runs.iter().map(|r| r.mse_noisy).collect();
            let steps: Vec<&[f64]> = runs.iter().map(|r| r.per_step_mse.as_slice()).collect();
            let spectra: Vec<&[f64]> = runs.iter().map(|r| r.spectral_error.as_slice()).collect();
            AggregateRow {
                key: key.clone(),
                runs: runs.len(),
                mse_clean: summarize(&clean),
                mse_noisy: summarize(&noisy),
                per_step_mse: elementwise_mean(&steps),
                spectral_error: elementwise_mean(&spectra),
            }
        })
        .collect())
}

/// One spoke of a per-model radar chart: the inverse of the best mean clean
/// MSE among cells sharing `axis = value`. The efficiency columns stay empty
/// for external harnesses to fill.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RadarRow {
    pub model: String,
    pub axis: String,
    pub value: String,
    pub best_mse: f64,
    pub score: f64,
    pub iterations_per_second: Option<f64>,
    pub parameters: Option<u64>,
}

pub fn radar_rows(rows: &[AggregateRow]) -> Vec<RadarRow> {
    let mut best: BTreeMap<(String, &'static str, String), f64> = BTreeMap::new();
    for r in rows {
        let k = &r.key;
        let spokes = [
            ("seasonal_kind", k.seasonal_kind.to_string()),
            ("band", k.band.to_string()),
            ("noise", noise_label(k.noise).to_string()),
        ];
        for (axis, value) in spokes {
            let slot = best.entry((k.model.clone(), axis, value)).or_insert(f64::INFINITY);
            *slot = slot.min(r.mse_clean.mean);
        }
    }
    best.into_iter()
        .map(|((model, axis, value), best_mse)| RadarRow {
            model,
            axis: axis.into(),
            value,
            best_mse,
            score: if best_mse > 0.0 { 1.0 / best_mse } else { f64::INFINITY },
            iterations_per_second: None,
            parameters: None,
        })
        .collect()
}
