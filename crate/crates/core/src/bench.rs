//! Fit on the observed training split, forecast the test split, score
//! against the noise-free signal.

use rayon::prelude::*;

use crate::baseline::{LinearForecaster, NormMode, TrainingWindow, DEFAULT_LAMBDA};
use crate::dataset::{windows, DatasetInstance, SeriesMatrix, SplitRanges, SplitSpec, WindowPair};
use crate::error::{Error, Result};
use crate::metrics::{self, CellKey, EvalReport, WindowTensor};

pub const BASELINE_MODEL: &str = "linear";

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BenchOptions {
    pub split: SplitSpec,
    pub lookback: usize,
    pub horizon: usize,
    /// Step between consecutive evaluation (and training) windows.
    pub stride: usize,
    pub lambda: f64,
    pub norm: NormMode,
    pub per_variate: bool,
}

impl Default for BenchOptions {
    fn default() -> Self {
        BenchOptions {
            split: SplitSpec::default(),
            lookback: 96,
            horizon: 96,
            stride: 1,
            lambda: DEFAULT_LAMBDA,
            norm: NormMode::Window,
            per_variate: false,
        }
    }
}

impl BenchOptions {
    pub fn validate(&self) -> Result<()> {
        self.split.validate()?;
        if self.lookback == 0 || self.horizon == 0 {
            return Err(Error::invalid("windows", "lookback and horizon must be >= 1"));
        }
        if self.stride == 0 {
            return Err(Error::invalid("stride", "stride must be >= 1"));
        }
        Ok(())
    }

    /// Windows `0, k, 2k, ...` tile the test range when the stride divides
    /// the horizon.
    pub fn stitch_every(&self) -> Option<usize> {
        (self.horizon % self.stride == 0).then(|| self.horizon / self.stride)
    }
}

fn split_ranges(instance: &DatasetInstance, opts: &BenchOptions) -> Result<SplitRanges> {
    opts.validate()?;
    let span = opts.lookback + opts.horizon;
    opts.split.ranges(instance.samples(), span).map_err(|_| {
        Error::invalid(
            "windows",
            format!(
                "lookback {} + horizon {} does not fit every split of {} samples",
                opts.lookback,
                opts.horizon,
                instance.samples()
            ),
        )
    })
}

/// Evaluation windows over the test split of `instance`.
pub fn test_windows(instance: &DatasetInstance, opts: &BenchOptions) -> Result<Vec<WindowPair>> {
    let ranges = split_ranges(instance, opts)?;
    Ok(windows(ranges.test, opts.lookback, opts.horizon, opts.stride))
}

/// Target tensor `[window][variate][step]` taken from `matrix`.
pub fn target_tensor(matrix: &SeriesMatrix, pairs: &[WindowPair], horizon: usize) -> WindowTensor {
    let mut t = WindowTensor::zeros(pairs.len(), matrix.cols(), horizon);
    for (w, p) in pairs.iter().enumerate() {
        for v in 0..matrix.cols() {
            t.series_mut(w, v).copy_from_slice(&matrix.column(v)[p.target.clone()]);
        }
    }
    t
}

pub fn fit_baseline(instance: &DatasetInstance, opts: &BenchOptions) -> Result<LinearForecaster> {
    let ranges = split_ranges(instance, opts)?;
    let pairs = windows(ranges.train, opts.lookback, opts.horizon, opts.stride);
    let per_variate: Vec<Vec<TrainingWindow<'_>>> = instance
        .mixed
        .columns()
        .map(|col| {
            pairs
                .iter()
                .map(|p| TrainingWindow { input: &col[p.input.clone()], target: &col[p.target.clone()] })
                .collect()
        })
        .collect();
    let mut model = LinearForecaster::new(opts.lookback, opts.horizon, opts.lambda, opts.norm)?;
    if opts.per_variate {
        model.fit_per_variate(&per_variate)?;
    } else {
        let pooled: Vec<TrainingWindow<'_>> = per_variate.into_iter().flatten().collect();
        model.fit(&pooled)?;
    }
    Ok(model)
}

/// Forecasts every window from the observed series.
pub fn forecast(
    model: &LinearForecaster,
    observed: &SeriesMatrix,
    pairs: &[WindowPair],
) -> Result<WindowTensor> {
    let v = observed.cols();
    let h = model.horizon();
    let mut out = WindowTensor::zeros(pairs.len(), v, h);
    let rows: Vec<Result<Vec<f64>>> = pairs
        .par_iter()
        .map(|p| {
            let mut block = vec![0.0; v * h];
            for (var, chunk) in block.chunks_exact_mut(h).enumerate() {
                model.predict_into(var, &observed.column(var)[p.input.clone()], chunk)?;
            }
            Ok(block)
        })
        .collect();
    for (w, block) in rows.into_iter().enumerate() {
        let block = block?;
        for var in 0..v {
            out.series_mut(w, var).copy_from_slice(&block[var * h..(var + 1) * h]);
        }
    }
    Ok(out)
}

/// Scores externally produced forecasts laid out over [`test_windows`].
pub fn evaluate_forecasts(
    instance: &DatasetInstance,
    pred: &WindowTensor,
    opts: &BenchOptions,
    model: &str,
    train_seed: u64,
) -> Result<EvalReport> {
    let pairs = test_windows(instance, opts)?;
    let expected = (pairs.len(), instance.variates(), opts.horizon);
    if pred.dims() != expected {
        return Err(Error::shape(
            "predictions (windows, variates, horizon)",
            format!("{expected:?}"),
            format!("{:?}", pred.dims()),
        ));
    }
    let clean = target_tensor(&instance.clean, &pairs, opts.horizon);
    let mixed = target_tensor(&instance.mixed, &pairs, opts.horizon);
    metrics::evaluate(
        CellKey::new(model, instance.config()),
        instance.config().data_seed,
        train_seed,
        pred,
        &clean,
        &mixed,
        opts.stitch_every(),
    )
}

/// Fits the baseline and evaluates it on the test split.
pub fn bench_instance(
    instance: &DatasetInstance,
    opts: &BenchOptions,
) -> Result<(LinearForecaster, EvalReport)> {
    let model = fit_baseline(instance, opts)?;
    let pairs = test_windows(instance, opts)?;
    let pred = forecast(&model, &instance.mixed, &pairs)?;
    let report = evaluate_forecasts(instance, &pred, opts, BASELINE_MODEL, 0)?;
    Ok((model, report))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::components::{FrequencyBand, Waveform};
    use crate::dataset::{generate_instance, InstanceConfig, NoiseKind};
    use crate::synthesis::SnrSpec;

    fn config(noise: Option<NoiseKind>, snr: f64) -> InstanceConfig {
        InstanceConfig {
            samples: 2000,
            variates: 3,
            seasonal_kind: Waveform::Sine,
            frequency_band: FrequencyBand::new(100.0, 140.0),
            noise,
            snr: SnrSpec::new(snr, 0.0),
            data_seed: 11,
            ..Default::default()
        }
    }

    fn opts() -> BenchOptions {
        BenchOptions { lookback: 48, horizon: 24, ..Default::default() }
    }

    #[test]
    fn noise_free_targets_coincide() {
        let inst = generate_instance(&config(None, f64::INFINITY)).unwrap();
        let (_, r) = bench_instance(&inst, &opts()).unwrap();
        assert_eq!(r.mse_clean, r.mse_noisy);
        let pairs = test_windows(&inst, &opts()).unwrap();
        assert_eq!(r.windows, pairs.len());
        assert_eq!(r.per_step_mse.len(), 24);
        assert_eq!(r.spectral_error.len(), pairs.len().div_ceil(24) * 24 / 2 + 1);
    }

    #[test]
    fn perfect_forecasts_score_zero() {
        let inst = generate_instance(&config(Some(NoiseKind::White), 10.0)).unwrap();
        let o = opts();
        let pairs = test_windows(&inst, &o).unwrap();
        let clean = target_tensor(&inst.clean, &pairs, o.horizon);
        let r = evaluate_forecasts(&inst, &clean, &o, "oracle", 0).unwrap();
        assert_eq!(r.mse_clean, 0.0);
        assert!(r.per_step_mse.iter().all(|x| *x == 0.0));
        assert!(r.spectral_error.iter().all(|x| *x == 0.0));
        assert!(r.mse_noisy > 0.0);
        let wrong = WindowTensor::zeros(pairs.len() + 1, 3, 24);
        assert!(matches!(evaluate_forecasts(&inst, &wrong, &o, "x", 0), Err(Error::Shape { .. })));
    }

    #[test]
    fn oversized_windows_are_rejected() {
        let inst = generate_instance(&config(None, f64::INFINITY)).unwrap();
        let o = BenchOptions { lookback: 400, horizon: 96, ..Default::default() };
        assert_eq!(bench_instance(&inst, &o).unwrap_err().field(), Some("windows"));
    }
}
