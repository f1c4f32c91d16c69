//! Signal and noise component families.
//!
//! Every component evaluates to one length-`n` series. Signal components are
//! monomial trends and three periodic waveforms; noise components are white,
//! Brownian, impulse, and noise whose amplitude follows a trend or seasonal
//! series of the same variate.

use std::f64::consts::{PI, TAU};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use serde_with::{serde_as, DisplayFromStr};

use crate::error::{Error, Result};
use crate::prng::RandomStream;
use crate::stats;

/// Series with population std below this are treated as constant.
pub const STD_EPSILON: f64 = 1e-9;

/// Resampling budget for degenerate components.
pub const MAX_RESAMPLES: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Waveform {
    Sine,
    SmoothSawtooth,
    SmoothSquare,
}

impl Waveform {
    pub const ALL: [Waveform; 3] = [Waveform::Sine, Waveform::SmoothSquare, Waveform::SmoothSawtooth];

    /// Waveform value at phase argument `x`.
    pub fn eval(self, x: f64) -> f64 {
        match self {
            Waveform::Sine => x.sin(),
            Waveform::SmoothSawtooth => ((10.0 * x.cos()).tanh() * x.sin()).asin(),
            Waveform::SmoothSquare => {
                let s = x.sin();
                s / (0.005 + s * s).sqrt()
            }
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Waveform::Sine => "sine",
            Waveform::SmoothSawtooth => "sawtooth",
            Waveform::SmoothSquare => "square",
        }
    }
}

impl fmt::Display for Waveform {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Waveform {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sine" | "sin" => Ok(Waveform::Sine),
            "sawtooth" | "saw" | "smooth_sawtooth" => Ok(Waveform::SmoothSawtooth),
            "square" | "smooth_square" => Ok(Waveform::SmoothSquare),
            other => Err(Error::invalid(
                "seasonal_kind",
                format!("unknown waveform {other:?} (expected sine, square or sawtooth)"),
            )),
        }
    }
}

/// Frequency-index band `[lo, hi]`; a frequency index `l` means `l` cycles
/// over the full series.
#[serde_as]
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FrequencyBand {
    #[serde_as(as = "DisplayFromStr")]
    pub lo: f64,
    #[serde_as(as = "DisplayFromStr")]
    pub hi: f64,
}

impl FrequencyBand {
    pub const fn new(lo: f64, hi: f64) -> Self {
        FrequencyBand { lo, hi }
    }

    pub const fn single(index: f64) -> Self {
        FrequencyBand { lo: index, hi: index }
    }

    /// Rescales a band defined for `from_len` samples to a series of
    /// `to_len` samples so it covers the same fraction of the spectrum.
    /// The lower edge is kept at index 1 or above.
    pub fn rescaled(self, from_len: usize, to_len: usize) -> Self {
        let ratio = to_len as f64 / from_len as f64;
        let lo = (self.lo * ratio).round().max(1.0);
        let hi = (self.hi * ratio).round().max(lo);
        FrequencyBand { lo, hi }
    }

    pub fn midpoint(self) -> f64 {
        0.5 * (self.lo + self.hi)
    }

    pub fn validate(self, samples: usize) -> Result<()> {
        if !(self.lo.is_finite() && self.hi.is_finite()) || self.lo <= 0.0 || self.lo > self.hi {
            return Err(Error::invalid(
                "frequency_band",
                format!("band [{}, {}] must satisfy 0 < lo <= hi", self.lo, self.hi),
            ));
        }
        let nyquist = samples as f64 / 2.0;
        if self.hi > nyquist {
            return Err(Error::invalid(
                "frequency_band",
                format!(
                    "band upper index {} exceeds the Nyquist limit {} for {} samples",
                    self.hi, nyquist, samples
                ),
            ));
        }
        Ok(())
    }
}

impl fmt::Display for FrequencyBand {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}-{}", self.lo, self.hi)
    }
}

/// Band definitions for a 35040-sample series: very low through very high.
pub const REFERENCE_SAMPLES: usize = 35_040;
pub const REFERENCE_BANDS: [FrequencyBand; 7] = [
    FrequencyBand::new(1.0, 500.0),
    FrequencyBand::new(500.0, 1000.0),
    FrequencyBand::new(1000.0, 1500.0),
    FrequencyBand::new(6000.0, 6500.0),
    FrequencyBand::new(8000.0, 8500.0),
    FrequencyBand::new(12000.0, 12500.0),
    FrequencyBand::new(16000.0, 16500.0),
];

#[serde_as]
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrendConfig {
    #[serde_as(as = "(DisplayFromStr, DisplayFromStr)")]
    pub exponent_range: (f64, f64),
}

impl Default for TrendConfig {
    fn default() -> Self {
        TrendConfig { exponent_range: (0.5, 2.0) }
    }
}

impl TrendConfig {
    pub fn validate(&self) -> Result<()> {
        let (lo, hi) = self.exponent_range;
        if !(lo > 0.0 && lo <= hi && hi.is_finite()) {
            return Err(Error::invalid(
                "trend_exponent",
                format!("exponent range [{lo}, {hi}] must satisfy 0 < lo <= hi"),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeasonalConfig {
    pub kinds: Vec<Waveform>,
    pub band: FrequencyBand,
}

#[serde_as]
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ImpulseConfig {
    #[serde_as(as = "(DisplayFromStr, DisplayFromStr)")]
    pub count: (u32, u32),
    /// Range of the Gaussian width expressed as a standard deviation in samples.
    #[serde_as(as = "(DisplayFromStr, DisplayFromStr)")]
    pub sigma: (f64, f64),
    #[serde_as(as = "(DisplayFromStr, DisplayFromStr)")]
    pub amplitude: (f64, f64),
}

impl Default for ImpulseConfig {
    fn default() -> Self {
        ImpulseConfig { count: (5, 20), sigma: (1.0, 10.0), amplitude: (5.0, 20.0) }
    }
}

impl ImpulseConfig {
    pub fn validate(&self) -> Result<()> {
        let ok_range = |(lo, hi): (f64, f64)| lo > 0.0 && lo <= hi && hi.is_finite();
        if self.count.0 == 0 || self.count.0 > self.count.1 {
            return Err(Error::invalid(
                "impulse_count",
                format!("count range {:?} must satisfy 1 <= lo <= hi", self.count),
            ));
        }
        if !ok_range(self.sigma) {
            return Err(Error::invalid(
                "impulse_sigma",
                format!("sigma range {:?} must satisfy 0 < lo <= hi", self.sigma),
            ));
        }
        if !ok_range(self.amplitude) {
            return Err(Error::invalid(
                "impulse_amplitude",
                format!("amplitude range {:?} must satisfy 0 < lo <= hi", self.amplitude),
            ));
        }
        Ok(())
    }
}

/// Monomial trend `a * t^b` on the unit grid `t = k / (n - 1)`.
#[serde_as]
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrendSpec {
    #[serde_as(as = "DisplayFromStr")]
    pub a: f64,
    #[serde_as(as = "DisplayFromStr")]
    pub b: f64,
}

#[serde_as]
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SeasonalSpec {
    pub kind: Waveform,
    /// Cycles per sample.
    #[serde_as(as = "DisplayFromStr")]
    pub frequency: f64,
    /// Radians in `[0, 2π)`.
    #[serde_as(as = "DisplayFromStr")]
    pub phase: f64,
}

/// Sum of Gaussian bumps. `width` is the variance σ² in samples².
#[serde_as]
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImpulseSpec {
    #[serde_as(as = "Vec<DisplayFromStr>")]
    pub centers: Vec<f64>,
    #[serde_as(as = "DisplayFromStr")]
    pub width: f64,
    #[serde_as(as = "DisplayFromStr")]
    pub amplitude: f64,
}

impl ImpulseSpec {
    pub fn count(&self) -> usize {
        self.centers.len()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DependentKind {
    TrendNoise,
    SeasonalNoise,
}

impl DependentKind {
    /// Signal kind whose series modulates this noise.
    pub fn modulator_kind(self) -> ComponentKind {
        match self {
            DependentKind::TrendNoise => ComponentKind::Trend,
            DependentKind::SeasonalNoise => ComponentKind::Seasonal,
        }
    }

    pub fn component_kind(self) -> ComponentKind {
        match self {
            DependentKind::TrendNoise => ComponentKind::TrendNoise,
            DependentKind::SeasonalNoise => ComponentKind::SeasonalNoise,
        }
    }
}

#[serde_as]
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DependentNoiseSpec {
    pub kind: DependentKind,
    /// `+1.0` or `-1.0`.
    #[serde_as(as = "DisplayFromStr")]
    pub sign: f64,
    pub modulator_ref: ComponentId,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ComponentKind {
    Trend,
    Seasonal,
    White,
    Brownian,
    Impulse,
    TrendNoise,
    SeasonalNoise,
}

impl ComponentKind {
    pub fn is_signal(self) -> bool {
        matches!(self, ComponentKind::Trend | ComponentKind::Seasonal)
    }

    pub fn tag(self) -> &'static str {
        match self {
            ComponentKind::Trend => "trend",
            ComponentKind::Seasonal => "seasonal",
            ComponentKind::White => "white",
            ComponentKind::Brownian => "brownian",
            ComponentKind::Impulse => "impulse",
            ComponentKind::TrendNoise => "trend_noise",
            ComponentKind::SeasonalNoise => "seasonal_noise",
        }
    }
}

/// Instance identity of a component within one dataset instance.
#[serde_as]
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ComponentId {
    pub kind: ComponentKind,
    #[serde_as(as = "DisplayFromStr")]
    pub index: usize,
}

impl fmt::Display for ComponentId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}#{}", self.kind.tag(), self.index)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ComponentParams {
    Trend(TrendSpec),
    Seasonal(SeasonalSpec),
    White,
    Brownian,
    Impulse(ImpulseSpec),
    Dependent(DependentNoiseSpec),
}

impl ComponentParams {
    pub fn kind(&self) -> ComponentKind {
        match self {
            ComponentParams::Trend(_) => ComponentKind::Trend,
            ComponentParams::Seasonal(_) => ComponentKind::Seasonal,
            ComponentParams::White => ComponentKind::White,
            ComponentParams::Brownian => ComponentKind::Brownian,
            ComponentParams::Impulse(_) => ComponentKind::Impulse,
            ComponentParams::Dependent(d) => d.kind.component_kind(),
        }
    }
}

/// A sampled component: identity, parameters, and the stream its random
/// realization (white draws, gamma draws) is taken from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComponentSpec {
    pub id: ComponentId,
    pub params: ComponentParams,
    pub stream: crate::prng::StreamPath,
}

fn degenerate_series(series: &[f64]) -> bool {
    stats::population_std(series) < STD_EPSILON
}

pub fn sample_trend(cfg: &TrendConfig, n: usize, stream: &mut RandomStream) -> Result<TrendSpec> {
    cfg.validate()?;
    let (lo, hi) = cfg.exponent_range;
    for _ in 0..MAX_RESAMPLES {
        let spec = TrendSpec { a: stream.uniform(-1.0, 1.0), b: stream.uniform(lo, hi) };
        if !degenerate_series(&eval_trend(&spec, n)) {
            return Ok(spec);
        }
    }
    Err(Error::degenerate(
        "trend",
        format!("{MAX_RESAMPLES} draws produced constant series; check exponent range and length"),
    ))
}

pub fn eval_trend(spec: &TrendSpec, n: usize) -> Vec<f64> {
    assert!(n >= 2, "trend needs at least two samples");
    let scale = 1.0 / (n - 1) as f64;
    (0..n).map(|k| spec.a * (k as f64 * scale).powf(spec.b)).collect()
}

/// Samples waveform kind, phase and frequency. Frequency indices are drawn
/// from a normal centred on the band midpoint with σ = width / 4 and
/// truncated to the band.
pub fn sample_seasonal(cfg: &SeasonalConfig, n: usize, stream: &mut RandomStream) -> Result<SeasonalSpec> {
    if cfg.kinds.is_empty() {
        return Err(Error::invalid("seasonal_kind", "no waveform kinds configured"));
    }
    cfg.band.validate(n)?;
    let kind = cfg.kinds[stream.index(cfg.kinds.len())];
    let phase = stream.uniform(0.0, TAU);
    let band = cfg.band;
    let index = if band.lo == band.hi {
        band.lo
    } else {
        stream.truncated_gauss(band.midpoint(), (band.hi - band.lo) / 4.0, band.lo, band.hi)?
    };
    Ok(SeasonalSpec { kind, frequency: index / n as f64, phase })
}

pub fn eval_seasonal(spec: &SeasonalSpec, n: usize) -> Vec<f64> {
    let omega = TAU * spec.frequency;
    (0..n).map(|k| spec.kind.eval(omega * k as f64 + spec.phase)).collect()
}

/// I.i.d. standard normal series.
pub fn gen_white(n: usize, stream: &mut RandomStream) -> Vec<f64> {
    (0..n).map(|_| stream.gauss()).collect()
}

/// Running sum of a white series drawn from `stream`.
pub fn gen_brownian(n: usize, stream: &mut RandomStream) -> Vec<f64> {
    prefix_sum(&gen_white(n, stream))
}

pub fn prefix_sum(xs: &[f64]) -> Vec<f64> {
    xs.iter()
        .scan(0.0, |acc, x| {
            *acc += x;
            Some(*acc)
        })
        .collect()
}

pub fn sample_impulse(cfg: &ImpulseConfig, n: usize, stream: &mut RandomStream) -> Result<ImpulseSpec> {
    cfg.validate()?;
    let count = stream.uniform_int(cfg.count.0 as u64, cfg.count.1 as u64) as usize;
    let sigma = stream.uniform(cfg.sigma.0, cfg.sigma.1);
    let amplitude = stream.uniform(cfg.amplitude.0, cfg.amplitude.1);
    let centers = (0..count).map(|_| stream.uniform(0.0, n as f64)).collect();
    Ok(ImpulseSpec { centers, width: sigma * sigma, amplitude })
}

pub fn eval_impulse(spec: &ImpulseSpec, n: usize) -> Vec<f64> {
    assert!(spec.count() >= 1, "impulse noise needs at least one impulse");
    assert!(spec.width > 0.0);
    let norm = spec.amplitude / (2.0 * PI * spec.width).sqrt();
    let mut out = vec![0.0; n];
    for &mu in &spec.centers {
        for (k, slot) in out.iter_mut().enumerate() {
            let d = k as f64 - mu;
            *slot += norm * (-d * d / (2.0 * spec.width)).exp();
        }
    }
    out
}

pub fn gen_impulse(cfg: &ImpulseConfig, n: usize, stream: &mut RandomStream) -> Result<Vec<f64>> {
    Ok(eval_impulse(&sample_impulse(cfg, n, stream)?, n))
}

/// `sign * modulator[k] * gamma_k` with `gamma_k ~ N(0, 1)` drawn from `stream`.
pub fn gen_dependent_noise(sign: f64, modulator: &[f64], stream: &mut RandomStream) -> Vec<f64> {
    modulator.iter().map(|m| sign * m * stream.gauss()).collect()
}

/// Zero mean, unit population variance. Fails on (near-)constant input.
pub fn znormalize(series: &[f64]) -> Result<Vec<f64>> {
    let mean = stats::mean(series);
    let std = stats::population_std(series);
    if !(std > STD_EPSILON) {
        return Err(Error::degenerate(
            "series",
            format!("standard deviation {std:e} is below {STD_EPSILON:e}"),
        ));
    }
    Ok(series.iter().map(|x| (x - mean) / std).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::prng::StreamPath;

    fn stream(tag: &str) -> RandomStream {
        StreamPath::new(2024, tag, 0).derive()
    }

    fn assert_close(a: &[f64], b: &[f64], tol: f64) {
        assert_eq!(a.len(), b.len());
        for (x, y) in a.iter().zip(b) {
            assert!((x - y).abs() <= tol, "{a:?} vs {b:?}");
        }
    }

    #[test]
    fn trend_examples() {
        assert_close(&eval_trend(&TrendSpec { a: 1.0, b: 1.0 }, 3), &[0.0, 0.5, 1.0], 0.0);
        assert_close(&eval_trend(&TrendSpec { a: -1.0, b: 1.0 }, 3), &[0.0, -0.5, -1.0], 0.0);
        assert_close(&eval_trend(&TrendSpec { a: 1.0, b: 2.0 }, 5), &[0.0, 0.0625, 0.25, 0.5625, 1.0], 1e-15);
    }

    #[test]
    fn trend_sampling_bounds_and_mean() {
        let mut s = stream("trend");
        let fixed = TrendConfig { exponent_range: (1.0, 1.0) };
        for _ in 0..100 {
            let spec = sample_trend(&fixed, 16, &mut s).unwrap();
            assert_eq!(spec.b, 1.0);
            assert!((-1.0..=1.0).contains(&spec.a));
        }
        let cfg = TrendConfig::default();
        let bs: Vec<f64> = (0..10_000).map(|_| sample_trend(&cfg, 8, &mut s).unwrap().b).collect();
        let mean = bs.iter().sum::<f64>() / bs.len() as f64;
        assert!((mean - 1.25).abs() < 0.02, "mean exponent {mean}");
        assert!(bs.iter().all(|b| (0.5..=2.0).contains(b)));
    }

    #[test]
    fn trend_is_monotone() {
        let series = eval_trend(&TrendSpec { a: -0.3, b: 1.7 }, 200);
        assert!(series.windows(2).all(|w| w[1] <= w[0]));
    }

    #[test]
    fn seasonal_quarter_period_sine() {
        let spec = SeasonalSpec { kind: Waveform::Sine, frequency: 0.25, phase: 0.0 };
        assert_close(&eval_seasonal(&spec, 4), &[0.0, 1.0, 0.0, -1.0], 1e-12);
    }

    #[test]
    fn waveform_fixed_points() {
        assert_eq!(Waveform::SmoothSawtooth.eval(0.0), 0.0);
        let sq = Waveform::SmoothSquare.eval(PI / 2.0);
        assert!((sq - 0.9975093361076329).abs() < 1e-12);
        assert!(sq >= 0.997);
    }

    #[test]
    fn degenerate_band_is_exact() {
        let cfg = SeasonalConfig { kinds: vec![Waveform::Sine], band: FrequencyBand::single(1000.0) };
        let mut s = stream("band");
        for _ in 0..10 {
            let spec = sample_seasonal(&cfg, 35_040, &mut s).unwrap();
            assert_eq!(spec.frequency, 1000.0 / 35_040.0);
        }
    }

    #[test]
    fn sampled_frequencies_stay_in_band() {
        let cfg = SeasonalConfig { kinds: Waveform::ALL.to_vec(), band: FrequencyBand::new(500.0, 1000.0) };
        let n = 35_040;
        let mut s = stream("inband");
        for _ in 0..5000 {
            let spec = sample_seasonal(&cfg, n, &mut s).unwrap();
            let l = spec.frequency * n as f64;
            assert!((500.0 - 1e-9..=1000.0 + 1e-9).contains(&l), "{l}");
            assert!((0.0..TAU).contains(&spec.phase));
        }
    }

    #[test]
    fn nyquist_band_rejected() {
        let cfg = SeasonalConfig { kinds: vec![Waveform::Sine], band: FrequencyBand::new(100.0, 600.0) };
        let err = sample_seasonal(&cfg, 1000, &mut stream("nyq")).unwrap_err();
        assert_eq!(err.field(), Some("frequency_band"));
    }

    #[test]
    fn phases_pass_ks_against_uniform() {
        let cfg = SeasonalConfig { kinds: vec![Waveform::Sine], band: FrequencyBand::new(10.0, 20.0) };
        let mut s = stream("ks");
        let mut phases: Vec<f64> =
            (0..100_000).map(|_| sample_seasonal(&cfg, 1000, &mut s).unwrap().phase / TAU).collect();
        phases.sort_by(f64::total_cmp);
        let n = phases.len() as f64;
        let ks = phases
            .iter()
            .enumerate()
            .map(|(i, &u)| (u - i as f64 / n).abs().max(((i + 1) as f64 / n - u).abs()))
            .fold(0.0, f64::max);
        assert!(ks < 0.01, "KS statistic {ks}");
    }

    #[test]
    fn white_noise_statistics() {
        let w = gen_white(100_000, &mut stream("white"));
        let mean = stats::mean(&w);
        let var = stats::population_variance(&w);
        assert!(mean.abs() < 0.02);
        assert!((var - 1.0).abs() < 0.02);
        assert!(stats::lag1_autocorrelation(&w).abs() < 0.01);
    }

    #[test]
    fn brownian_is_prefix_sum_of_white() {
        assert_eq!(prefix_sum(&[1.0, -1.0, 2.0]), vec![1.0, 0.0, 2.0]);
        let path = StreamPath::new(7, "brown", 0);
        let b = gen_brownian(1000, &mut path.derive());
        let w = gen_white(1000, &mut path.derive());
        assert_eq!(b, prefix_sum(&w));
    }

    #[test]
    fn brownian_increments_are_white() {
        let b = gen_brownian(10_000, &mut stream("brown-diff"));
        let diffs: Vec<f64> = b.windows(2).map(|w| w[1] - w[0]).collect();
        assert!(stats::lag1_autocorrelation(&diffs).abs() < 0.02);
    }

    #[test]
    fn brownian_variance_grows_linearly() {
        let (paths, len) = (2000, 100);
        let base = StreamPath::new(99, "ensemble", 0);
        let ensemble: Vec<Vec<f64>> =
            (0..paths).map(|i| gen_brownian(len, &mut base.child("path", i as u64).derive())).collect();
        let ks: Vec<f64> = (1..=len).map(|k| k as f64).collect();
        let vars: Vec<f64> =
            (0..len).map(|k| ensemble.iter().map(|p| p[k] * p[k]).sum::<f64>() / paths as f64).collect();
        // R² of the least-squares line var ~ c0 + c1 k
        let r = crate::synthesis::pearson(&ks, &vars).unwrap();
        assert!(r * r > 0.95, "R^2 = {}", r * r);
    }

    #[test]
    fn impulse_peak_and_mass() {
        let one = ImpulseSpec { centers: vec![50.0], width: 1.0, amplitude: 1.0 };
        let series = eval_impulse(&one, 100);
        assert!((series[50] - 0.3989422804014327).abs() < 1e-12);
        let three = ImpulseSpec { centers: vec![200.0, 500.0, 800.0], width: 25.0, amplitude: 2.0 };
        let mass: f64 = eval_impulse(&three, 1000).iter().sum();
        assert!((mass - 6.0).abs() < 0.06, "mass {mass}");
    }

    #[test]
    fn impulse_sampling_respects_config() {
        let cfg = ImpulseConfig::default();
        let mut s = stream("imp");
        for _ in 0..200 {
            let spec = sample_impulse(&cfg, 500, &mut s).unwrap();
            assert!((5..=20).contains(&spec.count()));
            assert!(spec.centers.iter().all(|c| (0.0..500.0).contains(c)));
            assert!((1.0..=100.0).contains(&spec.width));
            assert!((5.0..=20.0).contains(&spec.amplitude));
        }
        let bad = ImpulseConfig { count: (0, 3), ..cfg };
        assert!(sample_impulse(&bad, 500, &mut s).is_err());
    }

    #[test]
    fn dependent_noise_cases() {
        let zero = vec![0.0; 64];
        assert!(gen_dependent_noise(1.0, &zero, &mut stream("dep0")).iter().all(|&x| x == 0.0));

        let modulator: Vec<f64> = (0..64).map(|k| (k as f64 * 0.3).sin()).collect();
        let path = StreamPath::new(5, "dep", 1);
        let plus = gen_dependent_noise(1.0, &modulator, &mut path.derive());
        let minus = gen_dependent_noise(-1.0, &modulator, &mut path.derive());
        assert!(plus.iter().zip(&minus).all(|(p, m)| *p == -*m));
    }

    #[test]
    fn dependent_noise_std_tracks_modulator() {
        let levels = [0.5, 1.0, 2.0];
        let per = 100_000 / levels.len();
        let modulator: Vec<f64> = levels.iter().flat_map(|&c| std::iter::repeat(c).take(per)).collect();
        let w = gen_dependent_noise(-1.0, &modulator, &mut stream("binned"));
        for (i, &c) in levels.iter().enumerate() {
            let bin = &w[i * per..(i + 1) * per];
            let std = stats::population_std(bin);
            assert!((std - c).abs() <= 0.05 * c, "level {c}: std {std}");
        }
    }

    #[test]
    fn znormalize_examples() {
        let z = znormalize(&[1.0, 2.0, 3.0]).unwrap();
        let s = (1.5f64).sqrt();
        assert_close(&z, &[-s, 0.0, s], 1e-12);
        let again = znormalize(&z).unwrap();
        assert_close(&again, &z, 1e-12);
        assert!(znormalize(&[4.0; 10]).is_err());
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn waveforms_bounded(x in -1000.0f64..1000.0) {
                prop_assert!(Waveform::Sine.eval(x).abs() <= 1.0 + 1e-9);
                prop_assert!(Waveform::SmoothSquare.eval(x).abs() <= 1.0 + 1e-9);
                prop_assert!(Waveform::SmoothSawtooth.eval(x).abs() <= PI / 2.0 + 1e-12);
            }

            #[test]
            fn znormalize_idempotent(xs in proptest::collection::vec(-1e3f64..1e3, 3..200)) {
                if let Ok(z) = znormalize(&xs) {
                    let zz = znormalize(&z).unwrap();
                    for (a, b) in z.iter().zip(&zz) {
                        prop_assert!((a - b).abs() <= 1e-12);
                    }
                }
            }
        }
    }
}
