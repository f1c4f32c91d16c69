//! Two-stage variate synthesis.
//!
//! Stage one evaluates and z-normalizes every component, then forms convex
//! combinations of the signal and of the noise components, each z-normalized
//! again. Stage two mixes the two aggregates with weights chosen from the
//! target SNR and their empirical correlation `r`:
//!
//! ```text
//! w_noise  = 1 / sqrt(1 + snr + 2 r sqrt(snr))
//! w_signal = sqrt(snr) * w_noise
//! ```
//!
//! which gives the mixed series unit variance and `w_signal² / w_noise² = snr`.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};
use serde_with::{serde_as, DisplayFromStr};

use crate::assignment::VariateRecipe;
use crate::components::{self, ComponentId, ComponentParams, ComponentSpec};
use crate::error::{Error, Result};
use crate::prng::RandomStream;
use crate::stats;

/// Mixing is refused when `1 + snr + 2 r sqrt(snr)` is at or below this.
pub const MIN_MIXING_DENOMINATOR: f64 = 1e-9;

/// Global SNR and the spread of per-variate SNR draws.
#[serde_as]
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SnrSpec {
    #[serde_as(as = "DisplayFromStr")]
    pub global: f64,
    #[serde_as(as = "DisplayFromStr")]
    pub sigma: f64,
}

impl SnrSpec {
    pub fn new(global: f64, sigma: f64) -> Self {
        SnrSpec { global, sigma }
    }

    pub fn infinite() -> Self {
        SnrSpec { global: f64::INFINITY, sigma: 0.0 }
    }

    pub fn is_infinite(&self) -> bool {
        self.global == f64::INFINITY
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.global > 0.0) {
            return Err(Error::invalid("snr", format!("global snr {} must be positive or inf", self.global)));
        }
        if !(self.sigma >= 0.0 && self.sigma.is_finite()) {
            return Err(Error::invalid(
                "snr_sigma",
                format!("snr sigma {} must be finite and >= 0", self.sigma),
            ));
        }
        Ok(())
    }
}

/// Positive weights summing to one: `|g_i| / Σ|g_j|`, `g ~ N(0, 1)`.
pub fn sample_weights(n: usize, stream: &mut RandomStream) -> Vec<f64> {
    assert!(n >= 1, "need at least one weight");
    loop {
        let raw: Vec<f64> = (0..n).map(|_| stream.gauss().abs()).collect();
        let total: f64 = raw.iter().sum();
        if total >= 1e-9 && raw.iter().all(|&g| g > 0.0) {
            let mut w: Vec<f64> = raw.iter().map(|g| g / total).collect();
            // fold the rounding residue into the largest weight
            let residue = 1.0 - w.iter().sum::<f64>();
            let imax = (0..n).max_by(|&a, &b| w[a].total_cmp(&w[b])).unwrap_or(0);
            w[imax] += residue;
            return w;
        }
    }
}

/// Weighted sum of already z-normalized series, z-normalized again.
pub fn aggregate(series: &[Vec<f64>], weights: &[f64]) -> Result<Vec<f64>> {
    if series.is_empty() || series.len() != weights.len() {
        return Err(Error::shape("aggregate", weights.len(), series.len()));
    }
    let n = series[0].len();
    if let Some(bad) = series.iter().find(|s| s.len() != n) {
        return Err(Error::shape("aggregate series length", n, bad.len()));
    }
    let mut sum = vec![0.0; n];
    for (s, &w) in series.iter().zip(weights) {
        for (acc, x) in sum.iter_mut().zip(s) {
            *acc += w * x;
        }
    }
    components::znormalize(&sum)
        .map_err(|_| Error::degenerate("aggregate", "weighted components cancel to a constant series"))
}

/// Sample Pearson correlation, clamped to `[-1, 1]`.
pub fn pearson(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::shape("pearson", a.len(), b.len()));
    }
    let (ma, mb) = (stats::mean(a), stats::mean(b));
    let mut sab = 0.0;
    let mut saa = 0.0;
    let mut sbb = 0.0;
    for (x, y) in a.iter().zip(b) {
        let (dx, dy) = (x - ma, y - mb);
        sab += dx * dy;
        saa += dx * dx;
        sbb += dy * dy;
    }
    if !(saa > 0.0 && sbb > 0.0) {
        return Err(Error::degenerate("pearson input", "series is constant"));
    }
    Ok((sab / (saa.sqrt() * sbb.sqrt())).clamp(-1.0, 1.0))
}

/// Per-variate SNR: `N(global, sigma²)` floored at `0.01 * global`.
/// Infinite global SNR passes through without consuming a draw.
pub fn sample_snr(spec: SnrSpec, stream: &mut RandomStream) -> f64 {
    if spec.is_infinite() {
        return f64::INFINITY;
    }
    if spec.sigma == 0.0 {
        return spec.global;
    }
    let draw = spec.global + spec.sigma * stream.gauss();
    draw.max(0.01 * spec.global)
}

/// `(w_signal, w_noise)` for a finite SNR and correlation `r`.
pub fn mixing_weights(snr: f64, r: f64) -> Result<(f64, f64)> {
    if !(snr > 0.0 && snr.is_finite()) {
        return Err(Error::invalid("snr", format!("mixing needs finite snr > 0, got {snr}")));
    }
    if !(-1.0..=1.0).contains(&r) {
        return Err(Error::invalid("correlation", format!("r = {r} outside [-1, 1]")));
    }
    let root = snr.sqrt();
    let denom = 1.0 + snr + 2.0 * r * root;
    if denom <= MIN_MIXING_DENOMINATOR {
        return Err(Error::degenerate(
            "mixing",
            format!("1 + snr + 2 r sqrt(snr) = {denom:e} for snr={snr}, r={r}"),
        ));
    }
    let w_noise = 1.0 / denom.sqrt();
    Ok((root * w_noise, w_noise))
}

/// Realized mixing parameters of one variate.
#[serde_as]
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MixingRecord {
    #[serde_as(as = "DisplayFromStr")]
    pub snr: f64,
    #[serde_as(as = "DisplayFromStr")]
    pub correlation: f64,
    #[serde_as(as = "DisplayFromStr")]
    pub w_signal: f64,
    #[serde_as(as = "DisplayFromStr")]
    pub w_noise: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct VariateTriple {
    pub clean: Vec<f64>,
    /// Absent when the SNR is infinite.
    pub noise: Option<Vec<f64>>,
    pub mixed: Vec<f64>,
    pub mixing: Option<MixingRecord>,
}

fn normalized(spec: &ComponentSpec, raw: Vec<f64>) -> Result<Vec<f64>> {
    components::znormalize(&raw)
        .map_err(|e| Error::degenerate(format!("component {}", spec.id), e.to_string()))
}

fn eval_signal(spec: &ComponentSpec, n: usize) -> Result<Vec<f64>> {
    let raw = match &spec.params {
        ComponentParams::Trend(t) => components::eval_trend(t, n),
        ComponentParams::Seasonal(s) => components::eval_seasonal(s, n),
        other => {
            return Err(Error::invalid(
                "recipe",
                format!("{} listed as signal but is {:?}", spec.id, other.kind()),
            ))
        }
    };
    normalized(spec, raw)
}

fn eval_noise(spec: &ComponentSpec, n: usize, signals: &HashMap<ComponentId, &Vec<f64>>) -> Result<Vec<f64>> {
    let raw = match &spec.params {
        ComponentParams::White => components::gen_white(n, &mut spec.stream.derive()),
        ComponentParams::Brownian => components::gen_brownian(n, &mut spec.stream.derive()),
        ComponentParams::Impulse(imp) => components::eval_impulse(imp, n),
        ComponentParams::Dependent(dep) => {
            let modulator = signals.get(&dep.modulator_ref).ok_or_else(|| {
                Error::invalid(
                    "recipe",
                    format!("{} references missing modulator {}", spec.id, dep.modulator_ref),
                )
            })?;
            components::gen_dependent_noise(dep.sign, modulator, &mut spec.stream.derive())
        }
        other => {
            return Err(Error::invalid(
                "recipe",
                format!("{} listed as noise but is {:?}", spec.id, other.kind()),
            ))
        }
    };
    normalized(spec, raw)
}

/// Clean, noise and mixed series for one recipe.
pub fn synthesize_variate(recipe: &VariateRecipe, n: usize) -> Result<VariateTriple> {
    let id = recipe.variate_id;
    synthesize_inner(recipe, n).map_err(|e| e.in_variate(id))
}

fn synthesize_inner(recipe: &VariateRecipe, n: usize) -> Result<VariateTriple> {
    recipe.validate()?;
    let signal_series: Vec<Vec<f64>> =
        recipe.signal_components.iter().map(|c| eval_signal(c, n)).collect::<Result<_>>()?;
    let clean = aggregate(&signal_series, &recipe.signal_weights)?;

    if recipe.snr.is_infinite() {
        return Ok(VariateTriple { mixed: clean.clone(), clean, noise: None, mixing: None });
    }

    let by_id: HashMap<ComponentId, &Vec<f64>> =
        recipe.signal_components.iter().map(|c| c.id).zip(signal_series.iter()).collect();
    let noise_series: Vec<Vec<f64>> =
        recipe.noise_components.iter().map(|c| eval_noise(c, n, &by_id)).collect::<Result<_>>()?;
    let noise = aggregate(&noise_series, &recipe.noise_weights)?;

    let r = pearson(&clean, &noise)?;
    let (w_signal, w_noise) = mixing_weights(recipe.snr, r)?;
    let mixed = clean.iter().zip(&noise).map(|(s, e)| w_signal * s + w_noise * e).collect();
    Ok(VariateTriple {
        clean,
        noise: Some(noise),
        mixed,
        mixing: Some(MixingRecord { snr: recipe.snr, correlation: r, w_signal, w_noise }),
    })
}
