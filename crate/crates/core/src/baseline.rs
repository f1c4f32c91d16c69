//! Channel-independent linear forecaster fitted by closed-form ridge
//! regression, with optional per-window instance normalization.

use std::fs;
use std::path::Path;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

pub const DEFAULT_LAMBDA: f64 = 1e-3;
/// Floor added to a window's standard deviation.
pub const NORM_EPSILON: f64 = 1e-8;

const MODEL_MAGIC: &[u8; 8] = b"SYNTLIN1";
/// Windows per Gram shard; shards are summed in index order.
const SHARD: usize = 2048;
/// Smallest accepted squared Cholesky pivot relative to the largest diagonal entry.
const PIVOT_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NormMode {
    /// Subtract the input window mean, divide by its std plus [`NORM_EPSILON`].
    Window,
    None,
}

/// Affine map from a (normalized) length-`T` input to `H` outputs.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearMap {
    /// Row-major `H x T`.
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
}

impl LinearMap {
    pub fn zeros(lookback: usize, horizon: usize) -> Self {
        LinearMap { weights: vec![0.0; lookback * horizon], bias: vec![0.0; horizon] }
    }

    fn apply(&self, x: &[f64], out: &mut [f64]) {
        let t = x.len();
        for (h, o) in out.iter_mut().enumerate() {
            let row = &self.weights[h * t..(h + 1) * t];
            *o = self.bias[h] + row.iter().zip(x).map(|(w, v)| w * v).sum::<f64>();
        }
    }
}

/// One `(input, target)` pair drawn from a series.
#[derive(Debug, Clone, Copy)]
pub struct TrainingWindow<'a> {
    pub input: &'a [f64],
    pub target: &'a [f64],
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinearForecaster {
    lookback: usize,
    horizon: usize,
    lambda: f64,
    norm: NormMode,
    /// One map for a pooled fit, one per variate otherwise; empty until fitted.
    maps: Vec<LinearMap>,
}

/// Mean and scale used to normalize a window.
fn window_stats(x: &[f64], norm: NormMode) -> (f64, f64) {
    match norm {
        NormMode::None => (0.0, 1.0),
        NormMode::Window => {
            let n = x.len() as f64;
            let mean = x.iter().sum::<f64>() / n;
            let var = x.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
            (mean, var.sqrt() + NORM_EPSILON)
        }
    }
}

fn singular(lambda: f64) -> Error {
    Error::Singular(if lambda == 0.0 {
        "training windows are collinear; set a nonzero ridge lambda".into()
    } else {
        format!("system not positive definite at lambda {lambda}; increase lambda")
    })
}

/// Upper triangle of `Σ z zᵀ` and `Σ z yᵀ` with `z = [x; 1]`.
struct Gram {
    dim: usize,
    horizon: usize,
    zz: Vec<f64>,
    zy: Vec<f64>,
    count: usize,
}

impl Gram {
    fn new(lookback: usize, horizon: usize) -> Self {
        let dim = lookback + 1;
        Gram { dim, horizon, zz: vec![0.0; dim * dim], zy: vec![0.0; dim * horizon], count: 0 }
    }

    fn add(&mut self, w: &TrainingWindow<'_>, norm: NormMode, z: &mut [f64], y: &mut [f64]) {
        let (mean, scale) = window_stats(w.input, norm);
        let t = self.dim - 1;
        for (zi, x) in z[..t].iter_mut().zip(w.input) {
            *zi = (x - mean) / scale;
        }
        z[t] = 1.0;
        for (yi, v) in y.iter_mut().zip(w.target) {
            *yi = (v - mean) / scale;
        }
        for i in 0..self.dim {
            let zi = z[i];
            let row = &mut self.zz[i * self.dim..(i + 1) * self.dim];
            for j in i..self.dim {
                row[j] += zi * z[j];
            }
            let out = &mut self.zy[i * self.horizon..(i + 1) * self.horizon];
            for (o, yv) in out.iter_mut().zip(y.iter()) {
                *o += zi * yv;
            }
        }
        self.count += 1;
    }

    fn merge(&mut self, other: &Gram) {
        self.zz.iter_mut().zip(&other.zz).for_each(|(a, b)| *a += b);
        self.zy.iter_mut().zip(&other.zy).for_each(|(a, b)| *a += b);
        self.count += other.count;
    }

    /// Sums shards in a fixed order so the result does not depend on
    /// scheduling.
    fn accumulate(windows: &[TrainingWindow<'_>], lookback: usize, horizon: usize, norm: NormMode) -> Gram {
        let shards: Vec<Gram> = windows
            .par_chunks(SHARD)
            .map(|chunk| {
                let mut g = Gram::new(lookback, horizon);
                let mut z = vec![0.0; lookback + 1];
                let mut y = vec![0.0; horizon];
                for w in chunk {
                    g.add(w, norm, &mut z, &mut y);
                }
                g
            })
            .collect();
        let mut total = Gram::new(lookback, horizon);
        for s in &shards {
            total.merge(s);
        }
        total
    }

    fn solve(&self, lambda: f64) -> Result<LinearMap> {
        let d = self.dim;
        let a = DMatrix::from_fn(d, d, |i, j| {
            let v = if i <= j { self.zz[i * d + j] } else { self.zz[j * d + i] };
            if i == j {
                v + lambda
            } else {
                v
            }
        });
        let max_diag = (0..d).map(|i| a[(i, i)]).fold(0.0, f64::max);
        let chol = a.cholesky().ok_or_else(|| singular(lambda))?;
        // rounding lets rank-deficient systems through with tiny pivots
        let min_pivot = (0..d).map(|i| chol.l_dirty()[(i, i)].powi(2)).fold(f64::INFINITY, f64::min);
        if !(min_pivot > PIVOT_TOLERANCE * max_diag) {
            return Err(singular(lambda));
        }
        let t = d - 1;
        let mut map = LinearMap::zeros(t, self.horizon);
        for h in 0..self.horizon {
            let rhs = DVector::from_fn(d, |i, _| self.zy[i * self.horizon + h]);
            let theta = chol.solve(&rhs);
            if theta.iter().any(|v| !v.is_finite()) {
                return Err(singular(lambda));
            }
            map.weights[h * t..(h + 1) * t].copy_from_slice(&theta.as_slice()[..t]);
            map.bias[h] = theta[t];
        }
        Ok(map)
    }
}

impl LinearForecaster {
    pub fn new(lookback: usize, horizon: usize, lambda: f64, norm: NormMode) -> Result<Self> {
        if lookback == 0 || horizon == 0 {
            return Err(Error::invalid("windows", "lookback and horizon must be >= 1"));
        }
        if !(lambda >= 0.0 && lambda.is_finite()) {
            return Err(Error::invalid("lambda", format!("lambda {lambda} must be finite and >= 0")));
        }
        Ok(LinearForecaster { lookback, horizon, lambda, norm, maps: Vec::new() })
    }

    /// A fitted model with the given maps, e.g. for fixtures.
    pub fn from_maps(
        lookback: usize,
        horizon: usize,
        lambda: f64,
        norm: NormMode,
        maps: Vec<LinearMap>,
    ) -> Result<Self> {
        let mut m = Self::new(lookback, horizon, lambda, norm)?;
        if maps.is_empty() {
            return Err(Error::invalid("maps", "need at least one map"));
        }
        for map in &maps {
            if map.weights.len() != lookback * horizon || map.bias.len() != horizon {
                return Err(Error::shape("linear map", format!("{horizon}x{lookback}"), map.weights.len()));
            }
            if map.weights.iter().chain(&map.bias).any(|v| !v.is_finite()) {
                return Err(Error::degenerate("linear map", "non-finite entries"));
            }
        }
        m.maps = maps;
        Ok(m)
    }

    pub fn lookback(&self) -> usize {
        self.lookback
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn norm(&self) -> NormMode {
        self.norm
    }

    pub fn is_fitted(&self) -> bool {
        !self.maps.is_empty()
    }

    pub fn maps(&self) -> &[LinearMap] {
        &self.maps
    }

    fn check_window(&self, w: &TrainingWindow<'_>) -> Result<()> {
        if w.input.len() != self.lookback {
            return Err(Error::shape("input window", self.lookback, w.input.len()));
        }
        if w.target.len() != self.horizon {
            return Err(Error::shape("target window", self.horizon, w.target.len()));
        }
        Ok(())
    }

    fn fit_map(&self, windows: &[TrainingWindow<'_>]) -> Result<LinearMap> {
        for w in windows {
            self.check_window(w)?;
        }
        if windows.is_empty() {
            return Err(Error::invalid("windows", "no training windows"));
        }
        Gram::accumulate(windows, self.lookback, self.horizon, self.norm).solve(self.lambda)
    }

    /// One shared map over windows pooled from every variate.
    pub fn fit(&mut self, windows: &[TrainingWindow<'_>]) -> Result<()> {
        self.maps = vec![self.fit_map(windows)?];
        Ok(())
    }

    /// One map per variate.
    pub fn fit_per_variate(&mut self, per_variate: &[Vec<TrainingWindow<'_>>]) -> Result<()> {
        self.maps = per_variate
            .iter()
            .enumerate()
            .map(|(v, ws)| self.fit_map(ws).map_err(|e| e.in_variate(v)))
            .collect::<Result<_>>()?;
        Ok(())
    }

    /// Forecast for `variate`; pooled models ignore the index.
    pub fn predict_into(&self, variate: usize, input: &[f64], out: &mut [f64]) -> Result<()> {
        let map = match self.maps.len() {
            0 => return Err(Error::Unfitted),
            1 => &self.maps[0],
            n if variate < n => &self.maps[variate],
            n => return Err(Error::shape("variate index", format!("< {n}"), variate)),
        };
        if input.len() != self.lookback {
            return Err(Error::shape("input window", self.lookback, input.len()));
        }
        if out.len() != self.horizon {
            return Err(Error::shape("output window", self.horizon, out.len()));
        }
        let (mean, scale) = window_stats(input, self.norm);
        let z: Vec<f64> = input.iter().map(|x| (x - mean) / scale).collect();
        map.apply(&z, out);
        for o in out.iter_mut() {
            *o = *o * scale + mean;
        }
        Ok(())
    }

    pub fn predict(&self, variate: usize, input: &[f64]) -> Result<Vec<f64>> {
        let mut out = vec![0.0; self.horizon];
        self.predict_into(variate, input, &mut out)?;
        Ok(out)
    }

    /// Mean squared error of the model on the given windows.
    pub fn score(&self, variate: usize, windows: &[TrainingWindow<'_>]) -> Result<f64> {
        let mut sum = 0.0;
        let mut out = vec![0.0; self.horizon];
        for w in windows {
            self.check_window(w)?;
            self.predict_into(variate, w.input, &mut out)?;
            sum += out.iter().zip(w.target).map(|(p, t)| (p - t) * (p - t)).sum::<f64>();
        }
        Ok(sum / (windows.len() * self.horizon) as f64)
    }

    pub fn info(&self) -> ModelInfo {
        ModelInfo {
            lookback: self.lookback,
            horizon: self.horizon,
            lambda: self.lambda,
            norm: self.norm,
            maps: self.maps.len(),
            sha256: hex::encode(Sha256::digest(self.payload())),
        }
    }

    fn payload(&self) -> Vec<u8> {
        let mut out = Vec::new();
        out.extend_from_slice(MODEL_MAGIC);
        for v in [self.lookback as u64, self.horizon as u64, self.maps.len() as u64] {
            out.extend_from_slice(&v.to_le_bytes());
        }
        out.extend_from_slice(&self.lambda.to_le_bytes());
        out.push(match self.norm {
            NormMode::Window => 1,
            NormMode::None => 0,
        });
        for m in &self.maps {
            for x in m.weights.iter().chain(&m.bias) {
                out.extend_from_slice(&x.to_le_bytes());
            }
        }
        out
    }

    /// Binary blob: header, little-endian maps, trailing SHA-256 of the rest.
    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        if !self.is_fitted() {
            return Err(Error::Unfitted);
        }
        let mut out = self.payload();
        let digest = Sha256::digest(&out);
        out.extend_from_slice(&digest);
        Ok(out)
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        const HEADER: usize = 8 + 3 * 8 + 8 + 1;
        let bad = |m: &str| Error::malformed("model file", m.to_string());
        if bytes.len() < HEADER + 32 || &bytes[..8] != MODEL_MAGIC {
            return Err(bad("missing header"));
        }
        let (payload, digest) = bytes.split_at(bytes.len() - 32);
        let actual = Sha256::digest(payload);
        if actual.as_slice() != digest {
            return Err(Error::Checksum {
                file: "model".into(),
                expected: hex::encode(digest),
                actual: hex::encode(actual),
            });
        }
        let u = |i: usize| u64::from_le_bytes(payload[8 + 8 * i..16 + 8 * i].try_into().unwrap()) as usize;
        let (lookback, horizon, count) = (u(0), u(1), u(2));
        let lambda = f64::from_le_bytes(payload[32..40].try_into().unwrap());
        let norm = match payload[40] {
            1 => NormMode::Window,
            0 => NormMode::None,
            _ => return Err(bad("unknown normalization mode")),
        };
        let per_map = lookback
            .checked_mul(horizon)
            .and_then(|x| x.checked_add(horizon))
            .ok_or_else(|| bad("dimensions overflow"))?;
        let expected = count.checked_mul(per_map).and_then(|x| x.checked_mul(8));
        if expected != Some(payload.len() - HEADER) {
            return Err(bad("payload size disagrees with dimensions"));
        }
        let values: Vec<f64> =
            payload[HEADER..].chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap())).collect();
        let maps = values
            .chunks_exact(per_map)
            .map(|c| LinearMap {
                weights: c[..lookback * horizon].to_vec(),
                bias: c[lookback * horizon..].to_vec(),
            })
            .collect();
        Self::from_maps(lookback, horizon, lambda, norm, maps)
    }

    pub fn save(&self, path: &Path) -> Result<ModelInfo> {
        fs::write(path, self.to_bytes()?).map_err(|e| Error::io(path, e))?;
        Ok(self.info())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
        Self::from_bytes(&bytes)
    }
}

/// Manifest entry describing a saved model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelInfo {
    pub lookback: usize,
    pub horizon: usize,
    pub lambda: f64,
    pub norm: NormMode,
    pub maps: usize,
    pub sha256: String,
}

/// Windows over one series at the given stride.
pub fn series_windows(
    series: &[f64],
    lookback: usize,
    horizon: usize,
    stride: usize,
) -> Vec<TrainingWindow<'_>> {
    crate::dataset::windows(0..series.len(), lookback, horizon, stride)
        .into_iter()
        .map(|w| TrainingWindow { input: &series[w.input], target: &series[w.target] })
        .collect()
}
