//! TOML configuration files.
//!
//! ```toml
//! [data]
//! samples = 8760
//! variates = 16
//! seed = 0
//! penalty = 1.0
//!
//! [components]
//! seasonal_kind = "sine"          # sine | sawtooth | square
//! frequency_band = [1500, 1625]
//! trend = false
//! trend_exponent = [0.5, 2.0]
//! sharing = [1, 3]
//!
//! [noise]
//! kind = "white"                  # none | white | brownian | impulse | trend | seasonal
//!
//! [snr]
//! global = 10.0                   # inf for noise-free
//! sigma = 0.0
//!
//! [grid]
//! seasonal_kinds = ["sine", "square"]
//! bands = [[1, 125], [1500, 1625]]
//! noise_kinds = ["white", "brownian"]
//! snrs = [1.0, 10.0, inf]
//! data_seeds = 3
//! train_seeds = 3
//!
//! [split]
//! train = 0.7
//! val = 0.1
//! test = 0.2
//!
//! [windows]
//! lookback = 96
//! horizon = 96
//! stride = 1
//! lambda = 1e-3
//! ```
//!
//! Every key is optional; omitted keys take the desk-scale defaults.

use std::fs;
use std::path::Path;

use serde::Deserialize;

use crate::baseline::DEFAULT_LAMBDA;
use crate::bench::BenchOptions;
use crate::components::{FrequencyBand, TrendConfig, Waveform};
use crate::dataset::{GridAxes, InstanceConfig, NoiseKind, SplitSpec};
use crate::error::{Error, Result};
use crate::synthesis::SnrSpec;

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    #[serde(default)]
    pub data: DataSection,
    #[serde(default)]
    pub components: ComponentsSection,
    #[serde(default)]
    pub noise: NoiseSection,
    #[serde(default)]
    pub snr: SnrSection,
    pub grid: Option<GridSection>,
    #[serde(default)]
    pub split: Option<SplitSpec>,
    #[serde(default)]
    pub windows: WindowsSection,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DataSection {
    pub samples: Option<usize>,
    pub variates: Option<usize>,
    pub seed: Option<u64>,
    pub penalty: Option<f64>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ComponentsSection {
    pub seasonal_kind: Option<String>,
    pub frequency_band: Option<[f64; 2]>,
    pub trend: Option<bool>,
    pub trend_exponent: Option<[f64; 2]>,
    pub sharing: Option<[usize; 2]>,
    pub seasonal_instances: Option<usize>,
    pub trend_instances: Option<usize>,
    pub noise_instances: Option<usize>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseSection {
    pub kind: Option<String>,
    pub impulse_count: Option<[u32; 2]>,
    pub impulse_sigma: Option<[f64; 2]>,
    pub impulse_amplitude: Option<[f64; 2]>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SnrSection {
    pub global: Option<f64>,
    pub sigma: Option<f64>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSection {
    pub seasonal_kinds: Option<Vec<String>>,
    pub bands: Option<Vec<[f64; 2]>>,
    pub trend: Option<Vec<bool>>,
    pub noise_kinds: Option<Vec<String>>,
    pub snrs: Option<Vec<f64>>,
    pub data_seeds: Option<usize>,
    pub train_seeds: Option<usize>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WindowsSection {
    pub lookback: Option<usize>,
    pub horizon: Option<usize>,
    pub stride: Option<usize>,
    pub lambda: Option<f64>,
    pub per_variate: Option<bool>,
}

fn parse_noise(s: &str) -> Result<Option<NoiseKind>> {
    if s == "none" {
        Ok(None)
    } else {
        s.parse().map(Some)
    }
}

fn band(b: [f64; 2]) -> FrequencyBand {
    FrequencyBand::new(b[0], b[1])
}

impl ConfigFile {
    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::invalid("config", e.message().to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text)
    }

    /// Instance configuration; `seed` overrides the file's data seed.
    pub fn instance(&self, seed: Option<u64>) -> Result<InstanceConfig> {
        let mut cfg = InstanceConfig::desk();
        let d = &self.data;
        cfg.samples = d.samples.unwrap_or(cfg.samples);
        cfg.variates = d.variates.unwrap_or(cfg.variates);
        cfg.data_seed = seed.or(d.seed).unwrap_or(cfg.data_seed);
        cfg.penalty = d.penalty.unwrap_or(cfg.penalty);
        if d.samples.is_some() && self.components.frequency_band.is_none() {
            cfg.frequency_band = FrequencyBand::new(1000.0, 1500.0)
                .rescaled(crate::components::REFERENCE_SAMPLES, cfg.samples);
        }

        let c = &self.components;
        if let Some(k) = &c.seasonal_kind {
            cfg.seasonal_kind = k.parse()?;
        }
        if let Some(b) = c.frequency_band {
            cfg.frequency_band = band(b);
        }
        let trend = TrendConfig {
            exponent_range: c.trend_exponent.map_or(TrendConfig::default().exponent_range, |e| (e[0], e[1])),
        };
        cfg.trend = c.trend.unwrap_or(false).then_some(trend);
        if let Some(s) = c.sharing {
            cfg.census.sharing = (s[0], s[1]);
        }
        cfg.census.seasonal_instances = c.seasonal_instances;
        cfg.census.trend_instances = c.trend_instances;
        cfg.census.noise_instances = c.noise_instances;

        let n = &self.noise;
        if let Some(k) = &n.kind {
            cfg.noise = parse_noise(k)?;
        }
        if let Some(r) = n.impulse_count {
            cfg.impulse.count = (r[0], r[1]);
        }
        if let Some(r) = n.impulse_sigma {
            cfg.impulse.sigma = (r[0], r[1]);
        }
        if let Some(r) = n.impulse_amplitude {
            cfg.impulse.amplitude = (r[0], r[1]);
        }

        let default_snr = if cfg.noise.is_some() { 10.0 } else { f64::INFINITY };
        cfg.snr = SnrSpec::new(self.snr.global.unwrap_or(default_snr), self.snr.sigma.unwrap_or(0.0));
        cfg.lookback = self.windows.lookback.unwrap_or(cfg.lookback);
        cfg.horizon = self.windows.horizon.unwrap_or(cfg.horizon);
        cfg.validate()?;
        Ok(cfg)
    }

    /// Grid axes; axes missing from `[grid]` hold the single value of the
    /// base instance.
    pub fn grid(&self, seed: Option<u64>) -> Result<GridAxes> {
        let base = self.instance(seed)?;
        let g = self.grid.clone().unwrap_or_default();
        let kinds = match &g.seasonal_kinds {
            Some(ks) => ks.iter().map(|k| k.parse()).collect::<Result<Vec<Waveform>>>()?,
            None => vec![base.seasonal_kind],
        };
        let noise_kinds = match &g.noise_kinds {
            Some(ns) => ns.iter().map(|n| parse_noise(n)).collect::<Result<Vec<_>>>()?,
            None => vec![base.noise],
        };
        Ok(GridAxes {
            seasonal_kinds: kinds,
            bands: g.bands.map_or(vec![base.frequency_band], |bs| bs.into_iter().map(band).collect()),
            trend: g.trend.unwrap_or_else(|| vec![base.trend.is_some()]),
            noise_kinds,
            snrs: g.snrs.unwrap_or_else(|| vec![base.snr.global]),
            data_seeds: g.data_seeds.unwrap_or(1),
            train_seeds: g.train_seeds.unwrap_or(1),
            seed: base.data_seed,
            base,
        })
    }

    pub fn split(&self) -> SplitSpec {
        self.split.unwrap_or_default()
    }

    pub fn bench_options(&self) -> BenchOptions {
        let w = &self.windows;
        let d = BenchOptions::default();
        BenchOptions {
            split: self.split(),
            lookback: w.lookback.unwrap_or(d.lookback),
            horizon: w.horizon.unwrap_or(d.horizon),
            stride: w.stride.unwrap_or(d.stride),
            lambda: w.lambda.unwrap_or(DEFAULT_LAMBDA),
            per_variate: w.per_variate.unwrap_or(false),
            ..d
        }
    }
}
