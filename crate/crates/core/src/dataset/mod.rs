//! Instance configuration, grid expansion, generation, splits and windows.

mod storage;

use std::collections::HashSet;
use std::fmt;
use std::ops::Range;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_with::{serde_as, DisplayFromStr};
use sha2::{Digest, Sha256};

use crate::assignment::{
    self, recipe_for, variate_stream_path, Census, CensusItem, ComponentTemplate, VariateRecipe,
};
use crate::components::{
    self, ComponentId, ComponentKind, ComponentParams, DependentKind, FrequencyBand, ImpulseConfig,
    SeasonalConfig, TrendConfig, Waveform,
};
use crate::error::{Error, Result};
use crate::prng::StreamPath;
use crate::stats;
use crate::synthesis::{self, MixingRecord, SnrSpec};

pub use storage::{read_instance, write_instance, Checksums, Manifest, FORMAT_MAJOR, FORMAT_VERSION};

/// Weight resampling attempts when a variate's components cancel out.
const MAX_AGGREGATE_RETRIES: u64 = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoiseKind {
    White,
    Brownian,
    Impulse,
    Trend,
    Seasonal,
}

impl NoiseKind {
    pub const ALL: [NoiseKind; 5] =
        [NoiseKind::White, NoiseKind::Brownian, NoiseKind::Impulse, NoiseKind::Trend, NoiseKind::Seasonal];

    pub fn name(self) -> &'static str {
        match self {
            NoiseKind::White => "white",
            NoiseKind::Brownian => "brownian",
            NoiseKind::Impulse => "impulse",
            NoiseKind::Trend => "trend",
            NoiseKind::Seasonal => "seasonal",
        }
    }
}

impl fmt::Display for NoiseKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for NoiseKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "white" => Ok(NoiseKind::White),
            "brownian" | "red" => Ok(NoiseKind::Brownian),
            "impulse" => Ok(NoiseKind::Impulse),
            "trend" | "trend_noise" => Ok(NoiseKind::Trend),
            "seasonal" | "seasonal_noise" => Ok(NoiseKind::Seasonal),
            other => Err(Error::invalid("noise_kind", format!("unknown noise kind {other:?}"))),
        }
    }
}

/// Optional-noise label used in keys and tables.
pub fn noise_label(noise: Option<NoiseKind>) -> &'static str {
    noise.map_or("none", NoiseKind::name)
}

/// Instance counts per component family. `None` picks the defaults:
/// `V` seasonal, `V/4` trend (or `V` when trend noise needs every variate to
/// carry a trend), `V` noise; each instance is shared by a uniform
/// `sharing.0..=sharing.1` variates.
#[serde_as]
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CensusConfig {
    #[serde_as(as = "Option<DisplayFromStr>")]
    pub seasonal_instances: Option<usize>,
    #[serde_as(as = "Option<DisplayFromStr>")]
    pub trend_instances: Option<usize>,
    #[serde_as(as = "Option<DisplayFromStr>")]
    pub noise_instances: Option<usize>,
    #[serde_as(as = "(DisplayFromStr, DisplayFromStr)")]
    pub sharing: (usize, usize),
}

impl Default for CensusConfig {
    fn default() -> Self {
        CensusConfig {
            seasonal_instances: None,
            trend_instances: None,
            noise_instances: None,
            sharing: (1, 3),
        }
    }
}

#[serde_as]
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceConfig {
    #[serde_as(as = "DisplayFromStr")]
    pub samples: usize,
    #[serde_as(as = "DisplayFromStr")]
    pub variates: usize,
    pub seasonal_kind: Waveform,
    pub frequency_band: FrequencyBand,
    /// `None` disables trend components.
    pub trend: Option<TrendConfig>,
    pub noise: Option<NoiseKind>,
    pub snr: SnrSpec,
    pub impulse: ImpulseConfig,
    pub census: CensusConfig,
    #[serde_as(as = "DisplayFromStr")]
    pub penalty: f64,
    #[serde_as(as = "DisplayFromStr")]
    pub lookback: usize,
    #[serde_as(as = "DisplayFromStr")]
    pub horizon: usize,
    #[serde_as(as = "DisplayFromStr")]
    pub data_seed: u64,
}

impl Default for InstanceConfig {
    /// Full reference scale: four years of hourly samples, 800 variates.
    fn default() -> Self {
        InstanceConfig {
            samples: components::REFERENCE_SAMPLES,
            variates: 800,
            seasonal_kind: Waveform::Sine,
            frequency_band: FrequencyBand::new(1000.0, 1500.0),
            trend: None,
            noise: None,
            snr: SnrSpec::infinite(),
            impulse: ImpulseConfig::default(),
            census: CensusConfig::default(),
            penalty: 1.0,
            lookback: 96,
            horizon: 96,
            data_seed: 0,
        }
    }
}

impl InstanceConfig {
    /// One year of hourly samples over 16 variates; bands rescaled to match.
    pub fn desk() -> Self {
        InstanceConfig {
            samples: 8760,
            variates: 16,
            frequency_band: FrequencyBand::new(1000.0, 1500.0).rescaled(components::REFERENCE_SAMPLES, 8760),
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.samples < 2 {
            return Err(Error::invalid("samples", "need at least two samples"));
        }
        if self.variates == 0 {
            return Err(Error::invalid("variates", "need at least one variate"));
        }
        if self.lookback == 0 || self.horizon == 0 {
            return Err(Error::invalid("windows", "lookback and horizon must be >= 1"));
        }
        self.frequency_band.validate(self.samples)?;
        if let Some(t) = &self.trend {
            t.validate()?;
        }
        self.snr.validate()?;
        if self.noise.is_none() && !self.snr.is_infinite() {
            return Err(Error::invalid(
                "snr",
                format!("finite snr {} requires a noise kind", self.snr.global),
            ));
        }
        if self.noise == Some(NoiseKind::Trend) && self.trend.is_none() {
            return Err(Error::invalid("noise", "trend noise requires trend components (enable trend)"));
        }
        if self.noise == Some(NoiseKind::Impulse) {
            self.impulse.validate()?;
        }
        if !(self.penalty >= 0.0 && self.penalty.is_finite()) {
            return Err(Error::invalid("penalty", format!("penalty {} must be >= 0", self.penalty)));
        }
        let (lo, hi) = self.census.sharing;
        if lo == 0 || lo > hi {
            return Err(Error::invalid(
                "sharing",
                format!("sharing range ({lo}, {hi}) must satisfy 1 <= lo <= hi"),
            ));
        }
        for (name, count) in [
            ("seasonal_instances", self.census.seasonal_instances),
            ("trend_instances", self.census.trend_instances),
            ("noise_instances", self.census.noise_instances),
        ] {
            if count == Some(0) {
                return Err(Error::invalid(name, "instance count must be >= 1"));
            }
        }
        Ok(())
    }

    /// Table key without the data seed.
    pub fn cell_key(&self) -> String {
        format!(
            "{}_b{}-{}_{}_{}_snr{}",
            self.seasonal_kind,
            self.frequency_band.lo,
            self.frequency_band.hi,
            if self.trend.is_some() { "trend" } else { "notrend" },
            noise_label(self.noise),
            self.snr.global,
        )
    }
}

/// Samples every component instance and its sharing multiplicity.
pub fn build_census(config: &InstanceConfig) -> Result<Census> {
    let seed = config.data_seed;
    let v = config.variates;
    let mut share = StreamPath::new(seed, "census", 0).derive();
    let (lo, hi) = config.census.sharing;
    let mut multiplicity = || (share.uniform_int(lo as u64, hi as u64) as usize).min(v);
    let mut items = Vec::new();

    let seasonal_cfg = SeasonalConfig { kinds: vec![config.seasonal_kind], band: config.frequency_band };
    for i in 0..config.census.seasonal_instances.unwrap_or(v) {
        let path = StreamPath::new(seed, "seasonal", i as u64);
        let spec = components::sample_seasonal(&seasonal_cfg, config.samples, &mut path.derive())?;
        items.push(CensusItem {
            id: ComponentId { kind: ComponentKind::Seasonal, index: items.len() },
            template: ComponentTemplate::Fixed(ComponentParams::Seasonal(spec)),
            stream: path,
            multiplicity: multiplicity(),
        });
    }

    let cover_trend = config.noise == Some(NoiseKind::Trend);
    if let Some(trend_cfg) = &config.trend {
        let default = if cover_trend { v } else { (v / 4).max(1) };
        for i in 0..config.census.trend_instances.unwrap_or(default) {
            let path = StreamPath::new(seed, "trend", i as u64);
            let spec = components::sample_trend(trend_cfg, config.samples, &mut path.derive())?;
            items.push(CensusItem {
                id: ComponentId { kind: ComponentKind::Trend, index: items.len() },
                template: ComponentTemplate::Fixed(ComponentParams::Trend(spec)),
                stream: path,
                multiplicity: multiplicity(),
            });
        }
    }

    if let Some(noise) = config.noise {
        for i in 0..config.census.noise_instances.unwrap_or(v) {
            let path = StreamPath::new(seed, "noise", i as u64);
            let template = match noise {
                NoiseKind::White => ComponentTemplate::Fixed(ComponentParams::White),
                NoiseKind::Brownian => ComponentTemplate::Fixed(ComponentParams::Brownian),
                NoiseKind::Impulse => {
                    let mut params = path.child("params", 0).derive();
                    let spec = components::sample_impulse(&config.impulse, config.samples, &mut params)?;
                    ComponentTemplate::Fixed(ComponentParams::Impulse(spec))
                }
                NoiseKind::Trend => ComponentTemplate::Dependent(DependentKind::TrendNoise),
                NoiseKind::Seasonal => ComponentTemplate::Dependent(DependentKind::SeasonalNoise),
            };
            let kind = match &template {
                ComponentTemplate::Fixed(p) => p.kind(),
                ComponentTemplate::Dependent(d) => d.component_kind(),
            };
            items.push(CensusItem {
                id: ComponentId { kind, index: items.len() },
                template,
                stream: path.child("series", 0),
                multiplicity: multiplicity(),
            });
        }
    }

    Ok(Census { items, cover_trend, cover_noise: config.noise.is_some() })
}

/// Column-major `rows x cols` matrix of f64.
#[derive(Debug, Clone, PartialEq)]
pub struct SeriesMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl SeriesMatrix {
    pub fn from_columns(rows: usize, columns: Vec<Vec<f64>>) -> Result<Self> {
        let cols = columns.len();
        let mut data = Vec::with_capacity(rows * cols);
        for (i, c) in columns.into_iter().enumerate() {
            if c.len() != rows {
                return Err(Error::shape(format!("column {i}"), rows, c.len()));
            }
            data.extend(c);
        }
        Ok(SeriesMatrix { rows, cols, data })
    }

    pub fn from_column_major(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::shape("matrix data", rows * cols, data.len()));
        }
        Ok(SeriesMatrix { rows, cols, data })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn column(&self, c: usize) -> &[f64] {
        &self.data[c * self.rows..(c + 1) * self.rows]
    }

    pub fn columns(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks_exact(self.rows.max(1))
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.data[col * self.rows + row]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    /// Little-endian IEEE-754 bytes in column-major order.
    pub fn to_le_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(self.data.len() * 8);
        for x in &self.data {
            out.extend_from_slice(&x.to_le_bytes());
        }
        out
    }

    pub fn sha256(&self) -> String {
        hex::encode(Sha256::digest(self.to_le_bytes()))
    }
}

/// A generated instance: clean and mixed matrices plus the manifest that
/// records configuration, recipes, realized mixing and checksums.
#[derive(Debug, Clone, PartialEq)]
pub struct DatasetInstance {
    pub manifest: Manifest,
    pub clean: SeriesMatrix,
    pub mixed: SeriesMatrix,
}

impl DatasetInstance {
    pub fn config(&self) -> &InstanceConfig {
        &self.manifest.config
    }

    pub fn recipes(&self) -> &[VariateRecipe] {
        &self.manifest.recipes
    }

    pub fn samples(&self) -> usize {
        self.clean.rows()
    }

    pub fn variates(&self) -> usize {
        self.clean.cols()
    }

    /// Re-checks shapes, checksums and every per-column invariant.
    pub fn validate(&self) -> Result<()> {
        let cfg = self.config();
        for (name, m) in [("clean", &self.clean), ("mixed", &self.mixed)] {
            if m.rows() != cfg.samples || m.cols() != cfg.variates {
                return Err(Error::shape(
                    format!("{name} matrix"),
                    format!("{}x{}", cfg.samples, cfg.variates),
                    format!("{}x{}", m.rows(), m.cols()),
                ));
            }
        }
        if self.manifest.recipes.len() != cfg.variates || self.manifest.mixing.len() != cfg.variates {
            return Err(Error::malformed(
                "manifest",
                format!("expected {} recipes and mixing records", cfg.variates),
            ));
        }
        let sums = [
            ("clean.f64", &self.manifest.checksums.clean_sha256, &self.clean),
            ("mixed.f64", &self.manifest.checksums.mixed_sha256, &self.mixed),
        ];
        for (file, expected, m) in sums {
            let actual = m.sha256();
            if &actual != expected {
                return Err(Error::Checksum { file: file.into(), expected: expected.clone(), actual });
            }
        }
        for v in 0..cfg.variates {
            check_column(self.clean.column(v), self.mixed.column(v), self.manifest.mixing[v].as_ref())
                .map_err(|e| e.in_variate(v))?;
        }
        Ok(())
    }
}

/// Column tolerances of the generator contract.
pub const MEAN_TOLERANCE: f64 = 1e-9;
pub const VARIANCE_TOLERANCE: f64 = 1e-8;
pub const SNR_RELATIVE_TOLERANCE: f64 = 1e-8;

/// Empirical SNR of a stored column: power of the scaled clean part over the
/// power of what remains of the mixed series.
pub fn empirical_snr(clean: &[f64], mixed: &[f64], w_signal: f64) -> f64 {
    let residual: Vec<f64> = clean.iter().zip(mixed).map(|(c, m)| m - w_signal * c).collect();
    w_signal * w_signal * stats::population_variance(clean) / stats::population_variance(&residual)
}

fn check_column(clean: &[f64], mixed: &[f64], mixing: Option<&MixingRecord>) -> Result<()> {
    let fail = |m: String| Err(Error::degenerate("column", m));
    let mean = stats::mean(clean);
    let var = stats::population_variance(clean);
    if mean.abs() >= MEAN_TOLERANCE || (var - 1.0).abs() > VARIANCE_TOLERANCE {
        return fail(format!("clean mean {mean:e} variance {var}"));
    }
    match mixing {
        None => {
            if clean != mixed {
                return fail("noise-free column differs from clean".into());
            }
        }
        Some(m) => {
            let mvar = stats::population_variance(mixed);
            if (mvar - 1.0).abs() > VARIANCE_TOLERANCE {
                return fail(format!("mixed variance {mvar}"));
            }
            let snr = empirical_snr(clean, mixed, m.w_signal);
            if ((snr - m.snr) / m.snr).abs() > SNR_RELATIVE_TOLERANCE {
                return fail(format!("empirical snr {snr} vs configured {}", m.snr));
            }
        }
    }
    Ok(())
}

pub fn generate_instance(config: &InstanceConfig) -> Result<DatasetInstance> {
    generate_instance_with_workers(config, None)
}

/// Generates with a dedicated pool of `workers` threads, or rayon's global
/// pool for `None`. Output is identical for every worker count.
pub fn generate_instance_with_workers(
    config: &InstanceConfig,
    workers: Option<usize>,
) -> Result<DatasetInstance> {
    config.validate()?;
    let census = build_census(config)?;
    let mut assign_stream = StreamPath::new(config.data_seed, "assignment", 0).derive();
    let attachments =
        assignment::assign_components(&census, config.variates, config.penalty, &mut assign_stream)?;

    let synth_one = |v: usize| -> Result<(VariateRecipe, synthesis::VariateTriple)> {
        let base = variate_stream_path(config.data_seed, v);
        let mut path = base.clone();
        let mut attempt = 0;
        loop {
            let recipe = recipe_for(&census, v, &attachments[v], config.snr, path.clone())?;
            match synthesis::synthesize_variate(&recipe, config.samples) {
                Ok(triple) => return Ok((recipe, triple)),
                Err(e)
                    if attempt < MAX_AGGREGATE_RETRIES
                        && matches!(e.root(), Error::Degenerate { what, .. } if what == "aggregate") =>
                {
                    attempt += 1;
                    path = base.child("retry", attempt);
                }
                Err(e) => return Err(e),
            }
        }
    };

    let results: Vec<Result<(VariateRecipe, synthesis::VariateTriple)>> = match workers {
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n.max(1))
                .build()
                .map_err(|e| Error::invalid("workers", e.to_string()))?;
            pool.install(|| (0..config.variates).into_par_iter().map(synth_one).collect())
        }
        None => (0..config.variates).into_par_iter().map(synth_one).collect(),
    };

    let mut recipes = Vec::with_capacity(config.variates);
    let mut mixing = Vec::with_capacity(config.variates);
    let mut clean = Vec::with_capacity(config.variates);
    let mut mixed = Vec::with_capacity(config.variates);
    for r in results {
        let (recipe, triple) = r?;
        recipes.push(recipe);
        mixing.push(triple.mixing);
        clean.push(triple.clean);
        mixed.push(triple.mixed);
    }
    let clean = SeriesMatrix::from_columns(config.samples, clean)?;
    let mixed = SeriesMatrix::from_columns(config.samples, mixed)?;
    let manifest = Manifest::new(config.clone(), recipes, mixing, &clean, &mixed);
    Ok(DatasetInstance { manifest, clean, mixed })
}

/// Axis lists of an experiment grid. Expansion order is lexicographic over
/// (seasonal kind, band, trend, noise, snr, data repeat), in the listed order
/// of each axis. Noise-free cells only pair with an infinite SNR; finite
/// SNRs on the `None` noise axis are skipped.
#[derive(Debug, Clone, PartialEq)]
pub struct GridAxes {
    pub base: InstanceConfig,
    pub seasonal_kinds: Vec<Waveform>,
    pub bands: Vec<FrequencyBand>,
    pub trend: Vec<bool>,
    pub noise_kinds: Vec<Option<NoiseKind>>,
    pub snrs: Vec<f64>,
    pub data_seeds: usize,
    pub train_seeds: usize,
    pub seed: u64,
}

impl GridAxes {
    /// Reference axes at the scale of `base`: every waveform, every band
    /// rescaled to `base.samples`, no trend, all five noise kinds, finite
    /// SNRs plus the noise-free reference, three data and three training
    /// seeds.
    pub fn reference(base: InstanceConfig) -> Self {
        let n = base.samples;
        GridAxes {
            seasonal_kinds: Waveform::ALL.to_vec(),
            bands: components::REFERENCE_BANDS
                .iter()
                .map(|b| b.rescaled(components::REFERENCE_SAMPLES, n))
                .collect(),
            trend: vec![false],
            noise_kinds: NoiseKind::ALL.iter().copied().map(Some).collect(),
            snrs: vec![f64::INFINITY, 1000.0, 100.0, 10.0, 1.0],
            data_seeds: 3,
            train_seeds: 3,
            seed: 0,
            base,
        }
    }

    pub fn data_seed(&self, repeat: usize) -> u64 {
        StreamPath::new(self.seed, "data_seed", repeat as u64).derive_seed()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridCell {
    /// Directory-safe unique name.
    pub key: String,
    pub repeat: usize,
    pub config: InstanceConfig,
}

pub fn expand_grid(axes: &GridAxes) -> Result<Vec<GridCell>> {
    let empty = [
        ("seasonal_kinds", axes.seasonal_kinds.is_empty()),
        ("bands", axes.bands.is_empty()),
        ("trend", axes.trend.is_empty()),
        ("noise_kinds", axes.noise_kinds.is_empty()),
        ("snrs", axes.snrs.is_empty()),
        ("data_seeds", axes.data_seeds == 0),
        ("train_seeds", axes.train_seeds == 0),
    ];
    if let Some((axis, _)) = empty.iter().find(|(_, e)| *e) {
        return Err(Error::invalid(*axis, "grid axis is empty"));
    }
    let mut cells = Vec::new();
    let mut seen = HashSet::new();
    for &kind in &axes.seasonal_kinds {
        for &band in &axes.bands {
            for &trend in &axes.trend {
                for &noise in &axes.noise_kinds {
                    for &snr in &axes.snrs {
                        if noise.is_none() && snr.is_finite() {
                            continue;
                        }
                        for repeat in 0..axes.data_seeds {
                            let mut config = axes.base.clone();
                            config.seasonal_kind = kind;
                            config.frequency_band = band;
                            // trend noise is only defined on variates that carry a trend
                            let with_trend = trend || noise == Some(NoiseKind::Trend);
                            config.trend = with_trend.then(|| axes.base.trend.unwrap_or_default());
                            config.noise = noise;
                            config.snr = SnrSpec::new(snr, axes.base.snr.sigma);
                            config.data_seed = axes.data_seed(repeat);
                            config.validate()?;
                            let key = format!("{}_d{}", config.cell_key(), repeat);
                            if seen.insert(key.clone()) {
                                cells.push(GridCell { key, repeat, config });
                            }
                        }
                    }
                }
            }
        }
    }
    Ok(cells)
}

/// Number of (instance, training seed) runs a grid implies.
pub fn run_count(axes: &GridAxes, cells: &[GridCell]) -> usize {
    cells.len() * axes.train_seeds
}

/// Chronological train/validation/test fractions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitSpec {
    pub train: f64,
    pub val: f64,
    pub test: f64,
}

impl Default for SplitSpec {
    fn default() -> Self {
        SplitSpec { train: 0.7, val: 0.1, test: 0.2 }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SplitRanges {
    pub train: Range<usize>,
    pub val: Range<usize>,
    pub test: Range<usize>,
}

impl SplitSpec {
    pub fn validate(&self) -> Result<()> {
        let parts = [self.train, self.val, self.test];
        if parts.iter().any(|f| !(*f > 0.0)) || (parts.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
            return Err(Error::invalid(
                "split",
                format!("fractions {}/{}/{} must be positive and sum to 1", self.train, self.val, self.test),
            ));
        }
        Ok(())
    }

    /// Contiguous ranges covering `0..n`; each must hold `min_len` samples.
    pub fn ranges(&self, n: usize, min_len: usize) -> Result<SplitRanges> {
        self.validate()?;
        let train = (n as f64 * self.train).round() as usize;
        let val = (n as f64 * self.val).round() as usize;
        let train_end = train.min(n);
        let val_end = (train_end + val).min(n);
        let out = SplitRanges { train: 0..train_end, val: train_end..val_end, test: val_end..n };
        for (name, r) in [("train", &out.train), ("val", &out.val), ("test", &out.test)] {
            if r.len() < min_len {
                return Err(Error::invalid(
                    "split",
                    format!("{name} split has {} samples, needs at least {min_len}", r.len()),
                ));
            }
        }
        Ok(out)
    }
}

impl FromStr for SplitSpec {
    type Err = Error;

    /// `"0.7,0.1,0.2"`.
    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<f64> = s
            .split(',')
            .map(|p| p.trim().parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| Error::invalid("split", format!("{s:?}: {e}")))?;
        match parts[..] {
            [train, val, test] => {
                let spec = SplitSpec { train, val, test };
                spec.validate()?;
                Ok(spec)
            }
            _ => Err(Error::invalid("split", format!("{s:?}: expected three fractions"))),
        }
    }
}

/// Splits an instance, requiring room for one window in every part.
pub fn split(instance: &DatasetInstance, spec: &SplitSpec) -> Result<SplitRanges> {
    let cfg = instance.config();
    spec.ranges(instance.samples(), cfg.lookback + cfg.horizon)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WindowPair {
    pub input: Range<usize>,
    pub target: Range<usize>,
}

/// `([t, t+T), [t+T, t+T+H))` for `t` stepping by `stride` inside `range`.
/// Empty when the range cannot hold one window.
pub fn windows(range: Range<usize>, lookback: usize, horizon: usize, stride: usize) -> Vec<WindowPair> {
    assert!(stride >= 1, "stride must be >= 1");
    let span = lookback + horizon;
    if range.len() < span {
        return Vec::new();
    }
    (range.start..=range.end - span)
        .step_by(stride)
        .map(|t| WindowPair { input: t..t + lookback, target: t + lookback..t + span })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small(noise: Option<NoiseKind>, snr: f64) -> InstanceConfig {
        InstanceConfig {
            samples: 1024,
            variates: 6,
            frequency_band: FrequencyBand::new(20.0, 60.0),
            noise,
            snr: SnrSpec::new(snr, 0.0),
            trend: Some(TrendConfig::default()),
            data_seed: 5,
            ..Default::default()
        }
    }

    #[test]
    fn grid_counts() {
        let mut axes = GridAxes::reference(InstanceConfig::desk());
        axes.seasonal_kinds = vec![Waveform::Sine, Waveform::SmoothSquare];
        axes.bands.truncate(3);
        axes.noise_kinds = vec![Some(NoiseKind::White)];
        axes.snrs = vec![10.0];
        let cells = expand_grid(&axes).unwrap();
        assert_eq!(cells.len(), 18);
        let keys: HashSet<_> = cells.iter().map(|c| c.key.clone()).collect();
        assert_eq!(keys.len(), 18);

        let mut noise_study = GridAxes::reference(InstanceConfig::default());
        noise_study.bands = vec![noise_study.bands[2], noise_study.bands[6]];
        noise_study.snrs = vec![1000.0, 100.0, 10.0, 1.0];
        let cells = expand_grid(&noise_study).unwrap();
        assert_eq!(cells.len(), 3 * 2 * 5 * 4 * 3);
        assert_eq!(run_count(&noise_study, &cells), 1080);
    }

    #[test]
    fn grid_order_is_lexicographic() {
        let mut axes = GridAxes::reference(InstanceConfig::desk());
        axes.seasonal_kinds = vec![Waveform::SmoothSawtooth, Waveform::Sine];
        axes.bands.truncate(2);
        axes.noise_kinds = vec![Some(NoiseKind::White)];
        axes.snrs = vec![1.0, 10.0];
        axes.data_seeds = 2;
        let cells = expand_grid(&axes).unwrap();
        let first: Vec<&str> = cells.iter().take(4).map(|c| c.key.as_str()).collect();
        assert_eq!(
            first,
            [
                "sawtooth_b1-125_notrend_white_snr1_d0",
                "sawtooth_b1-125_notrend_white_snr1_d1",
                "sawtooth_b1-125_notrend_white_snr10_d0",
                "sawtooth_b1-125_notrend_white_snr10_d1",
            ]
        );
        assert_eq!(cells[4].config.frequency_band, FrequencyBand::new(125.0, 250.0));
        assert_eq!(cells[8].config.seasonal_kind, Waveform::Sine);
        assert_eq!(cells[0].config.data_seed, cells[2].config.data_seed);
        assert_ne!(cells[0].config.data_seed, cells[1].config.data_seed);
    }

    #[test]
    fn noise_free_cells_pair_only_with_infinite_snr() {
        let mut axes = GridAxes::reference(InstanceConfig::desk());
        axes.seasonal_kinds = vec![Waveform::Sine];
        axes.bands.truncate(1);
        axes.noise_kinds = vec![None, Some(NoiseKind::White)];
        axes.snrs = vec![f64::INFINITY, 10.0];
        axes.data_seeds = 1;
        let keys: Vec<String> = expand_grid(&axes).unwrap().into_iter().map(|c| c.key).collect();
        assert_eq!(
            keys,
            [
                "sine_b1-125_notrend_none_snrinf_d0",
                "sine_b1-125_notrend_white_snrinf_d0",
                "sine_b1-125_notrend_white_snr10_d0",
            ]
        );
    }

    #[test]
    fn grid_rejects_empty_axis_and_nyquist() {
        let mut axes = GridAxes::reference(InstanceConfig::desk());
        axes.snrs.clear();
        assert_eq!(expand_grid(&axes).unwrap_err().field(), Some("snrs"));
        let mut axes = GridAxes::reference(InstanceConfig::desk());
        axes.bands = vec![FrequencyBand::new(4000.0, 5000.0)];
        assert_eq!(expand_grid(&axes).unwrap_err().field(), Some("frequency_band"));
    }

    #[test]
    fn rescaled_reference_bands_fit_desk_scale() {
        let bands: Vec<FrequencyBand> = components::REFERENCE_BANDS
            .iter()
            .map(|b| b.rescaled(components::REFERENCE_SAMPLES, 8760))
            .collect();
        assert_eq!(bands[0], FrequencyBand::new(1.0, 125.0));
        assert_eq!(bands[3], FrequencyBand::new(1500.0, 1625.0));
        assert_eq!(bands[6], FrequencyBand::new(4000.0, 4125.0));
    }

    #[test]
    fn split_examples() {
        let spec = SplitSpec::default();
        let r = spec.ranges(100, 1).unwrap();
        assert_eq!((r.train, r.val, r.test), (0..70, 70..80, 80..100));
        let r = spec.ranges(35_040, 192).unwrap();
        assert_eq!((r.train.len(), r.val.len(), r.test.len()), (24_528, 3504, 7008));
        assert!(SplitSpec { train: 0.7, val: 0.2, test: 0.2 }.validate().is_err());
        assert!(spec.ranges(300, 192).is_err());
        assert_eq!("0.6, 0.2, 0.2".parse::<SplitSpec>().unwrap().train, 0.6);
        assert!("0.6,0.4".parse::<SplitSpec>().is_err());
    }

    #[test]
    fn window_counts() {
        assert_eq!(windows(0..192, 96, 96, 1).len(), 1);
        assert_eq!(windows(0..193, 96, 96, 1).len(), 2);
        assert!(windows(0..100, 96, 96, 1).is_empty());
        for len in 192..260 {
            let ws = windows(10..10 + len, 96, 96, 1);
            // closed form against enumeration
            let enumerated = (10..10 + len).filter(|t| t + 192 <= 10 + len).count();
            assert_eq!(ws.len(), len - 96 - 96 + 1);
            assert_eq!(ws.len(), enumerated);
            assert!(ws.iter().all(|w| w.input.start >= 10 && w.target.end <= 10 + len));
        }
        let strided = windows(0..400, 96, 96, 96);
        assert_eq!(strided.len(), 3);
        assert_eq!(strided[1].input, 96..192);
        assert_eq!(strided[0].target, 96..192);
    }

    #[test]
    fn generated_columns_satisfy_contract() {
        for noise in NoiseKind::ALL {
            let cfg = small(Some(noise), 10.0);
            let inst = generate_instance(&cfg).unwrap();
            inst.validate().unwrap();
            assert_eq!((inst.samples(), inst.variates()), (1024, 6));
            for r in inst.recipes() {
                r.validate().unwrap();
                assert!(!r.noise_components.is_empty());
            }
        }
    }

    #[test]
    fn clean_signal_is_shared_across_snr_levels() {
        let a = generate_instance(&small(Some(NoiseKind::White), 1.0)).unwrap();
        let b = generate_instance(&small(Some(NoiseKind::White), 100.0)).unwrap();
        let c = generate_instance(&small(Some(NoiseKind::Brownian), 100.0)).unwrap();
        assert_eq!(a.clean, b.clean);
        assert_eq!(a.clean, c.clean);
        assert_ne!(a.mixed, b.mixed);
    }

    #[test]
    fn generation_is_deterministic_across_workers() {
        let cfg = small(Some(NoiseKind::Seasonal), 100.0);
        let one = generate_instance_with_workers(&cfg, Some(1)).unwrap();
        let many = generate_instance_with_workers(&cfg, Some(4)).unwrap();
        assert_eq!(one.manifest.checksums, many.manifest.checksums);
        assert_eq!(one, many);
    }

    #[test]
    fn config_validation_names_fields() {
        let mut cfg = InstanceConfig::desk();
        cfg.frequency_band = FrequencyBand::new(4000.0, 4500.0);
        assert_eq!(cfg.validate().unwrap_err().field(), Some("frequency_band"));
        let mut cfg = InstanceConfig::desk();
        cfg.snr = SnrSpec::new(10.0, 0.0);
        assert_eq!(cfg.validate().unwrap_err().field(), Some("snr"));
        let mut cfg = InstanceConfig::desk();
        cfg.noise = Some(NoiseKind::Trend);
        assert_eq!(cfg.validate().unwrap_err().field(), Some("noise"));
    }
}
