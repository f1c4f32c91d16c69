//! Hierarchically derived random streams.
//!
//! A [`StreamPath`] names a stream by a master seed plus an ordered list of
//! `(tag, index)` labels. The path is hashed with SHA-256 into the 256-bit key
//! of a ChaCha8 generator, so every component, variate and instance owns an
//! independent stream whose output does not depend on generation order or on
//! how many worker threads generate its siblings.

use std::fmt;

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use serde_with::{serde_as, DisplayFromStr};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

const DOMAIN: &[u8] = b"synthts/stream/v1";

/// Default cap on rejection rounds in [`RandomStream::truncated_gauss`].
pub const DEFAULT_MAX_REJECTIONS: usize = 10_000;

#[serde_as]
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Label {
    pub tag: String,
    #[serde_as(as = "DisplayFromStr")]
    pub index: u64,
}

/// Name of a random stream. Always carries at least one label.
#[serde_as]
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct StreamPath {
    #[serde_as(as = "DisplayFromStr")]
    master_seed: u64,
    labels: Vec<Label>,
}

impl StreamPath {
    pub fn new(master_seed: u64, tag: &str, index: u64) -> Self {
        StreamPath { master_seed, labels: vec![Label { tag: tag.to_owned(), index }] }
    }

    /// Extends the path by one label.
    pub fn child(&self, tag: &str, index: u64) -> Self {
        let mut labels = self.labels.clone();
        labels.push(Label { tag: tag.to_owned(), index });
        StreamPath { master_seed: self.master_seed, labels }
    }

    pub fn master_seed(&self) -> u64 {
        self.master_seed
    }

    pub fn labels(&self) -> &[Label] {
        &self.labels
    }

    fn key(&self) -> [u8; 32] {
        let mut hasher = Sha256::new();
        hasher.update(DOMAIN);
        hasher.update(self.master_seed.to_le_bytes());
        for label in &self.labels {
            // length-prefixed so ("ab",1)("c",2) and ("a",1)("bc",2) differ
            hasher.update((label.tag.len() as u32).to_le_bytes());
            hasher.update(label.tag.as_bytes());
            hasher.update(label.index.to_le_bytes());
        }
        hasher.finalize().into()
    }

    pub fn derive(&self) -> RandomStream {
        RandomStream { rng: ChaCha8Rng::from_seed(self.key()) }
    }

    /// A 64-bit value that is a pure function of the path, used to hand out
    /// derived seeds (e.g. one data seed per grid repeat).
    pub fn derive_seed(&self) -> u64 {
        self.derive().next_u64()
    }
}

impl fmt::Display for StreamPath {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.master_seed)?;
        for label in &self.labels {
            write!(f, "/{}:{}", label.tag, label.index)?;
        }
        Ok(())
    }
}

/// A derived stream. Not shareable between threads while drawing; move it.
#[derive(Debug, Clone)]
pub struct RandomStream {
    rng: ChaCha8Rng,
}

impl RandomStream {
    pub fn next_u64(&mut self) -> u64 {
        self.rng.next_u64()
    }

    /// Standard normal draw.
    pub fn gauss(&mut self) -> f64 {
        self.rng.sample(StandardNormal)
    }

    /// Uniform draw on `[lo, hi)`; returns `lo` when the interval is a point.
    pub fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        debug_assert!(lo <= hi, "uniform: lo {lo} > hi {hi}");
        if lo == hi {
            return lo;
        }
        let u: f64 = self.rng.random();
        let x = lo + (hi - lo) * u;
        // rounding can land exactly on hi for tiny intervals
        if x >= hi {
            lo
        } else {
            x
        }
    }

    /// Uniform integer on the closed range `[lo, hi]`.
    pub fn uniform_int(&mut self, lo: u64, hi: u64) -> u64 {
        debug_assert!(lo <= hi);
        self.rng.random_range(lo..=hi)
    }

    /// Uniform index in `0..len`.
    pub fn index(&mut self, len: usize) -> usize {
        debug_assert!(len > 0);
        self.rng.random_range(0..len)
    }

    /// `+1.0` or `-1.0` with equal probability.
    pub fn sign(&mut self) -> f64 {
        if self.rng.random::<bool>() {
            1.0
        } else {
            -1.0
        }
    }

    /// `N(mu, sigma^2)` restricted to `[lo, hi]` by rejection.
    pub fn truncated_gauss(&mut self, mu: f64, sigma: f64, lo: f64, hi: f64) -> Result<f64> {
        self.truncated_gauss_with_limit(mu, sigma, lo, hi, DEFAULT_MAX_REJECTIONS)
    }

    pub fn truncated_gauss_with_limit(
        &mut self,
        mu: f64,
        sigma: f64,
        lo: f64,
        hi: f64,
        max_rejections: usize,
    ) -> Result<f64> {
        if !(lo < hi) {
            return Err(Error::Sampling(format!("truncated gauss needs lo < hi, got [{lo}, {hi}]")));
        }
        if !(sigma > 0.0) || !sigma.is_finite() || !mu.is_finite() {
            return Err(Error::Sampling(format!(
                "truncated gauss needs finite mu and sigma > 0, got mu={mu} sigma={sigma}"
            )));
        }
        for _ in 0..max_rejections {
            let x = mu + sigma * self.gauss();
            if x >= lo && x <= hi {
                return Ok(x);
            }
        }
        Err(Error::Sampling(format!(
            "truncated gauss N({mu}, {sigma}^2) on [{lo}, {hi}] rejected {max_rejections} draws; band is mis-specified"
        )))
    }
}
