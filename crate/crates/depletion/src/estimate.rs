//! Monte Carlo estimates and the deterministic sharded sampling driver.
//!
//! Every stochastic integral in the toolkit returns a [`CoefficientEstimate`]:
//! value, standard error, sample count and a record of the truncation caps
//! that shaped it. Sampling is sharded over ChaCha streams so that a run is
//! reproducible from `(seed, shard count)` alone, independent of how many
//! worker threads execute the shards.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

/// Record of every cutoff parameter that entered an estimate.
///
/// Series assemblers refuse to mix estimates whose truncations differ, so
/// the record doubles as a compatibility key.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Truncation(BTreeMap<String, i64>);

impl Truncation {
    pub fn new() -> Self {
        Truncation(BTreeMap::new())
    }

    pub fn with(mut self, key: &str, value: i64) -> Self {
        self.0.insert(key.to_string(), value);
        self
    }

    pub fn get(&self, key: &str) -> Option<i64> {
        self.0.get(key).copied()
    }

    pub fn entries(&self) -> impl Iterator<Item = (&str, i64)> {
        self.0.iter().map(|(k, v)| (k.as_str(), *v))
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl std::fmt::Display for Truncation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let parts: Vec<String> = self.0.iter().map(|(k, v)| format!("{k}={v}")).collect();
        write!(f, "{}", parts.join(","))
    }
}

/// Value of a cluster integral together with its statistical uncertainty.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CoefficientEstimate {
    pub value: f64,
    pub std_error: f64,
    pub samples: u64,
    pub truncation: Truncation,
}

impl CoefficientEstimate {
    /// An exactly known value (zero variance, no sampling).
    pub fn exact(value: f64) -> Self {
        CoefficientEstimate {
            value,
            std_error: 0.0,
            samples: 0,
            truncation: Truncation::new(),
        }
    }

    pub fn with_truncation(mut self, truncation: Truncation) -> Self {
        self.truncation = truncation;
        self
    }

    /// Rescale the value and its error by a deterministic factor.
    pub fn scaled(&self, factor: f64) -> Self {
        CoefficientEstimate {
            value: self.value * factor,
            std_error: self.std_error * factor.abs(),
            samples: self.samples,
            truncation: self.truncation.clone(),
        }
    }

    /// Sum of independent estimates; errors add in quadrature.
    pub fn add(&self, other: &Self) -> Self {
        CoefficientEstimate {
            value: self.value + other.value,
            std_error: self.std_error.hypot(other.std_error),
            samples: self.samples.max(other.samples),
            truncation: self.truncation.clone(),
        }
    }

    /// Combined 1-sigma width against another independent estimate.
    pub fn combined_sigma(&self, other: &Self) -> f64 {
        self.std_error.hypot(other.std_error)
    }

    /// |self - reference| measured in combined standard errors.
    pub fn sigma_distance(&self, reference: &Self) -> f64 {
        let sigma = self.combined_sigma(reference);
        let diff = (self.value - reference.value).abs();
        if sigma == 0.0 {
            if diff == 0.0 {
                0.0
            } else {
                f64::INFINITY
            }
        } else {
            diff / sigma
        }
    }
}

/// Streaming mean/variance accumulator (Welford).
#[derive(Debug, Clone, Copy, Default)]
pub struct RunningStats {
    n: u64,
    mean: f64,
    m2: f64,
}

impl RunningStats {
    pub fn push(&mut self, x: f64) {
        self.n += 1;
        let delta = x - self.mean;
        self.mean += delta / self.n as f64;
        self.m2 += delta * (x - self.mean);
    }

    /// Exact pooled merge of two accumulators.
    pub fn merge(self, other: RunningStats) -> RunningStats {
        if self.n == 0 {
            return other;
        }
        if other.n == 0 {
            return self;
        }
        let n = self.n + other.n;
        let delta = other.mean - self.mean;
        let mean = self.mean + delta * other.n as f64 / n as f64;
        let m2 = self.m2 + other.m2 + delta * delta * (self.n as f64 * other.n as f64) / n as f64;
        RunningStats { n, mean, m2 }
    }

    pub fn count(&self) -> u64 {
        self.n
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    /// Standard error of the mean.
    pub fn std_error(&self) -> f64 {
        if self.n < 2 {
            return 0.0;
        }
        (self.m2 / (self.n as f64 * (self.n - 1) as f64)).sqrt()
    }

    /// Estimate of `scale * mean`, carrying the sampling error.
    pub fn estimate(&self, scale: f64) -> CoefficientEstimate {
        CoefficientEstimate {
            value: scale * self.mean,
            std_error: scale.abs() * self.std_error(),
            samples: self.n,
            truncation: Truncation::new(),
        }
    }
}

/// Sampling budget plus the reproducibility knobs.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct McConfig {
    pub samples: u64,
    pub seed: u64,
    pub shards: u32,
}

impl McConfig {
    pub fn new(samples: u64, seed: u64) -> Self {
        McConfig {
            samples,
            seed,
            shards: 64,
        }
    }

    pub fn with_shards(mut self, shards: u32) -> Self {
        self.shards = shards.max(1);
        self
    }

    /// Derive an independent configuration for a sub-integral.
    pub fn split(&self, tag: u64) -> Self {
        McConfig {
            samples: self.samples,
            seed: self
                .seed
                .wrapping_mul(0x9e37_79b9_7f4a_7c15)
                .wrapping_add(tag),
            shards: self.shards,
        }
    }
}

/// Mean of `f` over `cfg.samples` draws, sharded over ChaCha streams.
///
/// Shard `i` draws from stream `i` of the seeded generator and shard
/// accumulators are merged in index order, so the result is bit-identical
/// for a fixed `(seed, shards)` regardless of the executing thread count.
pub fn sample_mean<F>(cfg: &McConfig, f: F) -> RunningStats
where
    F: Fn(&mut ChaCha8Rng) -> f64 + Sync,
{
    let shards = cfg.shards.max(1) as u64;
    let base = cfg.samples / shards;
    let extra = cfg.samples % shards;
    let stats: Vec<RunningStats> = (0..shards)
        .into_par_iter()
        .map(|shard| {
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
            rng.set_stream(shard + 1);
            let count = base + if shard < extra { 1 } else { 0 };
            let mut acc = RunningStats::default();
            for _ in 0..count {
                acc.push(f(&mut rng));
            }
            acc
        })
        .collect();
    stats.into_iter().fold(RunningStats::default(), RunningStats::merge)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn merge_matches_sequential() {
        let xs: Vec<f64> = (0..1000).map(|i| (i as f64).sin()).collect();
        let mut whole = RunningStats::default();
        for &x in &xs {
            whole.push(x);
        }
        let mut left = RunningStats::default();
        let mut right = RunningStats::default();
        for &x in &xs[..317] {
            left.push(x);
        }
        for &x in &xs[317..] {
            right.push(x);
        }
        let merged = left.merge(right);
        assert!((merged.mean() - whole.mean()).abs() < 1e-12);
        assert!((merged.std_error() - whole.std_error()).abs() < 1e-12);
    }

    #[test]
    fn sharded_run_is_deterministic() {
        let cfg = McConfig::new(10_000, 42).with_shards(8);
        let f = |rng: &mut ChaCha8Rng| rand::Rng::gen::<f64>(rng);
        let a = sample_mean(&cfg, f);
        let b = sample_mean(&cfg, f);
        assert_eq!(a.mean(), b.mean());
        assert_eq!(a.std_error(), b.std_error());
        assert_eq!(a.count(), 10_000);
    }

    #[test]
    fn result_is_independent_of_worker_count() {
        // Shards are tied to streams, not threads: a single-worker pool
        // must reproduce the default pool bit for bit.
        let cfg = McConfig::new(50_000, 99).with_shards(16);
        let f = |rng: &mut ChaCha8Rng| rand::Rng::gen::<f64>(rng) - 0.5;
        let single = rayon::ThreadPoolBuilder::new()
            .num_threads(1)
            .build()
            .unwrap()
            .install(|| sample_mean(&cfg, f));
        let many = rayon::ThreadPoolBuilder::new()
            .num_threads(4)
            .build()
            .unwrap()
            .install(|| sample_mean(&cfg, f));
        assert_eq!(single.mean(), many.mean());
        assert_eq!(single.std_error(), many.std_error());
    }

    #[test]
    fn constant_integrand_has_zero_error() {
        let cfg = McConfig::new(100, 1).with_shards(4);
        let stats = sample_mean(&cfg, |_| 1.0);
        assert_eq!(stats.mean(), 1.0);
        assert_eq!(stats.std_error(), 0.0);
    }

    #[test]
    fn truncation_display_and_match() {
        let t = Truncation::new().with("k_max", 2).with("l_max", 3);
        assert_eq!(t.to_string(), "k_max=2,l_max=3");
        let u = Truncation::new().with("l_max", 3).with("k_max", 2);
        assert_eq!(t, u);
    }
}
