//! Bootstrap confidence intervals with iid and moving-block resampling.
//!
//! Replicate `i` draws from its own generator seeded by
//! `derive_seed(config.seed, "replicate", i)`, and replicates are collected in
//! index order, so intervals do not depend on how many threads evaluated them.

use rand::Rng as _;
use rayon::prelude::*;
use serde::Serialize;

use crate::seed::{self, derive_seed, Rng};
use crate::survival::SortedSample;
use crate::{Error, Result};

pub const DEFAULT_RESAMPLES: usize = 1000;
pub const DEFAULT_LEVEL: f64 = 0.95;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum Resampling {
    Iid,
    MovingBlock { block_length: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum IntervalMethod {
    /// Quantiles of the replicate distribution.
    Percentile,
    /// Quantiles reflected about the point estimate.
    Basic,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BootstrapConfig {
    pub resamples: usize,
    pub level: f64,
    pub resampling: Resampling,
    pub interval: IntervalMethod,
    pub seed: u64,
}

impl BootstrapConfig {
    pub fn new(seed: u64) -> Self {
        Self {
            resamples: DEFAULT_RESAMPLES,
            level: DEFAULT_LEVEL,
            resampling: Resampling::Iid,
            interval: IntervalMethod::Percentile,
            seed,
        }
    }

    pub fn with_resamples(mut self, resamples: usize) -> Self {
        self.resamples = resamples;
        self
    }

    pub fn with_level(mut self, level: f64) -> Self {
        self.level = level;
        self
    }

    pub fn with_resampling(mut self, resampling: Resampling) -> Self {
        self.resampling = resampling;
        self
    }

    pub fn with_interval(mut self, interval: IntervalMethod) -> Self {
        self.interval = interval;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.resamples == 0 {
            return Err(Error::InvalidBootstrap("at least one resample is required".into()));
        }
        if !(self.level > 0.0 && self.level < 1.0) {
            return Err(Error::InvalidBootstrap(format!(
                "confidence level must lie in (0, 1), got {}",
                self.level
            )));
        }
        if let Resampling::MovingBlock { block_length: 0 } = self.resampling {
            return Err(Error::InvalidBootstrap("block length must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ConfidenceInterval {
    pub lb: f64,
    pub ub: f64,
    pub level: f64,
    pub point: f64,
}

/// `n` draws with replacement from `sample`, sorted.
pub fn iid_resample(sample: &SortedSample, seed: u64) -> SortedSample {
    iid_resample_with(sample, &mut seed::rng(seed))
}

/// Resamples a sorted sample in linear time: draw multiplicities, then emit
/// each order statistic as often as it was drawn.
pub fn iid_resample_with(sample: &SortedSample, rng: &mut Rng) -> SortedSample {
    let xs = sample.values();
    let n = xs.len();
    let mut counts = vec![0u32; n];
    for _ in 0..n {
        counts[rng.random_range(0..n)] += 1;
    }
    let mut out = Vec::with_capacity(n);
    for (&x, &c) in xs.iter().zip(&counts) {
        out.extend(std::iter::repeat_n(x, c as usize));
    }
    SortedSample::from_sorted_unchecked(out)
}

/// Concatenation of `ceil(n / block_length)` uniformly chosen contiguous
/// blocks, truncated to `n`.
pub fn moving_block_resample(series: &[f64], block_length: usize, seed: u64) -> Result<Vec<f64>> {
    moving_block_resample_with(series, block_length, &mut seed::rng(seed))
}

pub fn moving_block_resample_with(
    series: &[f64],
    block_length: usize,
    rng: &mut Rng,
) -> Result<Vec<f64>> {
    let n = series.len();
    if n == 0 {
        return Err(Error::EmptySample);
    }
    if block_length == 0 || block_length > n {
        return Err(Error::InvalidBlockLength { block_length, len: n });
    }
    let starts = n - block_length + 1;
    let mut out = Vec::with_capacity(n + block_length);
    while out.len() < n {
        let s = rng.random_range(0..starts);
        out.extend_from_slice(&series[s..s + block_length]);
    }
    out.truncate(n);
    Ok(out)
}

/// Resamples `series` as the configuration prescribes.
pub fn resample_series(series: &[f64], resampling: Resampling, rng: &mut Rng) -> Result<SortedSample> {
    match resampling {
        Resampling::Iid => {
            let n = series.len();
            if n == 0 {
                return Err(Error::EmptySample);
            }
            let drawn = (0..n).map(|_| series[rng.random_range(0..n)]).collect();
            SortedSample::new(drawn)
        }
        Resampling::MovingBlock { block_length } => {
            SortedSample::new(moving_block_resample_with(series, block_length, rng)?)
        }
    }
}

/// Evaluates `replicate` once per resample, each with its own derived
/// generator. Runs on the current rayon pool; output order is by index.
pub fn replicates<F>(config: &BootstrapConfig, replicate: F) -> Result<Vec<f64>>
where
    F: Fn(&mut Rng) -> Result<f64> + Sync,
{
    config.validate()?;
    (0..config.resamples as u64)
        .into_par_iter()
        .map(|i| replicate(&mut seed::rng(derive_seed(config.seed, "replicate", i))))
        .collect()
}

/// Nearest-rank quantile: the `ceil(q B)`-th smallest of `B` sorted values.
pub fn nearest_rank(sorted: &[f64], q: f64) -> f64 {
    let b = sorted.len();
    // guard against q*B landing a hair above an integer
    let rank = ((q * b as f64) - 1e-9).ceil().clamp(1.0, b as f64) as usize;
    sorted[rank - 1]
}

/// Interval from a set of replicate statistics.
pub fn interval_from_replicates(
    point: f64,
    mut replicates: Vec<f64>,
    level: f64,
    method: IntervalMethod,
) -> Result<ConfidenceInterval> {
    if replicates.is_empty() {
        return Err(Error::InvalidBootstrap("at least one resample is required".into()));
    }
    if !(level > 0.0 && level < 1.0) {
        return Err(Error::InvalidBootstrap(format!(
            "confidence level must lie in (0, 1), got {level}"
        )));
    }
    replicates.sort_unstable_by(f64::total_cmp);
    let lo = nearest_rank(&replicates, 0.5 * (1.0 - level));
    let hi = nearest_rank(&replicates, 0.5 * (1.0 + level));
    let (lb, ub) = match method {
        IntervalMethod::Percentile => (lo, hi),
        IntervalMethod::Basic => (2.0 * point - hi, 2.0 * point - lo),
    };
    Ok(ConfidenceInterval { lb, ub, level, point })
}

/// Bootstrap interval for `statistic` evaluated on resamples of `data`.
///
/// `data` is taken in its original order, which matters for moving-block
/// resampling; resamples are handed to `statistic` sorted.
pub fn bootstrap_ci<F>(data: &[f64], statistic: F, config: &BootstrapConfig) -> Result<ConfidenceInterval>
where
    F: Fn(&SortedSample) -> f64 + Sync,
{
    let point = statistic(&SortedSample::new(data.to_vec())?);
    let reps = replicates(config, |rng| {
        Ok(statistic(&resample_series(data, config.resampling, rng)?))
    })?;
    interval_from_replicates(point, reps, config.level, config.interval)
}
