//! Goodness-of-fit pipeline.
//!
//! A hypothesised family is fitted to the data by maximum likelihood, a sample
//! is drawn from the fitted model, and the fit is scored by the ESJS between
//! the two empirical survival functions. Bootstrap intervals resample both the
//! data and the model sample on every replicate.

use serde::Serialize;

use crate::bootstrap::{
    interval_from_replicates, iid_resample_with, moving_block_resample_with, replicates,
    BootstrapConfig, ConfidenceInterval, Resampling,
};
use crate::distributions::{fit_mle, Family, ParametricModel};
use crate::divergence::{esjs, esjs_factor, EsjsFactor};
use crate::seed::{self, derive_seed};
use crate::survival::{empirical_survival, km_binned_survival, SortedSample};
use crate::{Error, Result};

/// How survival functions are estimated from samples.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum SurvivalEstimator {
    /// Exact empirical survival function.
    Empirical,
    /// Empirical survival on an equal-width grid over the pooled data range.
    Binned { bins: usize },
}

/// Anything that can produce a sorted sample for scoring.
pub trait ModelSampler {
    fn draw_sorted(&self, n: usize, seed: u64) -> Result<SortedSample>;
}

impl ModelSampler for ParametricModel {
    fn draw_sorted(&self, n: usize, seed: u64) -> Result<SortedSample> {
        self.sample(n, seed)
    }
}

/// ESJS between the survival functions of two samples.
pub fn esjs_of_samples(
    model_sample: &SortedSample,
    data: &SortedSample,
    estimator: SurvivalEstimator,
) -> Result<f64> {
    match estimator {
        SurvivalEstimator::Empirical => Ok(esjs(
            &empirical_survival(model_sample),
            &empirical_survival(data),
        )),
        SurvivalEstimator::Binned { bins } => {
            let lo = model_sample.min().min(data.min());
            let hi = model_sample.max().max(data.max());
            if lo == hi {
                // both samples are the same single point
                return Ok(0.0);
            }
            let p = km_binned_survival(model_sample, bins, (lo, hi))?;
            let q = km_binned_survival(data, bins, (lo, hi))?;
            Ok(esjs(&p, &q))
        }
    }
}

/// ESJS between `data` and a size-`model_sample_size` sample from `model`.
pub fn goodness_of_fit<S: ModelSampler + ?Sized>(
    model: &S,
    data: &SortedSample,
    model_sample_size: usize,
    seed: u64,
) -> Result<f64> {
    goodness_of_fit_with(model, data, model_sample_size, seed, SurvivalEstimator::Empirical)
}

pub fn goodness_of_fit_with<S: ModelSampler + ?Sized>(
    model: &S,
    data: &SortedSample,
    model_sample_size: usize,
    seed: u64,
    estimator: SurvivalEstimator,
) -> Result<f64> {
    let sample = model.draw_sorted(model_sample_size, seed)?;
    esjs_of_samples(&sample, data, estimator)
}

/// Settings shared by all experiment-style runs. `bootstrap.seed` is the
/// master seed from which every other seed is derived.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentConfig {
    pub bootstrap: BootstrapConfig,
    /// Size of the sample drawn from each fitted model; defaults to the data size.
    pub model_sample_size: Option<usize>,
    pub estimator: SurvivalEstimator,
    /// Families never chosen as the challenger in the factor.
    pub exclude_from_factor: Vec<Family>,
}

impl ExperimentConfig {
    pub fn new(seed: u64) -> Self {
        Self {
            bootstrap: BootstrapConfig::new(seed),
            model_sample_size: None,
            estimator: SurvivalEstimator::Empirical,
            exclude_from_factor: Vec::new(),
        }
    }

    pub fn seed(&self) -> u64 {
        self.bootstrap.seed
    }
}

/// One scored hypothesis.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FitReport {
    pub family: Family,
    pub params: Vec<f64>,
    pub esjs: f64,
    pub distance: f64,
    pub ci: ConfidenceInterval,
    pub n: usize,
    pub model_sample_size: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SkippedHypothesis {
    pub family: Family,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentReport {
    /// Generating model for simulated experiments.
    pub given: Option<ParametricModel>,
    pub rows: Vec<FitReport>,
    pub skipped: Vec<SkippedHypothesis>,
    pub best: Family,
    /// Runner-up used for the factor; `None` with a single scored hypothesis.
    pub challenger: Option<Family>,
    pub factor: EsjsFactor,
    pub single_hypothesis: bool,
}

impl ExperimentReport {
    pub fn row(&self, family: Family) -> Option<&FitReport> {
        self.rows.iter().find(|r| r.family == family)
    }
}

fn family_index(family: Family) -> u64 {
    Family::ALL.iter().position(|&f| f == family).unwrap() as u64
}

/// Fits `family` to `data`, scores the fit and bootstraps the score.
///
/// `series` is the data in its original order (used by moving-block
/// resampling); `data` is the same observations sorted.
pub fn fit_and_score(
    family: Family,
    series: &[f64],
    data: &SortedSample,
    config: &ExperimentConfig,
) -> Result<FitReport> {
    let model = fit_mle(family, data)?;
    score_model(&model, series, data, config)
}

/// Scores an already fitted model against `data`.
pub fn score_model(
    model: &ParametricModel,
    series: &[f64],
    data: &SortedSample,
    config: &ExperimentConfig,
) -> Result<FitReport> {
    let seed = config.seed();
    let index = family_index(model.family());
    let m = config.model_sample_size.unwrap_or(data.len());
    let model_sample = model.sample(m, derive_seed(seed, "model", index))?;
    let estimator = config.estimator;
    let point = esjs_of_samples(&model_sample, data, estimator)?;

    let boot = config
        .bootstrap
        .with_seed(derive_seed(seed, "bootstrap", index));
    let reps = replicates(&boot, |rng| {
        let data_r = match boot.resampling {
            Resampling::Iid => iid_resample_with(data, rng),
            Resampling::MovingBlock { block_length } => {
                SortedSample::new(moving_block_resample_with(series, block_length, rng)?)?
            }
        };
        let model_r = iid_resample_with(&model_sample, rng);
        esjs_of_samples(&model_r, &data_r, estimator)
    })?;
    let ci = interval_from_replicates(point, reps, boot.level, boot.interval)?;
    Ok(FitReport {
        family: model.family(),
        params: model.params().to_vec(),
        esjs: point,
        distance: point.sqrt(),
        ci,
        n: data.len(),
        model_sample_size: m,
        seed,
    })
}

/// Scores every hypothesis against empirical data and ranks them.
///
/// Hypotheses that cannot be fitted (support violations, degenerate data,
/// non-convergence) are listed as skipped rather than failing the run.
pub fn compare(
    series: &[f64],
    hypotheses: &[Family],
    config: &ExperimentConfig,
) -> Result<ExperimentReport> {
    let data = SortedSample::new(series.to_vec())?;
    compare_sorted(None, series, &data, hypotheses, config)
}

fn compare_sorted(
    given: Option<ParametricModel>,
    series: &[f64],
    data: &SortedSample,
    hypotheses: &[Family],
    config: &ExperimentConfig,
) -> Result<ExperimentReport> {
    if hypotheses.is_empty() {
        return Err(Error::InvalidInput("at least one hypothesis is required".into()));
    }
    config.bootstrap.validate()?;
    let mut rows = Vec::new();
    let mut skipped = Vec::new();
    for &family in hypotheses {
        if rows.iter().any(|r: &FitReport| r.family == family) {
            continue;
        }
        match fit_and_score(family, series, data, config) {
            Ok(row) => rows.push(row),
            Err(e @ (Error::SupportViolation { .. } | Error::NonConvergence { .. })) => {
                skipped.push(SkippedHypothesis {
                    family,
                    reason: e.to_string(),
                })
            }
            Err(e) => return Err(e),
        }
    }
    if rows.is_empty() {
        let reasons: Vec<String> = skipped.iter().map(|s| s.reason.clone()).collect();
        return Err(Error::NoHypotheses(reasons.join("; ")));
    }
    let best = rows
        .iter()
        .min_by(|a, b| a.esjs.total_cmp(&b.esjs))
        .expect("non-empty");
    let challenger = rows
        .iter()
        .filter(|r| r.family != best.family && !config.exclude_from_factor.contains(&r.family))
        .min_by(|a, b| a.esjs.total_cmp(&b.esjs));
    let (factor, single) = match challenger {
        Some(c) => (esjs_factor(c.esjs, best.esjs)?, false),
        None => (
            EsjsFactor {
                ratio: 1.0,
                numerator_esjs: best.esjs,
                denominator_esjs: best.esjs,
            },
            true,
        ),
    };
    Ok(ExperimentReport {
        given,
        best: best.family,
        challenger: challenger.map(|c| c.family),
        factor,
        single_hypothesis: single,
        skipped,
        rows,
    })
}

/// Draws `n` observations from `given`, then fits, scores and ranks each
/// hypothesis against them.
pub fn simulate_experiment(
    given: &ParametricModel,
    hypotheses: &[Family],
    n: usize,
    config: &ExperimentConfig,
) -> Result<ExperimentReport> {
    if n < 2 {
        return Err(Error::InvalidInput("data size must be at least 2".into()));
    }
    let series = given.draw(&mut seed::rng(derive_seed(config.seed(), "data", 0)), n);
    let data = SortedSample::new(series.clone())?;
    compare_sorted(Some(given.clone()), &series, &data, hypotheses, config)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScalingRow {
    pub size: usize,
    pub params: Vec<f64>,
    pub esjs: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PowerLaw {
    pub amplitude: f64,
    pub exponent: f64,
}

impl PowerLaw {
    pub fn eval(&self, x: f64) -> f64 {
        self.amplitude * x.powf(self.exponent)
    }
}

/// ESJS of the self-fit (hypothesis = given family) at each data size.
///
/// Each size uses its own data and model seeds derived from `seed` and the
/// size, so rows are reproducible individually.
pub fn scaling_experiment(
    given: &ParametricModel,
    sizes: &[usize],
    seed: u64,
    estimator: SurvivalEstimator,
) -> Result<Vec<ScalingRow>> {
    if sizes.is_empty() {
        return Err(Error::InvalidInput("at least one size is required".into()));
    }
    sizes
        .iter()
        .map(|&size| {
            if size < 2 {
                return Err(Error::InvalidInput(format!("size {size} is below 2")));
            }
            let data_seed = derive_seed(seed, "scaling-data", size as u64);
            let data = given.sample(size, data_seed)?;
            let fitted = fit_mle(given.family(), &data)?;
            let model_sample = fitted.sample(size, derive_seed(seed, "scaling-model", size as u64))?;
            Ok(ScalingRow {
                size,
                params: fitted.params().to_vec(),
                esjs: esjs_of_samples(&model_sample, &data, estimator)?,
            })
        })
        .collect()
}

/// Least-squares line through `(ln x, ln y)`: returns `(e^intercept, slope)`.
pub fn powerlaw_fit(xs: &[f64], ys: &[f64]) -> Result<PowerLaw> {
    if xs.len() != ys.len() || xs.len() < 2 {
        return Err(Error::InvalidInput(
            "power-law fit needs two equal-length series of at least 2 points".into(),
        ));
    }
    if xs.iter().chain(ys).any(|&v| !(v > 0.0 && v.is_finite())) {
        return Err(Error::InvalidInput("power-law fit needs positive finite values".into()));
    }
    let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxx: f64 = lx.iter().map(|x| (x - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::InvalidInput("power-law fit needs at least two distinct x values".into()));
    }
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    Ok(PowerLaw {
        amplitude: (my - slope * mx).exp(),
        exponent: slope,
    })
}
