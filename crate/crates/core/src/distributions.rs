//! The nine parametric families: densities, survival functions, sampling,
//! log-likelihoods and maximum-likelihood fitting.
//!
//! Parameter order follows the reporting convention used throughout the
//! crate:
//!
//! | family      | param 1 | param 2 |
//! |-------------|---------|---------|
//! | normal      | μ       | σ       |
//! | uniform     | x_l     | x_u     |
//! | lognormal   | μ       | σ       |
//! | gamma       | k       | τ       |
//! | weibull     | k       | τ       |
//! | beta        | α       | β       |
//! | qgaussian   | λ       | x_0     |
//! | exponential | τ       |         |
//! | pareto      | α       |         |
//!
//! The q-Gaussian density is
//! `Γ(λ/2) / (√π x_0 Γ((λ-1)/2)) · (x_0² / (x_0² + x²))^(λ/2)`, a Student-t
//! with `λ - 1` degrees of freedom and scale `x_0 / √(λ - 1)`. The Pareto
//! family has its lower bound fixed at 1.

// `!(x > 0.0)` is used deliberately so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::f64::consts::{PI, SQRT_2};
use std::fmt;
use std::str::FromStr;

use rand::distr::Uniform;
use rand::Rng as _;
use rand_distr::{Beta, Distribution, Exp, Gamma, LogNormal, Normal, Pareto, StudentT, Weibull};
use serde::{Deserialize, Serialize};
use statrs::function::beta::beta_reg;
use statrs::function::erf::erfc;
use statrs::function::gamma::gamma_ur;

use crate::seed::{self, Rng};
use crate::special::{digamma, ln_gamma, trigamma};
use crate::survival::SortedSample;
use crate::{Error, Result};

const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_8;

/// Relative parameter change at which iterative fits stop.
pub const FIT_TOLERANCE: f64 = 1e-10;
/// Iteration cap for iterative fits.
pub const FIT_MAX_ITERATIONS: usize = 200;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Family {
    Normal,
    Uniform,
    LogNormal,
    Gamma,
    Weibull,
    Beta,
    QGaussian,
    Exponential,
    Pareto,
}

impl Family {
    pub const ALL: [Family; 9] = [
        Family::Normal,
        Family::Uniform,
        Family::LogNormal,
        Family::Gamma,
        Family::Weibull,
        Family::Beta,
        Family::QGaussian,
        Family::Exponential,
        Family::Pareto,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Family::Normal => "normal",
            Family::Uniform => "uniform",
            Family::LogNormal => "lognormal",
            Family::Gamma => "gamma",
            Family::Weibull => "weibull",
            Family::Beta => "beta",
            Family::QGaussian => "qgaussian",
            Family::Exponential => "exponential",
            Family::Pareto => "pareto",
        }
    }

    pub fn param_count(self) -> usize {
        match self {
            Family::Exponential | Family::Pareto => 1,
            _ => 2,
        }
    }

    pub fn param_names(self) -> &'static [&'static str] {
        match self {
            Family::Normal | Family::LogNormal => &["mu", "sigma"],
            Family::Uniform => &["lower", "upper"],
            Family::Gamma | Family::Weibull => &["k", "tau"],
            Family::Beta => &["alpha", "beta"],
            Family::QGaussian => &["lambda", "x0"],
            Family::Exponential => &["tau"],
            Family::Pareto => &["alpha"],
        }
    }

    /// Whether `x` lies in the support the family can be fitted on.
    pub fn supports(self, x: f64) -> bool {
        match self {
            Family::Normal | Family::Uniform | Family::QGaussian => x.is_finite(),
            Family::LogNormal | Family::Gamma | Family::Weibull => x > 0.0 && x.is_finite(),
            Family::Exponential => x >= 0.0 && x.is_finite(),
            Family::Beta => x > 0.0 && x < 1.0,
            Family::Pareto => x >= 1.0 && x.is_finite(),
        }
    }

    fn support_description(self) -> &'static str {
        match self {
            Family::Normal | Family::Uniform | Family::QGaussian => "finite observations",
            Family::LogNormal | Family::Gamma | Family::Weibull => "strictly positive observations",
            Family::Exponential => "non-negative observations",
            Family::Beta => "observations strictly inside (0, 1)",
            Family::Pareto => "observations of at least 1",
        }
    }

    /// Rejects samples with any observation outside the family's support.
    pub fn check_support(self, sample: &SortedSample) -> Result<()> {
        let offending = [sample.min(), sample.max()]
            .into_iter()
            .find(|&x| !self.supports(x));
        match offending {
            Some(x) => Err(Error::SupportViolation {
                family: self.name().into(),
                reason: format!("requires {}, found {x}", self.support_description()),
            }),
            None => Ok(()),
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Family {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let key: String = s
            .trim()
            .chars()
            .filter(|c| !matches!(c, '-' | '_'))
            .collect::<String>()
            .to_ascii_lowercase();
        Family::ALL
            .into_iter()
            .find(|f| f.name() == key)
            .ok_or_else(|| Error::InvalidInput(format!("unknown family '{s}'")))
    }
}

/// A family together with a validated parameter vector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParametricModel {
    family: Family,
    params: Vec<f64>,
}

impl ParametricModel {
    pub fn new(family: Family, params: &[f64]) -> Result<Self> {
        let invalid = |reason: &str| Error::InvalidParameters {
            family: family.name().into(),
            reason: reason.into(),
        };
        if params.len() != family.param_count() {
            return Err(invalid(&format!(
                "expected {} parameter(s), got {}",
                family.param_count(),
                params.len()
            )));
        }
        if params.iter().any(|p| !p.is_finite()) {
            return Err(invalid("parameters must be finite"));
        }
        let positive = |i: usize, name: &str| {
            if params[i] > 0.0 {
                Ok(())
            } else {
                Err(invalid(&format!("{name} must be positive")))
            }
        };
        match family {
            Family::Normal | Family::LogNormal => positive(1, "sigma")?,
            Family::Uniform => {
                if params[0] >= params[1] {
                    return Err(invalid("lower bound must be below upper bound"));
                }
            }
            Family::Gamma | Family::Weibull => {
                positive(0, "k")?;
                positive(1, "tau")?;
            }
            Family::Beta => {
                positive(0, "alpha")?;
                positive(1, "beta")?;
            }
            Family::QGaussian => {
                if params[0] <= 1.0 {
                    return Err(invalid("lambda must exceed 1"));
                }
                positive(1, "x0")?;
            }
            Family::Exponential => positive(0, "tau")?,
            Family::Pareto => positive(0, "alpha")?,
        }
        Ok(Self {
            family,
            params: params.to_vec(),
        })
    }

    /// Parses `family:p1,p2`, e.g. `normal:0,1` or `exponential:2`.
    pub fn parse(spec: &str) -> Result<Self> {
        let (name, rest) = spec
            .split_once(':')
            .ok_or_else(|| Error::InvalidInput(format!("model '{spec}' is not of the form family:p1,p2")))?;
        let family: Family = name.parse()?;
        let params = rest
            .split(',')
            .map(|p| {
                p.trim()
                    .parse::<f64>()
                    .map_err(|_| Error::InvalidInput(format!("bad parameter '{p}' in '{spec}'")))
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(family, &params)
    }

    pub fn family(&self) -> Family {
        self.family
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    fn p(&self) -> (f64, f64) {
        (self.params[0], self.params.get(1).copied().unwrap_or(f64::NAN))
    }

    /// Natural log of the density; `-inf` outside the support.
    pub fn ln_density(&self, x: f64) -> f64 {
        let (a, b) = self.p();
        let outside = f64::NEG_INFINITY;
        match self.family {
            Family::Normal => {
                let z = (x - a) / b;
                -LN_SQRT_2PI - b.ln() - 0.5 * z * z
            }
            Family::Uniform => {
                if (a..=b).contains(&x) {
                    -(b - a).ln()
                } else {
                    outside
                }
            }
            Family::LogNormal => {
                if x <= 0.0 {
                    return outside;
                }
                let z = (x.ln() - a) / b;
                -LN_SQRT_2PI - b.ln() - x.ln() - 0.5 * z * z
            }
            Family::Gamma => {
                if x <= 0.0 {
                    return outside;
                }
                (a - 1.0) * x.ln() - x / b - ln_gamma(a) - a * b.ln()
            }
            Family::Weibull => {
                if x <= 0.0 {
                    return outside;
                }
                a.ln() - b.ln() + (a - 1.0) * (x / b).ln() - (x / b).powf(a)
            }
            Family::Beta => {
                if x <= 0.0 || x >= 1.0 {
                    return outside;
                }
                ln_gamma(a + b) - ln_gamma(a) - ln_gamma(b) + (a - 1.0) * x.ln()
                    + (b - 1.0) * (-x).ln_1p()
            }
            Family::QGaussian => {
                let r = x / b;
                ln_gamma(0.5 * a) - ln_gamma(0.5 * (a - 1.0)) - 0.5 * PI.ln() - b.ln()
                    - 0.5 * a * (r * r).ln_1p()
            }
            Family::Exponential => {
                if x < 0.0 {
                    return outside;
                }
                -a.ln() - x / a
            }
            Family::Pareto => {
                if x < 1.0 {
                    return outside;
                }
                a.ln() - (a + 1.0) * x.ln()
            }
        }
    }

    pub fn density(&self, x: f64) -> f64 {
        self.ln_density(x).exp()
    }

    /// `P(X > x)`.
    pub fn survival(&self, x: f64) -> f64 {
        let (a, b) = self.p();
        match self.family {
            Family::Normal => 0.5 * erfc((x - a) / (b * SQRT_2)),
            Family::Uniform => ((b - x) / (b - a)).clamp(0.0, 1.0),
            Family::LogNormal => {
                if x <= 0.0 {
                    1.0
                } else {
                    0.5 * erfc((x.ln() - a) / (b * SQRT_2))
                }
            }
            Family::Gamma => {
                if x <= 0.0 {
                    1.0
                } else {
                    gamma_ur(a, x / b)
                }
            }
            Family::Weibull => {
                if x <= 0.0 {
                    1.0
                } else {
                    (-(x / b).powf(a)).exp()
                }
            }
            Family::Beta => {
                if x <= 0.0 {
                    1.0
                } else if x >= 1.0 {
                    0.0
                } else {
                    beta_reg(b, a, 1.0 - x)
                }
            }
            Family::QGaussian => {
                let nu = a - 1.0;
                let u = b * b / (b * b + x * x);
                let tail = 0.5 * beta_reg(0.5 * nu, 0.5, u);
                if x >= 0.0 {
                    tail
                } else {
                    1.0 - tail
                }
            }
            Family::Exponential => {
                if x <= 0.0 {
                    1.0
                } else {
                    (-x / a).exp()
                }
            }
            Family::Pareto => {
                if x <= 1.0 {
                    1.0
                } else {
                    x.powf(-a)
                }
            }
        }
    }

    pub fn cdf(&self, x: f64) -> f64 {
        1.0 - self.survival(x)
    }

    /// `n` independent draws, deterministic in `seed`, sorted.
    pub fn sample(&self, n: usize, seed: u64) -> Result<SortedSample> {
        if n == 0 {
            return Err(Error::EmptySample);
        }
        let mut rng = seed::rng(seed);
        SortedSample::new(self.draw(&mut rng, n))
    }

    /// `n` draws in generation order.
    pub fn draw(&self, rng: &mut Rng, n: usize) -> Vec<f64> {
        let (a, b) = self.p();
        // parameters were validated at construction, so the constructors below cannot fail
        match self.family {
            Family::Normal => draw_n(rng, n, Normal::new(a, b).unwrap()),
            Family::Uniform => draw_n(rng, n, Uniform::new_inclusive(a, b).unwrap()),
            Family::LogNormal => draw_n(rng, n, LogNormal::new(a, b).unwrap()),
            Family::Gamma => draw_n(rng, n, Gamma::new(a, b).unwrap()),
            Family::Weibull => draw_n(rng, n, Weibull::new(b, a).unwrap()),
            Family::Beta => draw_n(rng, n, Beta::new(a, b).unwrap()),
            Family::QGaussian => {
                let nu = a - 1.0;
                let scale = b / nu.sqrt();
                let t = StudentT::new(nu).unwrap();
                (0..n).map(|_| scale * t.sample(rng)).collect()
            }
            Family::Exponential => draw_n(rng, n, Exp::new(1.0 / a).unwrap()),
            Family::Pareto => draw_n(rng, n, Pareto::new(1.0, a).unwrap()),
        }
    }

    /// `Σ ln f(x_i)`; `-inf` if any observation is outside the support.
    pub fn log_likelihood(&self, sample: &SortedSample) -> f64 {
        let mut acc = Accumulator::default();
        for &x in sample.values() {
            let l = self.ln_density(x);
            if l == f64::NEG_INFINITY {
                return l;
            }
            acc.add(l);
        }
        acc.sum()
    }

    /// Analytic gradient of the log-likelihood with respect to the parameters.
    ///
    /// `None` for the uniform family, whose likelihood is not differentiable at
    /// its maximum.
    pub fn score(&self, sample: &SortedSample) -> Option<Vec<f64>> {
        let (a, b) = self.p();
        let xs = sample.values();
        let n = xs.len() as f64;
        let sum = |f: &dyn Fn(f64) -> f64| -> f64 {
            let mut acc = Accumulator::default();
            xs.iter().for_each(|&x| acc.add(f(x)));
            acc.sum()
        };
        let grad = match self.family {
            Family::Uniform => return None,
            Family::Normal => vec![
                sum(&|x| x - a) / (b * b),
                -n / b + sum(&|x| (x - a) * (x - a)) / (b * b * b),
            ],
            Family::LogNormal => vec![
                sum(&|x| x.ln() - a) / (b * b),
                -n / b + sum(&|x| (x.ln() - a).powi(2)) / (b * b * b),
            ],
            Family::Gamma => vec![
                sum(&|x| x.ln()) - n * (digamma(a) + b.ln()),
                (sum(&|x| x) / b - n * a) / b,
            ],
            Family::Weibull => vec![
                n / a + sum(&|x| {
                    let l = (x / b).ln();
                    l - (x / b).powf(a) * l
                }),
                a / b * (sum(&|x| (x / b).powf(a)) - n),
            ],
            Family::Beta => vec![
                n * (digamma(a + b) - digamma(a)) + sum(&|x| x.ln()),
                n * (digamma(a + b) - digamma(b)) + sum(&|x| (-x).ln_1p()),
            ],
            Family::QGaussian => {
                let g = qgaussian_stats(xs, a, b);
                vec![n * g.grad[0], n * g.grad[1]]
            }
            Family::Exponential => vec![(sum(&|x| x) / a - n) / a],
            Family::Pareto => vec![n / a - sum(&|x| x.ln())],
        };
        Some(grad)
    }
}

fn draw_n<D: Distribution<f64>>(rng: &mut Rng, n: usize, dist: D) -> Vec<f64> {
    (0..n).map(|_| rng.sample(&dist)).collect()
}

/// Neumaier-compensated running sum.
#[derive(Default, Clone, Copy)]
struct Accumulator {
    sum: f64,
    compensation: f64,
}

impl Accumulator {
    fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.compensation += (self.sum - t) + x;
        } else {
            self.compensation += (x - t) + self.sum;
        }
        self.sum = t;
    }

    fn sum(self) -> f64 {
        self.sum + self.compensation
    }
}

fn mean_of(xs: &[f64], f: impl Fn(f64) -> f64) -> f64 {
    let mut acc = Accumulator::default();
    xs.iter().for_each(|&x| acc.add(f(x)));
    acc.sum() / xs.len() as f64
}

/// Maximum-likelihood fit of `family` to `sample`.
pub fn fit_mle(family: Family, sample: &SortedSample) -> Result<ParametricModel> {
    if sample.len() < 2 {
        return Err(Error::SupportViolation {
            family: family.name().into(),
            reason: "at least 2 observations are required".into(),
        });
    }
    family.check_support(sample)?;
    let degenerate = |what: &str| Error::SupportViolation {
        family: family.name().into(),
        reason: format!("degenerate sample: {what}"),
    };
    let xs = sample.values();
    let params = match family {
        Family::Normal => {
            let (m, s) = mean_and_sd(xs, |x| x);
            if !(s > 0.0) {
                return Err(degenerate("all observations are equal"));
            }
            vec![m, s]
        }
        Family::LogNormal => {
            let (m, s) = mean_and_sd(xs, f64::ln);
            if !(s > 0.0) {
                return Err(degenerate("all observations are equal"));
            }
            vec![m, s]
        }
        Family::Uniform => {
            if sample.min() == sample.max() {
                return Err(degenerate("all observations are equal"));
            }
            vec![sample.min(), sample.max()]
        }
        Family::Exponential => {
            let m = mean_of(xs, |x| x);
            if !(m > 0.0) {
                return Err(degenerate("all observations are zero"));
            }
            vec![m]
        }
        Family::Pareto => {
            let s = mean_of(xs, f64::ln);
            if !(s > 0.0) {
                return Err(degenerate("all observations equal the lower bound 1"));
            }
            vec![1.0 / s]
        }
        Family::Gamma => fit_gamma(xs).ok_or_else(|| degenerate("all observations are equal"))??,
        Family::Weibull => fit_weibull(xs).ok_or_else(|| degenerate("all observations are equal"))??,
        Family::Beta => fit_beta(xs).ok_or_else(|| degenerate("all observations are equal"))??,
        Family::QGaussian => {
            fit_qgaussian(xs).ok_or_else(|| degenerate("all observations are zero"))??
        }
    };
    ParametricModel::new(family, &params)
}

fn mean_and_sd(xs: &[f64], f: impl Fn(f64) -> f64 + Copy) -> (f64, f64) {
    let m = mean_of(xs, f);
    let v = mean_of(xs, |x| (f(x) - m).powi(2));
    (m, v.sqrt())
}

fn non_convergence(family: Family, iterations: usize, last_step: f64, gradient_norm: f64) -> Error {
    Error::NonConvergence {
        family: family.name().into(),
        iterations,
        last_step,
        gradient_norm,
    }
}

/// Newton iteration on `ln k - ψ(k) = ln(mean) - mean(ln x)`; `τ = mean / k`.
fn fit_gamma(xs: &[f64]) -> Option<Result<Vec<f64>>> {
    let mean = mean_of(xs, |x| x);
    let s = mean.ln() - mean_of(xs, f64::ln);
    if !(s > 0.0) {
        return None;
    }
    let mut k = (3.0 - s + ((s - 3.0).powi(2) + 24.0 * s).sqrt()) / (12.0 * s);
    let mut step = f64::INFINITY;
    let mut converged = false;
    for _ in 0..FIT_MAX_ITERATIONS {
        let f = k.ln() - digamma(k) - s;
        let df = 1.0 / k - trigamma(k);
        let mut next = k - f / df;
        if next <= 0.0 {
            next = 0.5 * k;
        }
        step = (next - k).abs() / k;
        k = next;
        if converged {
            break;
        }
        // one extra step after reaching tolerance
        converged = step <= FIT_TOLERANCE;
    }
    if !converged {
        let g = k.ln() - digamma(k) - s;
        return Some(Err(non_convergence(
            Family::Gamma,
            FIT_MAX_ITERATIONS,
            step,
            g.abs() * xs.len() as f64,
        )));
    }
    Some(Ok(vec![k, mean / k]))
}

/// Newton on the profile equation for the shape, computed on data rescaled by
/// the geometric mean; the scale then follows in closed form.
fn fit_weibull(xs: &[f64]) -> Option<Result<Vec<f64>>> {
    let mean_ln = mean_of(xs, f64::ln);
    let var_ln = mean_of(xs, |x| (x.ln() - mean_ln).powi(2));
    if !(var_ln > 0.0) {
        return None;
    }
    let g = mean_ln.exp();
    let ln_y: Vec<f64> = xs.iter().map(|&x| x.ln() - mean_ln).collect();
    let mean_ln_y = mean_of(&ln_y, |l| l);

    // h(k) = 1/k + mean(ln y) - Σ y^k ln y / Σ y^k, decreasing in k
    let eval = |k: f64| -> (f64, f64) {
        let (mut s0, mut s1, mut s2) = (Accumulator::default(), Accumulator::default(), Accumulator::default());
        for &l in &ln_y {
            let w = (k * l).exp();
            s0.add(w);
            s1.add(w * l);
            s2.add(w * l * l);
        }
        let (s0, s1, s2) = (s0.sum(), s1.sum(), s2.sum());
        let h = 1.0 / k + mean_ln_y - s1 / s0;
        let dh = -1.0 / (k * k) - (s2 * s0 - s1 * s1) / (s0 * s0);
        (h, dh)
    };

    let mut k = PI / (6.0 * var_ln).sqrt();
    let (mut lo, mut hi) = (0.0_f64, f64::INFINITY);
    let mut step = f64::INFINITY;
    let mut converged = false;
    for _ in 0..FIT_MAX_ITERATIONS {
        let (h, dh) = eval(k);
        if h > 0.0 {
            lo = lo.max(k);
        } else {
            hi = hi.min(k);
        }
        let mut next = k - h / dh;
        if !(next > lo && next < hi) || !next.is_finite() {
            next = if hi.is_finite() { 0.5 * (lo + hi) } else { 2.0 * k };
        }
        step = (next - k).abs() / k;
        k = next;
        if converged {
            break;
        }
        converged = step <= FIT_TOLERANCE;
    }
    if !converged {
        let (h, _) = eval(k);
        return Some(Err(non_convergence(
            Family::Weibull,
            FIT_MAX_ITERATIONS,
            step,
            h.abs() * xs.len() as f64,
        )));
    }
    let tau_y = mean_of(&ln_y, |l| (k * l).exp()).powf(1.0 / k);
    Some(Ok(vec![k, g * tau_y]))
}

/// Two-dimensional Newton on the digamma equations, started from moment
/// matching.
fn fit_beta(xs: &[f64]) -> Option<Result<Vec<f64>>> {
    let m = mean_of(xs, |x| x);
    let v = mean_of(xs, |x| (x - m).powi(2));
    if !(v > 0.0) {
        return None;
    }
    let ln_x = mean_of(xs, f64::ln);
    let ln_1mx = mean_of(xs, |x| (-x).ln_1p());
    let common = m * (1.0 - m) / v - 1.0;
    let (mut a, mut b) = if common > 0.0 {
        (m * common, (1.0 - m) * common)
    } else {
        (1.0, 1.0)
    };
    let grad = |a: f64, b: f64| {
        let ds = digamma(a + b);
        [ds - digamma(a) + ln_x, ds - digamma(b) + ln_1mx]
    };
    let mut step = f64::INFINITY;
    let mut converged = false;
    for _ in 0..FIT_MAX_ITERATIONS {
        let g = grad(a, b);
        let ts = trigamma(a + b);
        let (h11, h12, h22) = (ts - trigamma(a), ts, ts - trigamma(b));
        let det = h11 * h22 - h12 * h12;
        let da = -(h22 * g[0] - h12 * g[1]) / det;
        let db = -(-h12 * g[0] + h11 * g[1]) / det;
        let mut t = 1.0;
        while a + t * da <= 0.0 || b + t * db <= 0.0 {
            t *= 0.5;
        }
        let (na, nb) = (a + t * da, b + t * db);
        step = ((na - a) / a).abs().max(((nb - b) / b).abs());
        a = na;
        b = nb;
        if converged {
            break;
        }
        converged = step <= FIT_TOLERANCE;
    }
    if !converged {
        let g = grad(a, b);
        return Some(Err(non_convergence(
            Family::Beta,
            FIT_MAX_ITERATIONS,
            step,
            g[0].hypot(g[1]) * xs.len() as f64,
        )));
    }
    Some(Ok(vec![a, b]))
}

/// Per-observation log-likelihood, gradient and Hessian of the q-Gaussian.
struct QGaussianStats {
    ll: f64,
    grad: [f64; 2],
    hess: [[f64; 2]; 2],
}

fn qgaussian_stats(xs: &[f64], lambda: f64, x0: f64) -> QGaussianStats {
    let x0sq = x0 * x0;
    let (mut log_term, mut ratio, mut ratio_sq) =
        (Accumulator::default(), Accumulator::default(), Accumulator::default());
    for &x in xs {
        let xsq = x * x;
        let denom = x0sq + xsq;
        log_term.add((xsq / x0sq).ln_1p());
        ratio.add(xsq / denom);
        ratio_sq.add(xsq / (denom * denom));
    }
    let n = xs.len() as f64;
    let (log_term, r, r2) = (log_term.sum() / n, ratio.sum() / n, ratio_sq.sum() / n);
    let (ha, hb) = (0.5 * lambda, 0.5 * (lambda - 1.0));
    QGaussianStats {
        ll: ln_gamma(ha) - ln_gamma(hb) - 0.5 * PI.ln() - x0.ln() - ha * log_term,
        grad: [
            0.5 * (digamma(ha) - digamma(hb)) - 0.5 * log_term,
            (-1.0 + lambda * r) / x0,
        ],
        hess: [
            [0.25 * (trigamma(ha) - trigamma(hb)), r / x0],
            [r / x0, (1.0 - lambda * r) / x0sq - 2.0 * lambda * r2],
        ],
    }
}

/// Damped Newton ascent on the q-Gaussian log-likelihood over `(λ, x_0)`,
/// falling back to scaled gradient ascent where the Hessian is not negative
/// definite.
fn fit_qgaussian(xs: &[f64]) -> Option<Result<Vec<f64>>> {
    let mut abs: Vec<f64> = xs.iter().map(|x| x.abs()).collect();
    abs.sort_unstable_by(f64::total_cmp);
    let mad = abs[abs.len() / 2];
    let spread = if mad > 0.0 { mad } else { mean_of(xs, f64::abs) };
    if !(spread > 0.0) {
        return None;
    }
    // Student-t with 4 degrees of freedom: x0 = sqrt(4) * scale, MAD ≈ 0.741 scale
    let mut lambda = 5.0;
    let mut x0 = 2.0 * spread / 0.741;
    let mut step = f64::INFINITY;
    let mut converged = false;
    let mut cur = qgaussian_stats(xs, lambda, x0);
    for _ in 0..FIT_MAX_ITERATIONS {
        let g = cur.grad;
        let h = cur.hess;
        let det = h[0][0] * h[1][1] - h[0][1] * h[1][0];
        let mut dir = if h[0][0] < 0.0 && det > 0.0 {
            [
                -(h[1][1] * g[0] - h[0][1] * g[1]) / det,
                -(-h[1][0] * g[0] + h[0][0] * g[1]) / det,
            ]
        } else {
            // ascent along the gradient in relative coordinates
            [g[0] * lambda * lambda * 0.1, g[1] * x0 * x0 * 0.1]
        };
        let max_rel = ((dir[0] / (lambda - 1.0)).abs()).max((dir[1] / x0).abs());
        if max_rel > 0.5 {
            dir = [dir[0] * 0.5 / max_rel, dir[1] * 0.5 / max_rel];
        }
        let mut t = 1.0;
        let mut accepted = None;
        for _ in 0..60 {
            let (nl, nx) = (lambda + t * dir[0], x0 + t * dir[1]);
            if nl > 1.0 && nx > 0.0 {
                let next = qgaussian_stats(xs, nl, nx);
                if next.ll >= cur.ll - 1e-15 * cur.ll.abs() {
                    accepted = Some((nl, nx, next));
                    break;
                }
            }
            t *= 0.5;
        }
        let Some((nl, nx, next)) = accepted else {
            break;
        };
        step = ((nl - lambda) / lambda).abs().max(((nx - x0) / x0).abs());
        lambda = nl;
        x0 = nx;
        cur = next;
        if converged {
            break;
        }
        converged = step <= FIT_TOLERANCE;
    }
    let n = xs.len() as f64;
    let gnorm = n * cur.grad[0].hypot(cur.grad[1]);
    if !converged {
        return Some(Err(non_convergence(
            Family::QGaussian,
            FIT_MAX_ITERATIONS,
            step,
            gnorm,
        )));
    }
    Some(Ok(vec![lambda, x0]))
}
