//! Empirical survival functions and the empirical survival entropy.
//!
//! All survival functions here are right-continuous step functions stored as
//! breakpoint/value arrays, so integrals of functions of them reduce to exact
//! finite sums over segments.

use serde::Serialize;

use crate::{Error, Result};

/// Default number of equal-width cells for the binned (Kaplan-Meier) estimator.
pub const DEFAULT_KM_BINS: usize = 1_000_000;

/// Order statistics of a real-valued sample.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(transparent)]
pub struct SortedSample {
    values: Vec<f64>,
}

impl SortedSample {
    /// Sorts `values`; rejects empty input and non-finite entries.
    pub fn new(mut values: Vec<f64>) -> Result<Self> {
        check_finite(&values)?;
        values.sort_unstable_by(f64::total_cmp);
        Ok(Self { values })
    }

    /// Wraps values that are already in non-decreasing order.
    pub fn from_sorted(values: Vec<f64>) -> Result<Self> {
        check_finite(&values)?;
        if values.windows(2).any(|w| w[0] > w[1]) {
            return Err(Error::Unsorted);
        }
        Ok(Self { values })
    }

    /// Callers guarantee finiteness and ordering.
    pub(crate) fn from_sorted_unchecked(values: Vec<f64>) -> Self {
        debug_assert!(!values.is_empty());
        debug_assert!(values.windows(2).all(|w| w[0] <= w[1]));
        Self { values }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    /// Always false; kept for API symmetry with `len`.
    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn min(&self) -> f64 {
        self.values[0]
    }

    pub fn max(&self) -> f64 {
        self.values[self.values.len() - 1]
    }

    /// Gaps between consecutive order statistics, `n - 1` of them.
    pub fn spacings(&self) -> impl Iterator<Item = f64> + '_ {
        self.values.windows(2).map(|w| w[1] - w[0])
    }

    /// Merge of two samples, still sorted.
    pub fn pooled(&self, other: &SortedSample) -> SortedSample {
        let (a, b) = (&self.values, &other.values);
        let mut out = Vec::with_capacity(a.len() + b.len());
        let (mut i, mut j) = (0, 0);
        while i < a.len() && j < b.len() {
            if a[i] <= b[j] {
                out.push(a[i]);
                i += 1;
            } else {
                out.push(b[j]);
                j += 1;
            }
        }
        out.extend_from_slice(&a[i..]);
        out.extend_from_slice(&b[j..]);
        SortedSample { values: out }
    }

    /// Applies `x -> scale * x + shift` with `scale > 0`.
    pub fn affine(&self, scale: f64, shift: f64) -> Result<SortedSample> {
        if !(scale > 0.0 && scale.is_finite() && shift.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "affine map needs a positive finite scale and finite shift, got ({scale}, {shift})"
            )));
        }
        SortedSample::from_sorted(self.values.iter().map(|x| scale * x + shift).collect())
    }
}

fn check_finite(values: &[f64]) -> Result<()> {
    if values.is_empty() {
        return Err(Error::EmptySample);
    }
    if let Some(index) = values.iter().position(|x| !x.is_finite()) {
        return Err(Error::NonFinite { index });
    }
    Ok(())
}

/// A right-continuous, piecewise-constant survival function.
///
/// `values[k]` holds on `[breakpoints[k], breakpoints[k + 1])`, the last value
/// extends to `+inf`, and `head` holds below the first breakpoint.
#[derive(Debug, Clone, PartialEq)]
pub struct StepSurvival {
    breakpoints: Vec<f64>,
    values: Vec<f64>,
    head: f64,
}

impl StepSurvival {
    pub fn new(breakpoints: Vec<f64>, values: Vec<f64>, head: f64) -> Result<Self> {
        if breakpoints.len() != values.len() {
            return Err(Error::InvalidInput(format!(
                "{} breakpoints but {} values",
                breakpoints.len(),
                values.len()
            )));
        }
        if breakpoints.iter().any(|b| !b.is_finite()) {
            return Err(Error::InvalidInput("non-finite breakpoint".into()));
        }
        if breakpoints.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidInput(
                "breakpoints must be strictly increasing".into(),
            ));
        }
        let in_unit = |v: f64| (0.0..=1.0).contains(&v);
        if !in_unit(head) || !values.iter().copied().all(in_unit) {
            return Err(Error::InvalidInput("survival values must lie in [0, 1]".into()));
        }
        let mut prev = head;
        for &v in &values {
            if v > prev {
                return Err(Error::InvalidInput("survival values must be non-increasing".into()));
            }
            prev = v;
        }
        Ok(Self {
            breakpoints,
            values,
            head,
        })
    }

    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn head(&self) -> f64 {
        self.head
    }

    /// Value beyond the last breakpoint.
    pub fn tail(&self) -> f64 {
        self.values.last().copied().unwrap_or(self.head)
    }

    pub fn eval(&self, x: f64) -> f64 {
        match self.breakpoints.partition_point(|&b| b <= x) {
            0 => self.head,
            k => self.values[k - 1],
        }
    }

    /// Exact value of `-∫ S log S dx` over the real line.
    ///
    /// Infinite when the head or tail value is strictly between 0 and 1.
    pub fn cumulative_entropy(&self) -> f64 {
        let term = |s: f64| if s > 0.0 && s < 1.0 { -s * s.ln() } else { 0.0 };
        if term(self.head) > 0.0 || term(self.tail()) > 0.0 {
            return f64::INFINITY;
        }
        self.breakpoints
            .windows(2)
            .zip(&self.values)
            .map(|(w, &s)| (w[1] - w[0]) * term(s))
            .sum()
    }
}

/// One maximal interval on which two step functions are both constant.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Segment {
    pub start: f64,
    pub end: f64,
    pub p: f64,
    pub q: f64,
}

/// Walks the union of both breakpoint sets, yielding `(x, P(x), Q(x))` at
/// each union breakpoint in increasing order.
pub(crate) fn union_walk(p: &StepSurvival, q: &StepSurvival, mut visit: impl FnMut(f64, f64, f64)) {
    let (pb, qb) = (&p.breakpoints, &q.breakpoints);
    let (mut i, mut j) = (0, 0);
    let (mut pv, mut qv) = (p.head, q.head);
    while i < pb.len() || j < qb.len() {
        let x = match (pb.get(i), qb.get(j)) {
            (Some(&a), Some(&b)) => a.min(b),
            (Some(&a), None) => a,
            (None, Some(&b)) => b,
            (None, None) => unreachable!(),
        };
        if i < pb.len() && pb[i] == x {
            pv = p.values[i];
            i += 1;
        }
        if j < qb.len() && qb[j] == x {
            qv = q.values[j];
            j += 1;
        }
        visit(x, pv, qv);
    }
}

/// Finite segments between consecutive union breakpoints.
pub(crate) fn segments(p: &StepSurvival, q: &StepSurvival) -> Vec<Segment> {
    let mut out = Vec::with_capacity(p.breakpoints.len() + q.breakpoints.len());
    let mut prev: Option<(f64, f64, f64)> = None;
    union_walk(p, q, |x, pv, qv| {
        if let Some((start, sp, sq)) = prev {
            out.push(Segment {
                start,
                end: x,
                p: sp,
                q: sq,
            });
        }
        prev = Some((x, pv, qv));
    });
    out
}

/// `S(x) = (1/n) #{i : x_i > x}`; tied observations share one breakpoint.
pub fn empirical_survival(sample: &SortedSample) -> StepSurvival {
    let xs = sample.values();
    let n = xs.len();
    let mut breakpoints = Vec::with_capacity(n);
    let mut values = Vec::with_capacity(n);
    let mut i = 0;
    while i < n {
        let x = xs[i];
        while i < n && xs[i] == x {
            i += 1;
        }
        breakpoints.push(x);
        values.push((n - i) as f64 / n as f64);
    }
    StepSurvival {
        breakpoints,
        values,
        head: 1.0,
    }
}

/// Empirical survival sampled on the edges of `bins` equal-width cells over
/// `[lo, hi]` (uncensored Kaplan-Meier on a fixed grid).
///
/// The result holds `S(e_k)` on `[e_k, e_{k+1})`; runs of equal values are
/// collapsed into a single breakpoint.
pub fn km_binned_survival(
    sample: &SortedSample,
    bins: usize,
    range: (f64, f64),
) -> Result<StepSurvival> {
    let (lo, hi) = range;
    if !(lo.is_finite() && hi.is_finite() && lo < hi) {
        return Err(Error::InvalidRange { lo, hi });
    }
    if bins == 0 {
        return Err(Error::ZeroBins);
    }
    let xs = sample.values();
    let n = xs.len();
    let width = hi - lo;
    let mut breakpoints = Vec::new();
    let mut values = Vec::new();
    let mut last = 1.0;
    let mut seen = 0; // observations <= current edge
    for k in 0..=bins {
        let edge = if k == bins {
            hi
        } else {
            lo + width * (k as f64 / bins as f64)
        };
        while seen < n && xs[seen] <= edge {
            seen += 1;
        }
        let s = (n - seen) as f64 / n as f64;
        if s != last {
            breakpoints.push(edge);
            values.push(s);
            last = s;
        }
    }
    Ok(StepSurvival {
        breakpoints,
        values,
        head: 1.0,
    })
}

/// Survival function of the equal-weight mixture, `(P + Q) / 2`.
pub fn mixture_survival(p: &StepSurvival, q: &StepSurvival) -> StepSurvival {
    let mut breakpoints = Vec::with_capacity(p.breakpoints.len() + q.breakpoints.len());
    let mut values = Vec::with_capacity(breakpoints.capacity());
    union_walk(p, q, |x, pv, qv| {
        breakpoints.push(x);
        values.push(0.5 * (pv + qv));
    });
    StepSurvival {
        breakpoints,
        values,
        head: 0.5 * (p.head + q.head),
    }
}

/// Empirical survival entropy from the sample spacings:
/// `-Σ_{i=1}^{n-1} U_{i+1} (1 - i/n) ln(1 - i/n)`.
pub fn survival_entropy(sample: &SortedSample) -> f64 {
    let n = sample.len();
    sample
        .spacings()
        .enumerate()
        .map(|(k, u)| {
            let w = (n - (k + 1)) as f64 / n as f64;
            -u * w * w.ln()
        })
        .sum()
}
