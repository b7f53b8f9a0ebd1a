//! The empirical survival Jensen-Shannon divergence.
//!
//! [`esjs`] integrates the divergence exactly over the union of breakpoints of
//! two step survival functions. [`esjs_spacings`] evaluates the same quantity
//! from order-statistic spacings and serves as an independent cross-check.

use serde::Serialize;

use crate::survival::{segments, SortedSample, StepSurvival};
use crate::{Error, Result};

/// `½ [P ln(P/M) + Q ln(Q/M)]` with `M = (P + Q)/2` and `0 ln 0 = 0`.
///
/// Written as `M/2 [(1+d) ln(1+d) + (1-d) ln(1-d)]` with `d = (P-Q)/(P+Q)`,
/// which stays accurate when `P` and `Q` nearly coincide.
pub(crate) fn js_term(p: f64, q: f64) -> f64 {
    if p == q {
        return 0.0;
    }
    let sum = p + q;
    let m = 0.5 * sum;
    let d = (p - q) / sum;
    let plus = if d == -1.0 { 0.0 } else { (1.0 + d) * d.ln_1p() };
    let minus = if d == 1.0 { 0.0 } else { (1.0 - d) * (-d).ln_1p() };
    0.5 * m * (plus + minus)
}

/// ESJS between two step survival functions.
///
/// Returns `+inf` if the functions disagree on an unbounded segment.
pub fn esjs(p: &StepSurvival, q: &StepSurvival) -> f64 {
    if js_term(p.head(), q.head()) > 0.0 || js_term(p.tail(), q.tail()) > 0.0 {
        return f64::INFINITY;
    }
    segments(p, q)
        .iter()
        .map(|s| (s.end - s.start) * js_term(s.p, s.q))
        .sum()
}

/// Square root of the ESJS, a metric on survival functions.
pub fn esjs_distance(p: &StepSurvival, q: &StepSurvival) -> f64 {
    esjs(p, q).sqrt()
}

/// ESJS from sample spacings, for two samples of equal size `n`.
///
/// The mixture `(P + Q)/2` of two size-`n` empirical survival functions is
/// exactly the empirical survival function of the pooled size-`2n` sample, so
/// the pooled sample serves as the mixture sample. Both inputs are evaluated
/// on the same size-`2n` index grid by repeating each of their observations
/// twice, which leaves their survival functions unchanged.
pub fn esjs_spacings(p_sample: &SortedSample, q_sample: &SortedSample) -> Result<f64> {
    let n = p_sample.len();
    if q_sample.len() != n {
        return Err(Error::UnequalSizes {
            p: n,
            q: q_sample.len(),
        });
    }
    let mixture = p_sample.pooled(q_sample);
    let doubled = |s: &SortedSample| -> Vec<f64> {
        s.values().iter().flat_map(|&x| [x, x]).collect()
    };
    let (p2, q2, m) = (doubled(p_sample), doubled(q_sample), mixture.values());
    let size = 2 * n;
    let mut total = 0.0;
    for i in 1..size {
        let w = (size - i) as f64 / size as f64;
        let up = p2[i] - p2[i - 1];
        let uq = q2[i] - q2[i - 1];
        let um = m[i] - m[i - 1];
        total += (0.5 * up + 0.5 * uq - um) * w * w.ln();
    }
    Ok(total)
}

/// Ratio of two ESJS scores computed against the same data.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EsjsFactor {
    pub ratio: f64,
    pub numerator_esjs: f64,
    pub denominator_esjs: f64,
}

/// `challenger_esjs / champion_esjs`.
///
/// Reports put the worse (larger) score in the numerator, so factors from a
/// best-versus-runner-up comparison are at least 1.
pub fn esjs_factor(challenger_esjs: f64, champion_esjs: f64) -> Result<EsjsFactor> {
    if !(challenger_esjs >= 0.0 && champion_esjs >= 0.0) {
        return Err(Error::InvalidInput(format!(
            "ESJS values must be non-negative, got {challenger_esjs} and {champion_esjs}"
        )));
    }
    if champion_esjs == 0.0 {
        return Err(Error::DegeneratePerfectFit);
    }
    Ok(EsjsFactor {
        ratio: challenger_esjs / champion_esjs,
        numerator_esjs: challenger_esjs,
        denominator_esjs: champion_esjs,
    })
}
