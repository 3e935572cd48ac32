//! Search for the smallest frequency weight that makes a test significant.
//!
//! `p(w)` is the p-value of a fixed test when every observation carries
//! frequency weight `w`. The non-significance factor is the smallest integer
//! `w` with `p(w) ≤ α`. Between the last non-significant weight `w0` and the
//! first significant weight `w1 = w0 + 1` the crossing point is linearly
//! interpolated.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Default upper bound on the searched weight.
pub const DEFAULT_MAX_WEIGHT: u64 = 1_000_000;

/// `p(w1)` within this distance of the target counts as hitting it exactly.
pub const EXACT_HIT_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum InterpolationError {
    #[error("p-values at both ends of the bracket are equal ({0})")]
    DegenerateBracket(f64),
    #[error("target {target} is not between p0 = {p0} and p1 = {p1} with p0 > p1")]
    OutsideBracket { p0: f64, p1: f64, target: f64 },
}

#[derive(Debug, Error)]
pub enum NfError<E: std::error::Error + 'static> {
    #[error("target significance must lie in (0,1), got {0}")]
    InvalidTarget(f64),
    #[error("maximum weight must be at least 1")]
    InvalidMaxWeight,
    #[error("no weight up to {max_weight} reaches the target significance (best p = {best_p})")]
    UnreachableSignificance {
        max_weight: u64,
        best_p: f64,
        trace: Vec<TraceEntry>,
    },
    #[error("evaluating the test at weight {weight} failed: {source}")]
    EvaluationFailed {
        weight: u64,
        #[source]
        source: E,
    },
    #[error("test at weight {weight} returned an invalid p-value {p}")]
    InvalidProbability { weight: u64, p: f64 },
    #[error(transparent)]
    Interpolation(#[from] InterpolationError),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceEntry {
    pub weight: u64,
    pub p: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NfResult {
    pub target_alpha: f64,
    pub p_at_1: f64,
    /// Largest weight with p above the target (equal to `w1` when no interpolation ran).
    pub w0: u64,
    pub p0: f64,
    /// Smallest weight with p at or below the target.
    pub w1: u64,
    pub p1: f64,
    pub w_int: f64,
    /// `base_n · w_int`; left unrounded.
    pub n_int: f64,
    pub nf_integer: u64,
    /// Every evaluation, in the order it was made.
    pub trace: Vec<TraceEntry>,
    pub exact_hit: bool,
    pub interpolated: bool,
    /// The sampled p-curve was not decreasing and the bracket came from a linear scan.
    pub non_monotone: bool,
}

/// Linear interpolation of the weight at which the p-curve crosses `target`.
///
/// Evaluates `(w0·(target − p1) + w1·(p0 − target)) / (p0 − p1)` in the
/// algebraically equal form `w0 + (w1 − w0)·(p0 − target)/(p0 − p1)`, which
/// returns the endpoints exactly when `target` equals `p0` or `p1`.
pub fn interpolate(
    w0: u64,
    p0: f64,
    w1: u64,
    p1: f64,
    target: f64,
) -> Result<f64, InterpolationError> {
    if p0 == p1 {
        return Err(InterpolationError::DegenerateBracket(p0));
    }
    if !(p0 > p1 && target <= p0 && target >= p1) {
        return Err(InterpolationError::OutsideBracket { p0, p1, target });
    }
    let (w0, w1) = (w0 as f64, w1 as f64);
    Ok(w0 + (w1 - w0) * ((p0 - target) / (p0 - p1)))
}

struct Evaluator<F> {
    p_of_weight: F,
    cache: BTreeMap<u64, f64>,
    trace: Vec<TraceEntry>,
}

impl<F, E> Evaluator<F>
where
    F: FnMut(u64) -> Result<f64, E>,
    E: std::error::Error + 'static,
{
    fn p(&mut self, weight: u64) -> Result<f64, NfError<E>> {
        if let Some(&p) = self.cache.get(&weight) {
            return Ok(p);
        }
        let p = (self.p_of_weight)(weight)
            .map_err(|source| NfError::EvaluationFailed { weight, source })?;
        if !(0.0..=1.0).contains(&p) {
            return Err(NfError::InvalidProbability { weight, p });
        }
        self.cache.insert(weight, p);
        self.trace.push(TraceEntry { weight, p });
        Ok(p)
    }

    /// Some larger weight was seen with a larger p-value.
    fn saw_increase(&self) -> bool {
        // walking down from the largest weight, p must never drop
        let mut highest = f64::NEG_INFINITY;
        for &p in self.cache.values().rev() {
            if p < highest {
                return true;
            }
            highest = p;
        }
        false
    }

    fn best_p(&self) -> f64 {
        self.cache.values().copied().fold(f64::INFINITY, f64::min)
    }
}

/// Finds the smallest weight `w ≤ max_weight` with `p_of_weight(w) ≤ target`
/// and interpolates the crossing between it and `w − 1`.
///
/// Weights are probed by doubling until the target is reached, then the
/// bracket is narrowed by bisection. If the evaluated points show the
/// p-curve is not decreasing, the bracket is recomputed by an ascending scan
/// so the result is still the smallest significant weight.
pub fn compute_nf<F, E>(
    p_of_weight: F,
    base_n: usize,
    target: f64,
    max_weight: u64,
) -> Result<NfResult, NfError<E>>
where
    F: FnMut(u64) -> Result<f64, E>,
    E: std::error::Error + 'static,
{
    if !(target > 0.0 && target < 1.0) {
        return Err(NfError::InvalidTarget(target));
    }
    if max_weight == 0 {
        return Err(NfError::InvalidMaxWeight);
    }
    let mut ev = Evaluator {
        p_of_weight,
        cache: BTreeMap::new(),
        trace: Vec::new(),
    };

    let p_at_1 = ev.p(1)?;
    if p_at_1 <= target {
        return Ok(NfResult {
            target_alpha: target,
            p_at_1,
            w0: 1,
            p0: p_at_1,
            w1: 1,
            p1: p_at_1,
            w_int: 1.0,
            n_int: base_n as f64,
            nf_integer: 1,
            trace: ev.trace,
            exact_hit: (p_at_1 - target).abs() <= EXACT_HIT_TOLERANCE,
            interpolated: false,
            non_monotone: false,
        });
    }

    // doubling: lo always has p > target
    let mut lo = 1u64;
    let hi = loop {
        if lo >= max_weight {
            return Err(NfError::UnreachableSignificance {
                max_weight,
                best_p: ev.best_p(),
                trace: ev.trace,
            });
        }
        let next = lo.saturating_mul(2).min(max_weight);
        if ev.p(next)? <= target {
            break next;
        }
        lo = next;
    };

    let mut hi = hi;
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        if ev.p(mid)? <= target {
            hi = mid;
        } else {
            lo = mid;
        }
    }

    let mut w1 = hi;
    let mut non_monotone = false;
    if ev.p(w1 - 1)? <= target || ev.saw_increase() {
        non_monotone = true;
        w1 = (2..=hi)
            .map(|w| ev.p(w).map(|p| (w, p)))
            .find(|r| r.as_ref().map_or(true, |&(_, p)| p <= target))
            .expect("hi itself is significant")?
            .0;
    }
    let w0 = w1 - 1;
    let p0 = ev.p(w0)?;
    let p1 = ev.p(w1)?;

    let (w0, p0, w_int, exact_hit, interpolated) = if (p1 - target).abs() <= EXACT_HIT_TOLERANCE {
        (w1, p1, w1 as f64, true, false)
    } else {
        (w0, p0, interpolate(w0, p0, w1, p1, target)?, false, true)
    };

    Ok(NfResult {
        target_alpha: target,
        p_at_1,
        w0,
        p0,
        w1,
        p1,
        w_int,
        n_int: base_n as f64 * w_int,
        nf_integer: w1,
        trace: ev.trace,
        exact_hit,
        interpolated,
        non_monotone,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::convert::Infallible;

    fn run<F: FnMut(u64) -> f64>(
        mut f: F,
        target: f64,
        max_weight: u64,
    ) -> Result<NfResult, NfError<Infallible>> {
        compute_nf(|w| Ok::<_, Infallible>(f(w)), 10, target, max_weight)
    }

    #[test]
    fn interpolate_reference_bracket() {
        let w = interpolate(4, 0.0826, 5, 0.0392, 0.05).unwrap();
        assert!((w - 4.751).abs() < 1e-3);
    }

    #[test]
    fn interpolate_endpoints_and_midpoint() {
        assert_eq!(interpolate(4, 0.3, 5, 0.1, 0.1).unwrap(), 5.0);
        assert_eq!(interpolate(4, 0.3, 5, 0.1, 0.3).unwrap(), 4.0);
        assert_eq!(interpolate(8, 0.75, 9, 0.25, 0.5).unwrap(), 8.5);
    }

    #[test]
    fn interpolate_errors() {
        assert_eq!(
            interpolate(1, 0.2, 2, 0.2, 0.2),
            Err(InterpolationError::DegenerateBracket(0.2))
        );
        assert!(matches!(
            interpolate(1, 0.1, 2, 0.2, 0.15),
            Err(InterpolationError::OutsideBracket { .. })
        ));
        assert!(matches!(
            interpolate(1, 0.3, 2, 0.2, 0.1),
            Err(InterpolationError::OutsideBracket { .. })
        ));
    }

    #[test]
    fn already_significant() {
        let r = run(|w| 0.6433 / w as f64, 0.7, 100).unwrap();
        assert_eq!(r.nf_integer, 1);
        assert_eq!(r.w_int, 1.0);
        assert_eq!(r.n_int, 10.0);
        assert!(!r.interpolated);
        assert_eq!(r.trace.len(), 1);
    }

    #[test]
    fn flat_curve_unreachable() {
        match run(|_| 1.0, 0.05, 1000) {
            Err(NfError::UnreachableSignificance {
                max_weight, best_p, ..
            }) => {
                assert_eq!(max_weight, 1000);
                assert_eq!(best_p, 1.0);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn cap_is_probed_exactly() {
        // significant only from 700 on; cap 1000 is not a power of two
        let r = run(|w| if w >= 700 { 0.01 } else { 0.5 }, 0.05, 1000).unwrap();
        assert_eq!(r.nf_integer, 700);
        let err = run(|w| if w >= 700 { 0.01 } else { 0.5 }, 0.05, 699).unwrap_err();
        assert!(matches!(
            err,
            NfError::UnreachableSignificance {
                max_weight: 699,
                ..
            }
        ));
    }

    #[test]
    fn exact_hit_skips_interpolation() {
        let r = run(|w| 0.5 / w as f64, 0.05, 1000).unwrap();
        assert_eq!(r.nf_integer, 10);
        assert!(r.exact_hit);
        assert_eq!(r.w_int, 10.0);
        assert_eq!((r.w0, r.w1), (10, 10));
    }

    #[test]
    fn non_monotone_curve_falls_back_to_scan() {
        // significant at 3, not at 4..7, significant again from 8
        let curve = |w: u64| match w {
            1 => 0.5,
            2 => 0.1,
            3 => 0.01,
            4 => 0.3,
            5..=7 => 0.2,
            _ => 0.01,
        };
        let r = run(curve, 0.05, 100).unwrap();
        assert!(r.non_monotone);
        assert_eq!(r.nf_integer, 3);
        assert_eq!(r.w0, 2);
    }

    #[test]
    fn invalid_inputs() {
        assert!(matches!(
            run(|_| 0.5, 1.5, 10),
            Err(NfError::InvalidTarget(_))
        ));
        assert!(matches!(
            run(|_| 0.5, 0.0, 10),
            Err(NfError::InvalidTarget(_))
        ));
        assert!(matches!(
            run(|_| 0.5, 0.05, 0),
            Err(NfError::InvalidMaxWeight)
        ));
        assert!(matches!(
            run(|_| f64::NAN, 0.05, 10),
            Err(NfError::InvalidProbability { weight: 1, .. })
        ));
    }

    #[derive(Debug, thiserror::Error)]
    #[error("boom")]
    struct Boom;

    #[test]
    fn evaluation_failure_propagates() {
        let err =
            compute_nf(|w| if w < 4 { Ok(0.5) } else { Err(Boom) }, 10, 0.05, 100).unwrap_err();
        assert!(matches!(err, NfError::EvaluationFailed { weight: 4, .. }));
    }
}
