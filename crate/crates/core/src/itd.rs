//! Intrinsic time-scale decomposition (ITD).
//!
//! One stage splits a sequence into a baseline `L` and a proper rotation
//! component `H = x - L`. The baseline is pinned at the local extrema
//! ("knots") of `x` and follows `x` monotonically between them, so `H`
//! carries the oscillation riding on the baseline.
//!
//! `L + H == x` holds bitwise whenever a pair of doubles near `L` can express
//! it. When `|L|` exceeds `|x|` and `x` has bits finer than the spacing of
//! `L`, no such pair exists; the residual is then below one ulp of `L`.

use serde::Serialize;

use crate::{Error, Result};

/// Conventional baseline weight.
pub const DEFAULT_ALPHA: f64 = 0.5;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ItdResult {
    pub baseline: Vec<f64>,
    /// Proper rotation component.
    pub prc: Vec<f64>,
    pub alpha: f64,
    /// Zero-based knot positions: first is 0, last is `len - 1`.
    pub extrema: Vec<usize>,
}

/// Knots of `x`: both endpoints plus every interior strict local extremum.
///
/// A plateau (run of equal values) counts as one point placed at its first
/// index, and qualifies when the signal rises into it and falls out of it,
/// or vice versa. Indices are zero-based.
pub fn find_extrema(x: &[f64]) -> Result<Vec<usize>> {
    let n = x.len();
    if n < 2 {
        return Err(Error::InsufficientData(format!(
            "extrema need at least 2 points, got {n}"
        )));
    }
    // Run-length collapse: (first index, value) per plateau.
    let mut runs: Vec<(usize, f64)> = Vec::with_capacity(n);
    for (i, &v) in x.iter().enumerate() {
        if runs.last().is_none_or(|&(_, last)| last != v) {
            runs.push((i, v));
        }
    }
    let mut knots = vec![0];
    for w in runs.windows(3) {
        let (prev, (idx, cur), next) = (w[0].1, w[1], w[2].1);
        if (cur - prev) * (next - cur) < 0.0 {
            knots.push(idx);
        }
    }
    knots.push(n - 1);
    Ok(knots)
}

fn check_input(x: &[f64], alpha: f64) -> Result<()> {
    if x.len() < 2 {
        return Err(Error::InsufficientData(format!(
            "ITD needs at least 2 points, got {}",
            x.len()
        )));
    }
    if let Some(i) = x.iter().position(|v| !v.is_finite()) {
        return Err(Error::invalid(format!(
            "ITD input has non-finite value at {i}"
        )));
    }
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::invalid(format!(
            "alpha must lie in (0, 1), got {alpha}"
        )));
    }
    Ok(())
}

/// One ITD stage with baseline weight `alpha`.
pub fn itd_single_stage(x: &[f64], alpha: f64) -> Result<ItdResult> {
    check_input(x, alpha)?;
    let knots = find_extrema(x)?;
    let n = x.len();

    if knots.len() < 3 {
        return Ok(ItdResult {
            baseline: x.to_vec(),
            prc: vec![0.0; n],
            alpha,
            extrema: knots,
        });
    }

    let m = knots.len();
    let mut knot_l = vec![0.0; m];
    knot_l[0] = x[knots[0]];
    knot_l[m - 1] = x[knots[m - 1]];
    for k in 1..m - 1 {
        let (tp, t, tn) = (knots[k - 1], knots[k], knots[k + 1]);
        let frac = (t - tp) as f64 / (tn - tp) as f64;
        let chord = x[tp] + frac * (x[tn] - x[tp]);
        knot_l[k] = alpha * chord + (1.0 - alpha) * x[t];
    }

    let mut baseline = vec![0.0; n];
    for k in 0..m - 1 {
        let (t0, t1) = (knots[k], knots[k + 1]);
        let (l0, l1) = (knot_l[k], knot_l[k + 1]);
        let (x0, x1) = (x[t0], x[t1]);
        baseline[t0] = l0;
        for t in t0 + 1..t1 {
            baseline[t] = if x1 != x0 {
                l0 + (l1 - l0) / (x1 - x0) * (x[t] - x0)
            } else {
                l0 + (l1 - l0) * (t - t0) as f64 / (t1 - t0) as f64
            };
        }
    }
    baseline[n - 1] = knot_l[m - 1];

    let (baseline, prc) = split_exact(x, baseline);
    Ok(ItdResult {
        baseline,
        prc,
        alpha,
        extrema: knots,
    })
}

/// Splits `x` into `(L, H)` with `L + H == x` in floating point. `L` may
/// move by a few units in the last place of `x` to make the split exact.
fn split_exact(x: &[f64], baseline: Vec<f64>) -> (Vec<f64>, Vec<f64>) {
    x.iter()
        .zip(baseline)
        .map(|(&xv, l)| split_point(xv, l))
        .unzip()
}

fn split_point(x: f64, l: f64) -> (f64, f64) {
    let exact = |l: f64| {
        let h = x - l;
        (l + h == x).then_some((l, h))
    };
    if let Some(pair) = exact(l).or_else(|| exact(x - (x - l))) {
        return pair;
    }
    // Snap L onto a grid fine enough for `x - L` to be representable,
    // coarsening up to the spacing of L itself. Beyond that no pair close to
    // L exists: L and H share a grid coarser than the low bits of x.
    let limit = 2.0 * ulp(l.abs().max(x.abs()));
    let mut q = ulp(x);
    while q <= limit {
        let snapped = (l / q).round() * q;
        for cand in [snapped, snapped + q, snapped - q] {
            if let Some(pair) = exact(cand) {
                return pair;
            }
        }
        q *= 2.0;
    }
    (l, x - l)
}

/// Distance from `|x|` to the next larger double.
fn ulp(x: f64) -> f64 {
    let a = x.abs();
    if a == 0.0 {
        return f64::from_bits(1);
    }
    let bits = a.to_bits();
    if a == f64::MAX {
        a - f64::from_bits(bits - 1)
    } else {
        f64::from_bits(bits + 1) - a
    }
}

/// Multi-stage decomposition: PRCs in extraction order plus the final
/// baseline.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ItdDecomposition {
    pub prcs: Vec<Vec<f64>>,
    pub baseline: Vec<f64>,
}

impl ItdDecomposition {
    /// Sum of all PRCs and the final baseline.
    pub fn reconstruct(&self) -> Vec<f64> {
        let mut out = self.baseline.clone();
        for prc in self.prcs.iter().rev() {
            for (o, h) in out.iter_mut().zip(prc) {
                *o += h;
            }
        }
        out
    }
}

/// Applies [`itd_single_stage`] to successive baselines until `max_stages`
/// PRCs have been extracted or the baseline is monotone.
pub fn itd_decompose(x: &[f64], max_stages: usize, alpha: f64) -> Result<ItdDecomposition> {
    check_input(x, alpha)?;
    if max_stages == 0 {
        return Err(Error::invalid("max_stages must be at least 1"));
    }
    let mut prcs = Vec::new();
    let mut current = x.to_vec();
    while prcs.len() < max_stages {
        let stage = itd_single_stage(&current, alpha)?;
        if stage.extrema.len() < 3 {
            break;
        }
        prcs.push(stage.prc);
        current = stage.baseline;
    }
    Ok(ItdDecomposition {
        prcs,
        baseline: current,
    })
}
