//! Fidelity witnesses and entanglement-dimensionality thresholds.
//!
//! A fidelity `F > (k - 1)/d` to the maximally entangled state certifies a
//! Schmidt number of at least `k`. All thresholds use strict inequalities:
//! landing exactly on a boundary does not certify the next level.

use serde::{Deserialize, Serialize};

use super::largest_integer_below;
use crate::coincidence::ExperimentRecord;
use crate::error::{check_dimension, Error, Result};

/// Two-MUB lower bound `(q - d + 1) / (q + d - 1)`. Left unclamped; a
/// negative value means the bound says nothing.
pub fn fidelity_bound_two_mub(q: f64, d: usize) -> f64 {
    if q.is_infinite() {
        return 1.0;
    }
    let d = d as f64;
    (q - d + 1.0) / (q + d - 1.0)
}

fn check_k(k: usize, d: usize) -> Result<()> {
    check_dimension(d)?;
    if k < 2 {
        return Err(Error::InvalidDimension {
            d: k,
            reason: "target dimensionality k must be at least 2",
        });
    }
    if k > d {
        return Err(Error::InvalidDimension {
            d: k,
            reason: "target dimensionality k exceeds the space dimension d",
        });
    }
    Ok(())
}

/// Contrast that must be strictly exceeded to certify `k` dimensions from
/// two MUBs in a `d`-dimensional space: `(d - 1)(d + k - 1)/(d - k + 1)`.
pub fn required_contrast_two_mub(k: usize, d: usize) -> Result<f64> {
    check_k(k, d)?;
    let (k, d) = (k as f64, d as f64);
    Ok((d - 1.0) * (d + k - 1.0) / (d - k + 1.0))
}

/// Contrast that must be strictly exceeded to certify `k` dimensions with
/// all `d + 1` MUBs: `k (d - 1)/(d + 1 - k)`. Tends to `k` as `d` grows and
/// equals `d^2 - d` at `k = d`.
pub fn required_contrast_all_mub(k: usize, d: usize) -> Result<f64> {
    check_k(k, d)?;
    let (k, d) = (k as f64, d as f64);
    Ok(k * (d - 1.0) / (d + 1.0 - k))
}

/// Largest `k <= d` with `q > required_contrast_two_mub(k, d)`, at least 1.
pub fn k_max_two_mub(q: f64, d: usize) -> usize {
    if q.is_infinite() {
        return d;
    }
    let df = d as f64;
    let bound = (q * (df + 1.0) - (df - 1.0) * (df - 1.0)) / (q + df - 1.0);
    clamp_k(largest_integer_below(bound), d)
}

fn clamp_k(k: i64, d: usize) -> usize {
    k.clamp(1, d as i64) as usize
}

/// Hilbert-space dimension that minimises the two-MUB requirement for a
/// target dimensionality `k`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OptimalOperatingPoint {
    pub k: usize,
    pub d_opt: usize,
    pub q_opt: f64,
    /// Continuous minimiser `sqrt(2 (k^2 - 3k + 2)) + k - 1`.
    pub d_continuous: f64,
    /// Continuous minimum `3k + 2 sqrt(2 (k - 2)(k - 1)) - 4`.
    pub q_closed_form: f64,
}

pub fn optimal_operating_point(k: usize) -> Result<OptimalOperatingPoint> {
    if k < 2 {
        return Err(Error::InvalidDimension {
            d: k,
            reason: "target dimensionality k must be at least 2",
        });
    }
    let kf = k as f64;
    let d_continuous = (2.0 * (kf * kf - 3.0 * kf + 2.0)).sqrt() + kf - 1.0;
    let q_closed_form = 3.0 * kf + 2.0 * (2.0 * (kf - 2.0) * (kf - 1.0)).sqrt() - 4.0;
    let lo = (d_continuous.floor() as usize).max(k);
    let hi = (d_continuous.ceil() as usize).max(k);
    let mut best = (lo, required_contrast_two_mub(k, lo)?);
    if hi != lo {
        let q_hi = required_contrast_two_mub(k, hi)?;
        if q_hi < best.1 {
            best = (hi, q_hi);
        }
    }
    Ok(OptimalOperatingPoint {
        k,
        d_opt: best.0,
        q_opt: best.1,
        d_continuous,
        q_closed_form,
    })
}

/// Fidelity from all `d + 1` MUBs: `(q + 1/d - 1)/(q + d - 1)`.
pub fn fidelity_all_mub_from_contrast(q: f64, d: usize) -> f64 {
    if q.is_infinite() {
        return 1.0;
    }
    let d = d as f64;
    (q + 1.0 / d - 1.0) / (q + d - 1.0)
}

/// Exact fidelity to the maximally entangled state from matched
/// coincidence matrices in all `d + 1` MUBs: `(S - 1)/d`, with `S` the
/// summed diagonal probability over every basis.
pub fn fidelity_exact_from_data(record: &ExperimentRecord) -> Result<f64> {
    let d = record.d;
    if record.mub_count != d + 1 {
        return Err(Error::IncompleteMubSet {
            expected: d + 1,
            found: record.mub_count,
        });
    }
    let mut correlated = 0.0;
    for b in 0..=d {
        let m = record.matched(b).ok_or(Error::MissingBasis(b))?;
        correlated += m.require_probability()?.diagonal_sum();
    }
    Ok((correlated - 1.0) / d as f64)
}

/// Largest `k` with `fidelity > (k - 1)/d`, between 1 and `d`.
pub fn schmidt_number_from_fidelity(fidelity: f64, d: usize) -> usize {
    let fidelity = fidelity.clamp(-1.0, 1.0);
    clamp_k(largest_integer_below(fidelity * d as f64) + 1, d)
}

/// Largest integer strictly below `(d + 1) q/(d + q - 1)`, capped at `d`.
pub fn k_max_all_mub(q: f64, d: usize) -> usize {
    if q.is_infinite() {
        return d;
    }
    let df = d as f64;
    clamp_k(largest_integer_below((df + 1.0) * q / (df + q - 1.0)), d)
}
