//! Entropic steering test from two complementary coincidence matrices.

use serde::{Deserialize, Serialize};

use crate::coincidence::CoincidenceMatrix;
use crate::error::{check_dimension, Error, Result};
use crate::noise_model::check_contrast;

/// `H(X|Y) = H(X, Y) - H(Y)` in bits, with `X` the signal (row) outcome
/// and `Y` the idler (column) outcome. Counts are normalised first.
pub fn conditional_entropy(matrix: &CoincidenceMatrix) -> Result<f64> {
    let total = matrix.total();
    if total <= 0.0 {
        return Err(Error::EmptyMatrix);
    }
    let h = |xs: &mut dyn Iterator<Item = f64>| -> f64 {
        xs.map(|x| x / total).filter(|&p| p > 0.0).map(|p| -p * p.log2()).sum()
    };
    let joint = h(&mut matrix.entries().iter().copied());
    let idler = h(&mut matrix.column_sums().into_iter());
    Ok(joint - idler)
}

/// Contrast form of the entropic steering functional for an isotropic-noise
/// matrix, `H(X|Y)` summed over two MUBs minus `log2 d`:
///
/// ```text
/// log2(q + d - 1) - q/(q + d - 1) log2 q - log2(d)/2
/// ```
///
/// (per-MUB half). Negative values violate the steering inequality.
pub fn steering_functional(q: f64, d: usize) -> Result<f64> {
    check_contrast(q)?;
    check_dimension(d)?;
    let df = d as f64;
    if q.is_infinite() {
        return Ok(-0.5 * df.log2());
    }
    Ok((q + df - 1.0).log2() - q / (q + df - 1.0) * q.log2() - 0.5 * df.log2())
}

const THRESHOLD_LO: f64 = 1.0 + 1e-9;
const THRESHOLD_HI: f64 = 1e6;
const THRESHOLD_TOLERANCE: f64 = 1e-6;
const SCAN_POINTS: usize = 400;

/// Contrast at which [`steering_functional`] changes sign. A log-spaced scan
/// over `[1, 1e6]` confirms a single sign change before bisecting it.
pub fn steering_threshold(d: usize) -> Result<f64> {
    check_dimension(d)?;
    let f = |q: f64| steering_functional(q, d).expect("q and d already validated");
    let bracket_failure = Error::BracketFailure {
        d,
        lo: THRESHOLD_LO,
        hi: THRESHOLD_HI,
    };
    let ratio = (THRESHOLD_HI / THRESHOLD_LO).powf(1.0 / (SCAN_POINTS - 1) as f64);
    let mut bracket = None;
    let mut changes = 0;
    let mut prev = (THRESHOLD_LO, f(THRESHOLD_LO));
    for i in 1..SCAN_POINTS {
        let q = THRESHOLD_LO * ratio.powi(i as i32);
        let v = f(q);
        if (prev.1 > 0.0) != (v > 0.0) {
            changes += 1;
            bracket.get_or_insert((prev.0, q));
        }
        prev = (q, v);
    }
    let (mut lo, mut hi) = match (bracket, changes) {
        (Some(b), 1) => b,
        _ => return Err(bracket_failure),
    };
    while hi - lo > THRESHOLD_TOLERANCE {
        let mid = 0.5 * (lo + hi);
        if f(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SteeringVerdict {
    pub violated: bool,
    /// `log2 d - (H1 + H2)`; positive when violated.
    pub margin: f64,
    pub entropy_first: f64,
    pub entropy_second: f64,
}

/// Tests `H(X1|Y1) + H(X2|Y2) < log2 d` on two matched matrices taken in
/// mutually unbiased bases.
pub fn steering_test_from_data(first: &CoincidenceMatrix, second: &CoincidenceMatrix, d: usize) -> Result<SteeringVerdict> {
    check_dimension(d)?;
    for m in [first, second] {
        if m.d() != d {
            return Err(Error::DimensionMismatch { expected: d, found: m.d() });
        }
    }
    let h1 = conditional_entropy(first)?;
    let h2 = conditional_entropy(second)?;
    let margin = (d as f64).log2() - (h1 + h2);
    Ok(SteeringVerdict {
        violated: margin > 0.0,
        margin,
        entropy_first: h1,
        entropy_second: h2,
    })
}
