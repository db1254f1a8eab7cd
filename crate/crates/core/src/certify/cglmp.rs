//! CGLMP Bell functional with the standard optimal phase settings, its
//! isotropic-noise value and the largest dimension that still violates it.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::coincidence::{joint_probability, CoincidenceMatrix};
use crate::error::{check_dimension, Result};
use crate::mubs::Basis;
use crate::noise_model::isotropic_weight;
use crate::states::flat_spectrum;

/// Local-realist bound of the functional.
pub const CGLMP_LOCAL_BOUND: f64 = 2.0;

/// Largest dimension the violation scan visits.
pub const MAX_SCAN_DIMENSION: usize = 128;

const ALICE_SHIFTS: [f64; 2] = [0.0, 0.5];
const BOB_SHIFTS: [f64; 2] = [0.25, -0.25];

/// Alice's settings `|k> = d^-1/2 sum_j exp(i 2 pi j (k + alpha_a)/d) |j>`.
pub fn cglmp_alice_basis(d: usize, setting: usize) -> Result<Basis> {
    check_dimension(d)?;
    Ok(shifted_fourier(d, ALICE_SHIFTS[setting]))
}

/// Bob's setting `b` as the idler argument of [`joint_probability`]: rows
/// `d^-1/2 exp(i 2 pi j (l - beta_b)/d)`. The resulting distribution is
/// `P(k, l) = 1/(2 d^3 sin^2(pi (k - l + alpha_a + beta_b)/d))`.
pub fn cglmp_bob_idler_basis(d: usize, setting: usize) -> Result<Basis> {
    check_dimension(d)?;
    Ok(shifted_fourier(d, -BOB_SHIFTS[setting]))
}

fn shifted_fourier(d: usize, shift: f64) -> Basis {
    let scale = 1.0 / (d as f64).sqrt();
    Basis::from_fn(d, |k, j| {
        Complex64::from_polar(scale, 2.0 * PI * j as f64 * (k as f64 + shift) / d as f64)
    })
}

/// `P(A = B + c)` summed over outcomes, indices mod `d`. Rows are Alice.
fn prob_a_minus_b(m: &CoincidenceMatrix, c: i64) -> f64 {
    let d = m.d() as i64;
    (0..d).map(|l| m.get((l + c).rem_euclid(d) as usize, l as usize)).sum()
}

/// `P(B = A + c)`.
fn prob_b_minus_a(m: &CoincidenceMatrix, c: i64) -> f64 {
    prob_a_minus_b(m, -c)
}

/// CGLMP combination for joint distributions `probs[a][b]` of Alice setting
/// `a` (rows) and Bob setting `b` (columns).
pub fn cglmp_functional(probs: &[[CoincidenceMatrix; 2]; 2]) -> f64 {
    let d = probs[0][0].d();
    let [[a1b1, a1b2], [a2b1, a2b2]] = probs;
    let mut total = 0.0;
    for k in 0..(d / 2) as i64 {
        let weight = 1.0 - 2.0 * k as f64 / (d as f64 - 1.0);
        let plus = prob_a_minus_b(a1b1, k) + prob_b_minus_a(a2b1, k + 1) + prob_a_minus_b(a2b2, k) + prob_b_minus_a(a1b2, k);
        let minus = prob_a_minus_b(a1b1, -k - 1) + prob_b_minus_a(a2b1, -k) + prob_a_minus_b(a2b2, -k - 1) + prob_b_minus_a(a1b2, -k - 1);
        total += weight * (plus - minus);
    }
    total
}

/// Functional value of the maximally entangled state under the optimal
/// settings, evaluated through the Born rule.
pub fn cglmp_quantum_value(d: usize) -> Result<f64> {
    check_dimension(d)?;
    let state = flat_spectrum(d)?;
    let alice = [cglmp_alice_basis(d, 0)?, cglmp_alice_basis(d, 1)?];
    let bob = [cglmp_bob_idler_basis(d, 0)?, cglmp_bob_idler_basis(d, 1)?];
    let p = |a: usize, b: usize| joint_probability(&state, &alice[a], &bob[b]);
    let probs = [[p(0, 0)?, p(0, 1)?], [p(1, 0)?, p(1, 1)?]];
    Ok(cglmp_functional(&probs))
}

/// Isotropic-noise value `p(q, d) S_d`.
pub fn cglmp_noisy(q: f64, d: usize) -> Result<f64> {
    let w = isotropic_weight(d, q)?;
    Ok(w.p * cglmp_quantum_value(d)?)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum CglmpBound {
    /// Not even `d = 2` violates the local bound.
    NoViolation,
    /// Largest violating dimension.
    MaxDimension { d: usize },
    /// Every dimension up to the scan limit violates.
    UnboundedWithinScan { scanned_to: usize },
}

/// Memoised quantum values `S_d`, for callers that scan many contrasts.
#[derive(Debug, Clone, Default)]
pub struct CglmpTable {
    values: Vec<Option<f64>>,
}

impl CglmpTable {
    pub fn new() -> Self {
        Self::default()
    }

    /// Fills `S_2 ..= S_max_d` in parallel.
    pub fn precompute(max_d: usize) -> Result<Self> {
        let computed = (2..=max_d).into_par_iter().map(cglmp_quantum_value).collect::<Result<Vec<_>>>()?;
        let mut values = vec![None, None];
        values.extend(computed.into_iter().map(Some));
        Ok(Self { values })
    }

    pub fn quantum_value(&mut self, d: usize) -> Result<f64> {
        if let Some(Some(v)) = self.values.get(d) {
            return Ok(*v);
        }
        let v = cglmp_quantum_value(d)?;
        if self.values.len() <= d {
            self.values.resize(d + 1, None);
        }
        self.values[d] = Some(v);
        Ok(v)
    }

    /// Scans `d = 2, 3, ...` while `p(q, d) S_d > 2`. Because `S_d < 3`, no
    /// dimension at or beyond `(q - 1)/2` can violate, which caps the scan
    /// below [`MAX_SCAN_DIMENSION`] for moderate `q`.
    pub fn dimension_bound(&mut self, q: f64) -> Result<CglmpBound> {
        isotropic_weight(2, q)?;
        let cap = if q.is_infinite() {
            MAX_SCAN_DIMENSION
        } else {
            (((q - 1.0) / 2.0).ceil() as usize).min(MAX_SCAN_DIMENSION)
        };
        let mut last = None;
        for d in 2..=cap.max(2) {
            let value = isotropic_weight(d, q)?.p * self.quantum_value(d)?;
            if value > CGLMP_LOCAL_BOUND {
                last = Some(d);
            } else {
                break;
            }
        }
        Ok(match last {
            None => CglmpBound::NoViolation,
            Some(d) if d == MAX_SCAN_DIMENSION => CglmpBound::UnboundedWithinScan { scanned_to: d },
            Some(d) => CglmpBound::MaxDimension { d },
        })
    }
}

/// Largest dimension whose noisy CGLMP value exceeds the local bound.
pub fn cglmp_dimension_bound(q: f64) -> Result<CglmpBound> {
    CglmpTable::new().dimension_bound(q)
}
