//! Mutually unbiased bases.
//!
//! For prime `d` the full set of `d + 1` bases is built as the computational
//! basis followed by the quadratic-phase bases
//!
//! ```text
//! v(b, a)_j = w^(b j^2 + a j) / sqrt(d),   w = exp(2 pi i / d),   b = 0 .. d-1
//! ```
//!
//! so that basis 1 (`b = 0`) is the Fourier basis. `d = 2` uses the Pauli
//! X/Y eigenbases instead. Other dimensions only get the computational and
//! Fourier pair.
//!
//! Idler measurements use complex-conjugated basis vectors; with that
//! convention every matched MUB shows perfect correlations on the maximally
//! entangled state and
//!
//! ```text
//! sum_b sum_a |a_b><a_b| (x) |a_b*><a_b*| = d |Phi><Phi| + I
//! ```
//!
//! holds for a complete set.

use num_complex::Complex64;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use std::f64::consts::PI;

use crate::error::{check_dimension, Error, Result};

/// Tolerance for unitarity and unbiasedness checks.
pub const MUB_TOLERANCE: f64 = 1e-10;

/// Orthonormal basis of `C^d`; row `a` holds the components of vector `a`.
#[derive(Debug, Clone, PartialEq)]
pub struct Basis {
    d: usize,
    vectors: Vec<Complex64>,
}

impl Basis {
    /// Builds a basis from row vectors without checking orthonormality.
    pub fn from_rows(rows: Vec<Vec<Complex64>>) -> Result<Self> {
        let d = rows.len();
        check_dimension(d)?;
        let mut vectors = Vec::with_capacity(d * d);
        for row in rows {
            if row.len() != d {
                return Err(Error::DimensionMismatch {
                    expected: d,
                    found: row.len(),
                });
            }
            vectors.extend(row);
        }
        Ok(Self { d, vectors })
    }

    pub(crate) fn from_fn(d: usize, f: impl Fn(usize, usize) -> Complex64) -> Self {
        let vectors = (0..d).flat_map(|a| (0..d).map(move |j| (a, j))).map(|(a, j)| f(a, j)).collect();
        Self { d, vectors }
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn vector(&self, a: usize) -> &[Complex64] {
        &self.vectors[a * self.d..(a + 1) * self.d]
    }

    pub fn vectors(&self) -> impl Iterator<Item = &[Complex64]> {
        self.vectors.chunks(self.d)
    }

    pub fn conjugate(&self) -> Self {
        Self {
            d: self.d,
            vectors: self.vectors.iter().map(|z| z.conj()).collect(),
        }
    }

    pub fn scale_vector(&mut self, a: usize, factor: f64) {
        let d = self.d;
        for z in &mut self.vectors[a * d..(a + 1) * d] {
            *z *= factor;
        }
    }

    /// Largest deviation of the Gram matrix from the identity.
    pub fn unitarity_deviation(&self) -> f64 {
        let mut worst = 0.0f64;
        for a in 0..self.d {
            for b in a..self.d {
                let ip = inner(self.vector(a), self.vector(b));
                let target = if a == b { 1.0 } else { 0.0 };
                worst = worst.max((ip - target).norm());
            }
        }
        worst
    }
}

/// `<u|v>`
pub fn inner(u: &[Complex64], v: &[Complex64]) -> Complex64 {
    u.iter().zip(v).map(|(a, b)| a.conj() * b).sum()
}

impl Serialize for Basis {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let rows: Vec<Vec<[f64; 2]>> = self
            .vectors()
            .map(|row| row.iter().map(|z| [z.re, z.im]).collect())
            .collect();
        rows.serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for Basis {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let rows = Vec::<Vec<[f64; 2]>>::deserialize(deserializer)?;
        let rows = rows
            .into_iter()
            .map(|row| row.into_iter().map(|[re, im]| Complex64::new(re, im)).collect())
            .collect();
        Basis::from_rows(rows).map_err(serde::de::Error::custom)
    }
}

pub fn computational_basis(d: usize) -> Result<Basis> {
    check_dimension(d)?;
    Ok(Basis::from_fn(d, |a, j| {
        if a == j {
            Complex64::new(1.0, 0.0)
        } else {
            Complex64::new(0.0, 0.0)
        }
    }))
}

/// Entries `w^(a j) / sqrt(d)`.
pub fn fourier_basis(d: usize) -> Result<Basis> {
    check_dimension(d)?;
    Ok(quadratic_phase_basis(d, 0))
}

fn root_of_unity_power(d: usize, exponent: usize) -> Complex64 {
    Complex64::from_polar(1.0, 2.0 * PI * (exponent % d) as f64 / d as f64)
}

fn quadratic_phase_basis(d: usize, b: usize) -> Basis {
    let scale = 1.0 / (d as f64).sqrt();
    Basis::from_fn(d, |a, j| root_of_unity_power(d, b * j * j + a * j) * scale)
}

fn pauli_y_basis() -> Basis {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    Basis::from_fn(2, |a, j| match (a, j) {
        (_, 0) => Complex64::new(s, 0.0),
        (0, _) => Complex64::new(0.0, s),
        _ => Complex64::new(0.0, -s),
    })
}

pub fn is_prime(d: usize) -> bool {
    if d < 2 {
        return false;
    }
    let mut f = 2;
    while f * f <= d {
        if d.is_multiple_of(f) {
            return false;
        }
        f += 1;
    }
    true
}

/// Which MUB constructions a dimension admits.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MubCapability {
    /// Prime `d`: all `d + 1` bases.
    Complete,
    /// Any other `d`: computational and Fourier only.
    TwoBasisOnly,
}

pub fn mub_capability(d: usize) -> MubCapability {
    if is_prime(d) {
        MubCapability::Complete
    } else {
        MubCapability::TwoBasisOnly
    }
}

/// Ordered collection of bases; index 0 is computational, index 1 Fourier.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MubSet {
    d: usize,
    bases: Vec<Basis>,
}

impl MubSet {
    pub fn new(d: usize, bases: Vec<Basis>) -> Result<Self> {
        check_dimension(d)?;
        for b in &bases {
            if b.d() != d {
                return Err(Error::DimensionMismatch {
                    expected: d,
                    found: b.d(),
                });
            }
        }
        Ok(Self { d, bases })
    }

    /// Computational and Fourier bases; available in every dimension.
    pub fn two_basis(d: usize) -> Result<Self> {
        Ok(Self {
            d,
            bases: vec![computational_basis(d)?, fourier_basis(d)?],
        })
    }

    /// Complete set for prime `d`, otherwise the two-basis subset.
    pub fn best_available(d: usize) -> Result<Self> {
        match mub_capability(d) {
            MubCapability::Complete => all_mubs(d),
            MubCapability::TwoBasisOnly => Self::two_basis(d),
        }
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn len(&self) -> usize {
        self.bases.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bases.is_empty()
    }

    pub fn bases(&self) -> &[Basis] {
        &self.bases
    }

    pub fn basis(&self, index: usize) -> Option<&Basis> {
        self.bases.get(index)
    }

    pub fn is_complete(&self) -> bool {
        self.bases.len() == self.d + 1
    }
}

/// All `d + 1` mutually unbiased bases for prime `d`.
pub fn all_mubs(d: usize) -> Result<MubSet> {
    check_dimension(d)?;
    if !is_prime(d) {
        return Err(Error::UnsupportedDimension(d));
    }
    let mut bases = vec![computational_basis(d)?];
    if d == 2 {
        bases.push(fourier_basis(2)?);
        bases.push(pauli_y_basis());
    } else {
        bases.extend((0..d).map(|b| quadratic_phase_basis(d, b)));
    }
    Ok(MubSet { d, bases })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UnbiasednessReport {
    pub unbiased: bool,
    pub max_deviation: f64,
}

/// Checks unitarity of each basis and `|<a|b>|^2 = 1/d` across bases.
pub fn verify_unbiasedness(set: &MubSet) -> UnbiasednessReport {
    let target = 1.0 / set.d as f64;
    let mut worst = set
        .bases
        .iter()
        .map(Basis::unitarity_deviation)
        .fold(0.0f64, f64::max);
    for (i, x) in set.bases.iter().enumerate() {
        for y in &set.bases[i + 1..] {
            for u in x.vectors() {
                for v in y.vectors() {
                    worst = worst.max((inner(u, v).norm_sqr() - target).abs());
                }
            }
        }
    }
    UnbiasednessReport {
        unbiased: worst <= MUB_TOLERANCE,
        max_deviation: worst,
    }
}

/// Maximum elementwise deviation of `sum_b sum_a |a_b><a_b| (x) |a_b*><a_b*|`
/// from `d |Phi><Phi| + I`, with `|Phi> = sum_j |jj> / sqrt(d)`.
pub fn mub_projector_sum_check(set: &MubSet) -> Result<f64> {
    let d = set.d;
    if !set.is_complete() {
        return Err(Error::IncompleteMubSet {
            expected: d + 1,
            found: set.len(),
        });
    }
    let dim = d * d;
    let mut sum = vec![Complex64::new(0.0, 0.0); dim * dim];
    let mut product = vec![Complex64::new(0.0, 0.0); dim];
    for basis in &set.bases {
        for v in basis.vectors() {
            // |v> (x) |v*>
            for (j, vj) in v.iter().enumerate() {
                for (k, vk) in v.iter().enumerate() {
                    product[j * d + k] = vj * vk.conj();
                }
            }
            for (r, pr) in product.iter().enumerate() {
                let row = &mut sum[r * dim..(r + 1) * dim];
                for (entry, pc) in row.iter_mut().zip(&product) {
                    *entry += pr * pc.conj();
                }
            }
        }
    }
    // d |Phi><Phi| has entry 1 between |jj> and |kk>
    let mut worst = 0.0f64;
    for r in 0..dim {
        for c in 0..dim {
            let mut target = 0.0;
            if r % (d + 1) == 0 && c % (d + 1) == 0 {
                target += 1.0;
            }
            if r == c {
                target += 1.0;
            }
            worst = worst.max((sum[r * dim + c] - target).norm());
        }
    }
    Ok(worst)
}
