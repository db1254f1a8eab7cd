//! Closed-form relations between the source, channel and detector noise
//! parameters and the quantum contrast `Q`, the ratio of correlated
//! coincidences to accidental coincidences.
//!
//! With `mu` the pair probability per detection window, `n` the noise click
//! probability per detector and `eta` the overall efficiency,
//!
//! ```text
//! Q = 1 + mu (1 + mu) / (n/eta + mu)^2
//! ```
//!
//! `Q` only depends on the detector through `n/eta`. The isotropic weight `p`
//! of the equivalent mixture `p |Phi><Phi| + (1-p) I/d^2` follows as
//! `p = (Q - 1) / (Q - 1 + d)`.

use serde::{Deserialize, Serialize};

use crate::error::{check_dimension, Error, Result};

/// Pair rates at or above this value leave the few-pair regime in which
/// `mu` reads as a pair probability per window.
pub const MULTI_PHOTON_THRESHOLD: f64 = 0.1;

/// Supremum of the contrast when no finite optimal pair rate exists.
pub const CONTRAST_SUPREMUM_NO_OPTIMUM: f64 = 2.0;

/// Noise parameters for one detection window.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseParams {
    /// Pair-generation probability per window.
    pub mu: f64,
    /// Noise-click probability per window and detector.
    pub n: f64,
    /// Collection and detection efficiency.
    pub eta: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Regime {
    FewPair,
    /// `mu >= 0.1`: the click model is still evaluated exactly, but higher
    /// pair numbers are no longer negligible.
    MultiPhoton,
}

impl NoiseParams {
    pub fn new(mu: f64, n: f64, eta: f64) -> Result<Self> {
        let params = Self { mu, n, eta };
        params.validate()?;
        Ok(params)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.mu >= 0.0) || !self.mu.is_finite() {
            return Err(Error::InvalidParameter {
                name: "mu",
                value: self.mu,
                reason: "must be finite and non-negative",
            });
        }
        if !(0.0..1.0).contains(&self.n) {
            return Err(Error::InvalidParameter {
                name: "n",
                value: self.n,
                reason: "must lie in [0, 1)",
            });
        }
        if !(self.eta > 0.0 && self.eta <= 1.0) {
            return Err(Error::InvalidParameter {
                name: "eta",
                value: self.eta,
                reason: "must lie in (0, 1]",
            });
        }
        Ok(())
    }

    pub fn regime(&self) -> Regime {
        if self.mu >= MULTI_PHOTON_THRESHOLD {
            Regime::MultiPhoton
        } else {
            Regime::FewPair
        }
    }

    pub fn noise_over_efficiency(&self) -> f64 {
        self.n / self.eta
    }

    /// Probability of a correlated coincidence, `eta^2 mu (1 + mu)`.
    pub fn signal_coincidence(&self) -> f64 {
        self.eta * self.eta * self.mu * (1.0 + self.mu)
    }

    /// Accidental coincidence probability per mode pair, `(n + eta mu)^2`.
    pub fn accidental_coincidence(&self) -> f64 {
        let single = self.n + self.eta * self.mu;
        single * single
    }
}

/// Ratio of coincidence probability to accidental probability; always `>= 1`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(transparent)]
pub struct QuantumContrast(#[serde(with = "crate::serde_float")] f64);

impl QuantumContrast {
    pub const INFINITE: Self = Self(f64::INFINITY);

    pub fn new(q: f64) -> Result<Self> {
        if q >= 1.0 {
            Ok(Self(q))
        } else {
            Err(Error::InvalidParameter {
                name: "q",
                value: q,
                reason: "quantum contrast must be at least 1",
            })
        }
    }

    pub fn get(self) -> f64 {
        self.0
    }

    pub fn is_infinite(self) -> bool {
        self.0.is_infinite()
    }
}

impl From<QuantumContrast> for f64 {
    fn from(q: QuantumContrast) -> f64 {
        q.0
    }
}

/// Weight `p` of the maximally entangled component in the isotropic state.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IsotropicWeight {
    pub p: f64,
    pub d: usize,
}

/// Contrast as a function of `mu` and the ratio `n/eta`.
pub fn contrast_from_ratio(mu: f64, noise_over_eta: f64) -> Result<f64> {
    if mu == 0.0 && noise_over_eta == 0.0 {
        return Err(Error::UndefinedContrast);
    }
    let denom = noise_over_eta + mu;
    Ok(1.0 + mu * (1.0 + mu) / (denom * denom))
}

pub fn quantum_contrast(params: &NoiseParams) -> Result<QuantumContrast> {
    params.validate()?;
    if params.regime() == Regime::MultiPhoton {
        log::warn!(
            "mu = {} is in the multi-photon regime; contrast evaluated with the few-pair click model",
            params.mu
        );
    }
    contrast_from_ratio(params.mu, params.noise_over_efficiency()).map(QuantumContrast)
}

/// Pair rate `n / (eta - 2n)` that maximises the contrast.
///
/// For `eta <= 2n` the contrast rises monotonically in `mu` toward 2 and
/// [`Error::NoFiniteOptimum`] carries that supremum.
pub fn optimal_pair_rate(n: f64, eta: f64) -> Result<f64> {
    check_noise_efficiency(n, eta)?;
    if eta <= 2.0 * n {
        return Err(Error::NoFiniteOptimum {
            n,
            eta,
            supremum: CONTRAST_SUPREMUM_NO_OPTIMUM,
        });
    }
    Ok(n / (eta - 2.0 * n))
}

/// Best achievable contrast `1 + eta^2 / (4 n (eta - n))`.
///
/// Between `eta/2` and `eta` the closed form exceeds 2 although no pair rate
/// reaches it; the supremum 2 is returned there instead.
pub fn max_contrast(n: f64, eta: f64) -> Result<QuantumContrast> {
    check_noise_efficiency(n, eta)?;
    if n >= eta {
        return Err(Error::InvalidRegime { n, eta });
    }
    if 2.0 * n > eta {
        return Ok(QuantumContrast(CONTRAST_SUPREMUM_NO_OPTIMUM));
    }
    Ok(QuantumContrast(1.0 + eta * eta / (4.0 * n * (eta - n))))
}

pub fn isotropic_weight(d: usize, q: f64) -> Result<IsotropicWeight> {
    check_dimension(d)?;
    check_contrast(q)?;
    let p = if q.is_infinite() {
        1.0
    } else {
        (q - 1.0) / (q - 1.0 + d as f64)
    };
    Ok(IsotropicWeight { p, d })
}

/// Inverse of [`isotropic_weight`]: `q = 1 + p d / (1 - p)`.
pub fn contrast_from_weight(d: usize, p: f64) -> Result<QuantumContrast> {
    check_dimension(d)?;
    if p == 1.0 {
        return Err(Error::InfiniteContrast);
    }
    if !(0.0..1.0).contains(&p) {
        return Err(Error::InvalidParameter {
            name: "p",
            value: p,
            reason: "must lie in [0, 1)",
        });
    }
    Ok(QuantumContrast(1.0 + p * d as f64 / (1.0 - p)))
}

fn check_noise_efficiency(n: f64, eta: f64) -> Result<()> {
    if !(n > 0.0 && n < 1.0) {
        return Err(Error::InvalidParameter {
            name: "n",
            value: n,
            reason: "must lie in (0, 1)",
        });
    }
    if !(eta > 0.0 && eta <= 1.0) {
        return Err(Error::InvalidParameter {
            name: "eta",
            value: eta,
            reason: "must lie in (0, 1]",
        });
    }
    Ok(())
}

pub(crate) fn check_contrast(q: f64) -> Result<()> {
    if q >= 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter {
            name: "q",
            value: q,
            reason: "quantum contrast must be at least 1",
        })
    }
}
