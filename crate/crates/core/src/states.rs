//! Two-photon state models: Schmidt spectra over `d` modes, the isotropic
//! fidelity, and the per-mode pair-number law of the two-mode squeezed vacuum.

use serde::{Deserialize, Serialize};

use crate::error::{check_dimension, Error, Result};

const NORM_TOLERANCE: f64 = 1e-12;

/// Real, non-negative Schmidt amplitudes `c_j` with `sum c_j^2 = 1`.
///
/// Serialises as a bare JSON array of the normalised amplitudes.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(transparent)]
pub struct SchmidtSpectrum {
    amplitudes: Vec<f64>,
}

impl SchmidtSpectrum {
    /// Normalises arbitrary non-negative weights into a spectrum.
    pub fn from_amplitudes(raw: Vec<f64>) -> Result<Self> {
        check_dimension(raw.len())?;
        for &c in &raw {
            if !(c >= 0.0) || !c.is_finite() {
                return Err(Error::InvalidParameter {
                    name: "amplitude",
                    value: c,
                    reason: "Schmidt amplitudes must be finite and non-negative",
                });
            }
        }
        let norm = raw.iter().map(|c| c * c).sum::<f64>().sqrt();
        if norm == 0.0 {
            return Err(Error::InvalidParameter {
                name: "amplitude",
                value: 0.0,
                reason: "spectrum has zero norm",
            });
        }
        // already-normalised input is kept bit for bit
        if (norm - 1.0).abs() <= 1e-15 {
            return Ok(Self { amplitudes: raw });
        }
        Ok(Self {
            amplitudes: raw.into_iter().map(|c| c / norm).collect(),
        })
    }

    pub fn d(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn amplitudes(&self) -> &[f64] {
        &self.amplitudes
    }

    pub fn norm_deviation(&self) -> f64 {
        (self.amplitudes.iter().map(|c| c * c).sum::<f64>() - 1.0).abs()
    }

    pub fn is_normalized(&self) -> bool {
        self.norm_deviation() <= NORM_TOLERANCE
    }

    /// Squared overlap `|<Phi|psi>|^2 = (sum c_j)^2 / d` with the maximally
    /// entangled state.
    pub fn overlap_with_maximally_entangled(&self) -> f64 {
        let s: f64 = self.amplitudes.iter().sum();
        s * s / self.d() as f64
    }
}

impl<'de> Deserialize<'de> for SchmidtSpectrum {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let raw = Vec::<f64>::deserialize(deserializer)?;
        SchmidtSpectrum::from_amplitudes(raw).map_err(serde::de::Error::custom)
    }
}

/// Maximally entangled spectrum, `c_j = 1/sqrt(d)`.
pub fn flat_spectrum(d: usize) -> Result<SchmidtSpectrum> {
    check_dimension(d)?;
    let c = 1.0 / (d as f64).sqrt();
    Ok(SchmidtSpectrum {
        amplitudes: vec![c; d],
    })
}

/// Gaussian envelope on the amplitudes, `c_j ~ exp(-x_j^2 / (2 sigma^2))`,
/// with `x_j = j - (d-1)/2` (integers for odd `d`, half-integers for even
/// `d`). `sigma` is measured in mode-index units.
pub fn gaussian_spectrum(d: usize, sigma: f64) -> Result<SchmidtSpectrum> {
    check_dimension(d)?;
    if !(sigma > 0.0) {
        return Err(Error::InvalidParameter {
            name: "sigma",
            value: sigma,
            reason: "width must be positive",
        });
    }
    let centre = (d as f64 - 1.0) / 2.0;
    let raw = (0..d)
        .map(|j| {
            let x = j as f64 - centre;
            (-x * x / (2.0 * sigma * sigma)).exp()
        })
        .collect();
    SchmidtSpectrum::from_amplitudes(raw)
}

/// Fidelity of the isotropic state with weight `p` to the maximally
/// entangled state: `p + (1 - p)/d^2`.
pub fn isotropic_fidelity(d: usize, p: f64) -> Result<f64> {
    check_dimension(d)?;
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::InvalidParameter {
            name: "p",
            value: p,
            reason: "must lie in [0, 1]",
        });
    }
    let d2 = (d * d) as f64;
    Ok(p + (1.0 - p) / d2)
}

/// Pair-number statistics of one mode of the two-mode squeezed vacuum with
/// mean pair number `mu`: `P(m) = mu^m / (1 + mu)^(m+1)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PairStatistics {
    mu: f64,
}

impl PairStatistics {
    pub fn new(mu: f64) -> Result<Self> {
        if !(mu >= 0.0) || !mu.is_finite() {
            return Err(Error::InvalidParameter {
                name: "mu",
                value: mu,
                reason: "mean pair number must be finite and non-negative",
            });
        }
        Ok(Self { mu })
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    /// Ratio `mu / (1 + mu)` between successive pair numbers, `|f_j|^2`.
    pub fn squeezing_ratio(&self) -> f64 {
        self.mu / (1.0 + self.mu)
    }

    pub fn pmf(&self, m: u64) -> f64 {
        if self.mu == 0.0 {
            return if m == 0 { 1.0 } else { 0.0 };
        }
        let log_p = m as f64 * self.mu.ln() - (m as f64 + 1.0) * self.mu.ln_1p();
        log_p.exp()
    }

    pub fn mean(&self) -> f64 {
        self.mu
    }

    pub fn variance(&self) -> f64 {
        self.mu * (1.0 + self.mu)
    }

    /// `P(m > max_m) = (mu / (1 + mu))^(max_m + 1)`.
    pub fn tail_probability(&self, max_m: u64) -> f64 {
        self.squeezing_ratio().powf(max_m as f64 + 1.0)
    }

    /// Draws a pair number by inverting the geometric CDF at `u` in `[0, 1)`.
    pub fn quantile(&self, u: f64) -> u64 {
        if self.mu == 0.0 {
            return 0;
        }
        // P(M >= m) = r^m, so M = floor(ln(1 - u) / ln r)
        let r = self.squeezing_ratio();
        let survival = 1.0 - u;
        if survival >= 1.0 {
            return 0;
        }
        (survival.ln() / r.ln()).floor() as u64
    }
}

pub fn pair_number_pmf(mu: f64, m: u64) -> Result<f64> {
    Ok(PairStatistics::new(mu)?.pmf(m))
}
