use serde::{Deserialize, Serialize};
use std::collections::BTreeSet;

use super::{add_noise, joint_probability, sample_counts, CoincidenceMatrix, NoiseSpec};
use crate::error::{Error, Result};
use crate::mubs::MubSet;
use crate::noise_model::NoiseParams;
use crate::states::SchmidtSpectrum;

/// How a simulated record was produced.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SimulationParams {
    #[serde(default, skip_serializing_if = "Option::is_none", with = "crate::serde_float::option")]
    pub sigma: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none", with = "crate::serde_float::option")]
    pub target_q: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub noise: Option<NoiseParams>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub total_events: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub config_hash: Option<String>,
}

/// One coincidence matrix per measured MUB (signal basis `b` against the
/// conjugate idler basis `b`), all sharing the dimension `d`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RecordRepr")]
pub struct ExperimentRecord {
    pub d: usize,
    /// Size of the MUB set the matrices were taken from.
    pub mub_count: usize,
    pub matrices: Vec<CoincidenceMatrix>,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub params: Option<SimulationParams>,
}

#[derive(Deserialize)]
struct RecordRepr {
    d: usize,
    mub_count: usize,
    matrices: Vec<CoincidenceMatrix>,
    #[serde(default)]
    seed: Option<u64>,
    #[serde(default)]
    params: Option<SimulationParams>,
}

impl TryFrom<RecordRepr> for ExperimentRecord {
    type Error = Error;

    fn try_from(r: RecordRepr) -> Result<Self> {
        let record = ExperimentRecord {
            d: r.d,
            mub_count: r.mub_count,
            matrices: r.matrices,
            seed: r.seed,
            params: r.params,
        };
        record.validate()?;
        Ok(record)
    }
}

impl ExperimentRecord {
    pub fn new(d: usize, mub_count: usize, matrices: Vec<CoincidenceMatrix>) -> Result<Self> {
        let record = Self {
            d,
            mub_count,
            matrices,
            seed: None,
            params: None,
        };
        record.validate()?;
        Ok(record)
    }

    pub fn validate(&self) -> Result<()> {
        if self.matrices.is_empty() {
            return Err(Error::IncompleteMubSet {
                expected: 1,
                found: 0,
            });
        }
        let mut seen = BTreeSet::new();
        for m in &self.matrices {
            if m.d() != self.d {
                return Err(Error::DimensionMismatch {
                    expected: self.d,
                    found: m.d(),
                });
            }
            if m.signal_mub() >= self.mub_count || m.idler_mub() >= self.mub_count {
                return Err(Error::Parse {
                    line: 0,
                    message: format!(
                        "matrix labelled ({}, {}) outside a set of {} MUBs",
                        m.signal_mub(),
                        m.idler_mub(),
                        self.mub_count
                    ),
                });
            }
            if !seen.insert((m.signal_mub(), m.idler_mub())) {
                return Err(Error::Parse {
                    line: 0,
                    message: format!("duplicate matrix for MUB pair ({}, {})", m.signal_mub(), m.idler_mub()),
                });
            }
        }
        if self.mub_count > self.d + 1 {
            return Err(Error::Parse {
                line: 0,
                message: format!("{} MUBs exceed the maximum d + 1 = {}", self.mub_count, self.d + 1),
            });
        }
        Ok(())
    }

    /// Matched matrix (signal and idler both in basis `b`).
    pub fn matched(&self, b: usize) -> Option<&CoincidenceMatrix> {
        self.matrices.iter().find(|m| m.signal_mub() == b && m.idler_mub() == b)
    }

    pub fn matched_matrices(&self) -> impl Iterator<Item = &CoincidenceMatrix> {
        self.matrices.iter().filter(|m| m.signal_mub() == m.idler_mub())
    }

    /// True when a matched matrix exists for every basis of a complete set.
    pub fn has_all_mubs(&self) -> bool {
        self.mub_count == self.d + 1 && (0..=self.d).all(|b| self.matched(b).is_some())
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }
}

/// Generates matched-MUB matrices for `spectrum` in every basis of `set`,
/// applies noise and optionally draws `total_events` counts per matrix.
/// Matrix `b` samples from ChaCha stream `b` of `seed`.
pub fn simulate_record(
    spectrum: &SchmidtSpectrum,
    set: &MubSet,
    noise: Option<NoiseSpec>,
    total_events: Option<u64>,
    seed: u64,
) -> Result<ExperimentRecord> {
    let matrices = set
        .bases()
        .iter()
        .enumerate()
        .map(|(b, basis)| {
            let ideal = joint_probability(spectrum, basis, basis)?.with_labels(b, b);
            let noisy = match noise {
                Some(spec) => add_noise(&ideal, spec)?,
                None => ideal,
            };
            match total_events {
                Some(events) => sample_counts(&noisy, events, seed, b as u64),
                None => Ok(noisy),
            }
        })
        .collect::<Result<Vec<_>>>()?;
    let (target_q, physical) = match noise {
        Some(NoiseSpec::TargetContrast(q)) => (Some(q), None),
        Some(NoiseSpec::Physical(p)) => (None, Some(p)),
        None => (None, None),
    };
    Ok(ExperimentRecord {
        d: set.d(),
        mub_count: set.len(),
        matrices,
        seed: Some(seed),
        params: Some(SimulationParams {
            sigma: None,
            target_q,
            noise: physical,
            total_events,
            config_hash: None,
        }),
    })
}
