use serde::{Deserialize, Serialize};

use super::cglmp::{cglmp_quantum_value, CGLMP_LOCAL_BOUND};
use super::fidelity::{
    fidelity_all_mub_from_contrast, fidelity_bound_two_mub, fidelity_exact_from_data, k_max_all_mub, k_max_two_mub,
    schmidt_number_from_fidelity,
};
use super::steering::{steering_functional, steering_test_from_data, SteeringVerdict};
use crate::coincidence::{per_mub_contrast, ExperimentRecord};
use crate::error::{Error, Result};
use crate::noise_model::isotropic_weight;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CglmpSummary {
    pub quantum_value: f64,
    pub noisy_value: f64,
    pub violated: bool,
    /// `noisy_value - 2`.
    pub margin: f64,
}

/// Everything the certifier derives from one experiment record.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CertificationReport {
    pub d: usize,
    pub mub_count: usize,
    #[serde(with = "crate::serde_float::vec")]
    pub per_mub_q: Vec<f64>,
    #[serde(with = "crate::serde_float")]
    pub average_q: f64,
    /// Two-MUB fidelity bound from `average_q`.
    pub fidelity_lower_bound: f64,
    /// All-MUB fidelity predicted from `average_q` for an isotropic state.
    pub fidelity_all_mub_predicted: f64,
    /// `(S - 1)/d` from the matched matrices; present only with all `d + 1` MUBs.
    pub fidelity_exact: Option<f64>,
    pub k_two_mub: usize,
    pub k_all_mub_predicted: usize,
    pub k_all_mub: Option<usize>,
    /// Schmidt number certified by the data: the exact all-MUB value when
    /// available, the two-MUB bound otherwise.
    pub certified_k: usize,
    /// Entropic test on the matrices of MUBs 0 and 1.
    pub steering: Option<SteeringVerdict>,
    /// Contrast form of the steering functional; negative means violation.
    pub steering_functional: f64,
    pub cglmp: CglmpSummary,
    pub methods: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub config_hash: Option<String>,
}

/// Certifies a record. Contrast-based quantities treat the average contrast
/// as that of an isotropic state; an estimate below 1 (possible for noisy
/// counts) is evaluated as 1.
pub fn certify_record(record: &ExperimentRecord) -> Result<CertificationReport> {
    record.validate()?;
    let d = record.d;
    let per_mub_q = per_mub_contrast(record)?;
    let average_q = per_mub_q.iter().sum::<f64>() / per_mub_q.len() as f64;
    let q = if average_q.is_nan() {
        return Err(Error::UndefinedContrast);
    } else {
        average_q.max(1.0)
    };

    let mut methods = vec!["two_mub_bound".to_string()];
    let fidelity_lower_bound = fidelity_bound_two_mub(q, d);
    let k_two_mub = k_max_two_mub(q, d);

    let fidelity_exact = if record.has_all_mubs() {
        methods.push("all_mub_exact".into());
        Some(fidelity_exact_from_data(record)?)
    } else {
        None
    };
    let k_all_mub = fidelity_exact.map(|f| schmidt_number_from_fidelity(f, d));

    let steering = match (record.matched(0), record.matched(1)) {
        (Some(a), Some(b)) => {
            methods.push("entropic_steering".into());
            Some(steering_test_from_data(a, b, d)?)
        }
        _ => None,
    };

    let quantum_value = cglmp_quantum_value(d)?;
    let noisy_value = isotropic_weight(d, q)?.p * quantum_value;
    methods.push("cglmp_isotropic".into());

    Ok(CertificationReport {
        d,
        mub_count: record.mub_count,
        per_mub_q,
        average_q,
        fidelity_lower_bound,
        fidelity_all_mub_predicted: fidelity_all_mub_from_contrast(q, d),
        fidelity_exact,
        k_two_mub,
        k_all_mub_predicted: k_max_all_mub(q, d),
        k_all_mub,
        certified_k: k_all_mub.unwrap_or(k_two_mub),
        steering,
        steering_functional: steering_functional(q, d)?,
        cglmp: CglmpSummary {
            quantum_value,
            noisy_value,
            violated: noisy_value > CGLMP_LOCAL_BOUND,
            margin: noisy_value - CGLMP_LOCAL_BOUND,
        },
        methods,
        config_hash: record.params.as_ref().and_then(|p| p.config_hash.clone()),
    })
}
