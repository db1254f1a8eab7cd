//! Entanglement-dimensionality certification from measured contrast:
//! fidelity witnesses, steering and CGLMP Bell tests.

pub mod cglmp;
pub mod fidelity;
mod report;
pub mod steering;

pub use cglmp::{cglmp_dimension_bound, cglmp_noisy, cglmp_quantum_value, CglmpBound, CglmpTable};
pub use fidelity::{
    fidelity_all_mub_from_contrast, fidelity_bound_two_mub, fidelity_exact_from_data, k_max_all_mub, k_max_two_mub,
    optimal_operating_point, required_contrast_all_mub, required_contrast_two_mub, schmidt_number_from_fidelity,
    OptimalOperatingPoint,
};
pub use report::{certify_record, CertificationReport, CglmpSummary};
pub use steering::{conditional_entropy, steering_functional, steering_test_from_data, steering_threshold, SteeringVerdict};

/// Largest integer strictly below `x`. A value within `1e-9 max(1, |x|)`
/// of an integer counts as landing on it, so boundary cases never certify.
pub(crate) fn largest_integer_below(x: f64) -> i64 {
    let tol = 1e-9 * x.abs().max(1.0);
    (x - tol).ceil() as i64 - 1
}

#[cfg(test)]
mod tests {
    use super::largest_integer_below;

    #[test]
    fn strict_floor() {
        assert_eq!(largest_integer_below(3.0), 2);
        assert_eq!(largest_integer_below(3.0 + 1e-12), 2);
        assert_eq!(largest_integer_below(3.0 + 1e-6), 3);
        assert_eq!(largest_integer_below(2.5), 2);
        assert_eq!(largest_integer_below(0.2), 0);
        assert_eq!(largest_integer_below(-0.5), -1);
    }
}
