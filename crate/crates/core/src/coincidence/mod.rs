//! Coincidence matrices: Born-rule synthesis from a Schmidt spectrum,
//! the accidental-coincidence noise floor, finite-count sampling and the
//! per-MUB contrast estimator.

mod matrix;
pub mod monte_carlo;
mod record;

pub use matrix::{CoincidenceMatrix, MatrixMode, INPUT_NORMALIZATION_TOLERANCE, PROBABILITY_TOLERANCE};
pub use monte_carlo::{monte_carlo_coincidence, threshold_click_probabilities, McResult};
pub use record::{simulate_record, ExperimentRecord, SimulationParams};

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mubs::{Basis, MubSet};
use crate::noise_model::{check_contrast, NoiseParams};
use crate::states::SchmidtSpectrum;

/// Born-rule joint outcome distribution of `sum_j c_j |j>|j>` measured with
/// `signal` on the first photon and the conjugate of `idler` on the second:
///
/// ```text
/// P(a, a') = | sum_j c_j conj(v_a,j) u_a',j |^2
/// ```
///
/// The result carries basis labels (0, 0); use
/// [`CoincidenceMatrix::with_labels`] or [`joint_probability_in_set`].
pub fn joint_probability(spectrum: &SchmidtSpectrum, signal: &Basis, idler: &Basis) -> Result<CoincidenceMatrix> {
    let d = spectrum.d();
    for b in [signal, idler] {
        if b.d() != d {
            return Err(Error::DimensionMismatch { expected: d, found: b.d() });
        }
    }
    let c = spectrum.amplitudes();
    // weighted signal vectors, conj(v_a,j) c_j
    let weighted: Vec<Complex64> = signal
        .vectors()
        .flat_map(|v| v.iter().zip(c).map(|(z, &cj)| z.conj() * cj))
        .collect();
    let mut entries = Vec::with_capacity(d * d);
    for w in weighted.chunks(d) {
        for u in idler.vectors() {
            let amp: Complex64 = w.iter().zip(u).map(|(x, y)| x * y).sum();
            entries.push(amp.norm_sqr());
        }
    }
    let total: f64 = entries.iter().sum();
    if total <= 0.0 {
        return Err(Error::EmptyMatrix);
    }
    for x in &mut entries {
        *x /= total;
    }
    Ok(CoincidenceMatrix::from_parts_unchecked(d, 0, 0, MatrixMode::Probability, entries))
}

pub fn joint_probability_in_set(spectrum: &SchmidtSpectrum, set: &MubSet, signal: usize, idler: usize) -> Result<CoincidenceMatrix> {
    let basis = |i: usize| {
        set.basis(i).ok_or(Error::IncompleteMubSet {
            expected: i + 1,
            found: set.len(),
        })
    };
    Ok(joint_probability(spectrum, basis(signal)?, basis(idler)?)?.with_labels(signal, idler))
}

/// Noise parameterisation for [`add_noise`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoiseSpec {
    /// Source/channel/detector triple: cell weights
    /// `eta^2 mu (1 + mu) d P + (n + eta mu)^2`, renormalised.
    Physical(NoiseParams),
    /// Isotropic admixture that takes a flat-state `delta/d` matrix to
    /// diagonal/off-diagonal ratio `q`.
    TargetContrast(f64),
}

pub fn add_noise(matrix: &CoincidenceMatrix, noise: NoiseSpec) -> Result<CoincidenceMatrix> {
    let m = matrix.require_probability()?;
    let d = m.d();
    let (signal_weight, floor) = match noise {
        NoiseSpec::Physical(params) => {
            params.validate()?;
            (params.signal_coincidence() * d as f64, params.accidental_coincidence())
        }
        NoiseSpec::TargetContrast(q) => {
            check_contrast(q)?;
            if q.is_infinite() {
                return Ok(m);
            }
            // p P + (1 - p)/d^2 with p = (q - 1)/(q - 1 + d)
            let p = (q - 1.0) / (q - 1.0 + d as f64);
            (p, (1.0 - p) / (d * d) as f64)
        }
    };
    let mut entries: Vec<f64> = m.entries().iter().map(|x| signal_weight * x + floor).collect();
    let total: f64 = entries.iter().sum();
    if total <= 0.0 {
        return Err(Error::UndefinedContrast);
    }
    for x in &mut entries {
        *x /= total;
    }
    Ok(CoincidenceMatrix::from_parts_unchecked(d, m.signal_mub(), m.idler_mub(), MatrixMode::Probability, entries))
}

/// Multinomial draw of `total_events` over the `d^2` cells, using ChaCha
/// stream `stream` of `seed`.
pub fn sample_counts(matrix: &CoincidenceMatrix, total_events: u64, seed: u64, stream: u64) -> Result<CoincidenceMatrix> {
    let m = matrix.require_probability()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    let mut remaining_events = total_events;
    let mut remaining_mass = 1.0f64;
    let mut counts = Vec::with_capacity(m.entries().len());
    for &p in m.entries() {
        let k = if remaining_events == 0 || p <= 0.0 {
            0
        } else if remaining_mass <= p {
            remaining_events
        } else {
            let conditional = (p / remaining_mass).clamp(0.0, 1.0);
            Binomial::new(remaining_events, conditional)
                .expect("conditional probability lies in [0, 1]")
                .sample(&mut rng)
        };
        counts.push(k as f64);
        remaining_events -= k;
        remaining_mass -= p;
    }
    Ok(CoincidenceMatrix::from_parts_unchecked(
        m.d(),
        m.signal_mub(),
        m.idler_mub(),
        MatrixMode::Counts,
        counts,
    ))
}

/// Mean diagonal entry over mean off-diagonal entry. Works on counts and
/// probabilities alike; returns `+inf` when the off-diagonal mass is zero.
pub fn estimate_contrast(matrix: &CoincidenceMatrix) -> Result<f64> {
    let (diag, off) = matrix.diagonal_means();
    if diag == 0.0 && off == 0.0 {
        return Err(Error::EmptyMatrix);
    }
    if off == 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok(diag / off)
}

/// Per-MUB contrasts of the matched matrices in `record`.
pub fn per_mub_contrast(record: &ExperimentRecord) -> Result<Vec<f64>> {
    let values = record.matched_matrices().map(estimate_contrast).collect::<Result<Vec<_>>>()?;
    if values.is_empty() {
        return Err(Error::IncompleteMubSet { expected: 1, found: 0 });
    }
    Ok(values)
}

/// Arithmetic mean of the per-MUB contrasts.
pub fn average_contrast(record: &ExperimentRecord) -> Result<f64> {
    let values = per_mub_contrast(record)?;
    Ok(values.iter().sum::<f64>() / values.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mubs::{all_mubs, computational_basis, fourier_basis};
    use crate::states::{flat_spectrum, gaussian_spectrum};
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn max_dev(m: &CoincidenceMatrix, expected: impl Fn(usize, usize) -> f64) -> f64 {
        let d = m.d();
        (0..d * d).map(|i| (m.entries()[i] - expected(i / d, i % d)).abs()).fold(0.0, f64::max)
    }

    fn delta(d: usize) -> impl Fn(usize, usize) -> f64 {
        move |r, c| if r == c { 1.0 / d as f64 } else { 0.0 }
    }

    #[test]
    fn flat_state_computational() {
        let d = 4;
        let b = computational_basis(d).unwrap();
        let m = joint_probability(&flat_spectrum(d).unwrap(), &b, &b).unwrap();
        assert!(max_dev(&m, delta(d)) < 1e-15);
    }

    #[test]
    fn flat_state_is_correlated_in_every_mub() {
        for d in [2, 3, 5, 7] {
            let set = all_mubs(d).unwrap();
            let s = flat_spectrum(d).unwrap();
            for b in 0..set.len() {
                let m = joint_probability_in_set(&s, &set, b, b).unwrap();
                assert!(max_dev(&m, delta(d)) < 1e-12, "d = {d}, mub {b}");
                assert_eq!((m.signal_mub(), m.idler_mub()), (b, b));
            }
        }
    }

    #[test]
    fn cross_basis_is_uniform() {
        let m = joint_probability(&flat_spectrum(3).unwrap(), &computational_basis(3).unwrap(), &fourier_basis(3).unwrap()).unwrap();
        assert!(max_dev(&m, |_, _| 1.0 / 9.0) < 1e-15);
    }

    #[test]
    fn narrow_spectrum_shows_crosstalk() {
        let set = all_mubs(7).unwrap();
        let s = gaussian_spectrum(7, 2.0).unwrap();
        for b in 1..set.len() {
            let m = joint_probability_in_set(&s, &set, b, b).unwrap();
            let off = m.total() - m.diagonal_sum();
            assert!(off > 1e-3, "mub {b}: {off}");
        }
        let m0 = joint_probability_in_set(&s, &set, 0, 0).unwrap();
        assert!(m0.total() - m0.diagonal_sum() < 1e-15);
    }

    #[test]
    fn dimension_mismatch() {
        let err = joint_probability(&flat_spectrum(3).unwrap(), &computational_basis(4).unwrap(), &computational_basis(4).unwrap());
        assert!(matches!(err, Err(Error::DimensionMismatch { expected: 3, found: 4 })));
    }

    #[test]
    fn target_contrast_two_level_matrix() {
        let d = 5;
        let q = 17.0;
        let m = add_noise(&CoincidenceMatrix::diagonal(d, 0, 0).unwrap(), NoiseSpec::TargetContrast(q)).unwrap();
        let denom = d as f64 * (q + d as f64 - 1.0);
        assert!(max_dev(&m, |r, c| if r == c { q / denom } else { 1.0 / denom }) < 1e-15);
        assert_relative_eq!(estimate_contrast(&m).unwrap(), q, max_relative = 1e-12);
    }

    #[test]
    fn target_contrast_limits() {
        let base = CoincidenceMatrix::diagonal(4, 0, 0).unwrap();
        let uniform = add_noise(&base, NoiseSpec::TargetContrast(1.0)).unwrap();
        assert!(max_dev(&uniform, |_, _| 1.0 / 16.0) < 1e-15);
        let same = add_noise(&base, NoiseSpec::TargetContrast(f64::INFINITY)).unwrap();
        assert_eq!(same, base);
        assert!(add_noise(&base, NoiseSpec::TargetContrast(0.5)).is_err());
    }

    #[test]
    fn physical_and_target_noise_agree() {
        let params = NoiseParams::new(0.01, 1e-4, 0.5).unwrap();
        let q = crate::noise_model::quantum_contrast(&params).unwrap().get();
        let base = CoincidenceMatrix::diagonal(7, 0, 0).unwrap();
        let a = add_noise(&base, NoiseSpec::Physical(params)).unwrap();
        let b = add_noise(&base, NoiseSpec::TargetContrast(q)).unwrap();
        assert!(max_dev(&a, |r, c| b.get(r, c)) < 1e-15);
        assert_relative_eq!(estimate_contrast(&a).unwrap(), q, max_relative = 1e-12);
        let dead = NoiseParams::new(0.0, 0.0, 0.5).unwrap();
        assert!(add_noise(&base, NoiseSpec::Physical(dead)).is_err());
    }

    #[test]
    fn more_noise_means_more_off_diagonal_mass() {
        let base = CoincidenceMatrix::diagonal(5, 0, 0).unwrap();
        let mut last = 0.0;
        for n in [1e-5, 1e-4, 1e-3, 1e-2] {
            let m = add_noise(&base, NoiseSpec::Physical(NoiseParams::new(0.01, n, 0.6).unwrap())).unwrap();
            let off = m.total() - m.diagonal_sum();
            assert!(off > last);
            last = off;
        }
    }

    #[test]
    fn counts_sampling() {
        let u = CoincidenceMatrix::uniform(4, 0, 0).unwrap();
        let zero = sample_counts(&u, 0, 1, 0).unwrap();
        assert!(zero.entries().iter().all(|&x| x == 0.0));
        assert_eq!(zero.mode(), MatrixMode::Counts);

        let n = 1_000_000u64;
        let m = sample_counts(&u, n, 42, 0).unwrap();
        assert_eq!(m.total(), n as f64);
        let p = 1.0 / 16.0;
        let mean = n as f64 * p;
        let sigma = (n as f64 * p * (1.0 - p)).sqrt();
        assert!(m.entries().iter().all(|&x| (x - mean).abs() < 5.0 * sigma));

        assert_eq!(sample_counts(&u, 1000, 7, 3).unwrap(), sample_counts(&u, 1000, 7, 3).unwrap());
        assert_ne!(sample_counts(&u, 1000, 7, 3).unwrap(), sample_counts(&u, 1000, 7, 4).unwrap());
    }

    #[test]
    fn contrast_estimates() {
        let m = CoincidenceMatrix::new(3, 0, 0, MatrixMode::Counts, vec![6.0, 2.0, 2.0, 2.0, 6.0, 2.0, 2.0, 2.0, 6.0]).unwrap();
        assert_eq!(estimate_contrast(&m).unwrap(), 3.0);
        assert_relative_eq!(estimate_contrast(&CoincidenceMatrix::uniform(5, 0, 0).unwrap()).unwrap(), 1.0, max_relative = 1e-14);
        assert_eq!(estimate_contrast(&CoincidenceMatrix::diagonal(5, 0, 0).unwrap()).unwrap(), f64::INFINITY);
        let empty = CoincidenceMatrix::new(2, 0, 0, MatrixMode::Counts, vec![0.0; 4]).unwrap();
        assert!(matches!(estimate_contrast(&empty), Err(Error::EmptyMatrix)));
    }

    fn two_level(d: usize, b: usize, q: f64) -> CoincidenceMatrix {
        add_noise(&CoincidenceMatrix::diagonal(d, b, b).unwrap(), NoiseSpec::TargetContrast(q)).unwrap()
    }

    #[test]
    fn averaging_over_mubs() {
        let same = ExperimentRecord::new(3, 4, (0..4).map(|b| two_level(3, b, 9.0)).collect()).unwrap();
        assert_relative_eq!(average_contrast(&same).unwrap(), 9.0, max_relative = 1e-12);
        let mixed = ExperimentRecord::new(
            5,
            6,
            vec![two_level(5, 0, 10.0), two_level(5, 1, 6.0), two_level(5, 2, 6.0), two_level(5, 3, 6.0)],
        )
        .unwrap();
        assert_relative_eq!(average_contrast(&mixed).unwrap(), 7.0, max_relative = 1e-12);
    }

    #[test]
    fn simulated_flat_record_recovers_target() {
        for d in [3, 5, 7] {
            let record = simulate_record(&flat_spectrum(d).unwrap(), &all_mubs(d).unwrap(), Some(NoiseSpec::TargetContrast(23.0)), None, 0).unwrap();
            assert_eq!(record.matrices.len(), d + 1);
            assert!(record.has_all_mubs());
            assert!((average_contrast(&record).unwrap() - 23.0).abs() < 1e-9);
        }
    }

    #[test]
    fn computational_mub_has_the_highest_contrast_for_narrow_spectra() {
        for sigma in [1.0, 2.0, 4.0] {
            let record = simulate_record(&gaussian_spectrum(7, sigma).unwrap(), &all_mubs(7).unwrap(), Some(NoiseSpec::TargetContrast(30.0)), None, 0).unwrap();
            let qs = per_mub_contrast(&record).unwrap();
            assert!(qs[1..].iter().all(|&q| q <= qs[0]), "{qs:?}");
        }
    }

    #[test]
    fn record_validation() {
        let m3 = CoincidenceMatrix::diagonal(3, 0, 0).unwrap();
        let m4 = CoincidenceMatrix::diagonal(4, 1, 1).unwrap();
        assert!(matches!(ExperimentRecord::new(3, 4, vec![m3.clone(), m4]), Err(Error::DimensionMismatch { .. })));
        assert!(ExperimentRecord::new(3, 4, vec![m3.clone(), m3.clone()]).is_err());
        assert!(ExperimentRecord::new(3, 1, vec![m3.clone().with_labels(1, 1)]).is_err());
        assert!(ExperimentRecord::new(3, 4, vec![]).is_err());
    }

    #[test]
    fn record_json_round_trip() {
        let record = simulate_record(&flat_spectrum(3).unwrap(), &all_mubs(3).unwrap(), Some(NoiseSpec::TargetContrast(5.0)), Some(1000), 9).unwrap();
        let text = record.to_json().unwrap();
        let value: serde_json::Value = serde_json::from_str(&text).unwrap();
        for key in ["d", "mub_count", "matrices", "seed", "params"] {
            assert!(value.get(key).is_some(), "missing {key}");
        }
        assert_eq!(ExperimentRecord::from_json(&text).unwrap(), record);
    }

    proptest! {
        #[test]
        fn noise_round_trip(d in 2usize..12, q in 1.0f64..1e4) {
            let m = two_level(d, 0, q);
            prop_assert!((m.total() - 1.0).abs() < 1e-12);
            prop_assert!((estimate_contrast(&m).unwrap() - q).abs() <= 1e-9 * q);
        }
    }
}
