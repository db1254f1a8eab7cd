//! Quantum-contrast modelling and entanglement-dimensionality certification
//! for spatially entangled photon pairs.
//!
//! The contrast `Q` (matched coincidences over accidentals) is computed from
//! source brightness, channel noise and detector efficiency, turned into
//! isotropic-state coincidence matrices in mutually unbiased bases, and
//! certified as a fidelity, Schmidt-number, steering or CGLMP witness.
//!
//! ```
//! use qcontrast::certify::{certify_record, required_contrast_two_mub};
//! use qcontrast::coincidence::{simulate_record, NoiseSpec};
//! use qcontrast::mubs::all_mubs;
//! use qcontrast::states::flat_spectrum;
//!
//! let needed = required_contrast_two_mub(5, 11)?;
//! let record = simulate_record(&flat_spectrum(7)?, &all_mubs(7)?, Some(NoiseSpec::TargetContrast(40.0)), None, 0)?;
//! let report = certify_record(&record)?;
//! assert_eq!(report.certified_k, 6);
//! println!("Q needed: {needed:.1}, certified k = {}", report.certified_k);
//! # Ok::<(), qcontrast::Error>(())
//! ```

pub mod certify;
pub mod cli;
pub mod coincidence;
pub mod error;
pub mod mubs;
pub mod noise_model;
mod serde_float;
pub mod states;

pub use error::{Error, Result};
pub use noise_model::{NoiseParams, QuantumContrast};
