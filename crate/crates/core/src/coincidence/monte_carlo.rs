//! Photon-statistics Monte Carlo for the threshold-detector click model.
//!
//! Each trial is one detection window. Two modes `j` and `k` each receive a
//! geometric number of pairs; every photon survives with probability `eta`
//! and each detector additionally fires on noise with probability `n`. The
//! trial counts a matched coincidence when the signal detector of mode `j`
//! and the idler detector of mode `j` both click, and a cross coincidence
//! when the signal detector of `j` and the idler detector of `k` click.
//!
//! Trials are split into fixed-size chunks; chunk `i` draws from ChaCha
//! stream `i` of the seed, so results do not depend on the thread count.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::noise_model::NoiseParams;
use crate::states::PairStatistics;

/// Trials per independently seeded chunk.
pub const CHUNK_TRIALS: u64 = 1 << 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct McResult {
    pub trials: u64,
    pub same_mode: u64,
    pub cross_mode: u64,
}

impl McResult {
    pub fn merge(self, other: Self) -> Self {
        Self {
            trials: self.trials + other.trials,
            same_mode: self.same_mode + other.same_mode,
            cross_mode: self.cross_mode + other.cross_mode,
        }
    }

    pub fn p_same(&self) -> f64 {
        self.same_mode as f64 / self.trials as f64
    }

    pub fn p_cross(&self) -> f64 {
        self.cross_mode as f64 / self.trials as f64
    }

    /// Binomial standard error of a frequency `p` over `trials`.
    pub fn standard_error(&self, p: f64) -> f64 {
        (p * (1.0 - p) / self.trials as f64).sqrt()
    }

    pub fn ratio(&self) -> f64 {
        self.same_mode as f64 / self.cross_mode as f64
    }

    /// Delta-method standard error of `p_same / p_cross`, evaluated at the
    /// supplied probabilities and neglecting their (positive) covariance.
    pub fn ratio_standard_error(&self, p_same: f64, p_cross: f64) -> f64 {
        let rs = self.standard_error(p_same) / p_same;
        let rc = self.standard_error(p_cross) / p_cross;
        (p_same / p_cross) * (rs * rs + rc * rc).sqrt()
    }
}

/// Runs one partition of `trials` windows on ChaCha stream `stream`.
pub fn monte_carlo_partition(params: &NoiseParams, trials: u64, seed: u64, stream: u64) -> McResult {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    let pairs = PairStatistics::new(params.mu).expect("validated noise parameters");
    let p_vacuum = 1.0 / (1.0 + params.mu);
    let (eta, n) = (params.eta, params.n);

    let draw_pairs =|rng: &mut ChaCha8Rng| {
        let u: f64 = rng.random();
        if u < p_vacuum {
            0
        } else {
            pairs.quantile(u)
        }
    };
    let click = |rng: &mut ChaCha8Rng, photons: u64| {
        let mut fired = false;
        for _ in 0..photons {
            fired |= rng.random::<f64>() < eta;
        }
        let noise = rng.random::<f64>() < n;
        fired || noise
    };

    let mut out = McResult {
        trials,
        ..McResult::default()
    };
    for _ in 0..trials {
        let m_j = draw_pairs(&mut rng);
        let m_k = draw_pairs(&mut rng);
        let signal_j = click(&mut rng, m_j);
        let idler_j = click(&mut rng, m_j);
        let idler_k = click(&mut rng, m_k);
        out.same_mode += (signal_j && idler_j) as u64;
        out.cross_mode += (signal_j && idler_k) as u64;
    }
    out
}

/// Empirical matched and cross-mode coincidence frequencies over `trials`
/// windows, run in parallel chunks and merged by summing counts.
pub fn monte_carlo_coincidence(params: &NoiseParams, trials: u64, seed: u64) -> Result<McResult> {
    params.validate()?;
    let chunks = trials.div_ceil(CHUNK_TRIALS);
    let result = (0..chunks)
        .into_par_iter()
        .map(|i| {
            let len = CHUNK_TRIALS.min(trials - i * CHUNK_TRIALS);
            monte_carlo_partition(params, len, seed, i)
        })
        .reduce(McResult::default, McResult::merge);
    Ok(result)
}

/// Exact matched and cross coincidence probabilities of the threshold click
/// model, to all orders in `mu`. The analytic `eta^2 mu (1 + mu) + (n + eta mu)^2`
/// and `(n + eta mu)^2` are their leading-order forms.
pub fn threshold_click_probabilities(params: &NoiseParams) -> (f64, f64) {
    let (mu, n, eta) = (params.mu, params.n, params.eta);
    // E[x^m] for the geometric law
    let generating = |x: f64| 1.0 / (1.0 + mu * (1.0 - x));
    let keep = 1.0 - eta;
    let silent = (1.0 - n) * generating(keep);
    let both_silent = (1.0 - n) * (1.0 - n) * generating(keep * keep);
    let same = 1.0 - 2.0 * silent + both_silent;
    let cross = (1.0 - silent) * (1.0 - silent);
    (same, cross)
}
