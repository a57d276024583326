//! Monte Carlo counterparts of the analytic curves: kernel ridge regression on
//! sphere data and empirical spectra of the zonal Gram matrices.

mod krr;
mod mse;
mod spectrum;
mod target;

pub use krr::{build_kernel, krr_predict, KrrPrediction, JITTER_LADDER};
pub use mse::{empirical_mse, MseSummary, SimOptions};
pub use spectrum::{empirical_spectrum, ks_distance, SpectrumResult};
pub use target::{sample_target, TargetFunction, DEFAULT_NORM_SAMPLES};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// What a derived random stream is used for.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub(crate) enum Stream {
    Train = 1,
    Test = 2,
    Noise = 3,
    Weights = 4,
    Normalization = 5,
}

/// Counter-based stream for `(seed, m, trial, purpose)`. Streams are disjoint
/// for `trial < 2^20` and `m < 2^40`, so trials can run in any order.
pub(crate) fn stream_rng(seed: u64, m: usize, trial: usize, purpose: Stream) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(((m as u64) << 24) | ((trial as u64 & 0xF_FFFF) << 4) | purpose as u64);
    rng
}
