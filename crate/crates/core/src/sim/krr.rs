use faer::linalg::solvers::Solve;
use faer::{Mat, MatRef, Side};

use crate::curves::SpectralProfile;
use crate::error::{Error, Result};
use crate::harmonics::{zonal_gram, Dataset};

/// Diagonal shifts, relative to `trace / m`, tried in order for ridgeless solves.
pub const JITTER_LADDER: [f64; 3] = [1e-12, 1e-10, 1e-8];

/// Dot-product kernel `h(t) = Σ_k ĥ_k² P_k(t)` evaluated between two datasets,
/// patch averaged on the patched geometry.
pub fn build_kernel(left: &Dataset, right: &Dataset, profile: &SpectralProfile) -> Result<Mat<f64>> {
    let mut weights = Vec::with_capacity(profile.k_max() + 1);
    weights.push(0.0);
    weights.extend_from_slice(profile.h2());
    zonal_gram(left, right, &weights)
}

#[derive(Debug, Clone, PartialEq)]
pub struct KrrPrediction {
    pub predictions: Vec<f64>,
    /// Absolute diagonal shift added on top of `λ`; zero when `λ > 0`.
    pub jitter: f64,
}

/// `K_cross (K_train + λI)^{-1} y` via Cholesky. With `λ = 0` the smallest
/// rung of [`JITTER_LADDER`] that factorizes is used.
pub fn krr_predict(k_train: MatRef<'_, f64>, y_train: &[f64], lambda: f64, k_cross: MatRef<'_, f64>) -> Result<KrrPrediction> {
    let m = k_train.nrows();
    if m == 0 || k_train.ncols() != m {
        return Err(Error::invalid(format!("training kernel must be square and nonempty, got {}x{}", m, k_train.ncols())));
    }
    if y_train.len() != m {
        return Err(Error::invalid(format!("{} labels for {m} training points", y_train.len())));
    }
    if k_cross.ncols() != m {
        return Err(Error::invalid(format!("cross kernel has {} columns, expected {m}", k_cross.ncols())));
    }
    if !(lambda >= 0.0 && lambda.is_finite()) {
        return Err(Error::invalid(format!("ridge must be finite and >= 0, got {lambda}")));
    }

    let shifts: Vec<f64> = if lambda > 0.0 {
        vec![0.0]
    } else {
        let scale = (0..m).map(|i| k_train[(i, i)]).sum::<f64>() / m as f64;
        JITTER_LADDER.iter().map(|j| j * scale).collect()
    };

    let rhs = Mat::from_fn(m, 1, |i, _| y_train[i]);
    for &jitter in &shifts {
        let shift = lambda + jitter;
        let shifted = Mat::from_fn(m, m, |i, j| if i == j { k_train[(i, j)] + shift } else { k_train[(i, j)] });
        let Ok(llt) = shifted.llt(Side::Lower) else {
            continue;
        };
        let beta = llt.solve(&rhs);
        let fitted = k_cross * &beta;
        let predictions: Vec<f64> = (0..fitted.nrows()).map(|i| fitted[(i, 0)]).collect();
        if predictions.iter().any(|v| !v.is_finite()) {
            continue;
        }
        return Ok(KrrPrediction { predictions, jitter });
    }
    Err(Error::Factorization { jitters: shifts })
}
