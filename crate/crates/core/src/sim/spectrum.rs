use faer::Side;

use crate::error::{Error, Result};
use crate::harmonics::{harmonic_dim, legendre_gram, Dataset, Geometry};
use crate::rmt::MarchenkoPastur;

/// Eigenvalues below this fraction of the largest are treated as exact zeros.
const NULL_SPACE_TOL: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq)]
pub struct SpectrumResult {
    /// Eigenvalues of the `m x m` Gram `Y_r Y_rᵀ / N_r`, ascending.
    pub eigenvalues: Vec<f64>,
    /// `α = N_r / m`, the ratio of the reference law.
    pub ratio: f64,
    /// Distance of the covariance spectrum from `μ_α`.
    pub ks: f64,
    pub degree: usize,
    pub harmonic_dim: u64,
    pub geometry: Geometry,
}

/// Kolmogorov–Smirnov distance between the empirical distribution of `sorted`
/// and the Marchenko–Pastur law, atom included.
///
/// The supremum is attained at a sample point or at the atom, from either side,
/// so both one-sided limits are compared there.
pub fn ks_distance(sorted: &[f64], mp: &MarchenkoPastur) -> Result<f64> {
    if sorted.is_empty() {
        return Err(Error::invalid("no eigenvalues"));
    }
    if sorted.windows(2).any(|w| w[0] > w[1]) || sorted.iter().any(|v| v.is_nan()) {
        return Err(Error::invalid("eigenvalues must be sorted ascending"));
    }
    let n = sorted.len() as f64;
    let mut best: f64 = 0.0;
    let mut visit = |below: usize, upto: usize, t: f64| -> Result<()> {
        let gap_at = ((upto as f64 / n) - mp.cdf(t)?).abs();
        let gap_left = ((below as f64 / n) - mp.cdf_left(t)?).abs();
        best = best.max(gap_at).max(gap_left);
        Ok(())
    };

    let zeros_before = sorted.partition_point(|&v| v < 0.0);
    let zeros_upto = sorted.partition_point(|&v| v <= 0.0);
    visit(zeros_before, zeros_upto, 0.0)?;

    let mut i = 0;
    while i < sorted.len() {
        let v = sorted[i];
        let mut j = i;
        while j < sorted.len() && sorted[j] == v {
            j += 1;
        }
        if v != 0.0 {
            visit(i, j, v)?;
        }
        i = j;
    }
    Ok(best.clamp(0.0, 1.0))
}

impl SpectrumResult {
    /// Spectrum of the `N_r x N_r` covariance `Y_rᵀ Y_r / m`, ascending. It
    /// shares the nonzero eigenvalues of the Gram up to the factor `N_r / m`;
    /// the remaining `N_r - rank` entries are zero.
    pub fn covariance_eigenvalues(&self) -> Vec<f64> {
        covariance_spectrum(&self.eigenvalues, self.harmonic_dim as usize)
    }
}

fn covariance_spectrum(gram: &[f64], n_r: usize) -> Vec<f64> {
    let m = gram.len();
    let scale = n_r as f64 / m as f64;
    let mut out = vec![0.0; n_r.saturating_sub(m)];
    // the m - N_r smallest Gram eigenvalues are the null space when N_r < m
    out.extend(gram[m.saturating_sub(n_r)..].iter().map(|v| v * scale));
    out
}

/// Spectrum of the degree-`r` zonal Gram matrix `P_r(X Xᵀ) = Y_r Y_rᵀ / N_r`.
/// The fit is scored on the covariance `Y_rᵀ Y_r / m` against Marchenko–Pastur
/// with `α = N_r / m`.
pub fn empirical_spectrum(data: &Dataset, r: usize) -> Result<SpectrumResult> {
    let m = data.len();
    if m < 2 {
        return Err(Error::invalid("spectrum needs at least two points"));
    }
    let geometry = data.geometry();
    let n_r = harmonic_dim(geometry, r)?;
    let gram = legendre_gram(data, data, r)?;
    let mut eigenvalues = gram
        .self_adjoint_eigenvalues(Side::Lower)
        .map_err(|e| Error::Eigen(format!("{e:?}")))?;
    eigenvalues.sort_by(f64::total_cmp);
    let scale = eigenvalues.iter().fold(0.0f64, |acc, v| acc.max(v.abs()));
    for v in eigenvalues.iter_mut() {
        if v.abs() <= NULL_SPACE_TOL * scale {
            *v = 0.0;
        }
    }
    eigenvalues.sort_by(f64::total_cmp);
    let ratio = n_r as f64 / m as f64;
    let mp = MarchenkoPastur::new(ratio)?;
    let ks = ks_distance(&covariance_spectrum(&eigenvalues, n_r as usize), &mp)?;
    Ok(SpectrumResult {
        eigenvalues,
        ratio,
        ks,
        degree: r,
        harmonic_dim: n_r,
        geometry,
    })
}
