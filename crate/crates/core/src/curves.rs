//! Analytic bias, variance and the glued sample-wise learning curve.

use crate::error::{Error, Result};
use crate::harmonics::{harmonic_dim, harmonic_dim_upto, Geometry};
use crate::rmt::{chi_b, chi_v, effective_regime};

/// Kernel eigencoefficients `ĥ_k²` and target powers `F̂_k²` for degrees
/// `k = 1..=K_max` (index 0 is degree 1), plus ridge and label noise.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralProfile {
    h2: Vec<f64>,
    f2: Vec<f64>,
    lambda: f64,
    noise: f64,
}

fn nonneg(name: &str, v: f64) -> Result<()> {
    if v >= 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::invalid(format!("{name} must be finite and >= 0, got {v}")))
    }
}

impl SpectralProfile {
    pub fn new(h2: Vec<f64>, f2: Vec<f64>, lambda: f64, noise: f64) -> Result<Self> {
        if h2.is_empty() {
            return Err(Error::invalid("profile needs at least one degree"));
        }
        if h2.len() != f2.len() {
            return Err(Error::invalid(format!(
                "kernel has {} degrees but target has {}",
                h2.len(),
                f2.len()
            )));
        }
        for (k, (&h, &f)) in h2.iter().zip(&f2).enumerate() {
            nonneg(&format!("h2[{}]", k + 1), h)?;
            nonneg(&format!("F2[{}]", k + 1), f)?;
        }
        nonneg("lambda", lambda)?;
        nonneg("noise", noise)?;
        Ok(SpectralProfile { h2, f2, lambda, noise })
    }

    /// `ĥ_k² = gap^{-(k-1)}`, `F̂_k² = k^{-exponent}`.
    pub fn gap_power_law(gap: f64, exponent: f64, k_max: usize, lambda: f64, noise: f64) -> Result<Self> {
        if !(gap > 0.0 && gap.is_finite()) {
            return Err(Error::invalid(format!("spectral gap must be positive, got {gap}")));
        }
        let h2 = (1..=k_max).map(|k| gap.powi(-(k as i32 - 1))).collect();
        let f2 = (1..=k_max).map(|k| (k as f64).powf(-exponent)).collect();
        SpectralProfile::new(h2, f2, lambda, noise)
    }

    pub fn h2(&self) -> &[f64] {
        &self.h2
    }

    pub fn f2(&self) -> &[f64] {
        &self.f2
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn noise(&self) -> f64 {
        self.noise
    }

    pub fn k_max(&self) -> usize {
        self.h2.len()
    }

    /// `ĥ²_{>r}`.
    pub fn h2_tail(&self, r: usize) -> f64 {
        self.h2.iter().skip(r).sum()
    }

    /// `F̂²_{>r}`.
    pub fn f2_tail(&self, r: usize) -> f64 {
        self.f2.iter().skip(r).sum()
    }

    pub(crate) fn check_degree(&self, r: usize) -> Result<()> {
        if r < 1 || r > self.k_max() {
            return Err(Error::invalid(format!("degree {r} outside 1..={}", self.k_max())));
        }
        Ok(())
    }

    pub fn with_lambda(mut self, lambda: f64) -> Result<Self> {
        nonneg("lambda", lambda)?;
        self.lambda = lambda;
        Ok(self)
    }

    pub fn with_noise(mut self, noise: f64) -> Result<Self> {
        nonneg("noise", noise)?;
        self.noise = noise;
        Ok(self)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErrTerms {
    pub bias: f64,
    pub variance: f64,
    pub total: f64,
}

fn check_alpha(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha.is_finite() {
        Ok(())
    } else {
        Err(Error::invalid(format!("aspect ratio must be positive and finite, got {alpha}")))
    }
}

/// `B_r(α) = χ_B(α, ξ_r) F̂_r² + F̂²_{>r}`.
pub fn bias_r(profile: &SpectralProfile, r: usize, alpha: f64) -> Result<f64> {
    check_alpha(alpha)?;
    let reg = effective_regime(profile, r, alpha)?;
    Ok(chi_b(alpha, reg.xi)? * profile.f2[r - 1] + profile.f2_tail(r))
}

/// `V_r(α) = χ_V(α, ξ_r) (F̂²_{>r} + σ²)`.
///
/// Fails with [`Error::SingularRegime`] when the interpolating top degree hits
/// `α = 1` with something left to fit, where the variance is infinite.
pub fn variance_r(profile: &SpectralProfile, r: usize, alpha: f64) -> Result<f64> {
    check_alpha(alpha)?;
    let reg = effective_regime(profile, r, alpha)?;
    let multiplier = profile.f2_tail(r) + profile.noise;
    if multiplier == 0.0 {
        return Ok(0.0);
    }
    let chi = chi_v(alpha, reg.xi)?;
    if !chi.is_finite() {
        return Err(Error::SingularRegime { r });
    }
    Ok(chi * multiplier)
}

/// Test error at the degree-`r` scaling, `B_r(α) + V_r(α)`. On the patched
/// geometry `α` is read against `p N(d0, r)`.
pub fn err_r(profile: &SpectralProfile, r: usize, alpha: f64) -> Result<ErrTerms> {
    let bias = bias_r(profile, r, alpha)?;
    let variance = variance_r(profile, r, alpha)?;
    Ok(ErrTerms {
        bias,
        variance,
        total: bias + variance,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurvePoint {
    pub m: usize,
    pub bias: f64,
    pub variance: f64,
    pub total: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LearningCurve {
    pub points: Vec<CurvePoint>,
    pub geometry: Geometry,
    pub profile: SpectralProfile,
}

impl LearningCurve {
    pub fn totals(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.total).collect()
    }

    pub fn sample_counts(&self) -> Vec<usize> {
        self.points.iter().map(|p| p.m).collect()
    }
}

fn curve_point(profile: &SpectralProfile, dims: &[(f64, f64)], m: usize) -> Result<CurvePoint> {
    let mf = m as f64;
    let mut bias = 0.0;
    let mut variance = 0.0;
    for (idx, &(n_r, n_upto)) in dims.iter().enumerate() {
        let r = idx + 1;
        let wrap = |e: Error| Error::CurveTerm {
            r,
            m,
            source: Box::new(e),
        };
        // B_r - (r-1) F̂_r² summed over r telescopes: every tail F̂²_{>r} is
        // cancelled by the over-count, leaving Σ_r χ_B(α_r, ξ_r) F̂_r².
        let alpha_b = n_r / mf;
        let reg = effective_regime(profile, r, alpha_b).map_err(wrap)?;
        bias += chi_b(alpha_b, reg.xi).map_err(wrap)? * profile.f2[idx];
        variance += variance_r(profile, r, n_upto / mf).map_err(wrap)?;
    }
    Ok(CurvePoint {
        m,
        bias,
        variance,
        total: bias + variance,
    })
}

/// Glued learning curve
/// `LC(m) = Σ_r [B_r(N_r/m) - (r-1) F̂_r²] + V_r(N_{≤r}/m)` for `r = 1..=K_max`.
///
/// Beyond `N(d, ≤K_max)` the curve plateaus at the (zero) untruncated tail.
pub fn learning_curve(profile: &SpectralProfile, geometry: Geometry, m_grid: &[usize]) -> Result<LearningCurve> {
    if m_grid.is_empty() {
        return Err(Error::invalid("m grid is empty"));
    }
    if m_grid[0] < 1 || m_grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::invalid("m grid must be strictly increasing and start at >= 1"));
    }
    let dims = (1..=profile.k_max())
        .map(|r| Ok((harmonic_dim(geometry, r)? as f64, harmonic_dim_upto(geometry, r)? as f64)))
        .collect::<Result<Vec<_>>>()?;
    let points = m_grid
        .iter()
        .map(|&m| curve_point(profile, &dims, m))
        .collect::<Result<Vec<_>>>()?;
    Ok(LearningCurve {
        points,
        geometry,
        profile: profile.clone(),
    })
}

/// Up to `count` log-spaced integers in `[min, max]`, rounded and deduplicated.
pub fn log_spaced_grid(min: usize, max: usize, count: usize) -> Result<Vec<usize>> {
    if min < 1 || max < min || count < 1 {
        return Err(Error::invalid(format!("bad log grid: min {min}, max {max}, count {count}")));
    }
    if count == 1 || min == max {
        return Ok(vec![min]);
    }
    let (lo, hi) = ((min as f64).ln(), (max as f64).ln());
    let mut grid: Vec<usize> = (0..count)
        .map(|i| {
            let v = (lo + (hi - lo) * i as f64 / (count - 1) as f64).exp().round() as usize;
            v.clamp(min, max)
        })
        .collect();
    grid.dedup();
    Ok(grid)
}

/// Indices of strict three-point local maxima whose topographic prominence
/// is at least `min_rel_prominence` times the peak value.
pub fn local_maxima(values: &[f64], min_rel_prominence: f64) -> Vec<usize> {
    let n = values.len();
    let mut peaks = Vec::new();
    for i in 1..n.saturating_sub(1) {
        let v = values[i];
        if !(v > values[i - 1] && v > values[i + 1]) {
            continue;
        }
        let mut left_min = v;
        for &u in values[..i].iter().rev() {
            if u > v {
                break;
            }
            left_min = left_min.min(u);
        }
        let mut right_min = v;
        for &u in &values[i + 1..] {
            if u > v {
                break;
            }
            right_min = right_min.min(u);
        }
        let prominence = v - left_min.max(right_min);
        if prominence >= min_rel_prominence * v.abs() {
            peaks.push(i);
        }
    }
    peaks
}
