//! Marchenko–Pastur law and the resolvent-type integrals of it that drive the
//! bias and variance of kernel ridge regression at a critical scaling.
//!
//! With aspect ratio `α`, the law `μ_α` has an atom `(1 - 1/α)⁺` at zero and a
//! density `√((α₊ - t)(t - α₋)) / (2παt)` on `[α₋, α₊]`, `α± = (1 ± √α)²`.
//! Every integral over the continuous part is taken in the angle variable
//! `t = α₋ + (α₊ - α₋) sin²θ`, which removes both square-root edges.

use std::f64::consts::{FRAC_PI_2, PI};

use crate::curves::SpectralProfile;
use crate::error::{Error, Result};
use crate::quadrature::{integrate, QuadratureConfig};

/// Maximum allowed gap between the two routes in [`ZetaMethod::Checked`].
pub const ZETA_CONSISTENCY_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MarchenkoPastur {
    alpha: f64,
    alpha_minus: f64,
    alpha_plus: f64,
    point_mass: f64,
}

impl MarchenkoPastur {
    pub fn new(alpha: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha.is_finite()) {
            return Err(Error::invalid(format!("aspect ratio must be positive and finite, got {alpha}")));
        }
        let s = alpha.sqrt();
        Ok(MarchenkoPastur {
            alpha,
            alpha_minus: (1.0 - s) * (1.0 - s),
            alpha_plus: (1.0 + s) * (1.0 + s),
            point_mass: (1.0 - 1.0 / alpha).max(0.0),
        })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn alpha_minus(&self) -> f64 {
        self.alpha_minus
    }

    pub fn alpha_plus(&self) -> f64 {
        self.alpha_plus
    }

    pub fn point_mass(&self) -> f64 {
        self.point_mass
    }

    /// `α₊ - α₋ = 4√α`.
    pub fn width(&self) -> f64 {
        4.0 * self.alpha.sqrt()
    }

    /// Density of the continuous part; the atom is reported by [`Self::point_mass`].
    pub fn pdf(&self, t: f64) -> f64 {
        if t <= self.alpha_minus || t >= self.alpha_plus || t <= 0.0 {
            return 0.0;
        }
        ((self.alpha_plus - t) * (t - self.alpha_minus)).sqrt() / (2.0 * PI * self.alpha * t)
    }

    fn angle_of(&self, t: f64) -> f64 {
        let u = ((t - self.alpha_minus) / self.width()).clamp(0.0, 1.0);
        u.sqrt().asin()
    }

    /// Continuous-part integral of `g(t)` from `α₋` up to `min(upper, α₊)`,
    /// in the angle variable.
    fn integrate_continuous<G: Fn(f64) -> f64>(&self, g: G, upper: f64) -> Result<f64> {
        let width = self.width();
        let lo = self.alpha_minus;
        let scale = width * width / (PI * self.alpha);
        let theta_max = if upper >= self.alpha_plus { FRAC_PI_2 } else { self.angle_of(upper) };
        let integrand = |theta: f64| {
            let (s, c) = theta.sin_cos();
            let s2 = s * s;
            let t = lo + width * s2;
            // sin²θ / t, finite as θ → 0 when α₋ = 0
            let ratio = if t > 0.0 { s2 / t } else { 1.0 / width };
            scale * ratio * c * c * g(t)
        };
        Ok(integrate(integrand, 0.0, theta_max, QuadratureConfig::default())?.value)
    }

    /// Distribution function including the atom at zero.
    pub fn cdf(&self, t: f64) -> Result<f64> {
        if t < 0.0 {
            return Ok(0.0);
        }
        if t >= self.alpha_plus {
            return Ok(1.0);
        }
        if t <= self.alpha_minus {
            return Ok(self.point_mass);
        }
        let cont = self.integrate_continuous(|_| 1.0, t)?;
        Ok((self.point_mass + cont).clamp(0.0, 1.0))
    }

    /// Mass just below `t`; differs from [`Self::cdf`] only at the atom.
    pub fn cdf_left(&self, t: f64) -> Result<f64> {
        if t == 0.0 {
            return Ok(0.0);
        }
        self.cdf(t)
    }

    /// Inverse distribution function by bisection on [`Self::cdf`].
    pub fn quantile(&self, q: f64) -> Result<f64> {
        if !(0.0..=1.0).contains(&q) {
            return Err(Error::invalid(format!("quantile level {q} outside [0, 1]")));
        }
        if q <= self.point_mass {
            return Ok(0.0);
        }
        let (mut lo, mut hi) = (self.alpha_minus, self.alpha_plus);
        for _ in 0..100 {
            let mid = 0.5 * (lo + hi);
            if self.cdf(mid)? < q {
                lo = mid;
            } else {
                hi = mid;
            }
            if hi - lo <= 1e-15 * hi {
                break;
            }
        }
        Ok(0.5 * (lo + hi))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ZetaMethod {
    ClosedForm,
    Quadrature,
    /// Closed form, rejected unless quadrature agrees to [`ZETA_CONSISTENCY_TOL`].
    Checked,
}

fn check_args(alpha: f64, xi: f64, k: u32) -> Result<MarchenkoPastur> {
    if !(xi >= 0.0) {
        return Err(Error::invalid(format!("xi must be >= 0, got {xi}")));
    }
    if k != 1 && k != 2 {
        return Err(Error::invalid(format!("zeta order k must be 1 or 2, got {k}")));
    }
    MarchenkoPastur::new(alpha)
}

/// `∫ (1+ξt)^{-k}` over the continuous part only.
fn zeta_cont_closed(mp: &MarchenkoPastur, xi: f64, k: u32) -> f64 {
    let width = mp.width();
    let b = (1.0 + xi * mp.alpha_minus) / (xi * width);
    let c = mp.alpha_minus / width;
    let rb = (b * (1.0 + b)).sqrt();
    let rc = (c * (1.0 + c)).sqrt();
    // ∫_0^1 √(s(1-s)) / ((s+b)^k (s+c)) ds, written without cancellation:
    //   k = 1: π [(1+b+c) - rb - rc] / (rb + rc), and (a + ½) - √(a(1+a)) = ¼ / (a + ½ + √(a(1+a)))
    //   k = 2: π / (2 rb (b + c + 2bc + 2 rb rc))
    let reduced = match k {
        1 => PI * (0.25 / (b + 0.5 + rb) + 0.25 / (c + 0.5 + rc)) / (rb + rc),
        _ => PI / (2.0 * rb * (b + c + 2.0 * b * c + 2.0 * rb * rc)),
    };
    let prefactor = (xi * width).powi(1 - k as i32) / (2.0 * PI * mp.alpha * xi);
    prefactor * reduced
}

fn zeta_cont_quadrature(mp: &MarchenkoPastur, xi: f64, k: u32) -> Result<f64> {
    mp.integrate_continuous(|t| (1.0 + xi * t).powi(-(k as i32)), f64::INFINITY)
}

/// `ζ_k(α, ξ) = ∫ (1 + ξt)^{-k} μ_α(dt)` for `k ∈ {1, 2}`, atom included.
/// `ξ = ∞` is the ridgeless limit and returns the atom mass.
pub fn zeta(alpha: f64, xi: f64, k: u32, method: ZetaMethod) -> Result<f64> {
    let mp = check_args(alpha, xi, k)?;
    if xi == 0.0 {
        return Ok(1.0);
    }
    if xi == f64::INFINITY {
        return Ok(mp.point_mass);
    }
    let closed = || mp.point_mass + zeta_cont_closed(&mp, xi, k);
    match method {
        ZetaMethod::ClosedForm => Ok(closed()),
        ZetaMethod::Quadrature => Ok(mp.point_mass + zeta_cont_quadrature(&mp, xi, k)?),
        ZetaMethod::Checked => {
            let closed = closed();
            let quadrature = mp.point_mass + zeta_cont_quadrature(&mp, xi, k)?;
            let diff = (closed - quadrature).abs();
            if diff > ZETA_CONSISTENCY_TOL {
                return Err(Error::ClosedFormMismatch {
                    closed,
                    quadrature,
                    diff,
                });
            }
            Ok(closed)
        }
    }
}

/// Bias kernel `χ_B(α, ξ) = ζ_2(α, ξ)`.
pub fn chi_b(alpha: f64, xi: f64) -> Result<f64> {
    chi_b_with(alpha, xi, ZetaMethod::ClosedForm)
}

pub fn chi_b_with(alpha: f64, xi: f64, method: ZetaMethod) -> Result<f64> {
    zeta(alpha, xi, 2, method)
}

/// Variance kernel `χ_V(α, ξ) = αξ² ∫ t (1+ξt)^{-2} μ_α(dt) = αξ (ζ_1 - ζ_2)`.
///
/// At `ξ = ∞` this is the ridgeless limit `α ∫ t^{-1} μ_α`, i.e. `α/(1-α)`
/// below one and `1/(α-1)` above, and infinite at `α = 1`.
pub fn chi_v(alpha: f64, xi: f64) -> Result<f64> {
    chi_v_with(alpha, xi, ZetaMethod::ClosedForm)
}

pub fn chi_v_with(alpha: f64, xi: f64, method: ZetaMethod) -> Result<f64> {
    let mp = check_args(alpha, xi, 1)?;
    if xi == 0.0 {
        return Ok(0.0);
    }
    if xi == f64::INFINITY {
        return Ok(match alpha.partial_cmp(&1.0) {
            Some(std::cmp::Ordering::Less) => alpha / (1.0 - alpha),
            Some(std::cmp::Ordering::Greater) => 1.0 / (alpha - 1.0),
            _ => f64::INFINITY,
        });
    }
    // the atom cancels in ζ_1 - ζ_2, so only continuous parts are differenced
    let diff = match method {
        ZetaMethod::ClosedForm => zeta_cont_closed(&mp, xi, 1) - zeta_cont_closed(&mp, xi, 2),
        ZetaMethod::Quadrature => zeta_cont_quadrature(&mp, xi, 1)? - zeta_cont_quadrature(&mp, xi, 2)?,
        ZetaMethod::Checked => {
            zeta(alpha, xi, 1, ZetaMethod::Checked)?;
            zeta(alpha, xi, 2, ZetaMethod::Checked)?;
            zeta_cont_closed(&mp, xi, 1) - zeta_cont_closed(&mp, xi, 2)
        }
    };
    Ok((alpha * xi * diff).max(0.0))
}

/// Effective ridge and regularization at the degree-`r` critical scaling.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EffectiveRegime {
    pub r: usize,
    /// `λ + ĥ²_{>r}`; zero in the ridgeless top-degree case.
    pub gamma: f64,
    /// `ĥ_r² / (α γ)`; `+∞` when `γ = 0` and `ĥ_r² > 0`.
    pub xi: f64,
    pub alpha: f64,
}

/// Computes `ξ_r = ĥ_r² / (α (λ + ĥ²_{>r}))`, tails truncated at the
/// profile's maximum degree.
///
/// A degree without kernel mass (`ĥ_r² = 0`) has `ξ_r = 0`. A positive `ĥ_r²`
/// over a vanishing effective ridge is the interpolating limit `ξ_r = ∞`.
pub fn effective_regime(profile: &SpectralProfile, r: usize, alpha: f64) -> Result<EffectiveRegime> {
    profile.check_degree(r)?;
    if !(alpha > 0.0 && alpha.is_finite()) {
        return Err(Error::invalid(format!("aspect ratio must be positive and finite, got {alpha}")));
    }
    let h_r = profile.h2()[r - 1];
    let gamma = profile.lambda() + profile.h2_tail(r);
    let xi = if h_r == 0.0 {
        0.0
    } else if gamma > 0.0 {
        h_r / (alpha * gamma)
    } else {
        f64::INFINITY
    };
    Ok(EffectiveRegime { r, gamma, xi, alpha })
}
