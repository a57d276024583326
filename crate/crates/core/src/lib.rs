//! Learning curves of kernel ridge regression with dot-product and
//! one-hidden-layer convolutional kernels on the sphere, in the regime where
//! the sample count scales like a power of the input dimension.
//!
//! - [`harmonics`]: dimension counts, Legendre polynomials, zonal Gram matrices, sphere sampling.
//! - [`rmt`]: the Marchenko–Pastur law and the bias/variance integrals over it.
//! - [`curves`]: per-regime bias and variance and the glued learning curve.
//! - [`sim`]: Monte Carlo kernel regression and empirical spectra.

pub mod curves;
mod error;
pub mod harmonics;
pub mod quadrature;
pub mod rmt;
pub mod sim;

pub use curves::{learning_curve, LearningCurve, SpectralProfile};
pub use error::{Error, Result};
pub use harmonics::{harmonic_dim, harmonic_dim_upto, legendre, legendre_gram, sample_sphere, Dataset, Geometry};
pub use rmt::{chi_b, chi_v, effective_regime, zeta, MarchenkoPastur, ZetaMethod};
