use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use super::{stream_rng, Stream};
use crate::curves::SpectralProfile;
use crate::error::{Error, Result};
use crate::harmonics::{sample_sphere_with, Dataset, Geometry};

pub const DEFAULT_NORM_SAMPLES: usize = 10_000;

/// Random target `f(x) = Σ_k F̂_k s_k y_k(x)` with
/// `y_k(x) = Σ_j w_{k,j} Π_{i=j}^{j+k-1} x_i`.
///
/// Window indices wrap cyclically. On the patched geometry every window stays
/// inside one patch and wraps within it, so `y_k` lies in the span of the
/// patch-wise degree-`k` harmonics the convolutional kernel sees.
#[derive(Debug, Clone, PartialEq)]
pub struct TargetFunction {
    geometry: Geometry,
    /// `weights[k-1]` has one entry per window, `geometry.dim()` in total.
    weights: Vec<Vec<f64>>,
    scales: Vec<f64>,
    amplitudes: Vec<f64>,
    seed: u64,
}

impl TargetFunction {
    pub fn geometry(&self) -> Geometry {
        self.geometry
    }

    pub fn degrees(&self) -> usize {
        self.weights.len()
    }

    pub fn weights(&self, k: usize) -> &[f64] {
        &self.weights[k - 1]
    }

    pub fn scales(&self) -> &[f64] {
        &self.scales
    }

    pub fn amplitudes(&self) -> &[f64] {
        &self.amplitudes
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Unnormalized `y_k(x)` for every degree, written into `out`.
    fn raw_components(geometry: Geometry, weights: &[Vec<f64>], x: &[f64], out: &mut [f64]) {
        out.iter_mut().for_each(|v| *v = 0.0);
        let block = geometry.sphere_dim();
        let k_max = weights.len();
        for (a, patch) in x.chunks_exact(block).enumerate() {
            for j in 0..block {
                let mut prod = 1.0;
                for k in 1..=k_max {
                    prod *= patch[(j + k - 1) % block];
                    out[k - 1] += weights[k - 1][a * block + j] * prod;
                }
            }
        }
    }

    /// Normalized components `s_k y_k(x)`.
    pub fn components(&self, x: &[f64], out: &mut [f64]) {
        Self::raw_components(self.geometry, &self.weights, x, out);
        out.iter_mut().zip(&self.scales).for_each(|(v, s)| *v *= s);
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        let mut buf = vec![0.0; self.degrees()];
        self.components(x, &mut buf);
        buf.iter().zip(&self.amplitudes).map(|(y, a)| a * y).sum()
    }

    pub fn eval_dataset(&self, data: &Dataset) -> Result<Vec<f64>> {
        if data.geometry() != self.geometry {
            return Err(Error::invalid("dataset geometry differs from target geometry"));
        }
        let mut buf = vec![0.0; self.degrees()];
        Ok(data
            .rows()
            .map(|x| {
                self.components(x, &mut buf);
                buf.iter().zip(&self.amplitudes).map(|(y, a)| a * y).sum()
            })
            .collect())
    }
}

pub(crate) fn sample_target_with<R: Rng>(
    profile: &SpectralProfile,
    geometry: Geometry,
    seed: u64,
    norm_samples: usize,
    weight_rng: &mut R,
    norm_rng: &mut R,
) -> Result<TargetFunction> {
    if norm_samples < 10_000 {
        return Err(Error::invalid(format!("norm_samples = {norm_samples} must be >= 10^4")));
    }
    let block = geometry.sphere_dim();
    for (k, &f) in profile.f2().iter().enumerate() {
        if f > 0.0 && k + 1 > block {
            return Err(Error::invalid(format!(
                "degree {} target needs at least {} coordinates per window, have {block}",
                k + 1,
                k + 1
            )));
        }
    }
    let dim = geometry.dim();
    let k_max = profile.k_max();
    let weights: Vec<Vec<f64>> = (0..k_max)
        .map(|_| (0..dim).map(|_| StandardNormal.sample(weight_rng)).collect())
        .collect();

    let probe = sample_sphere_with(geometry, norm_samples, seed, norm_rng)?;
    let mut second = vec![0.0; k_max];
    let mut buf = vec![0.0; k_max];
    for x in probe.rows() {
        TargetFunction::raw_components(geometry, &weights, x, &mut buf);
        second.iter_mut().zip(&buf).for_each(|(s, y)| *s += y * y);
    }
    let scales = second
        .iter()
        .enumerate()
        .map(|(k, s)| {
            let moment = s / norm_samples as f64;
            if moment < 1e-12 {
                Err(Error::NonFinite(format!("degree {} target has second moment {moment:e}", k + 1)))
            } else {
                Ok(1.0 / moment.sqrt())
            }
        })
        .collect::<Result<Vec<_>>>()?;

    Ok(TargetFunction {
        geometry,
        weights,
        scales,
        amplitudes: profile.f2().iter().map(|f| f.sqrt()).collect(),
        seed,
    })
}

/// Draws Gaussian window weights and rescales each degree to unit second
/// moment, estimated on `norm_samples` fresh uniform points.
pub fn sample_target(profile: &SpectralProfile, geometry: Geometry, seed: u64, norm_samples: usize) -> Result<TargetFunction> {
    let mut weight_rng = stream_rng(seed, 0, 0, Stream::Weights);
    let mut norm_rng = stream_rng(seed, 0, 0, Stream::Normalization);
    sample_target_with(profile, geometry, seed, norm_samples, &mut weight_rng, &mut norm_rng)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harmonics::sample_sphere;

    fn profile(k_max: usize) -> SpectralProfile {
        SpectralProfile::gap_power_law(32.0, 2.0, k_max, 0.0, 0.0).unwrap()
    }

    /// `E ‖y_k‖² = ‖w_k‖² / (d (d+2) ... (d+2k-2))` when all windows are distinct.
    fn exact_moment(w: &[f64], d: usize, k: usize) -> f64 {
        let denom: f64 = (0..k).map(|i| (d + 2 * i) as f64).product();
        w.iter().map(|v| v * v).sum::<f64>() / denom
    }

    #[test]
    fn scales_match_sphere_moments() {
        let d = 12;
        let g = Geometry::full(d).unwrap();
        let t = sample_target(&profile(5), g, 3, 40_000).unwrap();
        for k in 1..=5 {
            let exact = 1.0 / exact_moment(t.weights(k), d, k).sqrt();
            let rel = (t.scales()[k - 1] - exact).abs() / exact;
            assert!(rel < 0.03, "degree {k}: scale {} vs {exact}", t.scales()[k - 1]);
        }
    }

    #[test]
    fn components_have_unit_second_moment_on_fresh_points() {
        let g = Geometry::patched(6, 3).unwrap();
        let t = sample_target(&profile(4), g, 11, 20_000).unwrap();
        let check = sample_sphere(g, 40_000, 99).unwrap();
        let mut acc = [0.0; 4];
        let mut buf = [0.0; 4];
        for x in check.rows() {
            t.components(x, &mut buf);
            acc.iter_mut().zip(&buf).for_each(|(a, y)| *a += y * y);
        }
        for (k, a) in acc.iter().enumerate() {
            let m = a / 40_000.0;
            assert!((m - 1.0).abs() < 0.05, "degree {}: {m}", k + 1);
        }
    }

    #[test]
    fn zero_amplitudes_give_zero_function() {
        let p = SpectralProfile::new(vec![1.0; 3], vec![0.0; 3], 0.0, 0.0).unwrap();
        let g = Geometry::full(5).unwrap();
        let t = sample_target(&p, g, 0, 10_000).unwrap();
        let x = sample_sphere(g, 10, 1).unwrap();
        assert!(t.eval_dataset(&x).unwrap().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn deterministic_given_seed() {
        let g = Geometry::full(9).unwrap();
        let a = sample_target(&profile(3), g, 5, 10_000).unwrap();
        let b = sample_target(&profile(3), g, 5, 10_000).unwrap();
        assert_eq!(a, b);
        let x = sample_sphere(g, 1, 2).unwrap();
        assert_eq!(a.eval(x.row(0)).to_bits(), b.eval(x.row(0)).to_bits());
        assert_ne!(a, sample_target(&profile(3), g, 6, 10_000).unwrap());
    }

    #[test]
    fn rejects_bad_arguments() {
        let g = Geometry::full(3).unwrap();
        assert!(sample_target(&profile(3), g, 0, 100).is_err());
        // degree 4 window does not fit in 3 coordinates
        assert!(sample_target(&profile(4), g, 0, 10_000).is_err());
        let t = sample_target(&profile(2), g, 0, 10_000).unwrap();
        let other = sample_sphere(Geometry::full(4).unwrap(), 2, 0).unwrap();
        assert!(t.eval_dataset(&other).is_err());
    }

    #[test]
    fn degree_one_is_linear() {
        let p = SpectralProfile::new(vec![1.0], vec![1.0], 0.0, 0.0).unwrap();
        let g = Geometry::full(4).unwrap();
        let t = sample_target(&p, g, 8, 10_000).unwrap();
        let x = [0.5, -0.5, 0.5, 0.5];
        let expected: f64 = t.weights(1).iter().zip(&x).map(|(w, v)| w * v).sum::<f64>() * t.scales()[0];
        assert!((t.eval(&x) - expected).abs() < 1e-15);
    }
}
