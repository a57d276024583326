use rand_distr::{Distribution, Normal};
use rayon::prelude::*;

use super::krr::{build_kernel, krr_predict};
use super::target::{sample_target_with, DEFAULT_NORM_SAMPLES};
use super::{stream_rng, Stream};
use crate::curves::SpectralProfile;
use crate::error::{Error, Result};
use crate::harmonics::{sample_sphere_with, Geometry};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SimOptions {
    pub trials: usize,
    pub test_points: usize,
    pub norm_samples: usize,
    /// Reuse one target for every trial and sample count instead of drawing a
    /// fresh one per trial.
    pub fixed_target: bool,
}

impl Default for SimOptions {
    fn default() -> Self {
        SimOptions {
            trials: 20,
            test_points: 2000,
            norm_samples: DEFAULT_NORM_SAMPLES,
            fixed_target: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MseSummary {
    pub m: usize,
    pub mean: f64,
    /// Sample standard deviation across trials; zero for a single trial.
    pub std: f64,
    pub per_trial: Vec<f64>,
    /// Largest ridgeless jitter used by any trial.
    pub jitter: f64,
}

impl MseSummary {
    /// Linear-interpolated quantile of the per-trial errors.
    pub fn quantile(&self, q: f64) -> f64 {
        let mut sorted = self.per_trial.clone();
        sorted.sort_by(f64::total_cmp);
        let pos = q.clamp(0.0, 1.0) * (sorted.len() - 1) as f64;
        let lo = pos.floor() as usize;
        let hi = pos.ceil() as usize;
        sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
    }
}

fn run_trial(profile: &SpectralProfile, geometry: Geometry, m: usize, trial: usize, opts: &SimOptions, seed: u64) -> Result<(f64, f64)> {
    let train = sample_sphere_with(geometry, m, seed, &mut stream_rng(seed, m, trial, Stream::Train))?;
    let test = sample_sphere_with(geometry, opts.test_points, seed, &mut stream_rng(seed, m, trial, Stream::Test))?;
    let (tm, tt) = if opts.fixed_target { (0, 0) } else { (m, trial) };
    let target = sample_target_with(
        profile,
        geometry,
        seed,
        opts.norm_samples,
        &mut stream_rng(seed, tm, tt, Stream::Weights),
        &mut stream_rng(seed, tm, tt, Stream::Normalization),
    )?;

    let mut labels = target.eval_dataset(&train)?;
    if profile.noise() > 0.0 {
        let noise = Normal::new(0.0, profile.noise().sqrt()).map_err(|e| Error::invalid(e.to_string()))?;
        let mut rng = stream_rng(seed, m, trial, Stream::Noise);
        labels.iter_mut().for_each(|y| *y += noise.sample(&mut rng));
    }
    let truth = target.eval_dataset(&test)?;

    let k_train = build_kernel(&train, &train, profile)?;
    let k_cross = build_kernel(&test, &train, profile)?;
    let fit = krr_predict(k_train.as_ref(), &labels, profile.lambda(), k_cross.as_ref())?;
    let mse = fit
        .predictions
        .iter()
        .zip(&truth)
        .map(|(p, f)| (p - f) * (p - f))
        .sum::<f64>()
        / opts.test_points as f64;
    Ok((mse, fit.jitter))
}

/// Test MSE of kernel ridge regression with `m` training points, averaged over
/// independent trials. Each trial draws its own training set, target, label
/// noise and test set from streams keyed by `(seed, m, trial)`, so the result
/// does not depend on thread scheduling.
pub fn empirical_mse(profile: &SpectralProfile, geometry: Geometry, m: usize, opts: &SimOptions, seed: u64) -> Result<MseSummary> {
    if opts.trials < 1 || opts.test_points < 1 {
        return Err(Error::invalid("trials and test_points must be >= 1"));
    }
    if m < 1 {
        return Err(Error::invalid("training size must be >= 1"));
    }
    let outcomes = (0..opts.trials)
        .into_par_iter()
        .map(|trial| run_trial(profile, geometry, m, trial, opts, seed))
        .collect::<Vec<_>>();
    let outcomes = outcomes.into_iter().collect::<Result<Vec<_>>>()?;

    let per_trial: Vec<f64> = outcomes.iter().map(|o| o.0).collect();
    let n = per_trial.len() as f64;
    let mean = per_trial.iter().sum::<f64>() / n;
    let std = if per_trial.len() > 1 {
        (per_trial.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0)).sqrt()
    } else {
        0.0
    };
    let jitter = outcomes.iter().map(|o| o.1).fold(0.0, f64::max);
    Ok(MseSummary {
        m,
        mean,
        std,
        per_trial,
        jitter,
    })
}
