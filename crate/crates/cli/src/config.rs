//! TOML experiment files and their validated form.

use std::path::{Path, PathBuf};

use mdescent::curves::{log_spaced_grid, SpectralProfile};
use mdescent::harmonics::Geometry;
use mdescent::sim::{SimOptions, DEFAULT_NORM_SAMPLES};
use serde::{Deserialize, Serialize};

use crate::CliError;

/// Largest sample count any command will accept.
pub const M_MAX: usize = 25_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Deserialize, Serialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
    Svg,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub geometry: GeometrySection,
    pub kernel: KernelSection,
    pub target: TargetSection,
    #[serde(default)]
    pub run: RunSection,
    #[serde(default)]
    pub spectrum: SpectrumSection,
    #[serde(default)]
    pub output: OutputSection,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum GeometrySection {
    Full { d: usize },
    Patched { d0: usize, p: usize },
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KernelSection {
    pub k_max: Option<usize>,
    /// `ĥ_k² = gap^{-(k-1)}`.
    pub gap: Option<f64>,
    pub h2: Option<Vec<f64>>,
    #[serde(default)]
    pub lambda: f64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TargetSection {
    pub f2: Option<Vec<f64>>,
    /// `F̂_k² = k^{-exponent}`.
    pub exponent: Option<f64>,
    #[serde(default)]
    pub noise: f64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum MGrid {
    List(Vec<usize>),
    LogSpaced { min: usize, max: usize, count: usize },
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunSection {
    pub m_grid: Option<MGrid>,
    pub trials: usize,
    pub test_points: usize,
    pub seed: u64,
    pub fixed_target: bool,
    pub norm_samples: usize,
}

impl Default for RunSection {
    fn default() -> Self {
        let sim = SimOptions::default();
        RunSection {
            m_grid: None,
            trials: sim.trials,
            test_points: sim.test_points,
            seed: 0,
            fixed_target: false,
            norm_samples: DEFAULT_NORM_SAMPLES,
        }
    }
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SpectrumSection {
    pub degree: Option<usize>,
    pub m: Option<usize>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputSection {
    pub directory: PathBuf,
    pub formats: Vec<Format>,
}

impl Default for OutputSection {
    fn default() -> Self {
        OutputSection {
            directory: PathBuf::from("out"),
            formats: vec![Format::Csv, Format::Json],
        }
    }
}

/// Command-line values that take precedence over the file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub out: Option<PathBuf>,
    pub seed: Option<u64>,
    pub trials: Option<usize>,
    pub formats: Option<Vec<Format>>,
    pub degree: Option<usize>,
    pub m: Option<usize>,
}

/// A validated experiment.
#[derive(Debug, Clone)]
pub struct Experiment {
    pub geometry: Geometry,
    pub profile: SpectralProfile,
    /// Empty when the file has no grid; commands that need one reject that.
    pub m_grid: Vec<usize>,
    pub sim: SimOptions,
    pub seed: u64,
    pub spectrum_degree: Option<usize>,
    pub spectrum_m: Option<usize>,
    pub out_dir: PathBuf,
    pub formats: Vec<Format>,
}

impl Experiment {
    pub fn wants(&self, format: Format) -> bool {
        self.formats.contains(&format)
    }

    pub fn require_grid(&self) -> Result<&[usize], CliError> {
        if self.m_grid.is_empty() {
            return Err(CliError::Config("run.m_grid is required for this command".into()));
        }
        Ok(&self.m_grid)
    }
}

fn config_err(msg: impl Into<String>) -> CliError {
    CliError::Config(msg.into())
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| config_err(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| config_err(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml(&text).map_err(|e| match e {
            CliError::Config(msg) => config_err(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn resolve(&self, overrides: &Overrides) -> Result<Experiment, CliError> {
        let geometry = match self.geometry {
            GeometrySection::Full { d } => Geometry::full(d),
            GeometrySection::Patched { d0, p } => Geometry::patched(d0, p),
        }
        .map_err(|e| config_err(format!("geometry: {e}")))?;

        let k = &self.kernel;
        let h2 = match (k.gap, &k.h2) {
            (Some(gap), None) => {
                let k_max = k.k_max.ok_or_else(|| config_err("kernel.k_max is required with kernel.gap"))?;
                if !(gap > 0.0 && gap.is_finite()) {
                    return Err(config_err(format!("kernel.gap must be positive, got {gap}")));
                }
                (1..=k_max).map(|k| gap.powi(-(k as i32 - 1))).collect::<Vec<_>>()
            }
            (None, Some(h2)) => {
                if let Some(k_max) = k.k_max {
                    if k_max != h2.len() {
                        return Err(config_err(format!("kernel.k_max = {k_max} but kernel.h2 has {} entries", h2.len())));
                    }
                }
                h2.clone()
            }
            _ => return Err(config_err("exactly one of kernel.gap and kernel.h2 must be given")),
        };
        let k_max = h2.len();
        if k_max == 0 {
            return Err(config_err("kernel needs at least one degree"));
        }

        let t = &self.target;
        let f2 = match (t.exponent, &t.f2) {
            (Some(exponent), None) => {
                if !exponent.is_finite() {
                    return Err(config_err("target.exponent must be finite"));
                }
                (1..=k_max).map(|k| (k as f64).powf(-exponent)).collect::<Vec<_>>()
            }
            (None, Some(f2)) => {
                if f2.len() != k_max {
                    return Err(config_err(format!("target.f2 has {} entries, kernel has {k_max} degrees", f2.len())));
                }
                f2.clone()
            }
            _ => return Err(config_err("exactly one of target.f2 and target.exponent must be given")),
        };
        let profile = SpectralProfile::new(h2, f2, k.lambda, t.noise).map_err(|e| config_err(e.to_string()))?;

        let m_grid = match &self.run.m_grid {
            None => Vec::new(),
            Some(MGrid::List(list)) => list.clone(),
            Some(MGrid::LogSpaced { min, max, count }) => log_spaced_grid(*min, *max, *count).map_err(|e| config_err(format!("run.m_grid: {e}")))?,
        };
        if matches!(self.run.m_grid, Some(MGrid::List(_))) && m_grid.is_empty() {
            return Err(config_err("run.m_grid must not be empty"));
        }
        if m_grid.first() == Some(&0) || m_grid.windows(2).any(|w| w[0] >= w[1]) {
            return Err(config_err("run.m_grid must be positive and strictly increasing"));
        }
        if let Some(&top) = m_grid.last() {
            if top > M_MAX {
                return Err(config_err(format!("run.m_grid reaches {top}, above the ceiling {M_MAX}")));
            }
        }

        let trials = overrides.trials.unwrap_or(self.run.trials);
        if trials == 0 {
            return Err(config_err("trials must be >= 1"));
        }
        if self.run.norm_samples < DEFAULT_NORM_SAMPLES {
            return Err(config_err(format!("run.norm_samples must be >= {DEFAULT_NORM_SAMPLES}")));
        }
        if self.run.test_points == 0 {
            return Err(config_err("run.test_points must be >= 1"));
        }
        let sim = SimOptions {
            trials,
            test_points: self.run.test_points,
            norm_samples: self.run.norm_samples,
            fixed_target: self.run.fixed_target,
        };

        let spectrum_degree = overrides.degree.or(self.spectrum.degree);
        if let Some(r) = spectrum_degree {
            if r < 1 || r > k_max {
                return Err(config_err(format!("spectrum degree {r} outside 1..={k_max}")));
            }
        }
        let spectrum_m = overrides.m.or(self.spectrum.m);
        if let Some(m) = spectrum_m {
            if !(2..=M_MAX).contains(&m) {
                return Err(config_err(format!("spectrum m = {m} outside 2..={M_MAX}")));
            }
        }

        let mut formats = overrides.formats.clone().unwrap_or_else(|| self.output.formats.clone());
        formats.dedup();
        if formats.is_empty() {
            return Err(config_err("no output formats selected"));
        }

        Ok(Experiment {
            geometry,
            profile,
            m_grid,
            sim,
            seed: overrides.seed.unwrap_or(self.run.seed),
            spectrum_degree,
            spectrum_m,
            out_dir: overrides.out.clone().unwrap_or_else(|| self.output.directory.clone()),
            formats,
        })
    }
}
