//! The four subcommands and the file formats they read and write.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use mdescent::curves::{learning_curve, LearningCurve};
use mdescent::harmonics::{sample_sphere, Geometry};
use mdescent::rmt::MarchenkoPastur;
use mdescent::sim::{empirical_mse, empirical_spectrum, MseSummary, SpectrumResult};
use serde::Serialize;
use serde_json::json;

use crate::config::{Experiment, Format};
use crate::svg::{self, Bars, Plot, Series, PALETTE};
use crate::CliError;

pub const THEORY_HEADER: &str = "m,bias,variance,total";
pub const EMPIRICAL_HEADER: &str = "m,mse_mean,mse_std,trials,jitter_used";

// rough single-core throughput, only used to refuse runs that are clearly too big
const KERNEL_OPS_PER_SEC: f64 = 4e8;
const DENSE_FLOPS_PER_SEC: f64 = 1e10;

/// 17 significant digits, enough to round-trip any double.
pub fn fmt_num(v: f64) -> String {
    format!("{v:.16e}")
}

fn describe(g: Geometry) -> String {
    match g {
        Geometry::Full { d } => format!("full(d={d})"),
        Geometry::Patched { d0, p } => format!("patched(d0={d0},p={p})"),
    }
}

fn write_file(path: &Path, contents: &str) -> Result<(), CliError> {
    fs::write(path, contents).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn prepare_dir(dir: &Path) -> Result<(), CliError> {
    fs::create_dir_all(dir).map_err(|source| CliError::Io {
        path: dir.to_path_buf(),
        source,
    })
}

fn json_string(value: &impl Serialize) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("report values serialize");
    s.push('\n');
    s
}

fn check_budget(estimate: f64, budget: Option<f64>) -> Result<(), CliError> {
    match budget {
        Some(limit) if estimate > limit => Err(CliError::Config(format!(
            "estimated runtime {estimate:.0} s exceeds the budget of {limit:.0} s"
        ))),
        _ => Ok(()),
    }
}

fn kernel_cost_per_entry(g: Geometry, degrees: usize) -> f64 {
    (g.dim() + 2 * g.patches() * degrees) as f64
}

/// A-priori runtime estimate for `simulate`, in seconds.
pub fn estimate_simulation_seconds(exp: &Experiment) -> f64 {
    let per_entry = kernel_cost_per_entry(exp.geometry, exp.profile.k_max());
    let test = exp.sim.test_points as f64;
    exp.m_grid
        .iter()
        .map(|&m| {
            let m = m as f64;
            let kernel = (m * m + m * test) * per_entry / KERNEL_OPS_PER_SEC;
            let solve = (m * m * m / 3.0 + m * test) / DENSE_FLOPS_PER_SEC;
            exp.sim.trials as f64 * (kernel + solve)
        })
        .sum()
}

/// A-priori runtime estimate for `spectrum`, in seconds.
pub fn estimate_spectrum_seconds(geometry: Geometry, m: usize, degree: usize) -> f64 {
    let m = m as f64;
    m * m * kernel_cost_per_entry(geometry, degree) / KERNEL_OPS_PER_SEC + 10.0 * m * m * m / DENSE_FLOPS_PER_SEC
}

pub fn theory_csv(lc: &LearningCurve) -> String {
    let mut out = format!("{THEORY_HEADER}\n");
    for p in &lc.points {
        let _ = writeln!(out, "{},{},{},{}", p.m, fmt_num(p.bias), fmt_num(p.variance), fmt_num(p.total));
    }
    out
}

/// One grid point of a simulation; a failed point keeps its error.
#[derive(Debug, Clone)]
pub struct EmpiricalRow {
    pub m: usize,
    pub trials: usize,
    pub outcome: Result<MseSummary, mdescent::Error>,
}

pub fn empirical_csv(rows: &[EmpiricalRow]) -> String {
    let mut out = format!("{EMPIRICAL_HEADER}\n");
    for row in rows {
        let (mean, std, jitter) = match &row.outcome {
            Ok(s) => (s.mean, s.std, s.jitter),
            Err(_) => (f64::NAN, f64::NAN, f64::NAN),
        };
        let _ = writeln!(out, "{},{},{},{},{}", row.m, fmt_num(mean), fmt_num(std), row.trials, fmt_num(jitter));
    }
    out
}

/// One eigenvalue per line, ascending.
pub fn spectrum_csv(result: &SpectrumResult) -> String {
    let mut out = String::new();
    for &v in &result.eigenvalues {
        out.push_str(&fmt_num(v));
        out.push('\n');
    }
    out
}

pub fn run_theory(exp: &Experiment) -> Result<LearningCurve, CliError> {
    Ok(learning_curve(&exp.profile, exp.geometry, exp.require_grid()?)?)
}

pub fn run_simulation(exp: &Experiment) -> Result<Vec<EmpiricalRow>, CliError> {
    let grid = exp.require_grid()?;
    Ok(grid
        .iter()
        .map(|&m| EmpiricalRow {
            m,
            trials: exp.sim.trials,
            outcome: empirical_mse(&exp.profile, exp.geometry, m, &exp.sim, exp.seed),
        })
        .collect())
}

pub fn run_spectrum(exp: &Experiment) -> Result<SpectrumResult, CliError> {
    let degree = exp.spectrum_degree.ok_or_else(|| CliError::Config("spectrum degree missing (spectrum.degree or --degree)".into()))?;
    let m = exp.spectrum_m.ok_or_else(|| CliError::Config("spectrum sample count missing (spectrum.m or --m)".into()))?;
    let data = sample_sphere(exp.geometry, m, exp.seed)?;
    Ok(empirical_spectrum(&data, degree)?)
}

fn positive(points: impl Iterator<Item = (f64, f64)>) -> Vec<(f64, f64)> {
    points.filter(|p| p.1 > 0.0 && p.1.is_finite()).collect()
}

fn theory_series(lc: &LearningCurve) -> Vec<Series> {
    let pts = |f: fn(&mdescent::curves::CurvePoint) -> f64| positive(lc.points.iter().map(|p| (p.m as f64, f(p))));
    vec![
        Series::line("theory total", PALETTE[0], pts(|p| p.total)),
        Series::line("bias", PALETTE[2], pts(|p| p.bias)),
        Series::line("variance", PALETTE[3], pts(|p| p.variance)),
    ]
}

fn curve_plot(title: String, series: Vec<Series>) -> Plot {
    Plot {
        title,
        x_label: "m".into(),
        y_label: "test error".into(),
        log_x: true,
        log_y: true,
        series,
        bars: Vec::new(),
    }
}

pub fn cmd_theory(exp: &Experiment) -> Result<Vec<PathBuf>, CliError> {
    let lc = run_theory(exp)?;
    prepare_dir(&exp.out_dir)?;
    let mut written = Vec::new();
    if exp.wants(Format::Csv) {
        let path = exp.out_dir.join("theory.csv");
        write_file(&path, &theory_csv(&lc))?;
        written.push(path);
    }
    if exp.wants(Format::Json) {
        let points: Vec<_> = lc
            .points
            .iter()
            .map(|p| json!({"m": p.m, "bias": p.bias, "variance": p.variance, "total": p.total}))
            .collect();
        let doc = json!({
            "geometry": describe(exp.geometry),
            "h2": exp.profile.h2(),
            "f2": exp.profile.f2(),
            "lambda": exp.profile.lambda(),
            "noise": exp.profile.noise(),
            "points": points,
        });
        let path = exp.out_dir.join("theory.json");
        write_file(&path, &json_string(&doc))?;
        written.push(path);
    }
    if exp.wants(Format::Svg) {
        let plot = curve_plot(format!("Learning curve, {}", describe(exp.geometry)), theory_series(&lc));
        let path = exp.out_dir.join("theory.svg");
        write_file(&path, &svg::render(&plot))?;
        written.push(path);
    }
    Ok(written)
}

/// Runs the simulation grid and writes its files. Individual failed points are
/// written as `NaN`; the command only fails if every point failed.
pub fn cmd_simulate(exp: &Experiment, budget_seconds: Option<f64>) -> Result<Vec<PathBuf>, CliError> {
    exp.require_grid()?;
    check_budget(estimate_simulation_seconds(exp), budget_seconds)?;
    let rows = run_simulation(exp)?;
    for row in &rows {
        if let Err(e) = &row.outcome {
            eprintln!("warning: m = {}: {e}", row.m);
        }
    }
    prepare_dir(&exp.out_dir)?;
    let mut written = Vec::new();
    if exp.wants(Format::Csv) {
        let path = exp.out_dir.join("empirical.csv");
        write_file(&path, &empirical_csv(&rows))?;
        written.push(path);
    }
    if exp.wants(Format::Json) {
        let points: Vec<_> = rows
            .iter()
            .map(|row| match &row.outcome {
                Ok(s) => json!({
                    "m": row.m,
                    "trials": row.trials,
                    "mean": s.mean,
                    "std": s.std,
                    "jitter_used": s.jitter,
                    "quantiles": {
                        "q10": s.quantile(0.1),
                        "q25": s.quantile(0.25),
                        "q50": s.quantile(0.5),
                        "q75": s.quantile(0.75),
                        "q90": s.quantile(0.9),
                    },
                    "per_trial": s.per_trial,
                }),
                Err(e) => json!({"m": row.m, "trials": row.trials, "error": e.to_string()}),
            })
            .collect();
        let doc = json!({
            "geometry": describe(exp.geometry),
            "seed": exp.seed,
            "test_points": exp.sim.test_points,
            "fixed_target": exp.sim.fixed_target,
            "points": points,
        });
        let path = exp.out_dir.join("empirical.json");
        write_file(&path, &json_string(&doc))?;
        written.push(path);
    }
    if exp.wants(Format::Svg) {
        let mut series = Vec::new();
        if let Ok(lc) = run_theory(exp) {
            series.push(Series::line("theory", PALETTE[0], positive(lc.points.iter().map(|p| (p.m as f64, p.total)))));
        }
        let ok: Vec<&MseSummary> = rows.iter().filter_map(|r| r.outcome.as_ref().ok()).filter(|s| s.mean > 0.0).collect();
        let mut emp = Series::line("empirical", PALETTE[1], ok.iter().map(|s| (s.m as f64, s.mean)).collect());
        emp.errors = Some(ok.iter().map(|s| s.std).collect());
        emp.markers = true;
        series.push(emp);
        let plot = curve_plot(format!("Simulated test error, {}", describe(exp.geometry)), series);
        let path = exp.out_dir.join("empirical.svg");
        write_file(&path, &svg::render(&plot))?;
        written.push(path);
    }
    if let Some(Err(first)) = rows.iter().all(|r| r.outcome.is_err()).then(|| rows[0].outcome.clone()) {
        return Err(CliError::Numerical(first));
    }
    Ok(written)
}

pub fn cmd_spectrum(exp: &Experiment, budget_seconds: Option<f64>) -> Result<Vec<PathBuf>, CliError> {
    if let (Some(m), Some(r)) = (exp.spectrum_m, exp.spectrum_degree) {
        check_budget(estimate_spectrum_seconds(exp.geometry, m, r), budget_seconds)?;
    }
    let result = run_spectrum(exp)?;
    let mp = MarchenkoPastur::new(result.ratio)?;
    prepare_dir(&exp.out_dir)?;
    let mut written = Vec::new();
    if exp.wants(Format::Csv) {
        let path = exp.out_dir.join("spectrum.csv");
        write_file(&path, &spectrum_csv(&result))?;
        written.push(path);
    }
    if exp.wants(Format::Json) {
        let doc = json!({
            "alpha_used": result.ratio,
            "ks": result.ks,
            "m": result.eigenvalues.len(),
            "N_r": result.harmonic_dim,
            "degree": result.degree,
            "geometry": describe(result.geometry),
            "seed": exp.seed,
            "point_mass": mp.point_mass(),
        });
        let path = exp.out_dir.join("spectrum.json");
        write_file(&path, &json_string(&doc))?;
        written.push(path);
    }
    if exp.wants(Format::Svg) {
        let path = exp.out_dir.join("spectrum.svg");
        write_file(&path, &svg::render(&spectrum_plot(&result, &mp)))?;
        written.push(path);
    }
    Ok(written)
}

fn spectrum_plot(result: &SpectrumResult, mp: &MarchenkoPastur) -> Plot {
    let cov = result.covariance_eigenvalues();
    let n = cov.len() as f64;
    let top = cov.last().copied().unwrap_or(0.0).max(mp.alpha_plus()) * 1.02;
    let bins = 40;
    let width = top / bins as f64;
    let mut counts = vec![0usize; bins];
    for &v in cov.iter().filter(|&&v| v > 0.0) {
        counts[((v / width) as usize).min(bins - 1)] += 1;
    }
    // normalized so the bars carry the nonzero fraction, like the continuous density
    let heights = counts.iter().map(|&c| c as f64 / (n * width)).collect();
    let edges = (0..=bins).map(|i| i as f64 * width).collect();
    let density = (1..400).map(|i| top * i as f64 / 400.0).map(|t| (t, mp.pdf(t))).collect();
    Plot {
        title: format!(
            "Degree {} covariance spectrum, {}, alpha = {:.3}, KS = {:.4}, atom = {:.3}",
            result.degree,
            describe(result.geometry),
            result.ratio,
            result.ks,
            mp.point_mass()
        ),
        x_label: "eigenvalue".into(),
        y_label: "density".into(),
        log_x: false,
        log_y: false,
        series: vec![Series::line("Marchenko-Pastur", PALETTE[1], density)],
        bars: vec![Bars {
            label: "empirical".into(),
            color: PALETTE[0].into(),
            edges,
            heights,
        }],
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TheoryRow {
    pub m: usize,
    pub bias: f64,
    pub variance: f64,
    pub total: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EmpiricalRecord {
    pub m: usize,
    pub mean: f64,
    pub std: f64,
    pub trials: usize,
    pub jitter: f64,
}

fn parse_rows<T>(text: &str, header: &str, what: &str, parse: impl Fn(&csv::StringRecord) -> Option<T>) -> Result<Vec<T>, CliError> {
    let mut reader = csv::ReaderBuilder::new().has_headers(true).from_reader(text.as_bytes());
    let found = reader.headers().map_err(|e| CliError::Config(format!("{what}: {e}")))?.iter().collect::<Vec<_>>().join(",");
    if found != header {
        return Err(CliError::Config(format!("{what}: header is `{found}`, expected `{header}`")));
    }
    reader
        .records()
        .enumerate()
        .map(|(i, rec)| {
            let rec = rec.map_err(|e| CliError::Config(format!("{what}: {e}")))?;
            parse(&rec).ok_or_else(|| CliError::Config(format!("{what}: malformed row {}", i + 2)))
        })
        .collect()
}

pub fn parse_theory_csv(text: &str) -> Result<Vec<TheoryRow>, CliError> {
    parse_rows(text, THEORY_HEADER, "theory csv", |r| {
        Some(TheoryRow {
            m: r.get(0)?.parse().ok()?,
            bias: r.get(1)?.parse().ok()?,
            variance: r.get(2)?.parse().ok()?,
            total: r.get(3)?.parse().ok()?,
        })
    })
}

pub fn parse_empirical_csv(text: &str) -> Result<Vec<EmpiricalRecord>, CliError> {
    parse_rows(text, EMPIRICAL_HEADER, "empirical csv", |r| {
        Some(EmpiricalRecord {
            m: r.get(0)?.parse().ok()?,
            mean: r.get(1)?.parse().ok()?,
            std: r.get(2)?.parse().ok()?,
            trials: r.get(3)?.parse().ok()?,
            jitter: r.get(4)?.parse().ok()?,
        })
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComparePoint {
    pub m: usize,
    pub theory: f64,
    pub empirical: f64,
    pub empirical_std: f64,
    /// `|empirical - theory| / theory`, or the absolute gap when `relative` is false.
    pub deviation: f64,
    pub relative: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CompareReport {
    pub m_floor: usize,
    /// Median relative deviation over points with `m >= m_floor`; absolute and
    /// failed points are left out.
    pub median_relative_deviation: Option<f64>,
    pub max_relative_deviation: Option<f64>,
    pub points_in_median: usize,
    pub points: Vec<ComparePoint>,
}

pub fn median(values: &mut [f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    values.sort_by(f64::total_cmp);
    let n = values.len();
    Some(if n % 2 == 1 { values[n / 2] } else { 0.5 * (values[n / 2 - 1] + values[n / 2]) })
}

pub fn compare(theory: &[TheoryRow], empirical: &[EmpiricalRecord], m_floor: usize) -> Result<CompareReport, CliError> {
    let same_grid = theory.len() == empirical.len() && theory.iter().zip(empirical).all(|(t, e)| t.m == e.m);
    if !same_grid || theory.is_empty() {
        return Err(CliError::Config("theory and empirical files do not share the same m column".into()));
    }
    let points: Vec<ComparePoint> = theory
        .iter()
        .zip(empirical)
        .map(|(t, e)| {
            let gap = (e.mean - t.total).abs();
            let relative = t.total != 0.0;
            ComparePoint {
                m: t.m,
                theory: t.total,
                empirical: e.mean,
                empirical_std: e.std,
                deviation: if relative { gap / t.total.abs() } else { gap },
                relative,
            }
        })
        .collect();
    let mut above: Vec<f64> = points
        .iter()
        .filter(|p| p.m >= m_floor && p.relative && p.deviation.is_finite())
        .map(|p| p.deviation)
        .collect();
    let max = above.iter().copied().reduce(f64::max);
    Ok(CompareReport {
        m_floor,
        points_in_median: above.len(),
        median_relative_deviation: median(&mut above),
        max_relative_deviation: max,
        points,
    })
}

fn read_input(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))
}

pub fn cmd_compare(theory_path: &Path, empirical_path: &Path, out_dir: &Path, m_floor: usize, formats: &[Format]) -> Result<CompareReport, CliError> {
    let theory = parse_theory_csv(&read_input(theory_path)?)?;
    let empirical = parse_empirical_csv(&read_input(empirical_path)?)?;
    let report = compare(&theory, &empirical, m_floor)?;
    prepare_dir(out_dir)?;
    write_file(&out_dir.join("compare.json"), &json_string(&report))?;
    if formats.contains(&Format::Svg) {
        let theory_line = Series::line("theory", PALETTE[0], positive(theory.iter().map(|t| (t.m as f64, t.total))));
        let ok: Vec<&EmpiricalRecord> = empirical.iter().filter(|e| e.mean > 0.0 && e.mean.is_finite()).collect();
        let mut emp = Series::line("empirical", PALETTE[1], ok.iter().map(|e| (e.m as f64, e.mean)).collect());
        emp.errors = Some(ok.iter().map(|e| if e.std.is_finite() { e.std } else { 0.0 }).collect());
        emp.markers = true;
        let title = match report.median_relative_deviation {
            Some(med) => format!("Theory vs simulation, median relative deviation {med:.3}"),
            None => "Theory vs simulation".to_string(),
        };
        write_file(&out_dir.join("compare.svg"), &svg::render(&curve_plot(title, vec![theory_line, emp])))?;
    }
    Ok(report)
}
