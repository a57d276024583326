//! Small SVG line and histogram plots.

use std::fmt::Write;

const WIDTH: f64 = 720.0;
const HEIGHT: f64 = 480.0;
const LEFT: f64 = 80.0;
const RIGHT: f64 = 20.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 60.0;

pub const PALETTE: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b"];

#[derive(Debug, Clone)]
pub struct Series {
    pub label: String,
    pub color: String,
    pub points: Vec<(f64, f64)>,
    /// Symmetric half-widths, one per point.
    pub errors: Option<Vec<f64>>,
    pub markers: bool,
}

impl Series {
    pub fn line(label: impl Into<String>, color: &str, points: Vec<(f64, f64)>) -> Self {
        Series {
            label: label.into(),
            color: color.to_string(),
            points,
            errors: None,
            markers: false,
        }
    }
}

/// Histogram bars given by bin edges and heights.
#[derive(Debug, Clone)]
pub struct Bars {
    pub label: String,
    pub color: String,
    pub edges: Vec<f64>,
    pub heights: Vec<f64>,
}

#[derive(Debug, Clone, Default)]
pub struct Plot {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub log_x: bool,
    pub log_y: bool,
    pub series: Vec<Series>,
    pub bars: Vec<Bars>,
}

struct Axis {
    lo: f64,
    hi: f64,
    log: bool,
}

impl Axis {
    fn fit(values: impl Iterator<Item = f64>, log: bool) -> Axis {
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for v in values.filter(|v| v.is_finite() && (!log || *v > 0.0)) {
            let v = if log { v.log10() } else { v };
            lo = lo.min(v);
            hi = hi.max(v);
        }
        if !lo.is_finite() {
            (lo, hi) = (0.0, 1.0);
        }
        if log {
            (lo, hi) = (lo.floor(), hi.ceil());
        }
        if hi - lo < 1e-12 {
            hi = lo + 1.0;
        }
        Axis { lo, hi, log }
    }

    fn frac(&self, v: f64) -> Option<f64> {
        let v = if self.log {
            if v <= 0.0 {
                return None;
            }
            v.log10()
        } else {
            v
        };
        v.is_finite().then(|| (v - self.lo) / (self.hi - self.lo))
    }

    fn lo_value(&self) -> f64 {
        if self.log {
            10f64.powf(self.lo)
        } else {
            self.lo
        }
    }

    fn ticks(&self) -> Vec<(f64, String)> {
        if self.log {
            let step = ((self.hi - self.lo) / 8.0).ceil().max(1.0) as i32;
            (self.lo as i32..=self.hi as i32)
                .step_by(step as usize)
                .map(|e| (10f64.powi(e), format!("1e{e}")))
                .collect()
        } else {
            let raw = (self.hi - self.lo) / 5.0;
            let mag = 10f64.powf(raw.log10().floor());
            let step = [1.0, 2.0, 5.0, 10.0].iter().map(|s| s * mag).find(|s| *s >= raw).unwrap_or(raw);
            let mut v = (self.lo / step).ceil() * step;
            let mut out = Vec::new();
            while v <= self.hi + 1e-9 * step {
                out.push((v, format!("{}", (v / step).round() * step)));
                v += step;
            }
            out
        }
    }
}

fn sx(axis: &Axis, v: f64) -> Option<f64> {
    axis.frac(v).map(|f| LEFT + f * (WIDTH - LEFT - RIGHT))
}

fn sy(axis: &Axis, v: f64) -> Option<f64> {
    axis.frac(v).map(|f| HEIGHT - BOTTOM - f * (HEIGHT - TOP - BOTTOM))
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

pub fn render(plot: &Plot) -> String {
    let xs = plot
        .series
        .iter()
        .flat_map(|s| s.points.iter().map(|p| p.0))
        .chain(plot.bars.iter().flat_map(|b| b.edges.iter().copied()));
    let x = Axis::fit(xs, plot.log_x);
    let ys = plot
        .series
        .iter()
        .flat_map(|s| {
            s.points.iter().enumerate().flat_map(move |(i, p)| {
                let e = s.errors.as_ref().map_or(0.0, |e| e[i]);
                [p.1, p.1 + e, if plot.log_y { p.1 } else { p.1 - e }]
            })
        })
        .chain(plot.bars.iter().flat_map(|b| b.heights.iter().copied()))
        .chain((!plot.log_y && !plot.bars.is_empty()).then_some(0.0));
    let y = Axis::fit(ys, plot.log_y);

    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(out, r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);
    let _ = writeln!(out, r#"<text x="{}" y="24" text-anchor="middle" font-size="14">{}</text>"#, WIDTH / 2.0, escape(&plot.title));

    let (x0, x1) = (LEFT, WIDTH - RIGHT);
    let (y0, y1) = (HEIGHT - BOTTOM, TOP);
    let _ = writeln!(out, r#"<rect x="{x0}" y="{y1}" width="{}" height="{}" fill="none" stroke="black"/>"#, x1 - x0, y0 - y1);
    for (v, label) in x.ticks() {
        if let Some(px) = sx(&x, v) {
            let _ = writeln!(out, r#"<line x1="{px:.2}" y1="{y0}" x2="{px:.2}" y2="{}" stroke="black"/>"#, y0 + 5.0);
            let _ = writeln!(out, r#"<text x="{px:.2}" y="{}" text-anchor="middle">{label}</text>"#, y0 + 18.0);
        }
    }
    for (v, label) in y.ticks() {
        if let Some(py) = sy(&y, v) {
            let _ = writeln!(out, r#"<line x1="{}" y1="{py:.2}" x2="{x0}" y2="{py:.2}" stroke="black"/>"#, x0 - 5.0);
            let _ = writeln!(out, r#"<text x="{}" y="{:.2}" text-anchor="end">{label}</text>"#, x0 - 8.0, py + 4.0);
        }
    }
    let _ = writeln!(out, r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#, (x0 + x1) / 2.0, HEIGHT - 15.0, escape(&plot.x_label));
    let _ = writeln!(
        out,
        r#"<text x="18" y="{0}" text-anchor="middle" transform="rotate(-90 18 {0})">{1}</text>"#,
        (y0 + y1) / 2.0,
        escape(&plot.y_label)
    );

    for bars in &plot.bars {
        for (i, &h) in bars.heights.iter().enumerate() {
            let (Some(a), Some(b), Some(top)) = (sx(&x, bars.edges[i]), sx(&x, bars.edges[i + 1]), sy(&y, h)) else {
                continue;
            };
            let base = if plot.log_y { y0 } else { sy(&y, 0.0).unwrap_or(y0) };
            let _ = writeln!(
                out,
                r#"<rect x="{a:.2}" y="{top:.2}" width="{:.2}" height="{:.2}" fill="{}" fill-opacity="0.5" stroke="none"/>"#,
                (b - a).max(0.0),
                (base - top).max(0.0),
                bars.color
            );
        }
    }

    for s in &plot.series {
        let pts: Vec<(f64, f64)> = s.points.iter().filter_map(|&(a, b)| Some((sx(&x, a)?, sy(&y, b)?))).collect();
        if pts.len() > 1 {
            let path: Vec<String> = pts.iter().map(|(a, b)| format!("{a:.2},{b:.2}")).collect();
            let _ = writeln!(out, r#"<polyline points="{}" fill="none" stroke="{}" stroke-width="1.5"/>"#, path.join(" "), s.color);
        }
        if s.markers {
            for (a, b) in &pts {
                let _ = writeln!(out, r#"<circle cx="{a:.2}" cy="{b:.2}" r="2.5" fill="{}"/>"#, s.color);
            }
        }
        if let Some(errors) = &s.errors {
            for (&(a, b), &e) in s.points.iter().zip(errors) {
                let lo = if plot.log_y && b - e <= 0.0 { y.lo_value() } else { b - e };
                let (Some(px), Some(top), Some(bottom)) = (sx(&x, a), sy(&y, b + e), sy(&y, lo)) else {
                    continue;
                };
                let _ = writeln!(out, r#"<line x1="{px:.2}" y1="{top:.2}" x2="{px:.2}" y2="{bottom:.2}" stroke="{}"/>"#, s.color);
            }
        }
    }

    let labels = plot.series.iter().map(|s| (&s.label, &s.color)).chain(plot.bars.iter().map(|b| (&b.label, &b.color)));
    for (i, (label, color)) in labels.enumerate() {
        let ly = y1 + 16.0 + 16.0 * i as f64;
        let _ = writeln!(out, r#"<line x1="{}" y1="{ly}" x2="{}" y2="{ly}" stroke="{color}" stroke-width="3"/>"#, x1 - 150.0, x1 - 130.0);
        let _ = writeln!(out, r#"<text x="{}" y="{}">{}</text>"#, x1 - 124.0, ly + 4.0, escape(label));
    }
    out.push_str("</svg>\n");
    out
}
