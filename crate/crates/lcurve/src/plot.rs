//! Static SVG rendering of fitted learning curves.
//!
//! The x axis is linear in n^(-1/2) with n increasing to the right, so a
//! gamma = -0.5 curve draws as a straight line. Output is a pure function
//! of the inputs: rendering the same spec twice gives identical bytes.

use crate::error::{Error, Result};
use crate::fit::{self, Covariance};
use crate::io::Report;
use crate::model::{self, pow};
use crate::observations::ObservationSet;

/// Default cycle of curve colors.
pub const DEFAULT_PALETTE: [&str; 8] = [
    "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f",
];

const MARGIN_LEFT: f64 = 62.0;
const MARGIN_RIGHT: f64 = 18.0;
const MARGIN_TOP: f64 = 18.0;
const MARGIN_BOTTOM: f64 = 48.0;
const CURVE_SAMPLES: usize = 101;

#[derive(Debug, Clone)]
pub struct PlotCurve {
    pub report: Report,
    /// Measurements to draw as points; None plots the curve alone.
    pub observations: Option<ObservationSet>,
    pub label: String,
    /// Any SVG color string.
    pub color: String,
}

#[derive(Debug, Clone)]
pub struct PlotSpec {
    pub curves: Vec<PlotCurve>,
    /// Plotted size range (min_n, max_n), both >= 1.
    pub x_range: (f64, f64),
    /// Draw translucent 95% confidence bands.
    pub band: bool,
    /// Optional vertical dashed marker, e.g. at an extrapolation target.
    pub marker_n: Option<f64>,
    pub width: u32,
    pub height: u32,
}

struct Frame {
    width: f64,
    height: f64,
    u_left: f64,
    u_right: f64,
    y_min: f64,
    y_max: f64,
}

impl Frame {
    fn plot_w(&self) -> f64 {
        self.width - MARGIN_LEFT - MARGIN_RIGHT
    }

    fn plot_h(&self) -> f64 {
        self.height - MARGIN_TOP - MARGIN_BOTTOM
    }

    fn px_of_u(&self, u: f64) -> f64 {
        MARGIN_LEFT + self.plot_w() * (self.u_left - u) / (self.u_left - self.u_right)
    }

    fn px(&self, n: f64) -> f64 {
        self.px_of_u(pow(n, -0.5))
    }

    fn py(&self, e: f64) -> f64 {
        MARGIN_TOP + self.plot_h() * (self.y_max - e) / (self.y_max - self.y_min)
    }
}

fn escape_xml(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\'' => out.push_str("&apos;"),
            _ => out.push(c),
        }
    }
    out
}

fn fmt_tick(v: f64) -> String {
    if v.fract() == 0.0 && v.abs() < 1e15 {
        format!("{v:.0}")
    } else {
        format!("{v:.2}")
    }
}

/// Error curve and optional band sampled uniformly in u = n^(-1/2).
struct SampledCurve {
    xs: Vec<f64>,
    ys: Vec<f64>,
    band: Option<(Vec<f64>, Vec<f64>)>,
}

fn sample_curve(spec: &PlotSpec, curve: &PlotCurve, frame_u: (f64, f64)) -> Result<SampledCurve> {
    let (u_left, u_right) = frame_u;
    let covariance = Covariance::from_rows(&curve.report.covariance)?;
    let mut xs = Vec::with_capacity(CURVE_SAMPLES);
    let mut ys = Vec::with_capacity(CURVE_SAMPLES);
    let mut lo = Vec::with_capacity(CURVE_SAMPLES);
    let mut hi = Vec::with_capacity(CURVE_SAMPLES);
    for k in 0..CURVE_SAMPLES {
        let t = k as f64 / (CURVE_SAMPLES - 1) as f64;
        let u = u_left + (u_right - u_left) * t;
        let n = 1.0 / (u * u);
        xs.push(u);
        if spec.band {
            let (b_lo, b_hi) = fit::confidence_band_at(&curve.report.params, &covariance, n)?;
            ys.push((b_lo + b_hi) / 2.0);
            lo.push(b_lo);
            hi.push(b_hi);
        } else {
            ys.push(model::evaluate(&curve.report.params, n)?);
        }
    }
    let band = spec.band.then_some((lo, hi));
    Ok(SampledCurve { xs, ys, band })
}

/// Renders the spec to a standalone SVG document.
pub fn render_svg(spec: &PlotSpec) -> Result<String> {
    if spec.curves.is_empty() {
        return Err(Error::Config("plot needs at least one curve".into()));
    }
    let (n_min, n_max) = spec.x_range;
    if !(n_min.is_finite() && n_max.is_finite()) || n_min < 1.0 || n_min >= n_max {
        return Err(Error::Config(format!(
            "plot range must satisfy 1 <= min < max, got ({n_min}, {n_max})"
        )));
    }
    if spec.width < 200 || spec.height < 150 {
        return Err(Error::Config(format!(
            "plot must be at least 200x150, got {}x{}",
            spec.width, spec.height
        )));
    }

    let u_left = pow(n_min, -0.5);
    let u_right = pow(n_max, -0.5);
    let sampled: Vec<SampledCurve> = spec
        .curves
        .iter()
        .map(|c| sample_curve(spec, c, (u_left, u_right)))
        .collect::<Result<_>>()?;

    let mut y_min = f64::INFINITY;
    let mut y_max = f64::NEG_INFINITY;
    let mut track = |v: f64| {
        y_min = y_min.min(v);
        y_max = y_max.max(v);
    };
    for s in &sampled {
        for &y in &s.ys {
            track(y);
        }
        if let Some((lo, hi)) = &s.band {
            for &y in lo.iter().chain(hi) {
                track(y);
            }
        }
    }
    let in_range = |n: u64| (n as f64) >= n_min && (n as f64) <= n_max;
    for curve in &spec.curves {
        if let Some(obs) = &curve.observations {
            for group in obs.groups().iter().filter(|g| in_range(g.n())) {
                for e in group.errors() {
                    track(e);
                }
            }
        }
    }
    let span = y_max - y_min;
    let pad = if span > 0.0 { 0.05 * span } else { 1.0 };
    let frame = Frame {
        width: spec.width as f64,
        height: spec.height as f64,
        u_left,
        u_right,
        y_min: y_min - pad,
        y_max: y_max + pad,
    };

    let mut svg = String::new();
    svg.push_str("<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n");
    svg.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w}\" height=\"{h}\" \
         viewBox=\"0 0 {w} {h}\" font-family=\"sans-serif\" font-size=\"12\">\n",
        w = spec.width,
        h = spec.height
    ));
    svg.push_str(&format!(
        "<rect x=\"0\" y=\"0\" width=\"{}\" height=\"{}\" fill=\"white\"/>\n",
        spec.width, spec.height
    ));

    let x0 = MARGIN_LEFT;
    let x1 = frame.width - MARGIN_RIGHT;
    let y0 = MARGIN_TOP;
    let y1 = frame.height - MARGIN_BOTTOM;
    svg.push_str(&format!(
        "<line x1=\"{x0:.2}\" y1=\"{y1:.2}\" x2=\"{x1:.2}\" y2=\"{y1:.2}\" stroke=\"#333333\"/>\n"
    ));
    svg.push_str(&format!(
        "<line x1=\"{x0:.2}\" y1=\"{y0:.2}\" x2=\"{x0:.2}\" y2=\"{y1:.2}\" stroke=\"#333333\"/>\n"
    ));

    // X ticks at the observed sizes inside the range, or the endpoints when
    // no observations were supplied.
    let mut tick_sizes: Vec<u64> = spec
        .curves
        .iter()
        .filter_map(|c| c.observations.as_ref())
        .flat_map(|o| o.sizes().collect::<Vec<_>>())
        .filter(|&n| in_range(n))
        .collect();
    tick_sizes.sort_unstable();
    tick_sizes.dedup();
    let tick_labels: Vec<(f64, String)> = if tick_sizes.is_empty() {
        vec![(frame.px(n_min), fmt_tick(n_min)), (frame.px(n_max), fmt_tick(n_max))]
    } else {
        tick_sizes.iter().map(|&n| (frame.px(n as f64), n.to_string())).collect()
    };
    for (x, label) in &tick_labels {
        svg.push_str(&format!(
            "<line x1=\"{x:.2}\" y1=\"{y1:.2}\" x2=\"{x:.2}\" y2=\"{:.2}\" stroke=\"#333333\"/>\n",
            y1 + 4.0
        ));
        svg.push_str(&format!(
            "<text x=\"{x:.2}\" y=\"{:.2}\" text-anchor=\"middle\">{label}</text>\n",
            y1 + 18.0
        ));
    }
    for j in 0..5 {
        let e = frame.y_max - (frame.y_max - frame.y_min) * j as f64 / 4.0;
        let y = frame.py(e);
        svg.push_str(&format!(
            "<line x1=\"{:.2}\" y1=\"{y:.2}\" x2=\"{x0:.2}\" y2=\"{y:.2}\" stroke=\"#333333\"/>\n",
            x0 - 4.0
        ));
        svg.push_str(&format!(
            "<text x=\"{:.2}\" y=\"{:.2}\" text-anchor=\"end\">{e:.1}</text>\n",
            x0 - 7.0,
            y + 4.0
        ));
    }
    svg.push_str(&format!(
        "<text x=\"{:.2}\" y=\"{:.2}\" text-anchor=\"middle\">training set size n (linear in n^-0.5)</text>\n",
        (x0 + x1) / 2.0,
        frame.height - 10.0
    ));
    svg.push_str(&format!(
        "<text x=\"14\" y=\"{:.2}\" text-anchor=\"middle\" transform=\"rotate(-90 14 {:.2})\">error (%)</text>\n",
        (y0 + y1) / 2.0,
        (y0 + y1) / 2.0
    ));

    // Bands under curves, curves under points.
    for (curve, s) in spec.curves.iter().zip(&sampled) {
        if let Some((lo, hi)) = &s.band {
            let mut points = String::new();
            for (u, e) in s.xs.iter().zip(hi) {
                points.push_str(&format!("{:.2},{:.2} ", frame.px_of_u(*u), frame.py(*e)));
            }
            for (u, e) in s.xs.iter().rev().zip(lo.iter().rev()) {
                points.push_str(&format!("{:.2},{:.2} ", frame.px_of_u(*u), frame.py(*e)));
            }
            svg.push_str(&format!(
                "<polygon points=\"{}\" fill=\"{}\" fill-opacity=\"0.2\" stroke=\"none\"/>\n",
                points.trim_end(),
                escape_xml(&curve.color)
            ));
        }
    }
    for (curve, s) in spec.curves.iter().zip(&sampled) {
        let mut points = String::new();
        for (u, e) in s.xs.iter().zip(&s.ys) {
            points.push_str(&format!("{:.2},{:.2} ", frame.px_of_u(*u), frame.py(*e)));
        }
        svg.push_str(&format!(
            "<polyline points=\"{}\" fill=\"none\" stroke=\"{}\" stroke-width=\"1.5\"/>\n",
            points.trim_end(),
            escape_xml(&curve.color)
        ));
    }
    for curve in &spec.curves {
        if let Some(obs) = &curve.observations {
            for group in obs.groups().iter().filter(|g| in_range(g.n())) {
                for e in group.errors() {
                    svg.push_str(&format!(
                        "<circle cx=\"{:.2}\" cy=\"{:.2}\" r=\"3\" fill=\"{}\" fill-opacity=\"0.85\"/>\n",
                        frame.px(group.n() as f64),
                        frame.py(e),
                        escape_xml(&curve.color)
                    ));
                }
            }
        }
    }

    if let Some(m) = spec.marker_n {
        if m >= n_min && m <= n_max {
            let x = frame.px(m);
            svg.push_str(&format!(
                "<line x1=\"{x:.2}\" y1=\"{y0:.2}\" x2=\"{x:.2}\" y2=\"{y1:.2}\" \
                 stroke=\"#666666\" stroke-dasharray=\"4,3\"/>\n"
            ));
        }
    }

    for (i, curve) in spec.curves.iter().enumerate() {
        let s = &curve.report.summary;
        let text = format!(
            "{}\u{03b3}={:.2}, e_N={:.1}, \u{03b2}_N={:.1}",
            if curve.label.is_empty() { String::new() } else { format!("{}: ", curve.label) },
            s.gamma,
            s.e_ref,
            s.beta_ref
        );
        let lx = x1 - 232.0;
        let ly = y0 + 10.0 + 18.0 * i as f64;
        svg.push_str(&format!(
            "<rect x=\"{lx:.2}\" y=\"{:.2}\" width=\"12\" height=\"12\" fill=\"{}\"/>\n",
            ly - 10.0,
            escape_xml(&curve.color)
        ));
        svg.push_str(&format!(
            "<text x=\"{:.2}\" y=\"{ly:.2}\">{}</text>\n",
            lx + 16.0,
            escape_xml(&text)
        ));
    }

    svg.push_str("</svg>\n");
    Ok(svg)
}
