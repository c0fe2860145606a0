//! History CSV, JSON summaries and static SVG convergence plots.
//!
//! History schema, one row per recorded iteration:
//!
//! ```text
//! iter,berr,residual_norm,x_norm,wall_nanos
//! ```
//!
//! `iter` and `wall_nanos` are integers; the three norms are written with 17
//! significant digits (`d.dddddddddddddddde±x`), enough to round-trip any `f64`.

use std::fmt::Write as _;
use std::io::Write as _;
use std::path::Path;

use berr_core::Trace;
use serde::Serialize;

use crate::CliError;

pub const HISTORY_HEADER: &str = "iter,berr,residual_norm,x_norm,wall_nanos";

pub fn history_csv(trace: &Trace) -> String {
    let mut s = String::with_capacity(64 * (trace.len() + 1));
    s.push_str(HISTORY_HEADER);
    s.push('\n');
    for p in trace.iter() {
        let _ = writeln!(
            s,
            "{},{:.16e},{:.16e},{:.16e},{}",
            p.k, p.berr, p.residual_norm, p.x_norm, p.wall_nanos
        );
    }
    s
}

fn write_file(path: &Path, contents: &[u8]) -> Result<(), CliError> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)
            .map_err(|e| CliError::io("cannot create directory", dir, e))?;
    }
    std::fs::write(path, contents).map_err(|e| CliError::io("cannot write", path, e))
}

pub fn write_history(path: &Path, trace: &Trace) -> Result<(), CliError> {
    write_file(path, history_csv(trace).as_bytes())
}

/// Pretty-printed JSON; the path `-` means stdout.
pub fn write_json<S: Serialize>(path: &Path, value: &S) -> Result<(), CliError> {
    let mut text =
        serde_json::to_string_pretty(value).map_err(|e| CliError::Spec(e.to_string()))?;
    text.push('\n');
    if path.as_os_str() == "-" {
        let mut out = std::io::stdout().lock();
        out.write_all(text.as_bytes())
            .and_then(|()| out.flush())
            .map_err(|e| CliError::io("cannot write", path, e))
    } else {
        write_file(path, text.as_bytes())
    }
}

pub fn write_summary(path: &Path, summary: &crate::Summary) -> Result<(), CliError> {
    write_json(path, summary)
}

/// One labelled curve `(k, berr)`.
#[derive(Debug, Clone)]
pub struct Series {
    pub label: String,
    pub points: Vec<(f64, f64)>,
}

impl Series {
    pub fn from_trace(label: &str, trace: &Trace) -> Self {
        Self {
            label: label.into(),
            points: trace.iter().map(|p| (p.k as f64, p.berr)).collect(),
        }
    }
}

const WIDTH: f64 = 760.0;
const HEIGHT: f64 = 480.0;
const LEFT: f64 = 70.0;
const RIGHT: f64 = 190.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 50.0;
const PALETTE: [&str; 8] = [
    "#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf",
];

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

fn usable(&(x, y): &(f64, f64)) -> bool {
    x >= 1.0 && x.is_finite() && y > 0.0 && y.is_finite()
}

/// Log–log plot of the series with the reference rates `1/k` and `1/k²`.
pub fn render_loglog(title: &str, series: &[Series]) -> String {
    let k_max = series
        .iter()
        .flat_map(|s| s.points.iter().filter(|p| usable(p)).map(|p| p.0))
        .fold(1.0_f64, f64::max);
    let x_hi = k_max.log10().ceil().max(1.0);
    type Rate = (&'static str, fn(f64) -> f64);
    let refs: [Rate; 2] = [("1/k", |k| 1.0 / k), ("1/k²", |k| 1.0 / (k * k))];
    let samples: Vec<f64> = (0..=200)
        .map(|i| 10f64.powf(x_hi * f64::from(i) / 200.0))
        .collect();

    let data_y = series
        .iter()
        .flat_map(|s| s.points.iter().filter(|p| usable(p)).map(|p| p.1));
    let (lo, hi) = data_y.fold((1.0_f64, 1.0_f64), |(lo, hi), y| (lo.min(y), hi.max(y)));
    let y_lo = lo.min(10f64.powf(-2.0 * x_hi)).log10().floor().max(-20.0);
    let y_hi = hi.log10().ceil().max(y_lo + 1.0);

    let pw = WIDTH - LEFT - RIGHT;
    let ph = HEIGHT - TOP - BOTTOM;
    let px = |k: f64| LEFT + pw * k.log10() / x_hi;
    let py = |y: f64| TOP + ph * (y_hi - y.log10().clamp(y_lo, y_hi)) / (y_hi - y_lo);

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<text x="{}" y="22" text-anchor="middle" font-size="14">{}</text>"#,
        LEFT + pw / 2.0,
        escape(title)
    );
    let _ = writeln!(s, r##"<g stroke="#e0e0e0" stroke-width="1">"##);
    for e in 0..=x_hi as i32 {
        let x = px(10f64.powi(e));
        let _ = writeln!(
            s,
            r#"<line x1="{x:.2}" y1="{TOP}" x2="{x:.2}" y2="{:.2}"/>"#,
            TOP + ph
        );
    }
    for e in y_lo as i32..=y_hi as i32 {
        let y = py(10f64.powi(e));
        let _ = writeln!(
            s,
            r#"<line x1="{LEFT}" y1="{y:.2}" x2="{:.2}" y2="{y:.2}"/>"#,
            LEFT + pw
        );
    }
    let _ = writeln!(s, "</g>");
    let _ = writeln!(
        s,
        r#"<rect x="{LEFT}" y="{TOP}" width="{pw}" height="{ph}" fill="none" stroke="black"/>"#
    );
    for e in 0..=x_hi as i32 {
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">1e{e}</text>"#,
            px(10f64.powi(e)),
            TOP + ph + 18.0
        );
    }
    let y_step = ((y_hi - y_lo) / 10.0).ceil().max(1.0) as usize;
    for e in (y_lo as i32..=y_hi as i32).step_by(y_step) {
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="end">1e{e}</text>"#,
            LEFT - 6.0,
            py(10f64.powi(e)) + 4.0
        );
    }
    let _ = writeln!(
        s,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">iteration k</text>"#,
        LEFT + pw / 2.0,
        HEIGHT - 10.0
    );
    let _ = writeln!(
        s,
        r#"<text x="16" y="{:.2}" text-anchor="middle" transform="rotate(-90 16 {:.2})">backward error</text>"#,
        TOP + ph / 2.0,
        TOP + ph / 2.0
    );

    let polyline = |pts: &mut dyn Iterator<Item = (f64, f64)>| {
        pts.map(|(k, y)| format!("{:.2},{:.2}", px(k), py(y)))
            .collect::<Vec<_>>()
            .join(" ")
    };
    let mut legend = Vec::new();
    for (name, f) in refs {
        let pts = polyline(&mut samples.iter().map(|&k| (k, f(k))));
        let _ = writeln!(
            s,
            r##"<polyline fill="none" stroke="#777777" stroke-width="1.2" stroke-dasharray="6 4" points="{pts}"/>"##
        );
        legend.push((name.to_string(), "#777777", true));
    }
    for (i, ser) in series.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let pts = polyline(&mut ser.points.iter().copied().filter(usable));
        if !pts.is_empty() {
            let _ = writeln!(
                s,
                r#"<polyline fill="none" stroke="{color}" stroke-width="1.6" points="{pts}"/>"#
            );
        }
        legend.push((ser.label.clone(), color, false));
    }
    for (i, (label, color, dashed)) in legend.iter().enumerate() {
        let y = TOP + 12.0 + 18.0 * i as f64;
        let x = LEFT + pw + 14.0;
        let dash = if *dashed {
            r#" stroke-dasharray="6 4""#
        } else {
            ""
        };
        let _ = writeln!(
            s,
            r#"<line x1="{x:.2}" y1="{y:.2}" x2="{:.2}" y2="{y:.2}" stroke="{color}" stroke-width="2"{dash}/>"#,
            x + 24.0
        );
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="{:.2}">{}</text>"#,
            x + 30.0,
            y + 4.0,
            escape(label)
        );
    }
    s.push_str("</svg>\n");
    s
}

pub fn write_plot(path: &Path, title: &str, series: &[Series]) -> Result<(), CliError> {
    write_file(path, render_loglog(title, series).as_bytes())
}
