//! CSV and SVG emission. Everything here is a pure function of its inputs,
//! so identical runs produce identical bytes.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use oam_eraser::analysis::FringeFit;
use oam_eraser::experiment::{ScanSeries, ScanVariable};

use crate::CliError;

pub const SERIES_HEADER: [&str; 4] = ["setting_rad", "p_joint", "p_conditional", "counts"];

/// `%.12g`: 12 significant digits, trailing zeros dropped, exponent form
/// outside [1e-4, 1e12).
pub fn fmt_g(x: f64) -> String {
    const DIGITS: i32 = 12;
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return format!("{x}");
    }
    let sci = format!("{:.*e}", (DIGITS - 1) as usize, x);
    let (mantissa, exp) = sci.split_once('e').expect("exponent form");
    let exp: i32 = exp.parse().expect("integer exponent");
    if !(-4..DIGITS).contains(&exp) {
        let m = trim_zeros(mantissa);
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{m}e{sign}{:02}", exp.abs())
    } else {
        let decimals = (DIGITS - 1 - exp).max(0) as usize;
        trim_zeros(&format!("{x:.decimals$}")).to_string()
    }
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

fn csv_bytes(header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> Result<Vec<u8>, CliError> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
    w.write_record(header).map_err(|e| CliError::Io(e.to_string()))?;
    for row in rows {
        w.write_record(&row).map_err(|e| CliError::Io(e.to_string()))?;
    }
    w.into_inner().map_err(|e| CliError::Io(e.to_string()))
}

/// `setting_rad,p_joint,p_conditional,counts`, counts left empty when the
/// series was not sampled.
pub fn series_csv(series: &ScanSeries) -> Result<Vec<u8>, CliError> {
    let rows = (0..series.len()).map(|i| {
        vec![
            fmt_g(series.settings[i]),
            fmt_g(series.joint[i]),
            fmt_g(series.conditional[i]),
            series.counts.as_ref().map(|c| c[i].to_string()).unwrap_or_default(),
        ]
    });
    csv_bytes(&SERIES_HEADER, rows)
}

pub fn summary_csv(fit: &FringeFit, visibility: f64) -> Result<Vec<u8>, CliError> {
    csv_bytes(
        &["visibility", "offset", "amplitude", "phase_rad", "residual_rms"],
        [vec![
            fmt_g(visibility),
            fmt_g(fit.offset),
            fmt_g(fit.amplitude),
            fmt_g(fit.phase),
            fmt_g(fit.residual_rms),
        ]],
    )
}

/// Generic table with every value printed via [`fmt_g`].
pub fn table_csv(header: &[&str], rows: &[Vec<f64>]) -> Result<Vec<u8>, CliError> {
    csv_bytes(header, rows.iter().map(|r| r.iter().map(|&v| fmt_g(v)).collect()))
}

/// Reads a θ-series CSV back (as written by [`series_csv`]). Counts are
/// kept only when every row has one.
pub fn read_series_csv(path: &Path) -> Result<ScanSeries, CliError> {
    let mut r = csv::Reader::from_path(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    let header = r.headers().map_err(|e| CliError::Io(e.to_string()))?.clone();
    if header.iter().collect::<Vec<_>>() != SERIES_HEADER {
        return Err(CliError::Input(format!("{}: expected header {}", path.display(), SERIES_HEADER.join(","))));
    }
    let (mut s, mut j, mut c, mut n) = (Vec::new(), Vec::new(), Vec::new(), Vec::new());
    let mut all_counts = true;
    for (line, rec) in r.records().enumerate() {
        let rec = rec.map_err(|e| CliError::Io(e.to_string()))?;
        let num = |k: usize| -> Result<f64, CliError> {
            rec[k].parse().map_err(|_| CliError::Input(format!("row {}: bad number {:?}", line + 2, &rec[k])))
        };
        s.push(num(0)?);
        j.push(num(1)?);
        c.push(num(2)?);
        if rec[3].is_empty() {
            all_counts = false;
        } else {
            n.push(rec[3].parse().map_err(|_| CliError::Input(format!("row {}: bad count {:?}", line + 2, &rec[3])))?);
        }
    }
    Ok(ScanSeries {
        variable: ScanVariable::Theta,
        fixed: 0.0,
        settings: s,
        joint: j,
        conditional: c,
        counts: all_counts.then_some(n),
        fit: None,
    })
}

pub fn write_file(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    fs::write(path, bytes).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

const W: f64 = 640.0;
const H: f64 = 400.0;
const MARGIN: f64 = 50.0;

/// Line plot of `ys` against `xs`, with the optional fitted curve dashed.
pub fn line_plot_svg(title: &str, xs: &[f64], ys: &[f64], fit: Option<&FringeFit>) -> String {
    let (x0, x1) = bounds(xs);
    let (mut y0, mut y1) = bounds(ys);
    if let Some(f) = fit {
        y0 = y0.min(f.offset - f.amplitude);
        y1 = y1.max(f.offset + f.amplitude);
    }
    y0 = y0.min(0.0);
    if y1 <= y0 {
        y1 = y0 + 1.0;
    }
    let px = |x: f64| MARGIN + (x - x0) / (x1 - x0).max(f64::MIN_POSITIVE) * (W - 2.0 * MARGIN);
    let py = |y: f64| H - MARGIN - (y - y0) / (y1 - y0) * (H - 2.0 * MARGIN);
    let mut s = header_svg(W, H);
    let _ = writeln!(s, r#"<text x="{}" y="24" text-anchor="middle" font-family="sans-serif" font-size="14">{}</text>"#, W / 2.0, escape(title));
    let _ = writeln!(
        s,
        r#"<path d="M{m} {b} H{r} M{m} {b} V{m}" stroke="black" fill="none"/>"#,
        m = MARGIN,
        b = H - MARGIN,
        r = W - MARGIN
    );
    for (v, anchor) in [(y0, H - MARGIN), (y1, MARGIN)] {
        let _ = writeln!(s, r#"<text x="{}" y="{:.2}" text-anchor="end" font-family="sans-serif" font-size="10">{}</text>"#, MARGIN - 4.0, anchor + 3.0, fmt_g(v));
    }
    for (v, anchor) in [(x0, MARGIN), (x1, W - MARGIN)] {
        let _ = writeln!(s, r#"<text x="{:.2}" y="{}" text-anchor="middle" font-family="sans-serif" font-size="10">{}</text>"#, anchor, H - MARGIN + 14.0, fmt_g(v));
    }
    if let Some(f) = fit {
        let n = 256;
        let pts: Vec<(f64, f64)> = (0..=n).map(|i| x0 + (x1 - x0) * i as f64 / n as f64).map(|x| (px(x), py(f.eval(x)))).collect();
        let _ = writeln!(s, r#"<polyline points="{}" stroke="gray" stroke-dasharray="4 3" fill="none"/>"#, points(&pts));
    }
    let pts: Vec<(f64, f64)> = xs.iter().zip(ys).map(|(&x, &y)| (px(x), py(y))).collect();
    let _ = writeln!(s, r#"<polyline points="{}" stroke="steelblue" fill="none"/>"#, points(&pts));
    for (x, y) in pts {
        let _ = writeln!(s, r#"<circle cx="{x:.2}" cy="{y:.2}" r="2" fill="steelblue"/>"#);
    }
    s.push_str("</svg>\n");
    s
}

/// Polar plot r(φ) of an azimuthal intensity sampled on [0, 2π).
pub fn polar_plot_svg(title: &str, intensity: &[f64]) -> String {
    let size = 400.0;
    let c = size / 2.0;
    let r_max = c - 30.0;
    let peak = intensity.iter().copied().fold(0.0, f64::max).max(f64::MIN_POSITIVE);
    let n = intensity.len();
    let pts: Vec<(f64, f64)> = intensity
        .iter()
        .enumerate()
        .map(|(i, &v)| {
            let phi = 2.0 * std::f64::consts::PI * i as f64 / n as f64;
            let r = r_max * v / peak;
            (c + r * phi.cos(), c - r * phi.sin())
        })
        .collect();
    let mut s = header_svg(size, size);
    let _ = writeln!(s, r#"<text x="{c}" y="18" text-anchor="middle" font-family="sans-serif" font-size="14">{}</text>"#, escape(title));
    let _ = writeln!(s, r#"<circle cx="{c}" cy="{c}" r="{r_max}" stroke="lightgray" fill="none"/>"#);
    let _ = writeln!(s, r#"<polygon points="{}" stroke="darkred" fill="mistyrose"/>"#, points(&pts));
    s.push_str("</svg>\n");
    s
}

fn header_svg(w: f64, h: f64) -> String {
    format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w}\" height=\"{h}\" viewBox=\"0 0 {w} {h}\">\n<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
    )
}

fn points(pts: &[(f64, f64)]) -> String {
    pts.iter().map(|(x, y)| format!("{x:.2},{y:.2}")).collect::<Vec<_>>().join(" ")
}

fn bounds(v: &[f64]) -> (f64, f64) {
    let lo = v.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if lo.is_finite() {
        (lo, hi)
    } else {
        (0.0, 1.0)
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}
