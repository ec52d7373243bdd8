//! Line plots rendered straight from a report CSV.

use anyhow::{bail, Context, Result};
use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

#[derive(Debug, Clone)]
pub struct PlotSpec {
    pub x: String,
    pub y: String,
    pub group: Option<String>,
    pub log_x: bool,
    pub log_y: bool,
    pub title: String,
}

const W: f64 = 640.0;
const H: f64 = 420.0;
const LEFT: f64 = 70.0;
const RIGHT: f64 = 150.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 50.0;
const COLORS: [&str; 8] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#e377c2", "#17becf"];

/// Series keyed by group label, points in CSV order. Rows with empty or
/// non-numeric cells, or non-positive values on a log axis, are skipped.
pub fn read_series(csv_path: &Path, spec: &PlotSpec) -> Result<BTreeMap<String, Vec<(f64, f64)>>> {
    let mut rd = csv::Reader::from_path(csv_path).with_context(|| format!("opening {}", csv_path.display()))?;
    let headers = rd.headers()?.clone();
    let col = |name: &str| {
        headers.iter().position(|h| h == name).with_context(|| format!("no column `{name}` in {}", csv_path.display()))
    };
    let xi = col(&spec.x)?;
    let yi = col(&spec.y)?;
    let gi = spec.group.as_deref().map(col).transpose()?;
    let mut out: BTreeMap<String, Vec<(f64, f64)>> = BTreeMap::new();
    for rec in rd.records() {
        let rec = rec?;
        let (Ok(x), Ok(y)) = (rec[xi].parse::<f64>(), rec[yi].parse::<f64>()) else { continue };
        if (spec.log_x && x <= 0.0) || (spec.log_y && y <= 0.0) || !x.is_finite() || !y.is_finite() {
            continue;
        }
        let g = gi.map(|i| rec[i].to_string()).unwrap_or_default();
        out.entry(g).or_default().push((x, y));
    }
    Ok(out)
}

pub fn render(series: &BTreeMap<String, Vec<(f64, f64)>>, spec: &PlotSpec) -> Result<String> {
    let tx = |v: f64| if spec.log_x { v.log10() } else { v };
    let ty = |v: f64| if spec.log_y { v.log10() } else { v };
    let pts: Vec<(f64, f64)> = series.values().flatten().map(|&(x, y)| (tx(x), ty(y))).collect();
    if pts.is_empty() {
        bail!("nothing to plot for {} against {}", spec.y, spec.x);
    }
    let (mut x0, mut x1, mut y0, mut y1) = bounds(&pts);
    if x1 - x0 < 1e-12 {
        x0 -= 0.5;
        x1 += 0.5;
    }
    if y1 - y0 < 1e-12 {
        y0 -= 0.5;
        y1 += 0.5;
    }
    let pw = W - LEFT - RIGHT;
    let ph = H - TOP - BOTTOM;
    let sx = |v: f64| LEFT + (v - x0) / (x1 - x0) * pw;
    let sy = |v: f64| TOP + ph - (v - y0) / (y1 - y0) * ph;

    let mut s = String::new();
    writeln!(s, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}" font-family="sans-serif" font-size="12">"#)?;
    writeln!(s, r#"<rect width="{W}" height="{H}" fill="white"/>"#)?;
    writeln!(s, r#"<text x="{}" y="22" text-anchor="middle" font-size="14">{}</text>"#, LEFT + pw / 2.0, esc(&spec.title))?;
    writeln!(s, r#"<rect x="{LEFT}" y="{TOP}" width="{pw}" height="{ph}" fill="none" stroke="black"/>"#)?;
    for (v, label) in ticks(x0, x1, spec.log_x) {
        let x = sx(v);
        writeln!(s, r#"<line x1="{x:.2}" y1="{}" x2="{x:.2}" y2="{}" stroke="black"/>"#, TOP + ph, TOP + ph + 5.0)?;
        writeln!(s, r#"<text x="{x:.2}" y="{}" text-anchor="middle">{label}</text>"#, TOP + ph + 18.0)?;
    }
    for (v, label) in ticks(y0, y1, spec.log_y) {
        let y = sy(v);
        writeln!(s, r#"<line x1="{}" y1="{y:.2}" x2="{LEFT}" y2="{y:.2}" stroke="black"/>"#, LEFT - 5.0)?;
        writeln!(s, r#"<text x="{}" y="{:.2}" text-anchor="end">{label}</text>"#, LEFT - 8.0, y + 4.0)?;
    }
    let axis = |name: &str, log: bool| if log { format!("{name} (log)") } else { name.to_string() };
    writeln!(s, r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#, LEFT + pw / 2.0, H - 10.0, esc(&axis(&spec.x, spec.log_x)))?;
    writeln!(
        s,
        r#"<text x="16" y="{0}" text-anchor="middle" transform="rotate(-90 16 {0})">{1}</text>"#,
        TOP + ph / 2.0,
        esc(&axis(&spec.y, spec.log_y))
    )?;
    for (i, (label, pts)) in series.iter().enumerate() {
        let color = COLORS[i % COLORS.len()];
        let path: Vec<String> = pts.iter().map(|&(x, y)| format!("{:.2},{:.2}", sx(tx(x)), sy(ty(y)))).collect();
        writeln!(s, r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="1.5"/>"#, path.join(" "))?;
        for &(x, y) in pts {
            writeln!(s, r#"<circle cx="{:.2}" cy="{:.2}" r="3" fill="{color}"/>"#, sx(tx(x)), sy(ty(y)))?;
        }
        let ly = TOP + 14.0 + 18.0 * i as f64;
        let lx = W - RIGHT + 12.0;
        writeln!(s, r#"<line x1="{lx}" y1="{ly}" x2="{}" y2="{ly}" stroke="{color}" stroke-width="2"/>"#, lx + 18.0)?;
        let name = if label.is_empty() { spec.y.as_str() } else { label.as_str() };
        writeln!(s, r#"<text x="{}" y="{}">{}</text>"#, lx + 24.0, ly + 4.0, esc(name))?;
    }
    s.push_str("</svg>\n");
    Ok(s)
}

pub fn plot_csv(csv_path: &Path, spec: &PlotSpec, svg_path: &Path) -> Result<()> {
    let series = read_series(csv_path, spec)?;
    let svg = render(&series, spec)?;
    std::fs::write(svg_path, svg).with_context(|| format!("writing {}", svg_path.display()))
}

fn bounds(pts: &[(f64, f64)]) -> (f64, f64, f64, f64) {
    pts.iter().fold((f64::MAX, f64::MIN, f64::MAX, f64::MIN), |(a, b, c, d), &(x, y)| {
        (a.min(x), b.max(x), c.min(y), d.max(y))
    })
}

/// About five ticks; on log axes, at integer powers of ten when the span allows.
fn ticks(lo: f64, hi: f64, log: bool) -> Vec<(f64, String)> {
    let raw = (hi - lo) / 5.0;
    let mag = 10f64.powf(raw.log10().floor());
    let step = [1.0, 2.0, 5.0, 10.0].iter().map(|m| m * mag).find(|s| *s >= raw).unwrap_or(10.0 * mag);
    let step = if log { step.max(1.0).round() } else { step };
    let mut out = Vec::new();
    let mut v = (lo / step).ceil() * step;
    while v <= hi + 1e-9 * step {
        let label = if log { format!("1e{}", v.round() as i64) } else { short(v) };
        out.push((v, label));
        v += step;
    }
    out
}

fn short(v: f64) -> String {
    if v == 0.0 {
        "0".into()
    } else if v.abs() >= 1e4 || v.abs() < 1e-2 {
        format!("{v:.1e}")
    } else {
        let s = format!("{v:.3}");
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    }
}

fn esc(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}
