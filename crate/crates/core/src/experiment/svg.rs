//! Minimal static SVG line charts for sweep results.

use std::fmt::Write;

use super::results::{SeRow, SweepRow};

const W: f64 = 640.0;
const H: f64 = 420.0;
const LEFT: f64 = 70.0;
const RIGHT: f64 = 170.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 50.0;
const PALETTE: [&str; 8] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#e377c2", "#17becf"];

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Style {
    Line,
    Markers,
}

#[derive(Debug, Clone)]
pub struct Series {
    pub label: String,
    pub points: Vec<(f64, f64)>,
    pub style: Style,
    pub color: usize,
}

/// Renders series on linear x and log10 y axes.
pub fn render(title: &str, x_label: &str, y_label: &str, series: &[Series]) -> String {
    let pts = series.iter().flat_map(|s| s.points.iter()).filter(|(x, y)| x.is_finite() && *y > 0.0 && y.is_finite());
    let (mut x0, mut x1, mut y0, mut y1) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
    for &(x, y) in pts {
        x0 = x0.min(x);
        x1 = x1.max(x);
        y0 = y0.min(y.log10());
        y1 = y1.max(y.log10());
    }
    if !x0.is_finite() {
        (x0, x1, y0, y1) = (0.0, 1.0, -1.0, 0.0);
    }
    if x1 <= x0 {
        x1 = x0 + 1.0;
    }
    y0 = y0.floor();
    y1 = y1.ceil().max(y0 + 1.0);
    let px = |x: f64| LEFT + (x - x0) / (x1 - x0) * (W - LEFT - RIGHT);
    let py = |y: f64| TOP + (y1 - y.max(10f64.powf(y0)).log10()) / (y1 - y0) * (H - TOP - BOTTOM);

    let mut s = String::new();
    let _ = writeln!(s, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" font-family="sans-serif" font-size="12">"#);
    let _ = writeln!(s, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
    let _ = writeln!(s, r#"<text x="{}" y="22" text-anchor="middle" font-size="14">{}</text>"#, (LEFT + W - RIGHT) / 2.0, escape(title));
    let (bx, by) = (LEFT, H - BOTTOM);
    let _ = writeln!(s, r#"<path d="M{bx},{TOP} V{by} H{}" stroke="black" fill="none"/>"#, W - RIGHT);
    for e in (y0 as i32)..=(y1 as i32) {
        let y = py(10f64.powi(e));
        let _ = writeln!(s, r##"<line x1="{bx}" x2="{}" y1="{y}" y2="{y}" stroke="#ddd"/>"##, W - RIGHT);
        let _ = writeln!(s, r#"<text x="{}" y="{}" text-anchor="end">1e{e}</text>"#, bx - 6.0, y + 4.0);
    }
    for i in 0..=5 {
        let x = x0 + (x1 - x0) * i as f64 / 5.0;
        let _ = writeln!(s, r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#, px(x), by + 18.0, tick(x));
    }
    let _ = writeln!(s, r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#, (LEFT + W - RIGHT) / 2.0, H - 10.0, escape(x_label));
    let _ = writeln!(s, r#"<text x="16" y="{}" text-anchor="middle" transform="rotate(-90 16 {})">{}</text>"#, H / 2.0, H / 2.0, escape(y_label));

    for (i, ser) in series.iter().enumerate() {
        let color = PALETTE[ser.color % PALETTE.len()];
        let visible: Vec<(f64, f64)> = ser.points.iter().copied().filter(|(x, y)| x.is_finite() && y.is_finite()).collect();
        match ser.style {
            Style::Line => {
                let d: Vec<String> = visible.iter().map(|&(x, y)| format!("{:.2},{:.2}", px(x), py(y))).collect();
                if !d.is_empty() {
                    let _ = writeln!(s, r#"<polyline points="{}" stroke="{color}" stroke-width="1.5" fill="none"/>"#, d.join(" "));
                }
            }
            Style::Markers => {
                for &(x, y) in &visible {
                    let _ = writeln!(s, r#"<circle cx="{:.2}" cy="{:.2}" r="2.5" fill="none" stroke="{color}"/>"#, px(x), py(y));
                }
            }
        }
        let ly = TOP + 16.0 * i as f64;
        let lx = W - RIGHT + 12.0;
        match ser.style {
            Style::Line => {
                let _ = writeln!(s, r#"<line x1="{lx}" x2="{}" y1="{ly}" y2="{ly}" stroke="{color}" stroke-width="1.5"/>"#, lx + 18.0);
            }
            Style::Markers => {
                let _ = writeln!(s, r#"<circle cx="{}" cy="{ly}" r="2.5" fill="none" stroke="{color}"/>"#, lx + 9.0);
            }
        }
        let _ = writeln!(s, r#"<text x="{}" y="{}">{}</text>"#, lx + 24.0, ly + 4.0, escape(&ser.label));
    }
    s.push_str("</svg>\n");
    s
}

fn tick(x: f64) -> String {
    if x.fract() == 0.0 && x.abs() < 1e6 {
        format!("{x:.0}")
    } else {
        format!("{x:.2}")
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn label(beta: f64, rho: f64) -> String {
    if rho.is_nan() {
        format!("β={beta}")
    } else {
        format!("β={beta} ρ={rho}")
    }
}

fn groups(rows: &[SweepRow]) -> Vec<Vec<SweepRow>> {
    let mut out: Vec<Vec<SweepRow>> = Vec::new();
    for r in rows {
        match out.last_mut() {
            Some(g) if g[0].beta.to_bits() == r.beta.to_bits() && g[0].rho.to_bits() == r.rho.to_bits() => g.push(*r),
            _ => out.push(vec![*r]),
        }
    }
    out
}

/// MSE against iteration: SE as lines, the AMP mean as markers.
pub fn iteration_chart(rows: &[SweepRow]) -> String {
    let mut series = Vec::new();
    for (i, g) in groups(rows).iter().enumerate() {
        let name = label(g[0].beta, g[0].rho);
        series.push(Series {
            label: format!("SE {name}"),
            points: g.iter().map(|r| (r.iter as f64, r.mse_se)).collect(),
            style: Style::Line,
            color: i,
        });
        series.push(Series {
            label: format!("AMP {name}"),
            points: g.iter().map(|r| (r.iter as f64, r.mse_amp_mean)).collect(),
            style: Style::Markers,
            color: i,
        });
    }
    render("MSE per iteration", "iteration", "MSE", &series)
}

/// Final MSE against β, one curve per ρ.
pub fn beta_chart(rows: &[SweepRow]) -> String {
    // Per ρ: (β, AMP final MSE, SE final MSE).
    type Finals = Vec<(f64, f64, f64)>;
    let mut by_rho: Vec<(f64, Finals)> = Vec::new();
    for g in groups(rows) {
        let last = g.last().expect("non-empty group");
        let entry = (last.beta, last.mse_amp_mean, last.mse_se);
        match by_rho.iter_mut().find(|(r, _)| r.to_bits() == last.rho.to_bits()) {
            Some((_, v)) => v.push(entry),
            None => by_rho.push((last.rho, vec![entry])),
        }
    }
    let mut series = Vec::new();
    for (i, (rho, pts)) in by_rho.iter_mut().enumerate() {
        pts.sort_by(|a, b| a.0.total_cmp(&b.0));
        let name = if rho.is_nan() { String::new() } else { format!(" ρ={rho}") };
        series.push(Series { label: format!("SE{name}"), points: pts.iter().map(|p| (p.0, p.2)).collect(), style: Style::Line, color: i });
        series.push(Series { label: format!("AMP{name}"), points: pts.iter().map(|p| (p.0, p.1)).collect(), style: Style::Markers, color: i });
    }
    render("Final MSE against β", "β", "MSE", &series)
}

/// SE MSE against iteration, one line per sweep point.
pub fn se_chart(rows: &[SeRow]) -> String {
    let mut series: Vec<Series> = Vec::new();
    for r in rows.iter().filter(|r| r.layer == 1) {
        let name = label(r.beta, r.rho);
        match series.last_mut() {
            Some(s) if s.label == name => s.points.push((r.iter as f64, r.mse_se)),
            _ => {
                let color = series.len();
                series.push(Series { label: name, points: vec![(r.iter as f64, r.mse_se)], style: Style::Line, color });
            }
        }
    }
    render("State evolution", "iteration", "MSE", &series)
}
