//! Minimal deterministic SVG charts.

use std::fmt::Write;

use crate::multiverse::{Axis, CurveRow};

#[derive(Debug, Clone, PartialEq)]
pub struct Bar {
    pub label: String,
    pub value: f64,
    pub lo: f64,
    pub hi: f64,
}

const W: f64 = 720.0;
const H: f64 = 420.0;
const LEFT: f64 = 70.0;
const RIGHT: f64 = 20.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 110.0;

fn esc(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

fn n(x: f64) -> String {
    format!("{x:.2}")
}

/// Value range padded by 5%, always including zero for bar baselines.
fn range<'a>(vals: impl Iterator<Item = &'a f64>, include_zero: bool) -> (f64, f64) {
    let (mut lo, mut hi) = if include_zero { (0.0f64, 0.0f64) } else { (f64::INFINITY, f64::NEG_INFINITY) };
    for &v in vals.filter(|v| v.is_finite()) {
        lo = lo.min(v);
        hi = hi.max(v);
    }
    if !lo.is_finite() {
        return (0.0, 1.0);
    }
    if hi - lo < 1e-12 {
        return (lo - 0.5, hi + 0.5);
    }
    let pad = 0.05 * (hi - lo);
    (lo - pad, hi + pad)
}

fn header(out: &mut String, title: &str, height: f64) {
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}" font-family="sans-serif" font-size="11">"#,
        w = n(W),
        h = n(height)
    );
    let _ = writeln!(out, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(out, r#"<text x="{}" y="22" text-anchor="middle" font-size="14">{}</text>"#, n(W / 2.0), esc(title));
}

fn y_axis(out: &mut String, label: &str, lo: f64, hi: f64, y_of: &dyn Fn(f64) -> f64, plot_bottom: f64) {
    let _ = writeln!(out, r#"<line x1="{l}" y1="{t}" x2="{l}" y2="{b}" stroke="black"/>"#, l = n(LEFT), t = n(TOP), b = n(plot_bottom));
    for i in 0..=4 {
        let v = lo + (hi - lo) * i as f64 / 4.0;
        let y = y_of(v);
        let _ = writeln!(out, r#"<line x1="{}" y1="{y}" x2="{}" y2="{y}" stroke="black"/>"#, n(LEFT - 4.0), n(LEFT), y = n(y));
        let _ = writeln!(out, r#"<text x="{}" y="{}" text-anchor="end">{}</text>"#, n(LEFT - 6.0), n(y + 4.0), fmt_tick(v));
    }
    let cy = (TOP + plot_bottom) / 2.0;
    let _ = writeln!(
        out,
        r#"<text x="14" y="{cy}" text-anchor="middle" transform="rotate(-90 14 {cy})">{}</text>"#,
        esc(label),
        cy = n(cy)
    );
}

fn fmt_tick(v: f64) -> String {
    if v.abs() >= 1000.0 {
        format!("{v:.0}")
    } else if v.abs() >= 10.0 {
        format!("{v:.1}")
    } else {
        format!("{v:.3}")
    }
}

/// Bars with interval whiskers and an optional dashed reference line.
pub fn bar_chart(title: &str, y_label: &str, bars: &[Bar], reference: Option<f64>) -> String {
    let (lo, hi) = range(bars.iter().flat_map(|b| [&b.value, &b.lo, &b.hi]).chain(reference.as_ref()), true);
    let plot_bottom = H - BOTTOM;
    let y_of = |v: f64| plot_bottom - (v - lo) / (hi - lo) * (plot_bottom - TOP);
    let mut out = String::new();
    header(&mut out, title, H);
    y_axis(&mut out, y_label, lo, hi, &y_of, plot_bottom);
    let slot = (W - LEFT - RIGHT) / bars.len().max(1) as f64;
    let zero = y_of(0.0);
    for (i, b) in bars.iter().enumerate() {
        let x = LEFT + slot * i as f64;
        let cx = x + slot / 2.0;
        let (y0, y1) = (zero.min(y_of(b.value)), zero.max(y_of(b.value)));
        let _ = writeln!(
            out,
            r##"<rect x="{}" y="{}" width="{}" height="{}" fill="#7a9cc6"/>"##,
            n(x + slot * 0.15),
            n(y0),
            n(slot * 0.7),
            n(y1 - y0)
        );
        let (wl, wh) = (y_of(b.lo), y_of(b.hi));
        let _ = writeln!(out, r#"<line x1="{cx}" y1="{}" x2="{cx}" y2="{}" stroke="black"/>"#, n(wl), n(wh), cx = n(cx));
        for y in [wl, wh] {
            let _ = writeln!(out, r#"<line x1="{}" y1="{y}" x2="{}" y2="{y}" stroke="black"/>"#, n(cx - 5.0), n(cx + 5.0), y = n(y));
        }
        let ly = plot_bottom + 12.0;
        let _ = writeln!(
            out,
            r#"<text x="{cx}" y="{ly}" text-anchor="end" transform="rotate(-45 {cx} {ly})">{}</text>"#,
            esc(&b.label),
            cx = n(cx),
            ly = n(ly)
        );
    }
    if let Some(r) = reference {
        let y = y_of(r);
        let _ = writeln!(
            out,
            r##"<line x1="{}" y1="{y}" x2="{}" y2="{y}" stroke="#c0392b" stroke-dasharray="6 4"/>"##,
            n(LEFT),
            n(W - RIGHT),
            y = n(y)
        );
    }
    out.push_str("</svg>\n");
    out
}

/// Sorted coefficients with intervals above a marker matrix, one matrix row per
/// distinct value of each axis.
pub fn spec_curve_chart(title: &str, rows: &[CurveRow], axes: &[Axis]) -> String {
    let levels: Vec<(Axis, Vec<String>)> = axes
        .iter()
        .map(|&a| {
            let mut v: Vec<String> = rows.iter().map(|r| r.task.axis(a)).collect();
            v.sort();
            v.dedup();
            (a, v)
        })
        .collect();
    let matrix_rows: usize = levels.iter().map(|(_, v)| v.len()).sum();
    let row_h = 12.0;
    let plot_bottom = TOP + 220.0;
    let height = plot_bottom + 20.0 + row_h * matrix_rows as f64 + 10.0;
    let (lo, hi) = range(rows.iter().flat_map(|r| [&r.beta, &r.lo, &r.hi]), true);
    let y_of = |v: f64| plot_bottom - (v - lo) / (hi - lo) * (plot_bottom - TOP);
    let mut out = String::new();
    header(&mut out, title, height);
    y_axis(&mut out, "coefficient", lo, hi, &y_of, plot_bottom);
    let left = LEFT + 110.0;
    let slot = (W - left - RIGHT) / rows.len().max(1) as f64;
    let zero = y_of(0.0);
    let _ = writeln!(out, r##"<line x1="{}" y1="{z}" x2="{}" y2="{z}" stroke="#888"/>"##, n(LEFT), n(W - RIGHT), z = n(zero));
    for (i, r) in rows.iter().enumerate() {
        let cx = left + slot * (i as f64 + 0.5);
        let colour = if r.significant { "#c0392b" } else { "#555555" };
        let _ = writeln!(
            out,
            r#"<line x1="{cx}" y1="{}" x2="{cx}" y2="{}" stroke="{colour}" stroke-opacity="0.5"/>"#,
            n(y_of(r.lo)),
            n(y_of(r.hi)),
            cx = n(cx)
        );
        let _ = writeln!(out, r#"<circle cx="{}" cy="{}" r="2" fill="{colour}"/>"#, n(cx), n(y_of(r.beta)));
    }
    let mut y = plot_bottom + 20.0;
    for (axis, values) in &levels {
        for v in values {
            let _ = writeln!(
                out,
                r#"<text x="{}" y="{}" text-anchor="end">{}: {}</text>"#,
                n(left - 6.0),
                n(y + 4.0),
                axis.name(),
                esc(v)
            );
            for (i, r) in rows.iter().enumerate() {
                if &r.task.axis(*axis) == v {
                    let cx = left + slot * (i as f64 + 0.5);
                    let _ = writeln!(out, r#"<rect x="{}" y="{}" width="2" height="8" fill="black"/>"#, n(cx - 1.0), n(y - 4.0));
                }
            }
            y += row_h;
        }
    }
    out.push_str("</svg>\n");
    out
}
