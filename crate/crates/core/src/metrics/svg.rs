use std::collections::BTreeMap;
use std::fmt::Write;

use super::{MetricName, MetricRow};

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 400.0;
const MARGIN: f64 = 56.0;
const PALETTE: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"];

/// Standalone SVG line plot of `metric` against `ratio_x` on a log axis, one
/// polyline per method. Rows without a ratio are drawn as dashed horizontal
/// reference lines. Non-positive ratios cannot sit on a log axis and are skipped.
pub fn plot_svg(rows: &[MetricRow], metric: MetricName, title: &str) -> String {
    let rows: Vec<&MetricRow> = rows.iter().filter(|r| r.metric == metric).collect();
    let mut series: BTreeMap<&str, Vec<(f64, f64)>> = BTreeMap::new();
    let mut refs: BTreeMap<&str, f64> = BTreeMap::new();
    for r in &rows {
        match r.ratio_x {
            Some(x) if x > 0.0 => series.entry(&r.method).or_default().push((x, r.value)),
            Some(_) => {}
            None => {
                refs.insert(&r.method, r.value);
            }
        }
    }
    for pts in series.values_mut() {
        pts.sort_by(|a, b| a.0.total_cmp(&b.0));
    }

    let xs = series.values().flatten().map(|p| p.0.log10());
    let (mut x_lo, mut x_hi) = xs.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)));
    if !x_lo.is_finite() {
        (x_lo, x_hi) = (-1.0, 0.0);
    }
    if x_hi - x_lo < 1e-9 {
        x_lo -= 0.5;
        x_hi += 0.5;
    }
    let ys = series.values().flatten().map(|p| p.1).chain(refs.values().copied());
    let (mut y_lo, mut y_hi) = ys.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)));
    if !y_lo.is_finite() {
        (y_lo, y_hi) = (0.0, 1.0);
    }
    if y_hi - y_lo < 1e-9 {
        y_lo -= 0.5;
        y_hi += 0.5;
    }
    let px = |lx: f64| MARGIN + (lx - x_lo) / (x_hi - x_lo) * (WIDTH - 2.0 * MARGIN);
    let py = |v: f64| HEIGHT - MARGIN - (v - y_lo) / (y_hi - y_lo) * (HEIGHT - 2.0 * MARGIN);

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);
    let _ = writeln!(s, r#"<text x="{}" y="20" text-anchor="middle">{}</text>"#, WIDTH / 2.0, escape(title));
    let (x0, x1, y0, y1) = (MARGIN, WIDTH - MARGIN, HEIGHT - MARGIN, MARGIN);
    let _ = writeln!(s, r#"<path d="M{x0} {y1} L{x0} {y0} L{x1} {y0}" stroke="black" fill="none"/>"#);
    let _ = writeln!(s, r#"<text x="{}" y="{}" text-anchor="middle">ratio of ground-truth labels (log)</text>"#, WIDTH / 2.0, HEIGHT - 12.0);
    let _ = writeln!(s, r#"<text x="14" y="{}" transform="rotate(-90 14 {})" text-anchor="middle">{metric}</text>"#, HEIGHT / 2.0, HEIGHT / 2.0);
    for d in (x_lo.floor() as i32)..=(x_hi.ceil() as i32) {
        let lx = f64::from(d);
        if lx < x_lo - 1e-9 || lx > x_hi + 1e-9 {
            continue;
        }
        let _ = writeln!(s, r#"<text x="{:.2}" y="{}" text-anchor="middle">1e{d}</text>"#, px(lx), y0 + 16.0);
    }
    for (lbl, v) in [(y_lo, y_lo), (y_hi, y_hi)] {
        let _ = writeln!(s, r#"<text x="{}" y="{:.2}" text-anchor="end">{lbl:.3}</text>"#, x0 - 4.0, py(v) + 4.0);
    }

    let mut color = PALETTE.iter().cycle();
    let mut legend_y = MARGIN;
    for (method, pts) in &series {
        let c = color.next().expect("cycle");
        let points: Vec<String> = pts.iter().map(|&(x, v)| format!("{:.2},{:.2}", px(x.log10()), py(v))).collect();
        let _ = writeln!(s, r#"<polyline points="{}" stroke="{c}" fill="none" stroke-width="2"/>"#, points.join(" "));
        for p in &points {
            let (cx, cy) = p.split_once(',').expect("formatted pair");
            let _ = writeln!(s, r#"<circle cx="{cx}" cy="{cy}" r="3" fill="{c}"/>"#);
        }
        let _ = writeln!(s, r#"<text x="{}" y="{legend_y}" fill="{c}">{}</text>"#, x1 - 120.0, escape(method));
        legend_y += 16.0;
    }
    for (method, v) in &refs {
        let c = color.next().expect("cycle");
        let _ = writeln!(s, r#"<line x1="{x0}" y1="{y:.2}" x2="{x1}" y2="{y:.2}" stroke="{c}" stroke-dasharray="6 4"/>"#, y = py(*v));
        let _ = writeln!(s, r#"<text x="{}" y="{legend_y}" fill="{c}">{} (reference)</text>"#, x1 - 120.0, escape(method));
        legend_y += 16.0;
    }
    s.push_str("</svg>\n");
    s
}

fn escape(text: &str) -> String {
    text.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}
