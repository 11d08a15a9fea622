//! Minimal hand-written SVG charts.

use std::fmt::Write as _;

use crate::language::{BaseOrder, WordOrderConfig};

use super::metrics::{CorrMatrix, FreqTable, PplVector};

const COLORS: [&str; 6] = ["#1b9e77", "#d95f02", "#7570b3", "#e7298a", "#66a61e", "#e6ab02"];

fn esc(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Perplexity per language, languages grouped by base order along the x axis
/// and coloured by it; the legend shows each order's frequency.
pub fn ppl_scatter_svg(v: &PplVector, freq: &FreqTable) -> String {
    let (w, h, ml, mr, mt, mb) = (760.0, 360.0, 60.0, 150.0, 40.0, 50.0);
    let mut pts: Vec<(BaseOrder, &String, f64)> = v
        .values
        .iter()
        .filter_map(|(id, &p)| id.parse::<WordOrderConfig>().ok().map(|c| (c.base_order(), id, p)))
        .collect();
    pts.sort_by(|a, b| a.0.cmp(&b.0).then(a.1.cmp(b.1)));
    let (lo, hi) = pts.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(l, u), p| (l.min(p.2), u.max(p.2)));
    let (lo, hi) = if pts.is_empty() { (0.0, 1.0) } else if hi > lo { (lo, hi) } else { (lo - 1.0, hi + 1.0) };
    let pw = w - ml - mr;
    let ph = h - mt - mb;
    let x = |i: usize| ml + pw * (i as f64 + 0.5) / pts.len().max(1) as f64;
    let y = |p: f64| mt + ph * (1.0 - (p - lo) / (hi - lo));
    let mut s = String::new();
    writeln!(s, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" font-family="sans-serif" font-size="11">"#).unwrap();
    writeln!(s, r#"<rect width="{w}" height="{h}" fill="white"/>"#).unwrap();
    writeln!(s, r#"<text x="{ml}" y="20" font-size="13">{} {} {}</text>"#, esc(&v.model), esc(&v.regime), esc(&v.split)).unwrap();
    writeln!(s, r#"<line x1="{ml}" y1="{}" x2="{}" y2="{}" stroke="black"/>"#, mt + ph, ml + pw, mt + ph).unwrap();
    writeln!(s, r#"<line x1="{ml}" y1="{mt}" x2="{ml}" y2="{}" stroke="black"/>"#, mt + ph).unwrap();
    for k in 0..=4 {
        let p = lo + (hi - lo) * k as f64 / 4.0;
        writeln!(s, r#"<text x="{}" y="{:.1}" text-anchor="end">{p:.1}</text>"#, ml - 6.0, y(p) + 4.0).unwrap();
    }
    writeln!(s, r#"<text x="14" y="{:.1}" transform="rotate(-90 14 {:.1})">PPL</text>"#, mt + ph / 2.0, mt + ph / 2.0).unwrap();
    for (i, (o, id, p)) in pts.iter().enumerate() {
        let c = COLORS[*o as usize];
        writeln!(s, r#"<circle cx="{:.1}" cy="{:.1}" r="3.5" fill="{c}"><title>{id} {p:.3}</title></circle>"#, x(i), y(*p)).unwrap();
    }
    for (k, o) in BaseOrder::ALL.iter().enumerate() {
        let ly = mt + 18.0 * k as f64;
        writeln!(s, r#"<circle cx="{}" cy="{ly}" r="4" fill="{}"/>"#, w - mr + 20.0, COLORS[k]).unwrap();
        writeln!(s, r#"<text x="{}" y="{}">{} ({:.2})</text>"#, w - mr + 30.0, ly + 4.0, o.name(), freq.get(*o)).unwrap();
    }
    s.push_str("</svg>\n");
    s
}

/// Correlation matrix as a diverging-colour heatmap with cell labels.
pub fn correlation_heatmap_svg(m: &CorrMatrix) -> String {
    let n = m.labels.len();
    let cell = 56.0;
    let margin = 150.0;
    let size = margin + cell * n as f64 + 20.0;
    let colour = |v: f64| {
        if v.is_nan() {
            return "#dddddd".to_string();
        }
        let t = v.clamp(-1.0, 1.0);
        let (r, g, b) = if t >= 0.0 {
            (255.0 - 200.0 * t, 255.0 - 120.0 * t, 255.0)
        } else {
            (255.0, 255.0 + 150.0 * t, 255.0 + 200.0 * t)
        };
        format!("rgb({},{},{})", r as u8, g as u8, b as u8)
    };
    let mut s = String::new();
    writeln!(s, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{size}" height="{size}" font-family="sans-serif" font-size="10">"#).unwrap();
    writeln!(s, r#"<rect width="{size}" height="{size}" fill="white"/>"#).unwrap();
    for (i, l) in m.labels.iter().enumerate() {
        let c = margin + cell * (i as f64 + 0.5);
        writeln!(s, r#"<text x="{}" y="{c:.1}" text-anchor="end">{}</text>"#, margin - 6.0, esc(l)).unwrap();
        writeln!(s, r#"<text x="{c:.1}" y="{}" text-anchor="start" transform="rotate(-45 {c:.1} {})">{}</text>"#, margin - 6.0, margin - 6.0, esc(l)).unwrap();
        for j in 0..n {
            let v = m.values[i][j];
            let (x0, y0) = (margin + cell * j as f64, margin + cell * i as f64);
            writeln!(s, r#"<rect x="{x0}" y="{y0}" width="{cell}" height="{cell}" fill="{}" stroke="white"/>"#, colour(v)).unwrap();
            let label = if v.is_nan() { "-".to_string() } else { format!("{v:.2}") };
            writeln!(s, r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{label}</text>"#, x0 + cell / 2.0, y0 + cell / 2.0 + 4.0).unwrap();
        }
    }
    s.push_str("</svg>\n");
    s
}
