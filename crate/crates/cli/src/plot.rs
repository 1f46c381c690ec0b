//! Minimal SVG violin plots of bootstrap distributions.

use std::fmt::Write;

const WIDTH: f64 = 160.0;
const HEIGHT: f64 = 320.0;
const MARGIN: f64 = 48.0;
const GRID: usize = 96;

/// Gaussian kernel density on `GRID` points over `[lo, hi]` with
/// Silverman's bandwidth.
fn density(values: &[f64], lo: f64, hi: f64) -> Vec<f64> {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let sd = (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0).max(1.0)).sqrt();
    let h = (1.06 * sd * n.powf(-0.2)).max((hi - lo) * 1e-3).max(1e-9);
    (0..GRID)
        .map(|i| {
            let y = lo + (hi - lo) * i as f64 / (GRID - 1) as f64;
            values.iter().map(|v| (-0.5 * ((y - v) / h).powi(2)).exp()).sum::<f64>()
        })
        .collect()
}

fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 { v[n / 2] } else { (v[n / 2 - 1] + v[n / 2]) / 2.0 }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// One violin per series, sharing a y axis.
pub fn violin_svg(title: &str, series: &[(&str, &[f64])]) -> String {
    let all = series.iter().flat_map(|(_, v)| v.iter().copied());
    let (mut lo, mut hi) = all.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
    if !lo.is_finite() {
        (lo, hi) = (0.0, 1.0);
    }
    if hi - lo < 1e-9 {
        lo -= 0.05;
        hi += 0.05;
    }
    let w = MARGIN * 2.0 + WIDTH * series.len() as f64;
    let h = HEIGHT + MARGIN * 2.0;
    let ypix = |v: f64| MARGIN + HEIGHT * (1.0 - (v - lo) / (hi - lo));
    let mut s = String::new();
    let _ = writeln!(s, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w:.0}" height="{h:.0}" viewBox="0 0 {w:.0} {h:.0}" font-family="sans-serif" font-size="12">"#);
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(s, r#"<text x="{:.1}" y="{:.1}" text-anchor="middle" font-size="14">{}</text>"#, w / 2.0, MARGIN / 2.0, escape(title));
    let _ = writeln!(s, r#"<line x1="{m:.1}" y1="{:.1}" x2="{m:.1}" y2="{:.1}" stroke="black"/>"#, ypix(hi), ypix(lo), m = MARGIN);
    for t in 0..=4 {
        let v = lo + (hi - lo) * t as f64 / 4.0;
        let _ = writeln!(s, r#"<text x="{:.1}" y="{:.1}" text-anchor="end">{v:.3}</text>"#, MARGIN - 4.0, ypix(v) + 4.0);
    }
    for (k, (name, values)) in series.iter().enumerate() {
        let cx = MARGIN + WIDTH * (k as f64 + 0.5);
        if values.is_empty() {
            continue;
        }
        let d = density(values, lo, hi);
        let peak = d.iter().copied().fold(0.0, f64::max).max(1e-300);
        let half = WIDTH * 0.4;
        let mut pts = Vec::with_capacity(2 * GRID);
        for (i, di) in d.iter().enumerate() {
            let y = ypix(lo + (hi - lo) * i as f64 / (GRID - 1) as f64);
            pts.push(format!("{:.2},{:.2}", cx + half * di / peak, y));
        }
        for (i, di) in d.iter().enumerate().rev() {
            let y = ypix(lo + (hi - lo) * i as f64 / (GRID - 1) as f64);
            pts.push(format!("{:.2},{:.2}", cx - half * di / peak, y));
        }
        let _ = writeln!(s, r##"<polygon points="{}" fill="#9ecae1" stroke="#3182bd"/>"##, pts.join(" "));
        let m = ypix(median(values));
        let _ = writeln!(s, r#"<line x1="{:.2}" y1="{m:.2}" x2="{:.2}" y2="{m:.2}" stroke="black" stroke-width="2"/>"#, cx - half * 0.5, cx + half * 0.5);
        let _ = writeln!(s, r#"<text x="{cx:.1}" y="{:.1}" text-anchor="middle">{}</text>"#, h - MARGIN / 2.0, escape(name));
    }
    s.push_str("</svg>\n");
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn svg_is_well_formed_and_stable() {
        let a = [0.8, 0.82, 0.85, 0.9];
        let b = [0.7, 0.7, 0.7, 0.7];
        let svg = violin_svg("auc <x>", &[("a", &a), ("b", &b)]);
        assert!(svg.starts_with("<svg") && svg.ends_with("</svg>\n"));
        assert_eq!(svg.matches("<polygon").count(), 2);
        assert!(svg.contains("auc &lt;x&gt;"));
        assert_eq!(svg, violin_svg("auc <x>", &[("a", &a), ("b", &b)]));
    }
}
