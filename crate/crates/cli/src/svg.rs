//! Minimal line plots: axes, ticks, one polyline.

use std::fmt::Write;

const WIDTH: f64 = 480.0;
const HEIGHT: f64 = 360.0;
const MARGIN: f64 = 56.0;

fn range(values: impl Iterator<Item = f64>) -> Option<(f64, f64)> {
    let (lo, hi) = values
        .filter(|v| v.is_finite())
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| {
            (lo.min(v), hi.max(v))
        });
    if !lo.is_finite() {
        return None;
    }
    if hi - lo < 1e-12 {
        let pad = lo.abs().max(1.0) * 0.05;
        return Some((lo - pad, hi + pad));
    }
    let pad = 0.05 * (hi - lo);
    Some((lo - pad, hi + pad))
}

/// SVG document plotting `y` against `x`; non-finite points break the line.
pub fn line_plot(points: &[(f64, f64)], x_label: &str, y_label: &str) -> String {
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="11">"#
    );
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let (x0, y0, x1, y1) = (MARGIN, HEIGHT - MARGIN, WIDTH - 16.0, 16.0);
    let _ = writeln!(
        s,
        r#"<path d="M{x0},{y1} L{x0},{y0} L{x1},{y0}" fill="none" stroke="black"/>"#
    );
    let _ = writeln!(
        s,
        r#"<text x="{}" y="{}" text-anchor="middle">{x_label}</text>"#,
        (x0 + x1) / 2.0,
        HEIGHT - 12.0
    );
    let _ = writeln!(
        s,
        r#"<text x="14" y="{}" text-anchor="middle" transform="rotate(-90 14 {})">{y_label}</text>"#,
        (y0 + y1) / 2.0,
        (y0 + y1) / 2.0
    );
    if let (Some((xa, xb)), Some((ya, yb))) = (
        range(points.iter().map(|p| p.0)),
        range(points.iter().map(|p| p.1)),
    ) {
        let px = |x: f64| x0 + (x - xa) / (xb - xa) * (x1 - x0);
        let py = |y: f64| y0 - (y - ya) / (yb - ya) * (y0 - y1);
        for k in 0..=4 {
            let xv = xa + (xb - xa) * k as f64 / 4.0;
            let yv = ya + (yb - ya) * k as f64 / 4.0;
            let _ = writeln!(
                s,
                r#"<line x1="{0:.1}" y1="{y0}" x2="{0:.1}" y2="{1}" stroke="black"/><text x="{0:.1}" y="{2}" text-anchor="middle">{3:.3}</text>"#,
                px(xv),
                y0 + 4.0,
                y0 + 16.0,
                xv
            );
            let _ = writeln!(
                s,
                r#"<line x1="{0}" y1="{1:.1}" x2="{x0}" y2="{1:.1}" stroke="black"/><text x="{2}" y="{3:.1}" text-anchor="end">{4:.3}</text>"#,
                x0 - 4.0,
                py(yv),
                x0 - 6.0,
                py(yv) + 4.0,
                yv
            );
        }
        let mut segment = Vec::new();
        let flush = |segment: &mut Vec<String>, s: &mut String| {
            if !segment.is_empty() {
                let _ = writeln!(
                    s,
                    r#"<polyline points="{}" fill="none" stroke="steelblue" stroke-width="1.5"/>"#,
                    segment.join(" ")
                );
                segment.clear();
            }
        };
        for &(x, y) in points {
            if x.is_finite() && y.is_finite() {
                segment.push(format!("{:.2},{:.2}", px(x), py(y)));
            } else {
                flush(&mut segment, &mut s);
            }
        }
        flush(&mut segment, &mut s);
    }
    s.push_str("</svg>\n");
    s
}
