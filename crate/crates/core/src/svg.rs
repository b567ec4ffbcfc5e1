//! Minimal deterministic SVG plots: scatter clouds and Pickands curves.

use std::fmt::Write;

const SIZE: f64 = 400.0;
const PAD: f64 = 40.0;

fn frame(title: &str, body: &str) -> String {
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{w}" viewBox="0 0 {w} {w}">"#,
        w = SIZE + 2.0 * PAD
    );
    let _ = writeln!(s, r#"<rect x="0" y="0" width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<rect x="{PAD}" y="{PAD}" width="{SIZE}" height="{SIZE}" fill="none" stroke="black" stroke-width="1"/>"#
    );
    let _ = writeln!(s, r#"<text x="{PAD}" y="{:.1}" font-family="sans-serif" font-size="14">{}</text>"#, PAD - 12.0, escape(title));
    s.push_str(body);
    s.push_str("</svg>\n");
    s
}

fn escape(t: &str) -> String {
    t.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn bounds(v: impl Iterator<Item = f64>) -> (f64, f64) {
    let (lo, hi) = v.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), x| (a.min(x), b.max(x)));
    if !(lo.is_finite() && hi.is_finite()) {
        (0.0, 1.0)
    } else if hi - lo < 1e-300 {
        (lo - 0.5, hi + 0.5)
    } else {
        (lo, hi)
    }
}

fn map(v: f64, (lo, hi): (f64, f64), flip: bool) -> f64 {
    let f = (v - lo) / (hi - lo);
    PAD + SIZE * if flip { 1.0 - f } else { f }
}

/// Scatter plot of (x, y) pairs, axes fitted to the data.
pub fn scatter(title: &str, xs: &[f64], ys: &[f64]) -> String {
    let bx = bounds(xs.iter().copied());
    let by = bounds(ys.iter().copied());
    let mut body = String::new();
    for (&x, &y) in xs.iter().zip(ys) {
        let _ = writeln!(body, r#"<circle cx="{:.2}" cy="{:.2}" r="2" fill="steelblue"/>"#, map(x, bx, false), map(y, by, true));
    }
    frame(title, &body)
}

/// Oblique projection of a three-dimensional cloud. Each coordinate is rescaled to its
/// own range first; the third axis recedes up and to the right.
pub fn cloud(title: &str, xs: &[f64], ys: &[f64], zs: &[f64]) -> String {
    let (bx, by, bz) = (bounds(xs.iter().copied()), bounds(ys.iter().copied()), bounds(zs.iter().copied()));
    let unit = |v: f64, (lo, hi): (f64, f64)| (v - lo) / (hi - lo);
    let project = |x: f64, y: f64, z: f64| (0.65 * x + 0.35 * z, 0.65 * y + 0.35 * z);
    let mut body = String::new();
    let corners = [(0.0, 0.0, 0.0), (1.0, 0.0, 0.0), (0.0, 1.0, 0.0), (0.0, 0.0, 1.0)];
    let (ox, oy) = project(corners[0].0, corners[0].1, corners[0].2);
    for &(x, y, z) in &corners[1..] {
        let (px, py) = project(x, y, z);
        let _ = writeln!(
            body,
            r#"<line x1="{:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="gray"/>"#,
            map(ox, (0.0, 1.0), false),
            map(oy, (0.0, 1.0), true),
            map(px, (0.0, 1.0), false),
            map(py, (0.0, 1.0), true)
        );
    }
    for ((&x, &y), &z) in xs.iter().zip(ys).zip(zs) {
        let (px, py) = project(unit(x, bx), unit(y, by), unit(z, bz));
        let _ = writeln!(
            body,
            r#"<circle cx="{:.2}" cy="{:.2}" r="2" fill="steelblue"/>"#,
            map(px, (0.0, 1.0), false),
            map(py, (0.0, 1.0), true)
        );
    }
    frame(title, &body)
}

/// Pickands curve Â(t) for d = 2 on [0, 1] × [0.5, 1], with the bounds max(t, 1 − t) and 1.
pub fn pickands_curve(title: &str, t: &[f64], a: &[f64]) -> String {
    let (bx, by) = ((0.0, 1.0), (0.5, 1.0));
    let mut body = String::new();
    let poly = |pts: &mut dyn Iterator<Item = (f64, f64)>| {
        pts.map(|(x, y)| format!("{:.2},{:.2}", map(x, bx, false), map(y, by, true))).collect::<Vec<_>>().join(" ")
    };
    let _ = writeln!(
        body,
        r#"<polyline points="{}" fill="none" stroke="gray" stroke-dasharray="4 3"/>"#,
        poly(&mut [(0.0, 1.0), (0.5, 0.5), (1.0, 1.0)].into_iter())
    );
    let _ = writeln!(
        body,
        r#"<polyline points="{}" fill="none" stroke="gray" stroke-dasharray="4 3"/>"#,
        poly(&mut [(0.0, 1.0), (1.0, 1.0)].into_iter())
    );
    let _ = writeln!(
        body,
        r#"<polyline points="{}" fill="none" stroke="firebrick" stroke-width="2"/>"#,
        poly(&mut t.iter().copied().zip(a.iter().copied()))
    );
    frame(title, &body)
}

/// Pickands function on the 2-simplex drawn as a shaded triangle (darker = smaller Â).
pub fn pickands_ternary(title: &str, points: &[[f64; 3]], a: &[f64]) -> String {
    let mut body = String::new();
    let h = 3f64.sqrt() / 2.0;
    for (t, &v) in points.iter().zip(a) {
        let x = t[1] + t[2] / 2.0;
        let y = t[2] * h;
        let shade = (((v - 1.0 / 3.0) / (2.0 / 3.0)).clamp(0.0, 1.0) * 255.0).round() as u8;
        let _ = writeln!(
            body,
            r#"<circle cx="{:.2}" cy="{:.2}" r="4" fill="rgb({shade},{shade},255)"/>"#,
            map(x, (0.0, 1.0), false),
            map(y, (0.0, 1.0), true)
        );
    }
    frame(title, &body)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deterministic_and_well_formed() {
        let a = scatter("m1 vs m2", &[0.0, 1.0, 2.0], &[1.0, 0.0, 3.0]);
        let b = scatter("m1 vs m2", &[0.0, 1.0, 2.0], &[1.0, 0.0, 3.0]);
        assert_eq!(a, b);
        assert!(a.starts_with("<svg") && a.trim_end().ends_with("</svg>"));
        assert_eq!(a.matches("<circle").count(), 3);
        let c = pickands_curve("A", &[0.0, 0.5, 1.0], &[1.0, 0.9, 1.0]);
        assert!(c.contains("firebrick"));
        assert!(scatter("a<b", &[], &[]).contains("a&lt;b"));
        let k = cloud("m", &[0.0, 1.0], &[1.0, 0.0], &[0.5, 0.5]);
        assert_eq!(k.matches("<circle").count(), 2);
        assert_eq!(k.matches("<line").count(), 3);
    }
}
