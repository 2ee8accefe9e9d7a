//! Minimal static SVG line charts for the run figures. No dependencies;
//! deterministic output.

use std::fmt::Write as _;

pub struct Series<'a> {
    pub label: &'a str,
    pub color: &'a str,
    pub points: Vec<(f64, f64)>,
}

pub struct Chart<'a> {
    pub title: &'a str,
    pub x_label: &'a str,
    pub y_label: &'a str,
    pub series: Vec<Series<'a>>,
}

const W: f64 = 960.0;
const H: f64 = 540.0;
const ML: f64 = 72.0;
const MR: f64 = 24.0;
const MT: f64 = 40.0;
const MB: f64 = 52.0;

impl<'a> Chart<'a> {
    pub fn render(&self) -> String {
        let (mut x0, mut x1) = (f64::INFINITY, f64::NEG_INFINITY);
        let (mut y0, mut y1) = (f64::INFINITY, f64::NEG_INFINITY);
        for s in &self.series {
            for &(x, y) in &s.points {
                x0 = x0.min(x);
                x1 = x1.max(x);
                y0 = y0.min(y);
                y1 = y1.max(y);
            }
        }
        if !x0.is_finite() || x1 <= x0 {
            x0 = 0.0;
            x1 = 1.0;
        }
        if !y0.is_finite() || y1 <= y0 {
            let mid = if y0.is_finite() { y0 } else { 0.0 };
            y0 = mid - 1.0;
            y1 = mid + 1.0;
        }
        let pad = (y1 - y0) * 0.05;
        y0 -= pad;
        y1 += pad;

        let px = |x: f64| ML + (x - x0) / (x1 - x0) * (W - ML - MR);
        let py = |y: f64| H - MB - (y - y0) / (y1 - y0) * (H - MT - MB);

        let mut svg = String::new();
        let _ = write!(
            svg,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}">"#
        );
        let _ = write!(
            svg,
            r#"<rect width="{W}" height="{H}" fill="white"/><text x="{}" y="24" font-family="sans-serif" font-size="16" text-anchor="middle">{}</text>"#,
            W / 2.0,
            esc(self.title)
        );

        // axes + ticks
        let _ = write!(
            svg,
            r#"<line x1="{ML}" y1="{MT}" x2="{ML}" y2="{}" stroke="black"/><line x1="{ML}" y1="{}" x2="{}" y2="{}" stroke="black"/>"#,
            H - MB,
            H - MB,
            W - MR,
            H - MB
        );
        for k in 0..=5 {
            let fx = x0 + (x1 - x0) * k as f64 / 5.0;
            let fy = y0 + (y1 - y0) * k as f64 / 5.0;
            let _ = write!(
                svg,
                r#"<line x1="{0}" y1="{1}" x2="{0}" y2="{2}" stroke="black"/><text x="{0}" y="{3}" font-family="sans-serif" font-size="11" text-anchor="middle">{4}</text>"#,
                px(fx),
                H - MB,
                H - MB + 5.0,
                H - MB + 18.0,
                sig(fx)
            );
            let _ = write!(
                svg,
                r#"<line x1="{0}" y1="{1}" x2="{2}" y2="{1}" stroke="black"/><text x="{3}" y="{4}" font-family="sans-serif" font-size="11" text-anchor="end">{5}</text>"#,
                ML - 5.0,
                py(fy),
                ML,
                ML - 8.0,
                py(fy) + 4.0,
                sig(fy)
            );
            // light grid
            let _ = write!(
                svg,
                r#"<line x1="{ML}" y1="{0}" x2="{1}" y2="{0}" stroke="#dddddd" stroke-width="0.5"/>"#,
                py(fy),
                W - MR
            );
        }
        let _ = write!(
            svg,
            r#"<text x="{}" y="{}" font-family="sans-serif" font-size="13" text-anchor="middle">{}</text>"#,
            (ML + W - MR) / 2.0,
            H - 12.0,
            esc(self.x_label)
        );
        let _ = write!(
            svg,
            r#"<text x="18" y="{}" font-family="sans-serif" font-size="13" text-anchor="middle" transform="rotate(-90 18 {})">{}</text>"#,
            (MT + H - MB) / 2.0,
            (MT + H - MB) / 2.0,
            esc(self.y_label)
        );

        for (si, s) in self.series.iter().enumerate() {
            if s.points.is_empty() {
                continue;
            }
            let mut d = String::with_capacity(s.points.len() * 12);
            for (i, &(x, y)) in s.points.iter().enumerate() {
                let _ = write!(d, "{}{:.2},{:.2} ", if i == 0 { "M" } else { "L" }, px(x), py(y));
            }
            let _ = write!(
                svg,
                r#"<path d="{d}" fill="none" stroke="{}" stroke-width="1.2"/>"#,
                s.color
            );
            let ly = MT + 16.0 * si as f64;
            let _ = write!(
                svg,
                r#"<line x1="{0}" y1="{ly}" x2="{1}" y2="{ly}" stroke="{2}" stroke-width="2"/><text x="{3}" y="{4}" font-family="sans-serif" font-size="12">{5}</text>"#,
                W - MR - 150.0,
                W - MR - 120.0,
                s.color,
                W - MR - 112.0,
                ly + 4.0,
                esc(s.label)
            );
        }
        svg.push_str("</svg>");
        svg
    }
}

fn esc(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn sig(v: f64) -> String {
    if v == 0.0 {
        "0".into()
    } else if v.abs() >= 1000.0 || v.abs() < 0.01 {
        format!("{v:.2e}")
    } else {
        format!("{v:.3}")
    }
}

/// Thin a series to at most `max_points` for plot size.
pub fn decimate(points: &[(f64, f64)], max_points: usize) -> Vec<(f64, f64)> {
    if points.len() <= max_points {
        return points.to_vec();
    }
    let step = points.len() as f64 / max_points as f64;
    (0..max_points)
        .map(|i| points[(i as f64 * step) as usize])
        .collect()
}
