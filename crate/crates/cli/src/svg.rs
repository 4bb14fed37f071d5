//! Minimal SVG line plots.

use std::fmt::Write as _;

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 400.0;
const LEFT: f64 = 80.0;
const RIGHT: f64 = 20.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 50.0;
const COLORS: [&str; 4] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd"];

#[derive(Debug, Clone, PartialEq)]
pub struct Line {
    pub label: String,
    pub xs: Vec<f64>,
    pub ys: Vec<f64>,
    pub dashed: bool,
}

impl Line {
    pub fn solid(label: &str, xs: &[f64], ys: &[f64]) -> Self {
        Self {
            label: label.to_string(),
            xs: xs.to_vec(),
            ys: ys.to_vec(),
            dashed: false,
        }
    }

    pub fn dashed(label: &str, xs: &[f64], ys: &[f64]) -> Self {
        Self {
            dashed: true,
            ..Self::solid(label, xs, ys)
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Plot {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub log_x: bool,
    pub lines: Vec<Line>,
    /// Highlighted points, e.g. the first violation.
    pub markers: Vec<(f64, f64)>,
}

fn tick(v: f64) -> String {
    let a = v.abs();
    if a == 0.0 || (1e-2..1e4).contains(&a) {
        format!("{v:.3}")
    } else {
        format!("{v:.2e}")
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

impl Plot {
    pub fn new(title: &str, x_label: &str, log_x: bool) -> Self {
        Self {
            title: title.to_string(),
            x_label: x_label.to_string(),
            y_label: String::new(),
            log_x,
            lines: Vec::new(),
            markers: Vec::new(),
        }
    }

    fn x_of(&self, x: f64) -> Option<f64> {
        let v = if self.log_x { x.log10() } else { x };
        v.is_finite().then_some(v)
    }

    fn ranges(&self) -> Option<((f64, f64), (f64, f64))> {
        let mut xr = (f64::INFINITY, f64::NEG_INFINITY);
        let mut yr = xr;
        for line in &self.lines {
            for (&x, &y) in line.xs.iter().zip(&line.ys) {
                if let (Some(x), true) = (self.x_of(x), y.is_finite()) {
                    xr = (xr.0.min(x), xr.1.max(x));
                    yr = (yr.0.min(y), yr.1.max(y));
                }
            }
        }
        if !xr.0.is_finite() {
            return None;
        }
        let widen = |(lo, hi): (f64, f64)| {
            if hi - lo > 1e-300 * (1.0 + lo.abs()) {
                (lo, hi)
            } else {
                let pad = 0.5 * lo.abs().max(1.0);
                (lo - pad, hi + pad)
            }
        };
        Some((widen(xr), widen(yr)))
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
        );
        let _ = writeln!(out, r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);
        let _ = writeln!(
            out,
            r#"<text x="{:.1}" y="22" text-anchor="middle" font-size="14">{}</text>"#,
            WIDTH / 2.0,
            escape(&self.title)
        );
        let pw = WIDTH - LEFT - RIGHT;
        let ph = HEIGHT - TOP - BOTTOM;
        let _ = writeln!(
            out,
            r#"<rect x="{LEFT}" y="{TOP}" width="{pw}" height="{ph}" fill="none" stroke="black"/>"#
        );
        let Some(((x0, x1), (y0, y1))) = self.ranges() else {
            let _ = writeln!(
                out,
                r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">no finite data</text>"#,
                LEFT + pw / 2.0,
                TOP + ph / 2.0
            );
            out.push_str("</svg>\n");
            return out;
        };
        let sx = |x: f64| LEFT + (x - x0) / (x1 - x0) * pw;
        let sy = |y: f64| TOP + (y1 - y) / (y1 - y0) * ph;

        for i in 0..=4 {
            let f = i as f64 / 4.0;
            let xv = x0 + f * (x1 - x0);
            let label = if self.log_x { tick(10f64.powf(xv)) } else { tick(xv) };
            let _ = writeln!(
                out,
                r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{label}</text>"#,
                sx(xv),
                TOP + ph + 16.0
            );
            let yv = y0 + f * (y1 - y0);
            let _ = writeln!(
                out,
                r#"<text x="{:.1}" y="{:.1}" text-anchor="end">{}</text>"#,
                LEFT - 6.0,
                sy(yv) + 4.0,
                tick(yv)
            );
        }
        let x_label = if self.log_x {
            format!("{} (log scale)", self.x_label)
        } else {
            self.x_label.clone()
        };
        let _ = writeln!(
            out,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{}</text>"#,
            LEFT + pw / 2.0,
            HEIGHT - 12.0,
            escape(&x_label)
        );
        let _ = writeln!(
            out,
            r#"<text x="16" y="{:.1}" text-anchor="middle" transform="rotate(-90 16 {:.1})">{}</text>"#,
            TOP + ph / 2.0,
            TOP + ph / 2.0,
            escape(&self.y_label)
        );

        for (k, line) in self.lines.iter().enumerate() {
            let color = COLORS[k % COLORS.len()];
            let dash = if line.dashed { r#" stroke-dasharray="6 4""# } else { "" };
            // Non-finite samples split the curve.
            let mut segment: Vec<String> = Vec::new();
            let flush = |segment: &mut Vec<String>, out: &mut String| {
                if segment.len() > 1 {
                    let _ = writeln!(
                        out,
                        r#"<polyline fill="none" stroke="{color}" stroke-width="1.5"{dash} points="{}"/>"#,
                        segment.join(" ")
                    );
                }
                segment.clear();
            };
            for (&x, &y) in line.xs.iter().zip(&line.ys) {
                match (self.x_of(x), y.is_finite()) {
                    (Some(xv), true) => segment.push(format!("{:.2},{:.2}", sx(xv), sy(y))),
                    _ => flush(&mut segment, &mut out),
                }
            }
            flush(&mut segment, &mut out);
            let ly = TOP + 14.0 + 16.0 * k as f64;
            let lx = LEFT + pw - 150.0;
            let _ = writeln!(
                out,
                r#"<line x1="{lx:.1}" y1="{:.1}" x2="{:.1}" y2="{:.1}" stroke="{color}" stroke-width="1.5"{dash}/>"#,
                ly - 4.0,
                lx + 24.0,
                ly - 4.0
            );
            let _ = writeln!(
                out,
                r#"<text x="{:.1}" y="{ly:.1}">{}</text>"#,
                lx + 30.0,
                escape(&line.label)
            );
        }
        for &(x, y) in &self.markers {
            if let (Some(xv), true) = (self.x_of(x), y.is_finite()) {
                let _ = writeln!(
                    out,
                    r#"<circle cx="{:.2}" cy="{:.2}" r="4" fill="none" stroke="black" stroke-width="1.5"/>"#,
                    sx(xv),
                    sy(y)
                );
            }
        }
        out.push_str("</svg>\n");
        out
    }
}
