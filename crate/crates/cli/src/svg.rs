//! Minimal native SVG line charts: axes, ticks, optional log-scale y, one
//! polyline per series with an optional shaded band.

use std::fmt::Write as _;

const WIDTH: f64 = 760.0;
const HEIGHT: f64 = 480.0;
const LEFT: f64 = 80.0;
const RIGHT: f64 = 150.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 60.0;
const PALETTE: [&str; 6] = [
    "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf",
];

#[derive(Debug, Clone, Default)]
pub struct Series {
    pub name: String,
    pub points: Vec<(f64, f64)>,
    /// `(x, low, high)` shaded behind the line.
    pub band: Option<Vec<(f64, f64, f64)>>,
}

#[derive(Debug, Clone, Default)]
pub struct Plot {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub log_y: bool,
    pub series: Vec<Series>,
}

struct Axis {
    lo: f64,
    hi: f64,
    ticks: Vec<f64>,
    log: bool,
}

impl Axis {
    fn linear(lo: f64, hi: f64) -> Self {
        let (lo, hi) = if hi > lo {
            (lo, hi)
        } else {
            (lo - 0.5, lo + 0.5)
        };
        let raw = (hi - lo) / 5.0;
        let mag = 10f64.powf(raw.log10().floor());
        let step = [1.0, 2.0, 5.0, 10.0]
            .iter()
            .map(|f| f * mag)
            .find(|&s| s >= raw)
            .unwrap_or(10.0 * mag);
        let (lo, hi) = ((lo / step).floor() * step, (hi / step).ceil() * step);
        let count = ((hi - lo) / step).round() as usize;
        let ticks = (0..=count).map(|i| lo + i as f64 * step).collect();
        Self {
            lo,
            hi,
            ticks,
            log: false,
        }
    }

    /// Decade-aligned range over `log10` of the data.
    fn log(lo: f64, hi: f64) -> Self {
        let (lo, hi) = (lo.floor(), hi.ceil().max(lo.floor() + 1.0));
        let step = ((hi - lo) / 10.0).ceil().max(1.0);
        let count = ((hi - lo) / step).ceil() as usize;
        let ticks = (0..=count).map(|i| lo + i as f64 * step).collect();
        Self {
            lo,
            hi: lo + count as f64 * step,
            ticks,
            log: true,
        }
    }

    fn value(&self, v: f64) -> Option<f64> {
        if !v.is_finite() {
            None
        } else if self.log {
            (v > 0.0).then(|| v.log10())
        } else {
            Some(v)
        }
    }

    fn frac(&self, t: f64) -> f64 {
        (t - self.lo) / (self.hi - self.lo)
    }

    fn label(&self, t: f64) -> String {
        if self.log {
            format!("1e{}", t as i64)
        } else {
            let s = format!("{t:.6}");
            s.trim_end_matches('0').trim_end_matches('.').to_string()
        }
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
}

impl Plot {
    fn axes(&self) -> Option<(Axis, Axis)> {
        let probe = Axis {
            lo: 0.0,
            hi: 1.0,
            ticks: vec![],
            log: self.log_y,
        };
        let mut xs = Vec::new();
        let mut ys = Vec::new();
        for s in &self.series {
            for &(x, y) in &s.points {
                if let (true, Some(y)) = (x.is_finite(), probe.value(y)) {
                    xs.push(x);
                    ys.push(y);
                }
            }
            for &(x, lo, hi) in s.band.iter().flatten() {
                for y in [lo, hi].into_iter().filter_map(|v| probe.value(v)) {
                    xs.push(x);
                    ys.push(y);
                }
            }
        }
        let min = |v: &[f64]| v.iter().copied().fold(f64::INFINITY, f64::min);
        let max = |v: &[f64]| v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if xs.is_empty() {
            return None;
        }
        let x = Axis::linear(min(&xs), max(&xs));
        let y = if self.log_y {
            Axis::log(min(&ys), max(&ys))
        } else {
            Axis::linear(min(&ys), max(&ys))
        };
        Some((x, y))
    }

    pub fn render(&self) -> String {
        let (pw, ph) = (WIDTH - LEFT - RIGHT, HEIGHT - TOP - BOTTOM);
        let mut out = String::new();
        let _ = writeln!(
            out,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
        );
        let _ = writeln!(out, r#"<rect width="100%" height="100%" fill="white"/>"#);
        let _ = writeln!(
            out,
            r#"<text x="{}" y="24" text-anchor="middle" font-size="15">{}</text>"#,
            LEFT + pw / 2.0,
            escape(&self.title)
        );
        let Some((xa, ya)) = self.axes() else {
            out.push_str("</svg>\n");
            return out;
        };
        let px = |x: f64| LEFT + xa.frac(x) * pw;
        let py = |y: f64| TOP + (1.0 - ya.frac(y)) * ph;

        let _ = writeln!(
            out,
            r##"<rect class="frame" x="{LEFT}" y="{TOP}" width="{pw}" height="{ph}" fill="none" stroke="#444"/>"##
        );
        for &t in &xa.ticks {
            let x = px(t);
            let _ = writeln!(
                out,
                r##"<line x1="{x:.2}" y1="{TOP}" x2="{x:.2}" y2="{}" stroke="#ddd"/><text x="{x:.2}" y="{}" text-anchor="middle">{}</text>"##,
                TOP + ph,
                TOP + ph + 18.0,
                xa.label(t)
            );
        }
        for &t in &ya.ticks {
            let y = py(t);
            let _ = writeln!(
                out,
                r##"<line x1="{LEFT}" y1="{y:.2}" x2="{}" y2="{y:.2}" stroke="#ddd"/><text x="{}" y="{:.2}" text-anchor="end">{}</text>"##,
                LEFT + pw,
                LEFT - 6.0,
                y + 4.0,
                ya.label(t)
            );
        }
        let _ = writeln!(
            out,
            r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#,
            LEFT + pw / 2.0,
            HEIGHT - 16.0,
            escape(&self.x_label)
        );
        let _ = writeln!(
            out,
            r#"<text transform="translate(20 {}) rotate(-90)" text-anchor="middle">{}</text>"#,
            TOP + ph / 2.0,
            escape(&self.y_label)
        );

        for (k, s) in self.series.iter().enumerate() {
            let color = PALETTE[k % PALETTE.len()];
            if let Some(band) = &s.band {
                let pts: Vec<(f64, f64, f64)> = band
                    .iter()
                    .filter_map(|&(x, lo, hi)| Some((x, ya.value(lo)?, ya.value(hi)?)))
                    .collect();
                if !pts.is_empty() {
                    let mut poly = String::new();
                    for &(x, _, hi) in &pts {
                        let _ = write!(poly, "{:.2},{:.2} ", px(x), py(hi));
                    }
                    for &(x, lo, _) in pts.iter().rev() {
                        let _ = write!(poly, "{:.2},{:.2} ", px(x), py(lo));
                    }
                    let _ = writeln!(
                        out,
                        r#"<polygon class="band" points="{}" fill="{color}" fill-opacity="0.18" stroke="none"/>"#,
                        poly.trim_end()
                    );
                }
            }
            let mut line = String::new();
            for &(x, y) in &s.points {
                if let Some(y) = ya.value(y) {
                    let _ = write!(line, "{:.2},{:.2} ", px(x), py(y));
                }
            }
            let _ = writeln!(
                out,
                r#"<polyline class="series" data-name="{}" points="{}" fill="none" stroke="{color}" stroke-width="1.6"/>"#,
                escape(&s.name),
                line.trim_end()
            );
            let ly = TOP + 14.0 + 20.0 * k as f64;
            let lx = LEFT + pw + 14.0;
            let _ = writeln!(
                out,
                r#"<line x1="{lx}" y1="{ly}" x2="{}" y2="{ly}" stroke="{color}" stroke-width="2"/><text x="{}" y="{}">{}</text>"#,
                lx + 24.0,
                lx + 30.0,
                ly + 4.0,
                escape(&s.name)
            );
        }
        out.push_str("</svg>\n");
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn log_axis_spans_decades() {
        let a = Axis::log(-7.3, 0.2);
        assert_eq!((a.lo, a.hi), (-8.0, 1.0));
        assert_eq!(a.ticks.first(), Some(&-8.0));
        assert_eq!(a.value(0.0), None);
        assert_eq!(a.value(100.0), Some(2.0));
    }

    #[test]
    fn linear_ticks_cover_range() {
        let a = Axis::linear(0.0, 3000.0);
        assert_eq!(a.lo, 0.0);
        assert!(a.hi >= 3000.0);
        assert!(a.ticks.len() >= 4 && a.ticks.len() <= 12);
        let flat = Axis::linear(2.0, 2.0);
        assert!(flat.hi > flat.lo);
    }

    #[test]
    fn one_polyline_per_series() {
        let plot = Plot {
            title: "a < b".into(),
            log_y: true,
            series: (0..3)
                .map(|k| Series {
                    name: format!("s{k}"),
                    points: vec![(0.0, 1.0), (1.0, 0.1), (2.0, 0.0)],
                    band: Some(vec![(0.0, 0.5, 2.0), (1.0, 0.05, 0.2)]),
                })
                .collect(),
            ..Default::default()
        };
        let svg = plot.render();
        assert_eq!(svg.matches(r#"class="series""#).count(), 3);
        assert_eq!(svg.matches(r#"class="band""#).count(), 3);
        assert!(svg.contains("a &lt; b"));
        assert!(svg.ends_with("</svg>\n"));
    }

    #[test]
    fn empty_plot_is_valid() {
        let svg = Plot::default().render();
        assert!(svg.starts_with("<svg") && svg.ends_with("</svg>\n"));
    }
}
