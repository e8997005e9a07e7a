//! A small SVG plotter for the run directories: line plots, scatter plots,
//! and histogram outlines.  Output is a plain string with fixed formatting,
//! so identical data renders to identical bytes.

const WIDTH: f64 = 720.0;
const HEIGHT: f64 = 480.0;
const ML: f64 = 72.0; // left margin leaves room for y tick labels
const MR: f64 = 24.0;
const MT: f64 = 44.0;
const MB: f64 = 56.0;

const PALETTE: [&str; 6] = [
    "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b",
];

pub struct Series {
    pub label: String,
    pub points: Vec<(f64, f64)>,
    /// Polyline through the points when true, discrete markers otherwise.
    pub line: bool,
}

impl Series {
    pub fn line(label: &str, points: Vec<(f64, f64)>) -> Self {
        Series { label: label.into(), points, line: true }
    }

    pub fn scatter(label: &str, points: Vec<(f64, f64)>) -> Self {
        Series { label: label.into(), points, line: false }
    }
}

pub struct Plot {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub series: Vec<Series>,
}

/// Density-normalized histogram outline as a step polyline.
pub fn histogram(values: &[f64], bins: usize, label: &str) -> Series {
    let mut pts = Vec::new();
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for &v in values {
        if v.is_finite() {
            lo = lo.min(v);
            hi = hi.max(v);
        }
    }
    if lo < hi && bins > 0 {
        let w = (hi - lo) / bins as f64;
        let mut counts = vec![0usize; bins];
        let mut total = 0usize;
        for &v in values {
            if v.is_finite() {
                let b = (((v - lo) / w) as usize).min(bins - 1);
                counts[b] += 1;
                total += 1;
            }
        }
        pts.push((lo, 0.0));
        for (b, &c) in counts.iter().enumerate() {
            let d = c as f64 / (total as f64 * w);
            pts.push((lo + b as f64 * w, d));
            pts.push((lo + (b + 1) as f64 * w, d));
        }
        pts.push((hi, 0.0));
    }
    Series::line(label, pts)
}

fn fmt_tick(v: f64) -> String {
    if v == 0.0 {
        return "0".into();
    }
    let a = v.abs();
    if !(1e-4..1e6).contains(&a) {
        return format!("{v:.2e}");
    }
    let s = format!("{v:.4}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    s.to_string()
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

impl Plot {
    pub fn new(title: &str, x_label: &str, y_label: &str) -> Self {
        Plot {
            title: title.into(),
            x_label: x_label.into(),
            y_label: y_label.into(),
            series: Vec::new(),
        }
    }

    pub fn render(&self) -> String {
        let (mut x0, mut x1) = (f64::INFINITY, f64::NEG_INFINITY);
        let (mut y0, mut y1) = (f64::INFINITY, f64::NEG_INFINITY);
        for s in &self.series {
            for &(x, y) in &s.points {
                if x.is_finite() && y.is_finite() {
                    x0 = x0.min(x);
                    x1 = x1.max(x);
                    y0 = y0.min(y);
                    y1 = y1.max(y);
                }
            }
        }
        if !x0.is_finite() {
            x0 = 0.0;
            x1 = 1.0;
            y0 = 0.0;
            y1 = 1.0;
        }
        // Pad degenerate and near-degenerate ranges so the mapping stays
        // invertible.
        let xpad = if x1 > x0 { 0.03 * (x1 - x0) } else { 0.5 + x0.abs() * 1e-3 };
        let ypad = if y1 > y0 { 0.06 * (y1 - y0) } else { 0.5 + y0.abs() * 1e-3 };
        let (x0, x1) = (x0 - xpad, x1 + xpad);
        let (y0, y1) = (y0 - ypad, y1 + ypad);
        let px = |x: f64| ML + (x - x0) / (x1 - x0) * (WIDTH - ML - MR);
        let py = |y: f64| HEIGHT - MB - (y - y0) / (y1 - y0) * (HEIGHT - MT - MB);

        let mut out = String::with_capacity(16 * 1024);
        out.push_str(&format!(
            "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{WIDTH}\" height=\"{HEIGHT}\" \
             viewBox=\"0 0 {WIDTH} {HEIGHT}\" font-family=\"sans-serif\">\n"
        ));
        out.push_str("<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n");
        out.push_str(&format!(
            "<text x=\"{:.1}\" y=\"24\" text-anchor=\"middle\" font-size=\"15\">{}</text>\n",
            (ML + WIDTH - MR) / 2.0,
            escape(&self.title)
        ));

        // Frame and ticks.
        out.push_str(&format!(
            "<rect x=\"{ML}\" y=\"{MT}\" width=\"{:.1}\" height=\"{:.1}\" fill=\"none\" \
             stroke=\"#333\" stroke-width=\"1\"/>\n",
            WIDTH - ML - MR,
            HEIGHT - MT - MB
        ));
        for i in 0..5 {
            let t = i as f64 / 4.0;
            let xv = x0 + t * (x1 - x0);
            let yv = y0 + t * (y1 - y0);
            let xp = px(xv);
            let yp = py(yv);
            out.push_str(&format!(
                "<line x1=\"{xp:.2}\" y1=\"{:.1}\" x2=\"{xp:.2}\" y2=\"{:.1}\" stroke=\"#333\"/>\n",
                HEIGHT - MB,
                HEIGHT - MB + 5.0
            ));
            out.push_str(&format!(
                "<text x=\"{xp:.2}\" y=\"{:.1}\" text-anchor=\"middle\" font-size=\"11\">{}</text>\n",
                HEIGHT - MB + 18.0,
                fmt_tick(xv)
            ));
            out.push_str(&format!(
                "<line x1=\"{:.1}\" y1=\"{yp:.2}\" x2=\"{ML}\" y2=\"{yp:.2}\" stroke=\"#333\"/>\n",
                ML - 5.0
            ));
            out.push_str(&format!(
                "<text x=\"{:.1}\" y=\"{:.2}\" text-anchor=\"end\" font-size=\"11\">{}</text>\n",
                ML - 8.0,
                yp + 4.0,
                fmt_tick(yv)
            ));
        }
        out.push_str(&format!(
            "<text x=\"{:.1}\" y=\"{:.1}\" text-anchor=\"middle\" font-size=\"13\">{}</text>\n",
            (ML + WIDTH - MR) / 2.0,
            HEIGHT - 14.0,
            escape(&self.x_label)
        ));
        out.push_str(&format!(
            "<text x=\"18\" y=\"{:.1}\" text-anchor=\"middle\" font-size=\"13\" \
             transform=\"rotate(-90 18 {:.1})\">{}</text>\n",
            (MT + HEIGHT - MB) / 2.0,
            (MT + HEIGHT - MB) / 2.0,
            escape(&self.y_label)
        ));

        for (k, s) in self.series.iter().enumerate() {
            let color = PALETTE[k % PALETTE.len()];
            if s.line {
                let mut pts = String::new();
                for &(x, y) in &s.points {
                    if x.is_finite() && y.is_finite() {
                        pts.push_str(&format!("{:.2},{:.2} ", px(x), py(y)));
                    }
                }
                out.push_str(&format!(
                    "<polyline fill=\"none\" stroke=\"{color}\" stroke-width=\"1.5\" \
                     points=\"{}\"/>\n",
                    pts.trim_end()
                ));
            } else {
                for &(x, y) in &s.points {
                    if x.is_finite() && y.is_finite() {
                        out.push_str(&format!(
                            "<circle cx=\"{:.2}\" cy=\"{:.2}\" r=\"2.4\" fill=\"{color}\"/>\n",
                            px(x),
                            py(y)
                        ));
                    }
                }
            }
            // Legend row.
            let ly = MT + 16.0 + 16.0 * k as f64;
            out.push_str(&format!(
                "<line x1=\"{:.1}\" y1=\"{ly:.1}\" x2=\"{:.1}\" y2=\"{ly:.1}\" \
                 stroke=\"{color}\" stroke-width=\"3\"/>\n",
                WIDTH - MR - 150.0,
                WIDTH - MR - 130.0
            ));
            out.push_str(&format!(
                "<text x=\"{:.1}\" y=\"{:.1}\" font-size=\"11\">{}</text>\n",
                WIDTH - MR - 124.0,
                ly + 4.0,
                escape(&s.label)
            ));
        }
        out.push_str("</svg>\n");
        out
    }
}
