//! Direct SVG emission for line plots with error bars. No display or
//! rendering dependencies; the CSV next to each plot stays authoritative.

/// How a series is drawn.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SeriesKind {
    Line,
    Points,
}

#[derive(Debug, Clone)]
pub struct Series {
    pub label: String,
    pub points: Vec<(f64, f64)>,
    /// Symmetric y error bars, one per point.
    pub y_err: Option<Vec<f64>>,
    pub kind: SeriesKind,
    pub color: &'static str,
}

#[derive(Debug, Clone)]
pub struct LinePlot {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub log_x: bool,
    pub log_y: bool,
    pub series: Vec<Series>,
}

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 440.0;
const MARGIN_L: f64 = 72.0;
const MARGIN_R: f64 = 24.0;
const MARGIN_T: f64 = 40.0;
const MARGIN_B: f64 = 56.0;

pub const PALETTE: [&str; 4] = ["#1f77b4", "#d62728", "#2ca02c", "#ff7f0e"];

impl LinePlot {
    pub fn render(&self) -> String {
        let tx = |v: f64| if self.log_x { v.log10() } else { v };
        let ty = |v: f64| if self.log_y { v.log10() } else { v };

        let mut xs = Vec::new();
        let mut ys = Vec::new();
        for s in &self.series {
            for (i, &(x, y)) in s.points.iter().enumerate() {
                if self.log_x && x <= 0.0 || self.log_y && y <= 0.0 {
                    continue;
                }
                xs.push(tx(x));
                ys.push(ty(y));
                if let Some(err) = &s.y_err {
                    let hi = y + err[i];
                    let lo = y - err[i];
                    if !self.log_y || hi > 0.0 {
                        ys.push(ty(hi));
                    }
                    if !self.log_y || lo > 0.0 {
                        ys.push(ty(lo));
                    }
                }
            }
        }
        let (x0, x1) = padded_range(&xs);
        let (y0, y1) = padded_range(&ys);
        let px = |v: f64| MARGIN_L + (tx(v) - x0) / (x1 - x0) * (WIDTH - MARGIN_L - MARGIN_R);
        let py = |v: f64| HEIGHT - MARGIN_B - (ty(v) - y0) / (y1 - y0) * (HEIGHT - MARGIN_T - MARGIN_B);

        let mut out = String::with_capacity(8192);
        out.push_str(&format!(
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">
<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>
<text x="{:.1}" y="24" text-anchor="middle" font-family="sans-serif" font-size="15">{}</text>
"#,
            0.5 * WIDTH,
            escape(&self.title)
        ));

        // Axes frame.
        out.push_str(&format!(
            "<rect x=\"{MARGIN_L}\" y=\"{MARGIN_T}\" width=\"{:.1}\" height=\"{:.1}\" fill=\"none\" stroke=\"black\"/>\n",
            WIDTH - MARGIN_L - MARGIN_R,
            HEIGHT - MARGIN_T - MARGIN_B
        ));

        // Ticks and grid.
        for t in ticks(x0, x1, self.log_x) {
            let x = MARGIN_L + (t - x0) / (x1 - x0) * (WIDTH - MARGIN_L - MARGIN_R);
            out.push_str(&format!(
                "<line x1=\"{x:.1}\" y1=\"{:.1}\" x2=\"{x:.1}\" y2=\"{:.1}\" stroke=\"#cccccc\" stroke-dasharray=\"2,4\"/>\n",
                MARGIN_T,
                HEIGHT - MARGIN_B
            ));
            out.push_str(&format!(
                "<text x=\"{x:.1}\" y=\"{:.1}\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"11\">{}</text>\n",
                HEIGHT - MARGIN_B + 16.0,
                tick_label(t, self.log_x)
            ));
        }
        for t in ticks(y0, y1, self.log_y) {
            let y = HEIGHT - MARGIN_B - (t - y0) / (y1 - y0) * (HEIGHT - MARGIN_T - MARGIN_B);
            out.push_str(&format!(
                "<line x1=\"{MARGIN_L}\" y1=\"{y:.1}\" x2=\"{:.1}\" y2=\"{y:.1}\" stroke=\"#cccccc\" stroke-dasharray=\"2,4\"/>\n",
                WIDTH - MARGIN_R
            ));
            out.push_str(&format!(
                "<text x=\"{:.1}\" y=\"{:.1}\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\">{}</text>\n",
                MARGIN_L - 6.0,
                y + 4.0,
                tick_label(t, self.log_y)
            ));
        }

        // Axis labels.
        out.push_str(&format!(
            "<text x=\"{:.1}\" y=\"{:.1}\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"13\">{}</text>\n",
            0.5 * (MARGIN_L + WIDTH - MARGIN_R),
            HEIGHT - 12.0,
            escape(&self.x_label)
        ));
        out.push_str(&format!(
            "<text x=\"16\" y=\"{:.1}\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"13\" transform=\"rotate(-90 16 {:.1})\">{}</text>\n",
            0.5 * (MARGIN_T + HEIGHT - MARGIN_B),
            0.5 * (MARGIN_T + HEIGHT - MARGIN_B),
            escape(&self.y_label)
        ));

        // Series.
        for s in &self.series {
            let visible: Vec<&(f64, f64)> = s
                .points
                .iter()
                .filter(|(x, y)| !(self.log_x && *x <= 0.0 || self.log_y && *y <= 0.0))
                .collect();
            match s.kind {
                SeriesKind::Line => {
                    let path: Vec<String> = visible
                        .iter()
                        .map(|(x, y)| format!("{:.2},{:.2}", px(*x), py(*y)))
                        .collect();
                    out.push_str(&format!(
                        "<polyline points=\"{}\" fill=\"none\" stroke=\"{}\" stroke-width=\"1.5\"/>\n",
                        path.join(" "),
                        s.color
                    ));
                }
                SeriesKind::Points => {
                    for (i, (x, y)) in s.points.iter().enumerate() {
                        if self.log_x && *x <= 0.0 || self.log_y && *y <= 0.0 {
                            continue;
                        }
                        if let Some(err) = &s.y_err {
                            let lo = y - err[i];
                            let hi = y + err[i];
                            let y_hi = if self.log_y && hi <= 0.0 { *y } else { hi };
                            let y_lo = if self.log_y && lo <= 0.0 {
                                // clip the bar at the plot floor
                                10f64.powf(y0)
                            } else {
                                lo
                            };
                            out.push_str(&format!(
                                "<line x1=\"{0:.2}\" y1=\"{1:.2}\" x2=\"{0:.2}\" y2=\"{2:.2}\" stroke=\"{3}\"/>\n",
                                px(*x),
                                py(y_lo),
                                py(y_hi),
                                s.color
                            ));
                        }
                        out.push_str(&format!(
                            "<circle cx=\"{:.2}\" cy=\"{:.2}\" r=\"3\" fill=\"{}\"/>\n",
                            px(*x),
                            py(*y),
                            s.color
                        ));
                    }
                }
            }
        }

        // Legend, top-left inside the frame.
        for (i, s) in self.series.iter().enumerate() {
            let y = MARGIN_T + 16.0 + 16.0 * i as f64;
            out.push_str(&format!(
                "<line x1=\"{:.1}\" y1=\"{y:.1}\" x2=\"{:.1}\" y2=\"{y:.1}\" stroke=\"{}\" stroke-width=\"2\"/>\n",
                MARGIN_L + 8.0,
                MARGIN_L + 28.0,
                s.color
            ));
            out.push_str(&format!(
                "<text x=\"{:.1}\" y=\"{:.1}\" font-family=\"sans-serif\" font-size=\"11\">{}</text>\n",
                MARGIN_L + 34.0,
                y + 4.0,
                escape(&s.label)
            ));
        }

        out.push_str("</svg>\n");
        out
    }
}

fn padded_range(values: &[f64]) -> (f64, f64) {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for &v in values {
        if v.is_finite() {
            lo = lo.min(v);
            hi = hi.max(v);
        }
    }
    if !lo.is_finite() || !hi.is_finite() {
        return (0.0, 1.0);
    }
    if lo == hi {
        return (lo - 0.5, hi + 0.5);
    }
    let pad = 0.06 * (hi - lo);
    (lo - pad, hi + pad)
}

/// Tick positions in transformed coordinates.
fn ticks(lo: f64, hi: f64, log: bool) -> Vec<f64> {
    if log {
        let first = lo.ceil() as i64;
        let last = hi.floor() as i64;
        if last - first >= 1 {
            return (first..=last).map(|d| d as f64).collect();
        }
        // Less than a decade: fall back to linear ticks on the log axis.
    }
    let span = hi - lo;
    let raw_step = span / 5.0;
    let mag = 10f64.powf(raw_step.log10().floor());
    let step = [1.0, 2.0, 5.0, 10.0]
        .iter()
        .map(|m| m * mag)
        .find(|s| span / s <= 6.0)
        .unwrap_or(mag * 10.0);
    let mut t = (lo / step).ceil() * step;
    let mut out = Vec::new();
    while t <= hi + 1e-9 * step {
        out.push(t);
        t += step;
    }
    out
}

fn tick_label(t: f64, log: bool) -> String {
    let v = if log { 10f64.powf(t) } else { t };
    if v == 0.0 {
        return "0".to_string();
    }
    let a = v.abs();
    if (1e-3..1e4).contains(&a) {
        let s = format!("{v:.3}");
        let s = s.trim_end_matches('0').trim_end_matches('.');
        s.to_string()
    } else {
        format!("{v:.1e}")
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}
