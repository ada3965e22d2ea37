//! Minimal deterministic SVG line plots: shared x-axis, one polyline per
//! series, a legend, and min/max tick labels.  No external assets, no
//! scripting — the output is a static document whose bytes depend only on
//! the data.

const WIDTH: f64 = 900.0;
const HEIGHT: f64 = 560.0;
const MARGIN_L: f64 = 70.0;
const MARGIN_R: f64 = 170.0;
const MARGIN_T: f64 = 40.0;
const MARGIN_B: f64 = 50.0;

const PALETTE: [&str; 8] = [
    "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#17becf", "#7f7f7f",
];

/// One named curve sampled on the shared x grid.
pub struct Series {
    pub label: String,
    pub ys: Vec<f64>,
}

fn finite_min_max<'a>(values: impl Iterator<Item = &'a f64>) -> (f64, f64) {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for &v in values {
        if v.is_finite() {
            lo = lo.min(v);
            hi = hi.max(v);
        }
    }
    if !(lo.is_finite() && hi.is_finite()) {
        return (0.0, 1.0);
    }
    if lo == hi {
        // Flat data still needs a nonzero span to map onto pixels.
        let pad = if lo == 0.0 { 1.0 } else { lo.abs() * 0.5 };
        return (lo - pad, hi + pad);
    }
    (lo, hi)
}

/// Renders the plot.  `xs` and each series must have equal lengths; points
/// with non-finite coordinates break the polyline.
pub fn line_plot(title: &str, x_label: &str, xs: &[f64], series: &[Series]) -> String {
    let (x_lo, x_hi) = finite_min_max(xs.iter());
    let (y_lo, y_hi) = finite_min_max(series.iter().flat_map(|s| s.ys.iter()));
    let plot_w = WIDTH - MARGIN_L - MARGIN_R;
    let plot_h = HEIGHT - MARGIN_T - MARGIN_B;
    let x_of = |x: f64| MARGIN_L + (x - x_lo) / (x_hi - x_lo) * plot_w;
    let y_of = |y: f64| MARGIN_T + (y_hi - y) / (y_hi - y_lo) * plot_h;

    let mut out = String::new();
    out.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"0 0 {WIDTH} {HEIGHT}\" \
         font-family=\"monospace\" font-size=\"13\">\n"
    ));
    out.push_str(&format!(
        "<rect width=\"{WIDTH}\" height=\"{HEIGHT}\" fill=\"white\"/>\n"
    ));
    out.push_str(&format!(
        "<text x=\"{}\" y=\"24\" font-size=\"16\">{}</text>\n",
        MARGIN_L,
        escape(title)
    ));
    // Axes.
    out.push_str(&format!(
        "<rect x=\"{MARGIN_L}\" y=\"{MARGIN_T}\" width=\"{plot_w}\" height=\"{plot_h}\" \
         fill=\"none\" stroke=\"#333\" stroke-width=\"1\"/>\n"
    ));
    // Tick labels: the corners of the data range.
    out.push_str(&format!(
        "<text x=\"{MARGIN_L}\" y=\"{}\" text-anchor=\"middle\">{x_lo:.3e}</text>\n",
        HEIGHT - MARGIN_B + 20.0
    ));
    out.push_str(&format!(
        "<text x=\"{}\" y=\"{}\" text-anchor=\"middle\">{x_hi:.3e}</text>\n",
        MARGIN_L + plot_w,
        HEIGHT - MARGIN_B + 20.0
    ));
    out.push_str(&format!(
        "<text x=\"{}\" y=\"{}\" text-anchor=\"end\">{y_lo:.3e}</text>\n",
        MARGIN_L - 6.0,
        HEIGHT - MARGIN_B
    ));
    out.push_str(&format!(
        "<text x=\"{}\" y=\"{}\" text-anchor=\"end\">{y_hi:.3e}</text>\n",
        MARGIN_L - 6.0,
        MARGIN_T + 12.0
    ));
    out.push_str(&format!(
        "<text x=\"{}\" y=\"{}\" text-anchor=\"middle\">{}</text>\n",
        MARGIN_L + plot_w / 2.0,
        HEIGHT - MARGIN_B + 36.0,
        escape(x_label)
    ));

    for (si, s) in series.iter().enumerate() {
        let color = PALETTE[si % PALETTE.len()];
        let mut path = String::new();
        let mut pen_down = false;
        for (k, (&x, &y)) in xs.iter().zip(s.ys.iter()).enumerate() {
            let _ = k;
            if x.is_finite() && y.is_finite() {
                let cmd = if pen_down { 'L' } else { 'M' };
                path.push_str(&format!("{}{:.2} {:.2} ", cmd, x_of(x), y_of(y)));
                pen_down = true;
            } else {
                pen_down = false;
            }
        }
        if !path.is_empty() {
            out.push_str(&format!(
                "<path d=\"{}\" fill=\"none\" stroke=\"{color}\" stroke-width=\"1.2\"/>\n",
                path.trim_end()
            ));
        }
        // Legend entry.
        let ly = MARGIN_T + 8.0 + 20.0 * si as f64;
        out.push_str(&format!(
            "<line x1=\"{}\" y1=\"{ly}\" x2=\"{}\" y2=\"{ly}\" stroke=\"{color}\" stroke-width=\"2\"/>\n",
            WIDTH - MARGIN_R + 12.0,
            WIDTH - MARGIN_R + 40.0
        ));
        out.push_str(&format!(
            "<text x=\"{}\" y=\"{}\">{}</text>\n",
            WIDTH - MARGIN_R + 48.0,
            ly + 4.0,
            escape(&s.label)
        ));
    }
    out.push_str("</svg>\n");
    out
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}
