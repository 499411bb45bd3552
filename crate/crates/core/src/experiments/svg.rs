//! Minimal SVG line plots.
//!
//! A deliberately small writer for the benchmark curves: axes with ticks, one
//! polyline per series, and a legend. Output is a plain string assembled with
//! fixed-precision coordinates, so identical inputs always produce identical
//! bytes.

/// One labeled curve.
#[derive(Debug, Clone)]
pub struct Series {
    /// Legend text.
    pub label: String,
    /// `(x, y)` samples in data coordinates, already sorted by `x`.
    pub points: Vec<(f64, f64)>,
}

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 420.0;
const MARGIN_LEFT: f64 = 72.0;
const MARGIN_RIGHT: f64 = 168.0;
const MARGIN_TOP: f64 = 44.0;
const MARGIN_BOTTOM: f64 = 52.0;
const PALETTE: [&str; 6] = [
    "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b",
];

/// Renders a line plot. The y-axis always starts at 0 (the metrics are
/// nonnegative); the x-axis spans the data range. Series with no points are
/// skipped but keep their palette slot so colors stay stable.
pub fn line_plot(title: &str, x_label: &str, y_label: &str, series: &[Series]) -> String {
    let mut x_min = f64::INFINITY;
    let mut x_max = f64::NEG_INFINITY;
    let mut y_max = f64::NEG_INFINITY;
    for s in series {
        for &(x, y) in &s.points {
            x_min = x_min.min(x);
            x_max = x_max.max(x);
            y_max = y_max.max(y);
        }
    }
    if !x_min.is_finite() {
        x_min = 0.0;
        x_max = 1.0;
    }
    if x_max - x_min < 1e-12 {
        x_min -= 0.5;
        x_max += 0.5;
    }
    if !y_max.is_finite() || y_max <= 0.0 {
        y_max = 1.0;
    }
    y_max *= 1.05;

    let plot_w = WIDTH - MARGIN_LEFT - MARGIN_RIGHT;
    let plot_h = HEIGHT - MARGIN_TOP - MARGIN_BOTTOM;
    let to_px = |x: f64, y: f64| -> (f64, f64) {
        (
            MARGIN_LEFT + (x - x_min) / (x_max - x_min) * plot_w,
            MARGIN_TOP + (1.0 - y / y_max) * plot_h,
        )
    };

    let mut out = String::new();
    out.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{WIDTH}\" height=\"{HEIGHT}\" \
         viewBox=\"0 0 {WIDTH} {HEIGHT}\" font-family=\"sans-serif\" font-size=\"12\">\n"
    ));
    out.push_str("<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n");
    out.push_str(&format!(
        "<text x=\"{:.2}\" y=\"22\" text-anchor=\"middle\" font-size=\"15\">{}</text>\n",
        MARGIN_LEFT + plot_w / 2.0,
        escape(title)
    ));

    // Frame.
    out.push_str(&format!(
        "<rect x=\"{MARGIN_LEFT:.2}\" y=\"{MARGIN_TOP:.2}\" width=\"{plot_w:.2}\" \
         height=\"{plot_h:.2}\" fill=\"none\" stroke=\"#444\"/>\n"
    ));

    // Ticks and grid lines.
    const TICKS: usize = 5;
    for t in 0..=TICKS {
        let frac = t as f64 / TICKS as f64;
        let x_val = x_min + frac * (x_max - x_min);
        let y_val = frac * y_max;
        let (px, _) = to_px(x_val, 0.0);
        let (_, py) = to_px(x_min, y_val);
        out.push_str(&format!(
            "<line x1=\"{px:.2}\" y1=\"{:.2}\" x2=\"{px:.2}\" y2=\"{:.2}\" stroke=\"#444\"/>\n",
            MARGIN_TOP + plot_h,
            MARGIN_TOP + plot_h + 5.0
        ));
        out.push_str(&format!(
            "<text x=\"{px:.2}\" y=\"{:.2}\" text-anchor=\"middle\">{}</text>\n",
            MARGIN_TOP + plot_h + 20.0,
            tick_label(x_val)
        ));
        out.push_str(&format!(
            "<line x1=\"{:.2}\" y1=\"{py:.2}\" x2=\"{:.2}\" y2=\"{py:.2}\" stroke=\"#444\"/>\n",
            MARGIN_LEFT - 5.0,
            MARGIN_LEFT
        ));
        out.push_str(&format!(
            "<text x=\"{:.2}\" y=\"{:.2}\" text-anchor=\"end\">{}</text>\n",
            MARGIN_LEFT - 9.0,
            py + 4.0,
            tick_label(y_val)
        ));
        if t > 0 && t < TICKS {
            out.push_str(&format!(
                "<line x1=\"{:.2}\" y1=\"{py:.2}\" x2=\"{:.2}\" y2=\"{py:.2}\" \
                 stroke=\"#ddd\" stroke-dasharray=\"3,3\"/>\n",
                MARGIN_LEFT,
                MARGIN_LEFT + plot_w
            ));
        }
    }

    // Axis labels.
    out.push_str(&format!(
        "<text x=\"{:.2}\" y=\"{:.2}\" text-anchor=\"middle\">{}</text>\n",
        MARGIN_LEFT + plot_w / 2.0,
        HEIGHT - 12.0,
        escape(x_label)
    ));
    out.push_str(&format!(
        "<text x=\"18\" y=\"{:.2}\" text-anchor=\"middle\" transform=\"rotate(-90 18 {:.2})\">{}</text>\n",
        MARGIN_TOP + plot_h / 2.0,
        MARGIN_TOP + plot_h / 2.0,
        escape(y_label)
    ));

    // Curves and legend.
    for (idx, s) in series.iter().enumerate() {
        let color = PALETTE[idx % PALETTE.len()];
        if !s.points.is_empty() {
            let coords: Vec<String> = s
                .points
                .iter()
                .map(|&(x, y)| {
                    let (px, py) = to_px(x, y.max(0.0).min(y_max));
                    format!("{px:.2},{py:.2}")
                })
                .collect();
            out.push_str(&format!(
                "<polyline points=\"{}\" fill=\"none\" stroke=\"{color}\" stroke-width=\"1.8\"/>\n",
                coords.join(" ")
            ));
            for &(x, y) in &s.points {
                let (px, py) = to_px(x, y.max(0.0).min(y_max));
                out.push_str(&format!(
                    "<circle cx=\"{px:.2}\" cy=\"{py:.2}\" r=\"2.6\" fill=\"{color}\"/>\n"
                ));
            }
        }
        let ly = MARGIN_TOP + 8.0 + idx as f64 * 18.0;
        out.push_str(&format!(
            "<line x1=\"{:.2}\" y1=\"{ly:.2}\" x2=\"{:.2}\" y2=\"{ly:.2}\" \
             stroke=\"{color}\" stroke-width=\"1.8\"/>\n",
            WIDTH - MARGIN_RIGHT + 12.0,
            WIDTH - MARGIN_RIGHT + 34.0
        ));
        out.push_str(&format!(
            "<text x=\"{:.2}\" y=\"{:.2}\">{}</text>\n",
            WIDTH - MARGIN_RIGHT + 40.0,
            ly + 4.0,
            escape(&s.label)
        ));
    }

    out.push_str("</svg>\n");
    out
}

fn tick_label(v: f64) -> String {
    if v == 0.0 {
        "0".into()
    } else if v.abs() >= 0.01 && v.abs() < 10_000.0 {
        format!("{v:.2}")
    } else {
        format!("{v:.1e}")
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn demo_series() -> Vec<Series> {
        vec![
            Series {
                label: "p q=2".into(),
                points: vec![(1.0, 0.0), (2.0, 0.1), (3.0, 0.4)],
            },
            Series {
                label: "pprime q=2".into(),
                points: vec![(1.0, 0.0), (2.0, 0.05), (3.0, 0.3)],
            },
        ]
    }

    #[test]
    fn renders_well_formed_markup_with_one_polyline_per_series() {
        let svg = line_plot("errors", "k", "mean error", &demo_series());
        assert!(svg.starts_with("<svg "));
        assert!(svg.trim_end().ends_with("</svg>"));
        assert_eq!(svg.matches("<polyline").count(), 2);
        assert!(svg.contains(">errors<"));
        assert!(svg.contains(">p q=2<"));
        assert!(!svg.contains("NaN"));
    }

    #[test]
    fn identical_inputs_produce_identical_bytes() {
        let a = line_plot("t", "x", "y", &demo_series());
        let b = line_plot("t", "x", "y", &demo_series());
        assert_eq!(a, b);
    }

    #[test]
    fn degenerate_inputs_do_not_produce_nan_coordinates() {
        // Single point, zero range in both axes.
        let series = vec![Series {
            label: "lone".into(),
            points: vec![(2.0, 0.0)],
        }];
        let svg = line_plot("t", "x", "y", &series);
        assert!(!svg.contains("NaN") && !svg.contains("inf"));

        // No points at all.
        let svg = line_plot("t", "x", "y", &[]);
        assert!(svg.contains("</svg>"));

        // Labels with markup characters are escaped.
        let series = vec![Series {
            label: "a<b&c>d".into(),
            points: vec![(0.0, 1.0), (1.0, 2.0)],
        }];
        let svg = line_plot("t<", "x&", "y>", &series);
        assert!(svg.contains("a&lt;b&amp;c&gt;d"));
        assert!(!svg.contains("t<<"));
    }
}
