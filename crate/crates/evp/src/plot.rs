//! Minimal SVG line plots, dependency-free and byte-deterministic.

use std::path::Path;

use crate::checkpoint::atomic_write;
use crate::error::Result;

const W: f64 = 640.0;
const H: f64 = 440.0;
const MARGIN_L: f64 = 70.0;
const MARGIN_R: f64 = 25.0;
const MARGIN_T: f64 = 45.0;
const MARGIN_B: f64 = 60.0;

/// One curve of (x, y, y-err) points; the error renders as vertical bars.
pub fn write_line_plot(
    path: &Path,
    title: &str,
    xlabel: &str,
    ylabel: &str,
    points: &[(f64, f64, f64)],
) -> Result<()> {
    let (xmin, xmax) = bounds(points.iter().map(|p| p.0));
    let (ymin, ymax) = bounds(
        points
            .iter()
            .flat_map(|p| [p.1 - p.2, p.1 + p.2]),
    );
    let pad = ((ymax - ymin) * 0.08).max(1e-6);
    let (ymin, ymax) = (ymin - pad, ymax + pad);

    let sx = |x: f64| MARGIN_L + (x - xmin) / (xmax - xmin).max(1e-12) * (W - MARGIN_L - MARGIN_R);
    let sy = |y: f64| H - MARGIN_B - (y - ymin) / (ymax - ymin).max(1e-12) * (H - MARGIN_T - MARGIN_B);

    let mut s = String::new();
    s.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{W}\" height=\"{H}\" viewBox=\"0 0 {W} {H}\">\n"
    ));
    s.push_str("<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n");
    s.push_str(&format!(
        "<text x=\"{}\" y=\"24\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"16\">{}</text>\n",
        W / 2.0,
        escape(title)
    ));

    // axes
    s.push_str(&format!(
        "<line x1=\"{MARGIN_L}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"black\"/>\n",
        H - MARGIN_B,
        W - MARGIN_R,
        H - MARGIN_B
    ));
    s.push_str(&format!(
        "<line x1=\"{MARGIN_L}\" y1=\"{MARGIN_T}\" x2=\"{MARGIN_L}\" y2=\"{}\" stroke=\"black\"/>\n",
        H - MARGIN_B
    ));
    s.push_str(&format!(
        "<text x=\"{}\" y=\"{}\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"13\">{}</text>\n",
        (MARGIN_L + W - MARGIN_R) / 2.0,
        H - 15.0,
        escape(xlabel)
    ));
    s.push_str(&format!(
        "<text x=\"18\" y=\"{}\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"13\" transform=\"rotate(-90 18 {})\">{}</text>\n",
        (MARGIN_T + H - MARGIN_B) / 2.0,
        (MARGIN_T + H - MARGIN_B) / 2.0,
        escape(ylabel)
    ));

    // ticks
    for i in 0..=4 {
        let y = ymin + (ymax - ymin) * i as f64 / 4.0;
        let py = sy(y);
        s.push_str(&format!(
            "<line x1=\"{}\" y1=\"{py}\" x2=\"{MARGIN_L}\" y2=\"{py}\" stroke=\"black\"/>\n",
            MARGIN_L - 5.0
        ));
        s.push_str(&format!(
            "<text x=\"{}\" y=\"{}\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\">{y:.3}</text>\n",
            MARGIN_L - 8.0,
            py + 4.0
        ));
    }
    for (x, _, _) in points {
        let px = sx(*x);
        s.push_str(&format!(
            "<line x1=\"{px}\" y1=\"{}\" x2=\"{px}\" y2=\"{}\" stroke=\"black\"/>\n",
            H - MARGIN_B,
            H - MARGIN_B + 5.0
        ));
        s.push_str(&format!(
            "<text x=\"{px}\" y=\"{}\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"11\">{x}</text>\n",
            H - MARGIN_B + 20.0
        ));
    }

    // error bars
    for (x, y, e) in points {
        if *e > 0.0 {
            let px = sx(*x);
            s.push_str(&format!(
                "<line x1=\"{px}\" y1=\"{}\" x2=\"{px}\" y2=\"{}\" stroke=\"#888888\"/>\n",
                sy(y - e),
                sy(y + e)
            ));
        }
    }

    // the curve
    let path_d: Vec<String> = points
        .iter()
        .map(|(x, y, _)| format!("{:.2},{:.2}", sx(*x), sy(*y)))
        .collect();
    s.push_str(&format!(
        "<polyline points=\"{}\" fill=\"none\" stroke=\"#1f6fb2\" stroke-width=\"2\"/>\n",
        path_d.join(" ")
    ));
    for (x, y, _) in points {
        s.push_str(&format!(
            "<circle cx=\"{:.2}\" cy=\"{:.2}\" r=\"3.5\" fill=\"#1f6fb2\"/>\n",
            sx(*x),
            sy(*y)
        ));
    }
    s.push_str("</svg>\n");
    atomic_write(path, s.as_bytes())
}

fn bounds(vals: impl Iterator<Item = f64>) -> (f64, f64) {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for v in vals {
        lo = lo.min(v);
        hi = hi.max(v);
    }
    if !lo.is_finite() || !hi.is_finite() {
        (0.0, 1.0)
    } else if lo == hi {
        (lo - 0.5, hi + 0.5)
    } else {
        (lo, hi)
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn plot_carries_labels_and_points() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("sweep.svg");
        write_line_plot(
            &p,
            "K sensitivity",
            "K",
            "AUC-ROC",
            &[(1.0, 0.7, 0.02), (3.0, 0.8, 0.01), (5.0, 0.78, 0.03)],
        )
        .unwrap();
        let text = std::fs::read_to_string(&p).unwrap();
        assert!(text.contains("AUC-ROC"));
        assert!(text.contains(">K<"));
        assert!(text.contains("polyline"));
        assert_eq!(text.matches("<circle").count(), 3);
    }
}
