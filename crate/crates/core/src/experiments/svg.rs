//! Self-contained SVG charts: ROC overlay, grouped metric bars, timing bars.

use std::fmt::Write;

use super::ModelResult;

const PALETTE: [&str; 7] = ["#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2"];
const FONT: &str = "font-family=\"sans-serif\" font-size=\"12\"";

fn color(i: usize) -> &'static str {
    PALETTE[i % PALETTE.len()]
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

fn open(w: f64, h: f64, title: &str) -> String {
    let mut s = String::new();
    let _ = writeln!(
        s,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w}\" height=\"{h}\" viewBox=\"0 0 {w} {h}\">"
    );
    let _ = writeln!(s, "<rect width=\"{w}\" height=\"{h}\" fill=\"white\"/>");
    let _ = writeln!(
        s,
        "<text x=\"{}\" y=\"22\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"15\">{}</text>",
        w / 2.0,
        escape(title)
    );
    s
}

/// One ROC curve per model plus the chance diagonal.
pub(super) fn roc_overlay(title: &str, models: &[ModelResult]) -> String {
    let (left, top, size) = (60.0, 40.0, 400.0);
    let px = |fpr: f64| left + fpr * size;
    let py = |tpr: f64| top + (1.0 - tpr) * size;
    let mut s = open(700.0, 500.0, &format!("{title}: ROC curves"));
    let _ = writeln!(
        s,
        "<rect x=\"{left}\" y=\"{top}\" width=\"{size}\" height=\"{size}\" fill=\"none\" stroke=\"black\"/>"
    );
    for i in 0..=5 {
        let v = i as f64 / 5.0;
        let _ = writeln!(s, "<text x=\"{}\" y=\"{}\" text-anchor=\"middle\" {FONT}>{v:.1}</text>", px(v), top + size + 16.0);
        let _ = writeln!(s, "<text x=\"{}\" y=\"{}\" text-anchor=\"end\" {FONT}>{v:.1}</text>", left - 6.0, py(v) + 4.0);
    }
    let _ = writeln!(
        s,
        "<text x=\"{}\" y=\"{}\" text-anchor=\"middle\" {FONT}>False positive rate</text>",
        left + size / 2.0,
        top + size + 34.0
    );
    let _ = writeln!(
        s,
        "<text x=\"16\" y=\"{}\" text-anchor=\"middle\" transform=\"rotate(-90 16 {})\" {FONT}>True positive rate</text>",
        top + size / 2.0,
        top + size / 2.0
    );
    let _ = writeln!(
        s,
        "<line class=\"chance\" x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"gray\" stroke-dasharray=\"6 4\"/>",
        px(0.0),
        py(0.0),
        px(1.0),
        py(1.0)
    );
    for (i, m) in models.iter().enumerate() {
        let pts: Vec<String> = m.roc.points.iter().map(|&(f, t)| format!("{:.2},{:.2}", px(f), py(t))).collect();
        let _ = writeln!(
            s,
            "<polyline class=\"roc\" data-algorithm=\"{}\" points=\"{}\" fill=\"none\" stroke=\"{}\" stroke-width=\"2\"/>",
            m.algorithm.code(),
            pts.join(" "),
            color(i)
        );
        let ly = top + 14.0 + i as f64 * 20.0;
        let _ = writeln!(s, "<rect x=\"480\" y=\"{}\" width=\"14\" height=\"4\" fill=\"{}\"/>", ly - 4.0, color(i));
        let _ = writeln!(
            s,
            "<text x=\"500\" y=\"{ly}\" {FONT}>{} (AUC {:.3})</text>",
            escape(m.algorithm.code()),
            m.metrics.roc_auc
        );
    }
    s.push_str("</svg>\n");
    s
}

/// Accuracy, precision, recall, F1 and AUC side by side for each model.
pub(super) fn metric_bars(title: &str, models: &[ModelResult]) -> String {
    let names = ["accuracy", "precision", "recall", "f1", "roc_auc"];
    let (left, top, height) = (60.0, 40.0, 300.0);
    let group = 5.0 * 14.0 + 20.0;
    let width = (models.len().max(1) as f64) * group;
    let mut s = open(left + width + 140.0, top + height + 70.0, &format!("{title}: test metrics"));
    let base = top + height;
    let _ = writeln!(s, "<line x1=\"{left}\" y1=\"{base}\" x2=\"{}\" y2=\"{base}\" stroke=\"black\"/>", left + width);
    let _ = writeln!(s, "<line x1=\"{left}\" y1=\"{top}\" x2=\"{left}\" y2=\"{base}\" stroke=\"black\"/>");
    for i in 0..=5 {
        let v = i as f64 / 5.0;
        let y = base - v * height;
        let _ = writeln!(s, "<text x=\"{}\" y=\"{}\" text-anchor=\"end\" {FONT}>{v:.1}</text>", left - 6.0, y + 4.0);
    }
    for (g, m) in models.iter().enumerate() {
        let r = &m.metrics;
        let values = [r.accuracy, r.precision, r.recall, r.f1, r.roc_auc];
        let x0 = left + 10.0 + g as f64 * group;
        for (k, v) in values.iter().enumerate() {
            let h = v.clamp(0.0, 1.0) * height;
            let _ = writeln!(
                s,
                "<rect class=\"bar\" data-metric=\"{}\" x=\"{:.1}\" y=\"{:.2}\" width=\"12\" height=\"{:.2}\" fill=\"{}\"><title>{} {}: {v:.4}</title></rect>",
                names[k],
                x0 + k as f64 * 14.0,
                base - h,
                h,
                color(k),
                m.algorithm.code(),
                names[k]
            );
        }
        let _ = writeln!(
            s,
            "<text x=\"{:.1}\" y=\"{}\" text-anchor=\"middle\" {FONT}>{}</text>",
            x0 + 35.0,
            base + 18.0,
            escape(m.algorithm.code())
        );
    }
    for (k, n) in names.iter().enumerate() {
        let ly = top + 10.0 + k as f64 * 20.0;
        let lx = left + width + 20.0;
        let _ = writeln!(s, "<rect x=\"{lx}\" y=\"{}\" width=\"12\" height=\"12\" fill=\"{}\"/>", ly - 10.0, color(k));
        let _ = writeln!(s, "<text x=\"{}\" y=\"{ly}\" {FONT}>{n}</text>", lx + 18.0);
    }
    s.push_str("</svg>\n");
    s
}

/// Grid-search seconds per model, or fit seconds when no search ran.
pub(super) fn timing_bars(title: &str, models: &[ModelResult]) -> String {
    let searched = models.iter().any(|m| m.search_seconds.is_some());
    let value = |m: &ModelResult| if searched { m.search_seconds.unwrap_or(0.0) } else { m.fit_seconds };
    let label = if searched { "grid-search seconds" } else { "fit seconds" };
    let max = models.iter().map(value).fold(0.0f64, f64::max).max(1e-9);
    let (left, top, bar_w) = (70.0, 40.0, 360.0);
    let mut s = open(left + bar_w + 120.0, top + models.len() as f64 * 28.0 + 50.0, &format!("{title}: {label}"));
    for (i, m) in models.iter().enumerate() {
        let y = top + i as f64 * 28.0;
        let w = value(m) / max * bar_w;
        let _ = writeln!(s, "<text x=\"{}\" y=\"{}\" text-anchor=\"end\" {FONT}>{}</text>", left - 8.0, y + 15.0, escape(m.algorithm.code()));
        let _ = writeln!(
            s,
            "<rect class=\"bar\" x=\"{left}\" y=\"{y}\" width=\"{w:.2}\" height=\"20\" fill=\"{}\"/>",
            color(i)
        );
        let _ = writeln!(s, "<text x=\"{:.2}\" y=\"{}\" {FONT}>{:.3}</text>", left + w + 6.0, y + 15.0, value(m));
    }
    s.push_str("</svg>\n");
    s
}
