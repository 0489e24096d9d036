//! Standalone SVG figures.

use std::fmt::Write;

use super::{Comparison, ConfusionMatrix};
use crate::class::DiagnosticClass;

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

/// Grouped bars of accuracy and macro F1 per run, on a 0..1 axis.
pub fn metrics_bar_chart_svg(c: &Comparison) -> String {
    let group = 120.0;
    let (left, top, height) = (50.0, 30.0, 200.0);
    let width = left + group * c.rows.len().max(1) as f64 + 20.0;
    let mut s = String::new();
    let _ = write!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{}" font-family="sans-serif" font-size="11">"#,
        top + height + 50.0
    );
    let _ = write!(s, r#"<text x="{left}" y="18">accuracy (blue) and macro F1 (orange)</text>"#);
    for tick in 0..=4 {
        let v = tick as f64 / 4.0;
        let y = top + height * (1.0 - v);
        let _ = write!(
            s,
            r##"<line x1="{left}" y1="{y}" x2="{}" y2="{y}" stroke="#ddd"/><text x="{}" y="{}" text-anchor="end">{v:.2}</text>"##,
            width - 20.0,
            left - 4.0,
            y + 4.0
        );
    }
    for (i, r) in c.rows.iter().enumerate() {
        let x0 = left + group * i as f64 + 15.0;
        for (k, (v, colour)) in [(r.accuracy, "#4878a8"), (r.macro_f1, "#e8923a")].iter().enumerate() {
            let h = height * v.clamp(0.0, 1.0);
            let x = x0 + 45.0 * k as f64;
            let _ = write!(
                s,
                r#"<rect x="{x}" y="{}" width="40" height="{h}" fill="{colour}"/><text x="{}" y="{}" text-anchor="middle">{v:.3}</text>"#,
                top + height - h,
                x + 20.0,
                top + height - h - 3.0
            );
        }
        let _ = write!(
            s,
            r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#,
            x0 + 42.5,
            top + height + 16.0,
            escape(&r.run_id)
        );
    }
    s.push_str("</svg>\n");
    s
}

/// Row-normalized confusion heatmap with counts and percentages per cell.
pub fn confusion_heatmap_svg(title: &str, cm: &ConfusionMatrix) -> String {
    let cell = 64.0;
    let (left, top) = (70.0, 50.0);
    let n = DiagnosticClass::ALL.len() as f64;
    let pct = cm.percentages();
    let mut s = String::new();
    let _ = write!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{}" height="{}" font-family="sans-serif" font-size="11">"#,
        left + cell * n + 20.0,
        top + cell * n + 40.0
    );
    let _ = write!(s, r#"<text x="{left}" y="18">{}</text>"#, escape(title));
    for (j, c) in DiagnosticClass::ALL.iter().enumerate() {
        let _ = write!(
            s,
            r#"<text x="{}" y="{}" text-anchor="middle">{}</text><text x="{}" y="{}" text-anchor="end">{}</text>"#,
            left + cell * (j as f64 + 0.5),
            top - 6.0,
            c.name(),
            left - 6.0,
            top + cell * (j as f64 + 0.5) + 4.0,
            c.name()
        );
    }
    for i in 0..DiagnosticClass::ALL.len() {
        for j in 0..DiagnosticClass::ALL.len() {
            let p = pct[i][j] / 100.0;
            let shade = (255.0 * (1.0 - p)).round() as u8;
            let ink = if p > 0.5 { "#fff" } else { "#000" };
            let (x, y) = (left + cell * j as f64, top + cell * i as f64);
            let _ = write!(
                s,
                r##"<rect x="{x}" y="{y}" width="{cell}" height="{cell}" fill="rgb({shade},{shade},255)" stroke="#888"/><text x="{}" y="{}" text-anchor="middle" fill="{ink}">{}</text><text x="{}" y="{}" text-anchor="middle" fill="{ink}">{:.1}%</text>"##,
                x + cell / 2.0,
                y + cell / 2.0 - 2.0,
                cm.counts[i][j],
                x + cell / 2.0,
                y + cell / 2.0 + 12.0,
                pct[i][j]
            );
        }
    }
    let _ = write!(
        s,
        r#"<text x="{}" y="{}" text-anchor="middle">predicted</text>"#,
        left + cell * n / 2.0,
        top + cell * n + 24.0
    );
    s.push_str("</svg>\n");
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eval::{compare_runs, confusion, metrics, RunMetrics};

    #[test]
    fn heatmap_has_every_cell() {
        let cm = confusion(&[0, 1, 1, 4], &[0, 1, 2, 4]).unwrap();
        let svg = confusion_heatmap_svg("a <b>", &cm);
        assert!(svg.starts_with("<svg"));
        assert!(svg.trim_end().ends_with("</svg>"));
        assert_eq!(svg.matches("<rect").count(), 25);
        assert!(svg.contains("a &lt;b&gt;"));
        assert!(svg.contains("50.0%"));
    }

    #[test]
    fn bar_chart_has_two_bars_per_run() {
        let cm = confusion(&[0, 1], &[0, 0]).unwrap();
        let m = metrics(&cm).unwrap();
        let r = RunMetrics {
            run_id: "x".into(),
            strategy: "none".into(),
            seed: 0,
            config_digest: String::new(),
            test_digest: "d".into(),
            train_class_counts: vec![],
            accuracy: m.accuracy,
            macro_f1: m.macro_f1,
            per_class: m.per_class,
            confusion: cm,
        };
        let c = compare_runs(&[r.clone(), RunMetrics { run_id: "y".into(), ..r }]).unwrap();
        let svg = metrics_bar_chart_svg(&c);
        assert_eq!(svg.matches("<rect").count(), 4);
    }
}
