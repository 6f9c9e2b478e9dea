//! Step-curve / fitted-model overlay charts as self-contained SVG.

use std::fmt::Write as _;
use std::path::Path;

use crate::analytics::AnalyticsError;
use crate::market::StepCurve;
use crate::model::ErfSumModel;

const WIDTH: f64 = 900.0;
const HEIGHT: f64 = 560.0;
const MARGIN_LEFT: f64 = 70.0;
const MARGIN_RIGHT: f64 = 20.0;
const MARGIN_TOP: f64 = 20.0;
const MARGIN_BOTTOM: f64 = 50.0;
/// Points sampled along the fitted model.
const MODEL_SAMPLES: usize = 600;

/// Writes an SVG overlaying the step curve and the fitted model.
///
/// The staircase is drawn with its vertical risers, so every breakpoint
/// appears as a vertex; the model is sampled densely across the quantity
/// domain. Axes are in MW and euro.
pub fn render_curve_svg(
    step: &StepCurve<f64>,
    model: &ErfSumModel<f64>,
    path: &Path,
) -> Result<(), AnalyticsError> {
    if step.side() != model.side() {
        return Err(AnalyticsError::InvalidInput(format!(
            "step curve is {} but model is {}",
            step.side().label(),
            model.side().label()
        )));
    }
    let svg = render_string(step, model);
    std::fs::write(path, svg).map_err(|source| AnalyticsError::Io { path: path.into(), source })
}

/// The SVG document as a string; split out for tests.
pub fn render_string(step: &StepCurve<f64>, model: &ErfSumModel<f64>) -> String {
    let q_max = step.total_quantity();
    let mut price_min = f64::INFINITY;
    let mut price_max = f64::NEG_INFINITY;
    for &(_, p) in step.points() {
        price_min = price_min.min(p);
        price_max = price_max.max(p);
    }
    for i in 0..=MODEL_SAMPLES {
        let v = model.evaluate(q_max * i as f64 / MODEL_SAMPLES as f64);
        price_min = price_min.min(v);
        price_max = price_max.max(v);
    }
    if price_max <= price_min {
        price_max = price_min + 1.0;
    }
    let pad = 0.05 * (price_max - price_min);
    let (y_lo, y_hi) = (price_min - pad, price_max + pad);

    let plot_w = WIDTH - MARGIN_LEFT - MARGIN_RIGHT;
    let plot_h = HEIGHT - MARGIN_TOP - MARGIN_BOTTOM;
    let sx = move |q: f64| MARGIN_LEFT + q / q_max * plot_w;
    let sy = move |p: f64| MARGIN_TOP + (y_hi - p) / (y_hi - y_lo) * plot_h;

    let mut svg = String::with_capacity(32 * 1024);
    let _ = write!(
        svg,
        r#"<svg version="1.1" width="{WIDTH}" height="{HEIGHT}" xmlns="http://www.w3.org/2000/svg">"#
    );
    let _ = write!(
        svg,
        r#"<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#
    );

    // Axes with a handful of ticks.
    let x0 = sx(0.0);
    let y0 = sy(y_lo);
    let _ = write!(
        svg,
        r#"<path d="M{x0} {} L{x0} {y0} L{} {y0}" stroke="black" fill="none" stroke-width="1"/>"#,
        sy(y_hi),
        sx(q_max),
    );
    for i in 0..=5 {
        let q = q_max * i as f64 / 5.0;
        let x = sx(q);
        let _ = write!(svg, r#"<line x1="{x}" y1="{y0}" x2="{x}" y2="{}" stroke="black"/>"#, y0 + 5.0);
        let _ = write!(
            svg,
            r#"<text x="{x}" y="{}" text-anchor="middle" font-size="12">{:.0}</text>"#,
            y0 + 20.0,
            q
        );
        let p = y_lo + (y_hi - y_lo) * i as f64 / 5.0;
        let y = sy(p);
        let _ = write!(svg, r#"<line x1="{}" y1="{y}" x2="{x0}" y2="{y}" stroke="black"/>"#, x0 - 5.0);
        let _ = write!(
            svg,
            r#"<text x="{}" y="{}" text-anchor="end" font-size="12">{:.1}</text>"#,
            x0 - 8.0,
            y + 4.0,
            p
        );
    }
    let _ = write!(
        svg,
        r#"<text x="{}" y="{}" text-anchor="middle" font-size="13">quantity (MW)</text>"#,
        MARGIN_LEFT + plot_w / 2.0,
        HEIGHT - 10.0
    );
    let _ = write!(
        svg,
        r#"<text x="16" y="{}" text-anchor="middle" font-size="13" transform="rotate(-90 16 {})">price (EUR)</text>"#,
        MARGIN_TOP + plot_h / 2.0,
        MARGIN_TOP + plot_h / 2.0
    );

    // Step curve as a staircase with risers.
    let mut d = String::new();
    let first = step.points()[0];
    let _ = write!(d, "M{} {}", sx(0.0), sy(first.1));
    let mut prev_price = first.1;
    for &(q, p) in step.points() {
        if p != prev_price {
            let _ = write!(d, " L{} {}", sx(q_binding_prev(step, q)), sy(prev_price));
            let _ = write!(d, " L{} {}", sx(q_binding_prev(step, q)), sy(p));
            prev_price = p;
        }
        let _ = write!(d, " L{} {}", sx(q), sy(p));
    }
    let _ = write!(
        svg,
        r#"<path d="{d}" stroke="steelblue" fill="none" stroke-width="1.5"/>"#
    );

    // Fitted model, densely sampled.
    let mut d = String::new();
    for i in 0..=MODEL_SAMPLES {
        let q = q_max * i as f64 / MODEL_SAMPLES as f64;
        let v = model.evaluate(q);
        let cmd = if i == 0 { 'M' } else { 'L' };
        let _ = write!(d, "{cmd}{} {} ", sx(q), sy(v));
    }
    let _ = write!(
        svg,
        r#"<path d="{}" stroke="coral" fill="none" stroke-width="1.5"/>"#,
        d.trim_end()
    );

    let _ = write!(
        svg,
        r#"<text x="{}" y="{}" font-size="12" fill="steelblue">step curve ({})</text>"#,
        MARGIN_LEFT + 10.0,
        MARGIN_TOP + 16.0,
        step.side().label()
    );
    let _ = write!(
        svg,
        r#"<text x="{}" y="{}" font-size="12" fill="coral">fitted model ({} terms)</text>"#,
        MARGIN_LEFT + 10.0,
        MARGIN_TOP + 32.0,
        model.terms().len()
    );
    svg.push_str("</svg>");
    svg
}

/// Quantity where the riser leading into the breakpoint at `q` sits: the
/// previous breakpoint's quantity.
fn q_binding_prev(step: &StepCurve<f64>, q: f64) -> f64 {
    let pts = step.points();
    let idx = pts.partition_point(|&(bq, _)| bq < q);
    if idx == 0 {
        0.0
    } else {
        pts[idx - 1].0
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::market::Side;
    use crate::model::{ErfSumModel, ErfTerm};

    fn checked_xml(svg: &str) {
        // Minimal well-formedness scan: every element opened is closed or
        // self-closing, and angle brackets balance.
        assert!(svg.starts_with("<svg"));
        assert!(svg.ends_with("</svg>"));
        let mut stack: Vec<String> = Vec::new();
        let mut rest = svg;
        while let Some(start) = rest.find('<') {
            let end = rest[start..].find('>').expect("unclosed tag") + start;
            let tag = &rest[start + 1..end];
            if let Some(name) = tag.strip_prefix('/') {
                let open = stack.pop().expect("close without open");
                assert_eq!(open, name, "mismatched close");
            } else if !tag.ends_with('/') {
                let name: String =
                    tag.chars().take_while(|c| c.is_ascii_alphanumeric()).collect();
                stack.push(name);
            }
            rest = &rest[end + 1..];
        }
        assert!(stack.is_empty(), "unclosed elements: {stack:?}");
    }

    #[test]
    fn renders_well_formed_svg_with_two_paths() {
        let step = StepCurve::from_breakpoints(
            Side::Supply,
            vec![(10.0, 5.0), (20.0, 8.0), (30.0, 12.0)],
        )
        .unwrap();
        let model = ErfSumModel::new(
            Side::Supply,
            5.0,
            vec![ErfTerm { amplitude: 3.5, center: 15.0, shape: 0.3 }],
        )
        .unwrap();
        let svg = render_string(&step, &model);
        checked_xml(&svg);
        assert_eq!(svg.matches("stroke=\"steelblue\"").count(), 1);
        assert_eq!(svg.matches("stroke=\"coral\"").count(), 1);
    }

    #[test]
    fn empty_model_renders_flat_line() {
        let step =
            StepCurve::from_breakpoints(Side::Supply, vec![(10.0, 5.0), (20.0, 8.0)]).unwrap();
        let model = ErfSumModel::new(Side::Supply, 5.0, vec![]).unwrap();
        let svg = render_string(&step, &model);
        checked_xml(&svg);
    }

    #[test]
    fn all_breakpoints_appear_in_the_step_path() {
        let points: Vec<(f64, f64)> =
            (1..=324).map(|i| (i as f64 * 10.0, i as f64 * 0.5)).collect();
        let step = StepCurve::from_breakpoints(Side::Supply, points.clone()).unwrap();
        let model = ErfSumModel::new(Side::Supply, 0.5, vec![]).unwrap();
        let svg = render_string(&step, &model);
        let path_start = svg.find("stroke=\"steelblue\"").unwrap();
        let d_start = svg[..path_start].rfind("d=\"").unwrap() + 3;
        let d_end = svg[d_start..].find('"').unwrap() + d_start;
        let vertex_count = svg[d_start..d_end].matches('L').count() + 1;
        // Staircase: every breakpoint is a vertex, plus two per riser.
        assert!(vertex_count >= points.len(), "{vertex_count} vertices");
    }

    #[test]
    fn side_mismatch_is_rejected() {
        let step =
            StepCurve::from_breakpoints(Side::Supply, vec![(10.0, 5.0)]).unwrap();
        let model = ErfSumModel::new(Side::Demand, 5.0, vec![]).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let out = dir.path().join("x.svg");
        assert!(matches!(
            render_curve_svg(&step, &model, &out),
            Err(AnalyticsError::InvalidInput(_))
        ));
    }

    #[test]
    fn writes_file() {
        let step =
            StepCurve::from_breakpoints(Side::Supply, vec![(10.0, 5.0), (20.0, 9.0)]).unwrap();
        let model = ErfSumModel::new(Side::Supply, 5.0, vec![]).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let out = dir.path().join("curve.svg");
        render_curve_svg(&step, &model, &out).unwrap();
        assert!(out.exists());
    }
}
