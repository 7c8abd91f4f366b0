//! Plume figures as plain SVG: polylines and axes.

use spraylab::expmap::{CurveType, PlumeCurve};
use std::fmt::Write;

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 480.0;
const MARGIN: f64 = 40.0;

/// Screen coordinates of a curve point. In one dimension the horizontal
/// axis is `ε` and the vertical axis is `x`.
fn planar(curve: &PlumeCurve, param: f64, x: &[f64]) -> (f64, f64) {
    match (x.len(), curve.curve_type) {
        (1, CurveType::Geodesic) => (param, x[0]),
        (1, CurveType::ACurve) => (curve.fixed, x[0]),
        _ => (x[0], x[1]),
    }
}

pub fn plume_svg(curves: &[PlumeCurve]) -> String {
    let points: Vec<(f64, f64)> = curves
        .iter()
        .flat_map(|c| c.points.iter().map(move |(t, x)| planar(c, *t, x)))
        .collect();
    let fold = |f: fn(&(f64, f64)) -> f64| {
        points
            .iter()
            .map(f)
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)))
    };
    let (mut x0, mut x1) = fold(|p| p.0);
    let (mut y0, mut y1) = fold(|p| p.1);
    if points.is_empty() {
        (x0, x1, y0, y1) = (0.0, 1.0, 0.0, 1.0);
    }
    if x1 - x0 < 1e-12 {
        (x0, x1) = (x0 - 0.5, x1 + 0.5);
    }
    if y1 - y0 < 1e-12 {
        (y0, y1) = (y0 - 0.5, y1 + 0.5);
    }
    let scale = ((WIDTH - 2.0 * MARGIN) / (x1 - x0)).min((HEIGHT - 2.0 * MARGIN) / (y1 - y0));
    let sx = |x: f64| MARGIN + (x - x0) * scale;
    let sy = |y: f64| HEIGHT - MARGIN - (y - y0) * scale;

    let mut out = String::new();
    writeln!(out, r#"<?xml version="1.0" encoding="UTF-8"?>"#).unwrap();
    writeln!(out, "<!-- spraylab {} -->", env!("CARGO_PKG_VERSION")).unwrap();
    writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">"#
    )
    .unwrap();
    writeln!(out, r#"<rect width="100%" height="100%" fill="white"/>"#).unwrap();
    let (ax, ay) = (sx(x0), sy(y0));
    writeln!(
        out,
        r#"<g stroke="black" stroke-width="1"><line x1="{ax:.2}" y1="{ay:.2}" x2="{:.2}" y2="{ay:.2}"/><line x1="{ax:.2}" y1="{ay:.2}" x2="{ax:.2}" y2="{:.2}"/></g>"#,
        sx(x1),
        sy(y1)
    )
    .unwrap();
    writeln!(
        out,
        r#"<g font-family="sans-serif" font-size="10"><text x="{ax:.2}" y="{:.2}">{x0:.3}</text><text x="{:.2}" y="{:.2}" text-anchor="end">{x1:.3}</text><text x="{:.2}" y="{ay:.2}" text-anchor="end">{y0:.3}</text><text x="{:.2}" y="{:.2}" text-anchor="end">{y1:.3}</text></g>"#,
        ay + 14.0,
        sx(x1),
        ay + 14.0,
        ax - 4.0,
        ax - 4.0,
        sy(y1) + 4.0
    )
    .unwrap();
    for (kind, style) in [
        (CurveType::ACurve, r##"stroke="#999999" stroke-width="1""##),
        (CurveType::Geodesic, r##"stroke="black" stroke-width="0.8""##),
    ] {
        writeln!(out, r#"<g fill="none" {style}>"#).unwrap();
        for c in curves.iter().filter(|c| c.curve_type == kind && c.points.len() > 1) {
            let path: Vec<String> = c
                .points
                .iter()
                .map(|(t, x)| {
                    let (px, py) = planar(c, *t, x);
                    format!("{:.2},{:.2}", sx(px), sy(py))
                })
                .collect();
            writeln!(out, r#"<polyline points="{}"/>"#, path.join(" ")).unwrap();
        }
        writeln!(out, "</g>").unwrap();
    }
    writeln!(out, "</svg>").unwrap();
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn draws_each_curve_once() {
        let curves = vec![
            PlumeCurve {
                curve_type: CurveType::Geodesic,
                curve_id: 0,
                fixed: 1.0,
                points: vec![(0.0, vec![0.0, 0.0]), (1.0, vec![1.0, 1.0])],
            },
            PlumeCurve {
                curve_type: CurveType::ACurve,
                curve_id: 1,
                fixed: 1.0,
                points: vec![(0.5, vec![0.5, 0.5]), (1.0, vec![1.0, 1.0])],
            },
        ];
        let svg = plume_svg(&curves);
        assert_eq!(svg.matches("<polyline").count(), 2);
        assert!(svg.lines().nth(1).unwrap().starts_with("<!-- spraylab"));
        assert!(svg.ends_with("</svg>\n"));
    }
}
