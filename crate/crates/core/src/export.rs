//! CSV and JSON renderings of numerical results.
//!
//! Numbers are written in the shortest form that round-trips, so equal
//! results give byte-identical files.

use crate::expmap::{CurveType, PlumeCurve};
use crate::integrator::GeodesicSolution;
use crate::probes::Region;
use nalgebra::DMatrix;
use serde_json::{json, Value};

/// Shortest round-trip decimal; exponent form outside `[1e-5, 1e16)`.
pub fn format_number(v: f64) -> String {
    if v == 0.0 || !v.is_finite() || (1e-5..1e16).contains(&v.abs()) {
        format!("{v}")
    } else {
        format!("{v:e}")
    }
}

fn coordinate_names(prefix: &str, n: usize) -> impl Iterator<Item = String> + '_ {
    (1..=n).map(move |i| format!("{prefix}{i}"))
}

fn write_rows(header: Vec<String>, rows: impl IntoIterator<Item = Vec<String>>) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(&header).expect("in-memory write");
    for row in rows {
        w.write_record(&row).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 output")
}

fn numbers(values: &[f64]) -> impl Iterator<Item = String> + '_ {
    values.iter().map(|v| format_number(*v))
}

/// Columns `t, x1..xn, v1..vn` at the solver's step points.
pub fn geodesic_csv(sol: &GeodesicSolution) -> String {
    let n = sol.dimension();
    let mut header = vec!["t".to_string()];
    header.extend(coordinate_names("x", n));
    header.extend(coordinate_names("v", n));
    let rows = sol.samples().into_iter().map(|s| {
        let mut row = vec![format_number(s.t)];
        row.extend(numbers(&s.x));
        row.extend(numbers(&s.v));
        row
    });
    write_rows(header, rows)
}

/// Metadata accompanying [`geodesic_csv`].
pub fn geodesic_sidecar(sol: &GeodesicSolution) -> Value {
    let spray: Vec<String> = sol.spray().components().iter().map(|c| c.to_string()).collect();
    json!({
        "spray": spray,
        "initial": sol.initial(),
        "options": sol.options(),
        "t_minus": sol.t_minus(),
        "t_plus": sol.t_plus(),
        "termination": {
            "minus": sol.termination_minus(),
            "plus": sol.termination_plus(),
        },
        "samples": sol.samples().len(),
    })
}

/// Columns `curve_type, curve_id, fixed, param, x1..xn`. On geodesics
/// `fixed` is `a` and `param` is `ε`; on a-curves the roles swap.
pub fn plume_csv(curves: &[PlumeCurve], n: usize) -> String {
    let mut header = vec!["curve_type".to_string(), "curve_id".into(), "fixed".into(), "param".into()];
    header.extend(coordinate_names("x", n));
    let rows = curves.iter().flat_map(|c| {
        let kind = match c.curve_type {
            CurveType::Geodesic => "geodesic",
            CurveType::ACurve => "a_curve",
        };
        c.points.iter().map(move |(param, x)| {
            let mut row = vec![
                kind.to_string(),
                c.curve_id.to_string(),
                format_number(c.fixed),
                format_number(*param),
            ];
            row.extend(numbers(x));
            row
        })
    });
    write_rows(header, rows)
}

/// Columns `x1..xn, v1..vn, g_k_i` (row-major) for sampled connection maps.
pub fn gamma_grid_csv(n: usize, rows: &[(Vec<f64>, Vec<f64>, DMatrix<f64>)]) -> String {
    let mut header: Vec<String> = coordinate_names("x", n).chain(coordinate_names("v", n)).collect();
    for k in 1..=n {
        for i in 1..=n {
            header.push(format!("g_{k}_{i}"));
        }
    }
    let body = rows.iter().map(|(x, v, g)| {
        let mut row: Vec<String> = numbers(x).chain(numbers(v)).collect();
        for k in 0..n {
            for i in 0..n {
                row.push(format_number(g[(k, i)]));
            }
        }
        row
    });
    write_rows(header, body)
}

/// Columns `t, det` for a determinant scan.
pub fn series_csv(names: [&str; 2], points: &[(f64, f64)]) -> String {
    write_rows(
        names.iter().map(|s| s.to_string()).collect(),
        points.iter().map(|(a, b)| vec![format_number(*a), format_number(*b)]),
    )
}

/// A box as `{"lower": [...], "upper": [...]}`.
pub fn region_json(region: &Region) -> Value {
    json!({ "lower": region.lower, "upper": region.upper })
}
