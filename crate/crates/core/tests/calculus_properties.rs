use proptest::prelude::*;
use spraylab::calculus::{
    connector, covariant_derivative, curvature_bracket, curvature_via_nabla, geodesic_defect, horizontal_lift,
    is_alternating, TTMVector, VectorField,
};
use spraylab::corpus;
use spraylab::geometry::{geodesic_spray_of, sample_pointed_vectors, ChristoffelConnection, PointedVector};
use spraylab::integrator::{integrate_geodesic, IntegratorOptions};

fn planar_connections() -> Vec<(&'static str, ChristoffelConnection)> {
    corpus::connections()
        .into_iter()
        .filter(|c| c.connection.dimension() == 2)
        .map(|c| (c.name, c.connection))
        .collect()
}

fn field(src: [&str; 2]) -> VectorField {
    VectorField::parse(2, &src).unwrap()
}

/// A point inside every planar corpus chart.
fn point() -> impl Strategy<Value = Vec<f64>> {
    (0.4f64..2.5, 0.3f64..2.0).prop_map(|(a, b)| vec![a, b])
}

fn vector() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-2.0f64..2.0, 2)
}

fn sup(a: &[f64]) -> f64 {
    a.iter().fold(0.0f64, |m, c| m.max(c.abs()))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn covariant_derivative_is_tensorial_in_the_direction(
        x in point(), u in vector(), w in vector(), alpha in -3.0f64..3.0, beta in -3.0f64..3.0,
    ) {
        let f = field(["x1*x2", "sin(x1) + x2^2"]);
        for (name, conn) in planar_connections() {
            let combo: Vec<f64> = u.iter().zip(&w).map(|(a, b)| alpha * a + beta * b).collect();
            let lhs = covariant_derivative(&conn, &combo, &f, &x).unwrap();
            let du = covariant_derivative(&conn, &u, &f, &x).unwrap();
            let dw = covariant_derivative(&conn, &w, &f, &x).unwrap();
            let rhs: Vec<f64> = du.iter().zip(&dw).map(|(a, b)| alpha * a + beta * b).collect();
            let err = lhs.iter().zip(&rhs).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
            prop_assert!(err <= 1e-10 * (1.0 + sup(&rhs)), "{name}: {err:e}");
        }
    }

    #[test]
    fn connector_kills_lifts_and_fixes_verticals(x in point(), v in vector(), vertical in vector()) {
        let u = field(["1 + x2", "x1"]);
        for (name, conn) in planar_connections() {
            let at = PointedVector::new(x.clone(), v.clone());
            let lift = horizontal_lift(&conn, &u, &at).unwrap();
            prop_assert!(connector(&conn, &lift).unwrap().iter().all(|c| *c == 0.0), "{name}");
            let z = TTMVector { base: at, horizontal: vec![0.0; 2], vertical: vertical.clone() };
            prop_assert_eq!(connector(&conn, &z).unwrap(), vertical.clone());
        }
    }

    #[test]
    fn curvature_readings_agree(x in point()) {
        let (u, v, w) = (field(["1", "x1*x2"]), field(["sin(x2)", "1"]), field(["x2", "x1^2 - 0.5"]));
        for (name, conn) in planar_connections() {
            let at = PointedVector::new(x.clone(), w.eval(&x).unwrap());
            let r1 = curvature_bracket(&conn, &u, &v, &at).unwrap();
            let r2 = curvature_via_nabla(&conn, &u, &v, &w, &x).unwrap();
            let err = r1.iter().zip(&r2).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
            prop_assert!(err <= 1e-6 * (1.0 + sup(&r1)), "{name}: {err:e}");
        }
    }
}

#[test]
fn geodesics_have_no_covariant_acceleration() {
    let opts = IntegratorOptions::with_tolerances(1e-12, 1e-14);
    for (name, conn) in planar_connections() {
        let spray = geodesic_spray_of(&conn);
        let sol = integrate_geodesic(&spray, &PointedVector::new(vec![1.2, 1.0], vec![0.4, -0.3]), (0.0, 1.0), &opts)
            .unwrap();
        let h = 1e-4;
        for s in sol.samples().iter().filter(|s| s.t > h && s.t < sol.t_plus() - h) {
            let (_, plus) = sol.state_at(s.t + h).unwrap();
            let (_, minus) = sol.state_at(s.t - h).unwrap();
            let acc: Vec<f64> = plus.iter().zip(&minus).map(|(p, m)| (p - m) / (2.0 * h)).collect();
            let defect = geodesic_defect(&conn, &s.x, &s.v, &acc).unwrap();
            assert!(sup(&defect) <= 1e-6, "{name} at t = {}: {defect:?}", s.t);
        }
        let (x, v) = ([1.2, 1.0], [0.4, -0.3]);
        let g = conn.apply(&x, &v, &v).unwrap();
        let acc = [g[0] + 0.5, g[1]];
        let defect = geodesic_defect(&conn, &x, &v, &acc).unwrap();
        assert!((defect[0] - 0.5).abs() < 1e-12 && defect[1] == 0.0, "{name}: {defect:?}");
    }
}

#[test]
fn only_the_flat_connection_has_vanishing_curvature() {
    let (u, v, w) = (field(["1", "0"]), field(["0", "1"]), field(["1", "x1"]));
    for (name, conn) in planar_connections() {
        let mut largest = 0.0f64;
        for at in sample_pointed_vectors(conn.chart(), 20, 1.0, 3) {
            let wx = w.eval(&at.x).unwrap();
            let r1 = curvature_bracket(&conn, &u, &v, &PointedVector::new(at.x.clone(), wx)).unwrap();
            let r2 = curvature_via_nabla(&conn, &u, &v, &w, &at.x).unwrap();
            largest = largest.max(sup(&r1)).max(sup(&r2));
        }
        match name {
            "flat" => assert!(largest <= 1e-10, "{largest}"),
            "half_plane" | "sphere" => assert!(largest > 1e-3, "{name}: {largest}"),
            _ => {}
        }
    }
}

#[test]
fn alternating_difference_matches_geodesic_agreement() {
    let base = corpus::sphere_connection();
    let chart = base.chart().clone();
    let g = [["0", "sin(x1)*cos(x1)*y2"], ["-cos(x1)/sin(x1)*y2", "-cos(x1)/sin(x1)*y1"]];
    let modified = |extra: [[&str; 2]; 2]| {
        let rows: Vec<Vec<String>> = (0..2)
            .map(|k| (0..2).map(|i| format!("{} + ({})", g[k][i], extra[k][i])).collect())
            .collect();
        ChristoffelConnection::parse(chart.clone(), &rows).unwrap()
    };
    let cases = [
        (modified([["x2*y2", "-x2*y1"], ["y2", "-y1"]]), true),
        (modified([["y1", "0"], ["0", "0"]]), false),
    ];
    let opts = IntegratorOptions::default();
    let starts = sample_pointed_vectors(&chart, 100, 0.3, 17);
    let s0 = geodesic_spray_of(&base);
    for (other, alternating) in cases {
        let report = is_alternating(&base, &other, 100, 1e-12, 5).unwrap();
        assert_eq!(report.alternating, alternating);
        let s1 = geodesic_spray_of(&other);
        let mut divergence = 0.0f64;
        for at in &starts {
            let a = integrate_geodesic(&s0, at, (0.0, 1.0), &opts).unwrap();
            let b = integrate_geodesic(&s1, at, (0.0, 1.0), &opts).unwrap();
            let t = a.t_plus().min(b.t_plus());
            let (pa, pb) = (a.position_at(t).unwrap(), b.position_at(t).unwrap());
            divergence = divergence.max(pa.iter().zip(&pb).fold(0.0f64, |m, (x, y)| m.max((x - y).abs())));
        }
        assert_eq!(divergence <= 1e-6, alternating, "divergence {divergence:e}");
    }
}
