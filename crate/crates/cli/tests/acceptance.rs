//! End-to-end acceptance checks. Prints one PASS/FAIL line per criterion and
//! exits nonzero if any criterion fails.

use spraylab::calculus::{curvature_bracket, curvature_via_nabla, is_alternating, VectorField};
use spraylab::corpus;
use spraylab::expmap::{a_curve_deviation, default_a_grid, exp_eps, tight_options};
use spraylab::geometry::{
    classify_spray_homogeneity, geodesic_spray_of, sample_pointed_vectors, ChristoffelConnection,
    HomogeneityClass, PointedVector, Spray,
};
use spraylab::integrator::{integrate_geodesic, IntegratorOptions, Termination};
use spraylab::probes::{
    conjugate_point_scan, connect_geodesically, disprisonment_probe, stability_experiment, DisprisonmentConfig,
    ProbesConfig, Region, Verdict,
};
use spraylab::torsion::{torsion_free_gamma, torsion_matrix, NumericalConnection, TorsionParams};
use std::f64::consts::PI;
use std::time::Instant;

type Check = Result<String, String>;

fn ensure(ok: bool, detail: String) -> Check {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt()
}

fn sup(a: &[f64]) -> f64 {
    a.iter().fold(0.0f64, |m, v| m.max(v.abs()))
}

fn endpoint(spray: &Spray, x: &[f64], v: &[f64], t: f64) -> Vec<f64> {
    let sol = integrate_geodesic(spray, &PointedVector::new(x.to_vec(), v.to_vec()), (0.0, t), &IntegratorOptions::default())
        .expect("integrates");
    assert!(sol.t_plus() >= t, "geodesic ends early at {}", sol.t_plus());
    sol.position_at(t).unwrap()
}

fn blow_up() -> Check {
    let start = Instant::now();
    let spray = corpus::blow_up_spray();
    let mut worst = 0.0f64;
    for c1 in [PI / 8.0, PI / 4.0, 3.0 * PI / 8.0] {
        let at = PointedVector::new(vec![0.0], vec![c1.tan()]);
        let sol = integrate_geodesic(&spray, &at, (0.0, 1.0), &IntegratorOptions::default()).map_err(|e| e.to_string())?;
        if sol.termination_plus() != Termination::BlowUp {
            return Err(format!("C1 = {c1}: no blow-up reported"));
        }
        worst = worst.max((sol.t_plus() - (0.5 - c1 / PI)).abs());
    }
    let elapsed = start.elapsed().as_secs_f64();
    ensure(worst <= 1e-3 && elapsed < 1.0, format!("max error {worst:.2e}, {elapsed:.3}s"))
}

fn exp_zero() -> Check {
    let mut draws = 0;
    for (i, entry) in corpus::sprays().iter().enumerate() {
        for at in sample_pointed_vectors(entry.spray.chart(), 125, 3.0, 100 + i as u64) {
            let value = exp_eps(&entry.spray, &at.x, &at.v, 0.0, &IntegratorOptions::default())
                .map_err(|e| e.to_string())?
                .value;
            if value.as_deref() != Some(at.x.as_slice()) {
                return Err(format!("{}: exp⁰ moved {:?}", entry.name, at.x));
            }
            draws += 1;
        }
    }
    ensure(draws == 1000, format!("{draws} draws exact"))
}

fn closed_forms() -> Check {
    let start = Instant::now();
    let mut worst = 0.0f64;
    let mut record = |got: Vec<f64>, want: Vec<f64>| worst = worst.max(dist(&got, &want));
    let (p, v) = ([0.3, -1.2], [1.5, 0.4]);
    record(endpoint(&corpus::zero_spray(2), &p, &v, 1.0), vec![p[0] + v[0], p[1] + v[1]]);
    let (p1, v1) = (0.7, -0.4);
    record(
        endpoint(&corpus::linear_growth_spray(), &[p1], &[v1], 1.0),
        vec![p1 * 1f64.cosh() + v1 * 1f64.sinh()],
    );
    let hp = corpus::half_plane_spray();
    record(endpoint(&hp, &[0.0, 1.0], &[0.0, 1.0], 1.0), vec![0.0, 1f64.exp()]);
    record(endpoint(&hp, &[0.0, 1.0], &[1.0, 0.0], 1.0), vec![1f64.tanh(), 1.0 / 1f64.cosh()]);
    let (x0, w) = ([0.5, 0.2], [0.3, -0.8]);
    let center = [x0[0] - w[1], x0[1] + w[0]];
    let (s, c) = 1f64.sin_cos();
    let rel = [x0[0] - center[0], x0[1] - center[1]];
    record(
        endpoint(&corpus::rotation_spray(), &x0, &w, 1.0),
        vec![center[0] + c * rel[0] - s * rel[1], center[1] + s * rel[0] + c * rel[1]],
    );
    let elapsed = start.elapsed().as_secs_f64();
    ensure(worst <= 1e-6 && elapsed < 5.0, format!("max endpoint error {worst:.2e}, {elapsed:.3}s"))
}

fn quadratic_reduction() -> Check {
    let params = TorsionParams::default();
    let spray = corpus::half_plane_spray();
    let conn = corpus::half_plane_connection();
    let mut worst_half = 0.0f64;
    for at in sample_pointed_vectors(spray.chart(), 20, 1.0, 41) {
        let hat = torsion_free_gamma(&spray, &at, &params).map_err(|e| e.to_string())?;
        let exact = conn.gamma(&at.x, &at.v).map_err(|e| e.to_string())?;
        worst_half = worst_half.max((hat - exact).amax());
    }
    let mut worst_compat = 0.0f64;
    for (i, entry) in corpus::sprays().iter().enumerate() {
        let radius = if entry.name == "blow_up" { 0.5 } else { 1.0 };
        for at in sample_pointed_vectors(entry.spray.chart(), 100, radius, 200 + i as u64) {
            let hat = torsion_free_gamma(&entry.spray, &at, &params).map_err(|e| format!("{}: {e}", entry.name))?;
            let lhs = &hat * nalgebra::DVector::from_column_slice(&at.v);
            let rhs = entry.spray.eval(&at.x, &at.v).map_err(|e| e.to_string())?;
            let err = lhs.iter().zip(&rhs).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
            worst_compat = worst_compat.max(err);
        }
    }
    ensure(
        worst_half <= 1e-3 && worst_compat <= 1e-3,
        format!("half-plane {worst_half:.2e}, compatibility {worst_compat:.2e}"),
    )
}

fn torsion_properties() -> Check {
    const CONSTRUCTION_TOL: f64 = 1e-3;
    let params = TorsionParams::default();
    let mut worst = 0.0f64;
    let numerical = NumericalConnection::new(corpus::half_plane_spray(), params.clone());
    let classical = corpus::half_plane_connection();
    for at in sample_pointed_vectors(classical.chart(), 10, 1.0, 51) {
        let t1 = torsion_matrix(&numerical, &at, &params).map_err(|e| e.to_string())?;
        let t2 = torsion_matrix(&classical, &at, &params).map_err(|e| e.to_string())?;
        worst = worst.max(t1.amax()).max(t2.amax());
    }
    let asym = corpus::asymmetric_connection();
    let at = PointedVector::new(vec![0.2, -0.3], vec![0.0, 1.0]);
    let t = torsion_matrix(&asym, &at, &params).map_err(|e| e.to_string())?;
    let u = nalgebra::DVector::from_vec(vec![1.0, 0.0]);
    let classical_value = (&t * u)[0];
    ensure(
        worst <= 2.0 * CONSTRUCTION_TOL && (classical_value + 1.0).abs() <= 1e-3,
        format!("torsion-free max {worst:.2e}, T(e1, e2)¹ = {classical_value:.6}"),
    )
}

fn curvature_cross_check() -> Check {
    let mut worst = 0.0f64;
    let mut flat = 0.0f64;
    for (i, entry) in corpus::connections().iter().enumerate() {
        let conn = &entry.connection;
        let n = conn.dimension();
        let src: [Vec<&str>; 3] = if n == 1 {
            [vec!["1 + x1^2"], vec!["cos(x1)"], vec!["x1"]]
        } else {
            [vec!["1", "x1*x2"], vec!["sin(x2)", "1"], vec!["x2", "x1^2 - 0.5"]]
        };
        let [u, v, w] = src.map(|s| VectorField::parse(n, &s).unwrap());
        for at in sample_pointed_vectors(conn.chart(), 50, 1.0, 300 + i as u64) {
            let wx = w.eval(&at.x).map_err(|e| e.to_string())?;
            let r1 = curvature_bracket(conn, &u, &v, &PointedVector::new(at.x.clone(), wx)).map_err(|e| e.to_string())?;
            let r2 = curvature_via_nabla(conn, &u, &v, &w, &at.x).map_err(|e| e.to_string())?;
            let d = r1.iter().zip(&r2).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
            worst = worst.max(d);
            if entry.name == "flat" {
                flat = flat.max(sup(&r1)).max(sup(&r2));
            }
        }
    }
    ensure(worst <= 1e-6 && flat <= 1e-10, format!("max difference {worst:.2e}, flat {flat:.1e}"))
}

fn homogeneity() -> Check {
    let mut wrong = Vec::new();
    for entry in corpus::sprays() {
        let report = classify_spray_homogeneity(&entry.spray, &[1.0, 2.0, 3.0], 64, 1e-8, 7);
        let ok = match entry.class {
            HomogeneityClass::Complete => report.is_complete(entry.degree.unwrap()),
            HomogeneityClass::Positive => {
                let m = entry.degree.unwrap();
                report.is_positive(m) && !report.is_complete(m)
            }
            HomogeneityClass::Inhomogeneous => report.positive.is_empty(),
        };
        if !ok || report.class != entry.class {
            wrong.push(entry.name);
        }
    }
    ensure(wrong.is_empty(), format!("misclassified: {wrong:?}"))
}

fn difference_operator() -> Check {
    let base = corpus::half_plane_connection();
    let chart = base.chart().clone();
    let rows = |extra: [[&str; 2]; 2]| -> ChristoffelConnection {
        let g = [["y2/x2", "y1/x2"], ["-y1/x2", "y2/x2"]];
        let rows: Vec<Vec<String>> = (0..2)
            .map(|k| (0..2).map(|i| format!("{} + ({})", g[k][i], extra[k][i])).collect())
            .collect();
        ChristoffelConnection::parse(chart.clone(), &rows).unwrap()
    };
    // Γ̄ = Γ + A(y) with A(y)u = (y2 u1 − y1 u2)·(1, x1), so A(y)y = 0.
    let antisym = rows([["y2", "-y1"], ["x1*y2", "-x1*y1"]]);
    let shifted = rows([["1", "0"], ["0", "1"]]);
    let alt = is_alternating(&base, &antisym, 100, 1e-12, 61).map_err(|e| e.to_string())?;
    let not_alt = is_alternating(&base, &shifted, 100, 1e-12, 61).map_err(|e| e.to_string())?;
    let (s1, s2) = (geodesic_spray_of(&base), geodesic_spray_of(&antisym));
    let mut divergence = 0.0f64;
    for at in sample_pointed_vectors(&chart, 100, 0.5, 62) {
        divergence = divergence.max(dist(&endpoint(&s1, &at.x, &at.v, 1.0), &endpoint(&s2, &at.x, &at.v, 1.0)));
    }
    let s3 = geodesic_spray_of(&shifted);
    let witness = not_alt.witness.clone().ok_or("identity shift has no witness")?;
    let split = dist(
        &endpoint(&s1, &witness.x, &witness.v, 0.5),
        &endpoint(&s3, &witness.x, &witness.v, 0.5),
    );
    ensure(
        alt.alternating && divergence <= 1e-6 && !not_alt.alternating && split > 1e-3,
        format!("divergence {divergence:.2e}, shifted witness splits by {split:.3}"),
    )
}

fn a_curves() -> Check {
    let grid = default_a_grid();
    let opts = tight_options();
    let quad = a_curve_deviation(&corpus::quadratic_spray(), &[0.2, -0.1], &[0.5, 0.3], 1.0, &grid, &opts)
        .map_err(|e| e.to_string())?;
    let lin = a_curve_deviation(&corpus::linear_growth_spray(), &[0.5], &[1.0], 1.0, &grid, &opts)
        .map_err(|e| e.to_string())?;
    ensure(quad <= 1e-6 && lin > 1e-3, format!("quadratic {quad:.2e}, inhomogeneous {lin:.3}"))
}

fn connectivity() -> Check {
    let spray = corpus::half_plane_spray();
    let opts = tight_options();
    let points = sample_pointed_vectors(spray.chart(), 100, 1.0, 71);
    let mut worst = 0.0f64;
    for (k, pair) in points.chunks(2).enumerate() {
        let r = connect_geodesically(&spray, &pair[0].x, &pair[1].x, 1.0, 8, k as u64, &opts)
            .map_err(|e| format!("pair {k}: {e}"))?;
        worst = worst.max(r.residual);
    }
    let mut found = 0;
    for v in [[1.0, 0.0], [0.0, 1.0], [0.6, -0.8]] {
        found += conjugate_point_scan(&spray, &[0.0, 1.0], &v, 5.0, 200, &opts)
            .map_err(|e| e.to_string())?
            .len();
    }
    let sphere = conjugate_point_scan(&corpus::sphere_spray(), &[PI / 2.0, 0.0], &[0.0, 1.0], 4.0, 200, &opts)
        .map_err(|e| e.to_string())?;
    let first = sphere.first().copied().unwrap_or(f64::NAN);
    ensure(
        worst <= 1e-8 && found == 0 && (first - PI).abs() <= 1e-3,
        format!("max residual {worst:.1e}, half-plane conjugates {found}, sphere first {first:.6}"),
    )
}

fn probes() -> Check {
    let opts = IntegratorOptions::default();
    let config = DisprisonmentConfig {
        compact: Region::new(vec![-1.0, -1.0], vec![1.0, 1.0]).unwrap(),
        horizon: 20.0,
        budget: 16,
        speed: 1.0,
    };
    let zero = disprisonment_probe(&corpus::zero_spray(2), &config, 5, &opts).map_err(|e| e.to_string())?;
    let rotation = corpus::rotation_spray();
    let rot = disprisonment_probe(&rotation, &config, 5, &opts).map_err(|e| e.to_string())?;
    let witness = rot.witness_initial().ok_or("no witness")?;
    let center = [witness.x[0] - witness.v[1], witness.x[1] + witness.v[0]];
    let radius = sup(&[dist(&witness.v, &[0.0, 0.0])]);
    let sol = integrate_geodesic(&rotation, &witness, (0.0, 2.0 * PI), &opts).map_err(|e| e.to_string())?;
    let roundness = sol
        .samples()
        .iter()
        .fold(0.0f64, |m, s| m.max((dist(&s.x, &center) - radius).abs()));
    let probes = ProbesConfig {
        disprisonment: Some(config.clone()),
        pseudoconvexity: None,
    };
    let bump = [spraylab::expr::parse("y1", 2).unwrap(), spraylab::expr::parse("y2", 2).unwrap()];
    let stab = stability_experiment(&rotation, &bump, &[0.0], &probes, 5, &opts).map_err(|e| e.to_string())?;
    let row = stab.stability.first().and_then(|r| r.disprisonment.as_ref()).ok_or("no stability row")?;
    let same = serde_json::to_string(row).unwrap() == serde_json::to_string(&rot).unwrap();
    ensure(
        zero.verdict == Verdict::Pass && rot.verdict == Verdict::Fail && roundness <= 1e-6 && same,
        format!(
            "zero {:?}, rotation {:?} (circle error {roundness:.1e}), amplitude 0 identical: {same}",
            zero.verdict, rot.verdict
        ),
    )
}

fn plume_figure() -> Check {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let job = dir.path().join("job.json");
    std::fs::write(
        &job,
        r#"{"dimension":1,"spray":["x1"],"plume":{"p":[0.5],"directions":[[1],[-1],[0.5]]}}"#,
    )
    .map_err(|e| e.to_string())?;
    let out = std::process::Command::new(env!("CARGO_BIN_EXE_spraylab"))
        .args(["plume", "--job", job.to_str().unwrap(), "--out", dir.path().to_str().unwrap()])
        .output()
        .map_err(|e| e.to_string())?;
    if !out.status.success() {
        return Err(String::from_utf8_lossy(&out.stderr).into_owned());
    }
    let meta: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("plume.json")).unwrap()).unwrap();
    let a_grid: Vec<f64> = serde_json::from_value(meta["a_grid"].clone()).unwrap();
    let caption = a_grid.len() == 20
        && a_grid.iter().enumerate().all(|(k, a)| (a - 0.05 * (k + 1) as f64).abs() < 1e-12);
    let svg = std::fs::read_to_string(dir.path().join("plume.svg")).unwrap();
    let polylines = svg.matches("<polyline").count();
    ensure(
        caption && polylines >= 60,
        format!("caption grid {caption}, {polylines} polylines"),
    )
}

fn main() {
    let criteria: [(&str, fn() -> Check); 12] = [
        ("blow-up times", blow_up),
        ("exp at ε = 0 is the projection", exp_zero),
        ("closed-form geodesics", closed_forms),
        ("quadratic reduction and compatibility", quadratic_reduction),
        ("torsion properties", torsion_properties),
        ("curvature cross-check", curvature_cross_check),
        ("homogeneity classes", homogeneity),
        ("difference operator and geodesics", difference_operator),
        ("a-curve dichotomy", a_curves),
        ("half-plane connectivity and conjugate points", connectivity),
        ("probe verdicts and amplitude 0", probes),
        ("plume figure on the caption grid", plume_figure),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let result = std::panic::catch_unwind(check).unwrap_or_else(|_| Err("panicked".into()));
        let secs = start.elapsed().as_secs_f64();
        match result {
            Ok(detail) => println!("PASS {:>2} {name}: {detail} [{secs:.2}s]", i + 1),
            Err(detail) => {
                failed += 1;
                println!("FAIL {:>2} {name}: {detail} [{secs:.2}s]", i + 1);
            }
        }
    }
    if failed > 0 {
        std::process::exit(1);
    }
}

