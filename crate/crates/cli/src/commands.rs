use crate::error::CliError;
use crate::job::{block, JobFile};
use crate::svg::plume_svg;
use serde::Serialize;
use serde_json::{json, Value};
use spraylab::calculus::{covariant_derivative, curvature_bracket, curvature_via_nabla, VectorField};
use spraylab::expmap::{a_curve_deviation, default_a_grid, plume};
use spraylab::export::{format_number, gamma_grid_csv, geodesic_csv, geodesic_sidecar, plume_csv};
use spraylab::expr::parse;
use spraylab::geometry::{
    classify_connection, classify_spray_homogeneity, Chart, sample_pointed_vectors, HomogeneityReport, PointedVector,
};
use spraylab::integrator::integrate_geodesic;
use spraylab::probes::{
    conjugate_point_scan, connect_geodesically, disprisonment_probe, pseudoconvexity_probe, stability_experiment,
    ProbeReport,
};
use spraylab::torsion::torsion_free_gamma;

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Command {
    Integrate,
    Plume,
    Classify,
    Covderiv,
    Curvature,
    Torsion,
    Probe,
    Connect,
    Stability,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Integrate => "integrate",
            Command::Plume => "plume",
            Command::Classify => "classify",
            Command::Covderiv => "covderiv",
            Command::Curvature => "curvature",
            Command::Torsion => "torsion",
            Command::Probe => "probe",
            Command::Connect => "connect",
            Command::Stability => "stability",
        }
    }
}

/// A file produced by a command, before it is written.
pub struct Output {
    pub name: String,
    pub contents: String,
}

fn file(name: &str, contents: String) -> Output {
    Output {
        name: name.to_string(),
        contents,
    }
}

fn json_file<T: Serialize>(name: &str, value: &T) -> Output {
    let mut text = serde_json::to_string_pretty(value).expect("serializable output");
    text.push('\n');
    file(name, text)
}

fn require_seed(seed: Option<u64>, what: &str) -> Result<u64, CliError> {
    seed.ok_or_else(|| CliError::input(format!("{what} is randomized and needs a seed (--seed or job `seed`)")))
}

pub fn run(command: Command, job: &JobFile, seed: Option<u64>) -> Result<Vec<Output>, CliError> {
    match command {
        Command::Integrate => integrate(job),
        Command::Plume => cmd_plume(job),
        Command::Classify => classify(job, seed),
        Command::Covderiv => covderiv(job),
        Command::Curvature => curvature(job, seed),
        Command::Torsion => torsion(job, seed),
        Command::Probe => probe(job, seed),
        Command::Connect => connect(job, seed),
        Command::Stability => stability(job, seed),
    }
}

fn integrate(job: &JobFile) -> Result<Vec<Output>, CliError> {
    let b = block(&job.integrate, "integrate")?;
    let spray = job.spray()?;
    let at = PointedVector::new(b.x.clone(), b.v.clone());
    let sol = integrate_geodesic(&spray, &at, b.horizon.range(), &job.integrator_options())?;
    Ok(vec![
        file("geodesic.csv", geodesic_csv(&sol)),
        json_file("geodesic.json", &geodesic_sidecar(&sol)),
    ])
}

fn cmd_plume(job: &JobFile) -> Result<Vec<Output>, CliError> {
    let b = block(&job.plume, "plume")?;
    let spray = job.spray()?;
    let opts = job.integrator_options();
    let a_grid = b.a_grid.clone().unwrap_or_else(default_a_grid);
    let eps_grid = b
        .eps_grid
        .clone()
        .unwrap_or_else(|| (0..=60).map(|k| k as f64 * 0.05).collect());
    let a_curve_eps = b
        .a_curve_eps
        .clone()
        .unwrap_or_else(|| (1..=6).map(|k| k as f64 * 0.5).collect());
    if b.directions.is_empty() || a_grid.is_empty() || eps_grid.is_empty() {
        return Err(CliError::input("plume needs directions, an a grid and an ε grid"));
    }
    let curves = plume(&spray, &b.p, &b.directions, &a_grid, &eps_grid, &a_curve_eps, &opts)?;
    let deviations = b
        .directions
        .iter()
        .map(|v| {
            a_curve_eps
                .iter()
                .map(|&eps| Ok(a_curve_deviation(&spray, &b.p, v, eps, &a_grid, &opts)?))
                .collect::<Result<Vec<f64>, CliError>>()
        })
        .collect::<Result<Vec<_>, _>>()?;
    let meta = json!({
        "p": b.p,
        "directions": b.directions,
        "a_grid": a_grid,
        "eps_grid": eps_grid,
        "a_curve_eps": a_curve_eps,
        "curves": curves.len(),
        "a_curve_deviation": deviations,
    });
    Ok(vec![
        file("plume.csv", plume_csv(&curves, spray.dimension())),
        file("plume.svg", plume_svg(&curves)),
        json_file("plume.json", &meta),
    ])
}

fn spray_label(report: &HomogeneityReport) -> (String, Vec<String>) {
    let mut labels: Vec<String> = report
        .complete
        .iter()
        .map(|m| format!("completely_h({})", format_number(*m)))
        .collect();
    labels.extend(
        report
            .positive
            .iter()
            .filter(|m| !report.complete.contains(m))
            .map(|m| format!("positively_h({})", format_number(*m))),
    );
    let label = labels.first().cloned().unwrap_or_else(|| "inhomogeneous".into());
    (label, labels)
}

fn classify(job: &JobFile, seed: Option<u64>) -> Result<Vec<Output>, CliError> {
    let seed = require_seed(seed, "classify")?;
    let b = job.classify.clone().unwrap_or_default();
    let candidates = b.candidates.unwrap_or_else(|| vec![1.0, 2.0, 3.0]);
    let samples = b.samples.unwrap_or(64);
    let tol = b.tol.unwrap_or(1e-8);
    let spray = job.spray()?;
    let report = classify_spray_homogeneity(&spray, &candidates, samples, tol, seed);
    let (label, labels) = spray_label(&report);
    let connection = job
        .connection()?
        .map(|c| classify_connection(&c, &candidates, samples, tol, seed));
    let out = json!({
        "seed": seed,
        "spray": {
            "label": label,
            "labels": labels,
            "report": report,
        },
        "connection": connection,
    });
    Ok(vec![json_file("classify.json", &out)])
}

fn in_chart(chart: &Chart, x: &[f64]) -> Result<(), CliError> {
    if chart.contains(x) {
        Ok(())
    } else {
        Err(CliError::input(format!("point {x:?} is outside the chart")))
    }
}

fn fields(n: usize, src: &[String]) -> Result<VectorField, CliError> {
    Ok(VectorField::parse(n, src)?)
}

fn covderiv(job: &JobFile) -> Result<Vec<Output>, CliError> {
    let b = block(&job.covderiv, "covderiv")?;
    let conn = job.require_connection()?;
    let n = conn.dimension();
    let (u, w) = (fields(n, &b.u)?, fields(n, &b.w)?);
    let mut rows = vec![header(&[("x", n), ("u", n), ("w", n), ("nabla", n)])];
    for x in &b.points {
        in_chart(conn.chart(), x)?;
        let uv = u.eval(x)?;
        let wv = w.eval(x)?;
        let d = covariant_derivative(&conn, &uv, &w, x)?;
        rows.push(numbers([x.as_slice(), &uv, &wv, &d]));
    }
    Ok(vec![file("covderiv.csv", lines(rows))])
}

fn header(groups: &[(&str, usize)]) -> String {
    groups
        .iter()
        .flat_map(|(p, n)| (1..=*n).map(move |i| format!("{p}{i}")))
        .collect::<Vec<_>>()
        .join(",")
}

fn numbers<const K: usize>(groups: [&[f64]; K]) -> String {
    groups
        .iter()
        .flat_map(|g| g.iter().map(|v| format_number(*v)))
        .collect::<Vec<_>>()
        .join(",")
}

fn lines(rows: Vec<String>) -> String {
    let mut text = rows.join("\n");
    text.push('\n');
    text
}

fn curvature(job: &JobFile, seed: Option<u64>) -> Result<Vec<Output>, CliError> {
    let b = block(&job.curvature, "curvature")?;
    let conn = job.require_connection()?;
    let n = conn.dimension();
    let (u, v, w) = (fields(n, &b.u)?, fields(n, &b.v)?, fields(n, &b.w)?);
    let mut points = b.points.clone().unwrap_or_default();
    if let Some(count) = b.samples {
        let seed = require_seed(seed, "curvature sampling")?;
        points.extend(sample_pointed_vectors(conn.chart(), count, 1.0, seed).into_iter().map(|p| p.x));
    }
    if points.is_empty() {
        return Err(CliError::input("curvature needs `points` or `samples`"));
    }
    let mut rows = vec![header(&[("x", n), ("bracket", n), ("nabla", n)])];
    let mut max_diff = 0.0f64;
    for x in &points {
        in_chart(conn.chart(), x)?;
        let at = PointedVector::new(x.clone(), w.eval(x)?);
        let r1 = curvature_bracket(&conn, &u, &v, &at)?;
        let r2 = curvature_via_nabla(&conn, &u, &v, &w, x)?;
        max_diff = r1.iter().zip(&r2).fold(max_diff, |m, (a, b)| m.max((a - b).abs()));
        rows.push(numbers([x.as_slice(), &r1, &r2]));
    }
    Ok(vec![
        file("curvature.csv", lines(rows)),
        json_file("curvature.json", &json!({ "points": points.len(), "max_difference": max_diff })),
    ])
}

fn torsion(job: &JobFile, seed: Option<u64>) -> Result<Vec<Output>, CliError> {
    let b = block(&job.torsion, "torsion")?;
    let spray = job.spray()?;
    let conn = job.connection()?;
    let n = spray.dimension();
    let params = b.params.unwrap_or_default();
    let mut points = b.points.clone().unwrap_or_default();
    if let Some(count) = b.samples {
        let seed = require_seed(seed, "torsion sampling")?;
        points.extend(sample_pointed_vectors(spray.chart(), count, b.velocity_radius, seed));
    }
    if points.is_empty() {
        return Err(CliError::input("torsion needs `points` or `samples`"));
    }
    let mut grid = Vec::with_capacity(points.len());
    let mut torsion_rows = Vec::new();
    let mut max_torsion = 0.0f64;
    for at in &points {
        let hat = torsion_free_gamma(&spray, at, &params)?;
        if let Some(conn) = &conn {
            let t = (&hat - conn.gamma(&at.x, &at.v)?) * 2.0;
            max_torsion = max_torsion.max(t.amax());
            torsion_rows.push((at.x.clone(), at.v.clone(), t));
        }
        grid.push((at.x.clone(), at.v.clone(), hat));
    }
    let mut out = vec![file("gamma_hat.csv", gamma_grid_csv(n, &grid))];
    if conn.is_some() {
        let csv = gamma_grid_csv(n, &torsion_rows).replacen("g_", "t_", usize::MAX);
        out.push(file("torsion.csv", csv));
    }
    let summary = json!({
        "points": points.len(),
        "params": params,
        "max_torsion": conn.as_ref().map(|_| max_torsion),
    });
    out.push(json_file("torsion.json", &summary));
    Ok(out)
}

fn witness_files(job: &JobFile, report: &ProbeReport, horizon: (f64, f64)) -> Result<Vec<Output>, CliError> {
    let Some(initial) = report.witness_initial() else {
        return Ok(Vec::new());
    };
    let sol = integrate_geodesic(&job.spray()?, &initial, horizon, &job.integrator_options())?;
    Ok(vec![
        file("witness.csv", geodesic_csv(&sol)),
        json_file("witness.json", &geodesic_sidecar(&sol)),
    ])
}

fn probe(job: &JobFile, seed: Option<u64>) -> Result<Vec<Output>, CliError> {
    let b = block(&job.probe, "probe")?;
    let chosen = [b.disprisonment.is_some(), b.pseudoconvexity.is_some(), b.conjugate.is_some()];
    if chosen.iter().filter(|c| **c).count() != 1 {
        return Err(CliError::input(
            "the probe block needs exactly one of `disprisonment`, `pseudoconvexity`, `conjugate`",
        ));
    }
    let spray = job.spray()?;
    let opts = job.integrator_options();
    if let Some(c) = &b.conjugate {
        let values = conjugate_point_scan(&spray, &c.p, &c.v, c.span, c.grid, &opts)?;
        let out = json!({ "p": c.p, "v": c.v, "span": c.span, "grid": c.grid, "conjugate_values": values });
        return Ok(vec![json_file("conjugate.json", &out)]);
    }
    let seed = require_seed(seed, "probe")?;
    let (report, horizon) = if let Some(c) = &b.disprisonment {
        (disprisonment_probe(&spray, c, seed, &opts)?, (-c.horizon, c.horizon))
    } else {
        let c = b.pseudoconvexity.as_ref().expect("checked above");
        (pseudoconvexity_probe(&spray, c, seed, &opts)?, (0.0, c.horizon))
    };
    let mut out = vec![json_file("probe.json", &report)];
    out.extend(witness_files(job, &report, horizon)?);
    Ok(out)
}

fn connect(job: &JobFile, seed: Option<u64>) -> Result<Vec<Output>, CliError> {
    let seed = require_seed(seed, "connect")?;
    let b = block(&job.connect, "connect")?;
    let spray = job.spray()?;
    let opts = job.options.unwrap_or_else(spraylab::expmap::tight_options);
    let result = connect_geodesically(&spray, &b.p, &b.q, b.epsilon, b.multistart, seed, &opts)?;
    let at = PointedVector::new(b.p.clone(), result.v.clone());
    let range = (b.epsilon.min(0.0), b.epsilon.max(0.0));
    let sol = integrate_geodesic(&spray, &at, range, &opts)?;
    let out = json!({
        "p": b.p,
        "q": b.q,
        "epsilon": b.epsilon,
        "seed": seed,
        "v": result.v,
        "residual": result.residual,
        "start": result.start,
    });
    Ok(vec![json_file("connect.json", &out), file("connect.csv", geodesic_csv(&sol))])
}

fn stability(job: &JobFile, seed: Option<u64>) -> Result<Vec<Output>, CliError> {
    let seed = require_seed(seed, "stability")?;
    let b = block(&job.stability, "stability")?;
    let spray = job.spray()?;
    let n = spray.dimension();
    let bump = b
        .bump
        .iter()
        .enumerate()
        .map(|(i, src)| {
            parse(src, n).map_err(|e| {
                let mut err = CliError::input(format!("bump component {}: {e}", i + 1));
                err.position = Some(e.position());
                err.component = Some(src.clone());
                err
            })
        })
        .collect::<Result<Vec<_>, _>>()?;
    let report = stability_experiment(&spray, &bump, &b.amplitudes, &b.probes, seed, &job.integrator_options())?;
    Ok(vec![json_file("stability.json", &report)])
}

/// Summary line printed on success.
pub fn summary(command: Command, paths: &[String]) -> Value {
    json!({ "command": command.name(), "files": paths })
}
