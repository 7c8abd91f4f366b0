use serde_json::Value;
use std::path::Path;
use std::process::{Command, Output};

fn spraylab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_spraylab"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn write_job(dir: &Path, name: &str, body: &str) -> String {
    let path = dir.join(name);
    std::fs::write(&path, body).unwrap();
    path.display().to_string()
}

fn run_job(command: &str, body: &str, extra: &[&str]) -> (Output, tempfile::TempDir) {
    let dir = tempfile::tempdir().unwrap();
    let job = write_job(dir.path(), "job.json", body);
    let out = dir.path().join("out").display().to_string();
    let mut args = vec![command, "--job", &job, "--out", &out];
    args.extend_from_slice(extra);
    (spraylab(&args), dir)
}

fn read_json(path: impl AsRef<Path>) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn stderr_json(out: &Output) -> Value {
    serde_json::from_slice(&out.stderr).expect("stderr is JSON")
}

#[test]
fn zero_spray_gives_straight_lines() {
    let (out, dir) = run_job(
        "integrate",
        r#"{"dimension":2,"spray":["0","0"],"integrate":{"x":[1,2],"v":[3,-1],"horizon":2}}"#,
        &[],
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = std::fs::read_to_string(dir.path().join("out/geodesic.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("t,x1,x2,v1,v2"));
    for line in lines {
        let row: Vec<f64> = line.split(',').map(|s| s.parse().unwrap()).collect();
        let t = row[0];
        assert!((row[1] - (1.0 + 3.0 * t)).abs() < 1e-10);
        assert!((row[2] - (2.0 - t)).abs() < 1e-10);
        assert_eq!(&row[3..], &[3.0, -1.0]);
    }
}

#[test]
fn blow_up_time_lands_in_the_sidecar() {
    let (out, dir) = run_job(
        "integrate",
        r#"{"dimension":1,"spray":["y1^2"],"integrate":{"x":[0],"v":[4],"horizon":1}}"#,
        &[],
    );
    assert!(out.status.success());
    let meta = read_json(dir.path().join("out/geodesic.json"));
    let t_plus = meta["t_plus"].as_f64().unwrap();
    assert!((t_plus - 0.25).abs() < 1e-6, "t_plus = {t_plus}");
    assert_eq!(meta["termination"]["plus"], "blow_up");
}

#[test]
fn malformed_expression_is_an_input_error_with_position() {
    let (out, _dir) = run_job(
        "integrate",
        r#"{"dimension":1,"spray":["y1 + * 2"],"integrate":{"x":[0],"v":[1],"horizon":1}}"#,
        &[],
    );
    assert_eq!(out.status.code(), Some(2));
    let err = stderr_json(&out);
    assert_eq!(err["error"]["kind"], "input");
    assert_eq!(err["error"]["position"], 6);
}

#[test]
fn unknown_keys_are_rejected() {
    for body in [
        r#"{"dimension":1,"spray":["0"],"colour":"red"}"#,
        r#"{"dimension":1,"spray":["0"],"integrate":{"x":[0],"v":[1],"horizon":1,"speed":2}}"#,
        r#"{"dimension":1,"spray":["0"],"options":{"rtol":1e-8,"tolerance":1}}"#,
    ] {
        let (out, _dir) = run_job("integrate", body, &[]);
        assert_eq!(out.status.code(), Some(2), "{body}");
        let err = stderr_json(&out);
        assert!(err["error"]["message"].as_str().unwrap().contains("unknown field"));
        assert!(err["error"]["line"].is_u64());
    }
}

#[test]
fn unknown_command_exits_with_input_code() {
    let out = spraylab(&["warp", "--job", "nowhere.json"]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(stderr_json(&out)["error"]["kind"], "input");
}

#[test]
fn randomized_commands_need_a_seed() {
    let body = r#"{"dimension":1,"spray":["y1^2"],"classify":{}}"#;
    let (out, _dir) = run_job("classify", body, &[]);
    assert_eq!(out.status.code(), Some(2));
    let (out, _dir) = run_job("classify", body, &["--seed", "5"]);
    assert!(out.status.success());
}

#[test]
fn absolute_value_spray_is_only_positively_homogeneous() {
    let (out, dir) = run_job(
        "classify",
        r#"{"dimension":1,"spray":["abs(y1)*y1"],"seed":11,"classify":{}}"#,
        &[],
    );
    assert!(out.status.success());
    let report = read_json(dir.path().join("out/classify.json"));
    assert_eq!(report["spray"]["label"], "positively_h(2)");
}

#[test]
fn rotation_spray_fails_disprisonment_with_a_witness() {
    let (out, dir) = run_job(
        "probe",
        r#"{"dimension":2,"spray":["-y2","y1"],"seed":7,
            "probe":{"disprisonment":{"compact":{"lower":[-1,-1],"upper":[1,1]},"horizon":20,"budget":12}}}"#,
        &[],
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let report = read_json(dir.path().join("out/probe.json"));
    assert_eq!(report["verdict"], "fail");
    assert!(dir.path().join("out/witness.csv").exists());
    let witness = read_json(dir.path().join("out/witness.json"));
    assert!(witness["samples"].as_u64().unwrap() > 2);
}

#[test]
fn torsion_of_the_half_plane_connection_is_small() {
    let (out, dir) = run_job(
        "torsion",
        r#"{"dimension":2,"bounds":[[null,null],[0,null]],
            "gamma":[["y2/x2","y1/x2"],["-y1/x2","y2/x2"]],
            "torsion":{"points":[{"x":[0,1],"v":[1,0]},{"x":[0.5,2],"v":[0.3,-0.7]}]}}"#,
        &[],
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let summary = read_json(dir.path().join("out/torsion.json"));
    assert!(summary["max_torsion"].as_f64().unwrap() <= 1e-3);
}

#[test]
fn reruns_are_byte_identical() {
    let body = r#"{"dimension":2,"bounds":[[null,null],[0,null]],
        "gamma":[["y2/x2","y1/x2"],["-y1/x2","y2/x2"]],"seed":3,
        "plume":{"p":[0,1],"directions":[[1,0],[0.6,0.8]],"eps_grid":[0,0.5,1]},
        "torsion":{"samples":3}}"#;
    let dir = tempfile::tempdir().unwrap();
    let job = write_job(dir.path(), "job.json", body);
    for command in ["plume", "torsion"] {
        let mut files = Vec::new();
        for run in ["a", "b"] {
            let out_dir = dir.path().join(run);
            let out = spraylab(&[command, "--job", &job, "--out", out_dir.to_str().unwrap()]);
            assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
            files.push(out_dir);
        }
        for entry in std::fs::read_dir(&files[0]).unwrap() {
            let name = entry.unwrap().file_name();
            let a = std::fs::read(files[0].join(&name)).unwrap();
            let b = std::fs::read(files[1].join(&name)).unwrap();
            assert_eq!(a, b, "{name:?} differs");
        }
    }
}

#[test]
fn prefix_and_svg_header() {
    let (out, dir) = run_job(
        "plume",
        r#"{"dimension":1,"spray":["y1^2"],"output":{"prefix":"blow_"},
            "plume":{"p":[0],"directions":[[1]],"eps_grid":[0,0.1,0.2]}}"#,
        &[],
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let svg = std::fs::read_to_string(dir.path().join("out/blow_plume.svg")).unwrap();
    assert!(svg.lines().nth(1).unwrap().starts_with("<!-- spraylab "));
    assert!(dir.path().join("out/blow_plume.csv").exists());
}

#[test]
fn bundled_jobs_run() {
    let jobs = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../jobs");
    let runs: &[(&str, &[&str])] = &[
        ("blow_up.json", &["integrate", "plume", "classify"]),
        ("linear_growth.json", &["integrate", "plume"]),
        (
            "half_plane.json",
            &["integrate", "plume", "classify", "covderiv", "curvature", "torsion", "connect", "probe"],
        ),
        ("rotation.json", &["probe", "stability"]),
        ("sphere.json", &["probe", "torsion"]),
    ];
    for (job, commands) in runs {
        let dir = tempfile::tempdir().unwrap();
        let path = jobs.join(job);
        for command in *commands {
            let out = spraylab(&[command, "--job", path.to_str().unwrap(), "--out", dir.path().to_str().unwrap()]);
            assert!(out.status.success(), "{job} {command}: {}", String::from_utf8_lossy(&out.stderr));
        }
    }
}
