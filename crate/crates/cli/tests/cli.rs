use std::io::{BufRead, BufReader, Read, Write};
use std::net::TcpStream;
use std::path::{Path, PathBuf};
use std::process::{Command, Output, Stdio};
use std::time::Duration;

use serde_json::Value;

fn vsens() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_vsens"));
    c.env_remove("VSENS_LOG");
    c
}

fn data(rel: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("tests/data")
        .join(rel)
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn files_in(dir: &Path) -> Vec<String> {
    let mut names: Vec<_> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().file_name().to_string_lossy().into_owned())
        .collect();
    names.sort();
    names
}

fn two_sensor_config(dir: &Path) -> PathBuf {
    std::fs::copy(data("reference/walk.bvh"), dir.join("walk.bvh")).unwrap();
    let cfg = r#"{
        "schema": 1, "clip": "walk.bvh", "unit_scale": 0.01, "seed": 3,
        "sensors": [
            {"id": "hips", "spec": {"type": "imu", "noise": {"stddev": 0.1}},
             "attachment": {"kind": "bone", "bone_name": "Hips"}},
            {"id": "floor", "spec": {"type": "distance"},
             "attachment": {"kind": "bone", "bone_name": "LeftFoot",
                            "local_offset": {"orientation": [0.7071067811865476, 0.7071067811865476, 0, 0]}}}
        ]
    }"#;
    let path = dir.join("two.json");
    std::fs::write(&path, cfg).unwrap();
    path
}

#[test]
fn simulate_writes_csv_and_meta_per_sensor() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = two_sensor_config(tmp.path());
    let out = tmp.path().join("out");
    let o = vsens()
        .args(["simulate", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(&out)
        .output()
        .unwrap();
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(
        files_in(&out),
        ["floor.csv", "floor.meta.json", "hips.csv", "hips.meta.json"]
    );
    assert!(o.stdout.is_empty(), "human output belongs on stderr");
    let err = stderr(&o);
    assert!(
        err.contains("2 sensor(s)") && err.contains("121 ticks"),
        "{err}"
    );
}

#[test]
fn simulate_json_summary_and_quiet() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = two_sensor_config(tmp.path());
    let o = vsens()
        .args(["simulate", "--quiet", "--json", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(tmp.path().join("out"))
        .output()
        .unwrap();
    assert!(o.status.success());
    assert!(o.stderr.is_empty(), "{}", stderr(&o));
    let summary: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(summary["ok"], true);
    assert_eq!(summary["ticks"], 121);
    assert_eq!(summary["sensors"][0]["id"], "floor");
    assert_eq!(summary["sensors"][0]["samples"], 121);
    assert_eq!(summary["sensors"][1]["samples"], 121 - 6);
    assert_eq!(summary["files"].as_array().unwrap().len(), 4);
}

#[test]
fn seed_override_is_deterministic() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = two_sensor_config(tmp.path());
    let run = |out: &str, seed: Option<&str>| {
        let mut c = vsens();
        c.args(["simulate", "--quiet", "--config"])
            .arg(&cfg)
            .arg("--out")
            .arg(tmp.path().join(out));
        if let Some(s) = seed {
            c.args(["--seed", s]);
        }
        assert!(c.status().unwrap().success());
        std::fs::read_to_string(tmp.path().join(out).join("hips.csv")).unwrap()
    };
    let a = run("a", Some("99"));
    let b = run("b", Some("99"));
    let c = run("c", None);
    assert_eq!(a, b);
    assert_ne!(a, c, "seed must reach the noise streams");
    let meta: Value = serde_json::from_str(
        &std::fs::read_to_string(tmp.path().join("a/hips.meta.json")).unwrap(),
    )
    .unwrap();
    assert_eq!(meta["config"]["seed"], 99);
}

#[test]
fn missing_config_is_an_io_failure() {
    let tmp = tempfile::tempdir().unwrap();
    let missing = tmp.path().join("nope.json");
    let o = vsens()
        .args(["simulate", "--config"])
        .arg(&missing)
        .arg("--out")
        .arg(tmp.path().join("out"))
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(1));
    let err = stderr(&o);
    assert!(err.contains("nope.json"), "{err}");
    assert_eq!(err.trim().lines().count(), 1, "{err}");
}

#[test]
fn invalid_config_lists_every_error() {
    let tmp = tempfile::tempdir().unwrap();
    std::fs::copy(data("reference/walk.bvh"), tmp.path().join("walk.bvh")).unwrap();
    let cfg = tmp.path().join("bad.json");
    std::fs::write(
        &cfg,
        r#"{"clip": "walk.bvh", "simulation_rate": 60, "sensors": [
            {"id": "a", "spec": {"type": "imu", "smoothing_window": 4},
             "attachment": {"kind": "bone", "bone_name": "Tail"}},
            {"id": "b", "spec": {"type": "distance", "sample_rate": 120},
             "attachment": {"kind": "world"}}
        ]}"#,
    )
    .unwrap();
    let o = vsens()
        .args(["simulate", "--json", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(tmp.path().join("out"))
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(2));
    let report: Value = serde_json::from_slice(&o.stdout).unwrap();
    let kinds: Vec<_> = report["errors"]
        .as_array()
        .unwrap()
        .iter()
        .map(|e| e["kind"].as_str().unwrap().to_string())
        .collect();
    assert_eq!(kinds.len(), 3, "{kinds:?}");
    assert!(kinds.contains(&"unknown_joint".to_string()));
    assert!(kinds.contains(&"rate_violation".to_string()));
    assert!(!tmp.path().join("out").exists());
    assert!(stderr(&o).contains("3 validation error(s)"));

    std::fs::write(&cfg, "{ \"clip\": ").unwrap();
    let o = vsens()
        .args(["simulate", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(tmp.path().join("out"))
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn inspect_minimal_bvh() {
    let o = vsens()
        .arg("inspect")
        .arg(data("corpus/valid/minimal.bvh"))
        .output()
        .unwrap();
    assert!(o.status.success());
    let err = stderr(&o);
    assert!(err.contains("joints: 2, end sites: 1"), "{err}");
    assert!(err.contains("frames: 2, frame time: 0.033333 s"), "{err}");

    let o = vsens()
        .args(["inspect", "--json"])
        .arg(data("corpus/valid/minimal.bvh"))
        .output()
        .unwrap();
    let v: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["joint_count"], 2);
    assert_eq!(v["frame_count"], 2);
    assert_eq!(v["frame_time"], 0.033333);
    assert_eq!(v["joints"][0]["channels"].as_array().unwrap().len(), 6);
    assert_eq!(v["joints"][2]["end_site"], true);
}

#[test]
fn inspect_quad_obj() {
    let tmp = tempfile::tempdir().unwrap();
    let quad = tmp.path().join("quad.obj");
    std::fs::write(&quad, "v 0 0 0\nv 1 0 0\nv 1 1 0\nv 0 1 0\nf 1 2 3 4\n").unwrap();
    let o = vsens()
        .args(["inspect", "--json"])
        .arg(&quad)
        .output()
        .unwrap();
    assert!(o.status.success());
    let v: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["vertices"], 4);
    assert_eq!(v["triangles"], 2);
    assert_eq!(v["bounds"]["max"], serde_json::json!([1.0, 1.0, 0.0]));
}

#[test]
fn inspect_errors_carry_line_numbers() {
    let o = vsens()
        .arg("inspect")
        .arg(data("corpus/malformed/bad_number.bvh"))
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("line 20"), "{}", stderr(&o));

    let tmp = tempfile::tempdir().unwrap();
    let obj = tmp.path().join("bad.obj");
    std::fs::write(&obj, "v 0 0 0\nv 1 0 0\nv 0 1 0\nf 1 2 9\n").unwrap();
    let o = vsens().arg("inspect").arg(&obj).output().unwrap();
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("line 4"), "{}", stderr(&o));

    let txt = tmp.path().join("notes.txt");
    std::fs::write(&txt, "hi").unwrap();
    assert_eq!(
        vsens()
            .arg("inspect")
            .arg(&txt)
            .output()
            .unwrap()
            .status
            .code(),
        Some(2)
    );
    let missing = tmp.path().join("gone.bvh");
    assert_eq!(
        vsens()
            .arg("inspect")
            .arg(&missing)
            .output()
            .unwrap()
            .status
            .code(),
        Some(1)
    );
}

#[test]
fn unknown_flags_print_usage() {
    let o = vsens().args(["simulate", "--bogus"]).output().unwrap();
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("Usage"), "{}", stderr(&o));
}

fn http_get(addr: &str, path: &str) -> (u16, String) {
    let mut s = TcpStream::connect(addr).unwrap();
    s.set_read_timeout(Some(Duration::from_secs(10))).unwrap();
    write!(
        s,
        "GET {path} HTTP/1.1\r\nHost: {addr}\r\nConnection: close\r\n\r\n"
    )
    .unwrap();
    let mut resp = String::new();
    s.read_to_string(&mut resp).unwrap();
    let status = resp[9..12].parse().unwrap();
    let body = resp.split("\r\n\r\n").nth(1).unwrap_or("").to_string();
    (status, body)
}

#[cfg(unix)]
#[test]
fn serve_lists_sessions_and_stops_on_interrupt() {
    let mut child = vsens()
        .args(["serve", "--port", "0"])
        .stdout(Stdio::piped())
        .stderr(Stdio::null())
        .spawn()
        .unwrap();
    let mut line = String::new();
    BufReader::new(child.stdout.take().unwrap())
        .read_line(&mut line)
        .unwrap();
    let addr = line.trim().trim_start_matches("http://").to_string();
    let (status, body) = http_get(&addr, "/sessions");
    assert_eq!(status, 200);
    assert!(body.ends_with("[]"), "{body:?}");

    unsafe {
        libc::kill(child.id() as i32, libc::SIGINT);
    }
    let status = child.wait().unwrap();
    assert_eq!(status.code(), Some(0));
}

#[test]
fn serve_fails_on_occupied_port() {
    let taken = std::net::TcpListener::bind("127.0.0.1:0").unwrap();
    let port = taken.local_addr().unwrap().port().to_string();
    let o = vsens().args(["serve", "--port", &port]).output().unwrap();
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("cannot bind"), "{}", stderr(&o));
}
