//! The `gpm` binary end to end.

use std::path::PathBuf;
use std::process::{Command, Output};

fn model(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("models").join(name)
}

fn gpm(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_gpm")).args(args).env_remove("GPM_EPS").output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn write_model(dir: &tempfile::TempDir, text: &str) -> String {
    let p = dir.path().join("m.gpm");
    std::fs::write(&p, text).unwrap();
    p.to_string_lossy().into_owned()
}

#[test]
fn build_prints_the_log() {
    let o = gpm(&["build", model("camel.gpm").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let out = stdout(&o);
    assert!(out.starts_with("Define moment SDP problem\n"), "{out}");
    assert!(out.contains("Decision variables        = 27"));
    assert!(out.contains("Semidefinite inequalities = 10x10"));
}

#[test]
fn order_flag_overrides_the_file() {
    let o = gpm(&["build", model("constrained.gpm").to_str().unwrap(), "--order", "2"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("Decision variables        = 34"));
}

#[test]
fn solve_writes_text_and_json() {
    let dir = tempfile::tempdir().unwrap();
    let json = dir.path().join("camel.json");
    let o = gpm(&["solve", model("camel.gpm").to_str().unwrap(), "--json", json.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let out = stdout(&o);
    assert!(out.contains("status = 1"), "{out}");
    assert!(out.contains("obj = -1.0316"), "{out}");
    assert!(out.contains("(0.0898, -0.7127)") || out.contains("(-0.0898, 0.7127)"), "{out}");

    let v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&json).unwrap()).unwrap();
    assert_eq!(v["status"], 1);
    let obj = v["objective"].as_f64().unwrap();
    assert!((obj + 1.031628).abs() < 1e-5, "{obj}");
    assert_eq!(v["assembly"]["decision_variables"], 27);
    assert_eq!(v["solver"]["status"], "solved");
    let m = &v["measures"][0];
    assert_eq!(m["points"].as_array().unwrap().len(), 2);
    assert_eq!(m["moments"][3]["monomial"], "x1^2");
    // full precision in JSON
    let x1sq = m["moments"][3]["value"].as_f64().unwrap();
    assert!(format!("{x1sq}").len() > 8);
}

#[test]
fn eps_from_flag_and_environment() {
    let iterations = |o: &Output| -> u64 {
        let line = stdout(o).lines().find(|l| l.starts_with("Solver:")).unwrap().to_string();
        line.split(", ").nth(1).unwrap().split(' ').next().unwrap().parse().unwrap()
    };
    let file = model("camel.gpm");
    let tight = gpm(&["solve", file.to_str().unwrap()]);
    let loose = gpm(&["solve", file.to_str().unwrap(), "--eps", "1e-3"]);
    let env = Command::new(env!("CARGO_BIN_EXE_gpm"))
        .args(["solve", file.to_str().unwrap()])
        .env("GPM_EPS", "1e-3")
        .output()
        .unwrap();
    assert!(iterations(&loose) < iterations(&tight));
    assert_eq!(iterations(&env), iterations(&loose));
}

#[test]
fn parse_errors_exit_2_with_position() {
    let dir = tempfile::tempdir().unwrap();
    let o = gpm(&["build", &write_model(&dir, "var x;\nmin x ** 2;\n")]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains(":2:8:"), "{}", stderr(&o));

    let o = gpm(&["solve", &write_model(&dir, "var x;\nmeasure m;\nvar y;\nmin mom(x*y);\n")]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("4:1: Invalid partitioning of measures in moments"), "{}", stderr(&o));
}

#[test]
fn assembly_errors_exit_3() {
    let o = gpm(&["build", model("camel.gpm").to_str().unwrap(), "--order", "1"]);
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
    let dir = tempfile::tempdir().unwrap();
    let o = gpm(&["build", &write_model(&dir, "var x;\nx >= 0;\n")]);
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
}

#[test]
fn solver_failure_exits_4() {
    let dir = tempfile::tempdir().unwrap();
    let o = gpm(&["solve", &write_model(&dir, "var x;\nmin x;\nx^2 <= -1;\n")]);
    assert_eq!(o.status.code(), Some(4), "{}", stdout(&o));
    assert!(stdout(&o).contains("status = -1"));
}

#[test]
fn export_sdpa_presolves_and_json_keeps_equalities() {
    let dir = tempfile::tempdir().unwrap();
    let file = model("maxcut_nosub.gpm");
    let sdpa = dir.path().join("p.dat-s");
    let o = gpm(&["export", file.to_str().unwrap(), "--format", "sdpa", "-o", sdpa.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let p = gpm::conic::read_sdpa(&sdpa).unwrap();
    assert_eq!(p.m(), 465);
    assert_eq!(p.cone.s, vec![220]);

    let json = dir.path().join("p.json");
    let o = gpm(&["export", file.to_str().unwrap(), "--format", "json", "-o", json.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let p = gpm::conic::read_json(&json).unwrap();
    assert_eq!((p.m(), p.cone.f), (5004, 6435));

    let o = gpm(&["export", file.to_str().unwrap(), "--format", "sdpa", "-o", sdpa.to_str().unwrap(), "--no-presolve"]);
    assert_eq!(o.status.code(), Some(3));
    assert!(stderr(&o).contains("presolve"));
}
