use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

fn cmt(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cmt"))
        .args(args)
        .env_remove("CMT_ZERO_TOL")
        .output()
        .expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn stderr(out: &Output) -> String {
    String::from_utf8(out.stderr.clone()).unwrap()
}

fn bundled(dir: &TempDir, name: &str) -> String {
    let path = dir.path().join(format!("{name}.sys"));
    let out = cmt(&["examples", name, "--out", path.to_str().unwrap()]);
    assert!(out.status.success(), "{}", stderr(&out));
    path.to_str().unwrap().to_string()
}

fn write(dir: &TempDir, name: &str, text: &str) -> String {
    let path = dir.path().join(name);
    fs::write(&path, text).unwrap();
    path.to_str().unwrap().to_string()
}

#[test]
fn analyze_prints_report() {
    let dir = TempDir::new().unwrap();
    let file = bundled(&dir, "protein");
    let out = cmt(&["analyze", &file, "--order", "4"]);
    assert!(out.status.success(), "{}", stderr(&out));
    let text = stdout(&out);
    assert!(text.contains("\"status\": \"OK\""));
    assert!(text.contains("\"basis_source\": \"input\""));
    assert!(text.contains("\"order\": 4"));
    assert!(text.contains("\"kind\": \"unstable\""));
}

#[test]
fn analyze_writes_json_file() {
    let dir = TempDir::new().unwrap();
    let file = bundled(&dir, "generic3d");
    let json = dir.path().join("report.json");
    let out = cmt(&["analyze", &file, "--json", json.to_str().unwrap()]);
    assert!(out.status.success(), "{}", stderr(&out));
    assert!(stdout(&out).starts_with("ok: inconclusive (radial-sign-indefinite)"));
    let text = fs::read_to_string(&json).unwrap();
    assert!(text.contains("\"centre_dim\": 2"));
    assert!(text.ends_with("}\n"));
}

#[test]
fn basis_override_flag_replaces_the_stanza() {
    let dir = TempDir::new().unwrap();
    let file = bundled(&dir, "protein");
    let out = cmt(&["analyze", &file, "--basis-override", "2 1 -4 0"]);
    assert!(out.status.success(), "{}", stderr(&out));
    let text = stdout(&out);
    assert!(text.contains("\"basis_source\": \"override\""));
    assert!(text.contains("-1.0000000000000000e0"));
}

#[test]
fn bare_basis_override_needs_a_stanza() {
    let dir = TempDir::new().unwrap();
    let file = bundled(&dir, "generic3d");
    let out = cmt(&["analyze", &file, "--basis-override"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("basis"));

    let file = bundled(&dir, "protein");
    let out = cmt(&["analyze", &file, "--basis-override"]);
    assert!(out.status.success(), "{}", stderr(&out));
    assert!(stdout(&out).contains("\"basis_source\": \"override\""));
}

#[test]
fn wrong_sized_override_is_rejected() {
    let dir = TempDir::new().unwrap();
    let file = bundled(&dir, "protein");
    let out = cmt(&["analyze", &file, "--basis-override", "1 0 0"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("needs 4 entries"));
}

#[test]
fn zero_tol_from_environment() {
    let dir = TempDir::new().unwrap();
    let file = write(&dir, "slow.sys", "vars x y\ndx/dt = -1e-6*x + x*y\ndy/dt = -y + x^2\n");
    let out = cmt(&["analyze", &file]);
    assert!(out.status.success());
    assert!(stdout(&out).contains("\"kind\": \"stable\""));
    assert!(stdout(&out).contains("hyperbolic-stable"));

    let with_env = |extra: &[&str]| {
        Command::new(env!("CARGO_BIN_EXE_cmt"))
            .args(["analyze", &file])
            .args(extra)
            .env("CMT_ZERO_TOL", "1e-5")
            .output()
            .unwrap()
    };
    // the slow direction now counts as centre, and its -1e-6 rate is left over
    let out = with_env(&[]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("inconsistent split"), "{}", stderr(&out));
    assert!(with_env(&["--zero-tol", "1e-9"]).status.success());
}

#[test]
fn parse_errors_are_tagged() {
    let dir = TempDir::new().unwrap();
    let file = write(&dir, "bad.sys", "vars x\ndx/dt = sin(x)\n");
    let out = cmt(&["analyze", &file]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("sysdsl"), "{}", stderr(&out));
}

#[test]
fn unstable_spectrum_is_reported() {
    let dir = TempDir::new().unwrap();
    let file = write(&dir, "saddle.sys", "vars x y\ndx/dt = x\ndy/dt = -y + x^2\n");
    let out = cmt(&["analyze", &file]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("spectral"), "{}", stderr(&out));
}

#[test]
fn resonance_names_the_degree() {
    let dir = TempDir::new().unwrap();
    let file = write(
        &dir,
        "res.sys",
        "vars x y z\ndx/dt = y + x*z\ndy/dt = -x\ndz/dt = -1e-11*z + x^2\n",
    );
    let out = cmt(&["analyze", &file, "--zero-tol", "1e-12"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("resonance at degree 2"), "{}", stderr(&out));
}

#[test]
fn order_out_of_range() {
    let dir = TempDir::new().unwrap();
    let file = bundled(&dir, "protein");
    let out = cmt(&["analyze", &file, "--order", "5"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("manifold"));
}

#[test]
fn simulate_writes_csv() {
    let dir = TempDir::new().unwrap();
    let file = bundled(&dir, "generic3d");
    let csv = dir.path().join("traj.csv");
    let out = cmt(&[
        "simulate",
        &file,
        "--x0",
        "0.05,0,-0.02",
        "--t",
        "1",
        "--dt",
        "0.01",
        "--csv",
        csv.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", stderr(&out));
    let text = fs::read_to_string(&csv).unwrap();
    let lines: Vec<_> = text.lines().collect();
    assert_eq!(lines[0], "t,x,y,z");
    assert_eq!(lines.len(), 102);
    assert!(lines[1].starts_with("0.0000000000000000e0,5.0000000000000003e-2,0.0000000000000000e0,-2"));
    assert!(lines[101].starts_with("1.0000000000000000e0,"));
}

#[test]
fn simulate_to_stdout() {
    let dir = TempDir::new().unwrap();
    let file = bundled(&dir, "protein");
    let out = cmt(&["simulate", &file, "--x0", "0.01,0", "--t", "0.01", "--dt", "0.005"]);
    assert!(out.status.success(), "{}", stderr(&out));
    assert_eq!(stdout(&out).lines().count(), 4);
}

#[test]
fn simulate_checks_arity_and_divergence() {
    let dir = TempDir::new().unwrap();
    let file = bundled(&dir, "protein");
    let out = cmt(&["simulate", &file, "--x0", "0.01"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("2 variables"));

    let blow = write(&dir, "blow.sys", "vars x\ndx/dt = x^2\n");
    let out = cmt(&["simulate", &blow, "--x0", "1", "--t", "5", "--dt", "0.001"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("sim"), "{}", stderr(&out));
}

#[test]
fn examples_lists_names_on_miss() {
    let out = cmt(&["examples", "protein"]);
    assert!(out.status.success());
    assert!(stdout(&out).contains("vars x z"));

    let out = cmt(&["examples", "lorenz"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("generic3d, protein"));
}

#[test]
fn bundled_examples_round_trip() {
    let dir = TempDir::new().unwrap();
    for name in ["generic3d", "protein"] {
        let file = bundled(&dir, name);
        assert!(Path::new(&file).exists());
        assert!(cmt(&["analyze", &file]).status.success());
    }
}
