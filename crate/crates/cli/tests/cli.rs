use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use bloch_purity_cli::{run, Overrides, RunConfig, EXIT_INFEASIBLE, EXIT_INVALID};
use tempfile::TempDir;

fn bin(config: &Path, extra: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_bloch-purity"))
        .arg("--config")
        .arg(config)
        .args(extra)
        .output()
        .unwrap()
}

fn write(dir: &Path, name: &str, text: &str) -> std::path::PathBuf {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p
}

#[test]
fn apogee_prints_point_and_writes_profile() {
    let dir = TempDir::new().unwrap();
    let cfg = write(dir.path(), "a.conf", "command = apogee\nb1=1 b2=2 alpha1=-3 alpha2=-4\nsamples = 8\n");
    let out = bin(&cfg, &[]);
    assert!(out.status.success());
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert!(stdout.contains("q_apogee = [0.40786"), "{stdout}");
    assert!(stdout.contains("0.44925"), "{stdout}");
    let csv = fs::read_to_string(dir.path().join("out/chimney.csv")).unwrap();
    assert!(csv.starts_with("theta,g\n"));
    assert_eq!(csv.lines().count(), 9);
}

#[test]
fn invalid_configs_exit_with_two() {
    let dir = TempDir::new().unwrap();
    for (name, text) in [
        ("empty.conf", ""),
        ("zero.conf", "command = apogee\nb1=1 b2=2 alpha1=0 alpha2=-4\n"),
        ("unknown.conf", "command = apogee\nb1=1 b2=2 alpha1=-3 alpha2=-4\ncolour = red\n"),
        ("nocommand.conf", "b1=1 b2=2 alpha1=-3 alpha2=-4\n"),
        ("both.conf", "command = model\nb1=1 b2=2 alpha1=-3 alpha2=-4\nl1 = [1, 0, 0]\n"),
    ] {
        let out = bin(&write(dir.path(), name, text), &[]);
        assert_eq!(out.status.code(), Some(EXIT_INVALID), "{name}");
        assert!(!out.stderr.is_empty());
    }
    let out = bin(&dir.path().join("missing.conf"), &[]);
    assert_eq!(out.status.code(), Some(EXIT_INVALID));
    let cfg = write(dir.path(), "sign.conf", "command = bangbang\nb1=-2 b2=-1 alpha1=-4 alpha2=-3\n");
    assert_eq!(bin(&cfg, &["--initial-sign", "0"]).status.code(), Some(EXIT_INVALID));
}

#[test]
fn unknown_key_error_names_its_line() {
    let err = RunConfig::from_text("command = apogee\nb1=1 b2=2 alpha1=-3 alpha2=-4\nbogus = 1\n", Path::new("."), &Overrides::default())
        .unwrap_err();
    assert!(err.to_string().contains("line 3"), "{err}");
}

#[test]
fn lindblad_model_is_described() {
    let dir = TempDir::new().unwrap();
    let cfg = write(dir.path(), "m.conf", "command = model\nl1 = [(1,0),(0,1),(0,0)]\n");
    let out = bin(&cfg, &[]);
    assert!(out.status.success());
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert!(stdout.contains("b = [0, 0, 2]"), "{stdout}");
    assert!(stdout.contains("planar: b1 = 2, b2 = 0, alpha1 = -2, alpha2 = -1"), "{stdout}");
}

#[test]
fn constant_reports_cubic() {
    let dir = TempDir::new().unwrap();
    let cfg = write(dir.path(), "c.conf", "command = constant\nb1=1 b2=2 alpha1=-3 alpha2=-4\n");
    let out = bin(&cfg, &[]);
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert!(stdout.contains("[5, -6, 92, 24]"), "{stdout}");
    assert!(stdout.contains("-0.255697018"));
    let out = bin(&cfg, &["--cubic-variant", "squared"]);
    assert!(String::from_utf8(out.stdout).unwrap().contains("[5, -6, 68, 24]"));
}

#[test]
fn ritz_writes_artifacts_and_flags_override_the_file() {
    let dir = TempDir::new().unwrap();
    let cfg = write(dir.path(), "r.conf", "command = ritz\nb1=1 b2=2 alpha1=-3 alpha2=-4\norder = 7\nrestarts = 25\n");
    let out = bin(&cfg, &["--order", "1", "--restarts", "2", "--seed", "5", "--out", dir.path().join("r").to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let json: serde_json::Value = serde_json::from_str(&fs::read_to_string(dir.path().join("r/ritz.json")).unwrap()).unwrap();
    assert_eq!(json["order"], 1);
    assert_eq!(json["best"]["c"].as_array().unwrap().len(), 1);
    assert!((json["best"]["time"].as_f64().unwrap() - 1.9354).abs() < 1e-3);
    let traj = fs::read_to_string(dir.path().join("r/ritz_trajectory.csv")).unwrap();
    assert!(traj.starts_with("t,x,y,u,r,purity\n"));
    let control = fs::read_to_string(dir.path().join("r/ritz_control.csv")).unwrap();
    assert!(control.starts_with("x,u\n"));
}

#[test]
fn infeasible_endpoints_exit_with_four() {
    let dir = TempDir::new().unwrap();
    // delta = 0 puts the end point on the ellipsoid itself
    let cfg = write(dir.path(), "r.conf", "command = ritz\nb1=1 b2=2 alpha1=-3 alpha2=-4\ndelta = 0\norder = 1\n");
    let out = bin(&cfg, &[]);
    assert_eq!(out.status.code(), Some(EXIT_INFEASIBLE), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn bangbang_and_simulate_outputs() {
    let dir = TempDir::new().unwrap();
    let cfg = write(
        dir.path(),
        "b.conf",
        "command = bangbang\nb1=-2 b2=-1 alpha1=-4 alpha2=-3\nmax_switches = 2\n",
    );
    let out = bin(&cfg, &["--initial-sign", "-1", "--horizon", "5"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let json: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("out/schedule.json")).unwrap()).unwrap();
    assert_eq!(json["initial_sign"], -1);
    assert_eq!(json["switches"].as_array().unwrap().len(), 2);
    let arcs = fs::read_to_string(dir.path().join("out/bangbang_arcs.csv")).unwrap();
    assert!(arcs.starts_with("t,x,y,u,r,purity,arc\n"));
    assert!(arcs.lines().last().unwrap().ends_with(",2"));

    write(dir.path(), "u.csv", "t,u\n0,1\n0.25,-1\n");
    let cfg = write(
        dir.path(),
        "s.conf",
        "command = simulate\nb1=1 b2=2 alpha1=-3 alpha2=-4\ncontrols = u.csv\nhorizon = 0.5\ndt = 0.125\nout = sim\n",
    );
    let out = bin(&cfg, &[]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = fs::read_to_string(dir.path().join("sim/trajectory.csv")).unwrap();
    assert_eq!(csv.lines().count(), 6);
    assert!(csv.lines().nth(3).unwrap().contains(",-1,"));
}

#[test]
fn library_entry_point_reports_written_files() {
    let dir = TempDir::new().unwrap();
    let ov = Overrides {
        out: Some(dir.path().to_path_buf()),
        ..Overrides::default()
    };
    let cfg = RunConfig::from_text("command = apogee\nb1=1 b2=2 alpha1=-3 alpha2=-4\n", dir.path(), &ov).unwrap();
    let outcome = run(&cfg).unwrap();
    assert_eq!(outcome.written, vec![dir.path().join("chimney.csv")]);
}
