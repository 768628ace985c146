use std::path::Path;
use std::process::{Command, Output};

fn miwf(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_miwf"))
        .args(args)
        .arg("--out")
        .arg(out)
        .env_remove("MIWF_OUT_DIR")
        .output()
        .expect("binary runs")
}

fn read(p: &Path) -> String {
    std::fs::read_to_string(p).unwrap_or_else(|e| panic!("{}: {e}", p.display()))
}

const SMALL: [&str; 4] = ["--set", "grid.nu=32", "--set", "grid.nv=32"];

#[test]
fn zero_horizon_gives_a_single_row() {
    let dir = tempfile::tempdir().unwrap();
    let o = miwf(&[&["simulate"], &SMALL[..]].concat(), dir.path());
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let diag = read(&dir.path().join("diagnostics.csv"));
    let lines: Vec<&str> = diag.lines().collect();
    assert_eq!(lines.len(), 3);
    assert_eq!(lines[0], "step,t,dt,willmore_energy,min_a0sq,max_speed");
    assert!(lines[1].starts_with("0,"));
    assert_eq!(lines[2], "# halt=completed");
    assert!(dir.path().join("snapshots/step_000000.obj").exists());
}

#[test]
fn energy_reports_the_torus_value() {
    let dir = tempfile::tempdir().unwrap();
    let o = miwf(&["energy", "--set", "grid.nu=128", "--set", "grid.nv=128"], dir.path());
    assert_eq!(o.status.code(), Some(0));
    let csv = read(&dir.path().join("energy.csv"));
    let w: f64 = csv.lines().find(|l| l.starts_with("willmore_energy,")).unwrap()[16..].parse().unwrap();
    let exact = 4.0 * std::f64::consts::PI.powi(2) / 3f64.sqrt();
    assert!((w / exact - 1.0).abs() < 5e-3);
}

#[test]
fn invalid_input_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    for bad in [
        vec!["simulate", "--set", "grid.nu=15"],
        vec!["simulate", "--set", "flow.kind=ricci"],
        vec!["energy", "--set", "no.such=1"],
        vec!["energy", "--set", "surface.R=0.5"],
        vec!["check-invariance", "--set", "map.generators=inversion:3,0,0,1"],
    ] {
        let o = miwf(&bad, dir.path());
        assert_eq!(o.status.code(), Some(2), "{bad:?}");
        assert!(!o.stderr.is_empty());
    }
    let cfg = dir.path().join("dup.cfg");
    std::fs::write(&cfg, "grid.nu = 32\ngrid.nu = 64\n").unwrap();
    let o = miwf(&["energy", "--config", cfg.to_str().unwrap()], dir.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("line 2"));
}

#[test]
fn umbilic_halt_exits_3_with_reason() {
    let dir = tempfile::tempdir().unwrap();
    let args = [&["simulate"], &SMALL[..], &["--set", "surface.R=3", "--set", "flow.min_a0sq=0.2812", "--set", "flow.t_end=0.01"]].concat();
    let o = miwf(&args, dir.path());
    assert_eq!(o.status.code(), Some(3));
    let diag = read(&dir.path().join("diagnostics.csv"));
    assert_eq!(diag.lines().last(), Some("# halt=umbilic_degeneracy"));
}

#[test]
fn echoed_config_reproduces_the_run() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let args = [&["simulate"], &SMALL[..], &["--set", "flow.t_end=5e-5", "--set", "flow.kind=deturck"]].concat();
    assert_eq!(miwf(&args, a.path()).status.code(), Some(0));
    let echo = a.path().join("effective.cfg");
    let o = miwf(&["simulate", "--config", echo.to_str().unwrap()], b.path());
    assert_eq!(o.status.code(), Some(0));
    for f in ["diagnostics.csv", "effective.cfg"] {
        assert_eq!(read(&a.path().join(f)), read(&b.path().join(f)), "{f}");
    }
}

#[test]
fn snapshot_can_seed_a_new_run() {
    let dir = tempfile::tempdir().unwrap();
    let first = dir.path().join("first");
    let args = [&["simulate"], &SMALL[..], &["--set", "flow.max_steps=3", "--set", "flow.t_end=1"]].concat();
    assert_eq!(miwf(&args, &first).status.code(), Some(0));
    let last = first.join("snapshots/step_000003.csv");
    let diag = read(&first.join("diagnostics.csv"));
    assert_eq!(diag.lines().last(), Some("# halt=max_steps"));
    let w_end = diag.lines().nth(4).unwrap().split(',').nth(3).unwrap().to_string();
    let second = dir.path().join("second");
    let o = miwf(&["simulate", "--set", "surface.kind=file", "--set", &format!("surface.file={}", last.display())], &second);
    assert_eq!(o.status.code(), Some(0));
    let w_start = read(&second.join("diagnostics.csv")).lines().nth(1).unwrap().split(',').nth(3).unwrap().to_string();
    assert_eq!(w_start, w_end);
}

#[test]
fn identity_map_has_zero_residual() {
    let dir = tempfile::tempdir().unwrap();
    let o = miwf(&[&["check-invariance"], &SMALL[..]].concat(), dir.path());
    assert_eq!(o.status.code(), Some(0));
    let csv = read(&dir.path().join("invariance.csv"));
    assert!(csv.contains("velocity_residual,0.0000000000000000e0"));
    assert!(csv.contains("energy_abs_diff,0.0000000000000000e0"));
}

#[test]
fn hopf_command_writes_reports() {
    let dir = tempfile::tempdir().unwrap();
    let o = miwf(&["hopf", "--set", "hopf.curve=latitude:1.0", "--set", "hopf.n=128", "--set", "hopf.ntheta=64", "--set", "hopf.steps=5"], dir.path());
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(read(&dir.path().join("curve_flow.csv")).lines().count(), 7);
    assert_eq!(read(&dir.path().join("hopf.csv")).lines().count(), 3);
    assert!(read(&dir.path().join("hopf_torus.csv")).starts_with("u,v,x1,x2,x3,x4\n"));
}

#[test]
fn env_var_sets_the_default_output_root() {
    let dir = tempfile::tempdir().unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_miwf"))
        .args(["energy", "--set", "grid.nu=16", "--set", "grid.nv=16"])
        .env("MIWF_OUT_DIR", dir.path())
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(0));
    assert!(dir.path().join("energy.csv").exists());
}
