use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

fn polsim(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_polsim"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn write(dir: &TempDir, name: &str, text: &str) -> String {
    let p = dir.path().join(name);
    fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

fn sweep(cfg: &str, mode: &str, out: &Path) -> Output {
    polsim(&[
        "sweep",
        "--config",
        cfg,
        "--mode",
        mode,
        "--gamma",
        "0,45,90",
        "--t",
        "0,0.5,1",
        "--replicates",
        "2",
        "--seed",
        "11",
        "--samples",
        "20000",
        "--out",
        out.to_str().unwrap(),
    ])
}

#[test]
fn analytic_sweep_csv() {
    let dir = TempDir::new().unwrap();
    let cfg = write(&dir, "empty.cfg", "");
    let out = dir.path().join("a.csv");
    let o = sweep(&cfg, "analytic", &out);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = fs::read_to_string(&out).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "gamma_deg,t_abs,mode,p_value,p_stderr");
    assert_eq!(lines.len(), 1 + 3 * 3 * 2);
    assert!(lines[1..].iter().all(|l| l.ends_with(",0")));
    let row = lines.iter().find(|l| l.starts_with("90,0.5,")).unwrap();
    let p: f64 = row.split(',').nth(3).unwrap().parse().unwrap();
    assert!((p - 0.5).abs() < 1e-12);
}

#[test]
fn stochastic_sweeps_are_byte_identical() {
    let dir = TempDir::new().unwrap();
    let cfg = write(&dir, "c.cfg", "kappa_cps = 2000\n");
    for mode in ["montecarlo", "tomography"] {
        let (a, b) = (dir.path().join("a.csv"), dir.path().join("b.csv"));
        assert!(sweep(&cfg, mode, &a).status.success());
        assert!(sweep(&cfg, mode, &b).status.success());
        assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap(), "{mode}");
    }
}

#[test]
fn exit_codes() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("x.csv");

    let bad_key = write(&dir, "k.cfg", "t_mag = 0.5\nfoo = 1\n");
    let o = sweep(&bad_key, "analytic", &out);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("line 2"));

    let bad_range = write(&dir, "r.cfg", "t_mag = 1.2\n");
    let o = sweep(&bad_range, "analytic", &out);
    assert_eq!(o.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&o.stderr).contains("t_mag"));

    let ok = write(&dir, "ok.cfg", "");
    let o = polsim(&["sweep", "--config", &ok, "--mode", "gedanken", "--gamma", "0", "--t", "1.5"]);
    assert_eq!(o.status.code(), Some(3));
    let o = polsim(&["sweep", "--config", &ok, "--mode", "fast", "--gamma", "0", "--t", "1"]);
    assert_eq!(o.status.code(), Some(2));
    let o = polsim(&["sweep", "--config", "/nonexistent/cfg", "--mode", "analytic", "--gamma", "0", "--t", "1"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn print_config_echoes_validated_values() {
    let dir = TempDir::new().unwrap();
    let cfg = write(&dir, "c.cfg", "eta_idler = 0.8 # lossy\n");
    let o = polsim(&[
        "sweep", "--config", &cfg, "--mode", "numeric", "--gamma", "60", "--t", "1", "--print-config",
    ]);
    assert!(o.status.success());
    let echoed = String::from_utf8_lossy(&o.stderr);
    assert!(echoed.contains("eta_idler = 0.8\n"));
    assert!(echoed.contains("t_mag = 1\n"));
    let stdout = String::from_utf8_lossy(&o.stdout);
    let p: f64 = stdout.lines().nth(1).unwrap().split(',').nth(3).unwrap().parse().unwrap();
    assert!(p < 0.99);
}

#[test]
fn selftest_passes() {
    let o = polsim(&["selftest"]);
    assert_eq!(o.status.code(), Some(0));
    let text = String::from_utf8_lossy(&o.stdout);
    assert_eq!(text.lines().filter(|l| l.starts_with("PASS")).count(), 3);
}

#[test]
fn simulate_then_tomo() {
    let dir = TempDir::new().unwrap();
    let cfg = write(&dir, "c.cfg", "t_mag = 0.5\ngamma_deg = 60\nkappa_cps = 100000\n");
    let counts = dir.path().join("counts.csv");
    let o = polsim(&["simulate", "--config", &cfg, "--seed", "3", "--out", counts.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));

    let rec = dir.path().join("rec.csv");
    let o = polsim(&[
        "tomo",
        "--counts",
        counts.to_str().unwrap(),
        "--out",
        rec.to_str().unwrap(),
        "--config",
        &cfg,
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = fs::read_to_string(&rec).unwrap();
    assert!(text.starts_with("quantity,value\n"));
    let p: f64 = text
        .lines()
        .find_map(|l| l.strip_prefix("p_value,"))
        .unwrap()
        .parse()
        .unwrap();
    assert!((p - 0.8).abs() < 0.02, "P = {p}");

    let broken = write(&dir, "bad.csv", "label,qwp_angle_deg,polarizer_angle_deg,raw_count\nH,0,0,x\n");
    let o = polsim(&["tomo", "--counts", &broken, "--out", rec.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("line 2"));
}
