//! End-to-end runs of the `fracfield` binary.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

fn fracfield(config: &str, dir: &Path, out: &str, extra: &[&str]) -> Output {
    let path = dir.join("run.cfg");
    fs::write(&path, config).unwrap();
    Command::new(env!("CARGO_BIN_EXE_fracfield"))
        .arg(&path)
        .arg("--output")
        .arg(dir.join(out))
        .args(extra)
        .output()
        .unwrap()
}

fn column(csv: &str, name: &str) -> Vec<f64> {
    let mut lines = csv.lines();
    let idx = lines.next().unwrap().split(',').position(|h| h == name).unwrap();
    lines.map(|l| l.split(',').nth(idx).unwrap().parse().unwrap()).collect()
}

const CH: &str = "\
# reference Cahn-Hilliard run
a = 0
b = 1
M = 32
s = 0.5
sigma = 0.5
p = 4
tau = 2e-3
T = 0.1
";

#[test]
fn evolve_ch_writes_artifacts() {
    let tmp = TempDir::new().unwrap();
    let out = fracfield(CH, tmp.path(), "out", &["--threads", "1"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let dir = tmp.path().join("out");
    let energy = fs::read_to_string(dir.join("energy.csv")).unwrap();
    assert!(energy.starts_with("t,E_sigma,E_tilde,gagliardo_s_of_w,dual_norm_u,l2_u,lp_u,step_slack\n"));
    let e = column(&energy, "E_sigma");
    assert_eq!(e.len(), 51);
    assert!(e.windows(2).all(|w| w[1] <= w[0]), "E_sigma increased");
    let traj = fs::read_to_string(dir.join("trajectory.csv")).unwrap();
    assert_eq!(traj.lines().next().unwrap().split(',').count(), 33);
    // 17 significant digits
    let cell = traj.lines().nth(1).unwrap().split(',').nth(16).unwrap();
    assert_eq!(cell.split('e').next().unwrap().replace(['.', '-'], "").len(), 17);

    let manifest = fs::read_to_string(dir.join("manifest.txt")).unwrap();
    assert!(manifest.contains(&format!("tool = fracfield {}", env!("CARGO_PKG_VERSION"))));
    assert!(manifest.contains("input_sha256 = "));
    assert!(manifest.contains("seed = 0"));
    assert!(manifest.contains("newton_tol = 0.0000000001"));
    assert!(manifest.contains("experiment = evolve-ch"));
}

#[test]
fn reruns_are_bit_identical() {
    let tmp = TempDir::new().unwrap();
    let config = "a = 0\nb = 10\nM = 24\nexperiment = stationary\nsequence = 0.5, 0.3\np = 4\n";
    for out in ["one", "two"] {
        let o = fracfield(config, tmp.path(), out, &[]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    }
    let read = |d: &str| fs::read(tmp.path().join(d).join("stationary.csv")).unwrap();
    assert_eq!(read("one"), read("two"));
}

#[test]
fn eigen_sweep_respects_the_sandwich() {
    let tmp = TempDir::new().unwrap();
    let config = "a = 0\nb = 1\nM = 64\nexperiment = eigen-sweep\nsequence = 0.2, 0.1, 0.05\nrefinements = 64, 256\n";
    let o = fracfield(config, tmp.path(), "out", &[]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = fs::read_to_string(tmp.path().join("out/eigen_sweep.csv")).unwrap();
    assert!(csv.starts_with("r,M,lambda1,lower,upper,residual\n"));
    let (l, lo, up) = (column(&csv, "lambda1"), column(&csv, "lower"), column(&csv, "upper"));
    assert_eq!(l.len(), 6);
    for i in 0..6 {
        assert!(lo[i] - 1e-9 <= l[i] && l[i] <= up[i] + 0.05);
    }
}

#[test]
fn limit_and_operator_reports() {
    let tmp = TempDir::new().unwrap();
    let base = "a = 0\nb = 1\nM = 24\np = 3\ntau = 1e-2\nT = 0.05\n";
    let o = fracfield(&format!("{base}experiment = limit-s\nsigma = 0.5\nsequence = 0.4, 0.2\n"), tmp.path(), "s", &[]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = fs::read_to_string(tmp.path().join("s/report.csv")).unwrap();
    assert!(csv.starts_with("param,distance,lambda1\n"));
    assert_eq!(csv.lines().count(), 3);

    let o = fracfield("a = 0\nb = 1\nM = 24\nexperiment = operator-limit\nsequence = 0.4, 0.1\n", tmp.path(), "op", &[]);
    assert!(o.status.success());
    let csv = fs::read_to_string(tmp.path().join("op/operator_limit.csv")).unwrap();
    let gaps = column(&csv, "gap");
    assert!(gaps[1] < gaps[0]);
}

#[test]
fn seed_is_read_from_the_environment() {
    let tmp = TempDir::new().unwrap();
    let path = tmp.path().join("run.cfg");
    fs::write(&path, CH).unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_fracfield"))
        .arg(&path)
        .arg("--output")
        .arg(tmp.path().join("out"))
        .env("FRACFIELD_SEED", "42")
        .output()
        .unwrap();
    assert!(o.status.success());
    let manifest = fs::read_to_string(tmp.path().join("out/manifest.txt")).unwrap();
    assert!(manifest.contains("seed = 42\n"));
}

#[test]
fn invalid_config_is_rejected() {
    let tmp = TempDir::new().unwrap();
    let o = fracfield(&CH.replace("sigma = 0.5", "sigma = 1.5"), tmp.path(), "out", &[]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("sigma must lie in (0,1)"));
    assert!(!tmp.path().join("out").exists());
}

#[test]
fn solver_failure_exits_2_without_artifacts() {
    // an unreachable eigensolver tolerance exhausts the iteration budget
    let tmp = TempDir::new().unwrap();
    let config = CH.replace("M = 32", "M = 8") + "experiment = evolve-ch-modified\neig_tol = 1e-300\n";
    let o = fracfield(&config, tmp.path(), "out", &[]);
    assert_eq!(o.status.code(), Some(2), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(!tmp.path().join("out").exists());
}

#[test]
fn assertion_failure_exits_3_without_artifacts() {
    // a loose stationarity tolerance stops the search before the energy
    // identity holds to 1e-6
    let tmp = TempDir::new().unwrap();
    let config = "a = 0\nb = 10\nM = 24\nexperiment = stationary\nsigma = 0.5\np = 4\nstat_tol = 5e-2\n";
    let o = fracfield(config, tmp.path(), "out", &[]);
    assert_eq!(o.status.code(), Some(3), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(!tmp.path().join("out").exists());
}
