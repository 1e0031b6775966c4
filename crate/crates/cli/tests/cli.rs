use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use reweight_l1::{io, SensingMatrix};

fn rl1(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_rl1"))
        .args(args)
        .env_remove("RL1_WORKERS")
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn fixture(dir: &Path) {
    let o = rl1(&["generate", "--N", "60", "--n", "30", "--k", "3", "--seed", "4", "--out", p(dir)]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
}

#[test]
fn help_exits_zero_everywhere() {
    for sub in [&[][..], &["recover"], &["sparse-grid"], &["compressible"], &["verify"], &["selftest"], &["generate"]] {
        let mut args = sub.to_vec();
        args.push("--help");
        let o = rl1(&args);
        assert_eq!(code(&o), 0, "{:?}", args);
        assert!(stdout(&o).contains("Usage"));
    }
}

#[test]
fn usage_errors_exit_one() {
    assert_eq!(code(&rl1(&[])), 1);
    assert_eq!(code(&rl1(&["frobnicate"])), 1);
    assert_eq!(code(&rl1(&["sparse-grid", "--trials", "many"])), 1);
}

#[test]
fn recover_happy_path_writes_signal_and_sidecar() {
    let dir = tempfile::tempdir().unwrap();
    fixture(dir.path());
    let out = dir.path().join("xhat.bin");
    let o = rl1(&[
        "recover", "--method", "sdrl1",
        "--matrix", p(&dir.path().join("A.bin")),
        "--y", p(&dir.path().join("y.bin")),
        "--eps", "0",
        "--out", p(&out),
    ]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let xhat = io::read_vector(&out).unwrap();
    let x = io::read_vector(&dir.path().join("x.bin")).unwrap();
    let err: f64 = xhat.iter().zip(&x).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
    assert!(err < 1e-6, "{err}");

    let diag: serde_json::Value = serde_json::from_str(&fs::read_to_string(dir.path().join("xhat.bin.json")).unwrap()).unwrap();
    assert_eq!(diag["method"], "sdrl1");
    assert_eq!(diag["converged"], true);
    assert!(diag["iterations"].as_array().unwrap().len() >= 2);
}

#[test]
fn recover_rejects_unknown_method() {
    let dir = tempfile::tempdir().unwrap();
    fixture(dir.path());
    let o = rl1(&[
        "recover", "--method", "lasso",
        "--matrix", p(&dir.path().join("A.bin")),
        "--y", p(&dir.path().join("y.bin")),
        "--out", p(&dir.path().join("o.bin")),
    ]);
    assert_eq!(code(&o), 1);
    assert!(stderr(&o).contains("lasso"));
    assert!(!dir.path().join("o.bin").exists());
}

#[test]
fn recover_reports_dimension_mismatch() {
    let dir = tempfile::tempdir().unwrap();
    fixture(dir.path());
    io::write_vector(&dir.path().join("short.bin"), &[1.0; 7]).unwrap();
    let o = rl1(&[
        "recover", "--method", "l1",
        "--matrix", p(&dir.path().join("A.bin")),
        "--y", p(&dir.path().join("short.bin")),
        "--out", p(&dir.path().join("o.bin")),
    ]);
    assert_eq!(code(&o), 1);
    let msg = stderr(&o);
    assert!(msg.contains("30x60") && msg.contains("length 7"), "{msg}");
}

#[test]
fn recover_missing_file_is_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let o = rl1(&[
        "recover", "--method", "l1",
        "--matrix", p(&dir.path().join("nope.bin")),
        "--y", p(&dir.path().join("nope.bin")),
        "--out", p(&dir.path().join("o.bin")),
    ]);
    assert_eq!(code(&o), 1);
}

#[test]
fn recover_exits_two_when_the_solver_stalls() {
    let dir = tempfile::tempdir().unwrap();
    fixture(dir.path());
    let cfg = dir.path().join("tight.toml");
    fs::write(&cfg, "[solver]\nmax_iters = 2\npolish = false\n").unwrap();
    let o = rl1(&[
        "recover", "--method", "l1",
        "--matrix", p(&dir.path().join("A.bin")),
        "--y", p(&dir.path().join("y.bin")),
        "--config", p(&cfg),
        "--out", p(&dir.path().join("o.bin")),
    ]);
    assert_eq!(code(&o), 2, "{}", stderr(&o));
    assert!(dir.path().join("o.bin.json").exists());
}

fn grid_args<'a>(out: &'a str, workers: &'a str) -> Vec<&'a str> {
    vec![
        "sparse-grid", "--N", "80", "--n-fractions", "0.25,0.5", "--k-over-n", "0.2,0.4",
        "--trials", "3", "--seed", "9", "--workers", workers, "--out", out,
    ]
}

#[test]
fn sparse_grid_is_byte_identical_across_workers() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let c = tempfile::tempdir().unwrap();
    for (dir, w) in [(&a, "1"), (&b, "1"), (&c, "3")] {
        let o = rl1(&grid_args(p(dir.path()), w));
        assert_eq!(code(&o), 0, "{}", stderr(&o));
        assert_eq!(stdout(&o).lines().count(), 4);
    }
    let csv = |d: &tempfile::TempDir| fs::read(d.path().join("sparse_grid.csv")).unwrap();
    assert_eq!(csv(&a), csv(&b));
    assert_eq!(csv(&a), csv(&c));
    let text = String::from_utf8(csv(&a)).unwrap();
    assert!(text.starts_with("experiment,method,N,n,k,p,trial,seed,exact,rel_err,mse,outer_iters,wall_ms\n"));
    assert_eq!(text.lines().count(), 1 + 4 * 3 * 3);

    let summary: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(a.path().join("sparse_grid.json")).unwrap()).unwrap();
    assert_eq!(summary["schema_version"], 1);
    assert_eq!(summary["config"]["N"], 80);
    assert_eq!(summary["points"].as_array().unwrap().len(), 12);
}

#[test]
fn workers_default_from_environment() {
    let a = tempfile::tempdir().unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_rl1"))
        .args(["sparse-grid", "--N", "40", "--n-fractions", "0.5", "--k-over-n", "0.2", "--trials", "2", "--out", p(a.path())])
        .env("RL1_WORKERS", "0")
        .output()
        .unwrap();
    assert_eq!(code(&o), 1, "zero workers from the environment must be rejected");
}

#[test]
fn flags_override_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("grid.toml");
    fs::write(&cfg, "N = 40\nn_fractions = [0.5]\nk_over_n = [0.2]\ntrials = 5\nmethods = [\"l1\"]\n").unwrap();
    let out = dir.path().join("res");
    let o = rl1(&["sparse-grid", "--config", p(&cfg), "--trials", "2", "--out", p(&out)]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let text = fs::read_to_string(out.join("sparse_grid.csv")).unwrap();
    assert_eq!(text.lines().count(), 1 + 2);
    assert!(text.lines().skip(1).all(|l| l.starts_with("sparse-grid,l1,40,20,4,")));

    fs::write(&cfg, "trails = 5\n").unwrap();
    assert_eq!(code(&rl1(&["sparse-grid", "--config", p(&cfg), "--out", p(&out)])), 1);
}

#[test]
fn unwritable_output_is_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("plain");
    fs::write(&file, "x").unwrap();
    let o = rl1(&["sparse-grid", "--N", "40", "--n-fractions", "0.5", "--k-over-n", "0.2", "--trials", "1", "--out", p(&file.join("sub"))]);
    assert_eq!(code(&o), 1);
}

#[test]
fn compressible_writes_one_group_per_power() {
    let dir = tempfile::tempdir().unwrap();
    let o = rl1(&["compressible", "--N", "100", "--p", "1.1,1.5,2", "--trials", "3", "--out", p(dir.path())]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert_eq!(stdout(&o).lines().count(), 3);
    let summary: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("compressible.json")).unwrap()).unwrap();
    let groups = summary["groups"].as_array().unwrap();
    assert_eq!(groups.len(), 3);
    assert!(groups.iter().all(|g| g["ratios"].as_array().unwrap().len() == 3));
    let text = fs::read_to_string(dir.path().join("compressible.csv")).unwrap();
    assert_eq!(text.lines().count(), 1 + 3 * 2 * 3);
}

#[test]
fn verify_defaults_pass() {
    let o = rl1(&["verify", "--trials", "20000"]);
    assert_eq!(code(&o), 0, "{}", stdout(&o));
    assert!(!stdout(&o).contains("FAIL"));
}

#[test]
fn verify_rip_on_fixture_file() {
    let dir = tempfile::tempdir().unwrap();
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let a = SensingMatrix::from_row_slice(2, 3, &[1.0, 0.0, h, 0.0, 1.0, h]).unwrap();
    let path = dir.path().join("A.bin");
    io::write_matrix(&path, &a).unwrap();
    let o = rl1(&["verify", "--rip", "--matrix", p(&path), "--k", "3"]);
    assert_eq!(code(&o), 0);
    let text = stdout(&o);
    assert!(text.contains("delta_2") && text.contains("0.70711"), "{text}");
    assert_eq!(text.lines().filter(|l| l.contains("delta_")).count(), 3);
}

#[test]
fn verify_prop2_reports_gap() {
    let o = rl1(&["verify", "--prop2", "--trials", "100000"]);
    assert_eq!(code(&o), 0);
    assert!(stdout(&o).contains("gap"));
}

#[test]
fn selftest_passes() {
    let o = rl1(&["selftest", "--instances", "20"]);
    assert_eq!(code(&o), 0, "{}", stdout(&o));
}
