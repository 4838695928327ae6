use std::path::Path;
use std::process::{Command, Output};

fn aoi_kit(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_aoi-kit"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn out_arg(dir: &Path) -> String {
    dir.to_str().unwrap().to_owned()
}

fn csv_row(path: &Path, n: usize) -> Vec<f64> {
    let text = std::fs::read_to_string(path).unwrap();
    text.lines()
        .nth(n)
        .unwrap()
        .split(',')
        .map(|v| v.parse().unwrap())
        .collect()
}

#[test]
fn analytic_first_row_is_one_tenth() {
    let dir = tempfile::tempdir().unwrap();
    let out = aoi_kit(&[
        "analytic", "--p", "0.25", "--geom", "0.5", "--nmax", "200", "--out", &out_arg(dir.path()),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let row = csv_row(&dir.path().join("analytic.csv"), 1);
    assert_eq!(row[0], 1.0);
    assert!((row[1] - 0.1).abs() < 1e-12);
    let row = csv_row(&dir.path().join("analytic.csv"), 2);
    assert!((row[1] - 0.1375).abs() < 1e-12);
    assert!(dir.path().join("analytic.json").exists());
    assert!(dir.path().join("analytic.manifest.json").exists());
}

#[test]
fn analytic_table_service_uses_general_path() {
    let dir = tempfile::tempdir().unwrap();
    let svc = dir.path().join("table.json");
    std::fs::write(&svc, r#"{"kind":"table","pmf":[0.5,0.0,0.5]}"#).unwrap();
    let out = aoi_kit(&[
        "analytic", "--p", "0.25", "--service", svc.to_str().unwrap(), "--format", "json",
        "--out", &out_arg(dir.path()),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let json: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("analytic.json")).unwrap())
            .unwrap();
    assert_eq!(json["params"]["method"], "general");
    assert!(!dir.path().join("analytic.csv").exists());
}

#[test]
fn degenerate_geometric_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let out = aoi_kit(&["analytic", "--p", "0.5", "--geom", "0.5", "--out", &out_arg(dir.path())]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("degenerate p=γ; use --force-general"));

    let out = aoi_kit(&[
        "analytic", "--p", "0.5", "--geom", "0.5", "--force-general", "--out", &out_arg(dir.path()),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn invalid_parameters_exit_two() {
    let out = aoi_kit(&["analytic", "--p", "1.5", "--geom", "0.5"]);
    assert_eq!(out.status.code(), Some(2));
    let out = aoi_kit(&["analytic", "--p", "0.2", "--geom", "0.5", "--det", "2"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn tolerance_failure_exits_three() {
    let out = aoi_kit(&["analytic", "--p", "0.25", "--geom", "0.5", "--nmax", "5"]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn chain_matches_analytic_and_dumps_kernel() {
    let dir = tempfile::tempdir().unwrap();
    let out = aoi_kit(&[
        "chain", "--p", "0.25", "--geom", "0.5", "--dump-kernel", "--out", &out_arg(dir.path()),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let row = csv_row(&dir.path().join("chain.csv"), 2);
    assert!((row[1] - 0.1375).abs() < 1e-9);
    let kernel = std::fs::read_to_string(dir.path().join("kernel.csv")).unwrap();
    assert!(kernel.starts_with("from_n,from_m,to_n,to_m,prob"));
    assert!(kernel.lines().count() > 100);
}

#[test]
fn chain_warns_about_boundary_mass() {
    let dir = tempfile::tempdir().unwrap();
    let out = aoi_kit(&["chain", "--p", "0.25", "--geom", "0.5", "--nmax", "10", "--out", &out_arg(dir.path())]);
    assert!(out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("boundary"));
}

#[test]
fn seeded_simulation_rerun_is_byte_identical() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for dir in [&a, &b] {
        let out = aoi_kit(&[
            "simulate", "--p", "0.25", "--geom", "0.5", "--T", "200000", "--seed", "7", "--reps", "3",
            "--out", &out_arg(dir.path()),
        ]);
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    }
    for f in ["sim.json", "sim_hist.csv"] {
        assert_eq!(
            std::fs::read(a.path().join(f)).unwrap(),
            std::fs::read(b.path().join(f)).unwrap(),
            "{f}"
        );
    }
}

#[test]
fn rerun_reproduces_outputs() {
    let first = tempfile::tempdir().unwrap();
    let second = tempfile::tempdir().unwrap();
    let out = aoi_kit(&[
        "simulate", "--p", "0.3", "--det", "3", "--T", "100000", "--seed", "11", "--kernel", "natural",
        "--out", &out_arg(first.path()),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let manifest = first.path().join("simulate.manifest.json");
    let out = aoi_kit(&["rerun", manifest.to_str().unwrap(), "--out", &out_arg(second.path())]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    for f in ["sim.json", "sim_hist.csv"] {
        assert_eq!(
            std::fs::read(first.path().join(f)).unwrap(),
            std::fs::read(second.path().join(f)).unwrap(),
            "{f}"
        );
    }
    let m: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(second.path().join("simulate.manifest.json")).unwrap())
            .unwrap();
    assert_eq!(m["subcommand"], "simulate");
    assert_eq!(m["params"]["seed"], 11);
}

#[test]
fn compare_gate_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let out = aoi_kit(&["compare", "--p", "0.25", "--geom", "0.5", "--out", &out_arg(dir.path())]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stdout));

    let out = aoi_kit(&[
        "compare", "--p", "0.25", "--geom", "0.5", "--nmax", "15", "--out", &out_arg(dir.path()),
    ]);
    assert_eq!(out.status.code(), Some(4));
    let json: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("compare.json")).unwrap())
            .unwrap();
    assert_eq!(json["pass"], false);

    let out = aoi_kit(&["compare", "--p", "0.25", "--det", "2", "--kernel", "natural"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn figure3_writes_three_datasets() {
    let dir = tempfile::tempdir().unwrap();
    let out = aoi_kit(&["figure3", "--out", &out_arg(dir.path())]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let pmf = std::fs::read_to_string(dir.path().join("fig3a_pmf.csv")).unwrap();
    assert!(pmf.starts_with("n,"));
    let mean = std::fs::read_to_string(dir.path().join("fig3c_mean.csv")).unwrap();
    assert_eq!(mean.lines().count(), 1 + 3 * 19);
    assert!(dir.path().join("fig3b_cdf.csv").exists());
}

#[test]
fn thread_cap_must_be_positive() {
    let out = Command::new(env!("CARGO_BIN_EXE_aoi-kit"))
        .args(["figure3", "--out", "/nonexistent-unused"])
        .env("AOI_KIT_THREADS", "zero")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}
