use std::path::Path;
use std::process::{Command, Output};

const DESK: &[&str] = &[
    "--set", "n_x=4", "--set", "n_y=2", "--set", "m_o=2", "--set", "m_p=4", "--set", "n_t=2",
    "--set", "n_r=4", "--set", "cem_k=40", "--set", "cem_iters=5", "--set", "trials=4",
    "--set", "symbols_per_trial=40",
];

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fris-lab"))
        .args(args)
        .env_remove("FRIS_LAB_WORKERS")
        .output()
        .expect("binary runs")
}

fn run_in(sub: &str, out: &Path, extra: &[&str]) -> Output {
    let mut args = vec![sub, "--out", out.to_str().unwrap()];
    args.extend_from_slice(DESK);
    args.extend_from_slice(extra);
    run(&args)
}

fn read(path: &Path) -> String {
    std::fs::read_to_string(path).unwrap_or_else(|e| panic!("{}: {e}", path.display()))
}

#[test]
fn validate_passes_and_filters() {
    let out = run(&["validate", "--filter", "quartic"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("quartic_roots") && text.contains("quartic_grid"));
    assert!(!text.contains("leakage_dense"));
}

#[test]
fn injected_coefficient_fault_fails_validation() {
    let out = run(&["validate", "--filter", "cd_consistency", "--inject", "cd-alpha-sign"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn config_errors_exit_with_two_and_name_the_key() {
    let out = run(&["ber", "--set", "cem_rho=2"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8(out.stderr).unwrap().contains("cem_rho"));
    let out = run(&["optimize", "--config", "/nonexistent/fris.conf"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn runtime_errors_exit_with_three() {
    let dir = tempfile::tempdir().unwrap();
    // 36 choose 9 configurations is far beyond the enumeration limit
    let out = run(&["optimize", "--mode", "exhaustive", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn optimize_writes_solution_and_respects_modes() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_in("optimize", dir.path(), &["--mode", "ris_fixed"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let solution: serde_json::Value = serde_json::from_str(&read(&dir.path().join("solution.json"))).unwrap();
    // centre of a 4x2 grid: columns 1 and 2 of both rows, lowest index first
    assert_eq!(solution["ports"], serde_json::json!([1, 2]));
    assert!(read(&dir.path().join("convergence.csv")).starts_with("trial,iter,stage,leakage\n"));

    let out = run_in("optimize", dir.path(), &["--mode", "exhaustive"]);
    assert_eq!(out.status.code(), Some(0));
    let cert: serde_json::Value = serde_json::from_str(&read(&dir.path().join("certificate.json"))).unwrap();
    assert_eq!(cert["configurations"], 448);
}

#[test]
fn sweep_has_one_row_per_value_and_scheme() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_in("sweep", dir.path(), &[]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = read(&dir.path().join("sweep.csv"));
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("scheme,axis,axis_value,trials,bit_errors,total_bits,ber,seed"));
    assert_eq!(lines.count(), 5 * 4);
    assert!(dir.path().join("sweep_manifest.json").exists());
}

#[test]
fn outputs_depend_only_on_seed() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let c = tempfile::tempdir().unwrap();
    for (dir, workers, seed) in [(&a, "1", "7"), (&b, "3", "7"), (&c, "1", "8")] {
        for sub in ["ber", "convergence"] {
            let out = run_in(sub, dir.path(), &["--workers", workers, "--seed", seed]);
            assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
        }
    }
    for file in ["ber.csv", "ber_trials.csv", "convergence.csv"] {
        assert_eq!(read(&a.path().join(file)), read(&b.path().join(file)), "{file}");
    }
    assert_ne!(read(&a.path().join("ber_trials.csv")), read(&c.path().join("ber_trials.csv")));
}

#[test]
fn timing_reports_every_block() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_in("timing", dir.path(), &["--set", "timing_values=2,4", "--set", "timing_reps=2"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = read(&dir.path().join("timing.csv"));
    assert!(csv.starts_with("block,param,value,mean_ms,std_ms\n"));
    assert_eq!(csv.lines().count(), 1 + 2 * 3);
}
