//! End-to-end checks of the installed binary: exit codes, exports, and the
//! trace content of a run that switches between step modes.

use std::path::PathBuf;
use std::process::{Command, Output};

fn scratch_dir(tag: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("arcls-bin-{tag}-{}", std::process::id()));
    let _ = std::fs::remove_dir_all(&dir);
    dir
}

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_arcls"))
        .args(args)
        .output()
        .expect("binary runs")
}

#[test]
fn bogus_solver_exits_with_usage_code() {
    let out = run(&["--solvers", "bogus"]);
    assert_eq!(out.status.code(), Some(2));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("bogus"), "stderr: {stderr}");
}

#[test]
fn unknown_flag_exits_with_usage_code_and_help_with_zero() {
    assert_eq!(run(&["--no-such-flag"]).status.code(), Some(2));
    let help = run(&["--help"]);
    assert_eq!(help.status.code(), Some(0));
    let text = String::from_utf8_lossy(&help.stdout);
    assert!(text.contains("--problems"));
    assert!(text.contains("--profile"));
}

#[test]
fn traced_saddle_run_records_the_fallback_then_scaled_switch() {
    let out_dir = scratch_dir("saddle");
    let out = run(&[
        "--problems",
        "saddle2d:2",
        "--solvers",
        "ls-arc",
        "--trace",
        "--max-iter",
        "2000",
        "--out",
        out_dir.to_str().unwrap(),
    ]);
    assert_eq!(
        out.status.code(),
        Some(0),
        "stderr: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    let json = std::fs::read_to_string(out_dir.join("records.json")).unwrap();
    let records: serde_json::Value = serde_json::from_str(&json).unwrap();
    let trace = records[0]["trace"].as_array().expect("trace kept");
    assert_eq!(trace[0]["mode"], "fallback_l2");
    assert_eq!(trace[0]["accepted"], true);
    assert!(
        trace.iter().any(|t| t["mode"] == "scaled"),
        "the run never returned to the scaled step"
    );
    let _ = std::fs::remove_dir_all(&out_dir);
}

#[test]
fn six_solver_matrix_exports_records_and_profiles() {
    let out_dir = scratch_dir("matrix");
    let out = run(&[
        "--problems",
        "quad_spd:20:1,trig:10,rosenbrock:10",
        "--profile",
        "--out",
        out_dir.to_str().unwrap(),
    ]);
    assert_eq!(
        out.status.code(),
        Some(0),
        "stderr: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("18 runs"), "stdout: {stdout}");

    let csv = std::fs::read_to_string(out_dir.join("records.csv")).unwrap();
    let mut lines = csv.trim_end().lines();
    assert_eq!(
        lines.next().unwrap(),
        "problem,solver,n,status,outer_iters,f_evals,g_evals,hvp_evals,inner_matvecs,\
         final_f,final_gnorm,wall_time_ms"
    );
    assert_eq!(lines.count(), 18);

    for metric in ["f_evals", "g_evals"] {
        let text = std::fs::read_to_string(out_dir.join(format!("profile_{metric}.csv"))).unwrap();
        assert!(text.starts_with("solver,metric,tau,rho"));
        // every solver contributes at least one row
        for solver in ["ls-arc", "ls-arc-s", "ls-tr", "armijo", "arc-l2", "tr-l2"] {
            assert!(text.contains(solver), "{metric} profile missing {solver}");
        }
    }
    let _ = std::fs::remove_dir_all(&out_dir);
}

#[test]
fn a_stalled_run_is_reported_and_flips_the_exit_code() {
    // The second-order variant can exhaust its trial loop when the inner
    // solve stops at an iterate collinear with the gradient: the Cauchy ray
    // is then the exact minimizer of the shared one-dimensional model, and
    // the regularizer updates cancel out of the comparison. The run must
    // surface as an error record and exit code 1, never a crash.
    let out_dir = scratch_dir("stall");
    let out = run(&[
        "--problems",
        "tridia:12",
        "--solvers",
        "ls-arc-s,ls-arc",
        "--out",
        out_dir.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(1));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("backtracking_stalled"), "stderr: {stderr}");
    let csv = std::fs::read_to_string(out_dir.join("records.csv")).unwrap();
    let mut by_solver = csv.trim_end().lines().skip(1).map(|l| {
        let mut f = l.split(',');
        (f.nth(1).unwrap().to_string(), f.nth(1).unwrap().to_string())
    });
    assert!(by_solver.any(|(s, status)| s == "ls-arc-s" && status == "error"));
    // the first-order variant solves the same instance cleanly
    assert!(csv
        .lines()
        .any(|l| l.contains("ls-arc,") && l.contains("converged")));
    let _ = std::fs::remove_dir_all(&out_dir);
}

#[test]
fn rerun_reproduces_every_counter_column_bit_for_bit() {
    let args_for = |dir: &PathBuf| {
        vec![
            "--problems".to_string(),
            "quad_spd:30:5,trig:10".to_string(),
            "--out".to_string(),
            dir.to_str().unwrap().to_string(),
        ]
    };
    let d1 = scratch_dir("rerun1");
    let d2 = scratch_dir("rerun2");
    let a1: Vec<String> = args_for(&d1);
    let a2: Vec<String> = args_for(&d2);
    let o1 = run(&a1.iter().map(|s| s.as_str()).collect::<Vec<_>>());
    let o2 = run(&a2.iter().map(|s| s.as_str()).collect::<Vec<_>>());
    assert_eq!(o1.status.code(), Some(0));
    assert_eq!(o2.status.code(), Some(0));
    let strip_wall = |path: PathBuf| -> Vec<String> {
        std::fs::read_to_string(path)
            .unwrap()
            .trim_end()
            .lines()
            .map(|l| l.rsplit_once(',').unwrap().0.to_string())
            .collect()
    };
    // all columns except wall_time_ms are deterministic
    assert_eq!(
        strip_wall(d1.join("records.csv")),
        strip_wall(d2.join("records.csv"))
    );
    let _ = std::fs::remove_dir_all(&d1);
    let _ = std::fs::remove_dir_all(&d2);
}
