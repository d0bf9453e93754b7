//! End-to-end checks of the `chanshare` binary: CSV contracts, the
//! collision-scan shape, and error reporting.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_chanshare")
}

fn run_ok(args: &[&str]) -> Output {
    let out = Command::new(bin()).args(args).output().expect("launch");
    assert!(
        out.status.success(),
        "command {:?} failed: {}",
        args,
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn scratch_dir(tag: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("chanshare-cli-{tag}-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

fn parse_csv(text: &str) -> (Vec<String>, Vec<Vec<String>>) {
    let mut lines = text.lines();
    let header = lines
        .next()
        .expect("csv header")
        .split(',')
        .map(str::to_string)
        .collect();
    let rows = lines
        .map(|l| l.split(',').map(str::to_string).collect())
        .collect();
    (header, rows)
}

fn column(header: &[String], name: &str) -> usize {
    header
        .iter()
        .position(|h| h == name)
        .unwrap_or_else(|| panic!("column {name} missing from {header:?}"))
}

#[test]
fn experiment_rows_respect_bounds_and_schema() {
    let dir = scratch_dir("experiment");
    let config = dir.join("exp.toml");
    std::fs::write(
        &config,
        "[instance]\n\
         num_users = 4\n\
         n_values = [3, 6]\n\
         realizations = 3\n\
         master_seed = 5\n\
         [sim]\n\
         enabled = true\n\
         cycles = 2000\n\
         [run]\n\
         algorithms = [\"alg1\", \"alg2\", \"rr1\", \"rr2\"]\n\
         label = \"bounds\"\n",
    )
    .unwrap();
    let out_path = dir.join("rows.csv");
    run_ok(&[
        "experiment",
        config.to_str().unwrap(),
        "--quiet",
        "--out",
        out_path.to_str().unwrap(),
    ]);
    let text = std::fs::read_to_string(&out_path).unwrap();
    let (header, rows) = parse_csv(&text);
    assert_eq!(
        header.join(","),
        "label,algorithm,M,N,R,W,delta,total_mean,total_std,gain_vs_alg1,collision_prob,sim_total,sim_stderr,error"
    );
    assert_eq!(rows.len(), 8, "4 algorithms x 2 channel counts");
    let total_col = column(&header, "total_mean");
    let gain_col = column(&header, "gain_vs_alg1");
    let alg_col = column(&header, "algorithm");
    for row in &rows {
        let total: f64 = row[total_col].parse().unwrap();
        assert!(
            (0.0..=4.0).contains(&total),
            "total_mean {total} outside [0, M]"
        );
        let gain: f64 = row[gain_col].parse().unwrap();
        if row[alg_col] == "alg1" {
            assert_eq!(gain, 0.0);
        }
        if row[alg_col] == "alg2" {
            assert!(gain >= -1e-9, "alg2 gain {gain} negative");
        }
    }
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn collision_scan_shape() {
    // N = 12 < M: the overlapped algorithm shares nothing, so the collision
    // column is exactly zero; sharing peaks at moderate N and fades at large
    // N; and P_c never increases with the window
    let dir = scratch_dir("scan");
    let config = dir.join("scan.toml");
    std::fs::write(
        &config,
        "[instance]\n\
         num_users = 15\n\
         n_values = [12, 20, 50]\n\
         realizations = 3\n\
         master_seed = 11\n\
         [scan]\n\
         w_values = [8, 16, 32]\n\
         [run]\n\
         label = \"scan\"\n",
    )
    .unwrap();
    let out = run_ok(&["collision-scan", config.to_str().unwrap(), "--format", "csv"]);
    let text = String::from_utf8(out.stdout).unwrap();
    let (header, rows) = parse_csv(&text);
    assert_eq!(header.join(","), "label,M,N,W,collision_prob,sim_collision_rate");
    let n_col = column(&header, "N");
    let w_col = column(&header, "W");
    let pc_col = column(&header, "collision_prob");
    let pc = |n: &str, w: &str| -> f64 {
        rows.iter()
            .find(|r| r[n_col] == n && r[w_col] == w)
            .unwrap_or_else(|| panic!("missing row N={n}, W={w}"))[pc_col]
            .parse()
            .unwrap()
    };
    // no sharing below M channels
    for w in ["8", "16", "32"] {
        assert_eq!(pc("12", w), 0.0, "expected zero collision column at N=12");
    }
    // non-increasing in W for each N
    for n in ["12", "20", "50"] {
        assert!(pc(n, "8") >= pc(n, "16") && pc(n, "16") >= pc(n, "32"));
    }
    // rises from the small-N regime to moderate N, falls again at large N
    assert!(pc("20", "16") > pc("12", "16"));
    assert!(pc("20", "16") > pc("50", "16"));
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn solve_and_simulate_roundtrip_through_files() {
    let dir = scratch_dir("files");
    let inst = dir.join("inst.json");
    let asg = dir.join("asg.json");
    run_ok(&[
        "generate", "--users", "3", "--channels", "5", "--seed", "4", "--quiet", "--out",
        inst.to_str().unwrap(),
    ]);
    run_ok(&[
        "solve",
        inst.to_str().unwrap(),
        "--alg",
        "alg2",
        "--quiet",
        "--out",
        asg.to_str().unwrap(),
    ]);
    let doc = std::fs::read_to_string(&asg).unwrap();
    assert!(doc.contains("private_sets"));
    assert!(doc.contains("trace"));
    let out = run_ok(&[
        "simulate",
        inst.to_str().unwrap(),
        asg.to_str().unwrap(),
        "--cycles",
        "2000",
        "--format",
        "csv",
    ]);
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.starts_with("label,M,N,W,delta,total_thpt,total_stderr,collision_rate,cycles"));
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn invalid_config_exits_nonzero_with_line_info() {
    let dir = scratch_dir("badcfg");
    let config = dir.join("bad.toml");
    std::fs::write(&config, "[instance]\nnum_users = 4\nn_values = \"six\"\n").unwrap();
    let out = Command::new(bin())
        .args(["experiment", config.to_str().unwrap()])
        .output()
        .unwrap();
    assert!(!out.status.success());
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(
        stderr.contains("line 3"),
        "expected a line-numbered message, got: {stderr}"
    );
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn missing_files_are_reported() {
    let missing = Path::new("definitely-not-here.json");
    for args in [
        vec!["solve", missing.to_str().unwrap(), "--alg", "alg1"],
        vec!["experiment", missing.to_str().unwrap()],
    ] {
        let out = Command::new(bin()).args(&args).output().unwrap();
        assert!(!out.status.success(), "{args:?} should fail");
    }
}
