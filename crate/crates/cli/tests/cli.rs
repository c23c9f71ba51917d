//! Command-line behavior: exit codes, the library/audit/beta subcommands and
//! the golden summary values of the bundled configs.

use std::path::{Path, PathBuf};
use std::process::Command;

use signorini::fields::ScalarField;
use signorini::geometry::{homogeneous_library, Family};

fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_signorini")
}

fn tmp(name: &str) -> PathBuf {
    let p = Path::new(env!("CARGO_TARGET_TMPDIR")).join(name);
    let _ = std::fs::remove_dir_all(&p);
    std::fs::create_dir_all(&p).unwrap();
    p
}

fn repo_config(name: &str) -> String {
    format!("{}/../../configs/{name}.json", env!("CARGO_MANIFEST_DIR"))
}

#[test]
fn malformed_config_exits_2() {
    let dir = tmp("cli_badcfg");
    let cfg = dir.join("bad.json");
    std::fs::write(&cfg, r#"{ "grid": {"dim": 2, "counts": 65}, "coefficients": {"preset": "identity"}, "boundary": {"preset": "affine", "params": [“2”]} }"#).unwrap();
    let status = Command::new(bin())
        .args(["run", "--config"])
        .arg(&cfg)
        .arg("--out-dir")
        .arg(&dir)
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(2));
    // unknown keys are errors too (anti-typo policy)
    std::fs::write(
        &cfg,
        r#"{ "grid": {"dim": 2, "counts": 65}, "coefficients": {"preset": "identity"}, "boundary": {"preset": "affine", "params": [2.0, 1.0]}, "solver": {"omgea": 1.5} }"#,
    )
    .unwrap();
    let status = Command::new(bin())
        .args(["run", "--config"])
        .arg(&cfg)
        .arg("--out-dir")
        .arg(&dir)
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(2));
}

#[test]
fn h3_violation_exits_3_and_names_h3() {
    let dir = tmp("cli_h3");
    let cfg = dir.join("h3.json");
    std::fs::write(
        &cfg,
        r#"{
  "grid": { "dim": 2, "counts": 33 },
  "coefficients": { "preset": "h3_violating", "params": [0.2] },
  "boundary": { "preset": "affine", "params": [2.0, 1.0] }
}"#,
    )
    .unwrap();
    let out = Command::new(bin())
        .args(["run", "--config"])
        .arg(&cfg)
        .arg("--out-dir")
        .arg(&dir)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(3));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("H3"), "stderr must name H3: {stderr}");
}

#[test]
fn library_file_matches_closed_form() {
    let dir = tmp("cli_library");
    let path = dir.join("w32.sgnf");
    let status = Command::new(bin())
        .args([
            "library",
            "--family",
            "two_m_minus_half",
            "--m",
            "1",
            "--counts",
            "129",
            "--out",
        ])
        .arg(&path)
        .status()
        .unwrap();
    assert!(status.success());
    let field = ScalarField::read(&path).unwrap();
    assert!(field.even());
    let w = homogeneous_library(2, Family::TwoMMinusHalf, 1).unwrap();
    for idx in (0..field.values().len()).step_by(17) {
        let p = field.grid().node_point(idx);
        assert!(
            (field.value_at(idx) - w.value(&p)).abs() <= 1e-15 * w.value(&p).abs().max(1.0),
            "node {idx} differs from the closed form"
        );
    }
}

#[test]
fn audit_reports_constant_and_doubling() {
    let dir = tmp("cli_audit");
    let path = dir.join("w32.sgnf");
    assert!(Command::new(bin())
        .args([
            "library",
            "--family",
            "two_m_minus_half",
            "--m",
            "1",
            "--counts",
            "1025",
            "--out",
        ])
        .arg(&path)
        .status()
        .unwrap()
        .success());
    let out = Command::new(bin())
        .args(["audit", "--field"])
        .arg(&path)
        .args(["--x0", "0,0", "--r-min", "0.15", "--r-max", "0.45", "--steps", "8"])
        .arg("--out-dir")
        .arg(&dir)
        .output()
        .unwrap();
    assert!(out.status.success());
    let stdout = String::from_utf8_lossy(&out.stdout);
    let grab = |key: &str| -> f64 {
        stdout
            .lines()
            .find(|l| l.starts_with(key))
            .unwrap_or_else(|| panic!("missing {key} in audit output:\n{stdout}"))
            .split_whitespace()
            .nth(1)
            .unwrap()
            .parse()
            .unwrap()
    };
    let c_star = grab("freq_c_star_exp");
    assert!(c_star <= 1e-3, "audited C* = {c_star:.3e}");
    let hmin = grab("doubling_H_min");
    let hmax = grab("doubling_H_max");
    assert!(
        (hmin / 16.0 - 1.0).abs() <= 5e-3 && (hmax / 16.0 - 1.0).abs() <= 5e-3,
        "H doubling [{hmin}, {hmax}] off 16"
    );
    assert!(grab("ico_c_star") <= 1e-3);
}

#[test]
fn beta_on_single_point_boundary() {
    let dir = tmp("cli_beta");
    let path = dir.join("w32.sgnf");
    assert!(Command::new(bin())
        .args([
            "library",
            "--family",
            "two_m_minus_half",
            "--m",
            "1",
            "--counts",
            "129",
            "--out",
        ])
        .arg(&path)
        .status()
        .unwrap()
        .success());
    // w32's discrete free boundary is a single node near the origin
    let status = Command::new(bin())
        .args(["beta", "--field"])
        .arg(&path)
        .args(["--center", "0,0", "--radii", "0.3"])
        .arg("--out-dir")
        .arg(&dir)
        .status()
        .unwrap();
    assert!(status.success());
    let csv = std::fs::read_to_string(dir.join("beta.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next().unwrap(), "px,py,pz,r,beta,ev1,ev2,ev3,mass");
    let row = lines.next().expect("one data row");
    let beta_val: f64 = row.split(',').nth(4).unwrap().parse().unwrap();
    assert!(beta_val.abs() <= 1e-12, "single-atom beta = {beta_val}");
    assert!(lines.next().is_none());
}

#[test]
fn golden_w32_summary_window() {
    let dir = tmp("cli_golden");
    let status = Command::new(bin())
        .args(["run", "--config", &repo_config("w32_identity")])
        .arg("--out-dir")
        .arg(&dir)
        .status()
        .unwrap();
    assert!(status.success());
    let summary = std::fs::read_to_string(dir.join("summary.txt")).unwrap();
    let grab = |key: &str| -> f64 {
        summary
            .lines()
            .find(|l| l.starts_with(key))
            .unwrap_or_else(|| panic!("missing {key} in summary:\n{summary}"))
            .split_whitespace()
            .last()
            .unwrap()
            .parse()
            .unwrap()
    };
    let imin = grab("point_0 I_min");
    let imax = grab("point_0 I_max");
    assert!(
        imin >= 1.48 && imax <= 1.52,
        "I window [{imin:.4}, {imax:.4}] outside [1.48, 1.52]"
    );
    // summary frequencies trace back to the sweep CSV
    let csv = std::fs::read_to_string(dir.join("freq_0.csv")).unwrap();
    let mut from_csv: Vec<f64> = csv
        .lines()
        .skip(1)
        .map(|l| l.split(',').nth(5).unwrap().parse().unwrap())
        .collect();
    from_csv.sort_by(|a, b| a.partial_cmp(b).unwrap());
    assert_eq!(imin, from_csv[0]);
    assert_eq!(imax, *from_csv.last().unwrap());
}

#[test]
fn threads_flag_is_deterministic() {
    let dir1 = tmp("cli_threads1");
    let dir4 = tmp("cli_threads4");
    let cfg = dir1.join("multi.json");
    std::fs::write(
        &cfg,
        r#"{
  "grid": { "dim": 2, "counts": 129 },
  "coefficients": { "preset": "identity", "params": [] },
  "boundary": { "preset": "library_exact", "family": "two_m_minus_half", "m": 1 },
  "analysis": {
    "points": [[0.0, 0.0], [0.05, 0.0], [-0.05, 0.0], [0.0, 0.1]],
    "r_min": 0.15, "r_max": 0.4
  }
}"#,
    )
    .unwrap();
    for (dir, threads) in [(&dir1, "1"), (&dir4, "4")] {
        let status = Command::new(bin())
            .args(["run", "--config"])
            .arg(&cfg)
            .args(["--threads", threads, "--out-dir"])
            .arg(dir)
            .status()
            .unwrap();
        assert!(status.success());
    }
    for name in ["summary.txt", "freq_0.csv", "freq_3.csv"] {
        let a = std::fs::read(dir1.join(name)).unwrap();
        let b = std::fs::read(dir4.join(name)).unwrap();
        assert!(a == b, "{name} differs across thread counts");
    }
}
