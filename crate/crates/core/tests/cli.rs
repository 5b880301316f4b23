//! End-to-end checks of the command-line interface: exit codes, artifact
//! schemas, determinism and config-file precedence.

use std::path::{Path, PathBuf};
use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_subnls"))
}

fn tmp_dir(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join("subnls_cli_tests").join(name);
    let _ = std::fs::remove_dir_all(&dir);
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

fn read(path: &Path) -> String {
    std::fs::read_to_string(path).unwrap_or_else(|e| panic!("{}: {e}", path.display()))
}

#[test]
fn missing_required_flag_is_usage_error_without_files() {
    let dir = tmp_dir("usage");
    let out = bin()
        .args(["profile", "--a", "0.5145", "--q0", "1.2953"])
        .arg("--out-dir")
        .arg(&dir)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    let entries: Vec<_> = std::fs::read_dir(&dir).unwrap().collect();
    assert!(entries.is_empty(), "no files expected on a usage error");
}

#[test]
fn unknown_flag_is_usage_error() {
    let out = bin().args(["profile", "--nonsense", "1"]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn profile_writes_declared_artifacts() {
    let dir = tmp_dir("profile");
    let out = bin()
        .args([
            "profile",
            "--d",
            "1",
            "--sigma",
            "1.9",
            "--a",
            "0.5145",
            "--q0",
            "1.2953",
            "--rho-max",
            "30",
        ])
        .arg("--out-dir")
        .arg(&dir)
        .output()
        .unwrap();
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let manifest: serde_json::Value =
        serde_json::from_str(&read(&dir.join("manifest.json"))).unwrap();
    assert_eq!(manifest["status"], "ok");
    assert_eq!(manifest["command"], "profile");
    for listed in manifest["outputs"].as_array().unwrap() {
        assert!(
            Path::new(listed.as_str().unwrap()).exists(),
            "missing {listed}"
        );
    }
    let profile = read(&dir.join("profile.csv"));
    assert!(profile.starts_with("rho,re_q,im_q,abs_q,re_dq,im_dq\n"));
    let fit: serde_json::Value = serde_json::from_str(&read(&dir.join("fit.json"))).unwrap();
    for key in [
        "c1_re",
        "c1_im",
        "c2_re",
        "c2_im",
        "window_lo",
        "window_hi",
        "residual",
    ] {
        assert!(fit.get(key).is_some(), "fit.json missing {key}");
    }
}

#[test]
fn numerical_failure_writes_manifest_and_exits_one() {
    let dir = tmp_dir("failure");
    // Window outside the integrated range: the fit has too few nodes.
    let out = bin()
        .args([
            "fit",
            "--sigma",
            "1.9",
            "--a",
            "0.5145",
            "--q0",
            "1.2953",
            "--rho-max",
            "12",
            "--window-lo",
            "11.999",
            "--window-hi",
            "12",
        ])
        .arg("--out-dir")
        .arg(&dir)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
    let manifest: serde_json::Value =
        serde_json::from_str(&read(&dir.join("manifest.json"))).unwrap();
    assert_eq!(manifest["status"], "error");
    assert!(manifest["error"].as_str().unwrap().len() > 5);
}

#[test]
fn tolerance_comparison_runs_agree_at_rho_10() {
    let dir8 = tmp_dir("tol8");
    let dir10 = tmp_dir("tol10");
    for (dir, tol) in [(&dir8, "1e-8"), (&dir10, "1e-10")] {
        let out = bin()
            .args([
                "profile",
                "--sigma",
                "1.9",
                "--a",
                "0.5145",
                "--q0",
                "1.2953",
                "--rho-max",
                "12",
                "--window-lo",
                "6",
                "--window-hi",
                "12",
                "--tol",
                tol,
            ])
            .arg("--out-dir")
            .arg(dir)
            .output()
            .unwrap();
        assert!(out.status.success());
    }
    // The two adaptive grids place nodes differently, so evaluate each
    // exported profile at exactly rho = 10 by cubic Hermite interpolation of
    // the CSV (which carries Q' alongside Q).
    let value_at_10 = |dir: &Path| -> (f64, f64) {
        let body = read(&dir.join("profile.csv"));
        let rows: Vec<Vec<f64>> = body
            .lines()
            .skip(1)
            .map(|l| l.split(',').map(|c| c.parse().unwrap()).collect())
            .collect();
        let k = rows.partition_point(|r| r[0] < 10.0) - 1;
        let (r0, r1) = (&rows[k], &rows[k + 1]);
        let h = r1[0] - r0[0];
        let s = (10.0 - r0[0]) / h;
        let (s2, s3) = (s * s, s * s * s);
        let (h00, h10, h01, h11) = (
            2.0 * s3 - 3.0 * s2 + 1.0,
            s3 - 2.0 * s2 + s,
            -2.0 * s3 + 3.0 * s2,
            s3 - s2,
        );
        let part = |q0: f64, dq0: f64, q1: f64, dq1: f64| {
            h00 * q0 + h10 * h * dq0 + h01 * q1 + h11 * h * dq1
        };
        (
            part(r0[1], r0[4], r1[1], r1[4]),
            part(r0[2], r0[5], r1[2], r1[5]),
        )
    };
    let (re8, im8) = value_at_10(&dir8);
    let (re10, im10) = value_at_10(&dir10);
    let diff = ((re8 - re10).powi(2) + (im8 - im10).powi(2)).sqrt();
    assert!(diff < 1e-6, "tolerance comparison differs by {diff:e}");
}

#[test]
fn reruns_are_byte_identical() {
    let dir1 = tmp_dir("rerun1");
    let dir2 = tmp_dir("rerun2");
    for dir in [&dir1, &dir2] {
        let out = bin()
            .args([
                "compare",
                "--sigma",
                "1.9",
                "--a",
                "0.5145",
                "--q0",
                "1.2953",
                "--half-width",
                "20",
                "--t-end",
                "0.05",
                "--snapshots",
                "0,0.05",
                "--core-radius",
                "8",
            ])
            .arg("--out-dir")
            .arg(dir)
            .output()
            .unwrap();
        assert!(
            out.status.success(),
            "{}",
            String::from_utf8_lossy(&out.stderr)
        );
    }
    for name in ["profile", "fit", "shoot", "manifest"] {
        let _ = name; // only CSVs are required to be byte identical
    }
    for entry in std::fs::read_dir(&dir1).unwrap() {
        let name = entry.unwrap().file_name();
        if name.to_string_lossy().ends_with(".csv") {
            assert_eq!(
                read(&dir1.join(&name)),
                read(&dir2.join(&name)),
                "{name:?} differs between reruns"
            );
        }
    }
}

#[test]
fn config_file_supplies_values_and_flags_win() {
    let dir = tmp_dir("config");
    let conf = dir.join("run.conf");
    std::fs::write(&conf, "sigma = 1.9\na = 0.5145\nq0 = 1.2953\nrho_max = 9\n").unwrap();
    let out = bin()
        .args([
            "fit",
            "--rho-max",
            "14",
            "--window-lo",
            "7",
            "--window-hi",
            "14",
        ])
        .arg("--config")
        .arg(&conf)
        .arg("--out-dir")
        .arg(&dir)
        .output()
        .unwrap();
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let manifest: serde_json::Value =
        serde_json::from_str(&read(&dir.join("manifest.json"))).unwrap();
    // sigma came from the file, rho_max from the flag
    assert_eq!(manifest["params"]["sigma"], "1.9");
    assert_eq!(manifest["params"]["rho_max"], "14");
}

#[test]
fn pipeline_with_zero_t_end_emits_initial_snapshot_only() {
    let dir = tmp_dir("pipe0");
    let out = bin()
        .args(["pipeline", "--sigma", "1.9", "--t-end", "0"])
        .arg("--out-dir")
        .arg(&dir)
        .output()
        .unwrap();
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let snapshots: Vec<_> = std::fs::read_dir(&dir)
        .unwrap()
        .filter_map(|e| {
            let name = e.unwrap().file_name().to_string_lossy().into_owned();
            name.starts_with("snapshot_t").then_some(name)
        })
        .collect();
    assert_eq!(snapshots, vec!["snapshot_t0.0000.csv".to_string()]);
}

#[test]
fn diagnose_reads_back_a_snapshot() {
    let dir = tmp_dir("diag");
    let out = bin()
        .args([
            "simulate",
            "--sigma",
            "1.9",
            "--a",
            "0.5145",
            "--q0",
            "1.2953",
            "--half-width",
            "20",
            "--t-end",
            "0.02",
            "--snapshots",
            "0.02",
        ])
        .arg("--out-dir")
        .arg(&dir)
        .output()
        .unwrap();
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let snap = dir.join("snapshot_t0.0200.csv");
    let out = bin()
        .args(["diagnose", "--sigma", "1.9"])
        .arg("--snapshot")
        .arg(&snap)
        .arg("--out-dir")
        .arg(&dir)
        .output()
        .unwrap();
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let report: serde_json::Value =
        serde_json::from_str(&read(&dir.join("diagnose.json"))).unwrap();
    assert!(report["mass"].as_f64().unwrap() > 0.0);
    assert!(report["interpolation_holds"].as_bool().unwrap());
    assert!((report["p_star"].as_f64().unwrap() - 2.111111111111111).abs() < 1e-12);
}
