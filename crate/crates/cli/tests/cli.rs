//! End-to-end checks of the `rmc` binary: every subcommand, exit codes, and
//! process-level reproducibility of the report files.

use std::path::{Path, PathBuf};
use std::process::Command;

fn rmc() -> Command {
    Command::new(env!("CARGO_BIN_EXE_rmc"))
}

fn temp_dir(tag: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("rmc-cli-it-{}-{tag}", std::process::id()));
    std::fs::remove_dir_all(&dir).ok();
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

fn write_config(dir: &Path, out: &Path, mtx: &Path, truth: &Path) -> PathBuf {
    let path = dir.join("bench.toml");
    std::fs::write(
        &path,
        format!(
            r#"
            name = "it"
            seed = 6
            repeats = 2
            k_neighbors = 3
            alpha_grid = [0.1, 1.0]
            algorithms = ["rmc-e", "snmtf", "kmeans"]
            max_outer_iters = 25
            output_dir = "{}"

            [data]
            kind = "file"
            path = "{}"
            format = "matrix-market"
            truth = "{}"
            "#,
            out.display(),
            mtx.display(),
            truth.display()
        ),
    )
    .unwrap();
    path
}

#[test]
fn full_pipeline_through_the_binary() {
    let dir = temp_dir("pipeline");
    let data_dir = dir.join("data");

    // gen-synthetic
    let status = rmc()
        .args([
            "gen-synthetic",
            "--n1",
            "24",
            "--n2",
            "20",
            "--c1",
            "2",
            "--c2",
            "2",
            "--noise",
            "bernoulli",
            "--noise-level",
            "0.05",
            "--seed",
            "3",
            "--out",
        ])
        .arg(&data_dir)
        .status()
        .unwrap();
    assert!(status.success());
    let mtx = data_dir.join("data.mtx");
    let truth = data_dir.join("sample_labels.csv");
    assert!(mtx.exists() && truth.exists());

    // fit + mu-hist
    let fit_dir = dir.join("fit");
    let status = rmc()
        .args(["fit", "--format", "matrix-market", "--algorithm", "rmc-e"])
        .args(["--alpha", "1", "--k", "3", "--seed", "2"])
        .arg("--data")
        .arg(&mtx)
        .arg("--truth")
        .arg(&truth)
        .arg("--out")
        .arg(&fit_dir)
        .status()
        .unwrap();
    assert!(status.success());
    let result = fit_dir.join("result.json");
    assert!(result.exists());
    let hist = fit_dir.join("mu.tsv");
    let status = rmc().arg("mu-hist").arg(&result).arg("--out").arg(&hist).status().unwrap();
    assert!(status.success());
    let text = std::fs::read_to_string(&hist).unwrap();
    assert_eq!(text.lines().count(), 12, "header plus 11 coefficients");

    // bench twice: exit code 0 and byte-identical reports.
    let out_a = dir.join("bench-a");
    let out_b = dir.join("bench-b");
    for out in [&out_a, &out_b] {
        let config = write_config(&dir, out, &mtx, &truth);
        let status = rmc().arg("bench").arg("--config").arg(&config).status().unwrap();
        assert!(status.success(), "bench must exit 0 when all cells succeed");
    }
    for file in ["runs.tsv", "cells.tsv", "summary.txt"] {
        assert_eq!(
            std::fs::read(out_a.join(file)).unwrap(),
            std::fs::read(out_b.join(file)).unwrap(),
            "{file} must be reproduced byte-for-byte"
        );
    }

    // sweep-alpha produces the curve file.
    let sweep_out = dir.join("sweep");
    let config = write_config(&dir, &sweep_out, &mtx, &truth);
    let status = rmc().arg("sweep-alpha").arg("--config").arg(&config).status().unwrap();
    assert!(status.success());
    let curve = std::fs::read_to_string(sweep_out.join("alpha_curve.tsv")).unwrap();
    // rmc-e and snmtf over two grid points, plus the header.
    assert_eq!(curve.lines().count(), 5);

    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn failed_cells_are_recorded_and_exit_nonzero() {
    // c2 = n2 is fine for k-means (one point per cluster) but violates the
    // tri-factorization requirement c2 < n2, so the rmc-e cells fail while
    // the k-means cells keep running.
    let dir = temp_dir("failcells");
    let out = dir.join("out");
    let config = dir.join("bench.toml");
    std::fs::write(
        &config,
        format!(
            r#"
            seed = 1
            repeats = 2
            k_neighbors = 3
            alpha_grid = [1.0]
            algorithms = ["kmeans", "rmc-e"]
            c1 = 2
            c2 = 20
            output_dir = "{}"

            [data]
            kind = "synthetic"
            n1 = 24
            n2 = 20
            c1 = 2
            c2 = 2
            noise = "bernoulli"
            noise_level = 0.05
            seed = 8
            "#,
            out.display()
        ),
    )
    .unwrap();
    let status = rmc().arg("bench").arg("--config").arg(&config).status().unwrap();
    assert!(!status.success(), "failed cells must flip the exit code");
    let runs = std::fs::read_to_string(out.join("runs.tsv")).unwrap();
    let ok_rows = runs.lines().filter(|l| l.ends_with("\tok")).count();
    let err_rows = runs
        .lines()
        .skip(1)
        .filter(|l| !l.ends_with("\tok"))
        .count();
    assert_eq!(ok_rows, 2, "k-means cells still ran:\n{runs}");
    assert_eq!(err_rows, 2, "rmc-e cells recorded their error:\n{runs}");
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn invalid_input_exits_nonzero_with_position() {
    let dir = temp_dir("invalid");
    let bad = dir.join("bad.csv");
    std::fs::write(&bad, "1,2\n-3,4\n").unwrap();
    let output = rmc()
        .args(["fit", "--format", "dense-csv", "--c1", "1", "--c2", "1"])
        .arg("--data")
        .arg(&bad)
        .arg("--out")
        .arg(dir.join("out"))
        .env("RUST_BACKTRACE", "0")
        .output()
        .unwrap();
    assert!(!output.status.success());
    let stderr = String::from_utf8_lossy(&output.stderr);
    assert!(
        stderr.contains("row 2") && stderr.contains("column 1"),
        "stderr: {stderr}"
    );
    std::fs::remove_dir_all(&dir).ok();
}
