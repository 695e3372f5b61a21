//! End-to-end checks of the `rsgn` binary: exit codes, output files, and
//! trace determinism across repeated runs.

use std::fs;
use std::path::Path;
use std::process::Command;

fn rsgn() -> Command {
    Command::new(env!("CARGO_BIN_EXE_rsgn"))
}

fn write_config(dir: &Path) -> std::path::PathBuf {
    let path = dir.join("experiment.toml");
    fs::write(
        &path,
        r#"
experiment_id = "cli-smoke"
sketches = ["sampling"]
fractions = [0.5, 1.0]
runs = 2
base_seed = 11
budget = 20
f_target = 1e-10

[problem]
kind = "linear"
n = 8
d = 4
data_seed = 3
"#,
    )
    .unwrap();
    path
}

#[test]
fn run_then_summarize() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path());
    let out = dir.path().join("out");

    let status = rsgn()
        .args(["run", "--config"])
        .arg(&config)
        .arg("--out")
        .arg(&out)
        .status()
        .unwrap();
    assert!(status.success());
    assert!(out.join("trace.csv").exists());
    assert!(out.join("summary.json").exists());

    let output = rsgn()
        .args(["summarize", "--trace"])
        .arg(out.join("trace.csv"))
        .args(["--f-target", "1e-10"])
        .output()
        .unwrap();
    assert!(output.status.success());
    let text = String::from_utf8(output.stdout).unwrap();
    assert!(text.contains("sampling"), "table missing cell rows:\n{text}");
}

#[test]
fn repeated_runs_are_identical_except_wall_clock() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path());
    let (out_a, out_b) = (dir.path().join("a"), dir.path().join("b"));
    for out in [&out_a, &out_b] {
        let status = rsgn()
            .args(["run", "--config"])
            .arg(&config)
            .arg("--out")
            .arg(out)
            .status()
            .unwrap();
        assert!(status.success());
    }
    let strip_wall = |path: &Path| -> String {
        let text = fs::read_to_string(path).unwrap();
        text.lines()
            .map(|line| {
                let cols: Vec<&str> = line.split(',').collect();
                // wall_ms is the 10th column (index 9)
                cols.iter()
                    .enumerate()
                    .filter(|(i, _)| *i != 9)
                    .map(|(_, c)| *c)
                    .collect::<Vec<_>>()
                    .join(",")
            })
            .collect::<Vec<_>>()
            .join("\n")
    };
    assert_eq!(
        strip_wall(&out_a.join("trace.csv")),
        strip_wall(&out_b.join("trace.csv"))
    );
}

#[test]
fn config_errors_exit_with_status_2() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("bad.toml");
    fs::write(&config, "experiment_id = 3\n").unwrap();
    let status = rsgn()
        .args(["run", "--config"])
        .arg(&config)
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(2));
}

#[test]
fn dataset_errors_exit_with_status_3() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("data.libsvm");
    fs::write(&data, "+1 nonsense\n").unwrap();
    let config = dir.path().join("experiment.toml");
    fs::write(
        &config,
        format!(
            r#"
experiment_id = "bad-data"
sketches = ["sampling"]
fractions = [1.0]
runs = 1
base_seed = 0
budget = 5

[problem]
kind = "dataset"
path = "{}"
format = "libsvm_sparse"
lambda = 0.0
"#,
            data.display()
        ),
    )
    .unwrap();
    let status = rsgn()
        .args(["run", "--config"])
        .arg(&config)
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(3));
}
