//! End-to-end tests of the `zonecsi` binary: staged commands compose to
//! the same artifacts as the one-shot report, and failures map to the
//! documented exit codes.

use std::path::Path;
use std::process::{Command, Output};

const TINY_CONFIG: &str = r#"
[scene]
array_horizontal = 4
array_vertical = 1
subcarriers = 8
ue_grid_x = 12
ue_grid_y = 12
generator_zones = 4
scatterers_per_zone = 2
cell_width_m = 60.0
cell_depth_m = 60.0

[transform]
n_c = 4

[model]
l = 2
beta = 2

[zones]
b = [1, 2]

[train]
epochs = 3
batch = 16
split_train_count = 100

[mobility]
horizon_s = 120.0
"#;

fn zonecsi(config: Option<&Path>, out: Option<&Path>, args: &[&str]) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_zonecsi"));
    if let Some(config) = config {
        cmd.arg("--config").arg(config);
    }
    if let Some(out) = out {
        cmd.arg("--out").arg(out);
    }
    cmd.args(args).output().expect("spawn zonecsi")
}

fn assert_success(output: &Output, what: &str) {
    assert!(
        output.status.success(),
        "{what} failed (status {:?}):\nstdout: {}\nstderr: {}",
        output.status.code(),
        String::from_utf8_lossy(&output.stdout),
        String::from_utf8_lossy(&output.stderr)
    );
}

#[test]
fn staged_pipeline_matches_oneshot_report() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("exp.toml");
    std::fs::write(&config, TINY_CONFIG).unwrap();
    let staged = dir.path().join("staged");
    let oneshot = dir.path().join("oneshot");

    let generate = zonecsi(Some(&config), Some(&staged), &["generate"]);
    assert_success(&generate, "generate");
    assert!(String::from_utf8_lossy(&generate.stdout).contains("144 samples"));
    assert!(staged.join("dataset.zcd1").exists());

    assert_success(&zonecsi(Some(&config), Some(&staged), &["partition"]), "partition");
    assert_success(&zonecsi(Some(&config), Some(&staged), &["train"]), "train");
    assert_success(&zonecsi(Some(&config), Some(&staged), &["evaluate"]), "evaluate");
    assert_success(&zonecsi(Some(&config), Some(&staged), &["mobility"]), "mobility");
    for artifact in [
        "partition_zones-1.csv",
        "partition_zones-2.csv",
        "bundle_zones-1.zcm1",
        "bundle_zones-2.zcm1",
        "cdf.csv",
        "trajectory_zones-1.csv",
        "trajectory_zones-2.csv",
    ] {
        assert!(staged.join(artifact).exists(), "missing staged artifact {artifact}");
    }

    let report = zonecsi(Some(&config), Some(&oneshot), &["report"]);
    assert_success(&report, "report");
    for artifact in ["dataset.zcd1", "report.csv", "cdf.csv", "manifest.txt"] {
        assert!(oneshot.join(artifact).exists(), "missing report artifact {artifact}");
    }

    // Staged commands recompute the split and seeds from the config, so
    // they must land on the same bytes as the one-shot pipeline.
    for artifact in ["dataset.zcd1", "bundle_zones-1.zcm1", "bundle_zones-2.zcm1", "cdf.csv"] {
        let a = std::fs::read(staged.join(artifact)).unwrap();
        let b = std::fs::read(oneshot.join(artifact)).unwrap();
        assert_eq!(a, b, "staged {artifact} differs from one-shot report");
    }
}

#[test]
fn unknown_config_key_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("bad.toml");
    std::fs::write(&config, "[scene]\nbogus_key = 1\n").unwrap();
    let output = zonecsi(Some(&config), Some(dir.path()), &["generate"]);
    assert_eq!(output.status.code(), Some(2));
    let stderr = String::from_utf8_lossy(&output.stderr);
    assert!(stderr.contains("bogus_key"), "stderr should name the bad key: {stderr}");
}

#[test]
fn evaluate_without_dataset_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("exp.toml");
    std::fs::write(&config, TINY_CONFIG).unwrap();
    let output = zonecsi(Some(&config), Some(&dir.path().join("empty")), &["evaluate"]);
    assert_eq!(output.status.code(), Some(3));
    let stderr = String::from_utf8_lossy(&output.stderr);
    assert!(stderr.contains("zonecsi generate"), "stderr should hint at generate: {stderr}");
}

#[test]
fn gradcheck_defaults_pass() {
    let output = zonecsi(None, None, &["gradcheck"]);
    assert_success(&output, "gradcheck");
    let stdout = String::from_utf8_lossy(&output.stdout);
    assert!(stdout.contains("worst relative error"), "unexpected output: {stdout}");
    assert!(stdout.contains("[ok]"), "unexpected verdict: {stdout}");
}

#[test]
fn count_prints_reference_architecture_numbers() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("ref.toml");
    std::fs::write(
        &config,
        r#"
        [scene]
        array_horizontal = 8
        array_vertical = 8
        subcarriers = 32

        [transform]
        n_c = 32

        [model]
        l = 64
        beta = 16

        [zones]
        b = [1, 8]
        "#,
    )
    .unwrap();
    let output = zonecsi(Some(&config), None, &["count"]);
    assert_success(&output, "count");
    let stdout = String::from_utf8_lossy(&output.stdout);
    for expected in ["4096 -> hidden 1024 -> codeword 64", "1/64", "4,262,976", "8,529,984", "4,261,888", "34,103,808", "68,239,872"] {
        assert!(stdout.contains(expected), "missing `{expected}` in:\n{stdout}");
    }
}
