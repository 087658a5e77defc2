use std::path::Path;
use std::process::{Command, Output};

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_gcl-lrr"))
        .args(args)
        .output()
        .unwrap()
}

fn generate(dir: &Path, seed: &str) {
    let out = run(&[
        "generate", "--blocks", "2", "--per-block", "10", "--p-in", "0.4", "--p-out", "0.05",
        "--feature-dim", "4", "--seed", seed, "--out", dir.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn generate_is_seeded() {
    let tmp = tempfile::tempdir().unwrap();
    let (a, b, c) = (tmp.path().join("a"), tmp.path().join("b"), tmp.path().join("c"));
    generate(&a, "3");
    generate(&b, "3");
    generate(&c, "4");
    for file in ["features.csv", "edges.csv", "labels.csv", "splits.json"] {
        let read = |d: &Path| std::fs::read(d.join(file)).unwrap();
        assert_eq!(read(&a), read(&b), "{file}");
    }
    assert_ne!(
        std::fs::read(a.join("features.csv")).unwrap(),
        std::fs::read(c.join("features.csv")).unwrap()
    );
}

#[test]
fn missing_out_is_a_usage_error() {
    let out = run(&["generate"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("--out"));
}

#[test]
fn missing_input_is_an_io_error() {
    let tmp = tempfile::tempdir().unwrap();
    let out = run(&[
        "corrupt", "--bundle", "/nonexistent/bundle", "--out", tmp.path().to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn out_of_range_parameters_are_config_errors() {
    let tmp = tempfile::tempdir().unwrap();
    let data = tmp.path().join("data");
    generate(&data, "0");
    let out = run(&[
        "corrupt", "--bundle", data.to_str().unwrap(), "--rate", "1.5", "--out",
        tmp.path().join("noisy").to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(2), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn unknown_config_fields_are_rejected() {
    let tmp = tempfile::tempdir().unwrap();
    let config = tmp.path().join("experiment.toml");
    std::fs::write(&config, "seeds = [0]\nsurprise = 1\n[dataset.bundle]\n").unwrap();
    let out = run(&[
        "experiment", "--config", config.to_str().unwrap(), "--out", tmp.path().to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(2), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn train_then_embed_writes_one_row_per_node() {
    let tmp = tempfile::tempdir().unwrap();
    let data = tmp.path().join("data");
    generate(&data, "1");
    let train = tmp.path().join("train");
    let out = run(&[
        "train", "--bundle", data.to_str().unwrap(), "--epochs", "3", "--out",
        train.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let trace = std::fs::read_to_string(train.join("loss_trace.csv")).unwrap();
    assert_eq!(trace.lines().count(), 4);

    let embed = tmp.path().join("embed");
    let out = run(&[
        "embed", "--bundle", data.to_str().unwrap(), "--params",
        train.join("params.json").to_str().unwrap(), "--out", embed.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = std::fs::read_to_string(embed.join("embedding.csv")).unwrap();
    assert_eq!(csv.lines().count(), 20);
}
