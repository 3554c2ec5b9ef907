use std::fs;
use std::path::{Path, PathBuf};

fn demo_config() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../scenarios/demo.toml")
}

fn run(args: &[&str]) -> i32 {
    gullivr_cli::run(std::iter::once("gullivr").chain(args.iter().copied()))
}

#[test]
fn simulate_happy_path_writes_outputs() {
    let out = tempfile::tempdir().unwrap();
    let cfg = demo_config();
    let code = run(&[
        "simulate",
        "--config",
        cfg.to_str().unwrap(),
        "--seed",
        "1",
        "--policy",
        "gullivr",
        "--out",
        out.path().to_str().unwrap(),
    ]);
    assert_eq!(code, 0);
    let files: Vec<_> = fs::read_dir(out.path())
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .collect();
    assert!(
        files.iter().any(|f| f.ends_with("_frames.csv")),
        "{files:?}"
    );
    assert!(
        files.iter().any(|f| f.ends_with("_events.csv")),
        "{files:?}"
    );
    assert!(
        files.iter().any(|f| f.ends_with("_summary.toml")),
        "{files:?}"
    );
}

#[test]
fn simulate_is_byte_identical_across_runs() {
    let cfg = demo_config();
    let out_a = tempfile::tempdir().unwrap();
    let out_b = tempfile::tempdir().unwrap();
    for out in [&out_a, &out_b] {
        let code = run(&[
            "simulate",
            "--config",
            cfg.to_str().unwrap(),
            "--seed",
            "7",
            "--policy",
            "teleport",
            "--out",
            out.path().to_str().unwrap(),
        ]);
        assert_eq!(code, 0);
    }
    let mut names: Vec<_> = fs::read_dir(out_a.path())
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .collect();
    names.sort();
    assert!(!names.is_empty());
    for name in names {
        let a = fs::read(out_a.path().join(&name)).unwrap();
        let b = fs::read(out_b.path().join(&name)).unwrap();
        assert_eq!(a, b, "{name} differs between identical runs");
    }
}

#[test]
fn invalid_config_lists_violation_and_exits_nonzero() {
    let dir = tempfile::tempdir().unwrap();
    let text = fs::read_to_string(demo_config()).unwrap();
    // push the castle POI outside the heightfield
    let broken = text.replace("anchor = [160.0, 0.0, 0.0]", "anchor = [99160.0, 0.0, 0.0]");
    let cfg = dir.path().join("broken.toml");
    fs::write(&cfg, broken).unwrap();
    let code = run(&[
        "simulate",
        "--config",
        cfg.to_str().unwrap(),
        "--seed",
        "1",
        "--policy",
        "gullivr",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(code, 2);
}

#[test]
fn unknown_policy_fails() {
    let out = tempfile::tempdir().unwrap();
    let code = run(&[
        "simulate",
        "--config",
        demo_config().to_str().unwrap(),
        "--seed",
        "1",
        "--policy",
        "jetpack",
        "--out",
        out.path().to_str().unwrap(),
    ]);
    assert_ne!(code, 0);
}

#[test]
fn targeting_writes_expected_row_count() {
    let out = tempfile::tempdir().unwrap();
    let code = run(&[
        "targeting",
        "--config",
        demo_config().to_str().unwrap(),
        "--seed",
        "3",
        "--sigma",
        "0.0",
        "--out",
        out.path().to_str().unwrap(),
    ]);
    assert_eq!(code, 0);
    let csv = fs::read_to_string(out.path().join("demo_targeting_3_misses.csv")).unwrap();
    // header + 4 targets x 2 attempts
    assert_eq!(csv.lines().count(), 9);
    let summary = fs::read_to_string(out.path().join("demo_targeting_3_summary.toml")).unwrap();
    assert!(summary.contains("mean_miss_m = 0.00000000e0"), "{summary}");
}

#[test]
fn compare_writes_one_row_per_policy() {
    let out = tempfile::tempdir().unwrap();
    let code = run(&[
        "compare",
        "--config",
        demo_config().to_str().unwrap(),
        "--seeds",
        "1",
        "--out",
        out.path().to_str().unwrap(),
    ]);
    assert_eq!(code, 0);
    let csv = fs::read_to_string(out.path().join("demo_compare.csv")).unwrap();
    let lines: Vec<_> = csv.lines().collect();
    assert_eq!(lines.len(), 3); // header + gullivr + teleport
    assert!(lines[1].starts_with("gullivr,"));
    assert!(lines[2].starts_with("teleport,"));
}

#[test]
fn compare_empty_seed_list_is_validation_error() {
    let out = tempfile::tempdir().unwrap();
    let code = run(&[
        "compare",
        "--config",
        demo_config().to_str().unwrap(),
        "--seeds",
        "",
        "--out",
        out.path().to_str().unwrap(),
    ]);
    assert_ne!(code, 0);
}
