use std::path::Path;
use std::process::{Command, Output};

use qkr_pipeline::output::{read_table, sha256_file};
use qkr_pipeline::RunManifest;

fn qkr(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qkr")).args(args).output().expect("qkr runs")
}

fn write_config(dir: &Path, body: &str) -> String {
    let path = dir.join("config.in.toml");
    std::fs::write(&path, body).unwrap();
    path.to_string_lossy().into_owned()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn validate_prints_defaults_and_hash() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "");
    let o = qkr(&["validate", "--config", &cfg]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let text = stdout(&o);
    assert!(text.contains("N = 2001"));
    assert!(text.contains("ensemble_size = 50"));
    assert!(text.lines().any(|l| l.starts_with("# config hash: ") && l.len() == "# config hash: ".len() + 64));
}

#[test]
fn config_errors_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    for (body, needle) in [
        ("N = 2000", "N must be odd"),
        ("ensemble_size = -3", "ensemble_size"),
        ("colour = \"blue\"", "colour"),
    ] {
        let cfg = write_config(dir.path(), body);
        let o = qkr(&["validate", "--config", &cfg]);
        assert_eq!(o.status.code(), Some(2), "{body}");
        assert!(stderr(&o).contains(needle), "{body}: {}", stderr(&o));
    }
    let o = qkr(&["validate", "--config", &dir.path().join("absent.toml").to_string_lossy()]);
    assert_ne!(o.status.code(), Some(0));
}

#[test]
fn unknown_target_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "N = 11");
    let out = dir.path().join("out");
    let o = qkr(&["run", "--config", &cfg, "--targets", "fig9", "--out", &out.to_string_lossy()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(!out.join("manifest.json").exists());
}

#[test]
fn run_writes_stamped_csvs_and_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "N = 101\nensemble_size = 4\nalpha2_over_N_list = [5, 10]\nr_values = [0.5, 1, 2]\ncache = false\n",
    );
    let out = dir.path().join("out");
    let out_s = out.to_string_lossy().into_owned();
    let o = qkr(&["run", "--config", &cfg, "--targets", "table1,fig2", "--out", &out_s, "--seed", "17", "--quiet"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));

    let manifest: RunManifest = serde_json::from_str(&std::fs::read_to_string(out.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest.seed, 17);
    assert_eq!(manifest.stages.iter().map(|s| s.target.as_str()).collect::<Vec<_>>(), ["fig2", "table1"]);
    assert!(manifest.failed().is_empty());
    for rec in manifest.files() {
        let path = out.join(&rec.path);
        assert_eq!(sha256_file(&path).unwrap(), rec.sha256);
        let (hash, header, rows) = read_table(&path).unwrap();
        assert_eq!(hash, manifest.config_hash);
        assert!(!header.is_empty() && !rows.is_empty());
    }

    // the resolved config written next to the outputs validates to the same hash
    let o = qkr(&["validate", "--config", &out.join("config.toml").to_string_lossy()]);
    assert!(stdout(&o).contains(&manifest.config_hash));

    let o = qkr(&["run", "--config", &cfg, "--targets", "table1", "--out", &out_s]);
    assert_eq!(o.status.code(), Some(2), "rerun into a used directory");
}

#[test]
fn failing_target_exits_with_three_and_keeps_the_rest() {
    let dir = tempfile::tempdir().unwrap();
    // too few off-band points for the collapse fit
    let cfg = write_config(dir.path(), "N = 11\nensemble_size = 3\nalpha2_over_N_list = [5]\nr_values = [0.5, 1, 2]\ncache = false\n");
    let out = dir.path().join("out");
    let o = qkr(&["run", "--config", &cfg, "--targets", "fig2,table1", "--out", &out.to_string_lossy(), "--quiet"]);
    assert_eq!(o.status.code(), Some(3), "{}", stdout(&o));

    let manifest: RunManifest = serde_json::from_str(&std::fs::read_to_string(out.join("manifest.json")).unwrap()).unwrap();
    let failed = manifest.failed();
    assert_eq!(failed.len(), 1);
    assert_eq!(failed[0].target, "fig2");
    assert!(failed[0].error.as_deref().unwrap().contains("collapse"));
    assert!(!out.join("var_profile.csv").exists());
    assert!(out.join("table1.csv").exists());
}

#[test]
fn desk_flag_overrides_dimension() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "N = 11\nensemble_size = 2\nalpha2_over_N_list = [5]\ncache = false\n");
    let out = dir.path().join("out");
    let o = qkr(&["run", "--config", &cfg, "--targets", "table1", "--desk", "--out", &out.to_string_lossy(), "--quiet"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let resolved = std::fs::read_to_string(out.join("config.toml")).unwrap();
    assert!(resolved.contains("N = 501"));
    assert!(resolved.contains("ensemble_size = 20"));
}
