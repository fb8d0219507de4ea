use std::fs;
use std::process::Command;

fn minsurf(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_minsurf"))
        .args(args)
        .output()
        .unwrap()
}

fn scratch(name: &str) -> std::path::PathBuf {
    let dir = std::env::temp_dir().join(format!("minsurf-cli-{}-{name}", std::process::id()));
    let _ = fs::remove_dir_all(&dir);
    fs::create_dir_all(&dir).unwrap();
    dir
}

#[test]
fn malformed_config_exits_with_two_and_writes_nothing() {
    let dir = scratch("malformed");
    let config = dir.join("bad.toml");
    let out = dir.join("out");
    for text in [
        "seed = \"seven\"",
        "[forward]\nscherk_resolutions = [3]",
        "[recover]\nprobes = [[0.02, 0.5]]",
        "[unknown]\nx = 1",
    ] {
        fs::write(&config, text).unwrap();
        let output = minsurf(&[
            "forward",
            "--config",
            config.to_str().unwrap(),
            "--out",
            out.to_str().unwrap(),
        ]);
        assert_eq!(output.status.code(), Some(2), "{text}");
        let record: serde_json::Value = serde_json::from_slice(&output.stderr).unwrap();
        assert_eq!(record["kind"], "ConfigInvalid", "{text}");
        assert!(!out.exists(), "{text}");
    }
    let _ = fs::remove_dir_all(&dir);
}

#[test]
fn missing_config_file_is_a_configuration_error() {
    let dir = scratch("missing");
    let out = dir.join("out");
    let output = minsurf(&[
        "forward",
        "--config",
        dir.join("absent.toml").to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(output.status.code(), Some(2));
    assert!(!out.exists());
    let _ = fs::remove_dir_all(&dir);
}

#[test]
fn manifest_records_hash_grids_and_verdicts() {
    let dir = scratch("manifest");
    let config = concat!(env!("CARGO_MANIFEST_DIR"), "/configs/quick.toml");
    let output = minsurf(&[
        "identities",
        "--config",
        config,
        "--out",
        dir.to_str().unwrap(),
    ]);
    assert_eq!(
        output.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&output.stderr)
    );
    let manifest: serde_json::Value =
        serde_json::from_slice(&fs::read(dir.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["config_sha256"].as_str().unwrap().len(), 64);
    assert_eq!(manifest["grids"][0]["nodes"], serde_json::json!([17, 33]));
    assert_eq!(manifest["criteria"][0]["id"], 5);
    assert!(dir.join("identities.csv").exists());
    let _ = fs::remove_dir_all(&dir);
}
