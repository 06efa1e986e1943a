use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn nanonet(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_nanonet"))
        .args(args)
        .arg("--out")
        .arg(out)
        .env("NANONET_THREADS", "2")
        .output()
        .unwrap()
}

fn stderr_json(o: &Output) -> serde_json::Value {
    serde_json::from_slice(&o.stderr).unwrap_or_else(|_| panic!("{}", String::from_utf8_lossy(&o.stderr)))
}

#[test]
fn missing_config_exits_1_with_path() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("absent.toml");
    let o = nanonet(&["--config", missing.to_str().unwrap(), "deploy"], &dir.path().join("o"));
    assert_eq!(o.status.code(), Some(1));
    let err = stderr_json(&o);
    assert_eq!(err["error"], "config");
    assert_eq!(err["path"], missing.to_str().unwrap());
    assert!(err["message"].as_str().unwrap().contains("absent.toml"));
}

#[test]
fn invalid_config_names_the_field() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.toml");
    fs::write(&cfg, "theta = 1e14\ntx_range = -1.0\n").unwrap();
    let o = nanonet(&["--config", cfg.to_str().unwrap(), "deploy"], &dir.path().join("o"));
    assert_eq!(o.status.code(), Some(1));
    assert_eq!(stderr_json(&o)["field"], "tx_range");
}

#[test]
fn runtime_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let o = nanonet(&["sweep", "--axis", "colour", "--values", "1,2"], &dir.path().join("o"));
    assert_eq!(o.status.code(), Some(2));
    assert_eq!(stderr_json(&o)["error"], "runtime");
    let o = nanonet(&["sweep", "--axis", "links", "--values", "0.5"], &dir.path().join("o"));
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn unwritable_output_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let blocker = dir.path().join("file");
    fs::write(&blocker, "").unwrap();
    let o = nanonet(&["chain"], &blocker.join("sub"));
    assert_eq!(o.status.code(), Some(3));
    assert_eq!(stderr_json(&o)["error"], "output");
}

#[test]
fn bad_arguments_exit_1() {
    let dir = tempfile::tempdir().unwrap();
    let o = nanonet(&["mc-outage", "--k", "0"], &dir.path().join("o"));
    assert_eq!(o.status.code(), Some(1));
    let o = nanonet(&["frobnicate"], &dir.path().join("o"));
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn help_lists_config_keys_with_units() {
    let o = Command::new(env!("CARGO_BIN_EXE_nanonet")).arg("--help").output().unwrap();
    assert!(o.status.success());
    let text = String::from_utf8(o.stdout).unwrap();
    for (key, unit, _) in nanonet_core::netmodel::CONFIG_KEYS {
        let line = text.lines().find(|l| l.trim_start().starts_with(key)).unwrap_or_else(|| panic!("{key}"));
        assert!(line.contains(&format!("[{unit}]")), "{line}");
    }
}

#[test]
fn rerun_from_manifest_is_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let first = dir.path().join("a");
    let o = nanonet(&["--seed", "42", "simulate", "--cycles", "5", "--trace"], &first);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));

    let manifest: serde_json::Value =
        serde_json::from_slice(&fs::read(first.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["command"], "simulate");
    assert_eq!(manifest["seed"], 42);
    let config = first.join("config.toml");
    let second = dir.path().join("b");
    let seed = manifest["seed"].to_string();
    let o = nanonet(
        &["--config", config.to_str().unwrap(), "--seed", &seed, "simulate", "--cycles", "5", "--trace"],
        &second,
    );
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    for name in ["clusters.csv", "cycles.csv", "timeline.csv", "events.csv", "config.toml"] {
        assert_eq!(fs::read(first.join(name)).unwrap(), fs::read(second.join(name)).unwrap(), "{name}");
    }
    let again: serde_json::Value =
        serde_json::from_slice(&fs::read(second.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(again["config_sha256"], manifest["config_sha256"]);
}

#[test]
fn mc_outage_writes_one_curve_per_k() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("mc");
    let o = nanonet(&["mc-outage", "--k", "1,2,4", "--trials", "2e4", "--gamma-db", "0..20", "--steps", "5"], &out);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = fs::read_to_string(out.join("mc_outage.csv")).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), "k,gamma_linear,gamma_db,p_mc,p_analytic,stderr");
    let ks: Vec<&str> = lines.map(|l| l.split(',').next().unwrap()).collect();
    assert_eq!(ks.len(), 15);
    assert_eq!(ks.iter().filter(|&&k| k == "4").count(), 5);
    let manifest = fs::read_to_string(out.join("manifest.json")).unwrap();
    assert!(manifest.contains("\"k\""));
}

#[test]
fn sweep_json_mirrors_csv() {
    let dir = tempfile::tempdir().unwrap();
    let args = ["sweep", "--axis", "distance", "--values", "1e-3..10e-3", "--steps", "4"];
    let csv_out = dir.path().join("csv");
    assert!(nanonet(&args, &csv_out).status.success());
    let json_out = dir.path().join("json");
    let mut with_json = args.to_vec();
    with_json.extend(["--format", "json"]);
    assert!(nanonet(&with_json, &json_out).status.success());

    let csv = fs::read_to_string(csv_out.join("metrics.csv")).unwrap();
    let json: serde_json::Value =
        serde_json::from_slice(&fs::read(json_out.join("metrics.json")).unwrap()).unwrap();
    let rows: Vec<&str> = csv.lines().skip(1).collect();
    assert_eq!(rows.len(), 4);
    assert_eq!(json.as_array().unwrap().len(), 4);
    let first_energy: f64 = rows[0].split(',').nth(3).unwrap().parse().unwrap();
    assert_eq!(json[0]["energy_single_j_per_bit"].as_f64().unwrap(), first_energy);
    let manifest: serde_json::Value =
        serde_json::from_slice(&fs::read(csv_out.join("manifest.json")).unwrap()).unwrap();
    let d = manifest["crossover_m"].as_f64().unwrap();
    assert!((1e-3..=6e-3).contains(&d));
}
