use std::path::Path;
use std::process::{Command, Output};

fn ypq(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ypq")).args(args).env_remove("YPQ_CACHE_DIR").output().unwrap()
}

fn json(out: &Output) -> serde_json::Value {
    serde_json::from_slice(&out.stdout).unwrap()
}

#[test]
fn geometry_json_mirrors_label() {
    let out = ypq(&["geometry", "--p", "2", "--q", "3", "--json"]);
    assert!(out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("mirror"));
    let v = json(&out);
    assert_eq!(v["geometry"]["q"], 1);
    assert_eq!(v["geometry"]["sigma"], 6);
    let a = v["geometry"]["a"].as_f64().unwrap();
    assert!((a - 0.38732652264175055).abs() < 1e-12);
    assert!(v["invariants"].as_array().unwrap().iter().all(|i| i["pass"] == true));
}

#[test]
fn floats_round_trip() {
    let out = ypq(&["geometry", "--p", "3", "--q", "2", "--json"]);
    let text = String::from_utf8(out.stdout).unwrap();
    let v: serde_json::Value = serde_json::from_str(&text).unwrap();
    let a = v["geometry"]["a"].as_f64().unwrap();
    assert_eq!(a.to_string().parse::<f64>().unwrap(), a);
    assert!((a - 0.18085763074788713).abs() < 1e-12);
    assert!(text.contains(&format!("{a}")));
}

#[test]
fn bad_arguments_exit_2() {
    let out = ypq(&["geometry", "--p", "2", "--q", "3", "--bogus"]);
    assert_eq!(out.status.code(), Some(2));
    let out = ypq(&["geometry", "--p", "2", "--q", "2"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).starts_with("error:"));
}

#[test]
fn ads_modes_spacing() {
    let out = ypq(&["ads-modes", "--beta1", "1", "--c", "2.5", "--imax", "3", "--json"]);
    assert!(out.status.success());
    let rows = json(&out);
    let rows = rows.as_array().unwrap();
    assert_eq!(rows.len(), 4);
    for (i, r) in rows.iter().enumerate() {
        let w = (2.0 * i as f64 + 1.0 + 2.5 + 2.0).powi(2);
        assert!((r["omega"].as_f64().unwrap() - w).abs() < 1e-12);
        assert!(r["norm_residual"].as_f64().unwrap() < 1e-10);
    }
}

const CONFIG: &str = r#"schema_version = 1
[geometry]
p = 2
q = 1
[physics]
mass = 0.5
kappa = 1.0
[truncation]
n_max = 0
m_max = 0
l_max = 0
k_max = 0
j_max = 0
s1_max = 0
i_max = 2
[data]
preset = "mode"
beta = [0, 0, 0, 0, 0, 0, 0, 0]
[output]
times = [0.0, 0.5, 1.0]
"#;

fn write_config(dir: &Path, body: &str) -> String {
    let out = dir.join("out");
    let text = format!("{body}dir = {:?}\n", out.to_str().unwrap());
    let path = dir.join("run.toml");
    std::fs::write(&path, text).unwrap();
    path.to_str().unwrap().to_string()
}

#[test]
fn propagate_writes_samples() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), CONFIG);
    let out = ypq(&["propagate", "--config", &cfg]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let dir = tmp.path().join("out");
    for k in 0..3 {
        assert!(dir.join(format!("field_{k:04}.json")).exists());
    }
    let energy = std::fs::read_to_string(dir.join("energy.csv")).unwrap();
    let totals: Vec<f64> = energy
        .lines()
        .filter(|l| l.contains(",total,"))
        .map(|l| l.rsplit(',').next().unwrap().parse().unwrap())
        .collect();
    assert_eq!(totals.len(), 3);
    assert!(totals.iter().all(|e| (e - totals[0]).abs() <= 1e-12 * totals[0]));
}

#[test]
fn bad_config_reports_line() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), &CONFIG.replace("kappa = 1.0", "kappa = -1.0"));
    let out = ypq(&["propagate", "--config", &cfg]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.starts_with("error:") && err.contains("run.toml:7:"), "{err}");
}
