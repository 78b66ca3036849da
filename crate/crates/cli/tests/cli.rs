use std::path::Path;
use std::process::{Command, Output};

const WELL: &str = r#"{
  "field": {"dim": 1, "kind": "square_well", "amplitude": 1.0, "support_radius": 1.0},
  "grid": {"extent": 20.0, "intervals": 1000},
  "mc": {"replicas": 40, "t_end_lambda": 4.0, "obs_count": 4, "seed": 11, "x0": [0.0]},
  "regions": [{"shape": "interval", "lo": 0.0, "hi": null}],
  "windows": [{"region": {"shape": "ball", "center": [0.0], "radius": 1.0}, "speed_fraction": 0.4}]
}"#;

fn run(dir: &Path, config: &str, args: &[&str]) -> Output {
    let path = dir.join("config.json");
    std::fs::write(&path, config).unwrap();
    Command::new(env!("CARGO_BIN_EXE_branchdiff"))
        .args(args)
        .arg("--config")
        .arg(&path)
        .arg("--out")
        .arg(dir.join("out"))
        .output()
        .unwrap()
}

fn read_json(path: &Path) -> serde_json::Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn read_dir_bytes(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<_> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (
                e.file_name().to_string_lossy().into_owned(),
                std::fs::read(e.path()).unwrap(),
            )
        })
        .collect();
    files.sort();
    files
}

#[test]
fn zero_rate_has_no_spectrum() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = WELL.replace(r#""amplitude": 1.0"#, r#""amplitude": 0.0"#);
    let out = run(dir.path(), &cfg, &["spectrum"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("NoPositiveEigenvalue"));
}

#[test]
fn spectrum_writes_files() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(dir.path(), WELL, &["spectrum"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let json = read_json(&dir.path().join("out/spectrum.json"));
    assert!(json["lambda0"].as_f64().unwrap() > 0.0);
    for f in ["eigenfunction.csv", "moments.csv", "moments_summary.json"] {
        assert!(dir.path().join("out").join(f).exists(), "{f}");
    }
    let csv = std::fs::read_to_string(dir.path().join("out/eigenfunction.csv")).unwrap();
    assert_eq!(csv.lines().next(), Some("coordinate,psi"));
}

#[test]
fn json_format() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(dir.path(), WELL, &["spectrum", "--format", "json"]);
    assert_eq!(out.status.code(), Some(0));
    let t = read_json(&dir.path().join("out/spectrum.json"));
    assert!(t["lambda0"].is_number());
    let table = read_json(&dir.path().join("out/moments.json"));
    assert_eq!(table["columns"][0], "coordinate");
}

#[test]
fn reruns_are_byte_identical() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for d in [&a, &b] {
        let out = run(d.path(), WELL, &["all"]);
        assert!(
            matches!(out.status.code(), Some(0 | 1)),
            "{}",
            String::from_utf8_lossy(&out.stderr)
        );
    }
    let fa = read_dir_bytes(&a.path().join("out"));
    let fb = read_dir_bytes(&b.path().join("out"));
    assert!(fa.len() > 10);
    assert_eq!(fa, fb);
}

#[test]
fn seed_flag_changes_the_ensemble() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    run(a.path(), WELL, &["simulate"]);
    run(b.path(), WELL, &["simulate", "--seed", "12"]);
    let ma = read_json(&a.path().join("out/manifest.json"));
    let mb = read_json(&b.path().join("out/manifest.json"));
    assert_eq!(mb["seed"], 12);
    assert_ne!(ma["files"]["counts.csv"], mb["files"]["counts.csv"]);
}

#[test]
fn free_particle_stays_single() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = r#"{
      "field": {"dim": 1, "kind": "square_well", "amplitude": 0.0, "support_radius": 1.0},
      "grid": {"extent": 10.0, "intervals": 100},
      "mc": {"replicas": 1, "t_end": 5.0, "obs_count": 5, "seed": 1, "x0": [0.0]}
    }"#;
    let out = run(dir.path(), cfg, &["simulate"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = std::fs::read_to_string(dir.path().join("out/counts.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("time,r0"));
    let counts: Vec<&str> = lines.map(|l| l.split(',').nth(1).unwrap()).collect();
    assert_eq!(counts, vec!["1"; 5]);
}

#[test]
fn small_cap_explosions_are_counted() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = r#"{
      "field": {"dim": 1, "kind": "square_well", "amplitude": 1.0, "support_radius": 1000.0},
      "grid": {"extent": 2000.0, "intervals": 4000},
      "mc": {"replicas": 20, "t_end": 10.0, "obs_count": 5, "cap": 10, "seed": 5, "x0": [0.0]}
    }"#;
    let out = run(dir.path(), cfg, &["simulate"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let m = read_json(&dir.path().join("out/manifest.json"));
    assert!(m["cap_hits"].as_u64().unwrap() >= 19);
    let reps = std::fs::read_to_string(dir.path().join("out/replicas.csv")).unwrap();
    assert!(
        reps.lines()
            .skip(1)
            .filter(|l| l.split(',').nth(2) == Some("1"))
            .count()
            >= 19
    );
}

#[test]
fn extinction_needs_three_dimensions() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(dir.path(), WELL, &["extinction"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("DimensionTooLow"));
}

#[test]
fn extinction_writes_both_variants() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = r#"{
      "field": {"dim": 3, "kind": "square_well", "amplitude": 2.0, "support_radius": 1.0},
      "grid": {"extent": 30.0, "intervals": 600},
      "extinction": {"extent": 200.0, "intervals": 20000}
    }"#;
    let out = run(dir.path(), cfg, &["extinction"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let j = read_json(&dir.path().join("out/extinction.json"));
    assert_eq!(j["tables"].as_array().unwrap().len(), 2);
    assert!(dir.path().join("out/extinction_feynman_kac.csv").exists());
    assert!(dir.path().join("out/extinction_uncorrected.csv").exists());
}

#[test]
fn verify_reuses_matching_ensemble() {
    let dir = tempfile::tempdir().unwrap();
    run(dir.path(), WELL, &["simulate"]);
    let before = std::fs::read(dir.path().join("out/ensemble.json")).unwrap();
    let out = run(dir.path(), WELL, &["verify"]);
    assert!(matches!(out.status.code(), Some(0 | 1)));
    assert_eq!(std::fs::read(dir.path().join("out/ensemble.json")).unwrap(), before);
    let reports = read_json(&dir.path().join("out/reports.json"));
    let ids: Vec<&str> = reports
        .as_array()
        .unwrap()
        .iter()
        .map(|r| r["id"].as_str().unwrap())
        .collect();
    assert!(ids.contains(&"growth_rate") && ids.contains(&"domain_fraction_0"));
}

#[test]
fn missing_seed_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(dir.path(), &WELL.replace(r#""seed": 11, "#, ""), &["simulate"]);
    assert_eq!(out.status.code(), Some(2));
}
