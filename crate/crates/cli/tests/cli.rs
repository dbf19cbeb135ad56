use std::fs;
use std::path::Path;
use std::process::Command;

use anderson_lab::config::parse_config;
use anderson_lab::runner::directories_identical;
use proptest::prelude::*;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_anderson-lab"))
}

fn write_config(dir: &Path, name: &str, text: &str) -> std::path::PathBuf {
    let path = dir.join(name);
    fs::write(&path, text).unwrap();
    path
}

fn run(args: &[&str], config: &Path, out: &Path) -> std::process::Output {
    bin().args(args).arg("--config").arg(config).arg("--out").arg(out).output().unwrap()
}

fn csv_column(path: &Path, column: &str) -> Vec<String> {
    let mut r = csv::Reader::from_path(path).unwrap();
    let idx = r.headers().unwrap().iter().position(|h| h == column).unwrap();
    r.records().map(|rec| rec.unwrap()[idx].to_string()).collect()
}

const FREE_PAIR: &str = "experiment = spectrum\nseed = 1\nlaw = uniform\ncoupling = 0\nrealizations = 1\n\
                         geometry.dim = 1\ngeometry.side = 2\n";

#[test]
fn free_two_site_chain() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "s.cfg", FREE_PAIR);
    let out = dir.path().join("out");
    let o = run(&["spectrum"], &cfg, &out);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let eig: Vec<f64> = csv_column(&out.join("eigenvalues.csv"), "eigenvalue")
        .iter()
        .map(|s| s.parse().unwrap())
        .collect();
    assert_eq!(eig.len(), 2);
    assert!((eig[0] - 1.0).abs() < 1e-12 && (eig[1] - 3.0).abs() < 1e-12);

    let manifest: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["complete"], true);
    assert_eq!(manifest["schema_version"], 1);
    assert!(!manifest["config"].as_str().unwrap().contains("output"));
    let names: Vec<&str> = manifest["files"].as_array().unwrap().iter().map(|f| f["name"].as_str().unwrap()).collect();
    assert_eq!(names, ["results.csv", "eigenvalues.csv"]);
}

#[test]
fn single_site_sperner_probability() {
    let dir = tempfile::tempdir().unwrap();
    let text = "experiment = sperner\nseed = 1\nlaw = bernoulli:p=0.5\ncoupling = 1\ngeometry.dim = 1\n\
                geometry.side = 1\ninterval = [1.9, 2.1]\n";
    let cfg = write_config(dir.path(), "p.cfg", text);
    let out = dir.path().join("out");
    assert!(run(&["sperner"], &cfg, &out).status.success());
    let metrics = csv_column(&out.join("results.csv"), "metric");
    let values = csv_column(&out.join("results.csv"), "value");
    let p = metrics.iter().position(|m| m == "probability").unwrap();
    assert_eq!(values[p].parse::<f64>().unwrap(), 0.5);
}

#[test]
fn same_seed_same_bytes() {
    let dir = tempfile::tempdir().unwrap();
    let text = "experiment = wegner\nseed = 11\nlaw = holder:alpha=0.5\ncoupling = 1\nrealizations = 100\n\
                geometry.dim = 2\ngeometry.side = 4\nenergy = 1.0\nwegner.half_widths = 0.05; 0.1\n";
    let cfg = write_config(dir.path(), "w.cfg", text);
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    let c = dir.path().join("c");
    assert!(run(&["wegner", "--workers", "1"], &cfg, &a).status.success());
    assert!(run(&["wegner", "--workers", "3"], &cfg, &b).status.success());
    assert!(run(&["wegner", "--seed", "12"], &cfg, &c).status.success());
    assert!(directories_identical(&a, &b).unwrap());
    assert!(!directories_identical(&a, &c).unwrap());
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "s.cfg", FREE_PAIR);
    let out = dir.path().join("out");
    assert_eq!(run(&["msa"], &cfg, &out).status.code(), Some(1));
    let bad = write_config(dir.path(), "bad.cfg", "experiment = spectrum\nseed = -3\n");
    let o = run(&["spectrum"], &bad, &out);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("seed"));
    let o = bin().args(["verify", "--criteria", "1"]).output().unwrap();
    assert_eq!(o.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&o.stdout).contains("criterion  1 PASS"));
}

fn law() -> impl Strategy<Value = String> {
    prop_oneof![
        Just("uniform".to_string()),
        (0.05f64..0.95).prop_map(|p| format!("bernoulli:p={p}")),
        (0.1f64..1.0).prop_map(|a| format!("holder:alpha={a}")),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 64, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn config_text_round_trips(
        seed in any::<u64>(),
        law in law(),
        coupling in 0.0f64..50.0,
        half in 1usize..6,
        dim in 1usize..4,
        energy in -1.0f64..9.0,
        mass in 0.01f64..0.99,
    ) {
        let text = format!(
            "experiment = classify\nseed = {seed}\nlaw = {law}\ncoupling = {coupling}\nrealizations = 10\n\
             geometry.dim = {dim}\ngeometry.side = {}\ngeometry.shape = box\nenergy = {energy}\nclassify.mass = {mass}\n",
            2 * half + 1
        );
        let cfg = parse_config(&text).unwrap();
        let again = parse_config(&cfg.to_text()).unwrap();
        prop_assert_eq!(&again, &cfg);
        prop_assert_eq!(again.to_text(), cfg.to_text());
    }
}
