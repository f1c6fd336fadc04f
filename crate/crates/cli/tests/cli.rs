use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn run(out: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_gripstiff"))
        .arg("--out-dir")
        .arg(out)
        .args(args)
        .output()
        .unwrap()
}

fn json(path: PathBuf) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn synth(out: &Path, name: &str, extra: &[&str]) -> String {
    let mut args = vec!["synth", "--model", "hc", "--k", "20000", "--n", "1.3", "--eta", "800", "--noise", "0.01", "--name", name];
    args.extend_from_slice(extra);
    let o = run(out, &args);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    out.join(format!("{name}.manifest.json")).display().to_string()
}

fn converted(out: &Path, names: &[&str]) -> Vec<String> {
    let manifests: Vec<String> = names.iter().map(|n| synth(out, n, &[])).collect();
    let mut args = vec!["convert", "--contact-floor", "1e-6"];
    args.extend(manifests.iter().map(String::as_str));
    assert_eq!(run(out, &args).status.code(), Some(0));
    names.iter().map(|n| out.join(format!("{n}.curve.csv")).display().to_string()).collect()
}

#[test]
fn no_inputs_is_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    for cmd in ["convert", "estimate", "fit --model kv", "classify", "report"] {
        let args: Vec<&str> = cmd.split(' ').collect();
        assert_eq!(run(dir.path(), &args).status.code(), Some(2), "{cmd}");
    }
}

#[test]
fn corrupt_csv_is_isolated() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path();
    let m: Vec<String> = ["a", "b", "c"].iter().map(|n| synth(out, n, &[])).collect();
    std::fs::write(out.join("b.csv"), "t_s,position_mm,effort\n0,1,oops\n").unwrap();
    let o = run(out, &["convert", "--contact-floor", "1e-6", &m[0], &m[1], &m[2]]);
    assert_eq!(o.status.code(), Some(1));
    assert!(out.join("a.curve.csv").exists());
    assert!(out.join("c.curve.csv").exists());
    assert!(!out.join("b.curve.csv").exists());
    let summary = json(out.join("convert_summary.json"));
    assert_eq!(summary["kind"], "convert");
}

#[test]
fn missing_class_config_is_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path();
    let curves = converted(out, &["x"]);
    assert_eq!(run(out, &["fit", "--model", "hc", &curves[0]]).status.code(), Some(0));
    let fits = out.join("fits.json").display().to_string();
    let o = run(out, &["classify", "--classes", "/nonexistent/classes.json", &fits]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn kelvin_voigt_rejects_force_threshold_curves() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path();
    let curves = converted(out, &["ft"]);
    let side = out.join("ft.curve.json");
    let mut meta = json(side.clone());
    meta["sampling_mode"] = Value::from("force_threshold");
    std::fs::write(&side, serde_json::to_string_pretty(&meta).unwrap()).unwrap();
    let o = run(out, &["fit", "--model", "kv", &curves[0]]);
    assert_eq!(o.status.code(), Some(1));
    let fits = json(out.join("fits.json"));
    let err = fits["records"][0]["error"].as_str().unwrap();
    assert!(err.contains("force-threshold"), "{err}");
    assert_eq!(fits["summary"]["failed"], 1);
}

#[test]
fn synth_rejects_strain_of_one() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(dir.path(), &["synth", "--model", "kv", "--k", "1000", "--eta", "10", "--strain-max", "1.0"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn reruns_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path();
    let curves = converted(out, &["p", "q"]);
    let snapshot = |out: &Path| {
        assert_eq!(run(out, &["fit", "--model", "hc", &curves[0], &curves[1]]).status.code(), Some(0));
        assert_eq!(run(out, &["estimate", &curves[0], &curves[1]]).status.code(), Some(0));
        ["fits.json", "estimates.json", "p.curve.csv", "p.curve.json"]
            .map(|f| std::fs::read(out.join(f)).unwrap())
    };
    let a = snapshot(out);
    let b = snapshot(out);
    assert_eq!(a, b);
}

#[test]
fn synth_is_deterministic_per_seed() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path();
    synth(out, "s", &[]);
    let first = std::fs::read(out.join("s.csv")).unwrap();
    synth(out, "s", &[]);
    assert_eq!(first, std::fs::read(out.join("s.csv")).unwrap());
    let o = run(out, &["--seed", "9", "synth", "--model", "hc", "--k", "20000", "--n", "1.3", "--eta", "800", "--noise", "0.01", "--name", "s"]);
    assert_eq!(o.status.code(), Some(0));
    assert_ne!(first, std::fs::read(out.join("s.csv")).unwrap());
}

#[test]
fn single_record_has_zero_error_ratio() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path();
    let curves = converted(out, &["solo"]);
    assert_eq!(run(out, &["estimate", "--method", "linear", &curves[0]]).status.code(), Some(0));
    let est = out.join("estimates.json").display().to_string();
    assert_eq!(run(out, &["report", &est]).status.code(), Some(0));
    let r = json(out.join("report.json"));
    let g = &r["modulus"][0]["groups"][0];
    assert_eq!(g["count"], 1);
    assert_eq!(g["error_ratio"], 0.0);
    assert!(out.join("modulus.csv").exists());
}

#[test]
fn mixed_models_get_separate_sections() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path();
    let curves = converted(out, &["m1", "m2"]);
    let hc_dir = out.join("hc");
    let kv_dir = out.join("kv");
    for (d, model) in [(&hc_dir, "hc"), (&kv_dir, "kv")] {
        std::fs::create_dir_all(d).unwrap();
        assert_eq!(run(d, &["fit", "--model", model, &curves[0], &curves[1]]).status.code(), Some(0));
    }
    let h = hc_dir.join("fits.json").display().to_string();
    let k = kv_dir.join("fits.json").display().to_string();
    assert_eq!(run(out, &["report", &h, &k]).status.code(), Some(0));
    let r = json(out.join("report.json"));
    let models: Vec<&str> = r["fits"].as_array().unwrap().iter().map(|f| f["model"].as_str().unwrap()).collect();
    assert_eq!(models.len(), 2);
    assert!(models.contains(&"hunt_crossley") && models.contains(&"kelvin_voigt"));
}

#[test]
fn unreachable_strain_point_is_skipped() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path();
    let curves = converted(out, &["shallow"]);
    let o = run(out, &["estimate", "--method", "local@0.3,0.95", "--method", "cv40", &curves[0]]);
    assert_eq!(o.status.code(), Some(0));
    let e = json(out.join("estimates.json"));
    let recs = e["records"].as_array().unwrap();
    let at = |p: f64| recs.iter().find(|r| r["strain_point"] == p && r["method"] == "local").unwrap();
    assert!(at(0.3)["skipped"].is_null());
    assert!(at(0.95)["skipped"].is_string());
    assert!(recs.iter().any(|r| r["method"] == "cv40" && r["skipped"].is_null()));
}
