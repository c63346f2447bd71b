use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn voxelvol(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_voxelvol"))
        .args(args)
        .env("VOXELVOL_THREADS", "1")
        .output()
        .expect("spawn voxelvol")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn ok(args: &[&str]) -> String {
    let o = voxelvol(args);
    assert!(o.status.success(), "{args:?}: {}", String::from_utf8_lossy(&o.stderr));
    stdout(&o)
}

fn code(args: &[&str]) -> i32 {
    voxelvol(args).status.code().unwrap()
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_owned()
}

const DISC: &str = r#"{"variant":"ball","r":1.0,"center":[0.1,-0.2]}"#;
const BALL: &str = r#"{"variant":"ball","r":1.0,"center":[0,0,0]}"#;

#[test]
fn class_tables() {
    let csv2 = ok(&["classes", "-d", "2", "--format", "csv"]);
    assert_eq!(csv2.lines().count(), 1 + 6);
    let csv3 = ok(&["classes", "-d", "3", "--format", "csv"]);
    assert_eq!(csv3.lines().count(), 1 + 22);
    let json: serde_json::Value = serde_json::from_str(&ok(&["classes", "-d", "3"])).unwrap();
    assert!(json.is_object());
    assert_eq!(code(&["classes", "-d", "4"]), 2);
}

fn coeff(csv: &str, class: usize, column: &str) -> f64 {
    let mut lines = csv.lines();
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    let col = header.iter().position(|h| *h == column).unwrap();
    let row = lines.nth(class).unwrap();
    row.split(',').nth(col).unwrap().parse().unwrap()
}

#[test]
fn isotropic_coefficients() {
    let csv = ok(&["coeffs", "-d", "3", "--mode", "mu"]);
    // Class 1 is the single black vertex: mu = 3 - √3.
    assert!((coeff(&csv, 1, "mu_bar") - (3.0 - 3f64.sqrt())).abs() < 1e-9);
    assert_eq!(code(&["coeffs", "-d", "3", "--mode", "phi"]), 2);
}

#[test]
fn fixed_coefficients_need_matching_phantom() {
    let dir = tempfile::tempdir().unwrap();
    let disc = write(dir.path(), "disc.json", DISC);
    let ball = write(dir.path(), "ball.json", BALL);
    let csv = ok(&["coeffs", "-d", "2", "--mode", "phi", "--phantom", &disc]);
    assert_eq!(csv.lines().count(), 1 + 6);
    assert_eq!(code(&["coeffs", "-d", "2", "--mode", "phi", "--phantom", &ball]), 2);
    assert_eq!(
        code(&["coeffs", "-d", "2", "--mode", "phi", "--phantom", &disc, "--rotation", "[[1,1],[0,1]]"]),
        2
    );
}

#[test]
fn voxelize_then_count() {
    let dir = tempfile::tempdir().unwrap();
    let ball = write(dir.path(), "ball.json", BALL);
    let img = dir.path().join("ball.bvox");
    let img_s = img.to_str().unwrap();
    ok(&["voxelize", &ball, "-a", "0.2", "--c", "0.3,0.1,0.6", "-o", img_s]);
    let manifest: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("ball.bvox.manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["command"], "voxelize");
    assert_eq!(manifest["config"]["a"], 0.2);

    let fast = ok(&["count", img_s]);
    let slow = ok(&["count", img_s, "--oracle"]);
    assert_eq!(fast, slow);
    assert_eq!(fast.lines().count(), 1 + 256);
    let cells: u64 = fast.lines().skip(1).map(|l| l.split(',').nth(1).unwrap().parse::<u64>().unwrap()).sum();
    assert!(cells > 0);
}

#[test]
fn voxelize_rejects_small_margin_and_bad_translation() {
    let dir = tempfile::tempdir().unwrap();
    let ball = write(dir.path(), "ball.json", BALL);
    let out = dir.path().join("x.bvox");
    let out = out.to_str().unwrap();
    assert_eq!(code(&["voxelize", &ball, "-a", "0.2", "--margin", "0.1", "-o", out]), 2);
    assert_eq!(code(&["voxelize", &ball, "-a", "0.2", "--c", "1.0,0,0", "-o", out]), 2);
    assert_eq!(code(&["voxelize", &ball, "-a", "-1", "-o", out]), 2);
}

#[test]
fn estimate_euler_on_disc() {
    let dir = tempfile::tempdir().unwrap();
    let disc = write(dir.path(), "disc.json", DISC);
    let img = dir.path().join("disc.bvox");
    let img = img.to_str().unwrap();
    ok(&["voxelize", &disc, "-a", "0.05", "-o", img]);
    let w = write(dir.path(), "w.json", r#"{"i":0,"d":2,"weights":{"1":0.25,"4":-0.25}}"#);
    let est: f64 = ok(&["estimate", img, "--weights", &w]).trim().parse().unwrap();
    assert!((est - 1.0).abs() < 1e-12, "{est}");

    let wrong_dim = write(dir.path(), "w3.json", r#"{"i":1,"d":3,"weights":{"1":1.0}}"#);
    assert_eq!(code(&["estimate", img, "--weights", &wrong_dim]), 2);
    let garbage = write(dir.path(), "junk.bvox", "not an image");
    assert_eq!(code(&["estimate", &garbage, "--weights", &w]), 2);
    assert_eq!(code(&["estimate", "/nonexistent.bvox", "--weights", &w]), 2);
}

#[test]
fn experiment_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let design = write(
        dir.path(),
        "design.json",
        &format!(
            r#"{{"phantom":{DISC},"weights":"euler-2d","mode":"isotropic","spacings":[0.2,0.1,0.05],"replicates":4,"seed":7}}"#
        ),
    );
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    ok(&["experiment", &design, "-o", a.to_str().unwrap()]);
    ok(&["--threads", "2", "experiment", &design, "-o", b.to_str().unwrap()]);
    for f in ["manifest.json", "results.csv", "summary.csv", "fit.json", "records.json"] {
        assert_eq!(fs::read(a.join(f)).unwrap(), fs::read(b.join(f)).unwrap(), "{f}");
    }
    let fit: serde_json::Value = serde_json::from_str(&fs::read_to_string(a.join("fit.json")).unwrap()).unwrap();
    assert!((fit["c0"].as_f64().unwrap() - 1.0).abs() < 1e-9);
    let results = fs::read_to_string(a.join("results.csv")).unwrap();
    assert_eq!(results.lines().count(), 1 + 12);

    let c = dir.path().join("c");
    ok(&["experiment", &design, "-o", c.to_str().unwrap(), "--seed", "8", "--replicates", "2"]);
    let results = fs::read_to_string(c.join("results.csv")).unwrap();
    assert_eq!(results.lines().count(), 1 + 6);
}

#[test]
fn malformed_designs_are_usage_errors() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("o");
    let out = out.to_str().unwrap();
    let unknown = write(
        dir.path(),
        "u.json",
        &format!(r#"{{"phantom":{DISC},"weights":"euler-2d","mode":"isotropic","spacings":[0.1],"replicates":1,"seed":1,"extra":1}}"#),
    );
    assert_eq!(code(&["experiment", &unknown, "-o", out]), 2);
    let coarse = write(
        dir.path(),
        "c.json",
        &format!(r#"{{"phantom":{DISC},"weights":"euler-2d","mode":"isotropic","spacings":[5.0],"replicates":1,"seed":1}}"#),
    );
    assert_eq!(code(&["experiment", &coarse, "-o", out]), 2);
    assert_eq!(code(&["experiment", "/nonexistent.json", "-o", out]), 2);
}

#[test]
fn feasibility_verdicts() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("f.json");
    let two = ok(&["feasibility", "-d", "2", "--out", out.to_str().unwrap()]);
    assert!(two.contains("feasible (unique)"), "{two}");
    let report: serde_json::Value = serde_json::from_str(&fs::read_to_string(&out).unwrap()).unwrap();
    let x: Vec<f64> = report[0]["report"]["solution"]
        .as_array()
        .unwrap()
        .iter()
        .map(|v| v.as_f64().unwrap())
        .collect();
    for (got, want) in x.iter().zip([0.25, 0.0, -0.25]) {
        assert!((got - want).abs() < 1e-12);
    }
    assert!(ok(&["feasibility", "-d", "3"]).contains("infeasible"));
    assert!(ok(&["feasibility", "-d", "3", "--quadrature"]).contains("infeasible"));
    assert_eq!(code(&["feasibility", "-d", "1"]), 2);
}

#[test]
fn usage_errors() {
    assert_eq!(code(&[]), 2);
    assert_eq!(code(&["frobnicate"]), 2);
    assert_eq!(code(&["--threads", "0", "classes", "-d", "2"]), 2);
    assert_eq!(code(&["--help"]), 0);
}

#[test]
fn hitmiss_writes_table() {
    let dir = tempfile::tempdir().unwrap();
    let design = write(
        dir.path(),
        "hm.json",
        &format!(r#"{{"phantom":{DISC},"l":1,"spacings":[0.2,0.1],"replicates":3,"seed":3}}"#),
    );
    let out = dir.path().join("hm");
    let printed = ok(&["hitmiss", &design, "-o", out.to_str().unwrap()]);
    let csv = fs::read_to_string(out.join("hitmiss.csv")).unwrap();
    assert_eq!(printed, csv);
    assert_eq!(csv.lines().count(), 1 + 2);
    assert!(out.join("manifest.json").exists());
}
