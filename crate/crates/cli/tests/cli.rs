use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

struct Fixture {
    dir: TempDir,
}

impl Fixture {
    fn new() -> Self {
        let f = Fixture { dir: tempfile::tempdir().unwrap() };
        f.write("pm1.json", r#"{"builtin":"bernoulli","params":{"a":-1,"b":1,"p":0.5}}"#);
        f.write("trimmed.json", r#"{"builtin":"trimmed_bernoulli","params":{"a":-1,"b":1,"p":0.5,"margin":0.5}}"#);
        f.write("dirac.json", r#"{"atoms":[{"x":0.5,"w":1.0}]}"#);
        f.write("dirac2.json", r#"{"atoms":[{"x":-1.25,"w":2.0}]}"#);
        f.write("semicircle.json", r#"{"builtin":"semicircle","params":{"n":200}}"#);
        f
    }

    fn write(&self, name: &str, body: &str) -> PathBuf {
        let p = self.dir.path().join(name);
        std::fs::write(&p, body).unwrap();
        p
    }

    fn path(&self, name: &str) -> PathBuf {
        self.dir.path().join(name)
    }
}

fn run(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_spherint"))
        .args(args)
        .current_dir(cwd)
        .env_remove("SPHERINT_SEED")
        .output()
        .unwrap()
}

fn ok(args: &[&str], cwd: &Path) -> String {
    let out = run(args, cwd);
    assert_eq!(out.status.code(), Some(0), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

/// First CSV block as a header plus rows of cells.
fn csv(text: &str) -> (Vec<String>, Vec<Vec<String>>) {
    let block = text.split("\n\n").next().unwrap();
    let mut lines = block.lines();
    let header = lines.next().unwrap().split(',').map(String::from).collect();
    let rows = lines.map(|l| l.split(',').map(String::from).collect()).collect();
    (header, rows)
}

fn col(header: &[String], name: &str) -> usize {
    header.iter().position(|h| h == name).unwrap_or_else(|| panic!("no column {name}"))
}

fn num(s: &str) -> f64 {
    s.parse().unwrap_or_else(|_| panic!("not a number: {s}"))
}

#[test]
fn transform_tables() {
    let f = Fixture::new();
    let cwd = f.dir.path();
    let (h, rows) = csv(&ok(&["transform", "--measure", "dirac.json", "--gamma-grid", "-2:2:5"], cwd));
    let r: Vec<f64> = rows.iter().map(|row| num(&row[col(&h, "r")])).collect();
    assert!(r.iter().all(|&x| x == 0.5), "{r:?}");

    let (h, rows) = csv(&ok(&["transform", "--measure", "pm1.json", "--gamma", "1"], cwd));
    let golden = (5f64.sqrt() - 1.0) / 2.0;
    assert!((num(&rows[0][col(&h, "r")]) - golden).abs() < 1e-12);
    assert!((num(&rows[0][col(&h, "k")]) - (golden + 1.0)).abs() < 1e-12);

    let (h, rows) = csv(&ok(&["transform", "--measure", "trimmed.json", "--gamma", "-3,0.5,3"], cwd));
    assert!(rows[0][1..].iter().all(|c| c == "DOMAIN"));
    assert!(rows[2][1..].iter().all(|c| c == "DOMAIN"));
    assert!(num(&rows[1][col(&h, "q_residual")]) < 1e-10);
}

#[test]
fn limit_tables() {
    let f = Fixture::new();
    let cwd = f.dir.path();
    let (h, rows) = csv(&ok(&["limit", "--measure", "pm1.json", "--theta", "0"], cwd));
    assert_eq!(num(&rows[0][col(&h, "theta")]), 0.0);
    assert_eq!(num(&rows[0][col(&h, "value")]), 0.0);
    assert_eq!(num(&rows[0][col(&h, "v")]), 0.0);
    assert_eq!(rows[0][col(&h, "regime")], "Interior");

    // H_max = 1.2, so the regime flips at θ = ±0.6
    let (h, rows) = csv(&ok(&["limit", "--measure", "trimmed.json", "--theta-grid", "-1.5:1.5:61"], cwd));
    let regimes: Vec<&str> =
        rows.iter().map(|r| r[col(&h, "regime")].as_str()).filter(|r| !r.starts_with("Boundary")).collect();
    let flips = regimes.windows(2).filter(|w| w[0] != w[1]).count();
    assert_eq!(flips, 2, "{regimes:?}");
    for row in &rows {
        let t = num(&row[0]);
        if (t.abs() - 0.6).abs() < 1e-9 {
            continue;
        }
        let expect = if t > 0.6 {
            "SaturatedMax"
        } else if t < -0.6 {
            "SaturatedMin"
        } else {
            "Interior"
        };
        assert_eq!(row[col(&h, "regime")], expect, "θ = {t}");
    }

    let (h, rows) = csv(&ok(&["limit", "--measure", "dirac.json", "--theta", "0.3,-1"], cwd));
    for row in &rows {
        assert_eq!(row[col(&h, "prefactor")], "DIRAC");
        assert_eq!(num(&row[col(&h, "value")]), 0.5 * num(&row[0]));
    }
}

#[test]
fn rate_tables_agree_with_limit() {
    let f = Fixture::new();
    let cwd = f.dir.path();
    let out = ok(&["rate", "--measure", "trimmed.json", "--alpha-grid", "-1.5:1.5:31", "--theta-grid", "-1.2:1.2:13"], cwd);
    let (h, rows) = csv(&out);
    let mean_row = rows.iter().find(|r| num(&r[0]) == 0.0).unwrap();
    assert_eq!(num(&mean_row[col(&h, "t")]), 0.0);
    let order = |p: &str| match p {
        "Infinite" => 0,
        "LowerTail" => 1,
        "Interior" => 2,
        "UpperTail" => 3,
        _ => panic!("{p}"),
    };
    let pieces: Vec<&str> = rows.iter().map(|r| r[col(&h, "piece")].as_str()).collect();
    assert_eq!(pieces.first(), Some(&"Infinite"));
    assert_eq!(pieces.last(), Some(&"Infinite"));
    let inner: Vec<i32> = pieces[1..pieces.len() - 1].iter().map(|p| order(p)).collect();
    assert!(inner.windows(2).all(|w| w[0] <= w[1]), "{pieces:?}");
    assert!(inner.contains(&1) && inner.contains(&2) && inner.contains(&3));

    let legendre = out.split("\n\n").nth(1).unwrap();
    let (lh, lrows) = csv(legendre);
    let (ih, irows) = csv(&ok(&["limit", "--measure", "trimmed.json", "--theta-grid", "-1.2:1.2:13"], cwd));
    for (l, i) in lrows.iter().zip(&irows) {
        let a = num(&l[col(&lh, "legendre")]);
        let b = num(&i[col(&ih, "value")]);
        assert!((a - b).abs() < 1e-6, "{a} vs {b}");
    }
}

#[test]
fn mc_contract() {
    let f = Fixture::new();
    let cwd = f.dir.path();
    let (h, rows) = csv(&ok(&["mc", "--measure", "dirac.json", "--n", "30", "--theta", "-2,0.7"], cwd));
    for row in &rows {
        assert_eq!(num(&row[col(&h, "z_score")]), 0.0);
        assert_eq!(num(&row[col(&h, "std_error")]), 0.0);
    }

    // the semicircle grid is kept away from its transitions at θ = ±1/2, where
    // the finite-N correction to the prefactor decays slowly
    for (measure, thetas, beta, method) in [
        ("pm1.json", "-0.4,0.1,0.3", "1", "tilted"),
        ("pm1.json", "-0.4,0.1,0.3", "2", "tilted"),
        ("semicircle.json", "-0.25,0.1,0.25", "1", "tilted"),
        ("semicircle.json", "-0.25,0.1,0.25", "2", "tilted"),
        ("pm1.json", "-0.4,0.1,0.3", "1", "direct"),
    ] {
        // the plain estimator's weights are heavy-tailed at large N|θ|, which biases it low
        let n = if method == "direct" { "50" } else { "200" };
        let args = ["mc", "--measure", measure, "--n", n, "--theta", thetas, "--beta", beta, "--method", method, "--samples", "50000", "--seed", "7"];
        let (h, rows) = csv(&ok(&args, cwd));
        for row in &rows {
            let z = num(&row[col(&h, "z_score")]);
            assert!(z.abs() <= 4.0, "{measure} β={beta} {method}: z = {z}");
        }
    }

    let args = ["mc", "--measure", "pm1.json", "--n", "100", "--theta", "0.2", "--samples", "20000", "--seed", "3"];
    let a = run(&args, cwd);
    let b = run(&args, cwd);
    assert_eq!(a.stdout, b.stdout);

    let env = Command::new(env!("CARGO_BIN_EXE_spherint"))
        .args(&args[..args.len() - 2])
        .current_dir(cwd)
        .env("SPHERINT_SEED", "3")
        .output()
        .unwrap();
    assert_eq!(env.stdout, a.stdout);
    let other = run(&["mc", "--measure", "pm1.json", "--n", "100", "--theta", "0.2", "--samples", "20000", "--seed", "4"], cwd);
    assert_ne!(other.stdout, a.stdout);
}

#[test]
fn mc_prefactor_mode() {
    let f = Fixture::new();
    let cwd = f.dir.path();
    let out = ok(&["mc", "--measure", "pm1.json", "--n", "1000", "--theta", "0.25", "--prefactor", "--samples", "200000"], cwd);
    let (h, rows) = csv(&out);
    let est = num(&rows[0][col(&h, "estimate")]);
    let oracle = num(&rows[0][col(&h, "oracle")]);
    assert!((oracle - 0.923_879_532_511_286_7).abs() < 1e-12);
    assert!((est / oracle - 1.0).abs() < 0.01);
}

#[test]
fn freeconv_reports() {
    let f = Fixture::new();
    let cwd = f.dir.path();
    let out = ok(&["freeconv", "--measure", "dirac.json", "--measure", "dirac2.json", "--n", "30", "--reps", "3", "--theta", "0.1,0.5,2", "--gamma", "0.3"], cwd);
    let (h, rows) = csv(&out);
    for row in &rows {
        assert!(num(&row[col(&h, "gap")]) < 1e-13, "{row:?}");
    }

    let args = ["freeconv", "--measure", "pm1.json", "--measure", "pm1.json", "--n", "400", "--reps", "4", "--solver", "householder", "--theta-grid", "0.05:0.2:4", "--gamma-grid", "0.1:0.5:5", "--format", "json"];
    let out = ok(&args, cwd);
    let v: serde_json::Value = serde_json::from_str(&out).unwrap();
    let mut again = serde_json::to_string_pretty(&v).unwrap();
    again.push('\n');
    assert_eq!(again, out);
    for row in v["tables"]["additivity"].as_array().unwrap() {
        assert!(row["gap"].as_f64().unwrap() <= 5e-2);
    }
    for row in v["tables"]["r_gap"].as_array().unwrap() {
        assert!(row["gap"].as_f64().unwrap() <= 5e-2);
    }
    assert_eq!(v["tables"]["concentration"].as_array().unwrap().len(), 4);
}

#[test]
fn selftest_and_tolerances() {
    let f = Fixture::new();
    let cwd = f.dir.path();
    let out = ok(&["selftest"], cwd);
    assert!(!out.contains("FAIL"));

    let bad = run(&["selftest", "--tol", "root_abs_tol=1"], cwd);
    assert_eq!(bad.status.code(), Some(1));
    let report = String::from_utf8(bad.stdout).unwrap();
    assert!(report.lines().any(|l| l.starts_with("k_roundtrip,FAIL")), "{report}");

    f.write("loose.toml", "root_abs_tol = 1.0\n");
    let via_file = run(&["selftest", "--config", f.path("loose.toml").to_str().unwrap()], cwd);
    assert_eq!(via_file.status.code(), Some(1));
    // flags override the file
    let restored = run(&["selftest", "--config", "loose.toml", "--tol", "root_abs_tol=1e-12"], cwd);
    assert_eq!(restored.status.code(), Some(0));

    f.write("typo.toml", "root_tol = 1.0\n");
    let typo = run(&["selftest", "--config", "typo.toml"], cwd);
    assert_eq!(typo.status.code(), Some(2));
}

fn assert_error(out: &Output, code: i32) {
    assert_eq!(out.status.code(), Some(code), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    assert!(out.stdout.is_empty(), "partial output: {}", String::from_utf8_lossy(&out.stdout));
    let err = String::from_utf8_lossy(&out.stderr);
    assert_eq!(err.lines().count(), 1, "{err}");
    assert!(err.starts_with("error: "));
}

#[test]
fn errors_are_single_line() {
    let f = Fixture::new();
    let cwd = f.dir.path();
    assert_error(&run(&["limit", "--measure", "missing.json", "--theta", "1"], cwd), 2);
    assert_error(&run(&["limit", "--measure", "pm1.json"], cwd), 2);
    assert_error(&run(&["limit", "--measure", "pm1.json", "--theta", "1", "--beta", "3"], cwd), 2);
    assert_error(&run(&["limit", "--measure", "pm1.json", "--theta-grid", "0:1:0"], cwd), 2);
    assert_error(&run(&["mc", "--measure", "pm1.json", "--theta", "1"], cwd), 2);
    assert_error(&run(&["mc", "--measure", "pm1.json", "--n", "1", "--theta", "1"], cwd), 2);
    assert_error(&run(&["limit", "--measure", "pm1.json", "--theta", "1", "--tol", "bogus=1"], cwd), 2);
    assert_error(&run(&[], cwd), 2);
    f.write("broken.json", r#"{"atoms":[{"x":0,"w":-1}]}"#);
    assert_error(&run(&["limit", "--measure", "broken.json", "--theta", "1"], cwd), 2);
    // domain errors: the prefactor of a Dirac mass, and a plain estimator far past its overflow guard
    assert_error(&run(&["mc", "--measure", "dirac.json", "--n", "10", "--theta", "1", "--prefactor"], cwd), 3);
    assert_error(&run(&["mc", "--measure", "pm1.json", "--n", "1000", "--theta", "0.1,5", "--method", "direct"], cwd), 3);
}

#[test]
fn csv_precision_and_infinity() {
    let f = Fixture::new();
    let cwd = f.dir.path();
    let out = ok(&["rate", "--measure", "trimmed.json", "--alpha", "-1.5,0.1"], cwd);
    let (h, rows) = csv(&out);
    assert_eq!(rows[0][col(&h, "t")], "inf");
    let t = &rows[1][col(&h, "t")];
    let mantissa = t.split('e').next().unwrap().replace(['-', '.'], "");
    assert_eq!(mantissa.len(), 17, "{t}");
}
