use std::path::PathBuf;
use std::process::{Command, Output};

use depth_regions::asymptotics::lil_constant;
use depth_regions::distributions::PlanarModel;
use depth_regions::experiments::{load_records, OutputFormat};
use depth_regions::geometry::{ConvexRegion, Point};

fn depthreg(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_depthreg")).args(args).output().unwrap()
}

fn stdout_ok(args: &[&str]) -> String {
    let out = depthreg(args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn scratch(name: &str) -> PathBuf {
    let d = std::env::temp_dir().join(format!("depthreg-cli-{}", std::process::id()));
    std::fs::create_dir_all(&d).unwrap();
    d.join(name)
}

/// `key value` lines as a lookup.
fn field(text: &str, key: &str) -> String {
    text.lines()
        .find_map(|l| l.strip_prefix(key).and_then(|r| r.strip_prefix(' ')))
        .unwrap_or_else(|| panic!("no `{key}` in\n{text}"))
        .to_owned()
}

#[test]
fn depth_of_square_point() {
    assert_eq!(stdout_ok(&["depth", "--dist", "square", "--x", "0.25", "--y", "0.25"]).trim(), "0.125");
}

#[test]
fn depth_of_cauchy_point() {
    assert_eq!(stdout_ok(&["depth", "--dist", "cauchy", "--x", "1", "--y", "1"]).trim(), "0.25");
}

#[test]
fn depth_accepts_negative_coordinates() {
    let v: f64 = stdout_ok(&["depth", "--dist", "gauss", "--x", "-0.5", "--y", "0"]).trim().parse().unwrap();
    assert!((v - 0.308537538726).abs() < 1e-12);
}

#[test]
fn cauchy_region_is_the_unit_square() {
    let text = stdout_ok(&["region", "--dist", "cauchy", "--alpha", "0.25"]);
    let r: ConvexRegion = serde_json::from_str(&text).unwrap();
    let mut vs: Vec<(f64, f64)> = r.vertices().iter().map(|p| (p.x, p.y)).collect();
    vs.sort_by(|a, b| a.partial_cmp(b).unwrap());
    assert_eq!(vs, [(-1.0, -1.0), (-1.0, 1.0), (1.0, -1.0), (1.0, 1.0)]);
}

#[test]
fn square_constant_with_components() {
    let text = stdout_ok(&["constants", "--dist", "square", "--alpha", "0.25", "--M", "1"]);
    let c: f64 = field(&text, "constant").parse().unwrap();
    assert!((c - 3f64.sqrt() / 4.0).abs() < 1e-12);
    assert_eq!(field(&text, "min_radon"), "1");
    assert_eq!(field(&text, "envelope"), field(&text, "constant"));
    let cauchy = stdout_ok(&["constants", "--dist", "cauchy", "--alpha", "0.25", "--M", "2"]);
    let lo: f64 = field(&cauchy, "constant_lower").parse().unwrap();
    let hi: f64 = field(&cauchy, "constant_upper").parse().unwrap();
    assert!((hi / lo - 2f64.sqrt()).abs() < 1e-10);
}

#[test]
fn printed_numbers_match_the_library_to_twelve_digits() {
    let text = stdout_ok(&["constants", "--dist", "gauss", "--alpha", "0.3", "--M", "2"]);
    let lib = lil_constant(&PlanarModel::StdGaussian2D, 0.3, 2.0).unwrap().constant.lower();
    assert_eq!(field(&text, "constant"), format!("{lib:.11e}").parse::<f64>().unwrap().to_string());
    let d: f64 = stdout_ok(&["depth", "--dist", "disk", "--x", "0.3", "--y", "-0.2"]).trim().parse().unwrap();
    let want = PlanarModel::unit_disk().depth(Point::new(0.3, -0.2));
    assert!((d - want).abs() <= 5e-12 * want);
}

#[test]
fn hausdorff_of_a_region_with_itself_is_zero() {
    let a = scratch("a.json");
    std::fs::write(&a, stdout_ok(&["region", "--dist", "disk", "--alpha", "0.2"])).unwrap();
    let a = a.to_str().unwrap();
    assert_eq!(stdout_ok(&["hausdorff", "--a", a, "--b", a]).trim(), "0");
}

#[test]
fn empirical_region_is_read_back_by_hausdorff() {
    let e = scratch("emp.json");
    let p = scratch("pop.json");
    let emp = stdout_ok(&["emp-region", "--dist", "square", "--n", "400", "--seed", "3", "--alpha", "0.25"]);
    std::fs::write(&e, &emp).unwrap();
    std::fs::write(&p, stdout_ok(&["region", "--dist", "square", "--alpha", "0.25"])).unwrap();
    let d: f64 = stdout_ok(&["hausdorff", "--a", e.to_str().unwrap(), "--b", p.to_str().unwrap()])
        .trim()
        .parse()
        .unwrap();
    assert!(d > 0.0 && d < 0.2);
    let grid = stdout_ok(&["emp-region", "--dist", "square", "--n", "400", "--seed", "3", "--alpha", "0.25", "--mode", "grid"]);
    let v: serde_json::Value = serde_json::from_str(&grid).unwrap();
    assert!(v["grid_error_bound"].as_f64().unwrap() > 0.0);
}

#[test]
fn empirical_depth_from_sample_file() {
    let s = scratch("s.csv");
    std::fs::write(&s, "x,y,w\n0,0,1\n1,0,1\n0,1,1\n1,1,1\n").unwrap();
    let out = stdout_ok(&["depth", "--sample", s.to_str().unwrap(), "--x", "0.5", "--y", "0.5"]);
    assert_eq!(out.trim(), "0.5");
}

#[test]
fn usage_errors_exit_with_two() {
    for args in [
        &["depth", "--dist", "square", "--x", "0.1", "--bogus"][..],
        &["region", "--dist", "square", "--alpha", "0.7"],
        &["region", "--dist", "triangle", "--alpha", "0.2"],
        &["constants", "--dist", "square", "--alpha", "0.25", "--M", "0.5"],
        &["experiment", "nonsense"],
        &["depth", "--dist", "square", "--x", "0.1"],
    ] {
        assert_eq!(depthreg(args).status.code(), Some(2), "{args:?}");
    }
}

#[test]
fn runtime_errors_exit_with_one() {
    let missing = scratch("does-not-exist.json");
    let m = missing.to_str().unwrap();
    assert_eq!(depthreg(&["hausdorff", "--a", m, "--b", m]).status.code(), Some(1));
    let cfg = scratch("bad.toml");
    std::fs::write(&cfg, "colour = \"blue\"\n").unwrap();
    let out = depthreg(&["experiment", "slln", "--config", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("colour"));
}

#[test]
fn experiment_from_config_file_persists_templated_output() {
    let cfg = scratch("lil.toml");
    std::fs::write(
        &cfg,
        "distribution = \"square\"\nalpha = 0.25\nweights = \"const1\"\nn_min = 100\nn_max = 1000\nreplications = 2\nseed = 4\n",
    )
    .unwrap();
    let template = scratch("{experiment}-{dist}-{alpha}.csv");
    let text = stdout_ok(&["experiment", "lil", "--config", cfg.to_str().unwrap(), "--out", template.to_str().unwrap()]);
    assert!(text.contains("ratio"));
    let path = scratch("lil-square-0.25.csv");
    let recs = load_records(&path, OutputFormat::Csv).unwrap();
    assert_eq!(recs.len(), 2 * 5);
    assert!(recs.iter().all(|r| r.normalized.is_some()));
}

#[test]
fn flags_override_the_config_and_seed_determines_output() {
    let cfg = scratch("slln.toml");
    std::fs::write(&cfg, "distribution = \"disk\"\nalpha = 0.2\nweights = \"exp1\"\nn_min = 50\nn_max = 500\nreplications = 3\nseed = 1\n").unwrap();
    let c = cfg.to_str().unwrap();
    let a = stdout_ok(&["experiment", "slln", "--config", c, "--seed", "8", "--format", "json"]);
    let b = stdout_ok(&["experiment", "slln", "--config", c, "--seed", "8", "--format", "json"]);
    let other = stdout_ok(&["experiment", "slln", "--config", c, "--format", "json"]);
    assert_eq!(a, b);
    assert_ne!(a, other);
    let recs: Vec<serde_json::Value> = serde_json::from_str(&a).unwrap();
    assert_eq!(recs.len(), 3 * 5);
    let fewer = stdout_ok(&["experiment", "slln", "--config", c, "--seed", "8", "--reps", "1", "--n", "100"]);
    assert_eq!(fewer.lines().count(), 1 + 2);
}

#[test]
fn inclusion_experiment_reports_failure_rates() {
    let out = depthreg(&[
        "experiment", "inclusion", "--dist", "square", "--alpha", "0.25", "--n-min", "100", "--n", "500",
        "--reps", "2", "--gamma-mults", "0,3", "--format", "csv",
    ]);
    assert!(out.status.success());
    let err = String::from_utf8(out.stderr).unwrap();
    assert_eq!(err.lines().filter(|l| l.starts_with("gamma_mult")).count(), 2);
    let body = String::from_utf8(out.stdout).unwrap();
    assert!(body.lines().nth(1).unwrap().contains(";3:"));
}
