use std::process::{Command, Output};

fn skewprod(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_skewprod")).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn value(text: &str, key: &str) -> f64 {
    let prefix = format!("{key} = ");
    let line = text.lines().find_map(|l| l.strip_prefix(&prefix)).unwrap_or_else(|| panic!("no `{key}` in output"));
    line.trim().parse().unwrap()
}

#[test]
fn validate_default_preset_passes() {
    let o = skewprod(&["--preset", "default-validated", "validate"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(stdout(&o).starts_with("# skewprod"));
}

#[test]
fn validate_flags_f01_when_beta0_is_large() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.cfg");
    std::fs::write(&path, "# too expanding\nbeta0 = 2.0\n").unwrap();
    let o = skewprod(&["--params", path.to_str().unwrap(), "validate"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("F01"));
}

#[test]
fn missing_config_is_a_usage_error() {
    let o = skewprod(&["--params", "/nonexistent/params.cfg", "validate"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn unknown_key_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.cfg");
    std::fs::write(&path, "beta9 = 1.0\n").unwrap();
    let o = skewprod(&["--params", path.to_str().unwrap(), "validate"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn unknown_preset_is_a_usage_error() {
    assert_eq!(skewprod(&["--preset", "nope", "validate"]).status.code(), Some(2));
}

#[test]
fn pressure_at_zero_is_log_three_and_reproducible() {
    let args = ["pressure", "--depth", "8", "--t-min", "-1", "--t-max", "1", "--t-step", "0.5", "--workers", "2"];
    let a = skewprod(&args);
    let b = skewprod(&args);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
    let text = stdout(&a);
    let row = text.lines().find(|l| l.starts_with("0,")).expect("row at t = 0");
    let cols: Vec<f64> = row.split(',').skip(1).take(2).map(|c| c.parse().unwrap()).collect();
    for c in cols {
        assert!((c - 3f64.ln()).abs() < 1e-12);
    }
}

#[test]
fn config_knobs_apply_and_flags_override_them() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("k.cfg");
    std::fs::write(&path, "depth = 6\nt_min = -1\nt_max = 1\nt_step = 1\n").unwrap();
    let o = skewprod(&["--params", path.to_str().unwrap(), "pressure"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    assert!(text.contains("# depth = 6"));
    assert_eq!(text.lines().filter(|l| !l.starts_with('#')).count(), 4);
    let o = skewprod(&["--params", path.to_str().unwrap(), "pressure", "--depth", "5"]);
    assert!(stdout(&o).contains("# depth = 5"));
}

#[test]
fn out_flag_writes_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("p.csv");
    let o = skewprod(&["--out", path.to_str().unwrap(), "pressure", "--depth", "4", "--t-min", "0", "--t-max", "1", "--t-step", "1"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(o.stdout.is_empty());
    assert!(std::fs::read_to_string(path).unwrap().contains("t,lower,upper"));
}

#[test]
fn spectrum_certificate_is_valid() {
    let o = skewprod(&["spectrum", "--max-period", "8"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("# valid = true"));
}

#[test]
fn transition_is_at_negative_t() {
    let o = skewprod(&["transition", "--depth", "8"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    assert!(value(&text, "t_c_estimate") < 0.0);
    assert!(value(&text, "d_plus") > value(&text, "d_minus"));
}

#[test]
fn horseshoe_pair_reports_limit() {
    let o = skewprod(&["measures", "horseshoe-pair", "--period", "8"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    let limit = value(&text, "limit_exponent_mu2");
    assert!(limit > 0.0);
    assert!((value(&text, "exponent_mu2") - limit).abs() < 1e-12);
    assert!(value(&text, "exponent_mu1") < 0.0);
}

#[test]
fn bad_weights_are_a_usage_error() {
    let o = skewprod(&["measures", "triviality", "--weights", "0.5,0.5"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn itinerary_is_seeded() {
    let a = skewprod(&["--seed", "3", "itinerary"]);
    let b = skewprod(&["--seed", "3", "itinerary"]);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
    assert!(value(&stdout(&a), "kappa_est") > 1.0);
}
