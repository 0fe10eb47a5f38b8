//! Exit-code and error-reporting contract of the driver binary.

use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_polycycle"))
}

fn write(dir: &tempfile::TempDir, name: &str, content: &str) -> String {
    let p = dir.path().join(name);
    std::fs::write(&p, content).unwrap();
    p.to_string_lossy().into_owned()
}

#[test]
fn missing_field_names_the_field_and_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(&dir, "th.json", r#"{"Lambda_i": 0.5, "xi_E": [0.0], "xi_I": 0.3}"#);
    let out = bin().args(["th-run", "--input", &cfg]).output().unwrap();
    assert_eq!(out.status.code(), Some(1));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("Lambda_e"), "stderr was: {stderr}");
}

#[test]
fn malformed_json_reports_line_and_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(&dir, "bad.json", r#"{"Lambda_i": 0.5, "Lambda_e": }"#);
    let out = bin().args(["th-run", "--input", &cfg]).output().unwrap();
    assert_eq!(out.status.code(), Some(1));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("line 1"), "stderr was: {stderr}");
}

#[test]
fn missing_input_file_exits_one() {
    let out = bin().args(["rectify", "--input", "/nonexistent/x.json"]).output().unwrap();
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn failed_certificate_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    // 1 - 3x goes negative inside (0, 0.5): the map is not positive there
    let cfg = write(
        &dir,
        "broken.json",
        r#"{"model": {"kind": "power_law", "C": 1.0, "Lambda": 0.5, "a": -3.0,
             "beta": 1.0, "additive_eps": true, "delta": 0.5}}"#,
    );
    let out = bin().args(["certify", "--input", &cfg]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("not positive"), "stderr was: {stderr}");
}

#[test]
fn check_mode_reports_properties_and_passes() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        &dir,
        "model.json",
        r#"{"model": {"kind": "power_law", "C": 2.0, "Lambda": 2.0, "delta": 0.45}}"#,
    );
    let out = bin().args(["certify", "--input", &cfg, "--check"]).output().unwrap();
    assert_eq!(out.status.code(), Some(0));
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.lines().all(|l| l.starts_with("PASS")), "stdout was: {stdout}");
    // the eps-independent exemption is named, not silently passed
    assert!(stdout.contains("eps-independent exemption"), "stdout was: {stdout}");
}

#[test]
fn rectify_writes_the_requested_table() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        &dir,
        "model.json",
        r#"{"model": {"kind": "power_law", "C": 2.0, "Lambda": 2.0, "delta": 0.45},
            "count": 5}"#,
    );
    let out_path = dir.path().join("out.csv");
    let out = bin()
        .args(["rectify", "--input", &cfg, "--tol", "1e-10"])
        .arg("--output")
        .arg(&out_path)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let table = std::fs::read_to_string(&out_path).unwrap();
    let mut lines = table.lines();
    assert_eq!(lines.next().unwrap(), "x,xi,residual");
    assert_eq!(lines.count(), 5);
}

#[test]
fn freq_compare_reports_the_obstruction() {
    let dir = tempfile::tempdir().unwrap();
    let a = write(
        &dir,
        "a.json",
        r#"{"Lambda_i": 0.5, "Lambda_e": 1.25, "xi_E": [0.0, 0.1], "xi_I": 0.3}"#,
    );
    let b = write(
        &dir,
        "b.json",
        r#"{"Lambda_i": 0.5, "Lambda_e": 1.25, "xi_E": [0.0, 0.15], "xi_I": 0.3}"#,
    );
    let out = bin()
        .args(["freq", "--input", &a, "--compare", &b, "--format", "json"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("Inequivalent"), "stdout was: {stdout}");
    assert!(stdout.contains("Phi_"), "stdout was: {stdout}");
}

#[test]
fn thread_cap_env_is_honored() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        &dir,
        "th.json",
        r#"{"Lambda_i": 0.5, "Lambda_e": 1.25, "xi_E": [0.0, 0.1], "xi_I": 0.3}"#,
    );
    for threads in ["1", "2", "0"] {
        let out = bin()
            .args(["th-run", "--input", &cfg, "--depth", "2000"])
            .env("POLYCYCLE_LAB_THREADS", threads)
            .output()
            .unwrap();
        assert_eq!(out.status.code(), Some(0));
    }
}
