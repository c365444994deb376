use std::path::PathBuf;
use std::process::Command;

use serde_json::Value;

struct Run {
    code: i32,
    stdout: String,
    stderr: String,
}

fn run_env(args: &[&str], env: &[(&str, &str)]) -> Run {
    let mut c = Command::new(env!("CARGO_BIN_EXE_superint"));
    c.args(args).env_remove("SUPERINT_SEED");
    for (k, v) in env {
        c.env(k, v);
    }
    let out = c.output().expect("binary runs");
    Run {
        code: out.status.code().expect("exit code"),
        stdout: String::from_utf8(out.stdout).unwrap(),
        stderr: String::from_utf8(out.stderr).unwrap(),
    }
}

fn run(args: &[&str]) -> Run {
    run_env(args, &[])
}

fn json(r: &Run) -> Value {
    serde_json::from_str(&r.stdout).unwrap_or_else(|e| panic!("{e}: {}\n{}", r.stdout, r.stderr))
}

fn scratch(name: &str) -> PathBuf {
    let dir = PathBuf::from(env!("CARGO_TARGET_TMPDIR")).join("cli");
    std::fs::create_dir_all(&dir).unwrap();
    dir.join(name)
}

/// Compares with `tests/golden/<name>`; `UPDATE_GOLDEN=1` rewrites it.
fn golden(name: &str, actual: &str) {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/golden").join(name);
    if std::env::var_os("UPDATE_GOLDEN").is_some() {
        std::fs::write(&path, actual).unwrap();
    }
    let expected = std::fs::read_to_string(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
    assert_eq!(actual, expected, "{name} differs from its golden file");
}

#[test]
fn golden_symbolic_reports() {
    let cases: [(&str, &[&str]); 6] = [
        ("derive-generic-3.json", &["derive", "--geometry", "generic", "--order", "3"]),
        ("verify-polar-flat.json", &["verify", "--case", "polar-flat"]),
        ("verify-hyperboloid-horocyclic.json", &["verify", "--case", "hyperboloid-horocyclic"]),
        ("reduce-polar-flat-a4nonzero.json", &["reduce", "--case", "polar-flat", "--branch", "a4!=0"]),
        ("reduce-horocyclic-a8zero.txt", &["reduce", "--case", "hyperboloid-horocyclic", "--branch", "a8=0", "--format", "text"]),
        ("latex-conditions-polar-flat.tex", &["latex", "--object", "conditions", "--case", "polar-flat"]),
    ];
    for (name, args) in cases {
        let r = run(args);
        assert_eq!(r.code, 0, "{name}: {}", r.stderr);
        golden(name, &r.stdout);
    }
}

#[test]
fn numeric_reports_are_byte_stable() {
    for args in [
        &["numcheck", "--branch", "pvi", "--seed", "3"][..],
        &["numcheck", "--branch", "weierstrass", "--lattice", "trigonometric", "--grid-nodes", "21,31,41"],
    ] {
        let a = run(args);
        let b = run(args);
        assert_eq!(a.code, 0, "{}", a.stderr);
        assert_eq!(a.stdout, b.stdout);
    }
}

#[test]
fn report_header_and_effective_config() {
    let r = run(&["numcheck", "--case", "polar-flat", "--branch", "weierstrass", "--g2", "4", "--g3", "0"]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    let v = json(&r);
    assert_eq!(v["schema"], "superint-report/1");
    assert_eq!(v["command"], "numcheck");
    assert_eq!(v["status"], "pass");
    assert_eq!(v["config"]["numeric"]["g2"], 4.0);
    assert_eq!(v["config"]["numeric"]["a1"], 0.0);
    assert_eq!(v["config"]["seed"], Value::Null, "seed is only echoed when set");
    let rows = v["result"]["residuals"].as_array().unwrap();
    let ode = rows.iter().find(|r| r["name"] == "ode").unwrap();
    assert!(ode["max_abs"].as_f64().unwrap() < 1e-8);
    assert_eq!(v["result"]["compatible"], false);
    assert!(r.stderr.contains("grid study skipped"));
}

#[test]
fn exit_code_success() {
    for args in [
        &["derive", "--geometry", "generic", "--order", "3"][..],
        &["derive", "--geometry", "polar-flat", "--order", "3", "--v1", "zero"],
        &["derive", "--geometry", "sphere-spherical", "--order", "2"],
        &["verify", "--case", "sphere-spherical"],
        &["verify", "--case", "hyperboloid-horocyclic"],
        &["reduce", "--case", "polar-flat", "--branch", "a4=0"],
        &["latex", "--object", "expr", "--expr", "0"],
    ] {
        let r = run(args);
        assert_eq!(r.code, 0, "{args:?}: {}", r.stderr);
    }
    assert_eq!(run(&["latex", "--object", "expr", "--expr", "0"]).stdout, "0\n");
}

#[test]
fn exit_code_failure_still_writes_the_report() {
    let out = scratch("perturbed.json");
    let _ = std::fs::remove_file(&out);
    let r = run(&["numcheck", "--branch", "weierstrass", "--perturb", "1.01", "--out", out.to_str().unwrap()]);
    assert_eq!(r.code, 1);
    let v: Value = serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(v["status"], "fail");
    let violated: Vec<&str> = v["result"]["residuals"]
        .as_array()
        .unwrap()
        .iter()
        .filter(|r| r["classified"] == true && r["passed"] == false)
        .map(|r| r["name"].as_str().unwrap())
        .collect();
    assert_eq!(violated, ["ode", "cond2"]);

    let r = run(&["verify", "--case", "hyperboloid-horocyclic", "--strict"]);
    assert_eq!(r.code, 1);
    assert_eq!(json(&r)["status"], "fail");
    assert_eq!(json(&r)["warnings"].as_array().unwrap().len(), 2);
}

#[test]
fn exit_code_invalid_configuration() {
    for args in [
        &["derive", "--geometry", "klein-bottle"][..],
        &["derive", "--geometry", "generic", "--order", "4"],
        &["derive"],
        &["verify", "--case", "torus"],
        &["reduce", "--case", "polar-flat", "--branch", "a8=0"],
        &["numcheck", "--branch", "elliptic"],
        &["numcheck", "--case", "sphere-spherical", "--branch", "pvi"],
        &["numcheck", "--branch", "weierstrass", "--domain", "0.5,2.5"],
        &["numcheck", "--branch", "weierstrass", "--a4", "0"],
        &["numcheck", "--branch", "weierstrass", "--lattice", "trigonometric", "--g2", "1"],
        &["numcheck", "--branch", "pvi", "--grid-nodes", "41,31"],
        &["latex", "--object", "expr", "--expr", "1 +"],
        &["frobnicate"],
    ] {
        let r = run(args);
        assert_eq!(r.code, 2, "{args:?}: {}{}", r.stdout, r.stderr);
        assert!(r.stdout.is_empty(), "{args:?} wrote a report");
    }
}

#[test]
fn config_file_overrides_flags() {
    let toml = scratch("override.toml");
    std::fs::write(&toml, "seed = 5\n[numeric]\ng2 = 4.0\ng3 = 0.0\n[grid]\nenabled = false\n").unwrap();
    let r = run(&["numcheck", "--branch", "weierstrass", "--g2", "2.0", "--seed", "9", "--config", toml.to_str().unwrap()]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    let v = json(&r);
    assert_eq!(v["config"]["numeric"]["g2"], 4.0);
    assert_eq!(v["config"]["seed"], 5);
    assert_eq!(v["config"]["grid"]["enabled"], false);

    let js = scratch("override.json");
    std::fs::write(&js, r#"{"command": "verify", "case": "polar-flat"}"#).unwrap();
    let r = run(&["verify", "--case", "torus", "--config", js.to_str().unwrap()]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    assert_eq!(json(&r)["config"]["case"], "polar-flat");
}

#[test]
fn config_file_rejects_unknown_keys_and_other_commands() {
    for (name, body) in [
        ("unknown.toml", "case = \"polar-flat\"\ncolour = \"red\"\n"),
        ("nested.toml", "[numeric]\ng4 = 1.0\n"),
        ("unknown.json", r#"{"grid": {"levels": 3}}"#),
        ("other.toml", "command = \"derive\"\n"),
        ("config.yaml", "case: polar-flat\n"),
    ] {
        let p = scratch(name);
        std::fs::write(&p, body).unwrap();
        let r = run(&["verify", "--case", "polar-flat", "--config", p.to_str().unwrap()]);
        assert_eq!(r.code, 2, "{name}: {}", r.stderr);
    }
    assert_eq!(run(&["verify", "--config", "/nonexistent/superint.toml"]).code, 2);
}

#[test]
fn environment_seed_overrides_flag_and_file() {
    let toml = scratch("seed.toml");
    std::fs::write(&toml, "seed = 2\n").unwrap();
    let args = ["numcheck", "--branch", "pvi", "--no-grid", "--seed", "1", "--config", toml.to_str().unwrap()];
    let env = run_env(&args, &[("SUPERINT_SEED", "4")]);
    assert_eq!(env.code, 0, "{}", env.stderr);
    assert_eq!(json(&env)["config"]["seed"], 4);
    let direct = run(&["numcheck", "--branch", "pvi", "--no-grid", "--seed", "4"]);
    assert_eq!(env.stdout, direct.stdout);
    let other = run(&["numcheck", "--branch", "pvi", "--no-grid", "--seed", "2"]);
    assert_ne!(json(&other)["config"]["numeric"]["beta1"], json(&env)["config"]["numeric"]["beta1"]);
    assert_eq!(run_env(&args, &[("SUPERINT_SEED", "seven")]).code, 2);
}

#[test]
fn latex_side_output() {
    let tex = scratch("derive.tex");
    let r = run(&["derive", "--geometry", "generic", "--latex", tex.to_str().unwrap()]);
    assert_eq!(r.code, 0);
    let body = std::fs::read_to_string(&tex).unwrap();
    assert!(body.starts_with("\\begin{aligned}"));
    assert_eq!(body.matches("0 &=").count(), 9);
}

#[test]
fn text_format() {
    let r = run(&["verify", "--case", "polar-flat", "--format", "text"]);
    assert_eq!(r.code, 0);
    assert!(r.stdout.starts_with("superint verify: PASS\n4 conditions derived for polar-flat\n"));
    assert!(r.stderr.is_empty());
}
