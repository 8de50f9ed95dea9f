//! End-to-end checks of the binary: export envelopes, negative controls,
//! config-file precedence, and error reporting.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_azema"))
}

fn run_in(dir: &Path, args: &[&str]) -> Output {
    bin()
        .args(args)
        .current_dir(dir)
        .output()
        .expect("spawn azema")
}

fn tmp(tag: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("azema-e2e-{tag}-{}", std::process::id()));
    let _ = std::fs::remove_dir_all(&dir);
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

/// Data rows of an exported path CSV (skips comments and the header row).
fn csv_rows(text: &str) -> Vec<(f64, f64, String)> {
    text.lines()
        .filter(|l| !l.starts_with('#') && !l.starts_with("t,"))
        .map(|l| {
            let mut c = l.split(',');
            (
                c.next().unwrap().parse().unwrap(),
                c.next().unwrap().parse().unwrap(),
                c.next().unwrap().to_string(),
            )
        })
        .collect()
}

#[test]
fn parabolic_envelope_bounds_beta_minus_two_exports() {
    // |X_t| = √t in the limit; at scale n every exported sample should stay
    // inside √t + 5/√n (advisory bound on the approximation overshoot).
    let dir = tmp("envelope");
    let n = 10_000f64;
    let out = run_in(
        &dir,
        &[
            "simulate", "--beta", "-2", "--n", "10000", "--tmax", "1", "--paths", "16", "--seed",
            "12", "--out", "paths",
        ],
    );
    assert!(out.status.success());
    for i in 0..16 {
        let text = std::fs::read_to_string(dir.join(format!("paths/path_{i:05}.csv"))).unwrap();
        for (t, z, kind) in csv_rows(&text) {
            if kind == "start" {
                continue;
            }
            assert!(
                z.abs() <= t.sqrt() + 5.0 / n.sqrt(),
                "path {i}: |z| = {} above envelope at t = {t}",
                z.abs()
            );
        }
    }
    let _ = std::fs::remove_dir_all(&dir);
}

#[test]
fn renewal_first_variant_exports_stay_above_one() {
    let dir = tmp("renewal-mag");
    let out = run_in(
        &dir,
        &[
            "simulate",
            "--renewal",
            "first",
            "--tmax",
            "30",
            "--paths",
            "4",
            "--seed",
            "3",
            "--out",
            "paths",
        ],
    );
    assert!(out.status.success());
    for i in 0..4 {
        let text = std::fs::read_to_string(dir.join(format!("paths/path_{i:05}.csv"))).unwrap();
        for (_, z, _) in csv_rows(&text) {
            assert!(z.abs() >= 1.0 - 1e-9, "|z| = {} below 1", z.abs());
        }
    }
    let _ = std::fs::remove_dir_all(&dir);
}

#[test]
fn negative_controls_must_fail_their_inner_checks() {
    let dir = tmp("negctl");
    for name in ["neg-exponential-normality", "neg-self-similarity-mismatch"] {
        let out = run_in(&dir, &["verify", "--only", name, "--seed", "42"]);
        assert!(
            out.status.success(),
            "control {name} did not behave: {}",
            String::from_utf8_lossy(&out.stdout)
        );
    }
    let _ = std::fs::remove_dir_all(&dir);
}

#[test]
fn config_file_supplies_defaults_and_flags_win() {
    let dir = tmp("config");
    std::fs::write(
        dir.join("run.json"),
        r#"{ "beta": -1.0, "n": 50, "tmax": 1.0, "paths": 2, "seed": 9 }"#,
    )
    .unwrap();
    // Config alone.
    let out = run_in(
        &dir,
        &["simulate", "--config", "run.json", "--out", "from_config"],
    );
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let sidecar: serde_json::Value = serde_json::from_str(
        &std::fs::read_to_string(dir.join("from_config/path_00000.sidecar.json")).unwrap(),
    )
    .unwrap();
    assert_eq!(sidecar["process"], "beta:-1");
    assert_eq!(sidecar["n"], 50);

    // Flag overrides the config's n and process.
    let out = run_in(
        &dir,
        &[
            "simulate",
            "--config",
            "run.json",
            "--beta",
            "-2",
            "--n",
            "75",
            "--out",
            "from_flags",
        ],
    );
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let sidecar: serde_json::Value = serde_json::from_str(
        &std::fs::read_to_string(dir.join("from_flags/path_00000.sidecar.json")).unwrap(),
    )
    .unwrap();
    assert_eq!(sidecar["process"], "beta:-2");
    assert_eq!(sidecar["n"], 75);
    let _ = std::fs::remove_dir_all(&dir);
}

#[test]
fn invalid_configurations_produce_actionable_errors() {
    let dir = tmp("badargs");
    // No process selected.
    let out = run_in(&dir, &["simulate", "--out", "x"]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("select a process"));
    // Unknown structure function.
    let out = run_in(&dir, &["marginal", "--f", "sine", "--out", "x.csv"]);
    assert!(!out.status.success());
    // Unknown verify test name.
    let out = run_in(&dir, &["verify", "--only", "nonexistent"]);
    assert!(!out.status.success());
    // Vanishing-on-a-half-line coefficient is rejected with a diagnostic.
    let out = run_in(
        &dir,
        &[
            "marginal",
            "--f",
            "asymmetric:0,-1",
            "--paths",
            "10",
            "--out",
            "x.csv",
        ],
    );
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("isolated zeros"));
    let _ = std::fs::remove_dir_all(&dir);
}

#[test]
fn verify_list_names_every_battery() {
    let dir = tmp("list");
    let out = run_in(&dir, &["verify", "--list"]);
    assert!(out.status.success());
    let text = String::from_utf8_lossy(&out.stdout);
    for name in azema::battery::BATTERY_NAMES {
        assert!(text.contains(name));
    }
    let _ = std::fs::remove_dir_all(&dir);
}

#[test]
fn plot_svg_is_well_formed_and_self_contained() {
    let dir = tmp("plotxml");
    let out = run_in(
        &dir,
        &[
            "simulate", "--f", "cubic", "--n", "200", "--tmax", "1", "--paths", "1", "--seed", "4",
            "--out", "run.csv",
        ],
    );
    assert!(out.status.success());
    let out = run_in(
        &dir,
        &[
            "plot", "--input", "run.json", "--out", "fig.svg", "--width", "640",
        ],
    );
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let svg = std::fs::read_to_string(dir.join("fig.svg")).unwrap();
    // Balanced tags, no external references.
    let mut stack: Vec<String> = Vec::new();
    let mut rest = svg.as_str();
    while let Some(start) = rest.find('<') {
        let end = rest[start..].find('>').expect("unclosed tag") + start;
        let tag = &rest[start + 1..end];
        rest = &rest[end + 1..];
        if let Some(name) = tag.strip_prefix('/') {
            assert_eq!(stack.pop().as_deref(), Some(name.trim()));
        } else if !tag.ends_with('/') {
            stack.push(tag.split_whitespace().next().unwrap().to_string());
        }
    }
    assert!(stack.is_empty());
    assert!(
        !svg.contains("href"),
        "SVG must not reference external assets"
    );
    let _ = std::fs::remove_dir_all(&dir);
}
