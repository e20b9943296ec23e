use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::{json, Value};
use tempfile::TempDir;

use vblast_core::convcode::{is_catastrophic, GeneratorSpec};
use vblast_core::rcpc::{PuncturingMatrix, RcpcFamily};

fn vblast(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_vblast")).args(args).output().expect("binary runs")
}

fn write_config(dir: &Path, name: &str, value: &Value) -> PathBuf {
    let path = dir.join(name);
    fs::write(&path, serde_json::to_string_pretty(value).unwrap()).unwrap();
    path
}

fn run(mode: &str, config: &Path, out: &Path, extra: &[&str]) -> Output {
    let mut args = vec![mode, "--config", config.to_str().unwrap(), "--out", out.to_str().unwrap(), "--quiet"];
    args.extend_from_slice(extra);
    vblast(&args)
}

/// Data rows of a CSV file as string cells.
fn rows(path: &Path) -> (Vec<String>, Vec<Vec<String>>) {
    let text = fs::read_to_string(path).unwrap();
    let mut lines = text.lines().filter(|l| !l.starts_with('#'));
    let header = lines.next().unwrap().split(',').map(String::from).collect();
    let body = lines.map(|l| l.split(',').map(String::from).collect()).collect();
    (header, body)
}

fn column(path: &Path, name: &str) -> Vec<f64> {
    let (header, body) = rows(path);
    let i = header.iter().position(|h| h == name).unwrap();
    body.iter().map(|r| r[i].parse().unwrap()).collect()
}

fn family() -> Value {
    json!({
        "mother": ["657", "435"],
        "blocking": 2,
        "matrices": [[[1, 1], [1, 1]], [[0, 1], [1, 1]], [[1, 0], [1, 1]], [[1, 1], [0, 1]], [[1, 1], [1, 0]]]
    })
}

#[test]
fn toy_spectrum_has_single_row() {
    let dir = TempDir::new().unwrap();
    let cfg = json!({"mode": "spectrum", "family": {"mother": ["7", "5"], "blocking": 1, "matrices": [[[1], [1]]]}, "dmax": 8});
    let path = write_config(dir.path(), "toy.json", &cfg);
    let out = dir.path().join("out");
    assert!(run("spectrum", &path, &out, &[]).status.success());
    let (header, body) = rows(&out.join("spectrum.csv"));
    assert_eq!(header.len(), 6 + 8);
    let c: Vec<&str> = body[0][6..].iter().map(String::as_str).collect();
    assert_eq!(body[0][3], "5");
    assert_eq!(c, ["0", "0", "0", "0", "1", "4", "12", "32"]);
    let sidecar: Value = serde_json::from_str(&fs::read_to_string(out.join("spectrum.json")).unwrap()).unwrap();
    assert_eq!(sidecar["rows"].as_array().unwrap().len(), body.len());
    assert!(sidecar["header"]["config"].as_str().unwrap().contains("\"7\""));
}

#[test]
fn catastrophic_member_is_marked() {
    let candidates = [vec![vec![1, 1], vec![1, 0]], vec![vec![1, 0], vec![1, 1]], vec![vec![0, 1], vec![1, 1]], vec![vec![1, 1], vec![0, 1]]];
    let mut found = None;
    'search: for g0 in 1..8u64 {
        for g1 in 1..8u64 {
            let octal = vec![format!("{g0:o}"), format!("{g1:o}")];
            let Ok(mother) = GeneratorSpec::from_octal(&octal) else { continue };
            if is_catastrophic(&mother) {
                continue;
            }
            for rows in &candidates {
                let members = vec![PuncturingMatrix::all_ones(2, 2), PuncturingMatrix::new(rows.clone()).unwrap()];
                let Ok(family) = RcpcFamily::new(mother.clone(), 2, members) else { continue };
                if matches!(family.equivalent(1), Err(vblast_core::Error::Catastrophic)) {
                    found = Some((octal, rows.clone()));
                    break 'search;
                }
            }
        }
    }
    let (octal, rows_) = found.expect("a catastrophic punctured member exists among memory-2 codes");
    let dir = TempDir::new().unwrap();
    let cfg = json!({"mode": "spectrum", "family": {"mother": octal, "blocking": 2, "matrices": [[[1, 1], [1, 1]], rows_]}, "dmax": 10});
    let path = write_config(dir.path(), "cat.json", &cfg);
    let out = dir.path().join("out");
    assert!(run("spectrum", &path, &out, &[]).status.success());
    let (_, body) = rows(&out.join("spectrum.csv"));
    assert!(body.iter().any(|r| r[0] == "1" && r[4] == "catastrophic"));
}

#[test]
fn reference_family_writes_discrepancy_report() {
    let dir = TempDir::new().unwrap();
    let cfg = json!({"mode": "spectrum", "family": family(), "dmax": 15, "compare_reference": true});
    let path = write_config(dir.path(), "pub.json", &cfg);
    let out = dir.path().join("out");
    assert!(run("spectrum", &path, &out, &[]).status.success());
    let report = fs::read_to_string(out.join("spectrum_discrepancy.txt")).unwrap();
    for encoder in 0..5 {
        assert!(report.contains(&format!("encoder {encoder} ")));
    }
}

#[test]
fn analytic_bundle_orderings() {
    let dir = TempDir::new().unwrap();
    let base = json!({
        "mode": "analytic", "family": family(), "members": [0, 1], "rx": 2, "tx": 2, "m": 0.5,
        "rho": [0.0, 0.8], "criteria": ["zf", "mmse"], "grid_db": {"start": 0, "stop": 20, "step": 2},
        "ensemble": {"realizations": 200, "seed": 5}
    });
    let path = write_config(dir.path(), "a.json", &base);
    let out = dir.path().join("out");
    let o = run("analytic", &path, &out, &[]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let curve = |crit: &str, enc: usize, rho: &str| column(&out.join(format!("analytic_{crit}_enc{enc}_rho{rho}.csv")), "log10_raw");
    for crit in ["zf", "mmse"] {
        for rho in ["0", "0p8"] {
            let strong = curve(crit, 0, rho);
            let punctured = curve(crit, 1, rho);
            assert!(strong.iter().zip(&punctured).all(|(a, b)| a <= b));
        }
        for enc in [0, 1] {
            let ind = curve(crit, enc, "0");
            let cor = curve(crit, enc, "0p8");
            assert!(ind.iter().zip(&cor).all(|(a, b)| a <= b));
        }
    }
    for enc in [0, 1] {
        for rho in ["0", "0p8"] {
            let zf = curve("zf", enc, rho);
            let mmse = curve("mmse", enc, rho);
            assert!(mmse.iter().zip(&zf).all(|(m, z)| m <= z));
        }
    }
    let (_, summary) = rows(&out.join("analytic_summary.csv"));
    assert_eq!(summary.len(), 8);
}

#[test]
fn empty_grid_is_a_schema_error_without_output() {
    let dir = TempDir::new().unwrap();
    let cfg = json!({"mode": "analytic", "family": family(), "rx": 2, "tx": 2, "m": 0.5, "criteria": ["zf"], "grid_db": []});
    let path = write_config(dir.path(), "e.json", &cfg);
    let out = dir.path().join("out");
    let o = run("analytic", &path, &out, &[]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("grid"));
    assert!(!out.exists());
}

#[test]
fn schema_violations_exit_with_two() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("out");
    let unknown = json!({"mode": "spectrum", "family": family(), "dmax": 10, "colour": "red"});
    let path = write_config(dir.path(), "u.json", &unknown);
    assert_eq!(run("spectrum", &path, &out, &[]).status.code(), Some(2));
    let nested = json!({"mode": "spectrum", "family": {"mother": ["7", "5"], "blocking": 1, "matrices": [[[1], [1]]], "k": 1}});
    let path = write_config(dir.path(), "n.json", &nested);
    assert_eq!(run("spectrum", &path, &out, &[]).status.code(), Some(2));
    let toy = json!({"mode": "spectrum", "family": {"mother": ["7", "5"], "blocking": 1, "matrices": [[[1], [1]]]}});
    let path = write_config(dir.path(), "t.json", &toy);
    let o = run("simulate", &path, &out, &[]);
    assert_eq!(o.status.code(), Some(2));
    let bad_octal = json!({"mode": "spectrum", "family": {"mother": ["79", "5"], "blocking": 1, "matrices": [[[1], [1]]]}});
    let path = write_config(dir.path(), "b.json", &bad_octal);
    assert_eq!(run("spectrum", &path, &out, &[]).status.code(), Some(2));
    assert_eq!(run("spectrum", &dir.path().join("missing.json"), &out, &[]).status.code(), Some(2));
}

fn awgn(gates: Value) -> Value {
    json!({
        "mode": "simulate", "rx": 1, "tx": 1, "fading": "none", "criterion": "zf",
        "coding": {"type": "uncoded"}, "grid_db": [0, 4], "symbols_per_trial": 1000,
        "stop": {"min_errors": 1000000, "max_trials": 50, "batch": 10}, "seed": 3, "gates": gates
    })
}

#[test]
fn correlated_monte_carlo_is_rejected() {
    let dir = TempDir::new().unwrap();
    let mut cfg = awgn(json!([]));
    cfg["rho"] = json!(0.5);
    let path = write_config(dir.path(), "c.json", &cfg);
    let o = run("simulate", &path, &dir.path().join("out"), &[]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("correlated"));
}

#[test]
fn awgn_gate_passes_and_fails_with_exit_codes() {
    let dir = TempDir::new().unwrap();
    let pass = write_config(dir.path(), "p.json", &awgn(json!([{"kind": "awgn_closed_form", "sigmas": 3.0}])));
    let o = run("simulate", &pass, &dir.path().join("p"), &[]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let strict = write_config(dir.path(), "s.json", &awgn(json!([{"kind": "awgn_closed_form", "sigmas": 1e-9}])));
    let out = dir.path().join("s");
    assert_eq!(run("simulate", &strict, &out, &[]).status.code(), Some(4));
    assert!(fs::read_to_string(out.join("simulate.csv")).unwrap().contains("# gates: FAIL"));
    let mut misplaced = awgn(json!([{"kind": "awgn_closed_form", "sigmas": 3.0}]));
    misplaced["fading"] = json!("fast");
    let path = write_config(dir.path(), "m.json", &misplaced);
    assert_eq!(run("simulate", &path, &dir.path().join("m"), &[]).status.code(), Some(2));
}

fn smoke() -> Value {
    json!({
        "mode": "simulate", "rx": 2, "tx": 2, "m": 0.5, "fading": "block", "criterion": "mmse",
        "coding": {"type": "rcpc", "family": family()}, "grid_db": [0, 10], "symbols_per_trial": 120,
        "stop": {"min_errors": 1, "max_trials": 8, "batch": 4}, "seed": 1, "noiseless": true
    })
}

#[test]
fn noiseless_smoke_has_zero_ber() {
    let dir = TempDir::new().unwrap();
    let path = write_config(dir.path(), "smoke.json", &smoke());
    let out = dir.path().join("out");
    assert!(run("simulate", &path, &out, &[]).status.success());
    assert!(column(&out.join("simulate.csv"), "ber").iter().all(|&b| b == 0.0));
}

#[test]
fn repeated_runs_match_apart_from_wall_clock() {
    let dir = TempDir::new().unwrap();
    let mut cfg = smoke();
    cfg["noiseless"] = json!(false);
    cfg["stop"] = json!({"min_errors": 50, "max_trials": 16, "batch": 4});
    let path = write_config(dir.path(), "r.json", &cfg);
    let read = |out: &Path| {
        fs::read_to_string(out.join("simulate.csv"))
            .unwrap()
            .lines()
            .filter(|l| !l.starts_with("# wall_clock_s"))
            .collect::<Vec<_>>()
            .join("\n")
    };
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    assert!(run("simulate", &path, &a, &[]).status.success());
    assert!(run("simulate", &path, &b, &[]).status.success());
    assert_eq!(read(&a), read(&b));
    let c = dir.path().join("c");
    assert!(run("simulate", &path, &c, &["--seed", "99"]).status.success());
    assert!(read(&c).contains("# seed: 99"));
    assert_ne!(read(&a), read(&c));
}

#[test]
fn count_overflow_is_a_numerical_failure() {
    let dir = TempDir::new().unwrap();
    let cfg = json!({"mode": "spectrum", "family": family()});
    let path = write_config(dir.path(), "o.json", &cfg);
    assert_eq!(run("spectrum", &path, &dir.path().join("out"), &["--dmax", "80"]).status.code(), Some(3));
}

#[test]
fn schema_command_prints_json() {
    let o = vblast(&["schema"]);
    assert!(o.status.success());
    let schema: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert!(schema.to_string().contains("awgn_closed_form"));
}

#[test]
fn shipped_spectrum_configs_run() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    for entry in fs::read_dir(dir).unwrap() {
        let path = entry.unwrap().path();
        let v: Value = serde_json::from_str(&fs::read_to_string(&path).unwrap()).unwrap();
        let mode = v["mode"].as_str().unwrap().to_string();
        if mode == "spectrum" {
            let tmp = TempDir::new().unwrap();
            let o = run(&mode, &path, tmp.path(), &["--dmax", "8"]);
            assert!(o.status.success(), "{}: {}", path.display(), String::from_utf8_lossy(&o.stderr));
        }
    }
}
