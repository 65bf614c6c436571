use std::collections::BTreeMap;
use std::fs;
use std::path::Path;
use std::process::Command;

use penny_cli::main_with;
use penny_core::geometry::Point2;
use penny_core::packing::{gen_square_lattice, PennyConfig};
use tempfile::TempDir;

fn run(args: &[&str], out: &Path) -> i32 {
    let mut v = vec!["penny"];
    v.extend_from_slice(args);
    let out = out.to_str().unwrap().to_string();
    v.push("--out");
    v.push(&out);
    main_with(v)
}

fn read_all(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let p = e.unwrap().path();
            (p.file_name().unwrap().to_string_lossy().into_owned(), fs::read(&p).unwrap())
        })
        .collect()
}

fn json(path: &Path) -> serde_json::Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

const SMALL: &[&[&str]] = &[
    &["generate", "--family", "growth", "--size", "300", "--seed", "5"],
    &["validate", "--family", "triangular", "--size", "12"],
    &["build-graph", "--family", "growth", "--size", "200"],
    &["faces", "--size", "8", "--samples", "20"],
    &["verify-lemmas", "--samples", "5000", "--family", "square", "--size", "6"],
    &["metrics", "--size", "41", "--rmax", "12", "--radius", "4", "--pairs", "500"],
    &["solve", "--size", "21", "--radius", "5"],
    &["harnack", "--size", "21", "--radius", "2", "--family", "triangular"],
    &["poincare", "--size", "21", "--radius", "2", "--samples", "500"],
    &["polydim", "--kmax", "4", "--model", "triangular"],
    &["walk", "--size", "81", "--steps", "50", "--trials", "500", "--rmax", "16"],
    &["render", "--size", "5", "--field", "linear", "--faces"],
];

#[test]
fn outputs_are_byte_identical_across_runs_and_workers() {
    let tmp = TempDir::new().unwrap();
    for args in SMALL {
        let a = tmp.path().join(format!("{}-a", args[0]));
        let b = tmp.path().join(format!("{}-b", args[0]));
        let mut with_workers = args.to_vec();
        with_workers.extend_from_slice(&["--workers", "1"]);
        assert_eq!(run(args, &a), 0, "{args:?}");
        assert_eq!(run(&with_workers, &b), 0, "{args:?}");
        let (fa, fb) = (read_all(&a), read_all(&b));
        assert!(!fa.is_empty());
        assert_eq!(fa, fb, "{args:?}");
    }
}

#[test]
fn config_file_merges_and_flags_win() {
    let tmp = TempDir::new().unwrap();
    let cfg = tmp.path().join("c.json");
    fs::write(&cfg, r#"{"subcommand": "polydim", "kmax": 3, "model": "triangular"}"#).unwrap();
    let out = tmp.path().join("o");
    let c = cfg.to_str().unwrap();
    assert_eq!(run(&["polydim", "--config", c], &out), 0);
    assert_eq!(json(&out.join("polydim.json"))["result"]["dims"], serde_json::json!([1, 3, 5, 7]));
    assert_eq!(run(&["polydim", "--config", c, "--kmax", "1"], &out), 0);
    assert_eq!(json(&out.join("polydim.json"))["result"]["dims"], serde_json::json!([1, 3]));
    // guard against running a config meant for another subcommand
    assert_eq!(run(&["harnack", "--config", c], &out), 2);
}

#[test]
fn invalid_configs_exit_2() {
    let tmp = TempDir::new().unwrap();
    let out = tmp.path().join("o");
    let bad = tmp.path().join("bad.json");
    fs::write(&bad, r#"{"kmax": 2, "colour": "red"}"#).unwrap();
    let b = bad.to_str().unwrap();
    for args in [
        vec!["polydim", "--config", b],
        vec!["polydim", "--kmax", "9"],
        vec!["polydim", "--model", "hexagonal"],
        vec!["metrics", "--size", "0"],
        vec!["metrics", "--rmax", "1"],
        vec!["validate", "--tol=0.5"],
        vec!["validate", "--workers", "0"],
        vec!["validate", "--size", "5000"],
        vec!["validate", "--family", "hexagonal"],
        vec!["validate", "--bogus"],
        vec!["metrics", "--size", "11", "--rmax", "40"],
        vec!["walk", "--rmax", "3", "--size", "21"],
        vec!["validate", "--input", "/nonexistent/config.json"],
    ] {
        assert_eq!(run(&args, &out), 2, "{args:?}");
    }
    // nothing computed, so nothing written
    assert!(!out.join("polydim.json").exists());
}

fn perturbed(tmp: &Path) -> String {
    let mut cfg = gen_square_lattice(8, 8).unwrap();
    // push one disk into its right-hand neighbour
    let p = cfg.centers[27];
    cfg.centers[27] = Point2::new(p.x + 0.02, p.y);
    let path = tmp.join("perturbed.json");
    fs::write(&path, cfg.to_json().unwrap()).unwrap();
    path.to_str().unwrap().to_string()
}

#[test]
fn perturbed_tangency_flips_validate_and_verify_lemmas() {
    let tmp = TempDir::new().unwrap();
    let input = perturbed(tmp.path());
    let out = tmp.path().join("v");
    assert_eq!(run(&["validate", "--input", &input], &out), 1);
    let v = json(&out.join("violations.json"));
    assert_eq!(v["violations"][0]["what"], "overlap");
    assert_eq!(json(&out.join("validation.json"))["ok"], false);

    let out = tmp.path().join("l");
    assert_eq!(run(&["verify-lemmas", "--samples", "1000", "--input", &input], &out), 1);
    let v = json(&out.join("violations.json"));
    assert_eq!(v["violations"][0]["suite"], "configuration");
    let lem = json(&out.join("lemmas.json"));
    assert_eq!(lem["suite"]["intersections"], 0);
    assert!(lem["configuration"]["overlaps"].as_u64().unwrap() >= 1);

    // the unperturbed configuration passes both, and a stale violation file is removed
    let clean = tmp.path().join("clean.json");
    fs::write(&clean, gen_square_lattice(8, 8).unwrap().to_json().unwrap()).unwrap();
    let c = clean.to_str().unwrap();
    assert_eq!(run(&["verify-lemmas", "--samples", "1000", "--input", c], &out), 0);
    assert!(!out.join("violations.json").exists());
    assert_eq!(run(&["validate", "--input", c], &out), 0);
}

#[test]
fn metrics_csv_matches_closed_form() {
    let tmp = TempDir::new().unwrap();
    let out = tmp.path().join("m");
    assert_eq!(run(&["metrics", "--size", "201", "--rmax", "40", "--pairs", "200"], &out), 0);
    let csv = fs::read_to_string(out.join("volume.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("R,ball_size,doubling_ratio"));
    let rows: Vec<(u64, u64)> = lines
        .map(|l| {
            let f: Vec<&str> = l.split(',').collect();
            (f[0].parse().unwrap(), f[1].parse().unwrap())
        })
        .collect();
    assert_eq!(rows.len(), 41);
    for (r, size) in rows {
        assert_eq!(size, 2 * r * r + 2 * r + 1);
    }
}

#[test]
fn polydim_reports_square_dims() {
    let tmp = TempDir::new().unwrap();
    let out = tmp.path().join("p");
    assert_eq!(run(&["polydim", "--model", "z2", "--kmax", "6"], &out), 0);
    let doc = json(&out.join("polydim.json"));
    assert_eq!(doc["result"]["dims"], serde_json::json!([1, 3, 5, 7, 9, 11, 13]));
    let basis = json(&out.join("basis.json"));
    assert_eq!(basis["degrees"][6]["basis"].as_array().unwrap().len(), 13);
}

#[test]
fn render_emits_one_circle_per_disk() {
    let tmp = TempDir::new().unwrap();
    let input = tmp.path().join("one.json");
    fs::write(&input, PennyConfig::new(vec![Point2::new(0.0, 0.0)], "one").to_json().unwrap()).unwrap();
    let out = tmp.path().join("r");
    assert_eq!(run(&["render", "--input", input.to_str().unwrap()], &out), 0);
    let svg = fs::read_to_string(out.join("scene.svg")).unwrap();
    assert_eq!((svg.matches("<circle ").count(), svg.matches("<line ").count()), (1, 0));
    assert_eq!(run(&["render", "--size", "3"], &out), 0);
    let svg = fs::read_to_string(out.join("scene.svg")).unwrap();
    assert_eq!((svg.matches("<circle ").count(), svg.matches("<line ").count()), (9, 12));
}

#[test]
fn binary_exit_codes() {
    let tmp = TempDir::new().unwrap();
    let bin = env!("CARGO_BIN_EXE_penny");
    let code = |args: &[&str]| Command::new(bin).args(args).status().unwrap().code().unwrap();
    let out = tmp.path().join("b");
    let o = out.to_str().unwrap();
    assert_eq!(code(&["polydim", "--kmax", "2", "--out", o]), 0);
    assert_eq!(code(&["polydim", "--kmax", "99", "--out", o]), 2);
    let input = perturbed(tmp.path());
    assert_eq!(code(&["validate", "--input", &input, "--out", o]), 1);
    assert_eq!(code(&["--help"]), 0);
}
