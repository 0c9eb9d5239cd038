use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::{json, Value};
use tempfile::TempDir;

use twistor_core::discriminant::{discriminant_locus_polys, x_vars};
use twistor_core::poly::{parse_gauss_poly, MultiPoly};
use twistor_core::presets;

fn twistor(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_twistor")).args(args).output().expect("binary runs")
}

fn ok(args: &[&str]) -> String {
    let out = twistor(args);
    assert!(out.status.success(), "{args:?} failed:\n{}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn path(dir: &Path, name: &str) -> String {
    dir.join(name).to_str().unwrap().to_string()
}

fn read_json(p: impl AsRef<Path>) -> Value {
    serde_json::from_str(&fs::read_to_string(p).unwrap()).unwrap()
}

#[test]
fn discriminant_round_trips_exactly() {
    let dir = TempDir::new().unwrap();
    let out = path(dir.path(), "d");
    let stdout = ok(&["discriminant", "--surface", "preset:transformed-fermat", "--out", &out]);
    assert!(stdout.contains("P: degree 8, 97 terms") && stdout.contains("Q: degree 8, 73 terms"), "{stdout}");
    let fresh = discriminant_locus_polys(&presets::transformed_fermat()).unwrap();
    let p = MultiPoly::<num_bigint::BigInt>::from_json(&fs::read_to_string(dir.path().join("d/P.json")).unwrap()).unwrap();
    let q = MultiPoly::<num_bigint::BigInt>::from_json(&fs::read_to_string(dir.path().join("d/Q.json")).unwrap()).unwrap();
    assert_eq!((p, q), (fresh.p, fresh.q));
    assert_eq!(read_json(dir.path().join("d/manifest.json"))["command"], "discriminant");
}

#[test]
fn degenerate_and_malformed_surfaces() {
    let dir = TempDir::new().unwrap();
    let stdout = ok(&["discriminant", "--surface", "z3^3", "--out", &path(dir.path(), "z")]);
    assert!(stdout.contains("P: zero polynomial"), "{stdout}");
    for bad in ["z1^3 + (", "z1^2*z2^2", "preset:nope", "x1^3"] {
        let out = twistor(&["discriminant", "--surface", bad, "--out", &path(dir.path(), "bad")]);
        assert!(!out.status.success(), "{bad} accepted");
        assert!(String::from_utf8_lossy(&out.stderr).starts_with("error:"), "{bad}");
    }
}

#[test]
fn surface_from_file() {
    let dir = TempDir::new().unwrap();
    let f = path(dir.path(), "fermat.txt");
    fs::write(&f, presets::FERMAT).unwrap();
    let json_file = path(dir.path(), "fermat.json");
    fs::write(&json_file, presets::fermat().poly().to_json()).unwrap();
    for src in [f, json_file] {
        let out = path(dir.path(), "fib.json");
        ok(&["fibers", "--surface", &src, "--out", &out]);
        assert_eq!(read_json(&out)["certified"], 3);
    }
}

#[test]
fn fiber_counts() {
    let dir = TempDir::new().unwrap();
    for (preset, n) in [("transformed-fermat", 5), ("fermat", 3), ("generic", 0)] {
        let out = path(dir.path(), &format!("{preset}.json"));
        ok(&["fibers", "--surface", &format!("preset:{preset}"), "--out", &out]);
        let doc = read_json(&out);
        assert_eq!(doc["certified"], n, "{preset}");
        assert_eq!(doc["images_coplanar_or_cospherical"], true);
        assert!(doc["fibers"].as_array().unwrap().len() >= n);
    }
}

#[test]
fn slice_outside_support_is_empty() {
    let dir = TempDir::new().unwrap();
    let json_out = path(dir.path(), "e.json");
    let csv_out = path(dir.path(), "e.csv");
    ok(&["slice", "--t", "10", "--chart", "standard", "--out", &json_out]);
    ok(&["slice", "--t", "10", "--chart", "standard", "--format", "csv", "--out", &csv_out]);
    assert_eq!(read_json(&json_out), json!([]));
    assert_eq!(fs::read_to_string(&csv_out).unwrap(), "t,curve_id,x1,x2,x3\n");
}

#[test]
fn slices_are_reproducible() {
    let dir = TempDir::new().unwrap();
    let d = path(dir.path(), "d");
    ok(&["discriminant", "--out", &d]);
    let a = path(dir.path(), "a.csv");
    let b = path(dir.path(), "b.csv");
    ok(&["slice", "--t", "-0.05", "--format", "csv", "--out", &a]);
    ok(&["slice", "--t", "-0.05", "--format", "csv", "--polys", &d, "--out", &b]);
    assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());

    let csv = fs::read_to_string(&a).unwrap();
    let ids: std::collections::BTreeSet<&str> = csv.lines().skip(1).map(|l| l.split(',').nth(1).unwrap()).collect();
    assert_eq!(ids.len(), 18);

    // the same slice through a manifest
    let m = path(dir.path(), "m.json");
    let c = path(dir.path(), "c.csv");
    let manifest = json!({ "command": "slice", "out": c, "args": ["--t", "-0.05", "--format", "csv"] });
    fs::write(&m, manifest.to_string()).unwrap();
    ok(&["run", &m]);
    assert_eq!(fs::read(&a).unwrap(), fs::read(&c).unwrap());
}

#[test]
fn sweep_frames_and_pictures() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("sw");
    ok(&["sweep", "--t0", "0", "--t1", "0.1", "--frames", "8", "--out", out.to_str().unwrap()]);
    let index = read_json(out.join("sweep.json"));
    let frames = index.as_array().unwrap();
    assert_eq!(frames.len(), 8);
    assert_eq!(frames[7]["t"], 0.1);
    // the loops are gone by the end of the range
    assert_eq!(frames[1]["standard_loops"], 12);
    assert_eq!(frames[7]["standard_loops"], 0);
    for k in 0..8 {
        for view in ["above", "side"] {
            let svg = fs::read_to_string(out.join(format!("frame_{k:03}_{view}.svg"))).unwrap();
            assert!(svg.contains(r#"viewBox="-2.2 -2.2 4.4 4.4""#));
        }
    }

    // rerunning the written manifest reproduces every file
    let manifest = read_json(out.join("manifest.json"));
    assert_eq!(manifest["command"], "sweep");
    let first: Vec<(String, Vec<u8>)> = listing(&out);
    ok(&["run", out.join("manifest.json").to_str().unwrap()]);
    assert_eq!(first, listing(&out));
}

fn listing(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut v: Vec<_> = fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .map(|p| (p.file_name().unwrap().to_str().unwrap().to_string(), fs::read(&p).unwrap()))
        .collect();
    v.sort();
    v
}

#[test]
fn render_slice_files() {
    let dir = TempDir::new().unwrap();
    let s = path(dir.path(), "s.json");
    ok(&["slice", "--t", "0.05", "--out", &s]);
    let out = dir.path().join("pics");
    ok(&["render", &s, "--out", out.to_str().unwrap()]);
    let svg = fs::read_to_string(out.join("s_above.svg")).unwrap();
    assert_eq!(svg.matches("<path").count(), read_json(&s).as_array().unwrap().len());
    assert!(out.join("s_side.svg").exists());

    let not_a_slice = path(dir.path(), "x.json");
    fs::write(&not_a_slice, "{}").unwrap();
    assert!(!twistor(&["render", &not_a_slice, "--out", out.to_str().unwrap()]).status.success());
}

#[test]
fn topology_of_a_shrinking_circle() {
    // x1^2 + x2^2 = 0.1 - t, x3 = 0: a disc capped off at t = 0.1, closed up through infinity
    let dir = TempDir::new().unwrap();
    let polys = dir.path().join("circle");
    fs::create_dir_all(&polys).unwrap();
    let v = x_vars();
    for (name, src) in [("P.json", "10*x1^2 + 10*x2^2 + 10*x4 - 1"), ("Q.json", "x3")] {
        let p = parse_gauss_poly(src, &v).unwrap().to_int().unwrap();
        fs::write(polys.join(name), p.to_json()).unwrap();
    }
    let out = dir.path().join("topo");
    let config = path(dir.path(), "config.json");
    fs::write(&config, json!({ "topology": { "vertex_reach": 0.05 } }).to_string()).unwrap();
    let stdout = ok(&[
        "topology",
        "--polys",
        polys.to_str().unwrap(),
        "--frames",
        "31",
        "--config",
        &config,
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(stdout.starts_with("Euler characteristic 2 ="), "{stdout}");
    let rep = read_json(out.join("topology.json"));
    assert_eq!(rep["chi"], 2);
    assert_eq!(rep["deaths"], 1);
    assert_eq!(fs::read_to_string(out.join("summary.txt")).unwrap(), stdout);
    assert_eq!(read_json(out.join("manifest.json"))["config"]["topology"]["vertex_reach"], 0.05);
}

#[test]
fn bad_config_is_rejected() {
    let dir = TempDir::new().unwrap();
    let config = path(dir.path(), "config.json");
    for bad in [json!({ "trace": { "grdi": 3 } }), json!({ "tracer": {} }), json!([1])] {
        fs::write(&config, bad.to_string()).unwrap();
        let out = twistor(&["slice", "--t", "0.05", "--config", &config]);
        assert!(!out.status.success(), "{bad}");
    }
}

#[test]
fn verify_reports_as_json() {
    let dir = TempDir::new().unwrap();
    let out = path(dir.path(), "v.json");
    ok(&["verify", "--only", "3,5", "--out", &out]);
    let doc = read_json(&out);
    assert_eq!(doc["passed"], true);
    let crits: Vec<u64> = doc["checks"].as_array().unwrap().iter().map(|c| c["criterion"].as_u64().unwrap()).collect();
    assert_eq!(crits, vec![3, 5]);
}

#[test]
fn verify_catches_corrupted_polynomials() {
    let dir = TempDir::new().unwrap();
    let d = dir.path().join("d");
    ok(&["discriminant", "--out", d.to_str().unwrap()]);
    ok(&["verify", "--only", "5", "--polys", d.to_str().unwrap()]);

    let p = d.join("P.json");
    let good = fs::read_to_string(&p).unwrap();
    let changed = good.replacen("\"coeff\": \"", "\"coeff\": \"1", 1);
    for corrupt in [changed, good[..good.len() / 2].to_string()] {
        fs::write(&p, corrupt).unwrap();
        let out = twistor(&["verify", "--only", "5", "--polys", d.to_str().unwrap()]);
        assert_eq!(out.status.code(), Some(2));
        let doc: Value = serde_json::from_slice(&out.stdout).unwrap();
        assert_eq!(doc["passed"], false);
        assert_eq!(doc["checks"][0]["criterion"], 0);
        assert!(doc["checks"][0]["details"].to_string().contains("serialization-integrity error"), "{doc}");
    }
}

#[test]
fn tightened_tolerances_fail_per_check() {
    let dir = TempDir::new().unwrap();
    let config = path(dir.path(), "config.json");
    let tight = json!({ "suite": { "tolerances": { "oracle_rel": 1e-10 * 1e-8, "symmetry_residual": 1e-8 * 1e-2 } } });
    fs::write(&config, tight.to_string()).unwrap();
    let out = twistor(&["verify", "--only", "4,5", "--config", &config]);
    assert_eq!(out.status.code(), Some(2));
    let doc: Value = serde_json::from_slice(&out.stdout).unwrap();
    let checks = doc["checks"].as_array().unwrap();
    assert_eq!(checks.len(), 2);
    assert_eq!(checks[1]["passed"], false);
    assert!(String::from_utf8_lossy(&out.stderr).contains("[FAIL] criterion 5"));
}

#[test]
fn only_the_flagship_drops_below_degree_twelve() {
    let dir = TempDir::new().unwrap();
    let stdout = ok(&["discriminant", "--surface", "preset:generic", "--out", &path(dir.path(), "g")]);
    assert!(stdout.contains("P: degree 12"), "{stdout}");
    let stdout = ok(&["discriminant", "--surface", "preset:fermat", "--out", &path(dir.path(), "f")]);
    assert!(stdout.contains("P: degree 12"), "{stdout}");
}
