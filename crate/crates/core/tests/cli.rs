mod common;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;

use nalgebra::DVector;
use num_complex::Complex64;
use serde_json::json;
use tomo_rbpg::cli::{self, manifest, GlobalOptions, RunManifest, SolveArgs, Stack};
use tomo_rbpg::model::steering_vector;
use tomo_rbpg::simulate;
use tomo_rbpg::slimmer::PixelOutcome;

fn geometry_json(n: usize) -> serde_json::Value {
    serde_json::to_value(simulate::random_geometry(common::GEOMETRY_SEED, n).unwrap()).unwrap()
}

fn write(dir: &Path, name: &str, value: &serde_json::Value) -> PathBuf {
    let path = dir.join(name);
    fs::write(&path, serde_json::to_string_pretty(value).unwrap()).unwrap();
    path
}

fn scenario(n: usize, pixels: usize, noise: Option<f64>) -> serde_json::Value {
    let mut s = json!({
        "geometry": geometry_json(n),
        "scatterers": [{"elevation": 5.0, "amplitude": 1.0, "phase": 0.4}],
        "snr_db": [10.0],
        "realizations": pixels,
        "seed": 9
    });
    if let Some(v) = noise {
        s["noise_variance"] = json!(v);
    }
    s
}

fn grid_json(n: usize) -> serde_json::Value {
    let geometry = simulate::random_geometry(common::GEOMETRY_SEED, n).unwrap();
    serde_json::to_value(simulate::elevation_grid(&geometry, 81).unwrap()).unwrap()
}

fn opts(workers: usize) -> GlobalOptions {
    GlobalOptions { workers: Some(workers), ..GlobalOptions::default() }
}

fn tomo(args: &[&str]) -> (i32, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_tomo")).args(args).output().unwrap();
    (out.status.code().unwrap_or(-1), String::from_utf8_lossy(&out.stderr).into_owned())
}

#[test]
fn noiseless_pixel_is_the_rounded_steering_sum() {
    let dir = tempfile::tempdir().unwrap();
    let sc = write(dir.path(), "scenario.json", &scenario(29, 1, Some(0.0)));
    let out = dir.path().join("stack.tstk");
    cli::cmd_simulate(&sc, &out, &opts(1)).unwrap();
    let stack = Stack::read(&out).unwrap();
    let geometry = simulate::random_geometry(common::GEOMETRY_SEED, 29).unwrap();
    let analytic = steering_vector(&geometry, &[], 5.0, &[]).unwrap() * Complex64::from_polar(1.0, 0.4);
    for (got, want) in stack.pixels[0].iter().zip(analytic.iter()) {
        assert_eq!(got.re, (want.re as f32) as f64);
        assert_eq!(got.im, (want.im as f32) as f64);
    }
    assert!(manifest::manifest_path(&out).exists());
}

#[test]
fn thousand_pixel_stack_has_the_expected_payload_and_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let sc = write(dir.path(), "scenario.json", &scenario(29, 1000, None));
    let a = dir.path().join("a.tstk");
    let b = dir.path().join("b.tstk");
    cli::cmd_simulate(&sc, &a, &opts(1)).unwrap();
    cli::cmd_simulate(&sc, &b, &opts(4)).unwrap();
    let bytes = fs::read(&a).unwrap();
    let header_len = bytes.iter().position(|&c| c == b'\n').unwrap() + 1;
    assert_eq!(bytes.len() - header_len, 232_000);
    assert_eq!(bytes, fs::read(&b).unwrap());
    let m = RunManifest::load(manifest::manifest_path(&a)).unwrap();
    assert_eq!(m.command, "simulate");
    assert_eq!(m.seed, 9);
    m.verify_inputs().unwrap();
}

#[test]
fn seed_flag_overrides_the_scenario_seed() {
    let dir = tempfile::tempdir().unwrap();
    let sc = write(dir.path(), "scenario.json", &scenario(29, 3, None));
    let a = dir.path().join("a.tstk");
    let b = dir.path().join("b.tstk");
    cli::cmd_simulate(&sc, &a, &opts(1)).unwrap();
    cli::cmd_simulate(&sc, &b, &GlobalOptions { seed: Some(10), ..opts(1) }).unwrap();
    assert_ne!(fs::read(&a).unwrap(), fs::read(&b).unwrap());
}

#[test]
fn solve_output_is_independent_of_worker_count() {
    let dir = tempfile::tempdir().unwrap();
    let sc = write(dir.path(), "scenario.json", &scenario(29, 24, None));
    let geom = write(dir.path(), "geometry.json", &geometry_json(29));
    let grid = write(dir.path(), "grid.json", &grid_json(29));
    let stack = dir.path().join("stack.tstk");
    cli::cmd_simulate(&sc, &stack, &opts(1)).unwrap();
    let mut outputs = Vec::new();
    for workers in [1, 8] {
        let args = SolveArgs {
            stack: stack.clone(),
            geometry: geom.clone(),
            grid: grid.clone(),
            out: dir.path().join(format!("est{workers}.jsonl")),
            csv: Some(dir.path().join(format!("pts{workers}.csv"))),
        };
        let records = cli::cmd_solve(&args, &opts(workers)).unwrap();
        assert_eq!(records.len(), 24);
        assert!(records.iter().enumerate().all(|(i, r)| r.pixel_id == i as u64));
        outputs.push((fs::read(&args.out).unwrap(), fs::read(args.csv.as_ref().unwrap()).unwrap()));
        assert!(manifest::manifest_path(&args.out).exists());
        assert!(manifest::manifest_path(args.csv.as_ref().unwrap()).exists());
    }
    assert_eq!(outputs[0], outputs[1]);
    let csv = String::from_utf8(outputs[0].1.clone()).unwrap();
    assert!(csv.starts_with("pixel_id,k,elevation_m,p1,p2,amp_re,amp_im\n"));
}

#[test]
fn single_scatterer_stack_mostly_yields_one_scatterer() {
    let dir = tempfile::tempdir().unwrap();
    let sc = write(dir.path(), "scenario.json", &scenario(29, 100, None));
    let geom = write(dir.path(), "geometry.json", &geometry_json(29));
    let grid = write(dir.path(), "grid.json", &grid_json(29));
    let stack = dir.path().join("stack.tstk");
    cli::cmd_simulate(&sc, &stack, &opts(1)).unwrap();
    let args = SolveArgs { stack, geometry: geom, grid, out: dir.path().join("est.jsonl"), csv: None };
    let records = cli::cmd_solve(&args, &opts(1)).unwrap();
    let ones = records.iter().filter(|r| matches!(&r.outcome, PixelOutcome::Ok(e) if e.model_order == 1)).count();
    assert!(ones >= 85, "K=1 on {ones}/100 pixels");
}

#[test]
fn failing_pixels_are_recorded_and_the_run_continues() {
    let dir = tempfile::tempdir().unwrap();
    let geometry = simulate::random_geometry(common::GEOMETRY_SEED, 29).unwrap();
    let good = steering_vector(&geometry, &[], 0.0, &[]).unwrap();
    let bad = DVector::from_element(29, Complex64::new(f64::NAN, 0.0));
    let stack = Stack::new(vec![good.clone(), bad, good], 29, Some(geometry)).unwrap();
    let path = dir.path().join("stack.tstk");
    stack.write(&path).unwrap();
    let args = SolveArgs {
        stack: path,
        geometry: write(dir.path(), "geometry.json", &geometry_json(29)),
        grid: write(dir.path(), "grid.json", &grid_json(29)),
        out: dir.path().join("est.jsonl"),
        csv: None,
    };
    let records = cli::cmd_solve(&args, &opts(2)).unwrap();
    assert!(matches!(records[0].outcome, PixelOutcome::Ok(_)));
    assert!(matches!(records[1].outcome, PixelOutcome::Failed { .. }));
    assert!(matches!(records[2].outcome, PixelOutcome::Ok(_)));
    let text = fs::read_to_string(&args.out).unwrap();
    assert_eq!(text.lines().count(), 3);
    assert!(text.lines().nth(1).unwrap().contains("\"status\":\"failed\""));
}

#[test]
fn empty_stack_gives_empty_output_and_exit_zero() {
    let dir = tempfile::tempdir().unwrap();
    let stack = dir.path().join("empty.tstk");
    Stack::new(Vec::new(), 29, None).unwrap().write(&stack).unwrap();
    let geom = write(dir.path(), "geometry.json", &geometry_json(29));
    let grid = write(dir.path(), "grid.json", &grid_json(29));
    let out = dir.path().join("est.jsonl");
    let (code, err) = tomo(&[
        "solve",
        stack.to_str().unwrap(),
        "--geometry",
        geom.to_str().unwrap(),
        "--grid",
        grid.to_str().unwrap(),
        "-o",
        out.to_str().unwrap(),
    ]);
    assert_eq!(code, 0, "{err}");
    assert_eq!(fs::read(&out).unwrap().len(), 0);
}

#[test]
fn malformed_json_exits_2_with_position() {
    let dir = tempfile::tempdir().unwrap();
    let sc = dir.path().join("bad.json");
    fs::write(&sc, "{\n  \"geometry\": {,\n}").unwrap();
    let out = dir.path().join("stack.tstk");
    let (code, err) = tomo(&["simulate", sc.to_str().unwrap(), "-o", out.to_str().unwrap()]);
    assert_eq!(code, 2);
    assert!(err.contains("line 2") && err.contains("column"), "{err}");
}

#[test]
fn sample_count_mismatch_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let sc = write(dir.path(), "scenario.json", &scenario(29, 2, None));
    let stack = dir.path().join("stack.tstk");
    cli::cmd_simulate(&sc, &stack, &opts(1)).unwrap();
    let geom = write(dir.path(), "geometry.json", &geometry_json(25));
    let grid = write(dir.path(), "grid.json", &grid_json(25));
    let out = dir.path().join("est.jsonl");
    let (code, err) = tomo(&[
        "solve",
        stack.to_str().unwrap(),
        "--geometry",
        geom.to_str().unwrap(),
        "--grid",
        grid.to_str().unwrap(),
        "-o",
        out.to_str().unwrap(),
    ]);
    assert_eq!(code, 3, "{err}");
}

#[test]
fn wrong_magic_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let stack = dir.path().join("stack.tstk");
    fs::write(&stack, b"{\"magic\":\"XXXX\"}\n").unwrap();
    let geom = write(dir.path(), "geometry.json", &geometry_json(29));
    let grid = write(dir.path(), "grid.json", &grid_json(29));
    let out = dir.path().join("est.jsonl");
    let (code, _) = tomo(&[
        "solve",
        stack.to_str().unwrap(),
        "--geometry",
        geom.to_str().unwrap(),
        "--grid",
        grid.to_str().unwrap(),
        "-o",
        out.to_str().unwrap(),
    ]);
    assert_eq!(code, 2);
}

#[test]
fn montecarlo_writes_one_row_per_cell_and_repeats_exactly() {
    let dir = tempfile::tempdir().unwrap();
    let config = json!({
        "geometry": geometry_json(29),
        "grid": grid_json(29),
        "kappas": [0.8, 1.2],
        "snrs_db": [10.0],
        "methods": ["svd_wiener", "fista"],
        "realizations": 100,
        "seed": 3
    });
    let cfg = write(dir.path(), "mc.json", &config);
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    for (out, workers) in [(&a, "1"), (&b, "3")] {
        let (code, err) = tomo(&["montecarlo", "--config", cfg.to_str().unwrap(), "--workers", workers, "-o", out.to_str().unwrap()]);
        assert_eq!(code, 0, "{err}");
    }
    let text = fs::read_to_string(&a).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "kappa,snr_db,method,p_d,ci_low,ci_high,n");
    assert_eq!(lines.len(), 5);
    assert_eq!(text, fs::read_to_string(&b).unwrap());
    assert!(manifest::manifest_path(&a).exists());
}

#[test]
fn montecarlo_without_config_is_an_input_error() {
    let dir = tempfile::tempdir().unwrap();
    let (code, _) = tomo(&["montecarlo", "-o", dir.path().join("x.csv").to_str().unwrap()]);
    assert_eq!(code, 2);
}

#[test]
fn bench_report_is_well_formed() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "bench.json", &json!({"sizes_n": [16], "sizes_l": [4, 8], "repetitions": 5}));
    let out = dir.path().join("bench.json.out");
    let (code, err) = tomo(&["bench", "--config", cfg.to_str().unwrap(), "-o", out.to_str().unwrap()]);
    assert_eq!(code, 0, "{err}");
    let report: cli::BenchReport = serde_json::from_str(&fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(report.entries.len(), 6);
    assert!(report.entries.iter().all(|e| e.converged == 5));
    assert_eq!(report.scaling.len(), 3);
}
