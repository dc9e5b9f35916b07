use std::path::PathBuf;
use std::process::{Command, Output};

fn rbsde(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_rbsde")).args(args).output().expect("binary runs")
}

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("rbsde-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir.join(name)
}

fn summary(out: &Output) -> serde_json::Value {
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

#[test]
fn selftest_passes() {
    let out = rbsde(&["selftest"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stdout));
    assert_eq!(summary(&out)["passed"], true);
}

#[test]
fn driver_output_is_reproducible() {
    let args = ["-s", "driver.kind=fbm", "-s", "driver.q=1.5", "-s", "driver.n=64", "-s", "driver.seed=11"];
    let (a, b) = (scratch("fbm_a.csv"), scratch("fbm_b.csv"));
    for path in [&a, &b] {
        let mut full = vec!["driver"];
        full.extend(args);
        full.extend(["-o", path.to_str().unwrap()]);
        assert_eq!(rbsde(&full).status.code(), Some(0));
    }
    let (x, y) = (std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    assert!(!x.is_empty());
    assert_eq!(x, y);
}

#[test]
fn solve_reports_a_small_residual() {
    let nodes = scratch("nodes.csv");
    let out = rbsde(&[
        "solve", "-s", "g=constant:0.5", "-s", "f=linear:-0.5", "-s", "driver.kind=step", "-s", "driver.jumps=0.4:1.0",
        "-s", "steps=200", "-o", nodes.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    let s = summary(&out);
    assert!(s["residual"].as_f64().unwrap() <= 1e-6);
    // Constant field, linear generator, explicit first-order time stepping:
    // Y_0 = e^{-1/2} + 0.5 e^{-0.4/2} up to O(1/steps).
    let y0 = s["y0"][0].as_f64().unwrap();
    assert!((y0 - (-0.5f64).exp() - 0.5 * (-0.2f64).exp()).abs() <= 1e-3, "{y0}");
    assert!(std::fs::read_to_string(&nodes).unwrap().lines().count() > 2);
}

#[test]
fn young_identity_on_jump_paths() {
    let (x, y) = (scratch("young_x.csv"), scratch("young_y.csv"));
    for (path, jumps) in [(&x, "0.3:0.5,0.7:-0.2"), (&y, "0.5:1.0,0.7:2.0")] {
        let out = rbsde(&["driver", "-s", "driver.kind=step", "-s", &format!("driver.jumps={jumps}"), "-o", path.to_str().unwrap()]);
        assert_eq!(out.status.code(), Some(0));
    }
    let out = rbsde(&["young", "-s", &format!("x.file={}", x.display()), "-s", &format!("y.file={}", y.display()), "-s", "p=1", "-s", "q=1"]);
    assert_eq!(out.status.code(), Some(0));
    let s = summary(&out);
    assert_eq!(s["identity_asserted"], true);
    assert!(s["identity_gap"].as_f64().unwrap() <= 1e-12);
}

#[test]
fn metric_of_step_against_its_ramp() {
    let x = scratch("metric_x.csv");
    let out = rbsde(&["driver", "-s", "driver.kind=step", "-s", "driver.jumps=0.5:1.0", "-o", x.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let file = format!("{}", x.display());
    let out = rbsde(&[
        "metric", "-s", &format!("a.file={file}"), "-s", &format!("b.file={file}"), "-s", "b.embed=jmath",
        "-s", "b.samples=2", "-s", "brute=true", "-s", "delta_schedule=0.1,0.05",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let s = summary(&out);
    let (value, brute) = (s["value"].as_f64().unwrap(), s["brute"].as_f64().unwrap());
    assert!(value.is_finite() && value >= brute - 1e-12);
}

#[test]
fn bdsde_aggregates_are_consistent() {
    let samples = scratch("bdsde.csv");
    let out = rbsde(&[
        "bdsde", "-s", "driver.kind=compound-poisson", "-s", "driver.n=16", "-s", "n_outer=8", "-s", "steps=10",
        "-s", "g=constant:0.3", "-o", samples.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    let s = summary(&out);
    assert_eq!(s["aggregates_recomputed"], true);
    assert_eq!(s["quenched_consistent"], true);
    assert_eq!(std::fs::read_to_string(&samples).unwrap().lines().count(), 2 + 8);
}

#[test]
fn config_file_and_overrides() {
    let cfg = scratch("solve.cfg");
    std::fs::write(&cfg, "# solve\nf = linear:-0.5\ndriver.kind = step\ndriver.jumps = 0.4:1.0\nsteps = 200\n").unwrap();
    let out = rbsde(&["solve", "-c", cfg.to_str().unwrap(), "-s", "g=zero"]);
    assert_eq!(out.status.code(), Some(0));
    let y0 = summary(&out)["y0"][0].as_f64().unwrap();
    assert!((y0 - (-0.5f64).exp()).abs() <= 1e-3, "{y0}");
}

#[test]
fn bad_input_exits_with_two() {
    assert_eq!(rbsde(&["solve", "-s", "steps=abc"]).status.code(), Some(2));
    assert_eq!(rbsde(&["solve", "-s", "novalue"]).status.code(), Some(2));
    assert_eq!(rbsde(&["driver", "-s", "driver.kind=unknown"]).status.code(), Some(2));
    assert_eq!(rbsde(&["young", "-s", "x.file=/nonexistent.csv", "-s", "y.file=/nonexistent.csv"]).status.code(), Some(2));
}

#[test]
fn failed_property_exits_with_one() {
    let out = rbsde(&["solve", "-s", "driver.kind=step", "-s", "driver.jumps=0.4:1.0", "-s", "steps=20", "-s", "assert.residual=-1"]);
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(summary(&out)["passed"], false);
}
