use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn world(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../worlds").join(name)
}

fn navflow(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_navflow"))
        .args(args)
        .env_remove("NAVFLOW_SEED")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn simulate_new_flow_reaches_target_and_writes_files() {
    let dir = tempfile::tempdir().unwrap();
    let w = world("spheres.json");
    let o = navflow(&[
        "simulate",
        w.to_str().unwrap(),
        "--flow",
        "new",
        "--k",
        "15",
        "--start",
        "12,3",
        "--out",
        dir.path().to_str().unwrap(),
        "--svg",
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stdout(&o).starts_with("status=success"), "{}", stdout(&o));

    let csv = std::fs::read_to_string(dir.path().join("trajectory.csv")).unwrap();
    assert_eq!(csv.lines().next().unwrap(), "step,x_0,x_1,V,phi_k,grad_norm");
    let sidecar: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("trajectory.json")).unwrap()).unwrap();
    assert_eq!(sidecar["status"], "success");
    let svg = std::fs::read_to_string(dir.path().join("trajectory.svg")).unwrap();
    assert!(svg.starts_with("<svg"));
    assert!(!svg.contains("#d22"), "successful runs carry no failure marker");
}

#[test]
fn nav_flow_behind_flat_obstacle_fails_with_red_marker() {
    let dir = tempfile::tempdir().unwrap();
    let w = world("flat_plate.json");
    let o = navflow(&[
        "simulate",
        w.to_str().unwrap(),
        "--flow",
        "nav",
        "--k",
        "15",
        "--start",
        "9,0.5",
        "--max-steps",
        "5000",
        "--out",
        dir.path().to_str().unwrap(),
        "--svg",
        "--quiver",
        "0",
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let out = stdout(&o);
    assert!(out.starts_with("status=local_minimum"), "{out}");
    let svg = std::fs::read_to_string(dir.path().join("trajectory.svg")).unwrap();
    assert!(svg.contains("#d22"));
}

#[test]
fn plot_rebuilds_the_simulation_svg_from_its_files() {
    let dir = tempfile::tempdir().unwrap();
    let w = world("eight_obstacles_reconstruction.json");
    let o = navflow(&[
        "simulate",
        w.to_str().unwrap(),
        "--flow",
        "old",
        "--k",
        "15",
        "--start",
        "8,8",
        "--out",
        dir.path().to_str().unwrap(),
        "--svg",
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let original = std::fs::read_to_string(dir.path().join("trajectory.svg")).unwrap();
    std::fs::remove_file(dir.path().join("trajectory.svg")).unwrap();

    let csv = dir.path().join("trajectory.csv");
    let o = navflow(&["plot", w.to_str().unwrap(), csv.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(std::fs::read_to_string(dir.path().join("trajectory.svg")).unwrap(), original);

    let bare = dir.path().join("bare.svg");
    std::fs::remove_file(dir.path().join("trajectory.json")).unwrap();
    let o = navflow(&["plot", w.to_str().unwrap(), csv.to_str().unwrap(), "--out", bare.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(std::fs::read_to_string(bare).unwrap().starts_with("<svg"));
}

#[test]
fn switched_run_writes_discovery_log() {
    let dir = tempfile::tempdir().unwrap();
    let w = world("spheres.json");
    let o = navflow(&[
        "simulate",
        w.to_str().unwrap(),
        "--flow",
        "switched",
        "--k",
        "10",
        "--sensor-range",
        "2",
        "--eta",
        "0.005",
        "--start",
        "12,3",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stdout(&o).starts_with("status=success"), "{}", stdout(&o));
    let log = std::fs::read_to_string(dir.path().join("trajectory_discovery.csv")).unwrap();
    assert_eq!(log.lines().next().unwrap(), "step,obstacle_index");
}

#[test]
fn switched_run_rejects_a_step_that_can_skip_a_neighborhood() {
    let w = world("spheres.json");
    let o = navflow(&["simulate", w.to_str().unwrap(), "--flow", "switched", "--sensor-range", "0.01"]);
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
}

#[test]
fn missing_world_file_fails() {
    let o = navflow(&["simulate", "/nonexistent/world.json"]);
    assert!(!o.status.success());
    assert_eq!(o.status.code(), Some(3));
    assert!(stderr(&o).contains("world.json"));
}

#[test]
fn malformed_world_is_a_validation_error_with_location() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("bad.json");
    std::fs::write(&p, "{\n  \"dimension\": 2,\n  \"potential\": [\n}").unwrap();
    let o = navflow(&["check", p.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("line"), "{}", stderr(&o));
}

#[test]
fn infeasible_start_is_rejected() {
    let w = world("spheres.json");
    let o = navflow(&["simulate", w.to_str().unwrap(), "--start", "6,2"]);
    assert_eq!(o.status.code(), Some(2));
    let o = navflow(&["simulate", w.to_str().unwrap(), "--start", "1,2,3"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn unknown_flow_is_a_usage_error() {
    let w = world("spheres.json");
    let o = navflow(&["simulate", w.to_str().unwrap(), "--flow", "fast"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn graph_of_obstacles_flanking_the_target_has_no_edges() {
    let w = world("two_spheres.json");
    let o = navflow(&["graph", w.to_str().unwrap()]);
    assert!(o.status.success());
    let out = stdout(&o);
    assert!(out.contains("edges: none"), "{out}");
    assert!(out.contains("dag: true"));

    let o = navflow(&["graph", w.to_str().unwrap(), "--json"]);
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["edges"].as_array().unwrap().len(), 0);
    assert_eq!(v["is_dag"], true);
}

#[test]
fn sphere_world_condition_table_is_all_satisfied() {
    let w = world("spheres.json");
    let o = navflow(&["check", w.to_str().unwrap(), "--json"]);
    assert!(o.status.success());
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["overall"], true);
    for ob in v["obstacles"].as_array().unwrap() {
        assert_eq!(ob["lhs"].as_f64().unwrap(), 1.0);
        assert_eq!(ob["satisfied"], true);
    }
    let o = navflow(&["check", world("flat_plate.json").to_str().unwrap()]);
    assert!(stdout(&o).contains("overall: violated"));
}

#[test]
fn generation_is_deterministic_and_seed_env_overrides_flag() {
    let a = navflow(&["gen", "--m", "5", "--seed", "7"]);
    let b = navflow(&["gen", "--m", "5", "--seed", "7"]);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);

    let alias = navflow(&["gen-world", "--m", "5", "--seed", "7"]);
    assert_eq!(alias.stdout, a.stdout);

    let c = navflow(&["gen", "--m", "5", "--seed", "8"]);
    assert_ne!(a.stdout, c.stdout);

    let env = Command::new(env!("CARGO_BIN_EXE_navflow"))
        .args(["gen", "--m", "5", "--seed", "8"])
        .env("NAVFLOW_SEED", "7")
        .output()
        .unwrap();
    assert_eq!(env.stdout, a.stdout);

    let bad = Command::new(env!("CARGO_BIN_EXE_navflow"))
        .args(["gen", "--m", "5"])
        .env("NAVFLOW_SEED", "seven")
        .output()
        .unwrap();
    assert_eq!(bad.status.code(), Some(2));
}

#[test]
fn generated_world_is_checkable() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("w.json");
    let o = navflow(&["gen", "--m", "4", "--seed", "3", "--out", p.to_str().unwrap()]);
    assert!(o.status.success());
    let o = navflow(&["check", p.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
}

#[test]
fn batch_generation_writes_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("batch");
    let o = navflow(&["gen", "--m", "3", "--seed", "11", "--count", "3", "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    let manifest: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("manifest.json")).unwrap()).unwrap();
    let worlds = manifest["worlds"].as_array().unwrap();
    assert_eq!(worlds.len(), 3);
    for entry in worlds {
        assert!(out.join(entry["file"].as_str().unwrap()).exists());
    }
    let o = navflow(&["gen", "--m", "3", "--count", "2"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn benchmark_smoke_cell_sums_statuses() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("bench.csv");
    let o = navflow(&[
        "benchmark",
        "--flow",
        "new,nav",
        "--k",
        "20",
        "--m",
        "2..3",
        "--trials",
        "2",
        "--jobs",
        "2",
        "--out",
        p.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = std::fs::read_to_string(&p).unwrap();
    let mut rdr = csv_rows(&text);
    let header = rdr.remove(0);
    let col = |name: &str| header.iter().position(|h| h == name).unwrap();
    assert_eq!(rdr.len(), 4);
    for row in &rdr {
        let n = |name: &str| row[col(name)].parse::<usize>().unwrap();
        assert_eq!(n("successes") + n("collisions") + n("timeouts") + n("local_minima"), n("trials"));
        assert_eq!(n("trials") + n("generation_failures"), 2);
    }

    let again = navflow(&[
        "benchmark", "--flow", "new,nav", "--k", "20", "--m", "2..3", "--trials", "2", "--jobs", "1",
    ]);
    assert_eq!(String::from_utf8_lossy(&again.stdout), text, "results do not depend on --jobs");
}

fn csv_rows(text: &str) -> Vec<Vec<String>> {
    text.lines().map(|l| l.split(',').map(str::to_string).collect()).collect()
}
