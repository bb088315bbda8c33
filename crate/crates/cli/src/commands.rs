use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::Path;

use anyhow::{Context, Result};
use serde::Serialize;
use serde_json::json;

use navflow::analysis::{build_config_graph, check_condition};
use navflow::benchmark::{run_benchmark, write_report_csv, BenchConfig, WorldFamily};
use navflow::flows::{eval_flow, nav_potential_at};
use navflow::integrate::{run, run_second_order, StuckConfig};
use navflow::io::{
    read_trajectory_csv, read_world, to_exact_json, write_discovery_csv, write_trajectory_csv, world_to_json,
    TrajectorySidecar,
};
use navflow::rng::split;
use navflow::svg::{render_svg, PlotTrajectory, SvgOptions};
use navflow::worldgen::{gen_sphere_world, gen_start, gen_world_2d, gen_world_nd, GenConfig, NdOptions};
use navflow::{Controller, FlowKind, SimConfig, Vector, World};

use crate::{BenchmarkArgs, FamilyArg, FlowArg, GenArgs, IntegrationArgs, PlotArgs, ReportArgs, SimulateArgs, UsageError};

pub const SEED_ENV: &str = "NAVFLOW_SEED";

/// `println!` that returns the I/O error instead of panicking, and treats a
/// closed pipe (`navflow gen | head`) as the end of output.
macro_rules! outln {
    ($($arg:tt)*) => {
        emit(format_args!($($arg)*))
    };
}

fn emit(args: std::fmt::Arguments<'_>) -> io::Result<()> {
    match writeln!(io::stdout().lock(), "{args}") {
        Err(e) if e.kind() == io::ErrorKind::BrokenPipe => Ok(()),
        r => r,
    }
}

/// NAVFLOW_SEED, when set, wins over the `--seed` flag.
fn effective_seed(flag: u64) -> Result<u64> {
    match std::env::var(SEED_ENV) {
        Ok(s) => s
            .trim()
            .parse()
            .map_err(|_| UsageError(format!("{SEED_ENV} must be an unsigned integer, got {s:?}")).into()),
        Err(_) => Ok(flag),
    }
}

fn controller(flow: FlowArg, sensor_range: f64) -> Controller {
    match flow {
        FlowArg::Nav => Controller::Flow(FlowKind::NavFn),
        FlowArg::Old => Controller::Flow(FlowKind::SecondOrder),
        FlowArg::New => Controller::Flow(FlowKind::CurvatureCorrected),
        FlowArg::Switched => Controller::Switched { sensor_range },
    }
}

fn sim_config(flow: FlowArg, k: f64, it: &IntegrationArgs, seed: u64) -> SimConfig {
    let mut cfg = SimConfig::new(controller(flow, it.sensor_range), k);
    cfg.eta = it.eta;
    cfg.epsilon_norm = it.eps;
    cfg.max_steps = it.max_steps;
    cfg.seed = seed;
    cfg.record_diagnostics = true;
    if it.no_stuck {
        cfg.stuck = None;
    }
    cfg
}

fn load_world(path: &Path) -> Result<World> {
    read_world(path).with_context(|| format!("reading world file {}", path.display()))
}

fn parse_point(s: &str, dim: usize) -> Result<Vector> {
    let coords = s
        .split(',')
        .map(|t| t.trim().parse::<f64>())
        .collect::<std::result::Result<Vec<_>, _>>()
        .map_err(|_| UsageError(format!("cannot parse start point {s:?}")))?;
    if coords.len() != dim {
        return Err(UsageError(format!("start point needs {dim} coordinates, got {}", coords.len())).into());
    }
    Ok(Vector::from_vec(coords))
}

fn fmt_point(x: &Vector) -> String {
    let parts: Vec<String> = x.iter().map(|v| format!("{v:.6}")).collect();
    format!("({})", parts.join(", "))
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    let f = File::create(path).with_context(|| format!("creating {}", path.display()))?;
    Ok(BufWriter::new(f))
}

pub fn simulate(a: &SimulateArgs) -> Result<()> {
    let w = load_world(&a.world)?;
    if a.svg && w.dim() != 2 {
        return Err(UsageError("--svg needs a planar world; use the CSV output in higher dimensions".into()).into());
    }
    let seed = effective_seed(a.seed)?;
    let x0 = match &a.start {
        Some(s) => parse_point(s, w.dim())?,
        None => {
            let mut g = GenConfig::new(w.num_obstacles(), seed);
            g.r0 = w.workspace.r0;
            g.dimension = w.dim();
            gen_start(&w, &g)?
        }
    };
    if !w.in_free_space(&x0) {
        return Err(UsageError(format!("start point {} is not in free space", fmt_point(&x0))).into());
    }
    let cfg = sim_config(a.flow, a.k, &a.integration, seed);
    let traj = if a.second_order {
        let v0 = Vector::zeros(w.dim());
        run_second_order(&w, &cfg, &x0, &v0, a.damping)?
    } else {
        run(&w, &cfg, &x0)?
    };

    fs::create_dir_all(&a.out).with_context(|| format!("creating {}", a.out.display()))?;
    let base = a.out.join(&a.name);
    let csv_path = base.with_extension("csv");
    write_trajectory_csv(&w, cfg.k(), &traj, create(&csv_path)?)?;
    let sidecar_path = base.with_extension("json");
    let mut side = create(&sidecar_path)?;
    side.write_all(to_exact_json(&TrajectorySidecar::new(&cfg, &traj))?.as_bytes())?;
    side.flush()?;
    if matches!(cfg.controller, Controller::Switched { .. }) {
        let p = a.out.join(format!("{}_discovery.csv", a.name));
        write_discovery_csv(&traj.discovery_log, create(&p)?)?;
    }
    if a.svg {
        let svg = plot_from_files(&w, &csv_path, Some(&sidecar_path), a.quiver)?;
        let p = base.with_extension("svg");
        fs::write(&p, svg).with_context(|| format!("writing {}", p.display()))?;
    }

    outln!(
        "status={} steps={} start={} end={} min_beta={:.6e}",
        traj.status,
        traj.steps,
        fmt_point(&x0),
        fmt_point(traj.last()),
        traj.min_beta_seen
    )?;
    if !traj.discovery_log.is_empty() {
        outln!("discovered {} obstacle(s)", traj.discovery_log.len())?;
    }
    Ok(())
}

/// SVG of a trajectory CSV over its world. The sidecar, when present,
/// supplies the status marker and the field drawn as a quiver.
fn plot_from_files(w: &World, csv_path: &Path, sidecar: Option<&Path>, quiver: usize) -> Result<String> {
    if w.dim() != 2 {
        return Err(UsageError("plots need a planar world; use the CSV output in higher dimensions".into()).into());
    }
    let file = File::open(csv_path).with_context(|| format!("reading {}", csv_path.display()))?;
    let points = read_trajectory_csv(file).with_context(|| format!("reading {}", csv_path.display()))?;
    if points.iter().any(|p| p.len() != 2) {
        return Err(UsageError(format!("{} is not a planar trajectory", csv_path.display())).into());
    }
    let side: Option<TrajectorySidecar> = match sidecar {
        Some(p) => {
            let text = fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
            Some(serde_json::from_str(&text).with_context(|| format!("parsing {}", p.display()))?)
        }
        None => None,
    };
    let plot = PlotTrajectory {
        points,
        status: side.as_ref().map(|s| s.status),
    };
    let opts = SvgOptions {
        quiver_grid: quiver,
        ..SvgOptions::default()
    };
    let Some(side) = side else {
        return Ok(render_svg(w, &[plot], None::<fn(&Vector) -> Option<Vector>>, &opts)?);
    };
    let cfg = side.config;
    let svg = match cfg.controller {
        Controller::Flow(kind) if !side.second_order => {
            let field = |x: &Vector| eval_flow(kind, w, &cfg.params, x).ok();
            render_svg(w, &[plot], Some(field), &opts)?
        }
        _ => {
            let field = |x: &Vector| nav_potential_at(w, cfg.k(), x).ok().map(|p| p.descent.total());
            render_svg(w, &[plot], Some(field), &opts)?
        }
    };
    Ok(svg)
}

pub fn plot(a: &PlotArgs) -> Result<()> {
    let w = load_world(&a.world)?;
    let sidecar = match &a.sidecar {
        Some(p) => Some(p.clone()),
        None => Some(a.trajectory.with_extension("json")).filter(|p| p.exists()),
    };
    let svg = plot_from_files(&w, &a.trajectory, sidecar.as_deref(), a.quiver)?;
    let out = a.out.clone().unwrap_or_else(|| a.trajectory.with_extension("svg"));
    fs::write(&out, svg).with_context(|| format!("writing {}", out.display()))?;
    Ok(())
}

fn parse_ms(s: &str) -> Result<Vec<usize>> {
    let bad = || UsageError(format!("cannot parse obstacle counts {s:?}; use 2,3,4 or 2..7"));
    if let Some((lo, hi)) = s.split_once("..") {
        let lo: usize = lo.trim().parse().map_err(|_| bad())?;
        let hi: usize = hi.trim().parse().map_err(|_| bad())?;
        if lo > hi {
            return Err(bad().into());
        }
        return Ok((lo..=hi).collect());
    }
    s.split(',')
        .map(|t| t.trim().parse().map_err(|_| bad().into()))
        .collect()
}

pub fn benchmark(a: &BenchmarkArgs) -> Result<()> {
    let it = &a.integration;
    let cfg = BenchConfig {
        ks: a.k.clone(),
        ms: parse_ms(&a.m)?,
        trials: a.trials,
        controllers: a.flow.iter().map(|&f| controller(f, it.sensor_range)).collect(),
        master_seed: effective_seed(a.seed)?,
        eta: it.eta,
        epsilon_norm: it.eps,
        max_steps: it.max_steps,
        r0: a.r0,
        family: match a.family {
            FamilyArg::Ellipsoids => WorldFamily::Ellipsoids,
            FamilyArg::Spheres => WorldFamily::Spheres,
        },
        stuck: (!it.no_stuck).then(StuckConfig::default),
        jobs: a.jobs,
    };
    let report = run_benchmark(&cfg)?;
    match &a.out {
        Some(p) => write_report_csv(&report, create(p)?)?,
        None => write_report_csv(&report, io::stdout().lock())?,
    }
    for c in &report.cells {
        eprintln!(
            "{:<8} k={:<5} m={:<2} success {:>4}/{:<4} ({:.2})  collision {:>3}  timeout {:>3}  local_min {:>3}",
            c.flow, c.k, c.m, c.successes, c.trials, c.success_ratio, c.collisions, c.timeouts, c.local_minima
        );
    }
    Ok(())
}

pub fn graph(a: &ReportArgs) -> Result<()> {
    let w = load_world(&a.world)?;
    let g = build_config_graph(&w)?;
    if a.json {
        let edges: Vec<_> = g
            .edges
            .iter()
            .map(|e| {
                json!({
                    "from": e.from,
                    "to": e.to,
                    "witness": { "normal": e.witness.normal.as_slice(), "offset": e.witness.offset },
                })
            })
            .collect();
        let pairs: Vec<_> = g
            .pairs
            .iter()
            .map(|p| json!({ "i": p.i, "j": p.j, "condition_one": p.condition_one, "condition_two": p.condition_two }))
            .collect();
        let out = json!({ "nodes": g.nodes, "edges": edges, "pairs": pairs, "is_dag": g.is_dag, "cycles": g.cycles });
        outln!("{}", serde_json::to_string_pretty(&out)?)?;
        return Ok(());
    }
    outln!("obstacles: {}", g.nodes.len())?;
    if g.edges.is_empty() {
        outln!("edges: none")?;
    } else {
        outln!("edges:")?;
        for e in &g.edges {
            outln!(
                "  {} -> {}  witness normal={} offset={:.6}",
                e.from,
                e.to,
                fmt_point(&e.witness.normal),
                e.witness.offset
            )?;
        }
    }
    outln!("{:>4} {:>4} {:>6} {:>6}", "i", "j", "cond1", "cond2")?;
    for p in &g.pairs {
        outln!("{:>4} {:>4} {:>6} {:>6}", p.i, p.j, p.condition_one, p.condition_two)?;
    }
    outln!("dag: {}", g.is_dag)?;
    for c in &g.cycles {
        let c: Vec<String> = c.iter().map(|i| i.to_string()).collect();
        outln!("cycle: {}", c.join(" -> "))?;
    }
    Ok(())
}

pub fn check(a: &ReportArgs) -> Result<()> {
    let w = load_world(&a.world)?;
    let r = check_condition(&w);
    if a.json {
        outln!("{}", serde_json::to_string_pretty(&r)?)?;
        return Ok(());
    }
    outln!("{:>8} {:>14} {:>14}  verdict", "obstacle", "lhs", "rhs")?;
    for o in &r.obstacles {
        let verdict = if o.satisfied { "satisfied" } else { "violated" };
        outln!("{:>8} {:>14.6} {:>14.6}  {verdict}", o.index, o.lhs, o.rhs)?;
    }
    outln!("overall: {}", if r.overall { "satisfied" } else { "violated" })?;
    Ok(())
}

#[derive(Serialize)]
struct ManifestEntry {
    file: String,
    seed: u64,
    m: usize,
}

#[derive(Serialize)]
struct Manifest {
    master_seed: u64,
    family: String,
    r0: f64,
    dimension: usize,
    worlds: Vec<ManifestEntry>,
}

fn gen_one(a: &GenArgs, seed: u64) -> Result<World> {
    let g = GenConfig {
        r0: a.r0,
        m: a.m,
        dimension: a.dimension,
        seed,
        ..GenConfig::new(a.m, seed)
    };
    let w = match (a.family, a.dimension) {
        (FamilyArg::Spheres, _) => gen_sphere_world(&g)?,
        (FamilyArg::Ellipsoids, 2) => gen_world_2d(&g)?,
        (FamilyArg::Ellipsoids, _) => gen_world_nd(&g, &NdOptions::planar_like(a.r0))?,
    };
    Ok(w)
}

fn family_name(f: FamilyArg) -> &'static str {
    match f {
        FamilyArg::Ellipsoids => "ellipsoids",
        FamilyArg::Spheres => "spheres",
    }
}

pub fn gen(a: &GenArgs) -> Result<()> {
    if a.count == 0 {
        return Err(UsageError("--count must be at least 1".into()).into());
    }
    let seed = effective_seed(a.seed)?;
    let describe = |s: u64| format!("random {} world, m={}, seed={s}", family_name(a.family), a.m);
    if a.count == 1 {
        let w = gen_one(a, seed)?;
        let text = world_to_json(&w, Some(&describe(seed)))?;
        match &a.out {
            Some(p) => fs::write(p, text).with_context(|| format!("writing {}", p.display()))?,
            None => outln!("{text}")?,
        }
        return Ok(());
    }
    let dir = a
        .out
        .as_ref()
        .ok_or_else(|| UsageError("batch generation (--count > 1) needs --out DIR".into()))?;
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let mut worlds = Vec::with_capacity(a.count);
    for i in 0..a.count {
        let s = split(seed, i as u64);
        let w = gen_one(a, s)?;
        let file = format!("world_{i:04}.json");
        fs::write(dir.join(&file), world_to_json(&w, Some(&describe(s)))?)?;
        worlds.push(ManifestEntry { file, seed: s, m: a.m });
    }
    let manifest = Manifest {
        master_seed: seed,
        family: family_name(a.family).into(),
        r0: a.r0,
        dimension: a.dimension,
        worlds,
    };
    fs::write(dir.join("manifest.json"), serde_json::to_string_pretty(&manifest)?)?;
    outln!("wrote {} worlds to {}", a.count, dir.display())?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn obstacle_count_ranges() {
        assert_eq!(parse_ms("2..4").unwrap(), vec![2, 3, 4]);
        assert_eq!(parse_ms("3, 5").unwrap(), vec![3, 5]);
        assert!(parse_ms("4..2").is_err());
        assert!(parse_ms("x").is_err());
    }

    #[test]
    fn start_point_parsing() {
        let p = parse_point("1.5,-2", 2).unwrap();
        assert_eq!(p.as_slice(), &[1.5, -2.0]);
        assert!(parse_point("1,2,3", 2).is_err());
        assert!(parse_point("a,b", 2).is_err());
    }
}
