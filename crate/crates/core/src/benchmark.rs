//! Monte Carlo success-ratio benchmark over a (controller, k, m) grid.
//!
//! Trial t of obstacle count m uses the seed split(split(master, m), t), so
//! every controller and every k sees the same worlds and starts.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{NavError, Result};
use crate::integrate::{run, Controller, SimConfig, Status, StuckConfig};
use crate::rng::split;
use crate::worldgen::{gen_sphere_world, gen_start, gen_world_2d, GenConfig};
use crate::flows::FlowKind;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WorldFamily {
    /// The random planar ellipsoid protocol.
    Ellipsoids,
    /// A_i = I and Q = I.
    Spheres,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchConfig {
    pub ks: Vec<f64>,
    pub ms: Vec<usize>,
    pub trials: usize,
    pub controllers: Vec<Controller>,
    pub master_seed: u64,
    pub eta: f64,
    pub epsilon_norm: f64,
    pub max_steps: usize,
    pub r0: f64,
    pub family: WorldFamily,
    pub stuck: Option<StuckConfig>,
    /// Worker threads; `None` uses rayon's default.
    pub jobs: Option<usize>,
}

impl Default for BenchConfig {
    fn default() -> Self {
        Self {
            ks: vec![20.0, 40.0, 60.0],
            ms: (2..=7).collect(),
            trials: 100,
            controllers: vec![Controller::Flow(FlowKind::CurvatureCorrected)],
            master_seed: 2024,
            eta: 0.01,
            epsilon_norm: 1e-4,
            max_steps: 50_000,
            r0: 20.0,
            family: WorldFamily::Ellipsoids,
            stuck: Some(StuckConfig::default()),
            jobs: None,
        }
    }
}

impl BenchConfig {
    pub fn validate(&self) -> Result<()> {
        if self.ks.is_empty() || self.ms.is_empty() || self.controllers.is_empty() {
            return Err(NavError::InvalidConfig("k list, m list and controllers must be nonempty".into()));
        }
        if self.trials == 0 {
            return Err(NavError::InvalidConfig("trials must be at least 1".into()));
        }
        if self.jobs == Some(0) {
            return Err(NavError::InvalidConfig("jobs must be at least 1".into()));
        }
        for &k in &self.ks {
            self.sim_config(Controller::Potential, k).validate()?;
        }
        Ok(())
    }

    pub fn sim_config(&self, controller: Controller, k: f64) -> SimConfig {
        let mut c = SimConfig::new(controller, k);
        c.eta = self.eta;
        c.epsilon_norm = self.epsilon_norm;
        c.max_steps = self.max_steps;
        c.stuck = self.stuck;
        c
    }

    pub fn gen_config(&self, m: usize, trial: usize) -> GenConfig {
        let mut g = GenConfig::new(m, trial_seed(self.master_seed, m, trial));
        g.r0 = self.r0;
        g
    }
}

pub fn trial_seed(master: u64, m: usize, trial: usize) -> u64 {
    split(split(master, m as u64), trial as u64)
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrialOutcome {
    pub controller: Controller,
    pub k: f64,
    pub m: usize,
    pub trial: usize,
    /// `None` when the world or start could not be generated.
    pub status: Option<Status>,
    pub steps: usize,
    pub min_beta_seen: f64,
    /// Accepted states that fail free-space membership.
    pub safety_violations: usize,
}

pub fn run_trial(cfg: &BenchConfig, controller: Controller, k: f64, m: usize, trial: usize) -> Result<TrialOutcome> {
    let g = cfg.gen_config(m, trial);
    let generated = match cfg.family {
        WorldFamily::Ellipsoids => gen_world_2d(&g),
        WorldFamily::Spheres => gen_sphere_world(&g),
    }
    .and_then(|w| gen_start(&w, &g).map(|x| (w, x)));
    let (w, x0) = match generated {
        Ok(v) => v,
        Err(NavError::Generation(_)) => {
            return Ok(TrialOutcome {
                controller,
                k,
                m,
                trial,
                status: None,
                steps: 0,
                min_beta_seen: f64::NAN,
                safety_violations: 0,
            })
        }
        Err(e) => return Err(e),
    };
    let traj = run(&w, &cfg.sim_config(controller, k), &x0)?;
    let safety_violations = traj.accepted_states().iter().filter(|x| !w.in_free_space(x)).count();
    Ok(TrialOutcome {
        controller,
        k,
        m,
        trial,
        status: Some(traj.status),
        steps: traj.steps,
        min_beta_seen: traj.min_beta_seen,
        safety_violations,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellResult {
    pub flow: String,
    pub k: f64,
    pub m: usize,
    /// Completed runs; generation failures are excluded.
    pub trials: usize,
    pub successes: usize,
    pub collisions: usize,
    pub timeouts: usize,
    pub local_minima: usize,
    pub generation_failures: usize,
    pub safety_violations: usize,
    pub success_ratio: f64,
    /// Mean step count of the successful runs (NaN if none).
    pub mean_steps: f64,
}

impl CellResult {
    pub fn status_sum_holds(&self) -> bool {
        self.successes + self.collisions + self.timeouts + self.local_minima == self.trials
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchmarkReport {
    pub config: BenchConfig,
    pub cells: Vec<CellResult>,
    pub outcomes: Vec<TrialOutcome>,
}

impl BenchmarkReport {
    pub fn cell(&self, flow: &str, k: f64, m: usize) -> Option<&CellResult> {
        self.cells.iter().find(|c| c.flow == flow && c.k == k && c.m == m)
    }
}

fn aggregate(controller: Controller, k: f64, m: usize, outcomes: &[TrialOutcome]) -> CellResult {
    let mut c = CellResult {
        flow: controller.name().to_string(),
        k,
        m,
        trials: 0,
        successes: 0,
        collisions: 0,
        timeouts: 0,
        local_minima: 0,
        generation_failures: 0,
        safety_violations: 0,
        success_ratio: 0.0,
        mean_steps: f64::NAN,
    };
    let mut step_sum = 0usize;
    for o in outcomes {
        c.safety_violations += o.safety_violations;
        match o.status {
            None => c.generation_failures += 1,
            Some(s) => {
                c.trials += 1;
                match s {
                    Status::Success => {
                        c.successes += 1;
                        step_sum += o.steps;
                    }
                    Status::Collision => c.collisions += 1,
                    Status::Timeout => c.timeouts += 1,
                    Status::LocalMinimum => c.local_minima += 1,
                }
            }
        }
    }
    if c.trials > 0 {
        c.success_ratio = c.successes as f64 / c.trials as f64;
    }
    if c.successes > 0 {
        c.mean_steps = step_sum as f64 / c.successes as f64;
    }
    c
}

pub fn run_benchmark(cfg: &BenchConfig) -> Result<BenchmarkReport> {
    cfg.validate()?;
    let mut tasks = Vec::new();
    for &controller in &cfg.controllers {
        for &k in &cfg.ks {
            for &m in &cfg.ms {
                for t in 0..cfg.trials {
                    tasks.push((controller, k, m, t));
                }
            }
        }
    }
    let work = || -> Result<Vec<TrialOutcome>> {
        tasks
            .par_iter()
            .map(|&(c, k, m, t)| run_trial(cfg, c, k, m, t))
            .collect()
    };
    let outcomes = match cfg.jobs {
        Some(j) => rayon::ThreadPoolBuilder::new()
            .num_threads(j)
            .build()
            .map_err(|e| NavError::InvalidConfig(format!("thread pool: {e}")))?
            .install(work)?,
        None => work()?,
    };
    let mut cells = Vec::new();
    for chunk in outcomes.chunks(cfg.trials) {
        let o = &chunk[0];
        cells.push(aggregate(o.controller, o.k, o.m, chunk));
    }
    Ok(BenchmarkReport {
        config: cfg.clone(),
        cells,
        outcomes,
    })
}

/// One row per cell and controller.
pub fn write_report_csv<W: std::io::Write>(report: &BenchmarkReport, out: W) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(out);
    for c in &report.cells {
        wtr.serialize(c)?;
    }
    wtr.flush()?;
    Ok(())
}

pub fn read_report_csv<R: std::io::Read>(input: R) -> Result<Vec<CellResult>> {
    let mut rdr = csv::Reader::from_reader(input);
    let mut cells = Vec::new();
    for row in rdr.deserialize() {
        cells.push(row?);
    }
    Ok(cells)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny() -> BenchConfig {
        BenchConfig {
            ks: vec![20.0],
            ms: vec![2],
            trials: 1,
            ..Default::default()
        }
    }

    #[test]
    fn smoke_cell() {
        let r = run_benchmark(&tiny()).unwrap();
        assert_eq!(r.cells.len(), 1);
        assert!(r.cells[0].status_sum_holds());
        assert_eq!(r.cells[0].trials + r.cells[0].generation_failures, 1);
    }

    #[test]
    fn csv_round_trip() {
        let r = run_benchmark(&tiny()).unwrap();
        let mut buf = Vec::new();
        write_report_csv(&r, &mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with(
            "flow,k,m,trials,successes,collisions,timeouts,local_minima,generation_failures,safety_violations,success_ratio,mean_steps"
        ));
        let back = read_report_csv(&buf[..]).unwrap();
        assert_eq!(back.len(), 1);
        assert_eq!(back[0].successes, r.cells[0].successes);
    }

    #[test]
    fn seeds_shared_across_cells() {
        assert_eq!(trial_seed(1, 3, 4), trial_seed(1, 3, 4));
        assert_ne!(trial_seed(1, 3, 4), trial_seed(1, 4, 3));
        let cfg = BenchConfig::default();
        assert_eq!(cfg.gen_config(3, 7), cfg.gen_config(3, 7));
    }

    #[test]
    fn rejects_bad_config() {
        let mut c = tiny();
        c.trials = 0;
        assert!(run_benchmark(&c).is_err());
        let mut c = tiny();
        c.ks = vec![-1.0];
        assert!(run_benchmark(&c).is_err());
    }
}
