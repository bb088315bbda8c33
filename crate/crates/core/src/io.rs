//! File formats: world JSON, trajectory CSV with a JSON sidecar, and the
//! discovery-log CSV.
//!
//! Reals in world files are written in exponent form with 17 significant
//! digits, so every value round-trips exactly.

use std::io::{self, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::ser::{Formatter, PrettyFormatter};

use crate::error::{NavError, Result};
use crate::geometry::{Ellipsoid, QuadraticPotential, SpdMatrix, Workspace, World};
use crate::integrate::{SimConfig, StepDiagnostics, Trajectory};
use crate::{Matrix, Vector};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PotentialFile {
    #[serde(rename = "Q")]
    pub q: Vec<Vec<f64>>,
    pub target: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WorkspaceFile {
    #[serde(rename = "A0")]
    pub a0: Vec<Vec<f64>>,
    pub center: Vec<f64>,
    pub r0: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ObstacleFile {
    #[serde(rename = "A")]
    pub a: Vec<Vec<f64>>,
    pub center: Vec<f64>,
    pub radius: f64,
}

/// Serialized world. Matrices are lists of rows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WorldFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub description: Option<String>,
    pub dimension: usize,
    pub potential: PotentialFile,
    pub workspace: WorkspaceFile,
    pub obstacles: Vec<ObstacleFile>,
}

fn rows(m: &Matrix) -> Vec<Vec<f64>> {
    (0..m.nrows()).map(|i| m.row(i).iter().copied().collect()).collect()
}

fn matrix(rows: &[Vec<f64>], n: usize, what: &str) -> Result<Matrix> {
    if rows.len() != n || rows.iter().any(|r| r.len() != n) {
        return Err(NavError::InvalidWorld(format!("{what} must be a {n}x{n} matrix")));
    }
    Ok(Matrix::from_fn(n, n, |i, j| rows[i][j]))
}

fn vector(v: &[f64], n: usize, what: &str) -> Result<Vector> {
    if v.len() != n {
        return Err(NavError::InvalidWorld(format!("{what} must have {n} entries, found {}", v.len())));
    }
    Ok(Vector::from_column_slice(v))
}

fn spd(rows: &[Vec<f64>], n: usize, what: &str) -> Result<SpdMatrix> {
    SpdMatrix::new(matrix(rows, n, what)?).map_err(|e| NavError::InvalidWorld(format!("{what}: {e}")))
}

impl WorldFile {
    pub fn from_world(w: &World, description: Option<String>) -> Self {
        Self {
            description,
            dimension: w.dim(),
            potential: PotentialFile {
                q: rows(w.potential.q.matrix()),
                target: w.target().iter().copied().collect(),
            },
            workspace: WorkspaceFile {
                a0: rows(w.workspace.a0.matrix()),
                center: w.workspace.center.iter().copied().collect(),
                r0: w.workspace.r0,
            },
            obstacles: w
                .obstacles
                .iter()
                .map(|o| ObstacleFile {
                    a: rows(o.a.matrix()),
                    center: o.center.iter().copied().collect(),
                    radius: o.radius,
                })
                .collect(),
        }
    }

    /// Builds the world without checking the placement assumptions.
    pub fn to_world_unchecked(&self) -> Result<World> {
        let n = self.dimension;
        let p = &self.potential;
        let potential = QuadraticPotential::new(spd(&p.q, n, "potential.Q")?, vector(&p.target, n, "potential.target")?)?;
        let ws = &self.workspace;
        let workspace = Workspace::new(
            spd(&ws.a0, n, "workspace.A0")?,
            vector(&ws.center, n, "workspace.center")?,
            ws.r0,
        )
        .map_err(|e| NavError::InvalidWorld(format!("workspace: {e}")))?;
        let obstacles = self
            .obstacles
            .iter()
            .enumerate()
            .map(|(i, o)| {
                Ellipsoid::new(
                    spd(&o.a, n, &format!("obstacles[{i}].A"))?,
                    vector(&o.center, n, &format!("obstacles[{i}].center"))?,
                    o.radius,
                )
                .map_err(|e| NavError::InvalidWorld(format!("obstacles[{i}]: {e}")))
            })
            .collect::<Result<Vec<_>>>()?;
        World::new(workspace, obstacles, potential).map_err(|e| NavError::InvalidWorld(e.to_string()))
    }

    /// Builds the world and rejects it if any placement assumption fails.
    pub fn to_world(&self) -> Result<World> {
        let w = self.to_world_unchecked()?;
        let violations = w.validate();
        if !violations.is_empty() {
            let msg: Vec<String> = violations.iter().map(|v| v.to_string()).collect();
            return Err(NavError::InvalidWorld(msg.join("; ")));
        }
        Ok(w)
    }
}

/// Pretty JSON with every float as `{:.16e}`.
struct ExactFloats(PrettyFormatter<'static>);

impl Formatter for ExactFloats {
    fn write_f64<W: ?Sized + Write>(&mut self, writer: &mut W, value: f64) -> io::Result<()> {
        write!(writer, "{value:.16e}")
    }
    fn write_f32<W: ?Sized + Write>(&mut self, writer: &mut W, value: f32) -> io::Result<()> {
        self.write_f64(writer, value as f64)
    }
    fn begin_array<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_array(w)
    }
    fn end_array<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_array(w)
    }
    fn begin_array_value<W: ?Sized + Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.0.begin_array_value(w, first)
    }
    fn end_array_value<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_array_value(w)
    }
    fn begin_object<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_object(w)
    }
    fn end_object<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_object(w)
    }
    fn begin_object_key<W: ?Sized + Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.0.begin_object_key(w, first)
    }
    fn begin_object_value<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_object_value(w)
    }
    fn end_object_value<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_object_value(w)
    }
}

/// JSON text in the exact-float pretty format.
pub fn to_exact_json<T: Serialize>(value: &T) -> Result<String> {
    let mut buf = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut buf, ExactFloats(PrettyFormatter::new()));
    value.serialize(&mut ser)?;
    buf.push(b'\n');
    Ok(String::from_utf8(buf).expect("serde_json writes UTF-8"))
}

pub fn world_to_json(w: &World, description: Option<&str>) -> Result<String> {
    to_exact_json(&WorldFile::from_world(w, description.map(str::to_string)))
}

/// Parses a world file; syntax and schema errors carry line and column.
pub fn parse_world_file(text: &str) -> Result<WorldFile> {
    serde_json::from_str(text)
        .map_err(|e| NavError::Parse(format!("line {}, column {}: {e}", e.line(), e.column())))
}

/// Parses and validates a world.
pub fn parse_world(text: &str) -> Result<World> {
    parse_world_file(text)?.to_world()
}

pub fn read_world(path: &Path) -> Result<World> {
    let text = std::fs::read_to_string(path)?;
    parse_world(&text).map_err(|e| match e {
        NavError::Parse(m) => NavError::Parse(format!("{}: {m}", path.display())),
        other => other,
    })
}

pub fn write_world(path: &Path, w: &World, description: Option<&str>) -> Result<()> {
    std::fs::write(path, world_to_json(w, description)?)?;
    Ok(())
}

/// Diagnostics for every state, computed when the run did not record them.
fn row_diagnostics(w: &World, k: f64, traj: &Trajectory) -> Vec<StepDiagnostics> {
    if let Some(d) = &traj.diagnostics {
        if d.len() == traj.states.len() {
            return d.clone();
        }
    }
    let n = traj.states.len();
    traj.states
        .iter()
        .enumerate()
        .map(|(i, x)| {
            let next = if i + 1 < n { Some(&traj.states[i + 1]) } else { None };
            StepDiagnostics {
                v: 0.5 * (x - w.target()).norm_squared(),
                phi: crate::flows::phi_k(w, k, x).unwrap_or(f64::NAN),
                grad_norm: next.map_or(0.0, |y| (y - x).norm()),
            }
        })
        .collect()
}

/// Header `step,x_0,…,x_{n−1},V,phi_k,grad_norm`, one row per state.
pub fn write_trajectory_csv<W: Write>(w: &World, k: f64, traj: &Trajectory, out: W) -> Result<()> {
    let n = w.dim();
    let mut wtr = csv::Writer::from_writer(out);
    let mut header = vec!["step".to_string()];
    header.extend((0..n).map(|i| format!("x_{i}")));
    header.extend(["V", "phi_k", "grad_norm"].map(String::from));
    wtr.write_record(&header)?;
    for (i, (x, d)) in traj.states.iter().zip(row_diagnostics(w, k, traj)).enumerate() {
        let mut rec = vec![i.to_string()];
        rec.extend(x.iter().map(|c| format!("{c:.17e}")));
        rec.extend([d.v, d.phi, d.grad_norm].map(|v| format!("{v:.17e}")));
        wtr.write_record(&rec)?;
    }
    wtr.flush()?;
    Ok(())
}

/// Positions from a trajectory CSV.
pub fn read_trajectory_csv<R: io::Read>(input: R) -> Result<Vec<Vector>> {
    let mut rdr = csv::Reader::from_reader(input);
    let headers = rdr.headers()?.clone();
    let n = headers.iter().filter(|h| h.starts_with("x_")).count();
    if n == 0 {
        return Err(NavError::Parse("trajectory CSV has no x_ columns".into()));
    }
    let mut out = Vec::new();
    for (line, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let coords = (1..=n)
            .map(|j| {
                rec.get(j)
                    .and_then(|s| s.trim().parse::<f64>().ok())
                    .ok_or_else(|| NavError::Parse(format!("row {}: bad coordinate {j}", line + 2)))
            })
            .collect::<Result<Vec<_>>>()?;
        out.push(Vector::from_vec(coords));
    }
    Ok(out)
}

/// Status and run metadata stored next to a trajectory CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectorySidecar {
    pub status: crate::integrate::Status,
    pub steps: usize,
    pub min_beta_seen: f64,
    pub controller: String,
    pub config: SimConfig,
    pub start: Vec<f64>,
    pub end: Vec<f64>,
    pub discovered: usize,
    /// Driven by the damped double integrator rather than the first-order field.
    #[serde(default)]
    pub second_order: bool,
}

impl TrajectorySidecar {
    pub fn new(cfg: &SimConfig, traj: &Trajectory) -> Self {
        Self {
            status: traj.status,
            steps: traj.steps,
            min_beta_seen: traj.min_beta_seen,
            controller: cfg.controller.name().to_string(),
            config: cfg.clone(),
            start: traj.states[0].iter().copied().collect(),
            end: traj.last().iter().copied().collect(),
            discovered: traj.discovery_log.len(),
            second_order: traj.velocities.is_some(),
        }
    }
}

/// Header `step,obstacle_index`.
pub fn write_discovery_csv<W: Write>(log: &[(usize, usize)], out: W) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(out);
    wtr.write_record(["step", "obstacle_index"])?;
    for (s, i) in log {
        wtr.write_record([s.to_string(), i.to_string()])?;
    }
    wtr.flush()?;
    Ok(())
}
