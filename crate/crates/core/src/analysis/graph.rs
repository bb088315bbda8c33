//! Configuration graph over obstacles: edge (i, j) when some hyperplane
//! separates O_i from O_j with the target on O_j's side (Condition 1) and no
//! hyperplane separates them with the target on O_i's side (Condition 2).
//!
//! A hyperplane with O_i on one side and O_j, x* on the other exists iff O_i
//! is strictly separated from conv(O_j ∪ {x*}), which is decided by
//! [`convex_distance`].

use super::separation::{convex_distance, ConvexSet, Hyperplane};
use crate::error::Result;
use crate::geometry::{World, SEPARATION_TOL};

/// Witness hyperplane for Condition 1 of the ordered pair (i, j), or `None`
/// when O_i touches conv(O_j ∪ {x*}).
pub fn condition_one(w: &World, i: usize, j: usize) -> Result<Option<Hyperplane>> {
    w.check_index(i)?;
    w.check_index(j)?;
    let r = convex_distance(
        &ConvexSet::Ellipsoid(&w.obstacles[i]),
        &ConvexSet::Hull(&w.obstacles[j], w.target().clone()),
    )?;
    Ok(if r.distance > SEPARATION_TOL { r.hyperplane } else { None })
}

#[derive(Debug, Clone)]
pub struct PairVerdict {
    pub i: usize,
    pub j: usize,
    pub condition_one: bool,
    /// No hyperplane separates O_i from O_j with x* on O_i's side.
    pub condition_two: bool,
}

#[derive(Debug, Clone)]
pub struct GraphEdge {
    pub from: usize,
    pub to: usize,
    /// Condition 1 hyperplane, normal pointing from O_from toward O_to.
    pub witness: Hyperplane,
}

#[derive(Debug, Clone)]
pub struct ConfigGraph {
    pub nodes: Vec<usize>,
    pub edges: Vec<GraphEdge>,
    /// Verdicts for every ordered pair i ≠ j.
    pub pairs: Vec<PairVerdict>,
    pub is_dag: bool,
    pub cycles: Vec<Vec<usize>>,
}

impl ConfigGraph {
    pub fn has_edge(&self, from: usize, to: usize) -> bool {
        self.edges.iter().any(|e| e.from == from && e.to == to)
    }
}

pub fn build_config_graph(w: &World) -> Result<ConfigGraph> {
    let m = w.num_obstacles();
    let mut witness: Vec<Vec<Option<Hyperplane>>> = vec![vec![None; m]; m];
    for (i, row) in witness.iter_mut().enumerate() {
        for (j, cell) in row.iter_mut().enumerate() {
            if i != j {
                *cell = condition_one(w, i, j)?;
            }
        }
    }
    let mut pairs = Vec::new();
    let mut edges = Vec::new();
    for i in 0..m {
        for j in 0..m {
            if i == j {
                continue;
            }
            let c1 = witness[i][j].is_some();
            let c2 = witness[j][i].is_some();
            pairs.push(PairVerdict {
                i,
                j,
                condition_one: c1,
                condition_two: !c2,
            });
            if c1 && !c2 {
                edges.push(GraphEdge {
                    from: i,
                    to: j,
                    witness: witness[i][j].clone().expect("checked above"),
                });
            }
        }
    }
    let cycles = find_cycles(m, &edges);
    Ok(ConfigGraph {
        nodes: (0..m).collect(),
        is_dag: cycles.is_empty(),
        edges,
        pairs,
        cycles,
    })
}

/// One cycle per back edge of a depth-first search.
fn find_cycles(m: usize, edges: &[GraphEdge]) -> Vec<Vec<usize>> {
    #[derive(Clone, Copy, PartialEq)]
    enum Mark {
        New,
        Open,
        Done,
    }
    let mut adj = vec![Vec::new(); m];
    for e in edges {
        adj[e.from].push(e.to);
    }
    let mut mark = vec![Mark::New; m];
    let mut stack: Vec<usize> = Vec::new();
    let mut cycles = Vec::new();

    fn visit(
        u: usize,
        adj: &[Vec<usize>],
        mark: &mut [Mark],
        stack: &mut Vec<usize>,
        cycles: &mut Vec<Vec<usize>>,
    ) {
        mark[u] = Mark::Open;
        stack.push(u);
        for &v in &adj[u] {
            match mark[v] {
                Mark::New => visit(v, adj, mark, stack, cycles),
                Mark::Open => {
                    let start = stack.iter().position(|&s| s == v).expect("open node is on the stack");
                    cycles.push(stack[start..].to_vec());
                }
                Mark::Done => {}
            }
        }
        stack.pop();
        mark[u] = Mark::Done;
    }

    for s in 0..m {
        if mark[s] == Mark::New {
            visit(s, &adj, &mut mark, &mut stack, &mut cycles);
        }
    }
    cycles
}
