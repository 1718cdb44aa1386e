//! Discrete reachable sets and the limit value `I(x) = inf_{y ∈ R(x)} min_a L(y, a)`.

use std::collections::VecDeque;
use std::sync::Arc;

use petgraph::algo::tarjan_scc;
use petgraph::graph::DiGraph;

use crate::control::ControlSystem;
use crate::error::{Error, Result};
use crate::grid::{Grid, GridFunction};
use crate::scalar::Scalar;

/// Corners with at most this interpolation weight carry no edge.
pub const EDGE_WEIGHT_TOL: f64 = 1e-12;

/// Edges from each masked node to every masked corner of the cell holding
/// its projected characteristic foot `x + Δt·f(x, a)`, over all sampled actions.
pub fn reachability_graph<S: Scalar>(sys: &ControlSystem<S>, grid: &Grid<S>) -> Result<Vec<Vec<usize>>> {
    if grid.dim() != sys.dim() {
        return Err(Error::GridMismatch("dimension mismatch".into()));
    }
    let dt = grid.h() / (sys.lipschitz_f + S::one());
    let mut fx = vec![S::zero(); sys.dim()];
    let mut st = Vec::new();
    Ok((0..grid.len())
        .map(|i| {
            let x = grid.node(i);
            let mut out: Vec<usize> = Vec::new();
            for a in sys.actions() {
                sys.velocity_into(&x, a, &mut fx);
                let mut y: Vec<S> = x.iter().zip(&fx).map(|(&xi, &fi)| xi + dt * fi).collect();
                sys.domain().project(&mut y);
                grid.stencil(&y, &mut st);
                out.extend(st.iter().filter(|p| p.1 > S::lit(EDGE_WEIGHT_TOL)).map(|p| p.0));
            }
            out.sort_unstable();
            out.dedup();
            out
        })
        .collect())
}

fn node_costs<S: Scalar>(sys: &ControlSystem<S>, grid: &Grid<S>) -> Vec<S> {
    (0..grid.len()).map(|i| sys.min_cost(&grid.node(i))).collect()
}

/// `I(x)` at a masked node, by breadth-first closure.
pub fn reachable_value<S: Scalar>(sys: &ControlSystem<S>, grid: &Grid<S>, x: &[S]) -> Result<S> {
    let start = grid.locate(x).ok_or_else(|| Error::OutsideDomain {
        point: x.iter().map(|v| v.as_f64()).collect(),
    })?;
    let edges = reachability_graph(sys, grid)?;
    let mut seen = vec![false; grid.len()];
    seen[start] = true;
    let mut queue = VecDeque::from([start]);
    let mut best = S::infinity();
    while let Some(v) = queue.pop_front() {
        best = best.min(sys.min_cost(&grid.node(v)));
        for &w in &edges[v] {
            if !seen[w] {
                seen[w] = true;
                queue.push_back(w);
            }
        }
    }
    Ok(best)
}

/// `I` at every masked node, via the condensation of the reachability graph.
pub fn reachable_values<S: Scalar>(sys: &ControlSystem<S>, grid: Arc<Grid<S>>) -> Result<GridFunction<S>> {
    let edges = reachability_graph(sys, &grid)?;
    let cost = node_costs(sys, &grid);
    let mut g = DiGraph::<(), ()>::with_capacity(grid.len(), 0);
    let nodes: Vec<_> = (0..grid.len()).map(|_| g.add_node(())).collect();
    for (i, out) in edges.iter().enumerate() {
        for &j in out {
            g.add_edge(nodes[i], nodes[j], ());
        }
    }
    // components come out sinks first
    let mut value = vec![S::infinity(); grid.len()];
    for comp in tarjan_scc(&g) {
        let mut best = S::infinity();
        for &n in &comp {
            let i = n.index();
            best = best.min(cost[i]);
            for &j in &edges[i] {
                best = best.min(value[j]);
            }
        }
        for &n in &comp {
            value[n.index()] = best;
        }
    }
    GridFunction::new(grid, value)
}
