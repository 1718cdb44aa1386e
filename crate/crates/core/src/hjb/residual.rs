//! Grid residuals of the limit systems, with upwind differences.

use serde::{Deserialize, Serialize};

use crate::control::ControlSystem;
use crate::error::{Error, Result};
use crate::grid::{same_grid, Grid, GridFunction};
use crate::scalar::Scalar;

/// `⟨f, ∇v⟩` at node `i`, each axis differenced on the side `f` points to
/// (the other side where that neighbour is missing).
pub(crate) fn upwind_derivative<S: Scalar>(grid: &Grid<S>, v: &[S], i: usize, f: &[S]) -> S {
    let h = grid.h();
    let mut acc = S::zero();
    for (k, &fk) in f.iter().enumerate() {
        if fk == S::zero() {
            continue;
        }
        let fwd = grid.neighbor(i, k, true);
        let bwd = grid.neighbor(i, k, false);
        let d = match (fk > S::zero(), fwd, bwd) {
            (true, Some(j), _) | (false, Some(j), None) => (v[j] - v[i]) / h,
            (false, _, Some(j)) | (true, None, Some(j)) => (v[i] - v[j]) / h,
            (_, None, None) => unreachable!("isolated axis"),
        };
        acc += fk * d;
    }
    acc
}

fn check_dims<S: Scalar>(sys: &ControlSystem<S>, fs: &[&GridFunction<S>]) -> Result<()> {
    let g = fs[0].grid();
    if g.dim() != sys.dim() {
        return Err(Error::GridMismatch(format!(
            "grid has dimension {}, system {}",
            g.dim(),
            sys.dim()
        )));
    }
    for f in &fs[1..] {
        same_grid(g, f.grid())?;
    }
    Ok(())
}

/// Nodes with a neighbour on at least one side along every axis; only there
/// is a one-sided gradient defined.
fn differentiable<S: Scalar>(grid: &Grid<S>, i: usize) -> bool {
    (0..grid.dim()).all(|k| grid.neighbor(i, k, true).is_some() || grid.neighbor(i, k, false).is_some())
}

/// Evaluates `g(⟨f,∇u⟩, ⟨f,∇w⟩, L)` per sampled action at every node where
/// differences are defined, and returns `max_a` of it per such node.
fn per_node_max<S: Scalar>(
    sys: &ControlSystem<S>,
    u: &GridFunction<S>,
    w: &GridFunction<S>,
    g: impl Fn(usize, S, S, S) -> S,
) -> Vec<S> {
    let grid = u.grid();
    let mut fx = vec![S::zero(); sys.dim()];
    let mut x = vec![S::zero(); sys.dim()];
    (0..grid.len())
        .filter(|&i| differentiable(grid, i))
        .map(|i| {
            grid.node_into(i, &mut x);
            sys.actions().iter().fold(S::neg_infinity(), |m, a| {
                sys.velocity_into(&x, a, &mut fx);
                let du = upwind_derivative(grid, u.values(), i, &fx);
                let dw = upwind_derivative(grid, w.values(), i, &fx);
                m.max(g(i, du, dw, sys.cost(&x, a)))
            })
        })
        .collect()
}

fn max_of<S: Scalar>(v: impl IntoIterator<Item = S>) -> S {
    v.into_iter().fold(S::neg_infinity(), S::max)
}

/// One-sided residuals of `h(x, −∇v) ≤ 0` and `v + H(x, −∇u) ≤ 0`.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct SystemHResiduals {
    pub res1: f64,
    pub res2: f64,
}

/// Residuals of `h(x,−∇u) = 0`, `u + H(x,−∇w) = 0`, `J(x,u,−∇u,−∇w) = 0`.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct SystemSResiduals {
    pub res1: f64,
    pub res2: f64,
    pub res3: f64,
}

impl SystemSResiduals {
    pub fn max(&self) -> f64 {
        self.res1.max(self.res2).max(self.res3)
    }
}

/// `res1 = max h(x, −∇_h v)`, `res2 = max [v + H(x, −∇_h u)]` over nodes.
pub fn check_system_h<S: Scalar>(
    sys: &ControlSystem<S>,
    u: &GridFunction<S>,
    v: &GridFunction<S>,
) -> Result<SystemHResiduals> {
    check_dims(sys, &[u, v])?;
    let vv = v.values();
    let r1 = per_node_max(sys, u, v, |_, _, dv, _| -dv);
    let r2 = per_node_max(sys, u, v, |i, du, _, l| vv[i] - du - l);
    Ok(SystemHResiduals {
        res1: max_of(r1).as_f64(),
        res2: max_of(r2).as_f64(),
    })
}

/// Sup-norm residuals of system (S) for the pair `(u, w)`.
pub fn check_system_s<S: Scalar>(
    sys: &ControlSystem<S>,
    u: &GridFunction<S>,
    w: &GridFunction<S>,
) -> Result<SystemSResiduals> {
    check_dims(sys, &[u, w])?;
    let uv = u.values();
    let r1 = per_node_max(sys, u, w, |_, du, _, _| -du);
    let r2 = per_node_max(sys, u, w, |i, _, dw, l| uv[i] - dw - l);
    let r3 = per_node_max(sys, u, w, |i, du, dw, l| (-du).min(uv[i] - dw - l));
    let sup = |r: Vec<S>| r.into_iter().fold(S::zero(), |m, x| m.max(x.abs())).as_f64();
    Ok(SystemSResiduals {
        res1: sup(r1),
        res2: sup(r2),
        res3: sup(r3),
    })
}

/// `max_x h(x, −∇_h v)`.
pub fn reduced_residual<S: Scalar>(sys: &ControlSystem<S>, v: &GridFunction<S>) -> Result<S> {
    check_dims(sys, &[v])?;
    Ok(max_of(per_node_max(sys, v, v, |_, dv, _, _| -dv)))
}

/// Lower bound `min_x J_λ(x, v_λ, w_λ, −∇v_λ, −∇w_λ) − min{0, λ w_λ(x)}` for a
/// discounted pair. Nonnegative values mean the supersolution inequality holds.
pub fn discounted_joint_residual<S: Scalar>(
    sys: &ControlSystem<S>,
    lambda: S,
    v: &GridFunction<S>,
    w: &GridFunction<S>,
) -> Result<S> {
    check_dims(sys, &[v, w])?;
    let (vv, wv) = (v.values(), w.values());
    let j = per_node_max(sys, v, w, |i, dv, dw, l| {
        (-dv - lambda * l + lambda * vv[i]).min(-dw - l + vv[i] + lambda * wv[i]) - S::zero().min(lambda * wv[i])
    });
    Ok(j.into_iter().fold(S::infinity(), S::min))
}
