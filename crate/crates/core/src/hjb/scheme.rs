//! Semi-Lagrangian discretization of `λV + H(x, −∇V) = 0`.

use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::control::ControlSystem;
use crate::error::{Error, Result};
use crate::grid::{Grid, GridFunction};
use crate::scalar::Scalar;

/// Golden-section steps when refining a 1-D action between samples.
const GOLDEN_STEPS: usize = 40;

#[derive(Clone, Debug)]
pub struct HjbOptions<S> {
    /// Stop once the a-posteriori bound on `‖λV − λV*‖∞` is below this.
    pub tol: S,
    pub max_sweeps: usize,
    /// For 1-D action samples, refine the best sample by golden-section
    /// search between its neighbours.
    pub refine_actions: bool,
    /// Feet projected farther than `projection_factor · h²` are counted and
    /// logged as warnings.
    pub projection_factor: S,
}

impl<S: Scalar> HjbOptions<S> {
    pub fn new(tol: S) -> Self {
        Self {
            tol,
            max_sweeps: 200_000,
            refine_actions: true,
            projection_factor: S::one(),
        }
    }
}

impl<S: Scalar> Default for HjbOptions<S> {
    fn default() -> Self {
        Self::new(S::lit(1e-8))
    }
}

/// Metadata written next to an exported value function.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolveMetadata {
    pub lambda: f64,
    pub iterations: usize,
    pub residual: f64,
    pub h: f64,
}

#[derive(Clone, Debug)]
pub struct HjbSolveResult<S> {
    pub lambda: S,
    pub h: S,
    pub dt: S,
    /// `V_λ` at the masked nodes.
    pub value: GridFunction<S>,
    /// Gauss–Seidel sweeps performed.
    pub iterations: usize,
    /// `λ · sup |S(V) − V|`, with `S` the (Jacobi) scheme operator.
    pub residual: S,
    /// `residual / (λΔt)`, a bound on `‖λV − λV*‖∞` for the scheme's fixed point `V*`.
    pub error_bound: S,
    /// Minimizing action at each node.
    pub actions: Vec<Vec<S>>,
    pub max_projection: S,
    pub projection_warnings: usize,
    /// `0 ≤ λV ≤ 1` at every node, up to `tol`.
    pub within_bounds: bool,
}

impl<S: Scalar> HjbSolveResult<S> {
    /// `λV_λ`.
    pub fn rescaled(&self) -> GridFunction<S> {
        let l = self.lambda;
        self.value.map(|v| l * v)
    }

    pub fn metadata(&self) -> SolveMetadata {
        SolveMetadata {
            lambda: self.lambda.as_f64(),
            iterations: self.iterations,
            residual: self.residual.as_f64(),
            h: self.h.as_f64(),
        }
    }
}

struct Scratch<S> {
    x: Vec<S>,
    fx: Vec<S>,
    y: Vec<S>,
    stencil: Vec<(usize, S)>,
    action: Vec<S>,
}

impl<S: Scalar> Scratch<S> {
    fn new(d: usize, m: usize) -> Self {
        Self {
            x: vec![S::zero(); d],
            fx: vec![S::zero(); d],
            y: vec![S::zero(); d],
            stencil: Vec::with_capacity(1 << d),
            action: vec![S::zero(); m],
        }
    }
}

/// The scheme operator
/// `S(V)(xᵢ) = min_a [Δt·L(xᵢ,a) + (1 − λΔt)·Interp V(P(xᵢ + Δt·f(xᵢ,a)))]`
/// with `Δt = h/(C+1)` and `P` the projection onto Ω̄.
pub struct SemiLagrangian<'a, S> {
    sys: &'a ControlSystem<S>,
    grid: &'a Grid<S>,
    lambda: S,
    dt: S,
    beta: S,
    /// Sorted 1-D action samples, when refinement applies.
    line_actions: Option<Vec<S>>,
}

impl<'a, S: Scalar> SemiLagrangian<'a, S> {
    pub fn new(sys: &'a ControlSystem<S>, grid: &'a Grid<S>, lambda: S, refine_actions: bool) -> Result<Self> {
        if !(lambda > S::zero() && lambda.is_finite()) {
            return Err(Error::InvalidArgument("lambda must be positive".into()));
        }
        if grid.dim() != sys.dim() {
            return Err(Error::GridMismatch(format!(
                "grid has dimension {}, system {}",
                grid.dim(),
                sys.dim()
            )));
        }
        let dt = grid.h() / (sys.lipschitz_f + S::one());
        if lambda * dt >= S::one() {
            return Err(Error::Cfl((lambda * dt).as_f64()));
        }
        let line_actions = (refine_actions && sys.action_dim() == 1 && sys.actions().len() > 1)
            .then(|| sys.actions().iter().map(|a| a[0]).collect::<Vec<S>>())
            .filter(|a| a.windows(2).all(|w| w[0] < w[1]));
        Ok(Self {
            sys,
            grid,
            lambda,
            dt,
            beta: S::one() - lambda * dt,
            line_actions,
        })
    }

    pub fn dt(&self) -> S {
        self.dt
    }

    pub fn lambda(&self) -> S {
        self.lambda
    }

    fn scratch(&self) -> Scratch<S> {
        Scratch::new(self.grid.dim(), self.sys.action_dim())
    }

    /// Fills `sc.stencil` with the foot of node `i` (at `sc.x`) under `a`.
    /// Returns the projection distance.
    fn foot(&self, a: &[S], sc: &mut Scratch<S>) -> S {
        self.sys.velocity_into(&sc.x, a, &mut sc.fx);
        for k in 0..sc.y.len() {
            sc.y[k] = sc.x[k] + self.dt * sc.fx[k];
        }
        let moved = self.sys.domain().project(&mut sc.y);
        self.grid.stencil(&sc.y, &mut sc.stencil);
        moved
    }

    /// Value of action `a` at node `i`. With `local`, solves for the node's own
    /// value instead of reading it from `v`.
    fn action_value(&self, i: usize, a: &[S], v: &[S], local: bool, sc: &mut Scratch<S>) -> S {
        self.foot(a, sc);
        let cost = self.dt * self.sys.cost(&sc.x, a);
        if local {
            let mut own = S::zero();
            let mut rest = S::zero();
            for &(j, w) in &sc.stencil {
                if j == i {
                    own += w;
                } else {
                    rest += w * v[j];
                }
            }
            (cost + self.beta * rest) / (S::one() - self.beta * own)
        } else {
            cost + self.beta * sc.stencil.iter().map(|&(j, w)| w * v[j]).sum::<S>()
        }
    }

    /// Minimal action value at node `i`; the minimizer is left in `sc.action`.
    fn node_update(&self, i: usize, v: &[S], local: bool, sc: &mut Scratch<S>) -> S {
        self.grid.node_into(i, &mut sc.x);
        let actions = self.sys.actions();
        let mut best = S::infinity();
        let mut best_k = 0;
        for (k, a) in actions.iter().enumerate() {
            let val = self.action_value(i, a, v, local, sc);
            if val < best {
                best = val;
                best_k = k;
            }
        }
        sc.action.copy_from_slice(&actions[best_k]);
        if let Some(line) = &self.line_actions {
            let lo = line[best_k.saturating_sub(1)];
            let hi = line[(best_k + 1).min(line.len() - 1)];
            let (a, val) = self.golden(i, lo, hi, v, local, sc);
            if val < best {
                best = val;
                sc.action[0] = a;
            }
        }
        best
    }

    fn golden(&self, i: usize, mut lo: S, mut hi: S, v: &[S], local: bool, sc: &mut Scratch<S>) -> (S, S) {
        let r = (S::lit(5.0).sqrt() - S::one()) * S::half();
        let eval = |a: S, sc: &mut Scratch<S>| self.action_value(i, &[a], v, local, sc);
        let mut c = hi - r * (hi - lo);
        let mut d = lo + r * (hi - lo);
        let mut fc = eval(c, sc);
        let mut fd = eval(d, sc);
        for _ in 0..GOLDEN_STEPS {
            if fc <= fd {
                hi = d;
                d = c;
                fd = fc;
                c = hi - r * (hi - lo);
                fc = eval(c, sc);
            } else {
                lo = c;
                c = d;
                fc = fd;
                d = lo + r * (hi - lo);
                fd = eval(d, sc);
            }
        }
        if fc <= fd {
            (c, fc)
        } else {
            (d, fd)
        }
    }

    /// One application of the scheme operator, in parallel over nodes.
    pub fn apply(&self, v: &[S]) -> Vec<S> {
        self.apply_with_actions(v).into_iter().map(|(x, _)| x).collect()
    }

    fn apply_with_actions(&self, v: &[S]) -> Vec<(S, Vec<S>)> {
        (0..self.grid.len())
            .into_par_iter()
            .map_init(
                || self.scratch(),
                |sc, i| {
                    let val = self.node_update(i, v, false, sc);
                    (val, sc.action.clone())
                },
            )
            .collect()
    }

    /// Largest foot projection distance over nodes and sampled actions, and
    /// how many exceed `bound`.
    fn projection_stats(&self, bound: S) -> (S, usize) {
        (0..self.grid.len())
            .into_par_iter()
            .map_init(
                || self.scratch(),
                |sc, i| {
                    self.grid.node_into(i, &mut sc.x);
                    self.sys.actions().iter().fold((S::zero(), 0), |(m, n), a| {
                        let d = self.foot(a, sc);
                        (m.max(d), n + usize::from(d > bound))
                    })
                },
            )
            .reduce(|| (S::zero(), 0), |a, b| (a.0.max(b.0), a.1 + b.1))
    }
}

/// Gap below which `S(V) − V` is indistinguishable from rounding.
fn rounding_floor<S: Scalar>(v: &[S]) -> S {
    let scale = v.iter().fold(S::one(), |m, x| m.max(x.abs()));
    S::lit(8.0) * S::epsilon() * scale
}

/// Solves the discrete HJB equation from the default start `min_a L / λ`.
pub fn solve_hjb<S: Scalar>(
    sys: &ControlSystem<S>,
    grid: Arc<Grid<S>>,
    lambda: S,
    opts: &HjbOptions<S>,
) -> Result<HjbSolveResult<S>> {
    solve_hjb_from(sys, grid, lambda, opts, None)
}

/// Gauss–Seidel sweeps with node-local solves, cycling through the `2^d`
/// axis orderings. Convergence is declared when `sup|S(V) − V| / Δt ≤ tol`,
/// which bounds the distance of `λV` to the exact discrete solution, or when
/// the gap has reached the rounding level of `V`.
pub fn solve_hjb_from<S: Scalar>(
    sys: &ControlSystem<S>,
    grid: Arc<Grid<S>>,
    lambda: S,
    opts: &HjbOptions<S>,
    init: Option<&[S]>,
) -> Result<HjbSolveResult<S>> {
    let scheme = SemiLagrangian::new(sys, &grid, lambda, opts.refine_actions)?;
    if !(opts.tol > S::zero()) {
        return Err(Error::InvalidArgument("tolerance must be positive".into()));
    }
    let h = grid.h();
    let (max_projection, projection_warnings) = scheme.projection_stats(opts.projection_factor * h * h);
    if projection_warnings > 0 {
        log::warn!(
            "{}: {projection_warnings} characteristic feet projected farther than {}·h² (max {})",
            sys.name,
            opts.projection_factor,
            max_projection
        );
    }
    let mut v: Vec<S> = match init {
        Some(v0) if v0.len() != grid.len() => {
            return Err(Error::LengthMismatch {
                expected: grid.len(),
                got: v0.len(),
            })
        }
        Some(v0) => v0.to_vec(),
        None => (0..grid.len()).map(|i| sys.min_cost(&grid.node(i)) / lambda).collect(),
    };
    let orders = grid.sweep_orders();
    let mut sc = scheme.scratch();
    let mut sweeps = 0;
    let mut last = (S::infinity(), Vec::new());
    while sweeps < opts.max_sweeps {
        for order in orders.iter().take(opts.max_sweeps - sweeps) {
            for &i in order {
                v[i] = scheme.node_update(i, &v, true, &mut sc);
            }
            sweeps += 1;
        }
        let update = scheme.apply_with_actions(&v);
        let gap = update
            .iter()
            .zip(&v)
            .fold(S::zero(), |m, ((s, _), &x)| m.max((*s - x).abs()));
        last = (gap, update.into_iter().map(|(_, a)| a).collect());
        if gap / scheme.dt <= opts.tol || gap <= rounding_floor(&v) {
            break;
        }
    }
    let (gap, actions) = last;
    let residual = lambda * gap;
    let error_bound = gap / scheme.dt;
    if !(error_bound <= opts.tol || gap <= rounding_floor(&v)) {
        return Err(Error::NotConverged {
            iterations: sweeps,
            residual: residual.as_f64(),
            best: v.iter().map(|x| x.as_f64()).collect(),
        });
    }
    let slack = opts.tol + S::lit(1e-12);
    let within_bounds = v
        .iter()
        .all(|&x| lambda * x >= -slack && lambda * x <= S::one() + slack);
    debug_assert!(within_bounds, "discrete comparison bound violated");
    Ok(HjbSolveResult {
        lambda,
        h,
        dt: scheme.dt,
        value: GridFunction::new(grid, v)?,
        iterations: sweeps,
        residual,
        error_bound,
        actions,
        max_projection,
        projection_warnings,
        within_bounds,
    })
}
