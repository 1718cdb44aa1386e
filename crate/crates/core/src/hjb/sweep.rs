//! The rescaled family `λV_λ` and its rate of convergence.

use std::sync::Arc;

use rayon::prelude::*;

use super::residual::reduced_residual;
use super::scheme::{solve_hjb_from, HjbOptions, HjbSolveResult};
use crate::control::ControlSystem;
use crate::error::{Error, Result};
use crate::grid::{same_grid, Grid, GridFunction};
use crate::scalar::Scalar;

#[derive(Clone, Debug)]
pub struct RescaledSweep<S> {
    pub solves: Vec<HjbSolveResult<S>>,
    /// `max_x h(x, −∇_h(λV_λ))` at the smallest λ.
    pub reduced_residual: S,
}

impl<S: Scalar> RescaledSweep<S> {
    /// `λV_λ` at the smallest λ.
    pub fn limit(&self) -> GridFunction<S> {
        self.solves.last().expect("sweep is nonempty").rescaled()
    }
}

pub(crate) fn check_lambdas<S: Scalar>(lambdas: &[S]) -> Result<()> {
    if lambdas.is_empty() {
        return Err(Error::Empty("lambda list"));
    }
    if lambdas.iter().any(|&l| !(l > S::zero() && l.is_finite())) {
        return Err(Error::InvalidArgument("lambdas must be positive".into()));
    }
    if lambdas.windows(2).any(|w| !(w[0] > w[1])) {
        return Err(Error::InvalidArgument("lambdas must be strictly decreasing".into()));
    }
    Ok(())
}

/// Solves for each λ in turn, warm-starting from `λ_prev V_prev / λ`. With
/// `parallel`, the solves run independently from cold starts instead.
pub fn rescaled_sweep<S: Scalar>(
    sys: &ControlSystem<S>,
    grid: Arc<Grid<S>>,
    lambdas: &[S],
    opts: &HjbOptions<S>,
    parallel: bool,
) -> Result<RescaledSweep<S>> {
    check_lambdas(lambdas)?;
    let solves = if parallel {
        lambdas
            .par_iter()
            .map(|&l| solve_hjb_from(sys, grid.clone(), l, opts, None))
            .collect::<Result<Vec<_>>>()?
    } else {
        let mut out: Vec<HjbSolveResult<S>> = Vec::with_capacity(lambdas.len());
        for &l in lambdas {
            let init = out.last().map(|prev| {
                let ratio = prev.lambda / l;
                prev.value.values().iter().map(|&v| v * ratio).collect::<Vec<S>>()
            });
            out.push(solve_hjb_from(sys, grid.clone(), l, opts, init.as_deref())?);
        }
        out
    };
    let reduced = reduced_residual(sys, &solves.last().expect("nonempty").rescaled())?;
    Ok(RescaledSweep {
        solves,
        reduced_residual: reduced,
    })
}

#[derive(Clone, Debug)]
pub struct RateRow<S> {
    pub lambda: S,
    /// `w_λ = (λV_λ − u)/λ`.
    pub w_lambda: GridFunction<S>,
    /// `‖λV_λ − u‖∞`.
    pub rescaled_gap: S,
    /// `‖w_λ − w‖∞`.
    pub deviation: S,
    /// Smallest `C` with `‖w_λ − w‖∞ ≤ ‖w‖∞ + C·h/λ`.
    pub c_scheme: S,
}

#[derive(Clone, Debug)]
pub struct RateTable<S> {
    pub w_sup: S,
    pub h: S,
    pub rows: Vec<RateRow<S>>,
}

/// Compares `w_λ = (λV_λ − u)/λ` with the corrector `w` over a λ-sweep.
///
/// The two-sided bound `w − ‖w‖ ≤ w_λ ≤ w + ‖w‖` is exact for the continuous
/// problem; on the grid each row reports the scheme constant needed to close it.
pub fn rate_check<S: Scalar>(
    sys: &ControlSystem<S>,
    u: &GridFunction<S>,
    w: &GridFunction<S>,
    lambdas: &[S],
    opts: &HjbOptions<S>,
) -> Result<RateTable<S>> {
    same_grid(u.grid(), w.grid())?;
    let grid = u.grid().clone();
    let h = grid.h();
    let sweep = rescaled_sweep(sys, grid.clone(), lambdas, opts, false)?;
    let w_sup = w.sup_norm();
    let rows = sweep
        .solves
        .iter()
        .map(|s| {
            let lam = s.lambda;
            let vals: Vec<S> = s
                .value
                .values()
                .iter()
                .zip(u.values())
                .map(|(&v, &ui)| (lam * v - ui) / lam)
                .collect();
            let w_lambda = GridFunction::new(grid.clone(), vals)?;
            let deviation = w_lambda.dist(w)?;
            Ok(RateRow {
                lambda: lam,
                rescaled_gap: w_lambda.sup_norm() * lam,
                c_scheme: (deviation - w_sup).max(S::zero()) * lam / h,
                deviation,
                w_lambda,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(RateTable { w_sup, h, rows })
}
