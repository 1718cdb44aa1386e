//! α-sweeps of the rescaled discounted value `α v_α`.

use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::discounted::solve_discounted;
use super::halfline::{sup_director, HalfLine};
use crate::error::{Error, Result};
use crate::lattice::{leq_tol, ValueVector};
use crate::operators::{OperatorHandle, ShapleyOperator};
use crate::scalar::Scalar;

pub const CSV_HEADER: &str = "alpha,state,alpha_v_alpha,eta_ref,deviation";

#[derive(Clone, Debug)]
pub struct SweepOptions<S> {
    /// Absolute residual tolerance of each discounted solve.
    pub solve_tol: S,
    pub max_iter: usize,
    /// Slack in the one-sided comparison bounds.
    pub bound_tol: S,
}

impl<S: Scalar> SweepOptions<S> {
    /// Solver tolerance `1e-10 · (1 + max|r|)`, bound slack `1e-8`.
    pub fn for_operator(t: &OperatorHandle<S>) -> Self {
        let scale = t.mdp().map(|m| m.max_abs_cost()).unwrap_or_else(S::zero);
        Self {
            solve_tol: S::lit(1e-10) * (S::one() + scale),
            max_iter: 1_000_000,
            bound_tol: S::lit(1e-8),
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(bound = "S: Scalar")]
pub struct SweepRow<S> {
    pub alpha: S,
    pub alpha_v_alpha: ValueVector<S>,
    /// `‖α v_α − η_ref‖`, when a reference is known.
    pub deviation: Option<S>,
    /// `α v_α ≥ η − 2α‖u‖ − tol` for every reference `(u, η)`.
    pub lower_bound_ok: bool,
    /// `α v_α(T_u) ≥ η − tol` for every reference, where `T_u` is the
    /// conjugate by the base point, whose half-line is `s ↦ sη`.
    pub conjugated_bound_ok: bool,
    pub iterations: usize,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(bound = "S: Scalar")]
pub struct SweepTable<S> {
    pub eta_ref: Option<ValueVector<S>>,
    pub rows: Vec<SweepRow<S>>,
}

impl<S: Scalar> SweepTable<S> {
    pub fn verdict(&self) -> bool {
        self.rows.iter().all(|r| r.lower_bound_ok && r.conjugated_bound_ok)
    }

    /// One line per `(alpha, state)`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from(CSV_HEADER);
        out.push('\n');
        for row in &self.rows {
            for (i, &av) in row.alpha_v_alpha.iter().enumerate() {
                let (eta, dev) = match &self.eta_ref {
                    Some(e) => (e[i], (av - e[i]).abs()),
                    None => (S::nan(), S::nan()),
                };
                let _ = writeln!(out, "{},{},{},{},{}", row.alpha, i, av, eta, dev);
            }
        }
        out
    }
}

/// One parsed CSV record.
#[derive(Clone, Debug, PartialEq)]
pub struct SweepRecord {
    pub alpha: f64,
    pub state: usize,
    pub alpha_v_alpha: f64,
    pub eta_ref: f64,
    pub deviation: f64,
}

pub fn parse_sweep_csv(text: &str) -> Result<Vec<SweepRecord>> {
    let mut lines = text.lines();
    match lines.next() {
        Some(h) if h.trim() == CSV_HEADER => {}
        other => return Err(Error::Parse(format!("bad header {other:?}"))),
    }
    lines
        .filter(|l| !l.trim().is_empty())
        .map(|line| {
            let f: Vec<&str> = line.split(',').collect();
            if f.len() != 5 {
                return Err(Error::Parse(format!("expected 5 fields: {line}")));
            }
            let num = |s: &str| s.trim().parse::<f64>().map_err(|e| Error::Parse(format!("{s}: {e}")));
            Ok(SweepRecord {
                alpha: num(f[0])?,
                state: f[1]
                    .trim()
                    .parse()
                    .map_err(|e| Error::Parse(format!("{}: {e}", f[1])))?,
                alpha_v_alpha: num(f[2])?,
                eta_ref: num(f[3])?,
                deviation: num(f[4])?,
            })
        })
        .collect()
}

/// Solves at every α (in parallel) and checks the one-sided comparison bound
/// against every supplied sub-invariant half-line.
pub fn alpha_sweep<S: Scalar>(
    t: &OperatorHandle<S>,
    alphas: &[S],
    references: &[HalfLine<S>],
    opts: &SweepOptions<S>,
) -> Result<SweepTable<S>> {
    if alphas.is_empty() {
        return Err(Error::Empty("alpha list"));
    }
    for w in alphas.windows(2) {
        if !(w[0] > w[1]) {
            return Err(Error::InvalidArgument("alphas must be strictly decreasing".into()));
        }
    }
    if alphas.iter().any(|&a| !(a > S::zero() && a < S::one())) {
        return Err(Error::InvalidArgument("alphas must lie in (0,1)".into()));
    }
    let eta_ref = if references.is_empty() {
        None
    } else {
        Some(sup_director(references)?)
    };
    let conjugates: Vec<OperatorHandle<S>> = references.iter().map(|h| t.conjugate(&h.base)).collect::<Result<_>>()?;
    let rows = alphas
        .par_iter()
        .map(|&alpha| {
            let sol = solve_discounted(t, alpha, opts.solve_tol, opts.max_iter)?;
            let av = sol.v_alpha.scale(alpha);
            let mut lower_bound_ok = true;
            let mut conjugated_bound_ok = true;
            for (h, tu) in references.iter().zip(&conjugates) {
                let slack = S::two() * alpha * h.base.sup_norm()? + opts.bound_tol;
                lower_bound_ok &= leq_tol(&h.director, &av, slack)?;
                let cu = solve_discounted(tu, alpha, opts.solve_tol, opts.max_iter)?;
                conjugated_bound_ok &= leq_tol(&h.director, &cu.v_alpha.scale(alpha), opts.bound_tol)?;
            }
            let deviation = match &eta_ref {
                Some(e) => Some(av.dist(e)?),
                None => None,
            };
            Ok(SweepRow {
                alpha,
                alpha_v_alpha: av,
                deviation,
                lower_bound_ok,
                conjugated_bound_ok,
                iterations: sol.iterations,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SweepTable { eta_ref, rows })
}
