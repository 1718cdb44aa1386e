//! Multichain policy iteration for the lexicographic gain–bias system
//!
//! ```text
//! η_i       = min_{a ∈ A_i}  P_i^a η
//! η_i + u_i = min_{a ∈ Ā_i} (r_i^a + P_i^a u)
//! ```
//!
//! where `Ā_i` is the set of actions attaining the first minimum.

use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::ValueVector;
use crate::linalg::Dense;
use crate::operators::{near_minimal, MdpModel, DEFAULT_ARGMIN_TOL};
use crate::scalar::Scalar;

/// Solution of the lexicographic system.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(bound = "S: Scalar")]
pub struct GainBias<S> {
    /// Gain (optimal cost per step).
    pub eta: ValueVector<S>,
    /// Bias, shifted along `eta` so that `s ↦ u + sη` is sub-invariant.
    pub u: ValueVector<S>,
    /// Actions attaining `min_a P_i^a η` within the argmin tolerance.
    pub achieving_sets: Vec<Vec<usize>>,
    /// Final stationary policy.
    pub policy: Vec<usize>,
    /// Shift `s_0 ≥ 0` already added: `u = u_normalized + s_0 η`.
    pub shift: S,
    pub iterations: usize,
}

#[derive(Clone, Debug)]
pub struct GainBiasOptions<S> {
    /// Improvement threshold on the bias step, relative to `1 + max|r|`.
    pub tol: S,
    /// Absolute tolerance for the gain step and for `Ā_i`.
    pub argmin_tol: S,
    pub initial_policy: Option<Vec<usize>>,
}

impl<S: Scalar> Default for GainBiasOptions<S> {
    fn default() -> Self {
        Self {
            tol: S::lit(1e-10),
            argmin_tol: S::lit(DEFAULT_ARGMIN_TOL),
            initial_policy: None,
        }
    }
}

/// Gain and bias of one stationary policy, bias pinned to zero at the
/// lowest-indexed state of every recurrent class.
#[derive(Clone, Debug)]
pub struct PolicyEvaluation<S> {
    pub gain: Vec<S>,
    pub bias: Vec<S>,
    pub recurrent_classes: Vec<Vec<usize>>,
}

/// Closed communicating classes of the support graph of `p`, each sorted,
/// ordered by smallest member.
pub(crate) fn recurrent_classes<S: Scalar>(p: &[Vec<S>]) -> Vec<Vec<usize>> {
    let n = p.len();
    let reach: Vec<Vec<bool>> = (0..n)
        .map(|s| {
            let mut seen = vec![false; n];
            let mut stack = vec![s];
            seen[s] = true;
            while let Some(i) = stack.pop() {
                for j in 0..n {
                    if p[i][j] > S::zero() && !seen[j] {
                        seen[j] = true;
                        stack.push(j);
                    }
                }
            }
            seen
        })
        .collect();
    let mut assigned = vec![false; n];
    let mut classes = Vec::new();
    for i in 0..n {
        if assigned[i] {
            continue;
        }
        let recurrent = (0..n).all(|j| !reach[i][j] || reach[j][i]);
        if recurrent {
            let class: Vec<usize> = (0..n).filter(|&j| reach[i][j]).collect();
            for &j in &class {
                assigned[j] = true;
            }
            classes.push(class);
        }
    }
    classes
}

/// Solves `g = P g`, `u + g = r + P u` for one policy.
pub fn evaluate_policy<S: Scalar>(r: &[S], p: &[Vec<S>]) -> Result<PolicyEvaluation<S>> {
    let n = r.len();
    let classes = recurrent_classes(p);
    let mut gain = vec![S::zero(); n];
    let mut bias = vec![S::zero(); n];
    let mut recurrent = vec![false; n];
    for class in &classes {
        // unknowns: g (slot 0) and u_j for j in class \ {ref} (slots 1..)
        let m = class.len();
        let slot = |j: usize| class.iter().position(|&c| c == j).expect("member");
        let mut a = Dense::zeros(m);
        let mut b = vec![S::zero(); m];
        for (row, &i) in class.iter().enumerate() {
            a[(row, 0)] = S::one();
            b[row] = r[i];
            if row > 0 {
                a[(row, row)] += S::one();
            }
            for &j in class {
                let k = slot(j);
                if k > 0 {
                    a[(row, k)] -= p[i][j];
                }
            }
        }
        let sol = a.solve(&b)?;
        for (k, &j) in class.iter().enumerate() {
            gain[j] = sol[0];
            bias[j] = if k == 0 { S::zero() } else { sol[k] };
            recurrent[j] = true;
        }
    }
    let transient: Vec<usize> = (0..n).filter(|&i| !recurrent[i]).collect();
    if !transient.is_empty() {
        let t = transient.len();
        let mut a = Dense::identity(t);
        for (ri, &i) in transient.iter().enumerate() {
            for (ci, &j) in transient.iter().enumerate() {
                a[(ri, ci)] -= p[i][j];
            }
        }
        let from_recurrent =
            |i: usize, vals: &[S]| -> S { (0..n).filter(|&j| recurrent[j]).map(|j| p[i][j] * vals[j]).sum() };
        let rhs: Vec<S> = transient.iter().map(|&i| from_recurrent(i, &gain)).collect();
        let g_t = a.solve(&rhs)?;
        for (k, &i) in transient.iter().enumerate() {
            gain[i] = g_t[k];
        }
        let rhs: Vec<S> = transient
            .iter()
            .map(|&i| r[i] - gain[i] + from_recurrent(i, &bias))
            .collect();
        let u_t = a.solve(&rhs)?;
        for (k, &i) in transient.iter().enumerate() {
            bias[i] = u_t[k];
        }
    }
    Ok(PolicyEvaluation {
        gain,
        bias,
        recurrent_classes: classes,
    })
}

pub fn solve_gain_bias<S: Scalar>(m: &MdpModel<S>, tol: S) -> Result<GainBias<S>> {
    solve_gain_bias_with(
        m,
        &GainBiasOptions {
            tol,
            ..GainBiasOptions::default()
        },
    )
}

pub fn solve_gain_bias_with<S: Scalar>(m: &MdpModel<S>, opts: &GainBiasOptions<S>) -> Result<GainBias<S>> {
    if !(opts.tol > S::zero()) || !(opts.argmin_tol > S::zero()) {
        return Err(Error::InvalidArgument("tolerances must be positive".into()));
    }
    let n = m.n_states();
    let mut policy = match &opts.initial_policy {
        Some(p) => {
            m.check_policy(p)?;
            p.clone()
        }
        None => vec![0; n],
    };
    let bias_tol = opts.tol * (S::one() + m.max_abs_cost());
    let delta = opts.argmin_tol;
    let limit = m.policy_count().min(1_000_000) as usize + 1;
    let mut seen: HashSet<Vec<usize>> = HashSet::new();
    let mut iterations = 0;
    let eval = loop {
        iterations += 1;
        if iterations > limit || !seen.insert(policy.clone()) {
            return Err(Error::PolicyCycle(iterations));
        }
        let (r, p) = m.policy_system(&policy);
        let eval = evaluate_policy(&r, &p)?;

        // gain step: states where some action strictly lowers P η
        let mut changed = false;
        for i in 0..n {
            let q: Vec<S> = m.actions(i).iter().map(|a| a.expect(&eval.gain)).collect();
            let best = q.iter().copied().fold(S::infinity(), S::min);
            if q[policy[i]] > best + delta {
                policy[i] = near_minimal(q.into_iter(), delta)[0];
                changed = true;
            }
        }
        if changed {
            continue;
        }

        // bias step within the gain-achieving sets
        for i in 0..n {
            let acts = m.actions(i);
            let achieving = near_minimal(acts.iter().map(|a| a.expect(&eval.gain)), delta);
            let z: Vec<S> = achieving.iter().map(|&a| acts[a].value(&eval.bias)).collect();
            let best = z.iter().copied().fold(S::infinity(), S::min);
            let current = acts[policy[i]].value(&eval.bias);
            if current > best + bias_tol {
                let k = near_minimal(z.into_iter(), bias_tol)[0];
                policy[i] = achieving[k];
                changed = true;
            }
        }
        if !changed {
            break eval;
        }
    };

    let eta = ValueVector::from_raw(eval.gain);
    let mut u = eval.bias;
    let achieving_sets: Vec<Vec<usize>> = (0..n)
        .map(|i| near_minimal(m.actions(i).iter().map(|a| a.expect(eta.as_slice())), delta))
        .collect();

    // s_0 such that r + P(u + s_0 η) ≥ u + (s_0 + 1)η also for actions outside Ā_i
    let mut shift = S::zero();
    for i in 0..n {
        for (a, rec) in m.actions(i).iter().enumerate() {
            if achieving_sets[i].contains(&a) {
                continue;
            }
            let slope = rec.expect(eta.as_slice()) - eta[i];
            let deficit = u[i] + eta[i] - rec.value(&u);
            if deficit > S::zero() && slope > S::zero() {
                shift = shift.max(deficit / slope);
            }
        }
    }
    if shift > S::zero() {
        for (ui, &e) in u.iter_mut().zip(eta.iter()) {
            *ui += shift * e;
        }
    }

    Ok(GainBias {
        eta,
        u: ValueVector::from_raw(u),
        achieving_sets,
        policy,
        shift,
        iterations,
    })
}
