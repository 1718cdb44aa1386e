//! Finite Markov decision processes and their Bellman operators
//! `T_i(x) = min_{a ∈ A_i} (r_i^a + P_i^a x)`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::{check_len, ValueVector};
use crate::scalar::Scalar;

/// Absolute tolerance defining the achieving action sets.
pub const DEFAULT_ARGMIN_TOL: f64 = 1e-8;

/// Row sums farther than this from one are rejected; closer ones are renormalized.
pub const ROW_SUM_TOL: f64 = 1e-12;

/// State counts above this evaluate the operator in parallel.
const PAR_THRESHOLD: usize = 512;

/// One action available in a state: immediate cost and sparse transition row.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "S: Scalar")]
pub struct ActionRecord<S> {
    pub cost: S,
    /// `(next state, probability)` pairs, sorted by state, no duplicates.
    pub row: Vec<(usize, S)>,
}

impl<S: Scalar> ActionRecord<S> {
    pub fn new(cost: S, row: Vec<(usize, S)>) -> Self {
        Self { cost, row }
    }

    /// Deterministic move to `next`.
    pub fn to(cost: S, next: usize) -> Self {
        Self::new(cost, vec![(next, S::one())])
    }

    /// `P_i^a x`.
    #[inline]
    pub fn expect(&self, x: &[S]) -> S {
        self.row.iter().map(|&(j, p)| p * x[j]).sum()
    }

    /// `T_i^a(x) = r_i^a + P_i^a x`.
    #[inline]
    pub fn value(&self, x: &[S]) -> S {
        self.cost + self.expect(x)
    }
}

#[derive(Deserialize)]
#[serde(bound = "S: Scalar")]
struct RawModel<S> {
    n_states: usize,
    actions: Vec<Vec<ActionRecord<S>>>,
}

/// Validated finite MDP.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawModel<S>", bound = "S: Scalar")]
pub struct MdpModel<S> {
    n_states: usize,
    actions: Vec<Vec<ActionRecord<S>>>,
}

impl<S: Scalar> TryFrom<RawModel<S>> for MdpModel<S> {
    type Error = Error;
    fn try_from(raw: RawModel<S>) -> Result<Self> {
        MdpModel::new(raw.n_states, raw.actions)
    }
}

impl<S: Scalar> MdpModel<S> {
    /// Validates rows (nonnegative, sum to one within [`ROW_SUM_TOL`]) and
    /// renormalizes them exactly.
    pub fn new(n_states: usize, mut actions: Vec<Vec<ActionRecord<S>>>) -> Result<Self> {
        if n_states == 0 {
            return Err(Error::InvalidModel("n_states must be positive".into()));
        }
        if actions.len() != n_states {
            return Err(Error::InvalidModel(format!(
                "{} action lists for {} states",
                actions.len(),
                n_states
            )));
        }
        let sum_tol = S::lit(ROW_SUM_TOL).max(S::lit(4.0) * S::epsilon());
        for (i, acts) in actions.iter_mut().enumerate() {
            if acts.is_empty() {
                return Err(Error::InvalidModel(format!("state {i} has no action")));
            }
            for (a, rec) in acts.iter_mut().enumerate() {
                if !rec.cost.is_finite() {
                    return Err(Error::InvalidModel(format!("state {i} action {a}: cost")));
                }
                rec.row.sort_by_key(|&(j, _)| j);
                let mut merged: Vec<(usize, S)> = Vec::with_capacity(rec.row.len());
                for &(j, p) in &rec.row {
                    if j >= n_states {
                        return Err(Error::InvalidModel(format!(
                            "state {i} action {a}: successor {j} out of range"
                        )));
                    }
                    if !(p >= S::zero()) || !p.is_finite() {
                        return Err(Error::InvalidModel(format!(
                            "state {i} action {a}: probability {p} is not nonnegative"
                        )));
                    }
                    match merged.last_mut() {
                        Some(last) if last.0 == j => last.1 += p,
                        _ => merged.push((j, p)),
                    }
                }
                merged.retain(|&(_, p)| p > S::zero());
                let total: S = merged.iter().map(|&(_, p)| p).sum();
                if (total - S::one()).abs() > sum_tol {
                    return Err(Error::InvalidModel(format!(
                        "state {i} action {a}: row sums to {total}"
                    )));
                }
                for e in &mut merged {
                    e.1 /= total;
                }
                rec.row = merged;
            }
        }
        Ok(Self { n_states, actions })
    }

    /// One state, one action, cost `c`, self-loop: `T(x) = x + c`.
    pub fn single_state(c: S) -> Self {
        Self::new(1, vec![vec![ActionRecord::to(c, 0)]]).expect("valid model")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn n_states(&self) -> usize {
        self.n_states
    }

    pub fn actions(&self, i: usize) -> &[ActionRecord<S>] {
        &self.actions[i]
    }

    pub fn action_counts(&self) -> Vec<usize> {
        self.actions.iter().map(Vec::len).collect()
    }

    /// Number of deterministic stationary policies, saturating.
    pub fn policy_count(&self) -> u128 {
        self.actions
            .iter()
            .fold(1u128, |acc, a| acc.saturating_mul(a.len() as u128))
    }

    /// `max |r_i^a|`.
    pub fn max_abs_cost(&self) -> S {
        self.actions
            .iter()
            .flatten()
            .map(|a| a.cost.abs())
            .fold(S::zero(), S::max)
    }

    fn per_state<F>(&self, f: F) -> ValueVector<S>
    where
        F: Fn(usize) -> S + Sync + Send,
    {
        let out: Vec<S> = if self.n_states >= PAR_THRESHOLD {
            (0..self.n_states).into_par_iter().map(&f).collect()
        } else {
            (0..self.n_states).map(f).collect()
        };
        ValueVector::from_raw(out)
    }

    /// Bellman operator.
    pub fn apply(&self, x: &ValueVector<S>) -> Result<ValueVector<S>> {
        check_len(self.n_states, x.len())?;
        let xs = x.as_slice();
        Ok(self.per_state(|i| self.actions[i].iter().map(|a| a.value(xs)).fold(S::infinity(), S::min)))
    }

    /// Recession operator `T̂_i(y) = min_a P_i^a y`.
    pub fn recession(&self, y: &ValueVector<S>) -> Result<ValueVector<S>> {
        check_len(self.n_states, y.len())?;
        let ys = y.as_slice();
        Ok(self.per_state(|i| self.actions[i].iter().map(|a| a.expect(ys)).fold(S::infinity(), S::min)))
    }

    /// Per state, the actions whose value `r + P x` is within `tol` of the minimum.
    pub fn argmin_sets(&self, x: &ValueVector<S>, tol: S) -> Result<Vec<Vec<usize>>> {
        check_len(self.n_states, x.len())?;
        let xs = x.as_slice();
        Ok((0..self.n_states)
            .map(|i| near_minimal(self.actions[i].iter().map(|a| a.value(xs)), tol))
            .collect())
    }

    /// Same MDP with costs `r_i^a + P_i^a u − u_i`: the operator `x ↦ −u + T(u + x)`.
    pub fn conjugate(&self, u: &ValueVector<S>) -> Result<Self> {
        check_len(self.n_states, u.len())?;
        let us = u.as_slice();
        let actions = self
            .actions
            .iter()
            .enumerate()
            .map(|(i, acts)| {
                acts.iter()
                    .map(|a| ActionRecord::new(a.cost + a.expect(us) - us[i], a.row.clone()))
                    .collect()
            })
            .collect();
        Ok(Self {
            n_states: self.n_states,
            actions,
        })
    }

    /// Costs and dense transition matrix of a deterministic stationary policy.
    pub fn policy_system(&self, policy: &[usize]) -> (Vec<S>, Vec<Vec<S>>) {
        let n = self.n_states;
        let mut p = vec![vec![S::zero(); n]; n];
        let mut r = Vec::with_capacity(n);
        for (i, &a) in policy.iter().enumerate() {
            let rec = &self.actions[i][a];
            r.push(rec.cost);
            for &(j, q) in &rec.row {
                p[i][j] += q;
            }
        }
        (r, p)
    }

    pub fn check_policy(&self, policy: &[usize]) -> Result<()> {
        check_len(self.n_states, policy.len())?;
        for (i, &a) in policy.iter().enumerate() {
            if a >= self.actions[i].len() {
                return Err(Error::InvalidArgument(format!("policy picks action {a} in state {i}")));
            }
        }
        Ok(())
    }
}

/// Indices within `tol` of the minimum, in increasing order.
pub(crate) fn near_minimal<S: Scalar>(values: impl Iterator<Item = S>, tol: S) -> Vec<usize> {
    let vals: Vec<S> = values.collect();
    let m = vals.iter().copied().fold(S::infinity(), S::min);
    vals.iter()
        .enumerate()
        .filter(|(_, &v)| v <= m + tol)
        .map(|(a, _)| a)
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(xs: &[f64]) -> ValueVector<f64> {
        ValueVector::new(xs.to_vec()).unwrap()
    }

    fn chain() -> MdpModel<f64> {
        MdpModel::new(2, vec![vec![ActionRecord::to(1.0, 1)], vec![ActionRecord::to(0.0, 1)]]).unwrap()
    }

    #[test]
    fn single_state_adds_cost() {
        let m = MdpModel::single_state(2.5);
        assert_eq!(m.apply(&v(&[0.0])).unwrap(), v(&[2.5]));
    }

    #[test]
    fn deterministic_chain() {
        assert_eq!(chain().apply(&v(&[0.0, 0.0])).unwrap(), v(&[1.0, 0.0]));
    }

    #[test]
    fn recession_examples() {
        let m = chain();
        assert_eq!(m.recession(&v(&[0.0, 0.0])).unwrap(), v(&[0.0, 0.0]));
        assert_eq!(m.recession(&v(&[3.0, 3.0])).unwrap(), v(&[3.0, 3.0]));
        assert!(m.recession(&v(&[1.0])).is_err());
    }

    #[test]
    fn length_mismatch_is_reported() {
        assert!(matches!(
            chain().apply(&v(&[0.0])),
            Err(Error::LengthMismatch { expected: 2, got: 1 })
        ));
    }

    #[test]
    fn rows_are_validated_and_renormalized() {
        let near = MdpModel::new(1, vec![vec![ActionRecord::new(0.0, vec![(0, 0.5), (0, 0.5 + 5e-13)])]]).unwrap();
        assert_eq!(near.actions(0)[0].row, vec![(0, 1.0)]);
        let bad = MdpModel::new(1, vec![vec![ActionRecord::new(0.0, vec![(0, 0.9)])]]);
        assert!(matches!(bad, Err(Error::InvalidModel(_))));
        let neg = MdpModel::new(
            2,
            vec![
                vec![ActionRecord::new(0.0, vec![(0, 1.5), (1, -0.5)])],
                vec![ActionRecord::to(0.0, 1)],
            ],
        );
        assert!(neg.is_err());
        assert!(MdpModel::<f64>::new(1, vec![vec![]]).is_err());
        assert!(MdpModel::new(1, vec![vec![ActionRecord::to(0.0, 3)]]).is_err());
    }

    #[test]
    fn json_schema() {
        let text = r#"{"n_states": 2, "actions": [
            [{"cost": 1.0, "row": [[0, 0.25], [1, 0.75]]}, {"cost": 5.0, "row": [[1, 1.0]]}],
            [{"cost": 0.0, "row": [[1, 1.0]]}]
        ]}"#;
        let m = MdpModel::<f64>::from_json(text).unwrap();
        assert_eq!(m.action_counts(), vec![2, 1]);
        assert_eq!(m.actions(0)[0].row, vec![(0, 0.25), (1, 0.75)]);
        let back = MdpModel::<f64>::from_json(&m.to_json().unwrap()).unwrap();
        assert_eq!(back, m);
        let bad = r#"{"n_states": 1, "actions": [[{"cost": 0.0, "row": [[0, 0.5]]}]]}"#;
        assert!(MdpModel::<f64>::from_json(bad).is_err());
    }

    #[test]
    fn argmin_sets_respect_tolerance() {
        let m = MdpModel::new(
            1,
            vec![vec![
                ActionRecord::to(1.0, 0),
                ActionRecord::to(1.0 + 1e-9, 0),
                ActionRecord::to(1.1, 0),
            ]],
        )
        .unwrap();
        assert_eq!(m.argmin_sets(&v(&[0.0]), 1e-8).unwrap(), vec![vec![0, 1]]);
    }

    #[test]
    fn conjugate_model_matches_definition() {
        let m = chain();
        let u = v(&[0.3, -1.0]);
        let x = v(&[2.0, 0.5]);
        let c = m.conjugate(&u).unwrap().apply(&x).unwrap();
        let direct = &m.apply(&(&u + &x)).unwrap() - &u;
        assert!(c.dist(&direct).unwrap() < 1e-14);
    }
}
