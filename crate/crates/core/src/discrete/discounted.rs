use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::ValueVector;
use crate::linalg::Dense;
use crate::operators::{near_minimal, MdpModel, OperatorHandle, ShapleyOperator};
use crate::scalar::Scalar;

/// Below this α, MDP-backed operators are solved by policy iteration instead of
/// fixed-point iteration (whose iteration count grows like 1/α).
pub const POLICY_ITERATION_ALPHA: f64 = 1e-3;

/// The fixed point `v_α = T((1−α) v_α)`.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(bound = "S: Scalar")]
pub struct DiscountedSolution<S> {
    pub alpha: S,
    pub v_alpha: ValueVector<S>,
    pub iterations: usize,
    /// `‖v − T((1−α)v)‖`.
    pub residual: S,
}

fn check_alpha<S: Scalar>(alpha: S) -> Result<()> {
    if !(alpha > S::zero() && alpha < S::one()) {
        return Err(Error::InvalidArgument(format!("alpha = {alpha} not in (0,1)")));
    }
    Ok(())
}

fn residual<S: Scalar>(t: &OperatorHandle<S>, alpha: S, v: &ValueVector<S>) -> Result<S> {
    let tv = t.apply(&v.scale(S::one() - alpha))?;
    tv.dist(v)
}

pub fn solve_discounted<S: Scalar>(
    t: &OperatorHandle<S>,
    alpha: S,
    tol: S,
    max_iter: usize,
) -> Result<DiscountedSolution<S>> {
    solve_discounted_from(t, alpha, tol, max_iter, None)
}

/// As [`solve_discounted`], optionally warm-started.
pub fn solve_discounted_from<S: Scalar>(
    t: &OperatorHandle<S>,
    alpha: S,
    tol: S,
    max_iter: usize,
    start: Option<&ValueVector<S>>,
) -> Result<DiscountedSolution<S>> {
    check_alpha(alpha)?;
    if !(tol > S::zero()) {
        return Err(Error::InvalidArgument("tol must be positive".into()));
    }
    if alpha < S::lit(POLICY_ITERATION_ALPHA) {
        if let Some(m) = t.mdp() {
            return discounted_policy_iteration(&m, alpha, tol, max_iter);
        }
    }
    let beta = S::one() - alpha;
    let mut v = match start {
        Some(s) => s.clone(),
        None => ValueVector::zeros(t.dim()),
    };
    for k in 1..=max_iter {
        let next = t.apply(&v.scale(beta))?;
        let step = next.dist(&v)?;
        v = next;
        if step <= tol {
            let res = residual(t, alpha, &v)?;
            if res <= tol {
                return Ok(DiscountedSolution {
                    alpha,
                    v_alpha: v,
                    iterations: k,
                    residual: res,
                });
            }
        }
    }
    let res = residual(t, alpha, &v)?;
    Err(Error::NotConverged {
        iterations: max_iter,
        residual: res.as_f64(),
        best: v.to_f64(),
    })
}

/// Howard policy iteration for `v = min_a (r + (1−α) P v)`.
pub fn discounted_policy_iteration<S: Scalar>(
    m: &MdpModel<S>,
    alpha: S,
    tol: S,
    max_iter: usize,
) -> Result<DiscountedSolution<S>> {
    check_alpha(alpha)?;
    let n = m.n_states();
    let beta = S::one() - alpha;
    let mut policy = vec![0usize; n];
    let mut best: Option<ValueVector<S>> = None;
    for k in 1..=max_iter.max(1) {
        let (r, p) = m.policy_system(&policy);
        let mut a = Dense::identity(n);
        for i in 0..n {
            for j in 0..n {
                a[(i, j)] -= beta * p[i][j];
            }
        }
        let v = a.solve(&r)?;
        let mut changed = false;
        let vmax = v.iter().fold(S::zero(), |m, x| m.max(x.abs()));
        let improve_tol = tol * S::lit(1e-2) + S::lit(64.0) * S::epsilon() * (S::one() + vmax);
        for i in 0..n {
            let q: Vec<S> = m
                .actions(i)
                .iter()
                .map(|rec| rec.cost + beta * rec.expect(&v))
                .collect();
            let min = q.iter().copied().fold(S::infinity(), S::min);
            if q[policy[i]] > min + improve_tol {
                policy[i] = near_minimal(q.into_iter(), improve_tol)[0];
                changed = true;
            }
        }
        let v = ValueVector::from_raw(v);
        if !changed {
            let res = residual(&OperatorHandle::from_mdp(m.clone()), alpha, &v)?;
            if res <= tol {
                return Ok(DiscountedSolution {
                    alpha,
                    v_alpha: v,
                    iterations: k,
                    residual: res,
                });
            }
            return Err(Error::NotConverged {
                iterations: k,
                residual: res.as_f64(),
                best: v.to_f64(),
            });
        }
        best = Some(v);
    }
    let v = best.unwrap_or_else(|| ValueVector::zeros(n));
    let res = residual(&OperatorHandle::from_mdp(m.clone()), alpha, &v)?;
    Err(Error::NotConverged {
        iterations: max_iter,
        residual: res.as_f64(),
        best: v.to_f64(),
    })
}

/// `v^0, v^1 = T(v^0), …, v^k`.
pub fn iterate<S: Scalar>(t: &OperatorHandle<S>, v0: &ValueVector<S>, k: usize) -> Result<Vec<ValueVector<S>>> {
    let mut out = Vec::with_capacity(k + 1);
    out.push(v0.clone());
    for _ in 0..k {
        let next = t.apply(out.last().expect("nonempty"))?;
        out.push(next);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operators::random::{random_mdp, RandomMdpSpec};
    use crate::operators::BuiltinOperator;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn unit_shift_operator() {
        let t = OperatorHandle::from_mdp(MdpModel::single_state(3.0_f64));
        for alpha in [0.5, 0.1, 0.01, 1e-5] {
            let sol = solve_discounted(&t, alpha, 1e-10, 100_000).unwrap();
            assert!((sol.v_alpha[0] - 3.0 / alpha).abs() <= 1e-9 / alpha);
            assert!(sol.residual <= 1e-10);
        }
    }

    #[test]
    fn rejects_bad_alpha() {
        let t = OperatorHandle::from_mdp(MdpModel::single_state(1.0));
        assert!(solve_discounted(&t, 0.0, 1e-9, 10).is_err());
        assert!(solve_discounted(&t, 1.0, 1e-9, 10).is_err());
    }

    #[test]
    fn reports_best_iterate_on_budget_exhaustion() {
        let t = OperatorHandle::<f64>::builtin(BuiltinOperator::LogSumExpPerturbed);
        match solve_discounted(&t, 0.01, 1e-12, 5) {
            Err(Error::NotConverged { iterations, best, .. }) => {
                assert_eq!(iterations, 5);
                assert_eq!(best.len(), 2);
            }
            other => panic!("expected NotConverged, got {other:?}"),
        }
    }

    #[test]
    fn policy_iteration_agrees_with_value_iteration() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for _ in 0..30 {
            let m: MdpModel<f64> = random_mdp(&mut rng, &RandomMdpSpec::default());
            let t = OperatorHandle::from_mdp(m.clone());
            let vi = solve_discounted(&t, 0.05, 1e-11, 100_000).unwrap();
            let pi = discounted_policy_iteration(&m, 0.05, 1e-11, 1000).unwrap();
            assert!(vi.v_alpha.dist(&pi.v_alpha).unwrap() < 1e-8);
        }
    }

    #[test]
    fn conjugation_moves_discounted_value_by_at_most_twice_the_shift() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..30 {
            let m: MdpModel<f64> = random_mdp(&mut rng, &RandomMdpSpec::default());
            let n = m.n_states();
            let u = ValueVector::new((0..n).map(|i| ((i * 7 % 5) as f64) - 2.0).collect()).unwrap();
            let t = OperatorHandle::from_mdp(m);
            let tu = t.conjugate(&u).unwrap();
            for alpha in [0.5, 0.1, 1e-4] {
                let a = solve_discounted(&t, alpha, 1e-10, 100_000).unwrap();
                let b = solve_discounted(&tu, alpha, 1e-10, 100_000).unwrap();
                let d = a.v_alpha.dist(&b.v_alpha).unwrap();
                assert!(d <= 2.0 * u.sup_norm().unwrap() + 1e-6);
            }
        }
    }

    #[test]
    fn iterate_returns_whole_orbit() {
        let t = OperatorHandle::<f64>::builtin(BuiltinOperator::LogSumExpPerturbed);
        let v0 = ValueVector::zeros(2);
        assert_eq!(iterate(&t, &v0, 0).unwrap(), vec![v0.clone()]);
        let orbit = iterate(&t, &v0, 50).unwrap();
        assert_eq!(orbit.len(), 51);
        for (k, v) in orbit.iter().enumerate() {
            assert!((v[0] - ((k + 1) as f64).ln()).abs() < 1e-13);
        }
    }
}
