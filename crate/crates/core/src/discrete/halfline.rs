//! Half-lines `s ↦ u + sη` and their certificates.
//!
//! A half-line is sub-invariant for `T` when `T(u + sη) ≥ u + (s+1)η` for all
//! `s ≥ 0`. For a concave `T` this is equivalent to `T(u) ≥ u + η` together
//! with `T̂(η) ≥ η`, which is the exact test used here whenever a recession
//! map is available.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::{check_len, leq_tol, pointwise_sup, ValueVector};
use crate::operators::{OperatorHandle, ShapleyOperator};
use crate::scalar::Scalar;

/// Parameters `s` at which the defining inequality is spot-checked.
pub const SPOT_CHECK_S: [f64; 4] = [0.0, 1.0, 10.0, 100.0];

/// Extra parameters used by the sampled criterion (no recession map).
const SAMPLED_S: [f64; 3] = [1e3, 1e4, 1e5];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HalfLineKind {
    SubInvariant,
    SuperInvariant,
    Invariant,
    Uncertified,
}

impl HalfLineKind {
    pub fn is_sub(self) -> bool {
        matches!(self, Self::SubInvariant | Self::Invariant)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "S: Scalar")]
pub struct HalfLine<S> {
    pub base: ValueVector<S>,
    pub director: ValueVector<S>,
    pub kind: HalfLineKind,
}

impl<S: Scalar> HalfLine<S> {
    pub fn new(base: ValueVector<S>, director: ValueVector<S>) -> Result<Self> {
        check_len(base.len(), director.len())?;
        Ok(Self {
            base,
            director,
            kind: HalfLineKind::Uncertified,
        })
    }

    /// `s ↦ −s‖T(0)‖e`, sub-invariant for every Shapley operator.
    pub fn trivial(t: &OperatorHandle<S>) -> Result<Self> {
        let n = t.dim();
        let c = t.apply(&ValueVector::zeros(n))?.sup_norm()?;
        Self::new(ValueVector::zeros(n), ValueVector::constant(n, -c))
    }

    /// `s ↦ u + sλe` for an ergodic sub- or super-eigenvector `u`.
    pub fn ergodic(u: ValueVector<S>, lambda: S) -> Self {
        let n = u.len();
        Self {
            base: u,
            director: ValueVector::constant(n, lambda),
            kind: HalfLineKind::Uncertified,
        }
    }

    pub fn at(&self, s: S) -> ValueVector<S> {
        self.base
            .axpy(s, &self.director)
            .expect("lengths checked at construction")
    }
}

#[derive(Clone, Copy, Debug)]
pub struct CertifyOptions<S> {
    pub tol: S,
    /// Allow the sampled criterion for operators without a recession map.
    pub sampled_fallback: bool,
}

impl<S: Scalar> CertifyOptions<S> {
    pub fn exact(tol: S) -> Self {
        Self {
            tol,
            sampled_fallback: false,
        }
    }
}

fn check_dim<S: Scalar>(t: &OperatorHandle<S>, h: &HalfLine<S>) -> Result<()> {
    check_len(t.dim(), h.base.len())
}

/// `T(u + sη) ≥ u + (s+1)η − tol·e` at every listed `s`.
fn sub_at<S: Scalar>(t: &OperatorHandle<S>, h: &HalfLine<S>, ss: &[f64], tol: S) -> Result<bool> {
    for &s in ss {
        let s = S::lit(s);
        let lhs = t.apply(&h.at(s))?;
        if !leq_tol(&h.at(s + S::one()), &lhs, tol)? {
            return Ok(false);
        }
    }
    Ok(true)
}

fn super_at<S: Scalar>(t: &OperatorHandle<S>, h: &HalfLine<S>, ss: &[f64], tol: S) -> Result<bool> {
    for &s in ss {
        let s = S::lit(s);
        let lhs = t.apply(&h.at(s))?;
        if !leq_tol(&lhs, &h.at(s + S::one()), tol)? {
            return Ok(false);
        }
    }
    Ok(true)
}

pub fn certify_subinvariant<S: Scalar>(t: &OperatorHandle<S>, h: &HalfLine<S>, tol: S) -> Result<bool> {
    certify_subinvariant_with(t, h, &CertifyOptions::exact(tol))
}

pub fn certify_subinvariant_with<S: Scalar>(
    t: &OperatorHandle<S>,
    h: &HalfLine<S>,
    opts: &CertifyOptions<S>,
) -> Result<bool> {
    check_dim(t, h)?;
    let tol = opts.tol;
    if t.has_recession() {
        let tu = t.apply(&h.base)?;
        let base_ok = leq_tol(&(&h.base + &h.director), &tu, tol)?;
        let rec = t.recession(&h.director)?;
        let dir_ok = leq_tol(&h.director, &rec, tol)?;
        Ok(base_ok && dir_ok && sub_at(t, h, &SPOT_CHECK_S, tol)?)
    } else if opts.sampled_fallback {
        Ok(sub_at(t, h, &SPOT_CHECK_S, tol)? && sub_at(t, h, &SAMPLED_S, tol)?)
    } else {
        Err(Error::Unsupported("recession map (sampled check disabled)"))
    }
}

/// Complementarity: for every state some action has `P_i^a η ≤ η_i + tol`
/// and `r_i^a + P_i^a u ≤ u_i + η_i + tol`.
fn complementarity<S: Scalar>(t: &OperatorHandle<S>, h: &HalfLine<S>, tol: S) -> Result<bool> {
    let m = t
        .mdp()
        .ok_or(Error::Unsupported("invariance certificate needs an MDP operator"))?;
    let (u, eta) = (h.base.as_slice(), h.director.as_slice());
    Ok((0..m.n_states()).all(|i| {
        m.actions(i)
            .iter()
            .any(|a| a.expect(eta) <= eta[i] + tol && a.value(u) <= u[i] + eta[i] + tol)
    }))
}

pub fn certify_superinvariant<S: Scalar>(t: &OperatorHandle<S>, h: &HalfLine<S>, tol: S) -> Result<bool> {
    check_dim(t, h)?;
    if t.mdp().is_some() {
        Ok(complementarity(t, h, tol)? && super_at(t, h, &SPOT_CHECK_S, tol)?)
    } else {
        Ok(super_at(t, h, &SPOT_CHECK_S, tol)? && super_at(t, h, &SAMPLED_S, tol)?)
    }
}

/// Sub-invariance plus attained complementarity. MDP-backed operators only.
pub fn certify_invariant<S: Scalar>(t: &OperatorHandle<S>, h: &HalfLine<S>, tol: S) -> Result<bool> {
    check_dim(t, h)?;
    if t.mdp().is_none() {
        return Err(Error::Unsupported("invariance certificate needs an MDP operator"));
    }
    Ok(certify_subinvariant(t, h, tol)? && complementarity(t, h, tol)?)
}

/// Runs the certificates and returns the half-line tagged with its kind.
pub fn classify<S: Scalar>(t: &OperatorHandle<S>, h: &HalfLine<S>, tol: S) -> Result<HalfLine<S>> {
    let opts = CertifyOptions {
        tol,
        sampled_fallback: true,
    };
    let sub = certify_subinvariant_with(t, h, &opts)?;
    let sup = certify_superinvariant(t, h, tol)?;
    let kind = match (sub, sup) {
        (true, true) => HalfLineKind::Invariant,
        (true, false) => HalfLineKind::SubInvariant,
        (false, true) => HalfLineKind::SuperInvariant,
        (false, false) => HalfLineKind::Uncertified,
    };
    Ok(HalfLine { kind, ..h.clone() })
}

/// `T^k(u) ≥ u + kη − k·tol·e` at each `k`.
pub fn pump_holds<S: Scalar>(t: &OperatorHandle<S>, h: &HalfLine<S>, ks: &[usize], tol: S) -> Result<bool> {
    check_dim(t, h)?;
    let kmax = ks.iter().copied().max().unwrap_or(0);
    let mut v = h.base.clone();
    for k in 1..=kmax {
        v = t.apply(&v)?;
        if ks.contains(&k) {
            let kk = S::from_usize_lossy(k);
            if !leq_tol(&h.at(kk), &v, kk * tol)? {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

/// Pointwise supremum of certified sub-invariant directors: a lower bound on
/// `liminf α v_α`.
pub fn sup_director<S: Scalar>(candidates: &[HalfLine<S>]) -> Result<ValueVector<S>> {
    if candidates.is_empty() {
        return Err(Error::Empty("half-line list"));
    }
    if let Some(bad) = candidates.iter().position(|h| !h.kind.is_sub()) {
        return Err(Error::Uncertified(format!(
            "candidate {bad} is {:?}",
            candidates[bad].kind
        )));
    }
    let dirs: Vec<ValueVector<S>> = candidates.iter().map(|h| h.director.clone()).collect();
    pointwise_sup(&dirs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operators::{ActionRecord, BuiltinOperator, MdpModel};

    fn v(xs: &[f64]) -> ValueVector<f64> {
        ValueVector::new(xs.to_vec()).unwrap()
    }

    fn two_state() -> OperatorHandle<f64> {
        OperatorHandle::from_mdp(
            MdpModel::new(
                2,
                vec![
                    vec![ActionRecord::to(1.0, 0), ActionRecord::to(5.0, 1)],
                    vec![ActionRecord::to(2.0, 1)],
                ],
            )
            .unwrap(),
        )
    }

    #[test]
    fn trivial_half_line_is_sub_invariant() {
        let t = two_state();
        let h = HalfLine::trivial(&t).unwrap();
        assert_eq!(h.director, v(&[-2.0, -2.0]));
        assert!(certify_subinvariant(&t, &h, 1e-9).unwrap());
        let lse = OperatorHandle::<f64>::builtin(BuiltinOperator::LogSumExpPerturbed);
        assert!(certify_subinvariant(&lse, &HalfLine::trivial(&lse).unwrap(), 1e-9).unwrap());
    }

    #[test]
    fn single_action_state_is_invariant_with_gain_equal_cost() {
        let t = OperatorHandle::from_mdp(MdpModel::single_state(4.0));
        let h = HalfLine::new(v(&[0.0]), v(&[4.0])).unwrap();
        assert!(certify_invariant(&t, &h, 1e-9).unwrap());
        assert_eq!(classify(&t, &h, 1e-9).unwrap().kind, HalfLineKind::Invariant);
    }

    #[test]
    fn raising_the_director_breaks_certification() {
        let t = OperatorHandle::from_mdp(MdpModel::single_state(4.0));
        let h = HalfLine::new(v(&[0.0]), v(&[4.0 + 1e-6])).unwrap();
        assert!(!certify_invariant(&t, &h, 1e-9).unwrap());
        assert!(!certify_subinvariant(&t, &h, 1e-9).unwrap());
    }

    #[test]
    fn ergodic_sub_eigenvector() {
        // T(u) ≥ u + 1·e for u = (0, 0): costs are ≥ 1 on the cheapest loops
        let t = two_state();
        let h = HalfLine::ergodic(v(&[0.0, 0.0]), 1.0);
        assert!(certify_subinvariant(&t, &h, 1e-9).unwrap());
        assert!(pump_holds(&t, &h, &[1, 10, 100], 1e-9).unwrap());
    }

    #[test]
    fn invariant_requires_mdp() {
        let t = OperatorHandle::<f64>::builtin(BuiltinOperator::MaxPolyhedral);
        let h = HalfLine::new(v(&[0.0, 0.0]), v(&[0.0, 0.0])).unwrap();
        assert!(matches!(certify_invariant(&t, &h, 1e-9), Err(Error::Unsupported(_))));
        // the origin is fixed, so the zero half-line is invariant
        assert_eq!(classify(&t, &h, 1e-9).unwrap().kind, HalfLineKind::Invariant);
    }

    #[test]
    fn missing_recession_without_fallback_errors() {
        struct Shift;
        impl ShapleyOperator<f64> for Shift {
            fn dim(&self) -> usize {
                1
            }
            fn apply(&self, x: &ValueVector<f64>) -> crate::Result<ValueVector<f64>> {
                Ok(x.add_scalar(1.0))
            }
        }
        let t = OperatorHandle::new(Shift);
        let h = HalfLine::new(v(&[0.0]), v(&[1.0])).unwrap();
        assert!(certify_subinvariant(&t, &h, 1e-9).is_err());
        let opts = CertifyOptions {
            tol: 1e-9,
            sampled_fallback: true,
        };
        assert!(certify_subinvariant_with(&t, &h, &opts).unwrap());
    }

    #[test]
    fn sup_director_rules() {
        let t = two_state();
        let a = classify(&t, &HalfLine::trivial(&t).unwrap(), 1e-9).unwrap();
        assert_eq!(sup_director(std::slice::from_ref(&a)).unwrap(), a.director);
        let raw = HalfLine::new(v(&[0.0, 0.0]), v(&[9.0, 9.0])).unwrap();
        assert!(matches!(sup_director(&[a, raw]), Err(Error::Uncertified(_))));
        assert!(sup_director::<f64>(&[]).is_err());
    }
}
