//! Closed-form two-state operators.
//!
//! `MaxPolyhedral` is `(max(x1, x2), x2)`; it fixes the origin, so it has an
//! invariant half-line with zero director. `LogSumExpPerturbed` replaces the
//! max with `log(e^x1 + e^x2)`: it has the same growth rate but no fixed point
//! and no invariant half-line, and its orbit from the origin is `(log(k+1), 0)`.

use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::ShapleyOperator;
use crate::error::{Error, Result};
use crate::lattice::{check_len, ValueVector};
use crate::scalar::Scalar;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BuiltinOperator {
    MaxPolyhedral,
    LogSumExpPerturbed,
}

impl FromStr for BuiltinOperator {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "max_polyhedral" => Ok(Self::MaxPolyhedral),
            "logsumexp_perturbed" => Ok(Self::LogSumExpPerturbed),
            other => Err(Error::UnknownName(other.to_string())),
        }
    }
}

#[derive(Clone, Copy, Debug, Default)]
pub struct MaxPolyhedral;

#[derive(Clone, Copy, Debug, Default)]
pub struct LogSumExpPerturbed;

fn max_pair<S: Scalar>(x: &ValueVector<S>) -> Result<ValueVector<S>> {
    check_len(2, x.len())?;
    Ok(ValueVector::from_raw(vec![x[0].max(x[1]), x[1]]))
}

impl<S: Scalar> ShapleyOperator<S> for MaxPolyhedral {
    fn dim(&self) -> usize {
        2
    }
    fn apply(&self, x: &ValueVector<S>) -> Result<ValueVector<S>> {
        max_pair(x)
    }
    fn has_recession(&self) -> bool {
        true
    }
    fn recession(&self, y: &ValueVector<S>) -> Result<ValueVector<S>> {
        max_pair(y)
    }
}

/// `log(e^a + e^b)` without overflow.
fn log_add_exp<S: Scalar>(a: S, b: S) -> S {
    let (hi, lo) = if a >= b { (a, b) } else { (b, a) };
    hi + (lo - hi).exp().ln_1p()
}

impl<S: Scalar> ShapleyOperator<S> for LogSumExpPerturbed {
    fn dim(&self) -> usize {
        2
    }
    fn apply(&self, x: &ValueVector<S>) -> Result<ValueVector<S>> {
        check_len(2, x.len())?;
        Ok(ValueVector::from_raw(vec![log_add_exp(x[0], x[1]), x[1]]))
    }
    fn has_recession(&self) -> bool {
        true
    }
    fn recession(&self, y: &ValueVector<S>) -> Result<ValueVector<S>> {
        max_pair(y)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operators::OperatorHandle;

    fn v(a: f64, b: f64) -> ValueVector<f64> {
        ValueVector::new(vec![a, b]).unwrap()
    }

    #[test]
    fn names_parse() {
        assert_eq!(
            "max_polyhedral".parse::<BuiltinOperator>().unwrap(),
            BuiltinOperator::MaxPolyhedral
        );
        assert!(matches!("nope".parse::<BuiltinOperator>(), Err(Error::UnknownName(_))));
    }

    #[test]
    fn max_polyhedral_fixes_origin() {
        let t = OperatorHandle::<f64>::builtin(BuiltinOperator::MaxPolyhedral);
        assert_eq!(t.apply(&v(0.0, 0.0)).unwrap(), v(0.0, 0.0));
    }

    #[test]
    fn logsumexp_orbit_is_log_k_plus_one() {
        let t = OperatorHandle::<f64>::builtin(BuiltinOperator::LogSumExpPerturbed);
        let mut x = v(0.0, 0.0);
        for k in 1..=1000usize {
            x = t.apply(&x).unwrap();
            assert!((x[0] - ((k + 1) as f64).ln()).abs() < 1e-12);
            assert_eq!(x[1], 0.0);
        }
    }

    #[test]
    fn logsumexp_has_no_fixed_point() {
        let t = LogSumExpPerturbed;
        for (a, b) in [(0.0, 0.0), (5.0, -3.0), (-2.0, 7.0)] {
            let x = v(a, b);
            assert!(ShapleyOperator::<f64>::apply(&t, &x).unwrap()[0] > x[0]);
        }
    }

    #[test]
    fn nonexpansive_on_samples() {
        for t in [
            OperatorHandle::<f64>::builtin(BuiltinOperator::MaxPolyhedral),
            OperatorHandle::<f64>::builtin(BuiltinOperator::LogSumExpPerturbed),
        ] {
            for (x, y) in [
                (v(0.0, 1.0), v(3.0, -2.0)),
                (v(-40.0, 40.0), v(40.0, -40.0)),
                (v(1e3, 1e3), v(1e3 + 1.0, 1e3)),
            ] {
                let d = t.apply(&x).unwrap().dist(&t.apply(&y).unwrap()).unwrap();
                assert!(d <= x.dist(&y).unwrap() + 1e-12);
            }
        }
    }
}
