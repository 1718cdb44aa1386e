//! Ordered vector arithmetic on finite index sets.
//!
//! A [`ValueVector`] is an element of `R^n` with the pointwise partial order and
//! the sup-norm; `e` denotes the all-ones unit vector.

use std::ops::{Add, Index, IndexMut, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Relative factor of the default comparison tolerance.
pub const DEFAULT_REL_TOL: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
#[serde(bound = "S: Scalar")]
pub struct ValueVector<S> {
    values: Vec<S>,
}

impl<S: Scalar> ValueVector<S> {
    /// Builds a vector, rejecting NaN and infinite entries.
    pub fn new(values: Vec<S>) -> Result<Self> {
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument(format!("non-finite entry at index {i}")));
        }
        Ok(Self { values })
    }

    /// Wraps values produced by crate arithmetic without re-checking finiteness.
    pub(crate) fn from_raw(values: Vec<S>) -> Self {
        Self { values }
    }

    pub fn zeros(n: usize) -> Self {
        Self::constant(n, S::zero())
    }

    pub fn constant(n: usize, c: S) -> Self {
        Self { values: vec![c; n] }
    }

    /// The unit vector `e`.
    pub fn unit(n: usize) -> Self {
        Self::constant(n, S::one())
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn as_slice(&self) -> &[S] {
        &self.values
    }

    pub fn into_vec(self) -> Vec<S> {
        self.values
    }

    pub fn iter(&self) -> std::slice::Iter<'_, S> {
        self.values.iter()
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    pub fn map(&self, f: impl Fn(S) -> S) -> Self {
        Self::from_raw(self.values.iter().map(|&v| f(v)).collect())
    }

    pub fn zip_map(&self, other: &Self, f: impl Fn(S, S) -> S) -> Result<Self> {
        check_len(self.len(), other.len())?;
        Ok(Self::from_raw(
            self.values.iter().zip(&other.values).map(|(&a, &b)| f(a, b)).collect(),
        ))
    }

    /// `x + c·e`.
    pub fn add_scalar(&self, c: S) -> Self {
        self.map(|v| v + c)
    }

    pub fn scale(&self, t: S) -> Self {
        self.map(|v| v * t)
    }

    /// `self + t·dir`.
    pub fn axpy(&self, t: S, dir: &Self) -> Result<Self> {
        self.zip_map(dir, |a, b| a + t * b)
    }

    /// `max_i |x_i|`.
    pub fn sup_norm(&self) -> Result<S> {
        sup_norm(self)
    }

    pub fn max(&self) -> Option<S> {
        self.values.iter().copied().reduce(S::max)
    }

    pub fn min(&self) -> Option<S> {
        self.values.iter().copied().reduce(S::min)
    }

    /// Sup-norm of the difference, `‖self − other‖`.
    pub fn dist(&self, other: &Self) -> Result<S> {
        check_len(self.len(), other.len())?;
        if self.is_empty() {
            return Err(Error::Empty("vector"));
        }
        Ok(self
            .values
            .iter()
            .zip(&other.values)
            .map(|(&a, &b)| (a - b).abs())
            .fold(S::zero(), S::max))
    }

    pub fn to_f64(&self) -> Vec<f64> {
        self.values.iter().map(|v| v.as_f64()).collect()
    }
}

impl<S> Index<usize> for ValueVector<S> {
    type Output = S;
    fn index(&self, i: usize) -> &S {
        &self.values[i]
    }
}

impl<S> IndexMut<usize> for ValueVector<S> {
    fn index_mut(&mut self, i: usize) -> &mut S {
        &mut self.values[i]
    }
}

impl<'a, S> IntoIterator for &'a ValueVector<S> {
    type Item = &'a S;
    type IntoIter = std::slice::Iter<'a, S>;
    fn into_iter(self) -> Self::IntoIter {
        self.values.iter()
    }
}

// Arithmetic operators panic on length mismatch, like slice indexing.
impl<S: Scalar> Add for &ValueVector<S> {
    type Output = ValueVector<S>;
    fn add(self, rhs: Self) -> ValueVector<S> {
        self.zip_map(rhs, |a, b| a + b).expect("length mismatch in add")
    }
}

impl<S: Scalar> Sub for &ValueVector<S> {
    type Output = ValueVector<S>;
    fn sub(self, rhs: Self) -> ValueVector<S> {
        self.zip_map(rhs, |a, b| a - b).expect("length mismatch in sub")
    }
}

impl<S: Scalar> Neg for &ValueVector<S> {
    type Output = ValueVector<S>;
    fn neg(self) -> ValueVector<S> {
        self.map(|v| -v)
    }
}

impl<S: Scalar> Mul<S> for &ValueVector<S> {
    type Output = ValueVector<S>;
    fn mul(self, rhs: S) -> ValueVector<S> {
        self.scale(rhs)
    }
}

pub(crate) fn check_len(expected: usize, got: usize) -> Result<()> {
    if expected != got {
        return Err(Error::LengthMismatch { expected, got });
    }
    Ok(())
}

/// `max_i |x_i|`; errors on an empty vector.
pub fn sup_norm<S: Scalar>(x: &ValueVector<S>) -> Result<S> {
    if x.is_empty() {
        return Err(Error::Empty("vector"));
    }
    Ok(x.iter().map(|v| v.abs()).fold(S::zero(), S::max))
}

/// `x_i ≤ y_i + tol` for every `i`.
pub fn leq_tol<S: Scalar>(x: &ValueVector<S>, y: &ValueVector<S>, tol: S) -> Result<bool> {
    check_len(x.len(), y.len())?;
    if tol < S::zero() {
        return Err(Error::InvalidArgument("negative tolerance".into()));
    }
    Ok(x.iter().zip(y.iter()).all(|(&a, &b)| a <= b + tol))
}

/// Coordinatewise maximum of a nonempty family.
pub fn pointwise_sup<S: Scalar>(xs: &[ValueVector<S>]) -> Result<ValueVector<S>> {
    let (first, rest) = xs.split_first().ok_or(Error::Empty("vector list"))?;
    let mut out = first.clone();
    for x in rest {
        check_len(out.len(), x.len())?;
        for (o, &v) in out.values.iter_mut().zip(&x.values) {
            *o = o.max(v);
        }
    }
    Ok(out)
}

/// Coordinatewise minimum of a nonempty family.
pub fn pointwise_inf<S: Scalar>(xs: &[ValueVector<S>]) -> Result<ValueVector<S>> {
    let (first, rest) = xs.split_first().ok_or(Error::Empty("vector list"))?;
    let mut out = first.clone();
    for x in rest {
        check_len(out.len(), x.len())?;
        for (o, &v) in out.values.iter_mut().zip(&x.values) {
            *o = o.min(v);
        }
    }
    Ok(out)
}

/// `1e-9 · (1 + max(‖x‖, ‖y‖))`.
pub fn default_tol<S: Scalar>(x: &ValueVector<S>, y: &ValueVector<S>) -> S {
    let nx = sup_norm(x).unwrap_or_else(|_| S::zero());
    let ny = sup_norm(y).unwrap_or_else(|_| S::zero());
    S::lit(DEFAULT_REL_TOL) * (S::one() + nx.max(ny))
}
