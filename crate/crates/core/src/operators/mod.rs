//! Shapley operators: order-preserving self-maps of `R^n` commuting with the
//! addition of the unit vector.

mod builtin;
mod mdp;
pub mod random;

use std::fmt;
use std::sync::Arc;

pub use builtin::{BuiltinOperator, LogSumExpPerturbed, MaxPolyhedral};
pub(crate) use mdp::near_minimal;
pub use mdp::{ActionRecord, MdpModel, DEFAULT_ARGMIN_TOL, ROW_SUM_TOL};

use crate::error::{Error, Result};
use crate::lattice::{check_len, ValueVector};
use crate::scalar::Scalar;

/// An evaluatable Shapley operator, optionally with its recession map and an
/// argmin reporter.
pub trait ShapleyOperator<S: Scalar>: Send + Sync {
    fn dim(&self) -> usize;

    fn apply(&self, x: &ValueVector<S>) -> Result<ValueVector<S>>;

    fn has_recession(&self) -> bool {
        false
    }

    /// `T̂(y) = lim_{s→∞} s⁻¹ T(s y)`.
    fn recession(&self, _y: &ValueVector<S>) -> Result<ValueVector<S>> {
        Err(Error::Unsupported("recession map"))
    }

    /// Per-state actions achieving `T_i(x)` within `tol`.
    fn argmin_sets(&self, _x: &ValueVector<S>, _tol: S) -> Result<Vec<Vec<usize>>> {
        Err(Error::Unsupported("argmin reporter"))
    }

    /// The affine-per-action representation, when the operator has one.
    fn mdp(&self) -> Option<MdpModel<S>> {
        None
    }
}

impl<S: Scalar> ShapleyOperator<S> for MdpModel<S> {
    fn dim(&self) -> usize {
        self.n_states()
    }

    fn apply(&self, x: &ValueVector<S>) -> Result<ValueVector<S>> {
        MdpModel::apply(self, x)
    }

    fn has_recession(&self) -> bool {
        true
    }

    fn recession(&self, y: &ValueVector<S>) -> Result<ValueVector<S>> {
        MdpModel::recession(self, y)
    }

    fn argmin_sets(&self, x: &ValueVector<S>, tol: S) -> Result<Vec<Vec<usize>>> {
        MdpModel::argmin_sets(self, x, tol)
    }

    fn mdp(&self) -> Option<MdpModel<S>> {
        Some(self.clone())
    }
}

/// Shared, thread-safe handle to any [`ShapleyOperator`].
#[derive(Clone)]
pub struct OperatorHandle<S: Scalar> {
    inner: Arc<dyn ShapleyOperator<S>>,
}

impl<S: Scalar> fmt::Debug for OperatorHandle<S> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("OperatorHandle")
            .field("dim", &self.dim())
            .field("recession", &self.has_recession())
            .field("mdp", &self.inner.mdp().is_some())
            .finish()
    }
}

impl<S: Scalar> OperatorHandle<S> {
    pub fn new(op: impl ShapleyOperator<S> + 'static) -> Self {
        Self { inner: Arc::new(op) }
    }

    pub fn from_mdp(m: MdpModel<S>) -> Self {
        Self::new(m)
    }

    pub fn builtin(name: BuiltinOperator) -> Self {
        match name {
            BuiltinOperator::MaxPolyhedral => Self::new(MaxPolyhedral),
            BuiltinOperator::LogSumExpPerturbed => Self::new(LogSumExpPerturbed),
        }
    }

    /// `T_u(x) = −u + T(u + x)`.
    pub fn conjugate(&self, u: &ValueVector<S>) -> Result<Self> {
        check_len(self.dim(), u.len())?;
        Ok(Self::new(Conjugate {
            inner: self.clone(),
            shift: u.clone(),
        }))
    }

    /// `T^k(x)`.
    pub fn power(&self, x: &ValueVector<S>, k: usize) -> Result<ValueVector<S>> {
        let mut v = x.clone();
        for _ in 0..k {
            v = self.apply(&v)?;
        }
        Ok(v)
    }
}

impl<S: Scalar> ShapleyOperator<S> for OperatorHandle<S> {
    fn dim(&self) -> usize {
        self.inner.dim()
    }
    fn apply(&self, x: &ValueVector<S>) -> Result<ValueVector<S>> {
        self.inner.apply(x)
    }
    fn has_recession(&self) -> bool {
        self.inner.has_recession()
    }
    fn recession(&self, y: &ValueVector<S>) -> Result<ValueVector<S>> {
        self.inner.recession(y)
    }
    fn argmin_sets(&self, x: &ValueVector<S>, tol: S) -> Result<Vec<Vec<usize>>> {
        self.inner.argmin_sets(x, tol)
    }
    fn mdp(&self) -> Option<MdpModel<S>> {
        self.inner.mdp()
    }
}

struct Conjugate<S: Scalar> {
    inner: OperatorHandle<S>,
    shift: ValueVector<S>,
}

impl<S: Scalar> ShapleyOperator<S> for Conjugate<S> {
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    fn apply(&self, x: &ValueVector<S>) -> Result<ValueVector<S>> {
        let moved = self.shift.zip_map(x, |u, v| u + v)?;
        let out = self.inner.apply(&moved)?;
        out.zip_map(&self.shift, |t, u| t - u)
    }

    fn has_recession(&self) -> bool {
        self.inner.has_recession()
    }

    fn recession(&self, y: &ValueVector<S>) -> Result<ValueVector<S>> {
        self.inner.recession(y)
    }

    fn argmin_sets(&self, x: &ValueVector<S>, tol: S) -> Result<Vec<Vec<usize>>> {
        let moved = self.shift.zip_map(x, |u, v| u + v)?;
        self.inner.argmin_sets(&moved, tol)
    }

    fn mdp(&self) -> Option<MdpModel<S>> {
        self.inner.mdp().and_then(|m| m.conjugate(&self.shift).ok())
    }
}

/// Free-function form of [`OperatorHandle::conjugate`].
pub fn conjugate<S: Scalar>(t: &OperatorHandle<S>, u: &ValueVector<S>) -> Result<OperatorHandle<S>> {
    t.conjugate(u)
}

pub fn apply_bellman<S: Scalar>(m: &MdpModel<S>, x: &ValueVector<S>) -> Result<ValueVector<S>> {
    m.apply(x)
}

pub fn recession<S: Scalar>(m: &MdpModel<S>, y: &ValueVector<S>) -> Result<ValueVector<S>> {
    m.recession(y)
}

pub fn builtin_operator<S: Scalar>(name: &str) -> Result<OperatorHandle<S>> {
    Ok(OperatorHandle::builtin(name.parse()?))
}
