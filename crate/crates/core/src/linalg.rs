//! Small dense linear solves (Gaussian elimination with partial pivoting).

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Row-major square matrix.
#[derive(Clone, Debug)]
pub(crate) struct Dense<S> {
    pub n: usize,
    pub data: Vec<S>,
}

impl<S: Scalar> Dense<S> {
    pub fn zeros(n: usize) -> Self {
        Self {
            n,
            data: vec![S::zero(); n * n],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            m[(i, i)] = S::one();
        }
        m
    }

    /// Solves `A x = b` in place of a copy of `self`.
    pub fn solve(&self, b: &[S]) -> Result<Vec<S>> {
        let n = self.n;
        assert_eq!(b.len(), n);
        let mut a = self.data.clone();
        let mut x = b.to_vec();
        let scale = a.iter().fold(S::zero(), |m, v| m.max(v.abs()));
        let tiny = S::epsilon() * S::from_usize_lossy(n.max(1)) * scale.max(S::min_positive_value());
        for col in 0..n {
            let (piv, pmax) = (col..n)
                .map(|r| (r, a[r * n + col].abs()))
                .fold((col, S::zero()), |best, cur| if cur.1 > best.1 { cur } else { best });
            if pmax <= tiny {
                return Err(Error::Singular);
            }
            if piv != col {
                for k in 0..n {
                    a.swap(col * n + k, piv * n + k);
                }
                x.swap(col, piv);
            }
            let d = a[col * n + col];
            for r in col + 1..n {
                let f = a[r * n + col] / d;
                if f == S::zero() {
                    continue;
                }
                for k in col..n {
                    let t = a[col * n + k];
                    a[r * n + k] -= f * t;
                }
                let t = x[col];
                x[r] -= f * t;
            }
        }
        for col in (0..n).rev() {
            let mut s = x[col];
            for k in col + 1..n {
                s -= a[col * n + k] * x[k];
            }
            x[col] = s / a[col * n + col];
        }
        Ok(x)
    }
}

impl<S> std::ops::Index<(usize, usize)> for Dense<S> {
    type Output = S;
    fn index(&self, (r, c): (usize, usize)) -> &S {
        &self.data[r * self.n + c]
    }
}

impl<S> std::ops::IndexMut<(usize, usize)> for Dense<S> {
    fn index_mut(&mut self, (r, c): (usize, usize)) -> &mut S {
        &mut self.data[r * self.n + c]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn solves_small_system() {
        let mut a = Dense::<f64>::zeros(3);
        a.data = vec![0.0, 2.0, 1.0, 1.0, 1.0, 0.0, 3.0, 0.0, 1.0];
        let x = a.solve(&[5.0, 3.0, 6.0]).unwrap();
        // x = (1.4, 1.6, 1.8) by substitution
        for (got, want) in x.iter().zip([1.4, 1.6, 1.8]) {
            assert!((got - want).abs() < 1e-12);
        }
    }

    #[test]
    fn detects_singular() {
        let mut a = Dense::<f64>::zeros(2);
        a.data = vec![1.0, 2.0, 2.0, 4.0];
        assert!(matches!(a.solve(&[1.0, 2.0]), Err(Error::Singular)));
    }
}
