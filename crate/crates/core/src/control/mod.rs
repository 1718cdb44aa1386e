//! Controlled ODEs `x' = f(x, a)` with running cost `L(x, a) ∈ [0, 1]` on a
//! compact domain, and the Hamiltonians built from them.

mod builtin;

use std::fmt;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub use builtin::{
    builtin_system, decay_closed_form, rotation_2d, rotation_pair, uniform_actions, BuiltinSystem,
    DEFAULT_ACTION_SAMPLES,
};

use crate::error::{Error, Result};
use crate::grid::{euclid, GridFunction};
pub use crate::grid::{Domain, DOMAIN_TOL};
use crate::scalar::Scalar;

/// `f(x, a)` written into the output slice.
pub type Dynamics<S> = Arc<dyn Fn(&[S], &[S], &mut [S]) + Send + Sync>;
/// `L(x, a)`.
pub type Cost<S> = Arc<dyn Fn(&[S], &[S]) -> S + Send + Sync>;

/// A control system with a finite sample of the action set.
///
/// Custom systems are registered in code through [`ControlSystem::new`];
/// there is no file format for dynamics.
#[derive(Clone)]
pub struct ControlSystem<S> {
    pub name: String,
    dim: usize,
    dynamics: Dynamics<S>,
    cost: Cost<S>,
    actions: Vec<Vec<S>>,
    domain: Domain<S>,
    /// Bound on `|f|` and on the Lipschitz constant of `f` in `x`.
    pub lipschitz_f: S,
    /// Lipschitz constant of `L` in `x`.
    pub lipschitz_l: S,
}

impl<S: Scalar> fmt::Debug for ControlSystem<S> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ControlSystem")
            .field("name", &self.name)
            .field("dim", &self.dim)
            .field("actions", &self.actions.len())
            .field("domain", &self.domain)
            .field("lipschitz_f", &self.lipschitz_f)
            .field("lipschitz_l", &self.lipschitz_l)
            .finish()
    }
}

/// Number of random points used by the construction-time spot checks.
const SPOT_CHECK_POINTS: usize = 64;

impl<S: Scalar> ControlSystem<S> {
    /// Builds a system and spot-checks `|f| ≤ C`, the Lipschitz bound on `f`,
    /// and `0 ≤ L ≤ 1` at seeded random points of the domain.
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        name: impl Into<String>,
        domain: Domain<S>,
        dynamics: Dynamics<S>,
        cost: Cost<S>,
        actions: Vec<Vec<S>>,
        lipschitz_f: S,
        lipschitz_l: S,
    ) -> Result<Self> {
        domain.validate()?;
        if actions.is_empty() {
            return Err(Error::Empty("action samples"));
        }
        let adim = actions[0].len();
        if actions
            .iter()
            .any(|a| a.len() != adim || a.iter().any(|v| !v.is_finite()))
        {
            return Err(Error::InvalidModel(
                "action samples must be finite and of equal length".into(),
            ));
        }
        if !(lipschitz_f.is_finite() && lipschitz_f >= S::zero() && lipschitz_l.is_finite() && lipschitz_l >= S::zero())
        {
            return Err(Error::InvalidModel(
                "Lipschitz constants must be finite and nonnegative".into(),
            ));
        }
        let sys = Self {
            name: name.into(),
            dim: domain.dim(),
            dynamics,
            cost,
            actions,
            domain,
            lipschitz_f,
            lipschitz_l,
        };
        sys.spot_check()?;
        Ok(sys)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn domain(&self) -> &Domain<S> {
        &self.domain
    }

    pub fn actions(&self) -> &[Vec<S>] {
        &self.actions
    }

    pub fn action_dim(&self) -> usize {
        self.actions[0].len()
    }

    /// Same system with another action sample.
    pub fn with_actions(&self, actions: Vec<Vec<S>>) -> Result<Self> {
        Self::new(
            self.name.clone(),
            self.domain.clone(),
            self.dynamics.clone(),
            self.cost.clone(),
            actions,
            self.lipschitz_f,
            self.lipschitz_l,
        )
    }

    pub fn velocity_into(&self, x: &[S], a: &[S], out: &mut [S]) {
        (self.dynamics)(x, a, out)
    }

    pub fn velocity(&self, x: &[S], a: &[S]) -> Vec<S> {
        let mut out = vec![S::zero(); self.dim];
        (self.dynamics)(x, a, &mut out);
        out
    }

    pub fn cost(&self, x: &[S], a: &[S]) -> S {
        (self.cost)(x, a)
    }

    pub fn min_cost(&self, x: &[S]) -> S {
        self.actions.iter().fold(S::infinity(), |m, a| m.min(self.cost(x, a)))
    }

    fn random_point(&self, rng: &mut ChaCha8Rng) -> Vec<S> {
        let (lo, hi) = self.domain.bounding_box();
        loop {
            let x: Vec<S> = lo
                .iter()
                .zip(&hi)
                .map(|(&l, &u)| l + (u - l) * S::lit(rng.gen::<f64>()))
                .collect();
            if self.domain.contains(&x) {
                return x;
            }
        }
    }

    fn spot_check(&self) -> Result<()> {
        let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
        let slack = |c: S| c * (S::one() + S::lit(1e-9)) + S::lit(1e-12);
        let stride = (self.actions.len() / 16).max(1);
        let mut fx = vec![S::zero(); self.dim];
        let mut fy = vec![S::zero(); self.dim];
        for _ in 0..SPOT_CHECK_POINTS {
            let x = self.random_point(&mut rng);
            let y = self.random_point(&mut rng);
            let dxy = euclid(&x, &y);
            for a in self.actions.iter().step_by(stride) {
                self.velocity_into(&x, a, &mut fx);
                self.velocity_into(&y, a, &mut fy);
                let nf = fx.iter().map(|&v| v * v).sum::<S>().sqrt();
                if !(nf <= slack(self.lipschitz_f)) {
                    return Err(Error::InvalidModel(format!(
                        "{}: |f| = {nf} exceeds C = {}",
                        self.name, self.lipschitz_f
                    )));
                }
                if !(euclid(&fx, &fy) <= slack(self.lipschitz_f * dxy)) {
                    return Err(Error::InvalidModel(format!("{}: f is not C-Lipschitz in x", self.name)));
                }
                let (lx, ly) = (self.cost(&x, a), self.cost(&y, a));
                if !(lx >= -S::lit(1e-12) && lx <= S::one() + S::lit(1e-12)) {
                    return Err(Error::InvalidModel(format!("{}: L = {lx} outside [0,1]", self.name)));
                }
                if !((lx - ly).abs() <= slack(self.lipschitz_l * dxy)) {
                    return Err(Error::InvalidModel(format!("{}: L is not k-Lipschitz in x", self.name)));
                }
            }
        }
        Ok(())
    }

    fn checked<'a>(&self, x: &[S], covectors: impl IntoIterator<Item = &'a [S]>) -> Result<()>
    where
        S: 'a,
    {
        self.domain.check_contains(x)?;
        for p in covectors {
            if p.len() != self.dim {
                return Err(Error::LengthMismatch {
                    expected: self.dim,
                    got: p.len(),
                });
            }
        }
        Ok(())
    }

    /// `max_a` of `g(⟨f(x,a), ·⟩, L(x,a))` over the action sample.
    fn max_over_actions(&self, x: &[S], mut g: impl FnMut(&[S], S) -> S) -> S {
        let mut fx = vec![S::zero(); self.dim];
        self.actions.iter().fold(S::neg_infinity(), |m, a| {
            self.velocity_into(x, a, &mut fx);
            m.max(g(&fx, self.cost(x, a)))
        })
    }
}

fn dot<S: Scalar>(a: &[S], b: &[S]) -> S {
    a.iter().zip(b).map(|(&x, &y)| x * y).sum()
}

/// `H(x, p) = max_a {⟨f(x,a), p⟩ − L(x,a)}`.
pub fn hamiltonian<S: Scalar>(sys: &ControlSystem<S>, x: &[S], p: &[S]) -> Result<S> {
    sys.checked(x, [p])?;
    Ok(sys.max_over_actions(x, |f, l| dot(f, p) - l))
}

/// Cost-free Hamiltonian `h(x, p) = max_a ⟨f(x,a), p⟩`.
pub fn reduced_hamiltonian<S: Scalar>(sys: &ControlSystem<S>, x: &[S], p: &[S]) -> Result<S> {
    sys.checked(x, [p])?;
    Ok(sys.max_over_actions(x, |f, _| dot(f, p)))
}

/// `J(x, u, p, q) = max_a min{⟨f,p⟩, ⟨f,q⟩ − L + u}`.
pub fn joint_hamiltonian<S: Scalar>(sys: &ControlSystem<S>, x: &[S], u: S, p: &[S], q: &[S]) -> Result<S> {
    sys.checked(x, [p, q])?;
    Ok(sys.max_over_actions(x, |f, l| dot(f, p).min(dot(f, q) - l + u)))
}

/// `J_λ(x, u, w, p, q) = max_a min{⟨f,p⟩ − λL + λu, ⟨f,q⟩ − L + u + λw}`.
#[allow(clippy::too_many_arguments)]
pub fn discounted_joint<S: Scalar>(
    sys: &ControlSystem<S>,
    lambda: S,
    x: &[S],
    u: S,
    w: S,
    p: &[S],
    q: &[S],
) -> Result<S> {
    if !(lambda > S::zero() && lambda.is_finite()) {
        return Err(Error::InvalidArgument("lambda must be positive".into()));
    }
    sys.checked(x, [p, q])?;
    Ok(sys.max_over_actions(x, |f, l| {
        (dot(f, p) - lambda * l + lambda * u).min(dot(f, q) - l + u + lambda * w)
    }))
}

/// `min_a {⟨f(x,a), p⟩ + L(x,a)} = −H(x, −p)`, the Hamiltonian in which the
/// Lyapunov-type condition `H(x, ∇W) ≤ 0` is stated.
pub fn lyapunov_hamiltonian<S: Scalar>(sys: &ControlSystem<S>, x: &[S], p: &[S]) -> Result<S> {
    sys.checked(x, [p])?;
    Ok(-sys.max_over_actions(x, |f, l| -(dot(f, p) + l)))
}

/// Largest value of `min_a {⟨f, ∇_h W⟩ + L}` over interior nodes, with
/// central differences. `W` satisfies the condition when this is `≤ 0` (up to `O(h)`).
pub fn check_hw<S: Scalar>(sys: &ControlSystem<S>, w: &GridFunction<S>) -> Result<S> {
    let grid = w.grid();
    if grid.dim() != sys.dim() {
        return Err(Error::GridMismatch(format!(
            "grid has dimension {}, system {}",
            grid.dim(),
            sys.dim()
        )));
    }
    let vals = w.values();
    let two_h = S::two() * grid.h();
    let mut worst = S::neg_infinity();
    let mut p = vec![S::zero(); sys.dim()];
    for i in 0..grid.len() {
        if !grid.is_interior(i) {
            continue;
        }
        for (k, pk) in p.iter_mut().enumerate() {
            let (Some(f), Some(b)) = (grid.neighbor(i, k, true), grid.neighbor(i, k, false)) else {
                unreachable!("interior node")
            };
            *pk = (vals[f] - vals[b]) / two_h;
        }
        worst = worst.max(lyapunov_hamiltonian(sys, &grid.node(i), &p)?);
    }
    if worst == S::neg_infinity() {
        return Err(Error::GridMismatch("grid has no interior nodes".into()));
    }
    Ok(worst)
}

/// Result of the one-step invariance probe.
#[derive(Clone, Debug)]
pub struct InvarianceReport<S> {
    pub nodes_checked: usize,
    /// Largest distance of an Euler step `x + step·f(x,a)` from Ω̄.
    pub max_exit: S,
    pub step: S,
    /// `max_exit / (step · C)`.
    pub ratio: S,
}

impl<S: Scalar> InvarianceReport<S> {
    pub fn holds(&self, tol: S) -> bool {
        self.ratio <= tol
    }
}

/// Default tolerance on [`InvarianceReport::ratio`].
pub const INVARIANCE_TOL: f64 = 0.1;

/// Takes one Euler step from every boundary node of `grid` under every
/// sampled action and measures how far it leaves the domain.
pub fn invariance_probe<S: Scalar>(
    sys: &ControlSystem<S>,
    grid: &crate::grid::Grid<S>,
    step: S,
) -> Result<InvarianceReport<S>> {
    if grid.dim() != sys.dim() {
        return Err(Error::GridMismatch("dimension mismatch".into()));
    }
    let mut fx = vec![S::zero(); sys.dim()];
    let mut y = vec![S::zero(); sys.dim()];
    let mut max_exit = S::zero();
    let mut nodes_checked = 0;
    for i in (0..grid.len()).filter(|&i| !grid.is_interior(i)) {
        let x = grid.node(i);
        nodes_checked += 1;
        for a in sys.actions() {
            sys.velocity_into(&x, a, &mut fx);
            for k in 0..y.len() {
                y[k] = x[k] + step * fx[k];
            }
            max_exit = max_exit.max(sys.domain().distance(&y));
        }
    }
    let denom = step * sys.lipschitz_f;
    let ratio = if denom > S::zero() { max_exit / denom } else { S::zero() };
    Ok(InvarianceReport {
        nodes_checked,
        max_exit,
        step,
        ratio,
    })
}

#[cfg(test)]
mod tests;
