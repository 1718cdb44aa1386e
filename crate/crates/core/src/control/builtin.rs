//! Named fixtures and their closed forms.

use std::str::FromStr;
use std::sync::Arc;

use super::{ControlSystem, Cost, Domain, Dynamics};
use crate::error::{Error, Result};
use crate::grid::{Grid, GridFunction};
use crate::scalar::Scalar;

/// Samples per interval dimension of the action set.
pub const DEFAULT_ACTION_SAMPLES: usize = 33;

/// Tensor product of `n` uniform samples on each `[lo, hi]`, endpoints included.
pub fn uniform_actions<S: Scalar>(bounds: &[(S, S)], n: usize) -> Vec<Vec<S>> {
    let n = n.max(2);
    let axis = |(lo, hi): (S, S)| -> Vec<S> {
        (0..n)
            .map(|i| {
                if i == n - 1 {
                    hi
                } else {
                    lo + (hi - lo) * S::from_usize_lossy(i) / S::from_usize_lossy(n - 1)
                }
            })
            .collect()
    };
    bounds.iter().fold(vec![Vec::new()], |acc, &b| {
        let pts = axis(b);
        acc.iter()
            .flat_map(|prefix| {
                pts.iter().map(move |&p| {
                    let mut a = prefix.clone();
                    a.push(p);
                    a
                })
            })
            .collect()
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BuiltinSystem {
    /// `x' = −a x`, `L = 1 − √a x` on `[0, 1]`, `a ∈ [0, 1]`.
    Decay1d,
    /// `(x, y)' = (y, −x)` on the unit ball, `L = (1 + x/2)/2`.
    Rotation2d,
    /// `(x, y)' = (y, a)` on `[−1, 1]²`, `a ∈ [−1, 1]`.
    DoubleIntegrator,
    /// `(x, y)' = (y, −x + a)` on `[−1/2, 1] × [−1, 1]`, `a ∈ [−1, 1]`.
    HarmonicOscillator,
    /// `x' = a₁(1, 0, −x₂) + a₂(0, 1, −x₁)` on `[−1, 1]³`, `a ∈ [−1, 1]²`.
    Nonholonomic,
    /// `x' = a(1 − x²)`, `L = x²` on `[−1, 1]`, `a ∈ [−1, 1]`.
    Reach1d,
}

impl BuiltinSystem {
    pub const ALL: [BuiltinSystem; 6] = [
        BuiltinSystem::Decay1d,
        BuiltinSystem::Rotation2d,
        BuiltinSystem::DoubleIntegrator,
        BuiltinSystem::HarmonicOscillator,
        BuiltinSystem::Nonholonomic,
        BuiltinSystem::Reach1d,
    ];

    pub fn name(self) -> &'static str {
        match self {
            BuiltinSystem::Decay1d => "decay_1d",
            BuiltinSystem::Rotation2d => "rotation_2d",
            BuiltinSystem::DoubleIntegrator => "double_integrator",
            BuiltinSystem::HarmonicOscillator => "harmonic_oscillator",
            BuiltinSystem::Nonholonomic => "nonholonomic",
            BuiltinSystem::Reach1d => "reach_1d",
        }
    }

    /// Whether the domain is invariant, so that the HJB solver applies.
    pub fn invariant_domain(self) -> bool {
        matches!(
            self,
            BuiltinSystem::Decay1d | BuiltinSystem::Rotation2d | BuiltinSystem::Reach1d
        )
    }

    pub fn build<S: Scalar>(self) -> Result<ControlSystem<S>> {
        self.build_with(DEFAULT_ACTION_SAMPLES)
    }

    /// Builds the fixture with `samples` points per action dimension.
    pub fn build_with<S: Scalar>(self, samples: usize) -> Result<ControlSystem<S>> {
        let unit = [(-S::one(), S::one())];
        match self {
            BuiltinSystem::Decay1d => ControlSystem::new(
                self.name(),
                Domain::cube(1, S::zero(), S::one()),
                Arc::new(|x: &[S], a: &[S], f: &mut [S]| f[0] = -a[0] * x[0]),
                Arc::new(|x: &[S], a: &[S]| S::one() - a[0].max(S::zero()).sqrt() * x[0]),
                uniform_actions(&[(S::zero(), S::one())], samples),
                S::one(),
                S::one(),
            ),
            BuiltinSystem::Rotation2d => rotation_2d(S::one(), None),
            BuiltinSystem::DoubleIntegrator => ControlSystem::new(
                self.name(),
                Domain::cube(2, -S::one(), S::one()),
                Arc::new(|x: &[S], a: &[S], f: &mut [S]| {
                    f[0] = x[1];
                    f[1] = a[0];
                }),
                bump_cost(),
                uniform_actions(&unit, samples),
                S::two().sqrt(),
                S::one(),
            ),
            BuiltinSystem::HarmonicOscillator => ControlSystem::new(
                self.name(),
                Domain::Box {
                    lower: vec![-S::half(), -S::one()],
                    upper: vec![S::one(), S::one()],
                },
                Arc::new(|x: &[S], a: &[S], f: &mut [S]| {
                    f[0] = x[1];
                    f[1] = -x[0] + a[0];
                }),
                bump_cost(),
                uniform_actions(&unit, samples),
                S::lit(5.0).sqrt(),
                S::one(),
            ),
            BuiltinSystem::Nonholonomic => ControlSystem::new(
                self.name(),
                Domain::cube(3, -S::one(), S::one()),
                Arc::new(|x: &[S], a: &[S], f: &mut [S]| {
                    f[0] = a[0];
                    f[1] = a[1];
                    f[2] = -a[0] * x[1] - a[1] * x[0];
                }),
                bump_cost(),
                uniform_actions(&[unit[0], unit[0]], samples),
                S::lit(6.0).sqrt(),
                S::one(),
            ),
            BuiltinSystem::Reach1d => ControlSystem::new(
                self.name(),
                Domain::cube(1, -S::one(), S::one()),
                Arc::new(|x: &[S], a: &[S], f: &mut [S]| f[0] = a[0] * (S::one() - x[0] * x[0])),
                Arc::new(|x: &[S], _: &[S]| x[0] * x[0]),
                uniform_actions(&unit, samples),
                S::two(),
                S::two(),
            ),
        }
    }
}

impl FromStr for BuiltinSystem {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|b| b.name() == s)
            .ok_or_else(|| Error::UnknownName(s.to_string()))
    }
}

pub fn builtin_system<S: Scalar>(name: &str) -> Result<ControlSystem<S>> {
    name.parse::<BuiltinSystem>()?.build()
}

/// `|x|² / (1 + |x|²)`, action-independent.
fn bump_cost<S: Scalar>() -> Cost<S> {
    Arc::new(|x: &[S], _: &[S]| {
        let r2: S = x.iter().map(|&v| v * v).sum();
        r2 / (S::one() + r2)
    })
}

/// Uncontrolled rotation `(x, y)' = (y, −x)` on the ball `B(0, R)`. Without
/// a cost, `L(x, y) = (1 + x/(2R))/2`.
pub fn rotation_2d<S: Scalar>(radius: S, cost: Option<(Cost<S>, S)>) -> Result<ControlSystem<S>> {
    if !(radius > S::zero() && radius.is_finite()) {
        return Err(Error::InvalidArgument("radius must be positive".into()));
    }
    let (cost, k) = cost.unwrap_or_else(|| {
        let c: Cost<S> = Arc::new(move |x: &[S], _: &[S]| (S::one() + x[0] / (S::two() * radius)) * S::half());
        (c, S::one() / (S::lit(4.0) * radius))
    });
    let dynamics: Dynamics<S> = Arc::new(|x: &[S], _: &[S], f: &mut [S]| {
        f[0] = x[1];
        f[1] = -x[0];
    });
    ControlSystem::new(
        BuiltinSystem::Rotation2d.name(),
        Domain::ball(2, radius),
        dynamics,
        cost,
        vec![vec![S::zero()]],
        radius.max(S::one()),
        k,
    )
}

/// `λV_λ(x) = 1 − x√λ/2` for the decay fixture.
pub fn decay_closed_form<S: Scalar>(lambda: S, x: S) -> S {
    S::one() - x * lambda.sqrt() * S::half()
}

/// Quadrature points per full turn.
const TURN_POINTS: usize = 512;

/// Circular average `u` and corrector `w` of an action-independent cost for
/// the rotation, tabulated on `grid`. In polar coordinates
/// `u(r) = (2π)⁻¹ ∫₀^{2π} L(r, σ) dσ` and `w(r, θ) = ∫₀^θ (L − u)(r, σ) dσ`,
/// so that `⟨f, ∇w⟩ = u − L` along the clockwise flow.
pub fn rotation_pair<S: Scalar>(
    sys: &ControlSystem<S>,
    grid: Arc<Grid<S>>,
) -> Result<(GridFunction<S>, GridFunction<S>)> {
    if sys.dim() != 2 || grid.dim() != 2 {
        return Err(Error::InvalidArgument("rotation pair needs a planar system".into()));
    }
    let a0 = sys.actions()[0].clone();
    let l = |r: S, s: S| sys.cost(&[r * s.cos(), r * s.sin()], &a0);
    let tau = S::two() * S::PI();
    let n = S::from_usize_lossy(TURN_POINTS);
    let mean = |r: S| {
        (0..TURN_POINTS)
            .map(|j| l(r, tau * S::from_usize_lossy(j) / n))
            .sum::<S>()
            / n
    };
    let mut u = Vec::with_capacity(grid.len());
    let mut w = Vec::with_capacity(grid.len());
    for i in 0..grid.len() {
        let x = grid.node(i);
        let r = x[0].hypot(x[1]);
        let ui = mean(r);
        let mut theta = x[1].atan2(x[0]);
        if theta < S::zero() {
            theta += tau;
        }
        // composite Simpson with an even number of panels
        let m = ((theta / tau * n).ceil().to_usize().unwrap_or(0) / 2 * 2).max(2);
        let step = theta / S::from_usize_lossy(m);
        let g = |j: usize| l(r, step * S::from_usize_lossy(j)) - ui;
        let mut acc = g(0) + g(m);
        for j in 1..m {
            acc += g(j) * if j % 2 == 1 { S::lit(4.0) } else { S::two() };
        }
        u.push(ui);
        w.push(acc * step / S::lit(3.0));
    }
    Ok((GridFunction::new(grid.clone(), u)?, GridFunction::new(grid, w)?))
}
