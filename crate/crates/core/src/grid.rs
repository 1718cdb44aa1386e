//! Uniform grids on box or ball domains, and functions sampled on them.

use std::collections::VecDeque;
use std::fmt::Write as _;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Points within this distance of the domain count as inside.
pub const DOMAIN_TOL: f64 = 1e-12;

/// Compact state domain: an axis-aligned box or a Euclidean ball.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", bound = "S: Scalar")]
pub enum Domain<S> {
    Box { lower: Vec<S>, upper: Vec<S> },
    Ball { center: Vec<S>, radius: S },
}

impl<S: Scalar> Domain<S> {
    pub fn cube(dim: usize, lo: S, hi: S) -> Self {
        Domain::Box {
            lower: vec![lo; dim],
            upper: vec![hi; dim],
        }
    }

    pub fn ball(dim: usize, radius: S) -> Self {
        Domain::Ball {
            center: vec![S::zero(); dim],
            radius,
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            Domain::Box { lower, .. } => lower.len(),
            Domain::Ball { center, .. } => center.len(),
        }
    }

    pub(crate) fn validate(&self) -> Result<()> {
        match self {
            Domain::Box { lower, upper } => {
                if lower.is_empty() || lower.len() != upper.len() {
                    return Err(Error::InvalidModel(
                        "box bounds must be nonempty and equal length".into(),
                    ));
                }
                if lower
                    .iter()
                    .zip(upper)
                    .any(|(l, u)| !(l.is_finite() && u.is_finite() && l < u))
                {
                    return Err(Error::InvalidModel(
                        "box needs finite lower < upper on every axis".into(),
                    ));
                }
            }
            Domain::Ball { center, radius } => {
                if center.is_empty() || center.iter().any(|c| !c.is_finite()) {
                    return Err(Error::InvalidModel("ball center must be finite and nonempty".into()));
                }
                if !(radius.is_finite() && *radius > S::zero()) {
                    return Err(Error::InvalidModel("ball radius must be positive".into()));
                }
            }
        }
        Ok(())
    }

    /// Euclidean distance from `x` to the domain (zero inside).
    pub fn distance(&self, x: &[S]) -> S {
        match self {
            Domain::Box { lower, upper } => x
                .iter()
                .zip(lower.iter().zip(upper))
                .map(|(&xi, (&l, &u))| {
                    let d = (l - xi).max(xi - u).max(S::zero());
                    d * d
                })
                .sum::<S>()
                .sqrt(),
            Domain::Ball { center, radius } => (euclid(x, center) - *radius).max(S::zero()),
        }
    }

    pub fn contains(&self, x: &[S]) -> bool {
        x.len() == self.dim() && self.distance(x) <= S::lit(DOMAIN_TOL)
    }

    pub fn check_contains(&self, x: &[S]) -> Result<()> {
        if x.len() != self.dim() {
            return Err(Error::LengthMismatch {
                expected: self.dim(),
                got: x.len(),
            });
        }
        if self.contains(x) {
            Ok(())
        } else {
            Err(Error::OutsideDomain {
                point: x.iter().map(|v| v.as_f64()).collect(),
            })
        }
    }

    /// Nearest point of the domain, written in place. Returns the distance moved.
    pub fn project(&self, x: &mut [S]) -> S {
        match self {
            Domain::Box { lower, upper } => {
                let mut d2 = S::zero();
                for ((xi, &l), &u) in x.iter_mut().zip(lower).zip(upper) {
                    let c = xi.max(l).min(u);
                    d2 += (*xi - c) * (*xi - c);
                    *xi = c;
                }
                d2.sqrt()
            }
            Domain::Ball { center, radius } => {
                let r = euclid(x, center);
                if r <= *radius {
                    return S::zero();
                }
                let scale = *radius / r;
                for (xi, &c) in x.iter_mut().zip(center) {
                    *xi = c + (*xi - c) * scale;
                }
                r - *radius
            }
        }
    }

    pub fn bounding_box(&self) -> (Vec<S>, Vec<S>) {
        match self {
            Domain::Box { lower, upper } => (lower.clone(), upper.clone()),
            Domain::Ball { center, radius } => (
                center.iter().map(|&c| c - *radius).collect(),
                center.iter().map(|&c| c + *radius).collect(),
            ),
        }
    }
}

pub(crate) fn euclid<S: Scalar>(a: &[S], b: &[S]) -> S {
    a.iter().zip(b).map(|(&x, &y)| (x - y) * (x - y)).sum::<S>().sqrt()
}

/// Tensor grid with uniform spacing `h` and a mask selecting the nodes in Ω̄.
///
/// Nodes are linearized with axis 0 varying fastest. Only masked nodes carry
/// values; they are addressed by their rank among masked nodes.
#[derive(Clone, Debug, PartialEq)]
pub struct Grid<S> {
    lower: Vec<S>,
    h: S,
    counts: Vec<usize>,
    strides: Vec<usize>,
    mask: Vec<bool>,
    masked: Vec<usize>,
    rank: Vec<usize>,
}

const UNMASKED: usize = usize::MAX;

impl<S: Scalar> Grid<S> {
    pub fn new(lower: Vec<S>, h: S, counts: Vec<usize>, mask: Vec<bool>) -> Result<Self> {
        if lower.is_empty() || lower.len() != counts.len() {
            return Err(Error::InvalidArgument(
                "grid needs one origin and count per axis".into(),
            ));
        }
        if !(h.is_finite() && h > S::zero()) {
            return Err(Error::InvalidArgument("grid spacing must be positive".into()));
        }
        if counts.iter().any(|&n| n < 2) {
            return Err(Error::InvalidArgument("grid needs at least 2 nodes per axis".into()));
        }
        let total = counts.iter().try_fold(1usize, |acc, &n| acc.checked_mul(n));
        let total = total.ok_or_else(|| Error::InvalidArgument("grid too large".into()))?;
        if mask.len() != total {
            return Err(Error::LengthMismatch {
                expected: total,
                got: mask.len(),
            });
        }
        let mut strides = Vec::with_capacity(counts.len());
        let mut s = 1;
        for &n in &counts {
            strides.push(s);
            s *= n;
        }
        let mut rank = vec![UNMASKED; total];
        let mut masked = Vec::new();
        for (lin, &m) in mask.iter().enumerate() {
            if m {
                rank[lin] = masked.len();
                masked.push(lin);
            }
        }
        if masked.is_empty() {
            return Err(Error::Empty("grid mask"));
        }
        let grid = Self {
            lower,
            h,
            counts,
            strides,
            mask,
            masked,
            rank,
        };
        grid.check_connected()?;
        Ok(grid)
    }

    /// Grid with spacing `h` covering the bounding box of `domain`; nodes
    /// inside the domain are masked. Balls get a grid centered on the center.
    pub fn for_domain(domain: &Domain<S>, h: S) -> Result<Self> {
        domain.validate()?;
        if !(h.is_finite() && h > S::zero()) {
            return Err(Error::InvalidArgument("grid spacing must be positive".into()));
        }
        let (lower, counts) = match domain {
            Domain::Box { lower, upper } => {
                let counts = lower
                    .iter()
                    .zip(upper)
                    .map(|(&l, &u)| cells_to_cover(u - l, h) + 1)
                    .collect();
                (lower.clone(), counts)
            }
            Domain::Ball { center, radius } => {
                let n = cells_to_cover(*radius, h);
                let lower = center.iter().map(|&c| c - S::from_usize_lossy(n) * h).collect();
                (lower, vec![2 * n + 1; center.len()])
            }
        };
        let total: usize = counts.iter().product();
        let mut grid_mask = vec![false; total];
        let mut x = vec![S::zero(); lower.len()];
        for (lin, m) in grid_mask.iter_mut().enumerate() {
            let mut rem = lin;
            for k in 0..lower.len() {
                x[k] = lower[k] + S::from_usize_lossy(rem % counts[k]) * h;
                rem /= counts[k];
            }
            *m = domain.contains(&x);
        }
        Self::new(lower, h, counts, grid_mask)
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn h(&self) -> S {
        self.h
    }

    pub fn counts(&self) -> &[usize] {
        &self.counts
    }

    pub fn lower(&self) -> &[S] {
        &self.lower
    }

    /// Number of masked nodes.
    pub fn len(&self) -> usize {
        self.masked.len()
    }

    pub fn is_empty(&self) -> bool {
        self.masked.is_empty()
    }

    pub fn mask(&self) -> &[bool] {
        &self.mask
    }

    fn multi_index(&self, lin: usize, out: &mut [usize]) {
        let mut rem = lin;
        for (k, o) in out.iter_mut().enumerate() {
            *o = rem % self.counts[k];
            rem /= self.counts[k];
        }
    }

    pub fn coord(&self, node: usize, axis: usize) -> S {
        let lin = self.masked[node];
        let i = (lin / self.strides[axis]) % self.counts[axis];
        self.lower[axis] + S::from_usize_lossy(i) * self.h
    }

    pub fn node(&self, node: usize) -> Vec<S> {
        (0..self.dim()).map(|k| self.coord(node, k)).collect()
    }

    pub fn node_into(&self, node: usize, out: &mut [S]) {
        for (k, o) in out.iter_mut().enumerate() {
            *o = self.coord(node, k);
        }
    }

    /// Masked neighbour one step along `axis` (forward if `forward`).
    pub fn neighbor(&self, node: usize, axis: usize, forward: bool) -> Option<usize> {
        let lin = self.masked[node];
        let i = (lin / self.strides[axis]) % self.counts[axis];
        let j = if forward {
            if i + 1 >= self.counts[axis] {
                return None;
            }
            lin + self.strides[axis]
        } else {
            if i == 0 {
                return None;
            }
            lin - self.strides[axis]
        };
        match self.rank[j] {
            UNMASKED => None,
            r => Some(r),
        }
    }

    /// Nodes whose 2·dim axis neighbours are all masked.
    pub fn is_interior(&self, node: usize) -> bool {
        (0..self.dim()).all(|k| self.neighbor(node, k, true).is_some() && self.neighbor(node, k, false).is_some())
    }

    /// Masked node at the given coordinates, if any (tolerance `1e-6·h`).
    pub fn locate(&self, x: &[S]) -> Option<usize> {
        if x.len() != self.dim() {
            return None;
        }
        let mut lin = 0;
        for k in 0..self.dim() {
            let t = (x[k] - self.lower[k]) / self.h;
            let i = t.round();
            if (t - i).abs() > S::lit(1e-6) || i < S::zero() {
                return None;
            }
            let i = i.to_usize()?;
            if i >= self.counts[k] {
                return None;
            }
            lin += i * self.strides[k];
        }
        match self.rank[lin] {
            UNMASKED => None,
            r => Some(r),
        }
    }

    /// Multilinear interpolation stencil at `y`, restricted to masked corners
    /// with positive weight and renormalized. Points are clamped to the grid box.
    pub fn stencil(&self, y: &[S], out: &mut Vec<(usize, S)>) {
        out.clear();
        let d = self.dim();
        let mut base = 0;
        let mut frac = [S::zero(); 8];
        let mut fracs: Vec<S>;
        let frac: &mut [S] = if d <= 8 {
            &mut frac[..d]
        } else {
            fracs = vec![S::zero(); d];
            &mut fracs
        };
        for k in 0..d {
            let n = self.counts[k];
            let t = (y[k] - self.lower[k]) / self.h;
            let c = t.floor().max(S::zero()).to_usize().unwrap_or(0).min(n - 2);
            frac[k] = (t - S::from_usize_lossy(c)).max(S::zero()).min(S::one());
            base += c * self.strides[k];
        }
        let mut total = S::zero();
        for corner in 0..(1usize << d) {
            let mut w = S::one();
            let mut lin = base;
            for (k, &f) in frac.iter().enumerate() {
                if corner >> k & 1 == 1 {
                    w *= f;
                    lin += self.strides[k];
                } else {
                    w *= S::one() - f;
                }
            }
            if w > S::zero() {
                let r = self.rank[lin];
                if r != UNMASKED {
                    out.push((r, w));
                    total += w;
                }
            }
        }
        if total > S::zero() {
            for (_, w) in out.iter_mut() {
                *w /= total;
            }
        }
    }

    /// Masked nodes in the `2^dim` sweep orderings (each axis forward or backward).
    pub(crate) fn sweep_orders(&self) -> Vec<Vec<usize>> {
        let d = self.dim();
        let mut idx = vec![0usize; d];
        (0..(1usize << d))
            .map(|dirs| {
                let mut order = Vec::with_capacity(self.len());
                for &lin in &self.masked {
                    self.multi_index(lin, &mut idx);
                    let mut key = 0usize;
                    let mut scale = 1usize;
                    for k in 0..d {
                        let i = if dirs >> k & 1 == 1 {
                            self.counts[k] - 1 - idx[k]
                        } else {
                            idx[k]
                        };
                        key += i * scale;
                        scale *= self.counts[k];
                    }
                    order.push((key, self.rank[lin]));
                }
                order.sort_unstable();
                order.into_iter().map(|(_, r)| r).collect()
            })
            .collect()
    }

    fn check_connected(&self) -> Result<()> {
        let mut seen = vec![false; self.len()];
        let mut queue = VecDeque::from([0usize]);
        seen[0] = true;
        let mut count = 1;
        while let Some(v) = queue.pop_front() {
            for k in 0..self.dim() {
                for fwd in [false, true] {
                    if let Some(w) = self.neighbor(v, k, fwd) {
                        if !seen[w] {
                            seen[w] = true;
                            count += 1;
                            queue.push_back(w);
                        }
                    }
                }
            }
        }
        if count == self.len() {
            Ok(())
        } else {
            Err(Error::InvalidArgument(format!(
                "grid mask is disconnected ({count} of {} nodes reachable)",
                self.len()
            )))
        }
    }
}

fn cells_to_cover<S: Scalar>(width: S, h: S) -> usize {
    let t = width / h;
    let r = t.round();
    let n = if (t - r).abs() <= S::lit(1e-9) * (S::one() + r) {
        r
    } else {
        t.ceil()
    };
    n.to_usize().unwrap_or(1).max(1)
}

/// Values at the masked nodes of a shared grid.
#[derive(Clone, Debug)]
pub struct GridFunction<S> {
    grid: Arc<Grid<S>>,
    values: Vec<S>,
}

impl<S: Scalar> GridFunction<S> {
    pub fn new(grid: Arc<Grid<S>>, values: Vec<S>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::LengthMismatch {
                expected: grid.len(),
                got: values.len(),
            });
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("grid function values must be finite".into()));
        }
        Ok(Self { grid, values })
    }

    pub fn constant(grid: Arc<Grid<S>>, c: S) -> Self {
        let values = vec![c; grid.len()];
        Self { grid, values }
    }

    pub fn from_fn(grid: Arc<Grid<S>>, mut f: impl FnMut(&[S]) -> S) -> Result<Self> {
        let mut x = vec![S::zero(); grid.dim()];
        let values = (0..grid.len())
            .map(|i| {
                grid.node_into(i, &mut x);
                f(&x)
            })
            .collect();
        Self::new(grid, values)
    }

    pub fn grid(&self) -> &Arc<Grid<S>> {
        &self.grid
    }

    pub fn values(&self) -> &[S] {
        &self.values
    }

    pub fn into_values(self) -> Vec<S> {
        self.values
    }

    pub fn map(&self, f: impl Fn(S) -> S) -> Self {
        Self {
            grid: self.grid.clone(),
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn sup_norm(&self) -> S {
        self.values.iter().fold(S::zero(), |m, v| m.max(v.abs()))
    }

    pub fn dist(&self, other: &Self) -> Result<S> {
        same_grid(&self.grid, &other.grid)?;
        Ok(self
            .values
            .iter()
            .zip(&other.values)
            .fold(S::zero(), |m, (a, b)| m.max((*a - *b).abs())))
    }

    /// Interpolated value at an arbitrary point of the grid box.
    pub fn interpolate(&self, y: &[S]) -> S {
        let mut st = Vec::new();
        self.grid.stencil(y, &mut st);
        st.iter().map(|&(j, w)| w * self.values[j]).sum()
    }

    /// `x_1,…,x_d,value`, one masked node per line.
    pub fn to_csv(&self) -> String {
        let d = self.grid.dim();
        let mut out = String::new();
        for k in 1..=d {
            let _ = write!(out, "x_{k},");
        }
        out.push_str("value\n");
        for (i, v) in self.values.iter().enumerate() {
            for k in 0..d {
                let _ = write!(out, "{},", self.grid.coord(i, k));
            }
            let _ = writeln!(out, "{v}");
        }
        out
    }

    /// Reads a CSV produced by [`to_csv`](Self::to_csv) onto `grid`. Every
    /// masked node must appear exactly once.
    pub fn from_csv(grid: Arc<Grid<S>>, text: &str) -> Result<Self> {
        let d = grid.dim();
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let header = lines.next().ok_or(Error::Empty("csv"))?;
        let cols: Vec<&str> = header.split(',').map(str::trim).collect();
        let expected: Vec<String> = (1..=d).map(|k| format!("x_{k}")).chain(["value".to_string()]).collect();
        if cols != expected {
            return Err(Error::GridMismatch(format!(
                "csv header {header:?}, expected {}",
                expected.join(",")
            )));
        }
        let mut values = vec![S::nan(); grid.len()];
        let mut filled = 0;
        let mut x = vec![S::zero(); d];
        for line in lines {
            let fields: Vec<&str> = line.split(',').collect();
            if fields.len() != d + 1 {
                return Err(Error::Parse(format!("expected {} fields: {line}", d + 1)));
            }
            for k in 0..d {
                x[k] = parse_scalar(fields[k])?;
            }
            let node = grid
                .locate(&x)
                .ok_or_else(|| Error::GridMismatch(format!("no masked node at {:?}", fields[..d].to_vec())))?;
            if !values[node].is_nan() {
                return Err(Error::GridMismatch(format!(
                    "duplicate node {:?}",
                    fields[..d].to_vec()
                )));
            }
            values[node] = parse_scalar(fields[d])?;
            filled += 1;
        }
        if filled != grid.len() {
            return Err(Error::GridMismatch(format!(
                "csv covers {filled} of {} nodes",
                grid.len()
            )));
        }
        Self::new(grid, values)
    }
}

fn parse_scalar<S: Scalar>(s: &str) -> Result<S> {
    let v: f64 = s.trim().parse().map_err(|e| Error::Parse(format!("{s:?}: {e}")))?;
    S::from_f64(v).ok_or_else(|| Error::Parse(format!("{s:?} out of range")))
}

pub(crate) fn same_grid<S: Scalar>(a: &Arc<Grid<S>>, b: &Arc<Grid<S>>) -> Result<()> {
    if Arc::ptr_eq(a, b) || a == b {
        Ok(())
    } else {
        Err(Error::GridMismatch("grid functions live on different grids".into()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unit_interval_grid() {
        let g = Grid::for_domain(&Domain::cube(1, 0.0, 1.0), 1e-3).unwrap();
        assert_eq!(g.len(), 1001);
        assert_eq!(g.coord(1000, 0), 1.0);
        assert_eq!(g.locate(&[0.5]), Some(500));
    }

    #[test]
    fn ball_grid_is_symmetric_and_connected() {
        let g = Grid::for_domain(&Domain::ball(2, 1.0), 0.02).unwrap();
        assert_eq!(g.counts(), &[101, 101]);
        assert!(g.locate(&[0.0, 0.0]).is_some());
        assert!(g.locate(&[1.0, 0.0]).is_some());
        assert!(g.locate(&[0.9, 0.9]).is_none());
    }

    #[test]
    fn stencil_reproduces_linear_functions() {
        let g = Arc::new(Grid::for_domain(&Domain::cube(2, -1.0, 1.0), 0.1).unwrap());
        let f = GridFunction::from_fn(g, |x: &[f64]| 2.0 * x[0] - 3.0 * x[1] + 0.5).unwrap();
        for y in [[0.03, -0.47], [0.999, 0.2], [-1.0, 1.0]] {
            assert!((f.interpolate(&y) - (2.0 * y[0] - 3.0 * y[1] + 0.5)).abs() < 1e-12);
        }
    }

    #[test]
    fn stencil_skips_unmasked_corners() {
        let g = Grid::for_domain(&Domain::ball(2, 1.0), 0.25).unwrap();
        let mut st = Vec::new();
        g.stencil(&[0.95, 0.2], &mut st);
        assert!(!st.is_empty());
        let total: f64 = st.iter().map(|p| p.1).sum();
        assert!((total - 1.0).abs() < 1e-12);
    }

    #[test]
    fn disconnected_mask_is_rejected() {
        let mask = vec![true, false, true];
        assert!(Grid::new(vec![0.0], 1.0, vec![3], mask).is_err());
    }

    #[test]
    fn csv_round_trip_is_exact() {
        let g = Arc::new(Grid::for_domain(&Domain::ball(2, 1.0), 0.1).unwrap());
        let f = GridFunction::from_fn(g.clone(), |x: &[f64]| (x[0] * 7.3).sin() / 3.0 + x[1]).unwrap();
        let back = GridFunction::from_csv(g, &f.to_csv()).unwrap();
        assert_eq!(back.values(), f.values());
    }

    #[test]
    fn csv_on_wrong_grid_fails() {
        let g1 = Arc::new(Grid::for_domain(&Domain::cube(1, 0.0, 1.0), 0.1).unwrap());
        let g2 = Arc::new(Grid::for_domain(&Domain::cube(1, 0.0, 1.0), 0.05).unwrap());
        let f = GridFunction::constant(g2, 1.0);
        assert!(GridFunction::from_csv(g1, &f.to_csv()).is_err());
    }

    #[test]
    fn sweep_orders_are_permutations() {
        let g = Grid::for_domain(&Domain::ball(2, 1.0), 0.25).unwrap();
        for order in g.sweep_orders() {
            let mut o = order.clone();
            o.sort_unstable();
            assert_eq!(o, (0..g.len()).collect::<Vec<_>>());
        }
    }

    #[test]
    fn projection_onto_ball_and_box() {
        let b = Domain::ball(2, 1.0_f64);
        let mut x = [3.0, 4.0];
        assert!((b.project(&mut x) - 4.0).abs() < 1e-12);
        assert!((x[0] - 0.6).abs() < 1e-12);
        let c = Domain::cube(2, 0.0, 1.0);
        let mut y = [1.5, 0.5];
        assert_eq!(c.project(&mut y), 0.5);
        assert_eq!(y, [1.0, 0.5]);
    }
}
