use std::sync::Arc;

use proptest::prelude::*;

use super::*;
use crate::grid::Grid;

fn sys(name: &str) -> ControlSystem<f64> {
    builtin_system(name).unwrap()
}

#[test]
fn zero_covector() {
    let s = sys("decay_1d");
    for x in [0.0, 0.3, 1.0] {
        let h = hamiltonian(&s, &[x], &[0.0]).unwrap();
        assert!((h + s.min_cost(&[x])).abs() < 1e-15);
        assert_eq!(reduced_hamiltonian(&s, &[x], &[0.0]).unwrap(), 0.0);
    }
}

#[test]
fn decay_hamiltonian_at_origin() {
    let s = sys("decay_1d");
    for p in [-5.0, 0.0, 2.5] {
        assert_eq!(hamiltonian(&s, &[0.0], &[p]).unwrap(), -1.0);
    }
}

#[test]
fn outside_domain_is_an_error() {
    let s = sys("decay_1d");
    assert!(matches!(
        hamiltonian(&s, &[1.5], &[0.0]),
        Err(Error::OutsideDomain { .. })
    ));
    assert!(hamiltonian(&s, &[1.0 + 1e-13], &[0.0]).is_ok());
    assert!(joint_hamiltonian(&s, &[-0.1], 0.0, &[0.0], &[0.0]).is_err());
}

#[test]
fn uncontrolled_rotation() {
    let s = sys("rotation_2d");
    let x = [0.3, -0.4];
    let p = [1.5, 2.0];
    let f = [x[1], -x[0]];
    let l = s.cost(&x, &[0.0]);
    let fp = f[0] * p[0] + f[1] * p[1];
    assert!((hamiltonian(&s, &x, &p).unwrap() - (fp - l)).abs() < 1e-15);
    let q = [-0.2, 0.7];
    let fq = f[0] * q[0] + f[1] * q[1];
    let j = joint_hamiltonian(&s, &x, 0.4, &p, &q).unwrap();
    assert!((j - fp.min(fq - l + 0.4)).abs() < 1e-15);
    let j1 = discounted_joint(&s, 1.0, &x, 0.4, 0.3, &p, &q).unwrap();
    assert!((j1 - (fp - l + 0.4).min(fq - l + 0.4 + 0.3)).abs() < 1e-15);
}

#[test]
fn double_integrator_reduced() {
    let s = sys("double_integrator");
    assert_eq!(reduced_hamiltonian(&s, &[0.2, -0.5], &[0.0, 1.0]).unwrap(), 1.0);
}

#[test]
fn joint_collapses_with_unit_cost() {
    let s = ControlSystem::new(
        "unit",
        Domain::cube(1, -1.0, 1.0),
        Arc::new(|x: &[f64], a: &[f64], f: &mut [f64]| f[0] = a[0] * (1.0 - x[0] * x[0])),
        Arc::new(|_: &[f64], _: &[f64]| 1.0),
        uniform_actions(&[(-1.0, 1.0)], 9),
        2.0,
        0.0,
    )
    .unwrap();
    for (x, p) in [(0.1, 2.0), (-0.7, -1.0)] {
        let j = joint_hamiltonian(&s, &[x], 1.0, &[p], &[p]).unwrap();
        assert!((j - reduced_hamiltonian(&s, &[x], &[p]).unwrap()).abs() < 1e-15);
    }
}

#[test]
fn discounted_joint_small_lambda_limit() {
    let s = sys("reach_1d");
    let (x, u, w, p, q) = ([0.4], 0.3, 5.0, [1.2], [-0.8]);
    let jl = discounted_joint(&s, 1e-6, &x, u, w, &p, &q).unwrap();
    let j = joint_hamiltonian(&s, &x, u, &p, &q).unwrap();
    assert!((jl - j).abs() < 1e-5);
    assert!(discounted_joint(&s, 0.0, &x, u, w, &p, &q).is_err());
}

#[test]
fn unknown_system() {
    assert!(matches!(builtin_system::<f64>("pendulum"), Err(Error::UnknownName(_))));
}

#[test]
fn fixtures_pass_spot_checks() {
    for b in BuiltinSystem::ALL {
        let s: ControlSystem<f64> = b.build().unwrap();
        assert_eq!(s.name, b.name());
    }
    let s: ControlSystem<f32> = BuiltinSystem::Rotation2d.build().unwrap();
    assert_eq!(s.dim(), 2);
}

#[test]
fn bad_bounds_are_rejected() {
    let r = ControlSystem::new(
        "fast",
        Domain::cube(1, 0.0, 1.0),
        Arc::new(|_: &[f64], _: &[f64], f: &mut [f64]| f[0] = 3.0),
        Arc::new(|_: &[f64], _: &[f64]| 0.5),
        vec![vec![0.0]],
        1.0,
        0.0,
    );
    assert!(r.is_err());
    let r = ControlSystem::new(
        "costly",
        Domain::cube(1, 0.0, 1.0),
        Arc::new(|_: &[f64], _: &[f64], f: &mut [f64]| f[0] = 0.0),
        Arc::new(|_: &[f64], _: &[f64]| 1.5),
        vec![vec![0.0]],
        1.0,
        0.0,
    );
    assert!(r.is_err());
}

#[test]
fn decay_action_grid_has_endpoints() {
    let s = sys("decay_1d");
    assert_eq!(s.actions().len(), DEFAULT_ACTION_SAMPLES);
    assert_eq!(s.actions()[0], vec![0.0]);
    assert_eq!(s.actions()[DEFAULT_ACTION_SAMPLES - 1], vec![1.0]);
}

fn grid_for(s: &ControlSystem<f64>, h: f64) -> Arc<Grid<f64>> {
    Arc::new(Grid::for_domain(s.domain(), h).unwrap())
}

#[test]
fn hw_double_integrator() {
    let s = sys("double_integrator");
    let g = grid_for(&s, 0.05);
    let k = 2.0;
    let w = GridFunction::from_fn(g, |x| k * x[1]).unwrap();
    assert!(check_hw(&s, &w).unwrap() <= 0.05);
}

#[test]
fn hw_harmonic_oscillator() {
    let s = sys("harmonic_oscillator");
    let g = grid_for(&s, 0.05);
    let w = GridFunction::from_fn(g, |x| 4.0 * x[1]).unwrap();
    assert!(check_hw(&s, &w).unwrap() <= 0.05);
}

#[test]
fn hw_nonholonomic() {
    let s = BuiltinSystem::Nonholonomic.build_with(9).unwrap();
    let g = grid_for(&s, 0.1);
    let w = GridFunction::from_fn(g, |x| 2.0 * x[0]).unwrap();
    assert!(check_hw(&s, &w).unwrap() <= 0.1);
}

#[test]
fn hw_zero_function_reports_largest_minimal_cost() {
    let s = sys("double_integrator");
    let g = grid_for(&s, 0.1);
    let w = GridFunction::constant(g.clone(), 0.0);
    let expected = (0..g.len())
        .filter(|&i| g.is_interior(i))
        .map(|i| s.min_cost(&g.node(i)))
        .fold(f64::NEG_INFINITY, f64::max);
    assert!((check_hw(&s, &w).unwrap() - expected).abs() < 1e-15);
}

#[test]
fn hw_dimension_mismatch() {
    let s = sys("double_integrator");
    let g = Arc::new(Grid::for_domain(&Domain::cube(1, 0.0, 1.0), 0.1).unwrap());
    assert!(matches!(
        check_hw(&s, &GridFunction::constant(g, 0.0)),
        Err(Error::GridMismatch(_))
    ));
}

#[test]
fn invariance_probe_separates_fixtures() {
    for (name, h, invariant) in [
        ("decay_1d", 0.01, true),
        ("rotation_2d", 0.02, true),
        ("reach_1d", 0.01, true),
        ("double_integrator", 0.05, false),
        ("harmonic_oscillator", 0.05, false),
    ] {
        let s = sys(name);
        let g = Grid::for_domain(s.domain(), h).unwrap();
        let step = h / (s.lipschitz_f + 1.0);
        let rep = invariance_probe(&s, &g, step).unwrap();
        assert_eq!(rep.holds(INVARIANCE_TOL), invariant, "{name}: {rep:?}");
    }
}

#[test]
fn rotation_pair_for_default_cost() {
    let s = sys("rotation_2d");
    let g = grid_for(&s, 0.1);
    let (u, w) = rotation_pair(&s, g.clone()).unwrap();
    for i in 0..g.len() {
        let x = g.node(i);
        assert!((u.values()[i] - 0.5).abs() < 1e-12);
        assert!((w.values()[i] - x[1] / 4.0).abs() < 1e-9, "{x:?}");
    }
}

fn point_in(s: &ControlSystem<f64>, t: &[f64]) -> Vec<f64> {
    let (lo, hi) = s.domain().bounding_box();
    let mut x: Vec<f64> = lo.iter().zip(&hi).zip(t).map(|((l, u), t)| l + (u - l) * t).collect();
    s.domain().project(&mut x);
    x
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn hamiltonian_bracketed_by_reduced(idx in 0usize..6, t in prop::collection::vec(0.0f64..1.0, 3),
                                        p in prop::collection::vec(-5.0f64..5.0, 3)) {
        let s: ControlSystem<f64> = BuiltinSystem::ALL[idx].build_with(7).unwrap();
        let x = point_in(&s, &t[..s.dim()]);
        let p = &p[..s.dim()];
        let h = reduced_hamiltonian(&s, &x, p).unwrap();
        let big_h = hamiltonian(&s, &x, p).unwrap();
        prop_assert!(big_h <= h + 1e-12);
        prop_assert!(big_h >= h - 1.0 - 1e-12);
    }

    #[test]
    fn joint_below_min_max(idx in 0usize..6, t in prop::collection::vec(0.0f64..1.0, 3), u in -2.0f64..2.0,
                           p in prop::collection::vec(-5.0f64..5.0, 3), q in prop::collection::vec(-5.0f64..5.0, 3)) {
        let s: ControlSystem<f64> = BuiltinSystem::ALL[idx].build_with(7).unwrap();
        let x = point_in(&s, &t[..s.dim()]);
        let (p, q) = (&p[..s.dim()], &q[..s.dim()]);
        let j = joint_hamiltonian(&s, &x, u, p, q).unwrap();
        let bound = reduced_hamiltonian(&s, &x, p).unwrap().min(hamiltonian(&s, &x, q).unwrap() + u);
        prop_assert!(j <= bound + 1e-12);
        prop_assert!(joint_hamiltonian(&s, &x, u + 0.5, p, q).unwrap() >= j);
        let jl = discounted_joint(&s, 0.3, &x, u, 0.0, p, q).unwrap();
        prop_assert!(discounted_joint(&s, 0.3, &x, u, 1.0, p, q).unwrap() >= jl);
    }

    #[test]
    fn refining_actions_never_decreases(t in 0.0f64..1.0, p in -5.0f64..5.0, q in -5.0f64..5.0, u in -1.0f64..1.0) {
        let coarse: ControlSystem<f64> = BuiltinSystem::Reach1d.build_with(5).unwrap();
        let fine: ControlSystem<f64> = BuiltinSystem::Reach1d.build_with(9).unwrap();
        let x = [2.0 * t - 1.0];
        prop_assert!(hamiltonian(&fine, &x, &[p]).unwrap() >= hamiltonian(&coarse, &x, &[p]).unwrap());
        prop_assert!(reduced_hamiltonian(&fine, &x, &[p]).unwrap() >= reduced_hamiltonian(&coarse, &x, &[p]).unwrap());
        prop_assert!(joint_hamiltonian(&fine, &x, u, &[p], &[q]).unwrap()
            >= joint_hamiltonian(&coarse, &x, u, &[p], &[q]).unwrap());
    }

    #[test]
    fn reduced_is_positively_homogeneous(t in 0.0f64..1.0, p in -5.0f64..5.0, s in 0.01f64..100.0) {
        let sys: ControlSystem<f64> = BuiltinSystem::DoubleIntegrator.build_with(7).unwrap();
        let x = [2.0 * t - 1.0, 0.5 - t];
        let a = reduced_hamiltonian(&sys, &x, &[p, -p]).unwrap();
        let b = reduced_hamiltonian(&sys, &x, &[s * p, -s * p]).unwrap();
        prop_assert!((b - s * a).abs() <= 1e-12 * (1.0 + b.abs()));
    }
}
