use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use vanish::discrete::{
    alpha_sweep, certify_subinvariant, enumerate_policies, pump_holds, solve_discounted, solve_gain_bias, HalfLine,
    SweepOptions,
};
use vanish::operators::random::{random_mdp, RandomMdpSpec};
use vanish::{MdpModel, OperatorHandle};

fn instances(seed: u64, count: usize) -> Vec<MdpModel> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let spec = RandomMdpSpec::default();
    (0..count).map(|_| random_mdp(&mut rng, &spec)).collect()
}

#[test]
fn gain_matches_enumeration_and_half_line_is_certified() {
    for (k, m) in instances(11, 60).into_iter().enumerate() {
        let gb = solve_gain_bias(&m, 1e-10).unwrap();
        let oracle = enumerate_policies(&m).unwrap();
        assert!(gb.eta.dist(&oracle).unwrap() <= 1e-9, "instance {k}");
        let t = OperatorHandle::from_mdp(m);
        let h = HalfLine::new(gb.u.clone(), gb.eta.clone()).unwrap();
        assert!(certify_subinvariant(&t, &h, 1e-8).unwrap(), "instance {k}");
        assert!(pump_holds(&t, &h, &[1, 2, 5, 20], 1e-7).unwrap(), "instance {k}");
    }
}

#[test]
fn rescaled_discounted_value_approaches_gain() {
    for (k, m) in instances(12, 40).into_iter().enumerate() {
        let gb = solve_gain_bias(&m, 1e-10).unwrap();
        let t = OperatorHandle::from_mdp(m);
        let alpha = 1e-4;
        let sol = solve_discounted(&t, alpha, 1e-10, 1_000_000).unwrap();
        let dev = sol.v_alpha.scale(alpha).dist(&gb.eta).unwrap();
        let bound = 10.0 * alpha * (1.0 + gb.u.sup_norm().unwrap());
        assert!(dev <= bound, "instance {k}: {dev} > {bound}");
    }
}

#[test]
fn sweep_lower_bound_holds() {
    for m in instances(13, 20) {
        let gb = solve_gain_bias(&m, 1e-10).unwrap();
        let t = OperatorHandle::from_mdp(m);
        let h = gb.half_line(&t, 1e-8).unwrap();
        let table = alpha_sweep(&t, &[0.5, 0.1, 1e-2, 1e-3, 1e-4], &[h], &SweepOptions::for_operator(&t)).unwrap();
        assert!(table.verdict());
    }
}
