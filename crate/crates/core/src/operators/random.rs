//! Seeded random MDP instances with optional closed-block (multichain) structure.

use rand::seq::SliceRandom;
use rand::Rng;

use super::{ActionRecord, MdpModel};
use crate::scalar::Scalar;

#[derive(Clone, Debug)]
pub struct RandomMdpSpec {
    pub min_states: usize,
    pub max_states: usize,
    pub max_actions: usize,
    /// Probability that the instance gets closed blocks of states.
    pub multichain_prob: f64,
    /// Costs are drawn from `{0, 1/cost_levels, …, 1} · cost_scale`.
    pub cost_scale: f64,
    pub cost_levels: u32,
    /// Transition probabilities are multiples of `1/prob_levels`.
    pub prob_levels: u32,
}

impl Default for RandomMdpSpec {
    fn default() -> Self {
        Self {
            min_states: 1,
            max_states: 6,
            max_actions: 3,
            multichain_prob: 0.6,
            cost_scale: 10.0,
            cost_levels: 40,
            prob_levels: 8,
        }
    }
}

/// Draws an instance. With probability `multichain_prob` up to two disjoint
/// blocks are made closed under every action; the remaining states may move
/// anywhere.
pub fn random_mdp<S: Scalar, R: Rng + ?Sized>(rng: &mut R, spec: &RandomMdpSpec) -> MdpModel<S> {
    let n = rng.gen_range(spec.min_states.max(1)..=spec.max_states.max(spec.min_states.max(1)));
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(rng);
    // block[i] = Some(b) if state i lives in closed block b
    let mut block: Vec<Option<usize>> = vec![None; n];
    let mut members: Vec<Vec<usize>> = Vec::new();
    if n >= 2 && rng.gen_bool(spec.multichain_prob) {
        let n_blocks = if n >= 4 { rng.gen_range(1..=2) } else { 1 };
        let mut cursor = 0;
        for b in 0..n_blocks {
            let remaining = n - cursor - 1;
            if remaining == 0 {
                break;
            }
            let size = rng.gen_range(1..=remaining.min(2));
            let ids: Vec<usize> = order[cursor..cursor + size].to_vec();
            for &i in &ids {
                block[i] = Some(b);
            }
            members.push(ids);
            cursor += size;
        }
    }
    let all: Vec<usize> = (0..n).collect();
    let actions = (0..n)
        .map(|i| {
            let targets: &[usize] = match block[i] {
                Some(b) => &members[b],
                None => &all,
            };
            let k = rng.gen_range(1..=spec.max_actions.max(1));
            (0..k)
                .map(|_| {
                    let cost =
                        spec.cost_scale * f64::from(rng.gen_range(0..=spec.cost_levels)) / f64::from(spec.cost_levels);
                    ActionRecord::new(S::lit(cost), random_row(rng, targets, spec.prob_levels))
                })
                .collect()
        })
        .collect();
    MdpModel::new(n, actions).expect("generated rows are stochastic")
}

fn random_row<S: Scalar, R: Rng + ?Sized>(rng: &mut R, targets: &[usize], levels: u32) -> Vec<(usize, S)> {
    let support = rng.gen_range(1..=targets.len().min(3));
    let chosen: Vec<usize> = targets.choose_multiple(rng, support).copied().collect();
    let levels = levels.max(support as u32);
    // split `levels` units among the chosen successors, each getting at least one
    let mut units = vec![1u32; support];
    for _ in 0..levels - support as u32 {
        units[rng.gen_range(0..support)] += 1;
    }
    chosen
        .into_iter()
        .zip(units)
        .map(|(j, u)| (j, S::lit(f64::from(u) / f64::from(levels))))
        .collect()
}
