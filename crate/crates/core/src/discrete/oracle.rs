//! Brute-force mean-payoff oracle: enumerate every deterministic stationary
//! policy, form its Cesàro limiting matrix `P*` and take the componentwise
//! minimum of the gains `P* r`.
//!
//! Deliberately shares no code with the policy-iteration path: classes come
//! from Tarjan's SCC algorithm and the linear algebra runs in `f64` through
//! nalgebra's LU.

use nalgebra::{DMatrix, DVector};
use petgraph::algo::tarjan_scc;
use petgraph::graph::DiGraph;

use crate::error::{Error, Result};
use crate::lattice::ValueVector;
use crate::operators::MdpModel;
use crate::scalar::Scalar;

/// Maximum number of policies the oracle will enumerate.
pub const ENUMERATION_GUARD: u128 = 1_000_000;

/// Limiting matrix `P* = lim_N N⁻¹ Σ_{k<N} P^k` of a stochastic matrix.
pub fn limiting_matrix(p: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let n = p.nrows();
    let mut g = DiGraph::<(), ()>::new();
    let nodes: Vec<_> = (0..n).map(|_| g.add_node(())).collect();
    for i in 0..n {
        for j in 0..n {
            if p[(i, j)] > 0.0 {
                g.add_edge(nodes[i], nodes[j], ());
            }
        }
    }
    let mut component = vec![0usize; n];
    let sccs = tarjan_scc(&g);
    for (c, scc) in sccs.iter().enumerate() {
        for node in scc {
            component[node.index()] = c;
        }
    }
    let closed: Vec<bool> = sccs
        .iter()
        .enumerate()
        .map(|(c, scc)| {
            scc.iter().all(|node| {
                let i = node.index();
                (0..n).all(|j| p[(i, j)] == 0.0 || component[j] == c)
            })
        })
        .collect();

    let mut pstar = DMatrix::<f64>::zeros(n, n);
    let mut recurrent = vec![false; n];
    for (c, scc) in sccs.iter().enumerate() {
        if !closed[c] {
            continue;
        }
        let members: Vec<usize> = scc.iter().map(|v| v.index()).collect();
        let m = members.len();
        // stationary law: π (I − P_CC) = 0, Σ π = 1 (last equation replaced)
        let mut a = DMatrix::<f64>::zeros(m, m);
        for (r, &i) in members.iter().enumerate() {
            for (k, &j) in members.iter().enumerate() {
                a[(k, r)] = if i == j { 1.0 } else { 0.0 } - p[(i, j)];
            }
        }
        let mut b = DVector::<f64>::zeros(m);
        for k in 0..m {
            a[(m - 1, k)] = 1.0;
        }
        b[m - 1] = 1.0;
        let pi = a.lu().solve(&b).ok_or(Error::Singular)?;
        for &i in &members {
            recurrent[i] = true;
            for (k, &j) in members.iter().enumerate() {
                pstar[(i, j)] = pi[k];
            }
        }
    }
    let transient: Vec<usize> = (0..n).filter(|&i| !recurrent[i]).collect();
    if !transient.is_empty() {
        let rec: Vec<usize> = (0..n).filter(|&i| recurrent[i]).collect();
        let t = transient.len();
        let mut a = DMatrix::<f64>::identity(t, t);
        let mut b = DMatrix::<f64>::zeros(t, rec.len());
        for (ri, &i) in transient.iter().enumerate() {
            for (ci, &j) in transient.iter().enumerate() {
                a[(ri, ci)] -= p[(i, j)];
            }
            for (ci, &j) in rec.iter().enumerate() {
                b[(ri, ci)] = p[(i, j)];
            }
        }
        // absorption probabilities into each recurrent state
        let absorb = a.lu().solve(&b).ok_or(Error::Singular)?;
        let mut pstar_r = DMatrix::<f64>::zeros(rec.len(), n);
        for (ri, &i) in rec.iter().enumerate() {
            pstar_r.set_row(ri, &pstar.row(i));
        }
        let pstar_t = absorb * pstar_r;
        for (ri, &i) in transient.iter().enumerate() {
            pstar.set_row(i, &pstar_t.row(ri));
        }
    }
    Ok(pstar)
}

/// Gain `P*_π r_π` of a deterministic stationary policy.
pub fn policy_gain<S: Scalar>(m: &MdpModel<S>, policy: &[usize]) -> Result<Vec<f64>> {
    m.check_policy(policy)?;
    let n = m.n_states();
    let mut p = DMatrix::<f64>::zeros(n, n);
    let mut r = DVector::<f64>::zeros(n);
    for (i, &a) in policy.iter().enumerate() {
        let rec = &m.actions(i)[a];
        r[i] = rec.cost.as_f64();
        for &(j, q) in &rec.row {
            p[(i, j)] += q.as_f64();
        }
    }
    let pstar = limiting_matrix(&p)?;
    Ok((pstar * r).iter().copied().collect())
}

/// Componentwise minimum over all deterministic stationary policies of their gain.
pub fn enumerate_policies<S: Scalar>(m: &MdpModel<S>) -> Result<ValueVector<S>> {
    let count = m.policy_count();
    if count > ENUMERATION_GUARD {
        return Err(Error::GuardExceeded {
            count,
            limit: ENUMERATION_GUARD,
        });
    }
    let counts = m.action_counts();
    let n = counts.len();
    let mut best = vec![f64::INFINITY; n];
    let mut policy = vec![0usize; n];
    loop {
        for (b, g) in best.iter_mut().zip(policy_gain(m, &policy)?) {
            *b = b.min(g);
        }
        // mixed-radix increment
        let mut k = 0;
        loop {
            if k == n {
                return Ok(ValueVector::from_raw(best.into_iter().map(S::lit).collect()));
            }
            policy[k] += 1;
            if policy[k] < counts[k] {
                break;
            }
            policy[k] = 0;
            k += 1;
        }
    }
}
