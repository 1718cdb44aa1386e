//! Discrete-time vanishing-discount analysis.

mod discounted;
mod gain_bias;
mod halfline;
mod oracle;
mod sweep;

pub use discounted::{
    discounted_policy_iteration, iterate, solve_discounted, solve_discounted_from, DiscountedSolution,
    POLICY_ITERATION_ALPHA,
};
pub use gain_bias::{
    evaluate_policy, solve_gain_bias, solve_gain_bias_with, GainBias, GainBiasOptions, PolicyEvaluation,
};
pub use halfline::{
    certify_invariant, certify_subinvariant, certify_subinvariant_with, certify_superinvariant, classify, pump_holds,
    sup_director, CertifyOptions, HalfLine, HalfLineKind, SPOT_CHECK_S,
};
pub use oracle::{enumerate_policies, limiting_matrix, policy_gain, ENUMERATION_GUARD};
pub use sweep::{alpha_sweep, parse_sweep_csv, SweepOptions, SweepRecord, SweepRow, SweepTable, CSV_HEADER};

use crate::operators::OperatorHandle;
use crate::scalar::Scalar;

impl<S: Scalar> GainBias<S> {
    /// The half-line `s ↦ u + sη` of this solution, certified against `t`.
    pub fn half_line(&self, t: &OperatorHandle<S>, tol: S) -> crate::Result<HalfLine<S>> {
        classify(t, &HalfLine::new(self.u.clone(), self.eta.clone())?, tol)
    }
}
