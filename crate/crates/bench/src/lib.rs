//! Shared fixtures for the criterion benchmarks.

use fqlab::{
    build_factorization, FactorNetworkBank, GameSpec, LearningRule, NetConfig, SchemeKind,
    TypeConditioning,
};

/// A freshly initialised bank for `spec` under the complete scheme with
/// factors of size `f`.
pub fn complete_bank(spec: &GameSpec, f: usize, rule: LearningRule) -> FactorNetworkBank {
    let fz = build_factorization(
        SchemeKind::Complete,
        spec.n,
        spec.actions_per_agent,
        f,
        None,
        0,
    )
    .expect("complete factorization");
    FactorNetworkBank::new(
        spec,
        &fz,
        rule,
        TypeConditioning::Input,
        &NetConfig::default(),
        0,
    )
    .expect("bank")
}
