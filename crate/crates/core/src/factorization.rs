//! Coordination-graph factorizations over the agents of a game.

use std::fmt;

use rand::seq::{index, SliceRandom};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::games::JointAction;

/// Resampling cap for overlapping factorizations.
pub const MAX_COVERAGE_ATTEMPTS: usize = 10_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SchemeKind {
    SingleAgent,
    RandomPartition,
    Overlapping,
    Complete,
    Joint,
}

impl fmt::Display for SchemeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            SchemeKind::SingleAgent => "single_agent",
            SchemeKind::RandomPartition => "random_partition",
            SchemeKind::Overlapping => "overlapping",
            SchemeKind::Complete => "complete",
            SchemeKind::Joint => "joint",
        };
        f.write_str(s)
    }
}

/// A set of agents sharing one local value term.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Factor {
    /// Strictly increasing agent indices.
    pub agents: Vec<usize>,
    /// Product of the members' action counts.
    pub local_action_space: usize,
}

impl Factor {
    pub fn new(agents: Vec<usize>, actions_per_agent: usize) -> Self {
        let local_action_space = actions_per_agent.pow(agents.len() as u32);
        Factor {
            agents,
            local_action_space,
        }
    }

    /// Mixed-radix index of the members' actions, first member most
    /// significant.
    pub fn local_index(&self, actions: &[usize], actions_per_agent: usize) -> usize {
        self.agents
            .iter()
            .fold(0, |acc, &i| acc * actions_per_agent + actions[i])
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Factorization {
    pub scheme: SchemeKind,
    /// Factor size (n for the joint learner, 1 for single agent).
    pub f: usize,
    pub n: usize,
    pub actions_per_agent: usize,
    pub seed: u64,
    pub factors: Vec<Factor>,
}

impl Factorization {
    /// Number of factors, C.
    pub fn count(&self) -> usize {
        self.factors.len()
    }

    /// Checks every structural invariant of the scheme.
    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| {
            Err(Error::Config(format!(
                "{} factorization: {msg}",
                self.scheme
            )))
        };
        if self.factors.is_empty() {
            return fail("no factors".into());
        }
        let mut covered = vec![0usize; self.n];
        for factor in &self.factors {
            if factor.agents.is_empty() {
                return fail("empty factor".into());
            }
            if factor.agents.windows(2).any(|w| w[0] >= w[1]) {
                return fail(format!(
                    "factor {:?} is not strictly increasing",
                    factor.agents
                ));
            }
            if factor.agents.iter().any(|&i| i >= self.n) {
                return fail(format!("factor {:?} names an unknown agent", factor.agents));
            }
            if factor.local_action_space != self.actions_per_agent.pow(factor.agents.len() as u32) {
                return fail(format!(
                    "factor {:?} has a wrong action space",
                    factor.agents
                ));
            }
            factor.agents.iter().for_each(|&i| covered[i] += 1);
        }
        if covered.contains(&0) {
            return fail("some agent is not covered".into());
        }
        let mut sorted = self.factors.clone();
        sorted.sort();
        sorted.dedup();
        if sorted.len() != self.factors.len() {
            return fail("duplicate factors".into());
        }
        let sizes_ok = |size: usize| self.factors.iter().all(|e| e.agents.len() == size);
        match self.scheme {
            SchemeKind::SingleAgent => {
                if self.count() != self.n || !sizes_ok(1) {
                    return fail("expected one singleton per agent".into());
                }
            }
            SchemeKind::RandomPartition => {
                if !sizes_ok(self.f) || covered.iter().any(|&c| c != 1) {
                    return fail("factors must partition the agents".into());
                }
            }
            SchemeKind::Overlapping => {
                if !sizes_ok(self.f) {
                    return fail(format!("all factors must have size {}", self.f));
                }
            }
            SchemeKind::Complete => {
                if !sizes_ok(self.f) || self.count() != binomial(self.n, self.f) {
                    return fail("expected every subset of the factor size".into());
                }
            }
            SchemeKind::Joint => {
                if self.count() != 1 || self.factors[0].agents.len() != self.n {
                    return fail("expected a single factor over all agents".into());
                }
            }
        }
        Ok(())
    }
}

pub fn binomial(n: usize, k: usize) -> usize {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    (0..k).fold(1, |acc, i| acc * (n - i) / (i + 1))
}

/// All size-`k` subsets of `0..n`, lexicographic.
pub fn combinations(n: usize, k: usize) -> Vec<Vec<usize>> {
    fn rec(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            if n - i < k - cur.len() {
                break;
            }
            cur.push(i);
            rec(i + 1, n, k, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::with_capacity(binomial(n, k));
    rec(0, n, k, &mut Vec::with_capacity(k), &mut out);
    out
}

/// Builds a factorization of `n` agents with `actions_per_agent` actions each.
///
/// `f` is ignored for single-agent and joint schemes. `count` is only read
/// by the overlapping scheme. Random schemes are pure functions of `seed`.
pub fn build_factorization(
    scheme: SchemeKind,
    n: usize,
    actions_per_agent: usize,
    f: usize,
    count: Option<usize>,
    seed: u64,
) -> Result<Factorization> {
    if n == 0 {
        return Err(Error::Config("no agents to factor".into()));
    }
    let needs_size = matches!(
        scheme,
        SchemeKind::RandomPartition | SchemeKind::Overlapping | SchemeKind::Complete
    );
    if needs_size && (f == 0 || f > n) {
        return Err(Error::Config(format!(
            "factor size {f} must lie in 1..={n}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (f, mut members): (usize, Vec<Vec<usize>>) = match scheme {
        SchemeKind::SingleAgent => (1, (0..n).map(|i| vec![i]).collect()),
        SchemeKind::Joint => (n, vec![(0..n).collect()]),
        SchemeKind::Complete => (f, combinations(n, f)),
        SchemeKind::RandomPartition => {
            if !n.is_multiple_of(f) {
                return Err(Error::Config(format!(
                    "random partition needs the factor size {f} to divide {n}"
                )));
            }
            let mut agents: Vec<usize> = (0..n).collect();
            agents.shuffle(&mut rng);
            let parts = agents
                .chunks(f)
                .map(|c| {
                    let mut c = c.to_vec();
                    c.sort_unstable();
                    c
                })
                .collect();
            (f, parts)
        }
        SchemeKind::Overlapping => {
            let count = count
                .ok_or_else(|| Error::Config("overlapping factors need a factor count".into()))?;
            (f, sample_covering(n, f, count, &mut rng)?)
        }
    };
    members.sort();
    let factorization = Factorization {
        scheme,
        f,
        n,
        actions_per_agent,
        seed,
        factors: members
            .into_iter()
            .map(|agents| Factor::new(agents, actions_per_agent))
            .collect(),
    };
    factorization.validate()?;
    Ok(factorization)
}

fn sample_covering(
    n: usize,
    f: usize,
    count: usize,
    rng: &mut ChaCha8Rng,
) -> Result<Vec<Vec<usize>>> {
    let all = combinations(n, f);
    if count == 0 || count > all.len() {
        return Err(Error::Config(format!(
            "cannot pick {count} distinct factors of size {f} out of {}",
            all.len()
        )));
    }
    if count * f < n {
        return Err(Error::Config(format!(
            "{count} factors of size {f} cannot cover {n} agents"
        )));
    }
    for _ in 0..MAX_COVERAGE_ATTEMPTS {
        let picked: Vec<Vec<usize>> = index::sample(rng, all.len(), count)
            .into_iter()
            .map(|i| all[i].clone())
            .collect();
        let mut covered = vec![false; n];
        picked.iter().flatten().for_each(|&i| covered[i] = true);
        if covered.iter().all(|&c| c) {
            return Ok(picked);
        }
    }
    Err(Error::Config(format!(
        "no covering set of {count} factors found in {MAX_COVERAGE_ATTEMPTS} draws"
    )))
}

/// Local joint action index of `factor` inside joint action `a`.
pub fn local_action_of(factor: &Factor, a: &JointAction, actions_per_agent: usize) -> usize {
    factor.local_index(&a.0, actions_per_agent)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::games::{enumerate_joint_actions, GameSpec};

    #[test]
    fn single_agent() {
        let fz = build_factorization(SchemeKind::SingleAgent, 6, 2, 0, None, 0).unwrap();
        assert_eq!(fz.count(), 6);
        for (i, e) in fz.factors.iter().enumerate() {
            assert_eq!(e.agents, vec![i]);
            assert_eq!(e.local_action_space, 2);
        }
    }

    #[test]
    fn complete_counts() {
        let f2 = build_factorization(SchemeKind::Complete, 6, 2, 2, None, 0).unwrap();
        let f3 = build_factorization(SchemeKind::Complete, 6, 3, 3, None, 0).unwrap();
        assert_eq!(f2.count(), 15);
        assert_eq!(f3.count(), 20);
        assert_eq!(f3.factors[0].local_action_space, 27);
    }

    #[test]
    fn joint() {
        let fz = build_factorization(SchemeKind::Joint, 6, 3, 0, None, 0).unwrap();
        assert_eq!(fz.count(), 1);
        assert_eq!(fz.factors[0].agents, (0..6).collect::<Vec<_>>());
        assert_eq!(fz.factors[0].local_action_space, 729);
    }

    #[test]
    fn random_partition_is_seeded_and_disjoint() {
        let a = build_factorization(SchemeKind::RandomPartition, 6, 2, 3, None, 11).unwrap();
        let b = build_factorization(SchemeKind::RandomPartition, 6, 2, 3, None, 11).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.count(), 2);
        let seeds_differ = (0..20u64).any(|s| {
            build_factorization(SchemeKind::RandomPartition, 6, 2, 3, None, s)
                .unwrap()
                .factors
                != a.factors
        });
        assert!(seeds_differ);
        assert!(matches!(
            build_factorization(SchemeKind::RandomPartition, 6, 2, 4, None, 0),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn overlapping_covers_and_is_distinct() {
        for seed in 0..50 {
            let fz = build_factorization(SchemeKind::Overlapping, 6, 2, 2, Some(6), seed).unwrap();
            assert_eq!(fz.count(), 6);
            fz.validate().unwrap();
            let mut sorted = fz.factors.clone();
            sorted.sort();
            assert_eq!(sorted, fz.factors);
        }
    }

    #[test]
    fn overlapping_infeasible() {
        // two pairs can cover at most four agents
        assert!(build_factorization(SchemeKind::Overlapping, 6, 2, 2, Some(2), 0).is_err());
        assert!(build_factorization(SchemeKind::Overlapping, 6, 2, 2, Some(16), 0).is_err());
        assert!(build_factorization(SchemeKind::Overlapping, 6, 2, 2, None, 0).is_err());
    }

    #[test]
    fn local_action_examples() {
        let e = Factor::new(vec![0, 3], 2);
        assert_eq!(
            local_action_of(&e, &JointAction(vec![1, 0, 0, 1, 0, 0]), 2),
            3
        );
        let e = Factor::new(vec![2], 3);
        assert_eq!(
            local_action_of(&e, &JointAction(vec![0, 0, 2, 0, 0, 0]), 3),
            2
        );
        let e = Factor::new(vec![0, 1, 2], 3);
        assert_eq!(
            local_action_of(&e, &JointAction(vec![1, 0, 2, 0, 0, 0]), 3),
            11
        );
    }

    #[test]
    fn joint_local_index_is_joint_index() {
        let spec = GameSpec::climb(6);
        let fz = build_factorization(SchemeKind::Joint, 6, 3, 0, None, 0).unwrap();
        for (i, a) in enumerate_joint_actions(&spec).iter().enumerate() {
            assert_eq!(local_action_of(&fz.factors[0], a, 3), i);
        }
    }

    #[test]
    fn validate_rejects_broken_graphs() {
        let mut fz = build_factorization(SchemeKind::Complete, 6, 2, 2, None, 0).unwrap();
        fz.factors.pop();
        assert!(fz.validate().is_err());
        let mut fz = build_factorization(SchemeKind::SingleAgent, 6, 2, 1, None, 0).unwrap();
        fz.factors[0].agents = vec![1];
        assert!(fz.validate().is_err());
    }
}
