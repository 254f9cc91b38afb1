//! Cooperative one-shot games as exact, enumerable reward oracles.
//!
//! Joint actions are indexed in mixed radix with agent 0 as the most
//! significant digit. Joint types (only the firefighting game has them) are
//! indexed the same way over houses, with a burning house encoded as 1.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerance used when reading argmax sets off learned (float) tables.
pub const TIE_EPSILON: f64 = 1e-6;
/// Tolerance for exact tables.
pub const EXACT: f64 = 0.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GameId {
    Dispersion,
    SparseDispersion,
    Platonia,
    Climb,
    Penalty,
    GeneralizedFirefighting,
    Aloha,
}

impl GameId {
    pub const ALL: [GameId; 7] = [
        GameId::Dispersion,
        GameId::SparseDispersion,
        GameId::Platonia,
        GameId::Climb,
        GameId::Penalty,
        GameId::GeneralizedFirefighting,
        GameId::Aloha,
    ];

    pub fn name(self) -> &'static str {
        match self {
            GameId::Dispersion => "dispersion",
            GameId::SparseDispersion => "sparse_dispersion",
            GameId::Platonia => "platonia",
            GameId::Climb => "climb",
            GameId::Penalty => "penalty",
            GameId::GeneralizedFirefighting => "generalized_firefighting",
            GameId::Aloha => "aloha",
        }
    }

    /// The six-agent instance used in the experiments.
    pub fn default_spec(self) -> GameSpec {
        match self {
            GameId::Dispersion => GameSpec::dispersion(6),
            GameId::SparseDispersion => GameSpec::sparse_dispersion(6),
            GameId::Platonia => GameSpec::platonia(6),
            GameId::Climb => GameSpec::climb(6),
            GameId::Penalty => GameSpec::penalty(6),
            GameId::GeneralizedFirefighting => GameSpec::firefighting_line(6),
            GameId::Aloha => GameSpec::aloha_grid(2, 3),
        }
    }

    /// Names of the local actions, by index.
    pub fn action_labels(self) -> &'static [&'static str] {
        match self {
            GameId::Dispersion | GameId::SparseDispersion => &["a0", "a1"],
            GameId::Platonia | GameId::Aloha => &["send", "idle"],
            GameId::Climb | GameId::Penalty => &["a0", "a1", "a2"],
            GameId::GeneralizedFirefighting => &["left", "right"],
        }
    }
}

impl fmt::Display for GameId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for GameId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let key = s.trim().to_ascii_lowercase().replace('-', "_");
        let id = match key.as_str() {
            "dispersion" => GameId::Dispersion,
            "sparse_dispersion" | "sparse" => GameId::SparseDispersion,
            "platonia" => GameId::Platonia,
            "climb" => GameId::Climb,
            "penalty" => GameId::Penalty,
            "generalized_firefighting" | "gff" | "firefighting" => GameId::GeneralizedFirefighting,
            "aloha" => GameId::Aloha,
            _ => return Err(Error::InvalidInput(format!("unknown game '{s}'"))),
        };
        Ok(id)
    }
}

/// Game-specific constants.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum GameParams {
    /// The reward depends only on how many agents pick each action.
    CountBased,
    /// Agent `i` observes and can fight exactly the houses in `reach[i]`;
    /// local action `k` fights `reach[i][k]`.
    Firefighting {
        houses: usize,
        q1: f64,
        q2: f64,
        reach: Vec<Vec<usize>>,
    },
    /// Local action 0 sends, 1 stays idle.
    Aloha {
        q1: f64,
        q2: f64,
        neighbors: Vec<Vec<usize>>,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GameSpec {
    pub game_id: GameId,
    pub n: usize,
    pub actions_per_agent: usize,
    pub params: GameParams,
}

impl GameSpec {
    fn count_based(game_id: GameId, n: usize, actions: usize) -> Self {
        GameSpec {
            game_id,
            n,
            actions_per_agent: actions,
            params: GameParams::CountBased,
        }
    }

    pub fn dispersion(n: usize) -> Self {
        Self::count_based(GameId::Dispersion, n, 2)
    }

    pub fn sparse_dispersion(n: usize) -> Self {
        Self::count_based(GameId::SparseDispersion, n, 2)
    }

    pub fn platonia(n: usize) -> Self {
        Self::count_based(GameId::Platonia, n, 2)
    }

    pub fn climb(n: usize) -> Self {
        Self::count_based(GameId::Climb, n, 3)
    }

    pub fn penalty(n: usize) -> Self {
        Self::count_based(GameId::Penalty, n, 3)
    }

    /// Firefighting on a line of `n + 1` houses: agent `i` covers houses
    /// `i` and `i + 1`.
    pub fn firefighting_line(n: usize) -> Self {
        GameSpec {
            game_id: GameId::GeneralizedFirefighting,
            n,
            actions_per_agent: 2,
            params: GameParams::Firefighting {
                houses: n + 1,
                q1: 2.0,
                q2: 3.0,
                reach: (0..n).map(|i| vec![i, i + 1]).collect(),
            },
        }
    }

    /// Aloha on a `rows x cols` grid of islands numbered row by row. Islands
    /// interfere with their horizontal and vertical neighbours.
    pub fn aloha_grid(rows: usize, cols: usize) -> Self {
        let n = rows * cols;
        let mut neighbors = vec![Vec::new(); n];
        for r in 0..rows {
            for c in 0..cols {
                let i = r * cols + c;
                if c > 0 {
                    neighbors[i].push(i - 1);
                }
                if c + 1 < cols {
                    neighbors[i].push(i + 1);
                }
                if r > 0 {
                    neighbors[i].push(i - cols);
                }
                if r + 1 < rows {
                    neighbors[i].push(i + cols);
                }
                neighbors[i].sort_unstable();
            }
        }
        GameSpec {
            game_id: GameId::Aloha,
            n,
            actions_per_agent: 2,
            params: GameParams::Aloha {
                q1: 2.0,
                q2: -1.0,
                neighbors,
            },
        }
    }

    pub fn bayesian(&self) -> bool {
        matches!(self.params, GameParams::Firefighting { .. })
    }

    /// Number of houses, i.e. the length of a joint type. Zero for games
    /// without types.
    pub fn type_len(&self) -> usize {
        match &self.params {
            GameParams::Firefighting { houses, .. } => *houses,
            _ => 0,
        }
    }

    pub fn type_space_size(&self) -> usize {
        1usize << self.type_len()
    }

    /// |A| = |A_i|^n.
    pub fn joint_action_count(&self) -> usize {
        self.actions_per_agent.pow(self.n as u32)
    }

    /// Houses observed by `agent` (firefighting only).
    pub fn observed_houses(&self, agent: usize) -> &[usize] {
        match &self.params {
            GameParams::Firefighting { reach, .. } => &reach[agent],
            _ => &[],
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidInput(format!("{}: {msg}", self.game_id)));
        if self.n == 0 {
            return bad("agent count must be positive".into());
        }
        if self.actions_per_agent == 0 {
            return bad("actions per agent must be positive".into());
        }
        // keep tables addressable
        if (self.actions_per_agent as f64).powi(self.n as i32) > (1u64 << 26) as f64 {
            return bad("joint action space too large to enumerate".into());
        }
        let expected_actions = match self.game_id {
            GameId::Climb | GameId::Penalty => 3,
            _ => 2,
        };
        if self.actions_per_agent != expected_actions {
            return bad(format!("expects {expected_actions} actions per agent"));
        }
        match (&self.params, self.game_id) {
            (GameParams::CountBased, GameId::GeneralizedFirefighting | GameId::Aloha) => {
                bad("missing game parameters".into())
            }
            (GameParams::CountBased, _) => Ok(()),
            (
                GameParams::Firefighting {
                    houses,
                    q1,
                    q2,
                    reach,
                },
                GameId::GeneralizedFirefighting,
            ) => {
                if *houses == 0 || *houses > 20 {
                    return bad("house count must be in 1..=20".into());
                }
                if reach.len() != self.n {
                    return bad("one reach list per agent required".into());
                }
                for (i, r) in reach.iter().enumerate() {
                    if r.len() != self.actions_per_agent {
                        return bad(format!("agent {i} must reach one house per action"));
                    }
                    if r.iter().any(|&h| h >= *houses) {
                        return bad(format!("agent {i} reaches a house out of range"));
                    }
                }
                let mut covered = vec![false; *houses];
                reach.iter().flatten().for_each(|&h| covered[h] = true);
                if covered.iter().any(|c| !c) {
                    return bad("every house must be reachable".into());
                }
                if !(q1.is_finite() && q2.is_finite()) || *q2 >= 2.0 * q1 {
                    return bad("reward must be sub-additive (q2 < 2 q1)".into());
                }
                Ok(())
            }
            (GameParams::Aloha { q1, q2, neighbors }, GameId::Aloha) => {
                if neighbors.len() != self.n {
                    return bad("one neighbour list per island required".into());
                }
                for (i, ns) in neighbors.iter().enumerate() {
                    for &j in ns {
                        if j >= self.n || j == i {
                            return bad(format!("island {i} has an invalid neighbour {j}"));
                        }
                        if !neighbors[j].contains(&i) {
                            return bad(format!("adjacency {i}-{j} is not symmetric"));
                        }
                    }
                }
                if !(q1.is_finite() && q2.is_finite()) {
                    return bad("rewards must be finite".into());
                }
                Ok(())
            }
            _ => bad("parameters do not match the game".into()),
        }
    }

    /// Reward without validation. `actions` must have length `n` with entries
    /// below `actions_per_agent`; `burning` has one flag per house.
    pub(crate) fn reward_raw(&self, actions: &[usize], burning: &[bool]) -> f64 {
        let n = self.n as f64;
        match &self.params {
            GameParams::CountBased => {
                let mut counts = [0usize; 3];
                for &a in actions {
                    counts[a] += 1;
                }
                let total = self.n;
                match self.game_id {
                    GameId::Dispersion => n - counts[0].max(counts[1]) as f64,
                    GameId::SparseDispersion => {
                        if counts[0] == counts[1] {
                            n / 2.0
                        } else {
                            0.0
                        }
                    }
                    GameId::Platonia => {
                        if counts[0] == 1 {
                            n
                        } else {
                            0.0
                        }
                    }
                    GameId::Climb => {
                        if counts[0] == total {
                            n
                        } else if counts[0] > 0 {
                            0.0
                        } else {
                            n / 2.0
                        }
                    }
                    GameId::Penalty => {
                        if counts[0] == total || counts[2] == total {
                            n
                        } else if counts[1] == total {
                            n / 2.0
                        } else if counts[1] > 0 {
                            0.0
                        } else {
                            -n
                        }
                    }
                    GameId::GeneralizedFirefighting | GameId::Aloha => unreachable!(),
                }
            }
            GameParams::Firefighting {
                houses,
                q1,
                q2,
                reach,
            } => {
                let mut fighters = [0u8; 32];
                for (agent, &a) in actions.iter().enumerate() {
                    let h = reach[agent][a];
                    fighters[h] = fighters[h].saturating_add(1);
                }
                (0..*houses)
                    .filter(|&h| burning[h])
                    .map(|h| match fighters[h] {
                        0 => 0.0,
                        1 => *q1,
                        _ => *q2,
                    })
                    .sum()
            }
            GameParams::Aloha { q1, q2, neighbors } => actions
                .iter()
                .enumerate()
                .filter(|&(_, &a)| a == 0)
                .map(|(i, _)| {
                    if neighbors[i].iter().any(|&j| actions[j] == 0) {
                        *q2
                    } else {
                        *q1
                    }
                })
                .sum(),
        }
    }
}

/// One local action per agent.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct JointAction(pub Vec<usize>);

impl JointAction {
    pub fn from_index(mut index: usize, n: usize, arity: usize) -> Self {
        let mut digits = vec![0; n];
        for d in digits.iter_mut().rev() {
            *d = index % arity;
            index /= arity;
        }
        JointAction(digits)
    }

    pub fn index(&self, arity: usize) -> usize {
        self.0.iter().fold(0, |acc, &d| acc * arity + d)
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.0
    }
}

/// Fire state of every house; `true` means burning.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct JointType(pub Vec<bool>);

impl JointType {
    pub fn from_index(index: usize, houses: usize) -> Self {
        JointType(
            (0..houses)
                .map(|h| (index >> (houses - 1 - h)) & 1 == 1)
                .collect(),
        )
    }

    pub fn index(&self) -> usize {
        self.0.iter().fold(0, |acc, &b| (acc << 1) | b as usize)
    }

    /// Parses a string of `F` (burning) and `N` (not burning) flags.
    pub fn parse(s: &str) -> Result<Self> {
        s.chars()
            .filter(|c| !matches!(c, ',' | ' '))
            .map(|c| match c {
                'F' | 'f' | '1' => Ok(true),
                'N' | 'n' | '0' => Ok(false),
                other => Err(Error::InvalidInput(format!(
                    "joint type flag '{other}' is not F or N"
                ))),
            })
            .collect::<Result<Vec<_>>>()
            .map(JointType)
    }
}

impl fmt::Display for JointType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for &b in &self.0 {
            f.write_str(if b { "F" } else { "N" })?;
        }
        Ok(())
    }
}

/// Dense (joint type, joint action) -> value table.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QTable {
    pub num_types: usize,
    pub num_actions: usize,
    pub values: Vec<f64>,
}

impl QTable {
    pub fn zeros(num_types: usize, num_actions: usize) -> Self {
        QTable {
            num_types,
            num_actions,
            values: vec![0.0; num_types * num_actions],
        }
    }

    /// Single-type table from a plain value list.
    pub fn from_values(values: Vec<f64>) -> Self {
        QTable {
            num_types: 1,
            num_actions: values.len(),
            values,
        }
    }

    pub fn row(&self, type_index: usize) -> &[f64] {
        let start = type_index * self.num_actions;
        &self.values[start..start + self.num_actions]
    }

    pub fn row_mut(&mut self, type_index: usize) -> &mut [f64] {
        let start = type_index * self.num_actions;
        &mut self.values[start..start + self.num_actions]
    }

    pub fn get(&self, type_index: usize, action: usize) -> f64 {
        self.values[type_index * self.num_actions + action]
    }

    pub fn same_shape(&self, other: &QTable) -> bool {
        self.num_types == other.num_types && self.num_actions == other.num_actions
    }
}

pub fn evaluate_reward(spec: &GameSpec, a: &JointAction, theta: Option<&JointType>) -> Result<f64> {
    spec.validate()?;
    if a.0.len() != spec.n {
        return Err(Error::InvalidInput(format!(
            "joint action has {} entries, game has {} agents",
            a.0.len(),
            spec.n
        )));
    }
    if let Some(bad) = a.0.iter().find(|&&x| x >= spec.actions_per_agent) {
        return Err(Error::InvalidInput(format!(
            "local action {bad} out of range (|A_i| = {})",
            spec.actions_per_agent
        )));
    }
    match (spec.bayesian(), theta) {
        (true, Some(t)) if t.0.len() == spec.type_len() => Ok(spec.reward_raw(&a.0, &t.0)),
        (true, Some(t)) => Err(Error::InvalidInput(format!(
            "joint type has {} houses, game has {}",
            t.0.len(),
            spec.type_len()
        ))),
        (true, None) => Err(Error::InvalidInput(
            "bayesian game requires a joint type".into(),
        )),
        (false, None) => Ok(spec.reward_raw(&a.0, &[])),
        (false, Some(_)) => Err(Error::InvalidInput(format!(
            "{} takes no joint type",
            spec.game_id
        ))),
    }
}

pub fn enumerate_joint_actions(spec: &GameSpec) -> Vec<JointAction> {
    (0..spec.joint_action_count())
        .map(|i| JointAction::from_index(i, spec.n, spec.actions_per_agent))
        .collect()
}

pub fn true_q_table(spec: &GameSpec) -> QTable {
    let actions = enumerate_joint_actions(spec);
    let mut table = QTable::zeros(spec.type_space_size(), actions.len());
    for t in 0..table.num_types {
        let theta = JointType::from_index(t, spec.type_len());
        for (row_value, a) in table.row_mut(t).iter_mut().zip(&actions) {
            *row_value = spec.reward_raw(&a.0, &theta.0);
        }
    }
    table
}

/// Indices of actions within `tolerance` of the row maximum, ascending.
/// Use [`EXACT`] for true tables and [`TIE_EPSILON`] for learned ones.
pub fn optimal_action_set(q: &QTable, type_index: usize, tolerance: f64) -> Vec<usize> {
    argmax_set(q.row(type_index), tolerance)
}

pub(crate) fn argmax_set(row: &[f64], tolerance: f64) -> Vec<usize> {
    let best = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    row.iter()
        .enumerate()
        .filter(|&(_, &v)| v >= best - tolerance)
        .map(|(i, _)| i)
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn reward(spec: &GameSpec, a: &[usize]) -> f64 {
        evaluate_reward(spec, &JointAction(a.to_vec()), None).unwrap()
    }

    fn gff_reward(theta: &str, houses_1based: [usize; 6]) -> f64 {
        let spec = GameSpec::firefighting_line(6);
        // agent i (0-based) reaches houses i and i+1; pick the action that
        // fights the requested 1-based house.
        let a: Vec<usize> = houses_1based
            .iter()
            .enumerate()
            .map(|(i, &h)| {
                let house = h - 1;
                assert!(house == i || house == i + 1);
                house - i
            })
            .collect();
        let t = JointType::parse(theta).unwrap();
        evaluate_reward(&spec, &JointAction(a), Some(&t)).unwrap()
    }

    #[test]
    fn dispersion_examples() {
        let s = GameSpec::dispersion(6);
        assert_eq!(reward(&s, &[0, 0, 0, 1, 1, 1]), 3.0);
        assert_eq!(reward(&s, &[0; 6]), 0.0);
    }

    #[test]
    fn sparse_dispersion_examples() {
        let s = GameSpec::sparse_dispersion(6);
        assert_eq!(reward(&s, &[0, 1, 0, 1, 0, 1]), 3.0);
        assert_eq!(reward(&s, &[0, 0, 1, 1, 1, 1]), 0.0);
    }

    #[test]
    fn platonia_examples() {
        let s = GameSpec::platonia(6);
        assert_eq!(reward(&s, &[0, 1, 1, 1, 1, 1]), 6.0);
        assert_eq!(reward(&s, &[1; 6]), 0.0);
    }

    #[test]
    fn climb_examples() {
        let s = GameSpec::climb(6);
        assert_eq!(reward(&s, &[0; 6]), 6.0);
        assert_eq!(reward(&s, &[0, 1, 1, 1, 1, 1]), 0.0);
        assert_eq!(reward(&s, &[1; 6]), 3.0);
    }

    #[test]
    fn penalty_examples() {
        let s = GameSpec::penalty(6);
        assert_eq!(reward(&s, &[2; 6]), 6.0);
        assert_eq!(reward(&s, &[0, 2, 2, 0, 2, 2]), -6.0);
        assert_eq!(reward(&s, &[1; 6]), 3.0);
        assert_eq!(reward(&s, &[0, 1, 2, 2, 2, 2]), 0.0);
    }

    #[test]
    fn firefighting_examples() {
        assert_eq!(gff_reward("NFNFNFN", [2, 2, 4, 4, 6, 6]), 9.0);
        assert_eq!(gff_reward("NFNFNFN", [2, 3, 4, 5, 6, 7]), 6.0);
    }

    #[test]
    fn aloha_examples() {
        let s = GameSpec::aloha_grid(2, 3);
        assert_eq!(reward(&s, &[1; 6]), 0.0);
        assert_eq!(reward(&s, &[1, 1, 0, 1, 1, 1]), 2.0);
        assert_eq!(reward(&s, &[0, 0, 1, 1, 1, 1]), -2.0);
    }

    #[test]
    fn aloha_grid_adjacency() {
        let GameParams::Aloha { neighbors, .. } = GameSpec::aloha_grid(2, 3).params else {
            unreachable!()
        };
        assert_eq!(neighbors[0], vec![1, 3]);
        assert_eq!(neighbors[1], vec![0, 2, 4]);
        assert_eq!(neighbors[5], vec![2, 4]);
    }

    #[test]
    fn dimension_mismatch_is_rejected() {
        let s = GameSpec::dispersion(6);
        assert!(evaluate_reward(&s, &JointAction(vec![0; 5]), None).is_err());
        assert!(evaluate_reward(&s, &JointAction(vec![0, 0, 0, 0, 0, 2]), None).is_err());
        let t = JointType::parse("NFNFNFN").unwrap();
        assert!(evaluate_reward(&s, &JointAction(vec![0; 6]), Some(&t)).is_err());
        let g = GameSpec::firefighting_line(6);
        assert!(evaluate_reward(&g, &JointAction(vec![0; 6]), None).is_err());
        let short = JointType::parse("NFN").unwrap();
        assert!(evaluate_reward(&g, &JointAction(vec![0; 6]), Some(&short)).is_err());
    }

    #[test]
    fn enumeration_order_and_sizes() {
        let s = GameSpec::dispersion(2);
        let got: Vec<_> = enumerate_joint_actions(&s)
            .into_iter()
            .map(|a| a.0)
            .collect();
        assert_eq!(got, vec![vec![0, 0], vec![0, 1], vec![1, 0], vec![1, 1]]);
        assert_eq!(enumerate_joint_actions(&GameSpec::climb(6)).len(), 729);
        assert_eq!(enumerate_joint_actions(&GameSpec::dispersion(6)).len(), 64);
    }

    #[test]
    fn true_tables_have_expected_counts() {
        let d = true_q_table(&GameSpec::dispersion(6));
        assert_eq!(d.values.len(), 64);
        assert_eq!(d.values.iter().filter(|&&v| v == 3.0).count(), 20);
        let p = true_q_table(&GameSpec::platonia(6));
        assert_eq!(p.values.iter().filter(|&&v| v == 6.0).count(), 6);
        assert_eq!(p.values.iter().filter(|&&v| v == 0.0).count(), 58);
        let g = true_q_table(&GameSpec::firefighting_line(6));
        assert_eq!((g.num_types, g.num_actions), (128, 64));
    }

    #[test]
    fn optimal_sets() {
        let d = true_q_table(&GameSpec::dispersion(6));
        let opt = optimal_action_set(&d, 0, EXACT);
        assert_eq!(opt.len(), 20);
        assert!(opt.iter().all(|&i| d.get(0, i) == 3.0));

        let p = true_q_table(&GameSpec::penalty(6));
        assert_eq!(optimal_action_set(&p, 0, EXACT), vec![0, 728]);

        let c = QTable::from_values(vec![1.5; 5]);
        assert_eq!(optimal_action_set(&c, 0, EXACT), vec![0, 1, 2, 3, 4]);

        let learned = QTable::from_values(vec![1.0, 1.0 - 5e-7, 0.9]);
        assert_eq!(optimal_action_set(&learned, 0, TIE_EPSILON), vec![0, 1]);
        assert_eq!(optimal_action_set(&learned, 0, EXACT), vec![0]);
    }

    #[test]
    fn joint_type_index_roundtrip() {
        let t = JointType::parse("NFNFNFN").unwrap();
        assert_eq!(t.index(), 0b0101010);
        assert_eq!(JointType::from_index(t.index(), 7), t);
        assert_eq!(t.to_string(), "NFNFNFN");
    }

    #[test]
    fn default_specs_validate() {
        for id in GameId::ALL {
            let spec = id.default_spec();
            spec.validate().unwrap();
            assert_eq!(spec.n, 6);
        }
        let mut bad = GameSpec::firefighting_line(6);
        if let GameParams::Firefighting { q2, .. } = &mut bad.params {
            *q2 = 5.0;
        }
        assert!(bad.validate().is_err());
    }

    #[test]
    fn spec_json_roundtrip() {
        let spec = GameSpec::aloha_grid(2, 3);
        let json = serde_json::to_string(&spec).unwrap();
        assert!(json.contains("\"game_id\":\"aloha\""));
        let back: GameSpec = serde_json::from_str(&json).unwrap();
        assert_eq!(back, spec);
    }
}
