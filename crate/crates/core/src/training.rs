//! Training protocol: uniform joint-action sampling, per-factor updates under
//! the mixture-of-experts or factored-Q rule, and reconstruction of the joint
//! table from the factor networks.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::factorization::{Factorization, SchemeKind};
use crate::games::{true_q_table, GameId, GameSpec, JointAction, JointType, QTable};
use crate::metrics;
use crate::neuralnet::{init_network, Gradients, Mlp, NetConfig, OptimizerState, Trace};
use crate::seed::{derive_seed, SeedPart};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LearningRule {
    /// Every factor regresses the global reward on its own.
    MixtureOfExperts,
    /// Factors are fit jointly so that their sum predicts the reward.
    FactoredQ,
}

impl fmt::Display for LearningRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            LearningRule::MixtureOfExperts => "moe",
            LearningRule::FactoredQ => "fq",
        })
    }
}

impl FromStr for LearningRule {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "moe" | "mixture_of_experts" => Ok(LearningRule::MixtureOfExperts),
            "fq" | "factored_q" => Ok(LearningRule::FactoredQ),
            _ => Err(Error::InvalidInput(format!("unknown learning rule '{s}'"))),
        }
    }
}

/// How factor networks see the joint type of a bayesian game.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TypeConditioning {
    /// One network per factor; observed house states are appended to the
    /// constant input.
    #[default]
    Input,
    /// A separate bank of networks for every joint type, constant input.
    PerType,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub samples: usize,
    pub rule: LearningRule,
    /// Hyperparameters; `input_dim`/`output_dim` are set per factor.
    pub net: NetConfig,
    pub seed: u64,
    pub eval_every: usize,
    pub type_conditioning: TypeConditioning,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            samples: 100_000,
            rule: LearningRule::FactoredQ,
            net: NetConfig::default(),
            seed: 0,
            eval_every: 1000,
            type_conditioning: TypeConditioning::Input,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.eval_every == 0 {
            return Err(Error::Config("eval_every must be positive".into()));
        }
        let mut probe = self.net.clone();
        probe.input_dim = 1;
        probe.output_dim = 1;
        probe.validate()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub game: GameId,
    pub scheme: SchemeKind,
    pub f: usize,
    pub rule: LearningRule,
    pub seed: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReconstructedQ {
    pub provenance: Provenance,
    pub table: QTable,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub step: usize,
    pub mse_all: f64,
    pub value_loss: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct TrainingCurve {
    pub checkpoints: Vec<Checkpoint>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FactorNet {
    pub net: Mlp,
    #[serde(skip_serializing, default = "empty_state")]
    pub optimizer: OptimizerState,
}

fn empty_state() -> OptimizerState {
    OptimizerState { layers: Vec::new() }
}

#[derive(Clone, Debug, Default)]
struct Scratch {
    traces: Vec<Trace>,
    grads: Vec<Gradients>,
    preds: Vec<f64>,
    input: Vec<f64>,
}

/// One network (and optimizer state) per factor, per type bank.
#[derive(Clone, Debug)]
pub struct FactorNetworkBank {
    pub game: GameId,
    pub factorization: Factorization,
    pub rule: LearningRule,
    pub conditioning: TypeConditioning,
    pub seed: u64,
    pub net_config: NetConfig,
    /// Laid out as `bank * C + factor`; a single bank unless conditioning is
    /// [`TypeConditioning::PerType`].
    pub networks: Vec<FactorNet>,
    /// House indices feeding each factor's input after the constant 1.0.
    pub feature_houses: Vec<Vec<usize>>,
    type_len: usize,
    scratch: Scratch,
}

/// Serializable view of a bank (parameters only).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BankSnapshot {
    pub game: GameId,
    pub rule: LearningRule,
    pub conditioning: TypeConditioning,
    pub seed: u64,
    pub factorization: Factorization,
    pub feature_houses: Vec<Vec<usize>>,
    pub networks: Vec<FactorNet>,
}

impl FactorNetworkBank {
    /// Fresh bank with per-factor seeds derived from `(seed, factor members,
    /// bank index)`.
    pub fn new(
        spec: &GameSpec,
        factorization: &Factorization,
        rule: LearningRule,
        conditioning: TypeConditioning,
        net: &NetConfig,
        seed: u64,
    ) -> Result<Self> {
        spec.validate()?;
        factorization.validate()?;
        if factorization.n != spec.n || factorization.actions_per_agent != spec.actions_per_agent {
            return Err(Error::Config(format!(
                "factorization is for {} agents x {} actions, game has {} x {}",
                factorization.n, factorization.actions_per_agent, spec.n, spec.actions_per_agent
            )));
        }
        let per_type = spec.bayesian() && conditioning == TypeConditioning::PerType;
        let banks = if per_type { spec.type_space_size() } else { 1 };
        let feature_houses: Vec<Vec<usize>> = factorization
            .factors
            .iter()
            .map(|e| {
                if !spec.bayesian() || per_type {
                    Vec::new()
                } else if factorization.scheme == SchemeKind::Joint {
                    (0..spec.type_len()).collect()
                } else {
                    e.agents
                        .iter()
                        .flat_map(|&i| spec.observed_houses(i).iter().copied())
                        .collect()
                }
            })
            .collect();
        let mut networks = Vec::with_capacity(banks * factorization.count());
        for bank in 0..banks {
            for (e, factor) in factorization.factors.iter().enumerate() {
                let cfg = NetConfig {
                    input_dim: 1 + feature_houses[e].len(),
                    output_dim: factor.local_action_space,
                    ..net.clone()
                };
                let sub = derive_seed(&[
                    SeedPart::U64(seed),
                    SeedPart::Str("init"),
                    SeedPart::Indices(&factor.agents),
                    SeedPart::U64(bank as u64),
                ]);
                let (net, optimizer) = init_network(&cfg, sub)?;
                networks.push(FactorNet { net, optimizer });
            }
        }
        let scratch = Scratch {
            traces: vec![Trace::default(); factorization.count()],
            grads: networks[..factorization.count()]
                .iter()
                .map(|n| Gradients::zeros_for(&n.net))
                .collect(),
            preds: vec![0.0; factorization.count()],
            input: Vec::new(),
        };
        Ok(FactorNetworkBank {
            game: spec.game_id,
            factorization: factorization.clone(),
            rule,
            conditioning,
            seed,
            net_config: net.clone(),
            networks,
            feature_houses,
            type_len: spec.type_len(),
            scratch,
        })
    }

    pub fn factor_count(&self) -> usize {
        self.factorization.count()
    }

    fn bank_of(&self, type_index: usize) -> usize {
        if self.networks.len() > self.factor_count() {
            type_index
        } else {
            0
        }
    }

    fn fill_input(feature_houses: &[usize], burning: &[bool], input: &mut Vec<f64>) {
        input.clear();
        input.push(1.0);
        input.extend(
            feature_houses
                .iter()
                .map(|&h| if burning[h] { 1.0 } else { 0.0 }),
        );
    }

    /// Network input of factor `e` under joint type `burning`.
    pub fn input_for(&self, e: usize, burning: &[bool]) -> Vec<f64> {
        let mut v = Vec::new();
        Self::fill_input(&self.feature_houses[e], burning, &mut v);
        v
    }

    fn check_sample(&self, a: &JointAction, theta: Option<&JointType>) -> Result<()> {
        let fz = &self.factorization;
        if a.0.len() != fz.n || a.0.iter().any(|&x| x >= fz.actions_per_agent) {
            return Err(Error::InvalidInput(
                "joint action does not fit the bank".into(),
            ));
        }
        match theta {
            Some(t) if t.0.len() != self.type_len => Err(Error::InvalidInput(
                "joint type does not fit the bank".into(),
            )),
            None if self.type_len > 0 => Err(Error::InvalidInput("bank needs a joint type".into())),
            _ => Ok(()),
        }
    }

    /// One mixture-of-experts update: each factor regresses `reward` alone.
    pub fn moe_step(
        &mut self,
        a: &JointAction,
        theta: Option<&JointType>,
        reward: f64,
    ) -> Result<()> {
        self.check_sample(a, theta)?;
        let burning = theta.map_or(&[][..], |t| &t.0[..]);
        self.step_raw(LearningRule::MixtureOfExperts, &a.0, burning, reward)
    }

    /// One factored-Q update: every factor follows the shared residual of
    /// the summed prediction.
    pub fn fq_step(
        &mut self,
        a: &JointAction,
        theta: Option<&JointType>,
        reward: f64,
    ) -> Result<()> {
        self.check_sample(a, theta)?;
        let burning = theta.map_or(&[][..], |t| &t.0[..]);
        self.step_raw(LearningRule::FactoredQ, &a.0, burning, reward)
    }

    fn step_raw(
        &mut self,
        rule: LearningRule,
        actions: &[usize],
        burning: &[bool],
        reward: f64,
    ) -> Result<()> {
        let c = self.factor_count();
        let type_index = burning.iter().fold(0, |acc, &b| (acc << 1) | b as usize);
        let base = self.bank_of(type_index) * c;
        let arity = self.factorization.actions_per_agent;
        let Scratch {
            traces,
            grads,
            preds,
            input,
        } = &mut self.scratch;
        // all predictions come from the pre-update snapshot
        for e in 0..c {
            Self::fill_input(&self.feature_houses[e], burning, input);
            let idx = self.factorization.factors[e].local_index(actions, arity);
            preds[e] = self.networks[base + e]
                .net
                .forward_unit(input, idx, &mut traces[e]);
        }
        let shared = reward - preds.iter().sum::<f64>();
        for e in 0..c {
            let residual = match rule {
                LearningRule::MixtureOfExperts => reward - preds[e],
                LearningRule::FactoredQ => shared,
            };
            let idx = self.factorization.factors[e].local_index(actions, arity);
            let slot = &mut self.networks[base + e];
            slot.net
                .backward_into(&mut traces[e], idx, residual, &mut grads[e]);
            slot.net
                .rmsprop_update(&mut slot.optimizer, &grads[e], &self.net_config)?;
        }
        Ok(())
    }

    pub fn snapshot(&self) -> BankSnapshot {
        BankSnapshot {
            game: self.game,
            rule: self.rule,
            conditioning: self.conditioning,
            seed: self.seed,
            factorization: self.factorization.clone(),
            feature_houses: self.feature_houses.clone(),
            networks: self.networks.clone(),
        }
    }
}

/// Joint table from the factor networks: the mean of the local values under
/// the mixture-of-experts rule, their sum under factored-Q.
pub fn reconstruct(bank: &FactorNetworkBank, spec: &GameSpec) -> ReconstructedQ {
    let fz = &bank.factorization;
    let c = fz.count();
    let n_actions = spec.joint_action_count();
    let arity = spec.actions_per_agent;
    let n_types = spec.type_space_size();
    let mut table = QTable::zeros(n_types, n_actions);

    // local index of every factor for every joint action
    let mut digits = vec![0usize; spec.n];
    let mut local: Vec<Vec<u32>> = vec![Vec::with_capacity(n_actions); c];
    for a in 0..n_actions {
        let mut rest = a;
        for d in digits.iter_mut().rev() {
            *d = rest % arity;
            rest /= arity;
        }
        for (e, factor) in fz.factors.iter().enumerate() {
            local[e].push(factor.local_index(&digits, arity) as u32);
        }
    }

    let mut trace = Trace::default();
    let mut input = Vec::new();
    for t in 0..n_types {
        let theta = JointType::from_index(t, spec.type_len());
        let base = bank.bank_of(t) * c;
        let row = table.row_mut(t);
        let slots = bank.networks[base..base + c].iter();
        for ((slot, houses), local_e) in slots.zip(&bank.feature_houses).zip(&local) {
            FactorNetworkBank::fill_input(houses, &theta.0, &mut input);
            let outputs = slot.net.forward_all_unchecked(&input, &mut trace);
            for (v, &li) in row.iter_mut().zip(local_e) {
                *v += outputs[li as usize];
            }
        }
        if bank.rule == LearningRule::MixtureOfExperts {
            row.iter_mut().for_each(|v| *v /= c as f64);
        }
    }
    ReconstructedQ {
        provenance: Provenance {
            game: spec.game_id,
            scheme: fz.scheme,
            f: fz.f,
            rule: bank.rule,
            seed: bank.seed,
        },
        table,
    }
}

/// Trains a fresh bank for `config.samples` uniformly sampled joint actions
/// (and joint types, for bayesian games).
pub fn train(
    spec: &GameSpec,
    factorization: &Factorization,
    config: &TrainConfig,
) -> Result<(FactorNetworkBank, ReconstructedQ, TrainingCurve)> {
    config.validate()?;
    let mut bank = FactorNetworkBank::new(
        spec,
        factorization,
        config.rule,
        config.type_conditioning,
        &config.net,
        config.seed,
    )?;
    let truth = true_q_table(spec);
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(&[
        SeedPart::U64(config.seed),
        SeedPart::Str("sampling"),
    ]));
    let n_actions = spec.joint_action_count();
    let n_types = spec.type_space_size();
    let mut actions = vec![0usize; spec.n];
    let mut burning = vec![false; spec.type_len()];
    let mut curve = TrainingCurve::default();
    for step in 1..=config.samples {
        let mut a = rng.gen_range(0..n_actions);
        for d in actions.iter_mut().rev() {
            *d = a % spec.actions_per_agent;
            a /= spec.actions_per_agent;
        }
        if spec.bayesian() {
            let t = rng.gen_range(0..n_types);
            let h = burning.len();
            for (j, b) in burning.iter_mut().enumerate() {
                *b = (t >> (h - 1 - j)) & 1 == 1;
            }
        }
        let reward = spec.reward_raw(&actions, &burning);
        bank.step_raw(config.rule, &actions, &burning, reward)?;
        if step % config.eval_every == 0 {
            let q_hat = reconstruct(&bank, spec);
            curve.checkpoints.push(Checkpoint {
                step,
                mse_all: metrics::mse_all(&truth, &q_hat.table),
                value_loss: metrics::value_loss(&truth, &q_hat.table),
            });
        }
    }
    let q_hat = reconstruct(&bank, spec);
    Ok((bank, q_hat, curve))
}
