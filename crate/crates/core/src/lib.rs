//! Factored action-value representations for cooperative one-shot games.
//!
//! The crate trains small per-factor networks on the reward of a cooperative
//! one-shot game, rebuilds the joint action-value table from the factors and
//! scores that reconstruction against the exact table.
//!
//! * [`games`] holds the seven reward oracles.
//! * [`factorization`] builds coordination graphs (single agent, random
//!   partition, overlapping, complete, joint).
//! * [`neuralnet`] is a from-scratch MLP with RMSprop.
//! * [`training`] runs the sampling protocol under the mixture-of-experts or
//!   factored-Q rule and reconstructs the joint table.
//! * [`metrics`] computes the accuracy measures.
//! * [`harness`] runs experiment grids and writes CSV/JSON/SVG artifacts.

pub mod error;
pub mod factorization;
pub mod games;
pub mod harness;
pub mod metrics;
pub mod neuralnet;
pub mod seed;
pub mod training;

pub use error::{Error, Result};
pub use factorization::{build_factorization, local_action_of, Factor, Factorization, SchemeKind};
pub use games::{
    enumerate_joint_actions, evaluate_reward, optimal_action_set, true_q_table, GameId, GameParams,
    GameSpec, JointAction, JointType, QTable, EXACT, TIE_EPSILON,
};
pub use harness::{ExperimentConfig, Method, RunResult};
pub use metrics::{evaluate, MetricsReport};
pub use neuralnet::{Gradients, Mlp, NetConfig, OptimizerState};
pub use training::{
    reconstruct, train, FactorNetworkBank, LearningRule, ReconstructedQ, TrainConfig,
    TrainingCurve, TypeConditioning,
};
