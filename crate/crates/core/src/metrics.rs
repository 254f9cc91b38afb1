//! Accuracy measures of a reconstructed table against the true one.
//!
//! Every measure is defined on a single row (one joint type). Table-level
//! functions average rows uniformly over joint types.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::games::{argmax_set, QTable, EXACT, TIE_EPSILON};

/// Softmax temperature used when none is configured.
pub const DEFAULT_TEMPERATURE: f64 = 1.0;

/// Measures for one joint type.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RowMetrics {
    pub mse_all: f64,
    pub mse_optimal: f64,
    pub optimal_preserved: f64,
    pub value_loss: f64,
    pub boltzmann_value_loss: f64,
    pub correctly_ranked: f64,
    /// Raw number of correctly ranked actions.
    pub correctly_ranked_count: f64,
    pub kendall_tau_b: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub mse_all: f64,
    pub mse_optimal: f64,
    pub optimal_preserved: f64,
    pub value_loss: f64,
    pub boltzmann_value_loss: f64,
    pub correctly_ranked: f64,
    pub correctly_ranked_count: f64,
    /// Mean over joint types where it is defined; NaN if it is defined for
    /// none (a constant row).
    pub kendall_tau_b: f64,
    /// Per-type values, empty for games without types.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub per_type: Vec<RowMetrics>,
}

impl MetricsReport {
    /// The seven headline measures, in CSV column order.
    pub fn headline(&self) -> [f64; 7] {
        [
            self.mse_all,
            self.mse_optimal,
            self.optimal_preserved,
            self.value_loss,
            self.boltzmann_value_loss,
            self.correctly_ranked,
            self.kendall_tau_b,
        ]
    }

    pub const HEADLINE_NAMES: [&'static str; 7] = [
        "mse_all",
        "mse_optimal",
        "optimal_preserved",
        "value_loss",
        "boltzmann_value_loss",
        "correctly_ranked",
        "kendall_tau_b",
    ];
}

pub mod row {
    //! Single-row measures.

    use super::*;

    pub fn mse(q: &[f64], q_hat: &[f64]) -> f64 {
        q.iter()
            .zip(q_hat)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            / q.len() as f64
    }

    /// Squared error averaged over the true optimal actions only.
    pub fn mse_optimal(q: &[f64], q_hat: &[f64]) -> f64 {
        let opt = argmax_set(q, EXACT);
        opt.iter()
            .map(|&i| (q[i] - q_hat[i]) * (q[i] - q_hat[i]))
            .sum::<f64>()
            / opt.len() as f64
    }

    /// Greedy action of `q_hat`; ties go to the lowest index.
    pub fn greedy(q_hat: &[f64]) -> usize {
        let mut best = 0;
        for (i, &v) in q_hat.iter().enumerate() {
            if v > q_hat[best] {
                best = i;
            }
        }
        best
    }

    pub fn value_loss(q: &[f64], q_hat: &[f64]) -> f64 {
        let best = q.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        best - q[greedy(q_hat)]
    }

    /// Regret of the softmax policy `pi(a) ~ exp(q_hat(a) / temperature)`.
    pub fn boltzmann_value_loss(q: &[f64], q_hat: &[f64], temperature: f64) -> f64 {
        let best = q.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let top = q_hat.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let weights: Vec<f64> = q_hat
            .iter()
            .map(|&v| ((v - top) / temperature).exp())
            .collect();
        let z: f64 = weights.iter().sum();
        let expected: f64 = weights.iter().zip(q).map(|(w, v)| w * v).sum::<f64>() / z;
        best - expected
    }

    /// Share of true optimal actions that are also optimal (within
    /// `TIE_EPSILON`) in `q_hat`.
    pub fn optimal_preserved(q: &[f64], q_hat: &[f64]) -> f64 {
        let truth = argmax_set(q, EXACT);
        let learned = argmax_set(q_hat, TIE_EPSILON);
        let hits = truth
            .iter()
            .filter(|i| learned.binary_search(i).is_ok())
            .count();
        hits as f64 / truth.len() as f64
    }

    /// Number of actions whose count of strictly better `q_hat` values lies
    /// within the positions their tie class occupies under `q`.
    pub fn correctly_ranked_count(q: &[f64], q_hat: &[f64]) -> usize {
        let mut sorted_q = q.to_vec();
        sorted_q.sort_by(|a, b| b.total_cmp(a));
        let mut sorted_hat = q_hat.to_vec();
        sorted_hat.sort_by(|a, b| b.total_cmp(a));
        // count of entries strictly greater than v in a descending list
        let above = |sorted: &[f64], v: f64| sorted.partition_point(|&x| x > v);
        let at_or_above = |sorted: &[f64], v: f64| sorted.partition_point(|&x| x >= v);
        (0..q.len())
            .filter(|&i| {
                let lo = above(&sorted_q, q[i]);
                let hi = at_or_above(&sorted_q, q[i]) - 1;
                let g = above(&sorted_hat, q_hat[i]);
                lo <= g && g <= hi
            })
            .count()
    }

    pub fn correctly_ranked(q: &[f64], q_hat: &[f64]) -> f64 {
        correctly_ranked_count(q, q_hat) as f64 / q.len() as f64
    }

    /// Kendall tau-b over all action pairs; NaN when either side is constant.
    pub fn kendall_tau_b(q: &[f64], q_hat: &[f64]) -> f64 {
        let (mut concordant, mut discordant) = (0u64, 0u64);
        let (mut ties_q, mut ties_hat) = (0u64, 0u64);
        for i in 0..q.len() {
            for j in i + 1..q.len() {
                let dx = q[i] - q[j];
                let dy = q_hat[i] - q_hat[j];
                match (dx == 0.0, dy == 0.0) {
                    (true, true) => {}
                    (true, false) => ties_q += 1,
                    (false, true) => ties_hat += 1,
                    (false, false) => {
                        if (dx > 0.0) == (dy > 0.0) {
                            concordant += 1;
                        } else {
                            discordant += 1;
                        }
                    }
                }
            }
        }
        let p = concordant as f64;
        let d = discordant as f64;
        let denom = ((p + d + ties_q as f64) * (p + d + ties_hat as f64)).sqrt();
        if denom == 0.0 {
            return f64::NAN;
        }
        (p - d) / denom
    }

    pub fn evaluate(q: &[f64], q_hat: &[f64], temperature: f64) -> RowMetrics {
        let count = correctly_ranked_count(q, q_hat);
        RowMetrics {
            mse_all: mse(q, q_hat),
            mse_optimal: mse_optimal(q, q_hat),
            optimal_preserved: optimal_preserved(q, q_hat),
            value_loss: value_loss(q, q_hat),
            boltzmann_value_loss: boltzmann_value_loss(q, q_hat, temperature),
            correctly_ranked: count as f64 / q.len() as f64,
            correctly_ranked_count: count as f64,
            kendall_tau_b: kendall_tau_b(q, q_hat),
        }
    }
}

fn mean_over_types(q: &QTable, q_hat: &QTable, f: impl Fn(&[f64], &[f64]) -> f64) -> f64 {
    (0..q.num_types)
        .map(|t| f(q.row(t), q_hat.row(t)))
        .sum::<f64>()
        / q.num_types as f64
}

pub fn mse_all(q: &QTable, q_hat: &QTable) -> f64 {
    mean_over_types(q, q_hat, row::mse)
}

pub fn mse_optimal(q: &QTable, q_hat: &QTable) -> f64 {
    mean_over_types(q, q_hat, row::mse_optimal)
}

pub fn value_loss(q: &QTable, q_hat: &QTable) -> f64 {
    mean_over_types(q, q_hat, row::value_loss)
}

pub fn boltzmann_value_loss(q: &QTable, q_hat: &QTable, temperature: f64) -> f64 {
    mean_over_types(q, q_hat, |a, b| {
        row::boltzmann_value_loss(a, b, temperature)
    })
}

pub fn optimal_preserved(q: &QTable, q_hat: &QTable) -> f64 {
    mean_over_types(q, q_hat, row::optimal_preserved)
}

pub fn correctly_ranked(q: &QTable, q_hat: &QTable) -> f64 {
    mean_over_types(q, q_hat, row::correctly_ranked)
}

/// Mean Kendall tau-b over the joint types where it is defined.
pub fn kendall_tau_b(q: &QTable, q_hat: &QTable) -> f64 {
    nan_mean((0..q.num_types).map(|t| row::kendall_tau_b(q.row(t), q_hat.row(t))))
}

fn nan_mean(values: impl Iterator<Item = f64>) -> f64 {
    let (sum, count) = values
        .filter(|v| !v.is_nan())
        .fold((0.0, 0usize), |(s, c), v| (s + v, c + 1));
    if count == 0 {
        f64::NAN
    } else {
        sum / count as f64
    }
}

/// Full report; bayesian tables also keep their per-type rows.
pub fn evaluate(q: &QTable, q_hat: &QTable, temperature: f64) -> Result<MetricsReport> {
    if !q.same_shape(q_hat) {
        return Err(Error::InvalidInput(format!(
            "table shapes differ: {}x{} vs {}x{}",
            q.num_types, q.num_actions, q_hat.num_types, q_hat.num_actions
        )));
    }
    if q.num_actions < 2 {
        return Err(Error::InvalidInput("need at least two actions".into()));
    }
    if !(temperature > 0.0 && temperature.is_finite()) {
        return Err(Error::InvalidInput("temperature must be positive".into()));
    }
    let rows: Vec<RowMetrics> = (0..q.num_types)
        .map(|t| row::evaluate(q.row(t), q_hat.row(t), temperature))
        .collect();
    let k = rows.len() as f64;
    let mean = |f: fn(&RowMetrics) -> f64| rows.iter().map(f).sum::<f64>() / k;
    Ok(MetricsReport {
        mse_all: mean(|r| r.mse_all),
        mse_optimal: mean(|r| r.mse_optimal),
        optimal_preserved: mean(|r| r.optimal_preserved),
        value_loss: mean(|r| r.value_loss),
        boltzmann_value_loss: mean(|r| r.boltzmann_value_loss),
        correctly_ranked: mean(|r| r.correctly_ranked),
        correctly_ranked_count: mean(|r| r.correctly_ranked_count),
        kendall_tau_b: nan_mean(rows.iter().map(|r| r.kendall_tau_b)),
        per_type: if q.num_types > 1 { rows } else { Vec::new() },
    })
}
