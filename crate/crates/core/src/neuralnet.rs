//! Small fully connected network: leaky-ReLU hidden layers, linear outputs,
//! plain RMSprop. Gradients are written out by hand.

use rand::distributions::{Distribution, Uniform};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct NetConfig {
    pub input_dim: usize,
    pub hidden_units: usize,
    pub hidden_layers: usize,
    pub output_dim: usize,
    pub leaky_slope: f64,
    pub learning_rate: f64,
    pub rms_decay: f64,
    pub rms_epsilon: f64,
}

impl Default for NetConfig {
    fn default() -> Self {
        NetConfig {
            input_dim: 1,
            hidden_units: 16,
            hidden_layers: 1,
            output_dim: 1,
            leaky_slope: 0.01,
            learning_rate: 1e-5,
            rms_decay: 0.9,
            rms_epsilon: 1e-8,
        }
    }
}

impl NetConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Config(format!("network: {m}")));
        if self.input_dim == 0 || self.hidden_units == 0 || self.output_dim == 0 {
            return bad("dimensions must be positive");
        }
        if !(1..=3).contains(&self.hidden_layers) {
            return bad("hidden_layers must be 1, 2 or 3");
        }
        if !(self.leaky_slope > 0.0 && self.leaky_slope < 1.0) {
            return bad("leaky_slope must lie in (0, 1)");
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return bad("learning_rate must be positive");
        }
        if !(0.0..1.0).contains(&self.rms_decay) {
            return bad("rms_decay must lie in [0, 1)");
        }
        if !(self.rms_epsilon >= 0.0 && self.rms_epsilon.is_finite()) {
            return bad("rms_epsilon must be non-negative");
        }
        Ok(())
    }
}

/// Weight matrix (row-major, `outputs x inputs`) and bias vector.
///
/// The same shape doubles as gradient and as RMSprop accumulator storage.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Layer {
    pub inputs: usize,
    pub outputs: usize,
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
}

impl Layer {
    fn zeros(inputs: usize, outputs: usize) -> Self {
        Layer {
            inputs,
            outputs,
            weights: vec![0.0; inputs * outputs],
            bias: vec![0.0; outputs],
        }
    }

    fn row(&self, r: usize) -> &[f64] {
        &self.weights[r * self.inputs..(r + 1) * self.inputs]
    }

    fn values(&self) -> impl Iterator<Item = &f64> {
        self.weights.iter().chain(self.bias.iter())
    }

    fn values_mut(&mut self) -> impl Iterator<Item = &mut f64> {
        self.weights.iter_mut().chain(self.bias.iter_mut())
    }
}

fn zeros_like(layers: &[Layer]) -> Vec<Layer> {
    layers
        .iter()
        .map(|l| Layer::zeros(l.inputs, l.outputs))
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Mlp {
    pub leaky_slope: f64,
    /// Hidden layers followed by the linear output layer.
    pub layers: Vec<Layer>,
}

/// Gradient of the loss with respect to every parameter of an [`Mlp`].
#[derive(Clone, Debug, PartialEq)]
pub struct Gradients {
    pub layers: Vec<Layer>,
}

impl Gradients {
    pub fn zeros_for(net: &Mlp) -> Self {
        Gradients {
            layers: zeros_like(&net.layers),
        }
    }

    pub fn is_zero(&self) -> bool {
        self.layers.iter().all(|l| l.values().all(|&v| v == 0.0))
    }

    pub fn flatten(&self) -> Vec<f64> {
        self.layers
            .iter()
            .flat_map(|l| l.values().copied())
            .collect()
    }
}

/// Running mean of squared gradients, one entry per parameter.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OptimizerState {
    pub layers: Vec<Layer>,
}

/// Activations recorded by a forward pass, reused by the backward pass.
#[derive(Clone, Debug, Default)]
pub struct Trace {
    /// `acts[0]` is the input, `acts[l + 1]` the output of hidden layer `l`.
    acts: Vec<Vec<f64>>,
    /// Pre-activations of the hidden layers.
    pre: Vec<Vec<f64>>,
    /// Output-layer scratch buffer.
    delta: Vec<f64>,
    delta_next: Vec<f64>,
}

#[inline]
fn leaky(z: f64, slope: f64) -> f64 {
    if z > 0.0 {
        z
    } else {
        slope * z
    }
}

#[inline]
fn leaky_grad(z: f64, slope: f64) -> f64 {
    if z > 0.0 {
        1.0
    } else {
        slope
    }
}

/// Uniform weights in ±1/sqrt(fan_in), zero biases, zero optimizer state.
pub fn init_network(config: &NetConfig, seed: u64) -> Result<(Mlp, OptimizerState)> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut dims = vec![config.input_dim];
    dims.extend(std::iter::repeat_n(
        config.hidden_units,
        config.hidden_layers,
    ));
    dims.push(config.output_dim);
    let layers: Vec<Layer> = dims
        .windows(2)
        .map(|w| {
            let (fan_in, fan_out) = (w[0], w[1]);
            let bound = 1.0 / (fan_in as f64).sqrt();
            let dist = Uniform::new_inclusive(-bound, bound);
            Layer {
                inputs: fan_in,
                outputs: fan_out,
                weights: (0..fan_in * fan_out)
                    .map(|_| dist.sample(&mut rng))
                    .collect(),
                bias: vec![0.0; fan_out],
            }
        })
        .collect();
    let state = OptimizerState {
        layers: zeros_like(&layers),
    };
    Ok((
        Mlp {
            leaky_slope: config.leaky_slope,
            layers,
        },
        state,
    ))
}

impl Mlp {
    pub fn input_dim(&self) -> usize {
        self.layers[0].inputs
    }

    pub fn output_dim(&self) -> usize {
        self.layers.last().map_or(0, |l| l.outputs)
    }

    pub fn param_count(&self) -> usize {
        self.layers
            .iter()
            .map(|l| l.weights.len() + l.bias.len())
            .sum()
    }

    fn check_input(&self, input: &[f64]) -> Result<()> {
        if input.len() != self.input_dim() {
            return Err(Error::InvalidInput(format!(
                "network expects {} inputs, got {}",
                self.input_dim(),
                input.len()
            )));
        }
        if input.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidInput("non-finite network input".into()));
        }
        Ok(())
    }

    /// Runs the hidden layers and records activations in `trace`.
    fn hidden_pass(&self, input: &[f64], trace: &mut Trace) {
        let hidden = self.layers.len() - 1;
        trace.acts.resize(hidden + 1, Vec::new());
        trace.pre.resize(hidden, Vec::new());
        trace.acts[0].clear();
        trace.acts[0].extend_from_slice(input);
        for (l, layer) in self.layers[..hidden].iter().enumerate() {
            let (before, after) = trace.acts.split_at_mut(l + 1);
            let x = &before[l];
            let pre = &mut trace.pre[l];
            pre.clear();
            pre.extend((0..layer.outputs).map(|r| {
                layer.bias[r] + layer.row(r).iter().zip(x).map(|(w, v)| w * v).sum::<f64>()
            }));
            let out = &mut after[0];
            out.clear();
            out.extend(pre.iter().map(|&z| leaky(z, self.leaky_slope)));
        }
    }

    fn output_unit(&self, trace: &Trace, index: usize) -> f64 {
        let out = self.layers.last().unwrap();
        let h = trace.acts.last().unwrap();
        out.bias[index]
            + out
                .row(index)
                .iter()
                .zip(h)
                .map(|(w, v)| w * v)
                .sum::<f64>()
    }

    /// All output values for `input`.
    pub fn forward(&self, input: &[f64]) -> Result<Vec<f64>> {
        self.check_input(input)?;
        let mut trace = Trace::default();
        Ok(self.forward_all_unchecked(input, &mut trace))
    }

    pub(crate) fn forward_all_unchecked(&self, input: &[f64], trace: &mut Trace) -> Vec<f64> {
        self.hidden_pass(input, trace);
        (0..self.output_dim())
            .map(|k| self.output_unit(trace, k))
            .collect()
    }

    /// Value of a single output unit; leaves activations in `trace` for a
    /// following [`Mlp::backward_into`].
    pub(crate) fn forward_unit(&self, input: &[f64], index: usize, trace: &mut Trace) -> f64 {
        self.hidden_pass(input, trace);
        self.output_unit(trace, index)
    }

    /// Gradient of `0.5 * residual^2` where `residual = target - output[index]`.
    /// Only the selected output unit contributes.
    pub fn backward(&self, input: &[f64], output_index: usize, residual: f64) -> Result<Gradients> {
        self.check_input(input)?;
        if output_index >= self.output_dim() {
            return Err(Error::InvalidInput(format!(
                "output index {output_index} out of range ({} outputs)",
                self.output_dim()
            )));
        }
        let mut trace = Trace::default();
        self.hidden_pass(input, &mut trace);
        let mut grads = Gradients::zeros_for(self);
        self.backward_into(&mut trace, output_index, residual, &mut grads);
        Ok(grads)
    }

    /// Fills `grads` (overwriting it) using activations from the last
    /// forward pass recorded in `trace`.
    pub(crate) fn backward_into(
        &self,
        trace: &mut Trace,
        output_index: usize,
        residual: f64,
        grads: &mut Gradients,
    ) {
        for g in &mut grads.layers {
            g.weights.fill(0.0);
            g.bias.fill(0.0);
        }
        let last = self.layers.len() - 1;
        let dout = -residual;
        let h = &trace.acts[last];
        {
            let g = &mut grads.layers[last];
            let start = output_index * g.inputs;
            for (gw, &hv) in g.weights[start..start + g.inputs].iter_mut().zip(h) {
                *gw = dout * hv;
            }
            g.bias[output_index] = dout;
        }
        // dL/d(hidden activation) of the last hidden layer
        trace.delta.clear();
        trace
            .delta
            .extend(self.layers[last].row(output_index).iter().map(|w| dout * w));
        for l in (0..last).rev() {
            let layer = &self.layers[l];
            for (d, &z) in trace.delta.iter_mut().zip(&trace.pre[l]) {
                *d *= leaky_grad(z, self.leaky_slope);
            }
            let x = &trace.acts[l];
            let g = &mut grads.layers[l];
            for r in 0..layer.outputs {
                let d = trace.delta[r];
                g.bias[r] = d;
                for (gw, &xv) in g.weights[r * layer.inputs..(r + 1) * layer.inputs]
                    .iter_mut()
                    .zip(x)
                {
                    *gw = d * xv;
                }
            }
            if l > 0 {
                trace.delta_next.clear();
                trace.delta_next.resize(layer.inputs, 0.0);
                for r in 0..layer.outputs {
                    let d = trace.delta[r];
                    for (dn, w) in trace.delta_next.iter_mut().zip(layer.row(r)) {
                        *dn += d * w;
                    }
                }
                std::mem::swap(&mut trace.delta, &mut trace.delta_next);
            }
        }
    }

    /// One plain RMSprop step:
    /// `m <- rho m + (1 - rho) g^2`, `p <- p - lr g / (sqrt(m) + eps)`.
    pub fn rmsprop_update(
        &mut self,
        state: &mut OptimizerState,
        grads: &Gradients,
        config: &NetConfig,
    ) -> Result<()> {
        if grads
            .layers
            .iter()
            .any(|l| l.values().any(|g| !g.is_finite()))
        {
            return Err(Error::Divergence("non-finite gradient".into()));
        }
        let (rho, lr, eps) = (config.rms_decay, config.learning_rate, config.rms_epsilon);
        for ((layer, m), g) in self
            .layers
            .iter_mut()
            .zip(state.layers.iter_mut())
            .zip(&grads.layers)
        {
            for ((p, m), &g) in layer.values_mut().zip(m.values_mut()).zip(g.values()) {
                *m = rho * *m + (1.0 - rho) * g * g;
                if g != 0.0 {
                    *p -= lr * g / (m.sqrt() + eps);
                }
            }
        }
        if self
            .layers
            .iter()
            .any(|l| l.values().any(|p| !p.is_finite()))
        {
            return Err(Error::Divergence(
                "non-finite parameter after update".into(),
            ));
        }
        Ok(())
    }

    pub fn flatten(&self) -> Vec<f64> {
        self.layers
            .iter()
            .flat_map(|l| l.values().copied())
            .collect()
    }

    /// Overwrites parameters from a flat vector in [`Mlp::flatten`] order.
    pub fn set_flat(&mut self, flat: &[f64]) {
        let mut it = flat.iter();
        for layer in &mut self.layers {
            for p in layer.values_mut() {
                *p = *it.next().expect("flat parameter vector too short");
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn cfg(input_dim: usize, output_dim: usize) -> NetConfig {
        NetConfig {
            input_dim,
            output_dim,
            ..NetConfig::default()
        }
    }

    fn hand_net() -> Mlp {
        Mlp {
            leaky_slope: 0.01,
            layers: vec![
                Layer {
                    inputs: 1,
                    outputs: 1,
                    weights: vec![2.0],
                    bias: vec![-1.0],
                },
                Layer {
                    inputs: 1,
                    outputs: 1,
                    weights: vec![1.0],
                    bias: vec![0.0],
                },
            ],
        }
    }

    #[test]
    fn init_bounds_and_determinism() {
        let c = cfg(1, 4);
        let (a, state) = init_network(&c, 42).unwrap();
        let (b, _) = init_network(&c, 42).unwrap();
        let (other, _) = init_network(&c, 43).unwrap();
        assert_eq!(a, b);
        assert_ne!(a.flatten(), other.flatten());
        assert!(a.layers[0].weights.iter().all(|w| w.abs() <= 1.0));
        assert!(a.layers[1].weights.iter().all(|w| w.abs() <= 0.25));
        assert!(a.layers.iter().all(|l| l.bias.iter().all(|&b| b == 0.0)));
        assert!(state.layers.iter().all(|l| l.values().all(|&m| m == 0.0)));
    }

    #[test]
    fn config_validation() {
        assert!(cfg(0, 1).validate().is_err());
        let mut c = cfg(1, 1);
        c.leaky_slope = 1.0;
        assert!(c.validate().is_err());
        c.leaky_slope = 0.01;
        c.hidden_layers = 4;
        assert!(c.validate().is_err());
        c.hidden_layers = 3;
        c.validate().unwrap();
    }

    #[test]
    fn zero_params_give_zero_outputs() {
        let (mut net, _) = init_network(&cfg(3, 5), 1).unwrap();
        let n = net.param_count();
        net.set_flat(&vec![0.0; n]);
        assert_eq!(net.forward(&[0.3, -2.0, 9.0]).unwrap(), vec![0.0; 5]);
    }

    #[test]
    fn leaky_activation() {
        assert_eq!(leaky(-1.0, 0.01), -0.01);
        assert_eq!(leaky(2.5, 0.01), 2.5);
    }

    #[test]
    fn hand_evaluated_net() {
        let net = hand_net();
        assert_eq!(net.forward(&[1.0]).unwrap(), vec![1.0]);
        assert!((net.forward(&[0.0]).unwrap()[0] + 0.01).abs() < 1e-15);
    }

    #[test]
    fn forward_rejects_bad_input() {
        let net = hand_net();
        assert!(net.forward(&[f64::NAN]).is_err());
        assert!(net.forward(&[1.0, 2.0]).is_err());
        assert!(net.backward(&[1.0], 1, 0.5).is_err());
    }

    #[test]
    fn zero_residual_zero_gradient() {
        let (net, _) = init_network(&cfg(2, 3), 5).unwrap();
        assert!(net.backward(&[1.0, 0.5], 1, 0.0).unwrap().is_zero());
    }

    #[test]
    fn output_bias_gradient_is_minus_residual() {
        let (net, _) = init_network(&cfg(1, 4), 5).unwrap();
        let g = net.backward(&[1.0], 2, 0.75).unwrap();
        let out = g.layers.last().unwrap();
        assert_eq!(out.bias, vec![0.0, 0.0, -0.75, 0.0]);
        // other output rows untouched
        for r in [0, 1, 3] {
            assert!(out.weights[r * 16..(r + 1) * 16].iter().all(|&w| w == 0.0));
        }
    }

    #[test]
    fn rmsprop_zero_gradient_keeps_params() {
        let c = cfg(1, 2);
        let (mut net, mut st) = init_network(&c, 3).unwrap();
        let before = net.clone();
        let g = Gradients::zeros_for(&net);
        net.rmsprop_update(&mut st, &g, &c).unwrap();
        assert_eq!(net, before);
    }

    fn scalar_net(p: f64) -> Mlp {
        // only the output bias matters for this check
        Mlp {
            leaky_slope: 0.01,
            layers: vec![
                Layer {
                    inputs: 1,
                    outputs: 1,
                    weights: vec![0.0],
                    bias: vec![0.0],
                },
                Layer {
                    inputs: 1,
                    outputs: 1,
                    weights: vec![0.0],
                    bias: vec![p],
                },
            ],
        }
    }

    #[test]
    fn rmsprop_hand_steps() {
        let c = cfg(1, 1);
        let mut net = scalar_net(0.0);
        let mut st = OptimizerState {
            layers: zeros_like(&net.layers),
        };
        let mut g = Gradients::zeros_for(&net);
        g.layers[1].bias[0] = 1.0;

        net.rmsprop_update(&mut st, &g, &c).unwrap();
        let m1 = st.layers[1].bias[0];
        let p1 = net.layers[1].bias[0];
        assert!((m1 - 0.1).abs() < 1e-15);
        assert!((p1 + 3.16228e-5).abs() < 1e-9, "{p1}");

        net.rmsprop_update(&mut st, &g, &c).unwrap();
        let m2 = st.layers[1].bias[0];
        let step2 = p1 - net.layers[1].bias[0];
        assert!((m2 - 0.19).abs() < 1e-15);
        assert!((step2 - 2.294e-5).abs() < 1e-8, "{step2}");
    }

    #[test]
    fn rmsprop_rejects_non_finite_gradient() {
        let c = cfg(1, 1);
        let mut net = scalar_net(0.0);
        let mut st = OptimizerState {
            layers: zeros_like(&net.layers),
        };
        let mut g = Gradients::zeros_for(&net);
        g.layers[0].weights[0] = f64::INFINITY;
        assert!(matches!(
            net.rmsprop_update(&mut st, &g, &c),
            Err(Error::Divergence(_))
        ));
    }

    /// Central differences of 0.5 (target - y_k)^2 around the current params.
    fn numeric_grad(net: &Mlp, x: &[f64], k: usize, target: f64, h: f64) -> Vec<f64> {
        let base = net.flatten();
        let loss = |p: &[f64]| {
            let mut n = net.clone();
            n.set_flat(p);
            let y = n.forward(x).unwrap()[k];
            0.5 * (target - y) * (target - y)
        };
        (0..base.len())
            .map(|i| {
                let mut plus = base.clone();
                let mut minus = base.clone();
                plus[i] += h;
                minus[i] -= h;
                (loss(&plus) - loss(&minus)) / (2.0 * h)
            })
            .collect()
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]

        #[test]
        fn gradients_match_finite_differences(
            seed in any::<u64>(),
            input_dim in 1usize..4,
            output_dim in 1usize..6,
            layers in 1usize..4,
            target in -6.0f64..6.0,
            raw_x in proptest::collection::vec(-1.5f64..1.5, 3),
            k_raw in 0usize..6,
        ) {
            let c = NetConfig { input_dim, output_dim, hidden_layers: layers, hidden_units: 5, ..NetConfig::default() };
            let (mut net, _) = init_network(&c, seed).unwrap();
            // non-zero biases so kinks sit away from the evaluation point
            let mut flat = net.flatten();
            let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
            let u = Uniform::new(-0.5, 0.5);
            for v in flat.iter_mut() { *v += u.sample(&mut rng); }
            net.set_flat(&flat);
            let x = &raw_x[..input_dim];
            let k = k_raw % output_dim;
            let y = net.forward(x).unwrap()[k];
            let analytic = net.backward(x, k, target - y).unwrap().flatten();
            let numeric = numeric_grad(&net, x, k, target, 1e-5);
            for (a, n) in analytic.iter().zip(&numeric) {
                let scale = a.abs().max(n.abs()).max(1e-3);
                prop_assert!((a - n).abs() / scale < 1e-4, "analytic {a} numeric {n}");
            }
        }

        #[test]
        fn output_layer_homogeneity(seed in any::<u64>(), c in -3.0f64..3.0) {
            let cfgn = cfg(2, 3);
            let (net, _) = init_network(&cfgn, seed).unwrap();
            let mut scaled = net.clone();
            let out = scaled.layers.last_mut().unwrap();
            out.weights.iter_mut().for_each(|w| *w *= c);
            out.bias.iter_mut().for_each(|b| *b = (*b + 0.1) * c);
            let mut shifted = net.clone();
            shifted.layers.last_mut().unwrap().bias.iter_mut().for_each(|b| *b += 0.1);
            let base = shifted.forward(&[0.4, -0.7]).unwrap();
            let got = scaled.forward(&[0.4, -0.7]).unwrap();
            for (b, g) in base.iter().zip(&got) {
                prop_assert!((b * c - g).abs() < 1e-12);
            }
        }
    }
}
