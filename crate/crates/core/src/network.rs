//! Feed-forward network representation, seeded initialization and the forward pass.
//!
//! Every layer (hidden layers first, output layer last) computes
//! `O = logistic(W · [input; 1])`, where the trailing constant-1 entry is only present
//! when `include_bias` is set. Weight matrix `l` therefore has shape
//! `width_l × (width_{l-1} + bias)`, with `width_{-1}` the input dimension.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::Matrix;

pub const DEFAULT_INIT_SCALE: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Activation {
    #[default]
    Logistic,
}

impl Activation {
    #[inline]
    pub fn apply(self, z: f64) -> f64 {
        match self {
            Activation::Logistic => logistic(z),
        }
    }

    /// Derivative expressed through the activation value `a = f(z)`.
    #[inline]
    pub fn derivative_from_output(self, a: f64) -> f64 {
        match self {
            Activation::Logistic => a * (1.0 - a),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Activation::Logistic => "logistic",
        }
    }
}

#[inline]
pub fn logistic(z: f64) -> f64 {
    1.0 / (1.0 + (-z).exp())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkConfig {
    pub input_dim: usize,
    pub hidden_sizes: Vec<usize>,
    pub cluster_count: usize,
    pub activation: Activation,
    pub include_bias: bool,
    /// Half-width of the uniform initialization interval.
    pub init_scale: f64,
    pub seed: u64,
}

impl NetworkConfig {
    pub fn new(input_dim: usize, hidden_sizes: Vec<usize>, cluster_count: usize) -> Self {
        NetworkConfig {
            input_dim,
            hidden_sizes,
            cluster_count,
            activation: Activation::Logistic,
            include_bias: true,
            init_scale: DEFAULT_INIT_SCALE,
            seed: 0,
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_bias(mut self, include_bias: bool) -> Self {
        self.include_bias = include_bias;
        self
    }

    pub fn with_init_scale(mut self, init_scale: f64) -> Self {
        self.init_scale = init_scale;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.input_dim == 0 {
            return Err(Error::config("input_dim", "must be at least 1"));
        }
        if self.cluster_count < 2 {
            return Err(Error::config(
                "cluster_count",
                format!("must be at least 2, got {}", self.cluster_count),
            ));
        }
        if let Some(&w) = self.hidden_sizes.iter().find(|&&w| w < 2) {
            return Err(Error::config(
                "hidden_sizes",
                format!("every hidden layer needs width >= 2, got {w}"),
            ));
        }
        if !self.init_scale.is_finite() || self.init_scale < 0.0 {
            return Err(Error::config(
                "init_scale",
                format!("must be finite and non-negative, got {}", self.init_scale),
            ));
        }
        Ok(())
    }

    /// Widths of every trainable layer, output layer last.
    pub fn layer_widths(&self) -> Vec<usize> {
        let mut widths = self.hidden_sizes.clone();
        widths.push(self.cluster_count);
        widths
    }

    /// Number of weight columns for layer `layer`, bias column included.
    pub fn fan_in(&self, layer: usize) -> usize {
        let prev = if layer == 0 {
            self.input_dim
        } else {
            self.hidden_sizes[layer - 1]
        };
        prev + usize::from(self.include_bias)
    }

    pub fn weight_shapes(&self) -> Vec<(usize, usize)> {
        self.layer_widths()
            .into_iter()
            .enumerate()
            .map(|(l, w)| (w, self.fan_in(l)))
            .collect()
    }

    pub fn num_layers(&self) -> usize {
        self.hidden_sizes.len() + 1
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Network {
    config: NetworkConfig,
    weights: Vec<Matrix>,
}

/// Intermediate values of one forward pass.
#[derive(Debug, Clone, PartialEq)]
pub struct ForwardTrace {
    pub input: Vec<f64>,
    /// Pre-activations per layer, output layer last.
    pub layer_inputs: Vec<Vec<f64>>,
    /// Activations per layer, output layer last.
    pub layer_outputs: Vec<Vec<f64>>,
}

impl ForwardTrace {
    pub fn output(&self) -> &[f64] {
        self.layer_outputs.last().expect("trace has an output layer")
    }

    pub fn hidden_outputs(&self) -> &[Vec<f64>] {
        &self.layer_outputs[..self.layer_outputs.len() - 1]
    }

    /// The vector fed into layer `layer` (without the bias entry).
    pub fn layer_source(&self, layer: usize) -> &[f64] {
        if layer == 0 {
            &self.input
        } else {
            &self.layer_outputs[layer - 1]
        }
    }
}

impl Network {
    /// Draws every weight independently from `U[-init_scale, init_scale]`.
    pub fn init(config: NetworkConfig) -> Result<Self> {
        config.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        let scale = config.init_scale;
        let weights = config
            .weight_shapes()
            .into_iter()
            .map(|(rows, cols)| {
                let data = (0..rows * cols)
                    .map(|_| {
                        if scale == 0.0 {
                            0.0
                        } else {
                            rng.random_range(-scale..=scale)
                        }
                    })
                    .collect();
                Matrix::from_vec(rows, cols, data)
            })
            .collect();
        Ok(Network { config, weights })
    }

    /// Assembles a network from explicit weights, checking shapes and finiteness.
    pub fn from_weights(config: NetworkConfig, weights: Vec<Matrix>) -> Result<Self> {
        config.validate()?;
        let shapes = config.weight_shapes();
        if weights.len() != shapes.len() {
            return Err(Error::input(format!(
                "expected {} weight matrices, got {}",
                shapes.len(),
                weights.len()
            )));
        }
        for (l, (w, shape)) in weights.iter().zip(&shapes).enumerate() {
            if w.shape() != *shape {
                return Err(Error::input(format!(
                    "layer {l}: expected weight shape {shape:?}, got {:?}",
                    w.shape()
                )));
            }
            if !w.all_finite() {
                return Err(Error::input(format!("layer {l}: non-finite weight")));
            }
        }
        Ok(Network { config, weights })
    }

    pub fn config(&self) -> &NetworkConfig {
        &self.config
    }

    pub fn weights(&self) -> &[Matrix] {
        &self.weights
    }

    pub fn weights_mut(&mut self) -> &mut [Matrix] {
        &mut self.weights
    }

    pub fn num_parameters(&self) -> usize {
        self.weights.iter().map(|w| w.rows() * w.cols()).sum()
    }

    pub fn check_input(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.config.input_dim {
            return Err(Error::input(format!(
                "feature vector has length {}, network expects {}",
                x.len(),
                self.config.input_dim
            )));
        }
        if let Some(i) = x.iter().position(|v| !v.is_finite()) {
            return Err(Error::input(format!("feature {i} is not finite")));
        }
        Ok(())
    }

    pub fn forward(&self, x: &[f64]) -> Result<ForwardTrace> {
        self.check_input(x)?;
        Ok(self.forward_unchecked(x))
    }

    pub(crate) fn forward_unchecked(&self, x: &[f64]) -> ForwardTrace {
        let act = self.config.activation;
        let bias = self.config.include_bias;
        let mut layer_inputs = Vec::with_capacity(self.weights.len());
        let mut layer_outputs: Vec<Vec<f64>> = Vec::with_capacity(self.weights.len());
        for (l, w) in self.weights.iter().enumerate() {
            let source: &[f64] = if l == 0 { x } else { &layer_outputs[l - 1] };
            let pre: Vec<f64> = w
                .iter_rows()
                .map(|row| {
                    let mut z: f64 = row.iter().zip(source).map(|(a, b)| a * b).sum();
                    if bias {
                        z += row[source.len()];
                    }
                    z
                })
                .collect();
            let out = pre.iter().map(|&z| act.apply(z)).collect();
            layer_inputs.push(pre);
            layer_outputs.push(out);
        }
        ForwardTrace {
            input: x.to_vec(),
            layer_inputs,
            layer_outputs,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn same_seed_gives_identical_weights() {
        let cfg = NetworkConfig::new(3, vec![4], 2).with_seed(7);
        let a = Network::init(cfg.clone()).unwrap();
        let b = Network::init(cfg).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn different_seed_changes_weights() {
        let a = Network::init(NetworkConfig::new(3, vec![4], 2).with_seed(1)).unwrap();
        let b = Network::init(NetworkConfig::new(3, vec![4], 2).with_seed(2)).unwrap();
        assert_ne!(a.weights(), b.weights());
    }

    #[test]
    fn zero_scale_gives_zero_weights() {
        let net = Network::init(NetworkConfig::new(3, vec![4, 3], 2).with_init_scale(0.0)).unwrap();
        assert!(net
            .weights()
            .iter()
            .all(|w| w.as_slice().iter().all(|&v| v == 0.0)));
    }

    #[test]
    fn weights_stay_within_scale() {
        let net = Network::init(NetworkConfig::new(5, vec![6], 3).with_init_scale(0.25)).unwrap();
        for w in net.weights() {
            assert!(w.as_slice().iter().all(|v| v.abs() <= 0.25));
        }
    }

    #[test]
    fn weight_shapes_include_bias_column() {
        let net = Network::init(NetworkConfig::new(4, vec![6], 2)).unwrap();
        let shapes: Vec<_> = net.weights().iter().map(Matrix::shape).collect();
        assert_eq!(shapes, vec![(6, 5), (2, 7)]);

        let literal = Network::init(NetworkConfig::new(4, vec![6], 2).with_bias(false)).unwrap();
        let shapes: Vec<_> = literal.weights().iter().map(Matrix::shape).collect();
        assert_eq!(shapes, vec![(6, 4), (2, 6)]);
    }

    #[test]
    fn invalid_configs_name_the_field() {
        let cases = [
            (NetworkConfig::new(0, vec![], 2), "input_dim"),
            (NetworkConfig::new(2, vec![], 1), "cluster_count"),
            (NetworkConfig::new(2, vec![3, 1], 2), "hidden_sizes"),
            (NetworkConfig::new(2, vec![], 2).with_init_scale(f64::NAN), "init_scale"),
            (NetworkConfig::new(2, vec![], 2).with_init_scale(f64::INFINITY), "init_scale"),
        ];
        for (cfg, expected) in cases {
            match Network::init(cfg) {
                Err(Error::Config { field, .. }) => assert_eq!(field, expected),
                other => panic!("expected config error for {expected}, got {other:?}"),
            }
        }
    }

    #[test]
    fn zero_hidden_layers_is_legal() {
        let net = Network::init(NetworkConfig::new(3, vec![], 4)).unwrap();
        assert_eq!(net.weights().len(), 1);
        let trace = net.forward(&[0.1, 0.2, 0.3]).unwrap();
        assert_eq!(trace.output().len(), 4);
        assert!(trace.hidden_outputs().is_empty());
    }

    #[test]
    fn zero_weights_give_half_activations() {
        let net = Network::init(NetworkConfig::new(3, vec![4, 5], 3).with_init_scale(0.0)).unwrap();
        let trace = net.forward(&[1.5, -2.0, 7.0]).unwrap();
        for layer in &trace.layer_outputs {
            assert!(layer.iter().all(|&o| o == 0.5));
        }
        let widths: Vec<_> = trace.layer_outputs.iter().map(Vec::len).collect();
        assert_eq!(widths, vec![4, 5, 3]);
    }

    #[test]
    fn large_preactivation_saturates_below_one() {
        let cfg = NetworkConfig::new(1, vec![], 2).with_bias(false);
        let w = Matrix::from_vec(2, 1, vec![20.0, 0.0]);
        let net = Network::from_weights(cfg, vec![w]).unwrap();
        let trace = net.forward(&[1.0]).unwrap();
        let o = trace.output()[0];
        assert!(o > 1.0 - 1e-8 && o < 1.0, "{o}");
        assert_eq!(trace.layer_inputs[0][0], 20.0);
    }

    #[test]
    fn forward_is_repeatable() {
        let net = Network::init(NetworkConfig::new(3, vec![4], 2).with_seed(11)).unwrap();
        let x = [0.3, -0.7, 0.9];
        assert_eq!(net.forward(&x).unwrap(), net.forward(&x).unwrap());
    }

    #[test]
    fn forward_rejects_bad_input() {
        let net = Network::init(NetworkConfig::new(3, vec![], 2)).unwrap();
        assert!(matches!(net.forward(&[1.0, 2.0]), Err(Error::Input(_))));
        assert!(matches!(
            net.forward(&[1.0, f64::NAN, 2.0]),
            Err(Error::Input(_))
        ));
    }

    #[test]
    fn from_weights_checks_shapes() {
        let cfg = NetworkConfig::new(2, vec![], 2);
        assert!(Network::from_weights(cfg.clone(), vec![Matrix::zeros(2, 2)]).is_err());
        assert!(Network::from_weights(cfg, vec![Matrix::zeros(2, 3)]).is_ok());
    }
}
