//! Complement distributions, layer entropies and the combined clustering objective.
//!
//! A layer with activations `O` (all in (0, 1)) defines the probability vector
//! `p_i = (1 - O_i) / sum_j (1 - O_j)`. The objective rewards a high-entropy output
//! layer and penalises hidden-layer entropy:
//!
//! ```text
//! J = H(p_out) - lambda * sum_l H(p_l)
//! ```
//!
//! Entropies are in nats.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::network::{ForwardTrace, Network};

/// Lower clamp applied to probabilities inside the logarithm.
pub const PROB_FLOOR: f64 = 1e-12;
/// Below this complement mass the distribution is replaced by the uniform one.
pub const DEGENERATE_SUM: f64 = 1e-12;

pub const DEFAULT_LAMBDA: f64 = 1.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EntropyScope {
    /// Entropy of each sample's distribution, averaged over the batch.
    #[default]
    PerSample,
    /// Output term is the entropy of the batch-averaged output distribution; hidden
    /// terms stay per-sample.
    BatchMean,
}

impl EntropyScope {
    pub fn name(self) -> &'static str {
        match self {
            EntropyScope::PerSample => "per-sample",
            EntropyScope::BatchMean => "batch-mean",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ComplementDistribution {
    pub probs: Vec<f64>,
    /// `sum_j (1 - O_j)` before normalization.
    pub raw_sum: f64,
    /// Set when `raw_sum` fell below [`DEGENERATE_SUM`] and `probs` is uniform.
    pub degenerate: bool,
}

pub fn complement_distribution(outputs: &[f64]) -> Result<ComplementDistribution> {
    if outputs.is_empty() {
        return Err(Error::input("complement distribution of an empty layer"));
    }
    if let Some(o) = outputs.iter().find(|o| !(0.0..=1.0).contains(*o)) {
        return Err(Error::input(format!("activation {o} outside [0, 1]")));
    }
    Ok(complement_unchecked(outputs))
}

pub(crate) fn complement_unchecked(outputs: &[f64]) -> ComplementDistribution {
    let raw_sum: f64 = outputs.iter().map(|o| 1.0 - o).sum();
    if raw_sum < DEGENERATE_SUM {
        let n = outputs.len() as f64;
        return ComplementDistribution {
            probs: vec![1.0 / n; outputs.len()],
            raw_sum,
            degenerate: true,
        };
    }
    ComplementDistribution {
        probs: outputs.iter().map(|o| (1.0 - o) / raw_sum).collect(),
        raw_sum,
        degenerate: false,
    }
}

pub fn entropy(dist: &ComplementDistribution) -> f64 {
    entropy_of(&dist.probs)
}

/// `-sum p ln p`, with `p` clamped to `[PROB_FLOOR, 1]` inside the logarithm.
pub fn entropy_of(probs: &[f64]) -> f64 {
    -probs
        .iter()
        .map(|&p| p * p.clamp(PROB_FLOOR, 1.0).ln())
        .sum::<f64>()
}

/// Derivative of [`entropy_of`] with respect to each probability.
pub(crate) fn entropy_grad_probs(probs: &[f64]) -> Vec<f64> {
    probs
        .iter()
        .map(|&p| {
            if p < PROB_FLOOR {
                -PROB_FLOOR.ln()
            } else if p > 1.0 {
                // clamped at 1: ln(1) = 0 and constant
                0.0
            } else {
                -p.ln() - 1.0
            }
        })
        .collect()
}

/// Pulls a gradient with respect to the complement probabilities back onto the activations.
///
/// With `p_i = (1 - O_i) / s`, `dp_i/dO_k = (p_i - [i == k]) / s`.
pub(crate) fn complement_pullback(dist: &ComplementDistribution, grad_probs: &[f64]) -> Vec<f64> {
    if dist.degenerate {
        return vec![0.0; dist.probs.len()];
    }
    let weighted: f64 = grad_probs.iter().zip(&dist.probs).map(|(g, p)| g * p).sum();
    grad_probs
        .iter()
        .map(|g| (weighted - g) / dist.raw_sum)
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObjectiveBreakdown {
    pub output_entropy: f64,
    pub hidden_entropies: Vec<f64>,
    pub lambda: f64,
    pub total: f64,
}

impl ObjectiveBreakdown {
    pub fn new(output_entropy: f64, hidden_entropies: Vec<f64>, lambda: f64) -> Self {
        let total = output_entropy - lambda * hidden_entropies.iter().sum::<f64>();
        ObjectiveBreakdown {
            output_entropy,
            hidden_entropies,
            lambda,
            total,
        }
    }

    pub fn hidden_entropy_sum(&self) -> f64 {
        self.hidden_entropies.iter().sum()
    }
}

/// Per-sample objective for one forward trace.
pub fn objective(trace: &ForwardTrace, lambda: f64) -> ObjectiveBreakdown {
    let layer_entropy = |o: &[f64]| entropy(&complement_unchecked(o));
    let hidden = trace
        .hidden_outputs()
        .iter()
        .map(|o| layer_entropy(o))
        .collect();
    ObjectiveBreakdown::new(layer_entropy(trace.output()), hidden, lambda)
}

/// Objective over a whole feature matrix.
///
/// Hidden-layer entropies are always per-sample values averaged over rows. The output
/// term is the same average under `PerSample`; under `BatchMean` it is the entropy of the
/// row-averaged output distribution.
pub fn batch_objective(
    net: &Network,
    features: &Matrix,
    lambda: f64,
    scope: EntropyScope,
) -> Result<ObjectiveBreakdown> {
    if features.rows() == 0 {
        return Err(Error::input("objective of an empty batch"));
    }
    let traces = features
        .iter_rows()
        .map(|x| net.forward(x))
        .collect::<Result<Vec<_>>>()?;
    Ok(objective_from_traces(&traces, lambda, scope))
}

pub(crate) fn objective_from_traces(
    traces: &[ForwardTrace],
    lambda: f64,
    scope: EntropyScope,
) -> ObjectiveBreakdown {
    let n = traces.len() as f64;
    let layers = traces[0].layer_outputs.len();
    let mut out = 0.0;
    let mut hidden = vec![0.0; layers - 1];
    for t in traces {
        let b = objective(t, lambda);
        out += b.output_entropy;
        for (acc, h) in hidden.iter_mut().zip(&b.hidden_entropies) {
            *acc += h;
        }
    }
    hidden.iter_mut().for_each(|h| *h /= n);
    let output_entropy = match scope {
        EntropyScope::PerSample => out / n,
        EntropyScope::BatchMean => entropy_of(&mean_output_distribution(traces)),
    };
    ObjectiveBreakdown::new(output_entropy, hidden, lambda)
}

/// Row average of the output layer's complement distribution.
pub(crate) fn mean_output_distribution(traces: &[ForwardTrace]) -> Vec<f64> {
    let mut mean = vec![0.0; traces[0].output().len()];
    for t in traces {
        for (a, p) in mean.iter_mut().zip(&complement_unchecked(t.output()).probs) {
            *a += p;
        }
    }
    let n = traces.len() as f64;
    mean.iter_mut().for_each(|v| *v /= n);
    mean
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::NetworkConfig;
    use approx::assert_abs_diff_eq;

    #[test]
    fn symmetric_outputs_give_uniform_distribution() {
        let d = complement_distribution(&[0.5, 0.5]).unwrap();
        assert_eq!(d.probs, vec![0.5, 0.5]);
        assert!(!d.degenerate);
    }

    #[test]
    fn complement_distribution_hand_example() {
        let d = complement_distribution(&[0.8, 0.6, 0.6]).unwrap();
        assert_abs_diff_eq!(d.raw_sum, 1.0, epsilon = 1e-15);
        for (p, e) in d.probs.iter().zip([0.2, 0.4, 0.4]) {
            assert_abs_diff_eq!(*p, e, epsilon = 1e-15);
        }
    }

    #[test]
    fn saturated_layer_falls_back_to_uniform() {
        let o = 1.0 - 1e-15;
        let d = complement_distribution(&[o, o]).unwrap();
        assert!(d.degenerate);
        assert_eq!(d.probs, vec![0.5, 0.5]);
    }

    #[test]
    fn complement_distribution_rejects_bad_input() {
        assert!(complement_distribution(&[]).is_err());
        assert!(complement_distribution(&[0.5, 1.5]).is_err());
        assert!(complement_distribution(&[f64::NAN]).is_err());
    }

    #[test]
    fn entropy_examples() {
        assert_abs_diff_eq!(entropy_of(&[0.25; 4]), 4f64.ln(), epsilon = 1e-15);
        assert_abs_diff_eq!(4f64.ln(), 1.386294, epsilon = 1e-6);
        assert_eq!(entropy_of(&[1.0, 0.0, 0.0]), 0.0);
        // -(0.2 ln 0.2 + 2 * 0.4 ln 0.4)
        let expected = -(0.2f64 * 0.2f64.ln() + 0.8 * 0.4f64.ln());
        assert_abs_diff_eq!(entropy_of(&[0.2, 0.4, 0.4]), expected, epsilon = 1e-15);
        assert_abs_diff_eq!(entropy_of(&[0.2, 0.4, 0.4]), 1.054920, epsilon = 1e-6);
    }

    #[test]
    fn uniform_network_closed_form() {
        let net =
            Network::init(NetworkConfig::new(2, vec![4], 3).with_init_scale(0.0)).unwrap();
        let trace = net.forward(&[0.3, 0.9]).unwrap();
        let b = objective(&trace, 1.0);
        assert_abs_diff_eq!(b.total, 3f64.ln() - 4f64.ln(), epsilon = 1e-12);
        assert_abs_diff_eq!(b.total, -0.287682, epsilon = 1e-6);
    }

    #[test]
    fn zero_lambda_total_is_output_entropy() {
        let net = Network::init(NetworkConfig::new(2, vec![4, 3], 3).with_seed(5)).unwrap();
        let trace = net.forward(&[0.3, 0.9]).unwrap();
        let b = objective(&trace, 0.0);
        assert_eq!(b.total, b.output_entropy);
    }

    #[test]
    fn batch_mean_of_identical_rows_matches_per_sample() {
        let net = Network::init(NetworkConfig::new(2, vec![3], 2).with_seed(1)).unwrap();
        let x = Matrix::from_rows(&[vec![0.2, 0.4], vec![0.2, 0.4]]);
        let a = batch_objective(&net, &x, 0.7, EntropyScope::PerSample).unwrap();
        let b = batch_objective(&net, &x, 0.7, EntropyScope::BatchMean).unwrap();
        assert_abs_diff_eq!(a.total, b.total, epsilon = 1e-14);
    }

    #[test]
    fn batch_objective_rejects_empty_batch() {
        let net = Network::init(NetworkConfig::new(2, vec![], 2)).unwrap();
        assert!(batch_objective(&net, &Matrix::zeros(0, 2), 1.0, EntropyScope::PerSample).is_err());
    }

    #[test]
    fn pullback_matches_finite_differences() {
        let outputs = [0.3, 0.55, 0.8, 0.1];
        let h = |o: &[f64]| entropy(&complement_unchecked(o));
        let dist = complement_unchecked(&outputs);
        let analytic = complement_pullback(&dist, &entropy_grad_probs(&dist.probs));
        for k in 0..outputs.len() {
            let step = 1e-6;
            let mut plus = outputs;
            let mut minus = outputs;
            plus[k] += step;
            minus[k] -= step;
            let fd = (h(&plus) - h(&minus)) / (2.0 * step);
            assert_abs_diff_eq!(analytic[k], fd, epsilon = 1e-8);
        }
    }
}
