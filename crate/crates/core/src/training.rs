//! Reverse-mode gradient of the entropy objective and the gradient-ascent loop.
//!
//! Each layer contributes a local term to `dJ/dO` (its own entropy derivative, weighted
//! `+1` for the output layer and `-lambda` for hidden layers) on top of the error
//! propagated back from the layer above. The per-neuron error is then
//! `delta = dJ/dO * O (1 - O)`, and the weight gradient is the outer product of `delta`
//! with the layer's input vector (bias entry included).

use std::time::{Duration, Instant};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::network::{ForwardTrace, Network};
use crate::objective::{
    self, complement_pullback, complement_unchecked, entropy_grad_probs, mean_output_distribution,
    objective_from_traces, EntropyScope, ObjectiveBreakdown,
};

/// Rows per parallel work unit in full-batch accumulation. Partial sums are combined in
/// chunk order, so results do not depend on the thread count.
const CHUNK_ROWS: usize = 128;

/// `dJ/dW` for every layer, shaped like the network's weights.
#[derive(Debug, Clone, PartialEq)]
pub struct GradientSet {
    pub layers: Vec<Matrix>,
}

impl GradientSet {
    pub fn zeros_like(net: &Network) -> Self {
        GradientSet {
            layers: net
                .weights()
                .iter()
                .map(|w| Matrix::zeros(w.rows(), w.cols()))
                .collect(),
        }
    }

    pub fn shapes(&self) -> Vec<(usize, usize)> {
        self.layers.iter().map(Matrix::shape).collect()
    }

    pub fn all_finite(&self) -> bool {
        self.layers.iter().all(Matrix::all_finite)
    }

    pub fn add_scaled(&mut self, other: &GradientSet, scale: f64) {
        for (a, b) in self.layers.iter_mut().zip(&other.layers) {
            a.add_scaled(b, scale);
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = f64> + '_ {
        self.layers.iter().flat_map(|m| m.as_slice().iter().copied())
    }

    pub fn max_abs(&self) -> f64 {
        self.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum UpdateMode {
    /// Update after every sample, visiting samples in a seeded shuffled order.
    PerSample,
    /// Average the gradient over all samples, update once per epoch.
    #[default]
    FullBatch,
}

impl UpdateMode {
    pub fn name(self) -> &'static str {
        match self {
            UpdateMode::PerSample => "per-sample",
            UpdateMode::FullBatch => "full-batch",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub lambda: f64,
    pub max_epochs: usize,
    /// Training stops once the epoch objective changes by less than this.
    pub tolerance: f64,
    pub update_mode: UpdateMode,
    pub entropy_scope: EntropyScope,
    /// Seeds the per-sample shuffling.
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            learning_rate: 0.01,
            lambda: objective::DEFAULT_LAMBDA,
            max_epochs: 500,
            tolerance: 1e-6,
            update_mode: UpdateMode::FullBatch,
            entropy_scope: EntropyScope::PerSample,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate.is_finite() && self.learning_rate > 0.0) {
            return Err(Error::config(
                "learning_rate",
                format!("must be positive and finite, got {}", self.learning_rate),
            ));
        }
        if !(self.lambda.is_finite() && self.lambda >= 0.0) {
            return Err(Error::config(
                "lambda",
                format!("must be non-negative and finite, got {}", self.lambda),
            ));
        }
        if !(self.tolerance.is_finite() && self.tolerance > 0.0) {
            return Err(Error::config(
                "tolerance",
                format!("must be positive, got {}", self.tolerance),
            ));
        }
        if self.update_mode == UpdateMode::PerSample
            && self.entropy_scope == EntropyScope::BatchMean
        {
            return Err(Error::config(
                "update_mode",
                "per-sample updates need entropy_scope = per-sample",
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainReport {
    pub epochs_run: usize,
    /// Mean objective after each epoch's update.
    pub objective_history: Vec<f64>,
    /// Per-term breakdown matching `objective_history`.
    pub breakdown_history: Vec<ObjectiveBreakdown>,
    pub converged: bool,
    pub final_objective: f64,
    /// Objective of the weights training started from.
    pub initial_objective: f64,
    pub wall_time: Duration,
}

/// Gradient of the single-sample objective `J(x)` with respect to every weight.
pub fn analytic_gradient(net: &Network, x: &[f64], lambda: f64) -> Result<GradientSet> {
    let trace = net.forward(x)?;
    let mut grad = GradientSet::zeros_like(net);
    let local = per_sample_local_terms(&trace, lambda);
    backprop_into(net, &trace, &local, 1.0, &mut grad);
    Ok(grad)
}

/// `dJ/dO` contributed directly by each layer's entropy term for a single sample.
fn per_sample_local_terms(trace: &ForwardTrace, lambda: f64) -> Vec<Vec<f64>> {
    let last = trace.layer_outputs.len() - 1;
    trace
        .layer_outputs
        .iter()
        .enumerate()
        .map(|(l, o)| {
            let dist = complement_unchecked(o);
            let mut d = complement_pullback(&dist, &entropy_grad_probs(&dist.probs));
            if l != last {
                d.iter_mut().for_each(|v| *v *= -lambda);
            }
            d
        })
        .collect()
}

/// Accumulates `scale * dJ/dW` for one sample, given each layer's local `dJ/dO` term.
fn backprop_into(
    net: &Network,
    trace: &ForwardTrace,
    local: &[Vec<f64>],
    scale: f64,
    grad: &mut GradientSet,
) {
    let act = net.config().activation;
    let bias = net.config().include_bias;
    let mut carried: Option<Vec<f64>> = None;
    for l in (0..net.weights().len()).rev() {
        let outputs = &trace.layer_outputs[l];
        let delta: Vec<f64> = outputs
            .iter()
            .enumerate()
            .map(|(i, &a)| {
                let d_out = local[l][i] + carried.as_ref().map_or(0.0, |c| c[i]);
                d_out * act.derivative_from_output(a)
            })
            .collect();
        let source = trace.layer_source(l);
        let g = &mut grad.layers[l];
        for (i, &d) in delta.iter().enumerate() {
            let sd = scale * d;
            let row = g.row_mut(i);
            for (gj, &sj) in row.iter_mut().zip(source) {
                *gj += sd * sj;
            }
            if bias {
                row[source.len()] += sd;
            }
        }
        if l > 0 {
            let w = &net.weights()[l];
            let mut back = vec![0.0; source.len()];
            for (i, &d) in delta.iter().enumerate() {
                for (b, &wij) in back.iter_mut().zip(w.row(i)) {
                    *b += wij * d;
                }
            }
            carried = Some(back);
        }
    }
}

fn check_batch(net: &Network, features: &Matrix) -> Result<()> {
    if features.rows() == 0 {
        return Err(Error::input("empty batch"));
    }
    for (i, x) in features.iter_rows().enumerate() {
        net.check_input(x)
            .map_err(|e| Error::input(format!("sample {i}: {e}")))?;
    }
    Ok(())
}

/// Objective and gradient of the batch objective (mean over rows for `PerSample`).
pub fn batch_gradient(
    net: &Network,
    features: &Matrix,
    lambda: f64,
    scope: EntropyScope,
) -> Result<(ObjectiveBreakdown, GradientSet)> {
    check_batch(net, features)?;
    let n = features.rows();
    let scale = 1.0 / n as f64;
    let rows: Vec<&[f64]> = features.iter_rows().collect();

    match scope {
        EntropyScope::PerSample => {
            let partials: Vec<(Vec<ForwardTrace>, GradientSet)> = rows
                .par_chunks(CHUNK_ROWS)
                .map(|chunk| {
                    let mut g = GradientSet::zeros_like(net);
                    let traces: Vec<ForwardTrace> = chunk
                        .iter()
                        .map(|x| {
                            let t = net.forward_unchecked(x);
                            let local = per_sample_local_terms(&t, lambda);
                            backprop_into(net, &t, &local, scale, &mut g);
                            t
                        })
                        .collect();
                    (traces, g)
                })
                .collect();
            let mut grad = GradientSet::zeros_like(net);
            let mut traces = Vec::with_capacity(n);
            for (t, g) in partials {
                grad.add_scaled(&g, 1.0);
                traces.extend(t);
            }
            Ok((objective_from_traces(&traces, lambda, scope), grad))
        }
        EntropyScope::BatchMean => {
            let traces: Vec<ForwardTrace> = rows
                .par_iter()
                .map(|x| net.forward_unchecked(x))
                .collect();
            let grad_mean = entropy_grad_probs(&mean_output_distribution(&traces));
            let partials: Vec<GradientSet> = traces
                .par_chunks(CHUNK_ROWS)
                .map(|chunk| {
                    let mut g = GradientSet::zeros_like(net);
                    for t in chunk {
                        let mut local = per_sample_local_terms(t, lambda);
                        let out = local.last_mut().expect("output layer");
                        *out = complement_pullback(&complement_unchecked(t.output()), &grad_mean);
                        backprop_into(net, t, &local, scale, &mut g);
                    }
                    g
                })
                .collect();
            let mut grad = GradientSet::zeros_like(net);
            for g in &partials {
                grad.add_scaled(g, 1.0);
            }
            Ok((objective_from_traces(&traces, lambda, scope), grad))
        }
    }
}

/// Central-difference stencils for the numerical gradient.
///
/// Higher orders tolerate larger steps, which keeps floating-point cancellation in
/// `J(w + kh) - J(w - kh)` small relative to tiny gradient components.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Stencil {
    /// `(J(w + h) - J(w - h)) / 2h`, truncation error `O(h^2)`.
    #[default]
    ThreePoint,
    /// Truncation error `O(h^4)`.
    FivePoint,
    /// Truncation error `O(h^6)`.
    SevenPoint,
    /// Truncation error `O(h^8)`.
    NinePoint,
}

impl Stencil {
    /// `(k, c_k)` pairs such that `J'(w) ≈ sum_k c_k (J(w + kh) - J(w - kh)) / h`.
    fn weights(self) -> &'static [(f64, f64)] {
        match self {
            Stencil::ThreePoint => &[(1.0, 1.0 / 2.0)],
            Stencil::FivePoint => &[(1.0, 8.0 / 12.0), (2.0, -1.0 / 12.0)],
            Stencil::SevenPoint => &[(1.0, 45.0 / 60.0), (2.0, -9.0 / 60.0), (3.0, 1.0 / 60.0)],
            Stencil::NinePoint => &[
                (1.0, 672.0 / 840.0),
                (2.0, -168.0 / 840.0),
                (3.0, 32.0 / 840.0),
                (4.0, -3.0 / 840.0),
            ],
        }
    }
}

/// Central-difference estimate `(J(w + h) - J(w - h)) / 2h` of the single-sample gradient.
pub fn finite_difference_gradient(
    net: &Network,
    x: &[f64],
    lambda: f64,
    step: f64,
) -> Result<GradientSet> {
    finite_difference_gradient_with(net, x, lambda, step, Stencil::ThreePoint)
}

pub fn finite_difference_gradient_with(
    net: &Network,
    x: &[f64],
    lambda: f64,
    step: f64,
    stencil: Stencil,
) -> Result<GradientSet> {
    net.check_input(x)?;
    central_differences(net, step, stencil, |n| {
        objective::objective(&n.forward_unchecked(x), lambda).total
    })
}

/// Central-difference estimate of the batch objective gradient.
pub fn finite_difference_batch_gradient(
    net: &Network,
    features: &Matrix,
    lambda: f64,
    scope: EntropyScope,
    step: f64,
    stencil: Stencil,
) -> Result<GradientSet> {
    check_batch(net, features)?;
    central_differences(net, step, stencil, |n| {
        let traces: Vec<ForwardTrace> = features
            .iter_rows()
            .map(|x| n.forward_unchecked(x))
            .collect();
        objective_from_traces(&traces, lambda, scope).total
    })
}

/// Estimates `f'(0)` from evaluations of `f` at multiples of `step`.
pub fn central_difference(mut f: impl FnMut(f64) -> f64, step: f64, stencil: Stencil) -> f64 {
    stencil
        .weights()
        .iter()
        .map(|&(k, c)| c * (f(k * step) - f(-k * step)))
        .sum::<f64>()
        / step
}

fn central_differences<F>(net: &Network, step: f64, stencil: Stencil, eval: F) -> Result<GradientSet>
where
    F: Fn(&Network) -> f64,
{
    if !(step.is_finite() && step > 0.0) {
        return Err(Error::input(format!("finite-difference step must be positive, got {step}")));
    }
    let mut probe = net.clone();
    let mut grad = GradientSet::zeros_like(net);
    for l in 0..net.weights().len() {
        for k in 0..net.weights()[l].as_slice().len() {
            let original = net.weights()[l].as_slice()[k];
            let estimate = central_difference(
                |offset| {
                    probe.weights_mut()[l].as_mut_slice()[k] = original + offset;
                    eval(&probe)
                },
                step,
                stencil,
            );
            probe.weights_mut()[l].as_mut_slice()[k] = original;
            grad.layers[l].as_mut_slice()[k] = estimate;
        }
    }
    Ok(grad)
}

fn apply_update(net: &mut Network, grad: &GradientSet, learning_rate: f64) {
    for (w, g) in net.weights_mut().iter_mut().zip(&grad.layers) {
        w.add_scaled(g, learning_rate);
    }
}

fn ensure_finite(epoch: usize, b: &ObjectiveBreakdown, grad: Option<&GradientSet>) -> Result<()> {
    if !b.total.is_finite() {
        return Err(Error::Divergence {
            epoch,
            reason: format!("objective became {}", b.total),
        });
    }
    if let Some(g) = grad {
        if !g.all_finite() {
            return Err(Error::Divergence {
                epoch,
                reason: "gradient has non-finite entries".into(),
            });
        }
    }
    Ok(())
}

/// Maximizes the objective by gradient ascent, mutating `net` in place.
///
/// Stops when consecutive epoch objectives differ by less than `cfg.tolerance` or after
/// `cfg.max_epochs` epochs.
pub fn train(net: &mut Network, data: &Dataset, cfg: &TrainConfig) -> Result<TrainReport> {
    cfg.validate()?;
    let features = data.features();
    check_batch(net, features)?;
    let start = Instant::now();
    let lambda = cfg.lambda;
    let scope = cfg.entropy_scope;

    let (initial, mut grad) = batch_gradient(net, features, lambda, scope)?;
    ensure_finite(0, &initial, Some(&grad))?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut order: Vec<usize> = (0..features.rows()).collect();

    let mut previous = initial.total;
    let mut objective_history = Vec::new();
    let mut breakdown_history = Vec::new();
    let mut converged = false;

    for epoch in 1..=cfg.max_epochs {
        let breakdown = match cfg.update_mode {
            UpdateMode::FullBatch => {
                apply_update(net, &grad, cfg.learning_rate);
                let (b, g) = batch_gradient(net, features, lambda, scope)?;
                ensure_finite(epoch, &b, Some(&g))?;
                grad = g;
                b
            }
            UpdateMode::PerSample => {
                order.shuffle(&mut rng);
                for &i in &order {
                    let g = analytic_gradient(net, features.row(i), lambda)?;
                    if !g.all_finite() {
                        return Err(Error::Divergence {
                            epoch,
                            reason: format!("gradient for sample {i} has non-finite entries"),
                        });
                    }
                    apply_update(net, &g, cfg.learning_rate);
                }
                let b = objective::batch_objective(net, features, lambda, scope)?;
                ensure_finite(epoch, &b, None)?;
                b
            }
        };
        let delta = (breakdown.total - previous).abs();
        previous = breakdown.total;
        objective_history.push(breakdown.total);
        breakdown_history.push(breakdown);
        if delta < cfg.tolerance {
            converged = true;
            break;
        }
    }

    Ok(TrainReport {
        epochs_run: objective_history.len(),
        final_objective: previous,
        initial_objective: initial.total,
        objective_history,
        breakdown_history,
        converged,
        wall_time: start.elapsed(),
    })
}
