//! Randomized comparison of backpropagated gradients against central differences.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::network::{Network, NetworkConfig};
use crate::objective::EntropyScope;
use crate::training::{
    analytic_gradient, batch_gradient, finite_difference_batch_gradient,
    finite_difference_gradient_with, GradientSet, Stencil,
};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GradcheckConfig {
    pub trials: usize,
    /// Upper bound on every layer width and on the input dimension.
    pub max_width: usize,
    pub max_hidden_layers: usize,
    /// Cycled through across trials.
    pub lambdas: Vec<f64>,
    pub step: f64,
    pub stencil: Stencil,
    pub tolerance: f64,
    /// Denominator floor of the relative error.
    pub abs_floor: f64,
    pub init_scale: f64,
    pub entropy_scope: EntropyScope,
    /// Rows per trial when checking the batch-mean objective.
    pub batch_size: usize,
    pub seed: u64,
    /// Added to every analytic component; non-zero only to confirm the check can fail.
    pub perturb: f64,
}

impl Default for GradcheckConfig {
    fn default() -> Self {
        GradcheckConfig {
            trials: 200,
            max_width: 6,
            max_hidden_layers: 2,
            lambdas: vec![0.0, 0.5, 1.0, 2.0],
            step: 2e-2,
            stencil: Stencil::NinePoint,
            tolerance: 1e-6,
            abs_floor: 1e-8,
            init_scale: 1.0,
            entropy_scope: EntropyScope::PerSample,
            batch_size: 4,
            seed: 0,
            perturb: 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Mismatch {
    pub trial: usize,
    pub layer: usize,
    pub index: usize,
    pub analytic: f64,
    pub numeric: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GradcheckReport {
    pub trials: usize,
    pub components: usize,
    pub max_relative_error: f64,
    pub worst: Option<Mismatch>,
    pub passed: bool,
}

pub fn relative_error(analytic: f64, numeric: f64, floor: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(floor)
}

/// A random network and input batch for one trial.
pub fn random_case(rng: &mut impl Rng, cfg: &GradcheckConfig) -> Result<(Network, Matrix)> {
    let max_w = cfg.max_width.max(2);
    let input_dim = rng.random_range(1..=max_w);
    let hidden_layers = rng.random_range(0..=cfg.max_hidden_layers);
    let hidden = (0..hidden_layers).map(|_| rng.random_range(2..=max_w)).collect();
    let clusters = rng.random_range(2..=max_w);
    let net_cfg = NetworkConfig::new(input_dim, hidden, clusters)
        .with_bias(rng.random_bool(0.5))
        .with_init_scale(cfg.init_scale)
        .with_seed(rng.random());
    let net = Network::init(net_cfg)?;
    let rows = match cfg.entropy_scope {
        EntropyScope::PerSample => 1,
        EntropyScope::BatchMean => cfg.batch_size.max(1),
    };
    let data = (0..rows * input_dim)
        .map(|_| rng.random_range(-1.0..=1.0))
        .collect();
    Ok((net, Matrix::from_vec(rows, input_dim, data)))
}

fn gradients(net: &Network, x: &Matrix, lambda: f64, cfg: &GradcheckConfig) -> Result<(GradientSet, GradientSet)> {
    match cfg.entropy_scope {
        EntropyScope::PerSample => Ok((
            analytic_gradient(net, x.row(0), lambda)?,
            finite_difference_gradient_with(net, x.row(0), lambda, cfg.step, cfg.stencil)?,
        )),
        EntropyScope::BatchMean => Ok((
            batch_gradient(net, x, lambda, EntropyScope::BatchMean)?.1,
            finite_difference_batch_gradient(
                net,
                x,
                lambda,
                EntropyScope::BatchMean,
                cfg.step,
                cfg.stencil,
            )?,
        )),
    }
}

pub fn gradcheck(cfg: &GradcheckConfig) -> Result<GradcheckReport> {
    if cfg.lambdas.is_empty() {
        return Err(Error::config("lambdas", "need at least one lambda"));
    }
    if cfg.max_width < 2 {
        return Err(Error::config("max_width", "must be at least 2"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut report = GradcheckReport {
        trials: cfg.trials,
        components: 0,
        max_relative_error: 0.0,
        worst: None,
        passed: true,
    };
    for trial in 0..cfg.trials {
        let lambda = cfg.lambdas[trial % cfg.lambdas.len()];
        let (net, x) = random_case(&mut rng, cfg)?;
        let (analytic, numeric) = gradients(&net, &x, lambda, cfg)?;
        for (layer, (a, f)) in analytic.layers.iter().zip(&numeric.layers).enumerate() {
            for (index, (&av, &fv)) in a.as_slice().iter().zip(f.as_slice()).enumerate() {
                let av = av + cfg.perturb;
                let err = relative_error(av, fv, cfg.abs_floor);
                report.components += 1;
                if err > report.max_relative_error || err.is_nan() {
                    report.max_relative_error = err;
                    report.worst = Some(Mismatch {
                        trial,
                        layer,
                        index,
                        analytic: av,
                        numeric: fv,
                    });
                }
            }
        }
    }
    report.passed = report.max_relative_error < cfg.tolerance;
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn relative_error_uses_floor() {
        assert_eq!(relative_error(0.0, 0.0, 1e-8), 0.0);
        assert!((relative_error(1e-10, 0.0, 1e-8) - 1e-2).abs() < 1e-15);
        assert!((relative_error(2.0, 1.0, 1e-8) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn perturbation_is_detected() {
        let cfg = GradcheckConfig {
            trials: 5,
            perturb: 1e-3,
            ..GradcheckConfig::default()
        };
        assert!(!gradcheck(&cfg).unwrap().passed);
    }

    #[test]
    fn small_default_run_passes() {
        let cfg = GradcheckConfig {
            trials: 20,
            ..GradcheckConfig::default()
        };
        let r = gradcheck(&cfg).unwrap();
        assert!(r.passed, "{r:?}");
    }
}
