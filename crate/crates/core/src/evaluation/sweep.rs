//! Hidden-width sweeps and hyperparameter grids over the clustering network.

use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::clustering::assign_batch;
use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::evaluation::kmeans::kmeans_baseline;
use crate::evaluation::purity::{purity, tabulate_with_clusters};
use crate::network::{Network, NetworkConfig};
use crate::training::{train, TrainConfig};

/// Outcome of training and evaluating one network.
#[derive(Debug, Clone, PartialEq)]
pub struct RunOutcome {
    pub purity: f64,
    pub final_objective: f64,
    pub epochs_run: usize,
    pub converged: bool,
}

/// Trains a fresh network on `data` and scores its clustering against the labels.
///
/// `net_cfg.input_dim` is overridden by the data width.
pub fn train_and_score(
    data: &Dataset,
    net_cfg: &NetworkConfig,
    train_cfg: &TrainConfig,
) -> Result<RunOutcome> {
    let labels = data
        .labels()
        .ok_or_else(|| Error::input("purity needs a labelled dataset"))?;
    let mut cfg = net_cfg.clone();
    cfg.input_dim = data.dim();
    let mut net = Network::init(cfg)?;
    let report = train(&mut net, data, train_cfg)?;
    let clusters = assign_batch(&net, data)?;
    let table = tabulate_with_clusters(&clusters.assignments, labels, net.config().cluster_count)?;
    Ok(RunOutcome {
        purity: purity(&table)?,
        final_objective: report.final_objective,
        epochs_run: report.epochs_run,
        converged: report.converged,
    })
}

/// Seed used for the sweep entry of a given hidden width.
pub fn derived_seed(base: u64, hidden_size: usize) -> u64 {
    base ^ hidden_size as u64
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub hidden_size: usize,
    /// `Err` carries the reason a size failed; the sweep continues past it.
    pub outcome: std::result::Result<RunOutcome, String>,
}

impl SweepRow {
    pub fn purity(&self) -> Option<f64> {
        self.outcome.as_ref().ok().map(|o| o.purity)
    }

    pub fn final_objective(&self) -> Option<f64> {
        self.outcome.as_ref().ok().map(|o| o.final_objective)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepReport {
    pub rows: Vec<SweepRow>,
    pub network: NetworkConfig,
    pub training: TrainConfig,
}

impl SweepReport {
    pub fn to_result_rows(&self, dataset: &str) -> Vec<ResultRow> {
        self.rows
            .iter()
            .map(|r| {
                let seed = derived_seed(self.network.seed, r.hidden_size);
                ResultRow {
                    dataset: dataset.to_string(),
                    method: "maxent-ffnn".into(),
                    hidden_size: Some(r.hidden_size),
                    lambda: Some(self.training.lambda),
                    alpha: Some(self.training.learning_rate),
                    seed,
                    purity: r.purity(),
                    final_objective: r.final_objective(),
                    status: status_of(&r.outcome),
                }
            })
            .collect()
    }
}

fn status_of(outcome: &std::result::Result<RunOutcome, String>) -> String {
    match outcome {
        Ok(o) if o.converged => "converged".into(),
        Ok(_) => "max-epochs".into(),
        Err(e) => format!("failed: {e}"),
    }
}

/// Trains one single-hidden-layer network per requested width.
///
/// Entry seeds (network and shuffling) are `base ^ width`. Rows follow `sizes` order.
pub fn sweep_hidden_nodes(
    data: &Dataset,
    sizes: &[usize],
    net_cfg: &NetworkConfig,
    train_cfg: &TrainConfig,
) -> Result<SweepReport> {
    if sizes.is_empty() {
        return Err(Error::input("sweep needs at least one hidden size"));
    }
    data.labels()
        .ok_or_else(|| Error::input("sweep needs a labelled dataset"))?;
    let rows = sizes
        .par_iter()
        .map(|&size| {
            let mut n = net_cfg.clone();
            n.hidden_sizes = vec![size];
            n.seed = derived_seed(net_cfg.seed, size);
            let mut t = train_cfg.clone();
            t.seed = derived_seed(train_cfg.seed, size);
            SweepRow {
                hidden_size: size,
                outcome: train_and_score(data, &n, &t).map_err(|e| e.to_string()),
            }
        })
        .collect();
    Ok(SweepReport {
        rows,
        network: net_cfg.clone(),
        training: train_cfg.clone(),
    })
}

/// Hyperparameter grid for the benchmark comparison.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridSpec {
    pub hidden_sizes: Vec<usize>,
    pub lambdas: Vec<f64>,
    pub learning_rates: Vec<f64>,
    pub seeds: Vec<u64>,
    pub kmeans_max_iters: usize,
}

impl Default for GridSpec {
    fn default() -> Self {
        GridSpec {
            hidden_sizes: vec![4, 8, 16],
            lambdas: vec![0.5, 1.0, 2.0],
            learning_rates: vec![0.003, 0.01],
            seeds: vec![1, 2, 3],
            kmeans_max_iters: 300,
        }
    }
}

impl GridSpec {
    pub fn len(&self) -> usize {
        self.hidden_sizes.len() * self.lambdas.len() * self.learning_rates.len() * self.seeds.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// One line of a results CSV. Empty cells mark values that do not apply or are missing.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub dataset: String,
    pub method: String,
    pub hidden_size: Option<usize>,
    pub lambda: Option<f64>,
    pub alpha: Option<f64>,
    pub seed: u64,
    pub purity: Option<f64>,
    pub final_objective: Option<f64>,
    pub status: String,
}

/// Trains every grid point. The network seed and the shuffle seed both take the grid seed.
pub fn run_grid(
    dataset: &str,
    data: &Dataset,
    grid: &GridSpec,
    net_cfg: &NetworkConfig,
    train_cfg: &TrainConfig,
) -> Vec<ResultRow> {
    let mut points = Vec::with_capacity(grid.len());
    for &h in &grid.hidden_sizes {
        for &lambda in &grid.lambdas {
            for &alpha in &grid.learning_rates {
                for &seed in &grid.seeds {
                    points.push((h, lambda, alpha, seed));
                }
            }
        }
    }
    points
        .par_iter()
        .map(|&(h, lambda, alpha, seed)| {
            let mut n = net_cfg.clone();
            n.hidden_sizes = vec![h];
            n.seed = seed;
            let t = TrainConfig {
                learning_rate: alpha,
                lambda,
                seed,
                ..train_cfg.clone()
            };
            let outcome = train_and_score(data, &n, &t).map_err(|e| e.to_string());
            ResultRow {
                dataset: dataset.to_string(),
                method: "maxent-ffnn".into(),
                hidden_size: Some(h),
                lambda: Some(lambda),
                alpha: Some(alpha),
                seed,
                purity: outcome.as_ref().ok().map(|o| o.purity),
                final_objective: outcome.as_ref().ok().map(|o| o.final_objective),
                status: status_of(&outcome),
            }
        })
        .collect()
}

/// K-means purity for each seed, reported in the same row format.
pub fn kmeans_rows(dataset: &str, data: &Dataset, k: usize, seeds: &[u64], max_iters: usize) -> Vec<ResultRow> {
    seeds
        .iter()
        .map(|&seed| {
            let scored = data
                .labels()
                .ok_or_else(|| Error::input("purity needs a labelled dataset"))
                .and_then(|labels| {
                    let fit = kmeans_baseline(data, k, seed, max_iters)?;
                    purity(&tabulate_with_clusters(&fit.assignments, labels, k)?)
                        .map(|p| (p, fit.converged))
                });
            let (purity, status) = match scored {
                Ok((p, true)) => (Some(p), "converged".to_string()),
                Ok((p, false)) => (Some(p), "max-iters".to_string()),
                Err(e) => (None, format!("failed: {e}")),
            };
            ResultRow {
                dataset: dataset.to_string(),
                method: "kmeans".into(),
                hidden_size: None,
                lambda: None,
                alpha: None,
                seed,
                purity,
                final_objective: None,
                status,
            }
        })
        .collect()
}

/// Highest purity among rows of the given method.
pub fn best_purity<'a>(rows: &'a [ResultRow], method: &str) -> Option<&'a ResultRow> {
    rows.iter()
        .filter(|r| r.method == method && r.purity.is_some())
        .fold(None, |best: Option<&ResultRow>, r| match best {
            Some(b) if b.purity >= r.purity => Some(b),
            _ => Some(r),
        })
}

pub fn write_results_csv<W: Write>(rows: &[ResultRow], writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush().map_err(|e| Error::io("<results>", e))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{make_blobs, normalize_minmax};

    fn blobs() -> Dataset {
        normalize_minmax(&make_blobs(&[vec![0.0, 0.0], vec![4.0, 4.0]], 15, 0.4, 3).unwrap())
    }

    fn quick_train() -> TrainConfig {
        TrainConfig {
            max_epochs: 20,
            ..TrainConfig::default()
        }
    }

    #[test]
    fn sweep_rows_follow_request_order() {
        let data = blobs();
        let net = NetworkConfig::new(2, vec![], 2).with_seed(4);
        let report = sweep_hidden_nodes(&data, &[12, 4, 8], &net, &quick_train()).unwrap();
        let sizes: Vec<_> = report.rows.iter().map(|r| r.hidden_size).collect();
        assert_eq!(sizes, vec![12, 4, 8]);
        for r in &report.rows {
            let p = r.purity().unwrap();
            assert!((0.0..=1.0).contains(&p));
        }
    }

    #[test]
    fn sweep_is_deterministic() {
        let data = blobs();
        let net = NetworkConfig::new(2, vec![], 2).with_seed(4);
        let a = sweep_hidden_nodes(&data, &[3, 5], &net, &quick_train()).unwrap();
        let b = sweep_hidden_nodes(&data, &[3, 5], &net, &quick_train()).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn failing_size_is_recorded_not_fatal() {
        let data = blobs();
        let net = NetworkConfig::new(2, vec![], 2);
        let report = sweep_hidden_nodes(&data, &[1, 4], &net, &quick_train()).unwrap();
        assert!(report.rows[0].outcome.is_err());
        assert!(report.rows[1].outcome.is_ok());
        let rows = report.to_result_rows("blobs");
        assert!(rows[0].status.starts_with("failed"));
        assert_eq!(rows[0].purity, None);
    }

    #[test]
    fn sweep_needs_sizes_and_labels() {
        let data = blobs();
        let net = NetworkConfig::new(2, vec![], 2);
        assert!(sweep_hidden_nodes(&data, &[], &net, &quick_train()).is_err());
        let unlabeled = Dataset::new(data.features().clone(), None).unwrap();
        assert!(sweep_hidden_nodes(&unlabeled, &[4], &net, &quick_train()).is_err());
    }

    #[test]
    fn grid_and_kmeans_rows() {
        let data = blobs();
        let grid = GridSpec {
            hidden_sizes: vec![3],
            lambdas: vec![1.0],
            learning_rates: vec![0.01, 0.1],
            seeds: vec![1],
            kmeans_max_iters: 50,
        };
        let rows = run_grid("blobs", &data, &grid, &NetworkConfig::new(2, vec![], 2), &quick_train());
        assert_eq!(rows.len(), 2);
        let km = kmeans_rows("blobs", &data, 2, &[1, 2], 50);
        assert_eq!(km.len(), 2);
        assert!(best_purity(&km, "kmeans").unwrap().purity.unwrap() >= 0.95);

        let mut buf = Vec::new();
        write_results_csv(&km, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with(
            "dataset,method,hidden_size,lambda,alpha,seed,purity,final_objective,status\n"
        ));
        assert!(text.contains("blobs,kmeans,,,,1,"));
    }
}
