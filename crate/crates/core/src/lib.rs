//! Unsupervised clustering with entropy-trained feed-forward networks.
//!
//! A logistic network is trained by gradient ascent on
//! `J = H(output) - lambda * sum H(hidden)`, where each entropy is taken over the
//! layer's normalized complement distribution `(1 - O_i) / sum_j (1 - O_j)`.
//! A sample belongs to the cluster whose output neuron fires least.
//!
//! ```
//! use maxent_cluster::{data, network::{Network, NetworkConfig}, training, clustering};
//!
//! let blobs = data::make_blobs(&[vec![0.0, 0.0], vec![3.0, 3.0]], 20, 0.3, 1).unwrap();
//! let blobs = data::normalize_minmax(&blobs);
//! let mut net = Network::init(NetworkConfig::new(2, vec![4], 2).with_seed(7)).unwrap();
//! let cfg = training::TrainConfig { max_epochs: 50, ..Default::default() };
//! let report = training::train(&mut net, &blobs, &cfg).unwrap();
//! assert_eq!(report.objective_history.len(), report.epochs_run);
//! let clusters = clustering::assign_batch(&net, &blobs).unwrap();
//! assert_eq!(clusters.len(), 40);
//! ```

pub mod clustering;
pub mod data;
pub mod error;
pub mod evaluation;
pub mod gradcheck;
pub mod matrix;
pub mod model;
pub mod network;
pub mod objective;
pub mod training;

pub use error::{Error, Result};
pub use matrix::Matrix;
