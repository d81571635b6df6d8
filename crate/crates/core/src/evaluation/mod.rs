//! Purity scoring, the k-means baseline, and sweep / grid experiment runners.

pub mod kmeans;
pub mod purity;
pub mod reference;
pub mod sweep;

pub use kmeans::{kmeans_baseline, KMeansFit};
pub use purity::{purity, tabulate, tabulate_with_clusters, ContingencyTable};
pub use reference::{published_purity, PublishedPurity, PUBLISHED_PURITY};
pub use sweep::{
    best_purity, derived_seed, kmeans_rows, run_grid, sweep_hidden_nodes, train_and_score,
    write_results_csv, GridSpec, ResultRow, RunOutcome, SweepReport, SweepRow,
};
