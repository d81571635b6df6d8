use std::collections::BTreeSet;
use std::io::Write;

use crate::error::{Error, Result};

/// Cluster-by-class sample counts. Rows are clusters, columns are classes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ContingencyTable {
    counts: Vec<Vec<u64>>,
    n: u64,
}

impl ContingencyTable {
    pub fn from_counts(counts: Vec<Vec<u64>>) -> Result<Self> {
        let cols = counts.first().map_or(0, Vec::len);
        if counts.iter().any(|r| r.len() != cols) {
            return Err(Error::input("ragged contingency table"));
        }
        let n = counts.iter().flatten().sum();
        Ok(ContingencyTable { counts, n })
    }

    pub fn counts(&self) -> &[Vec<u64>] {
        &self.counts
    }

    pub fn total(&self) -> u64 {
        self.n
    }

    pub fn num_clusters(&self) -> usize {
        self.counts.len()
    }

    pub fn num_classes(&self) -> usize {
        self.counts.first().map_or(0, Vec::len)
    }

    /// Sum over clusters of the majority-class count.
    pub fn majority_sum(&self) -> u64 {
        self.counts
            .iter()
            .map(|row| row.iter().copied().max().unwrap_or(0))
            .sum()
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        let mut header = vec!["cluster".to_string()];
        header.extend((0..self.num_classes()).map(|j| format!("class_{j}")));
        w.write_record(&header)?;
        for (k, row) in self.counts.iter().enumerate() {
            let mut rec = vec![k.to_string()];
            rec.extend(row.iter().map(u64::to_string));
            w.write_record(&rec)?;
        }
        w.flush().map_err(|e| Error::io("<contingency table>", e))?;
        Ok(())
    }
}

/// Contingency table with one row per cluster index up to the largest one seen.
///
/// Labels may be arbitrary integers; they are mapped to dense columns in ascending order.
pub fn tabulate(assignments: &[usize], labels: &[usize]) -> Result<ContingencyTable> {
    let k = assignments.iter().max().map_or(0, |m| m + 1);
    tabulate_with_clusters(assignments, labels, k)
}

/// Like [`tabulate`], but with a fixed cluster count so empty clusters keep their row.
pub fn tabulate_with_clusters(
    assignments: &[usize],
    labels: &[usize],
    cluster_count: usize,
) -> Result<ContingencyTable> {
    if assignments.len() != labels.len() {
        return Err(Error::input(format!(
            "{} assignments but {} labels",
            assignments.len(),
            labels.len()
        )));
    }
    if assignments.is_empty() {
        return Err(Error::input("cannot tabulate zero samples"));
    }
    if let Some(&a) = assignments.iter().find(|&&a| a >= cluster_count) {
        return Err(Error::input(format!(
            "cluster index {a} out of range for {cluster_count} clusters"
        )));
    }
    let classes: Vec<usize> = labels.iter().copied().collect::<BTreeSet<_>>().into_iter().collect();
    let mut counts = vec![vec![0u64; classes.len()]; cluster_count];
    for (&a, l) in assignments.iter().zip(labels) {
        let j = classes.binary_search(l).expect("label present");
        counts[a][j] += 1;
    }
    ContingencyTable::from_counts(counts)
}

/// `(1/n) * sum_k max_j |cluster_k ∩ class_j|`.
pub fn purity(table: &ContingencyTable) -> Result<f64> {
    if table.n == 0 {
        return Err(Error::input("purity of an empty table"));
    }
    Ok(table.majority_sum() as f64 / table.n as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tabulate_hand_example() {
        let t = tabulate(&[0, 0, 1], &[0, 1, 1]).unwrap();
        assert_eq!(t.counts(), &[vec![1, 1], vec![0, 1]]);
        assert_eq!(t.total(), 3);
    }

    #[test]
    fn tabulate_rejects_bad_input() {
        assert!(tabulate(&[], &[]).is_err());
        assert!(tabulate(&[0, 1], &[0]).is_err());
        assert!(tabulate_with_clusters(&[0, 3], &[0, 0], 2).is_err());
    }

    #[test]
    fn sparse_labels_become_dense_columns() {
        let t = tabulate(&[0, 0, 1], &[7, 3, 7]).unwrap();
        assert_eq!(t.counts(), &[vec![1, 1], vec![0, 1]]);
    }

    #[test]
    fn empty_clusters_keep_zero_rows() {
        let t = tabulate_with_clusters(&[0, 2], &[0, 1], 4).unwrap();
        assert_eq!(t.num_clusters(), 4);
        assert_eq!(t.counts()[1], vec![0, 0]);
        assert_eq!(purity(&t).unwrap(), 1.0);
    }

    #[test]
    fn perfect_clustering_is_pure() {
        let t = ContingencyTable::from_counts(vec![vec![4, 0], vec![0, 5]]).unwrap();
        assert_eq!(purity(&t).unwrap(), 1.0);
    }

    #[test]
    fn majority_example() {
        // clusters {a, a, b} and {b, b, b}
        let t = tabulate(&[0, 0, 0, 1, 1, 1], &[0, 0, 1, 1, 1, 1]).unwrap();
        assert_eq!(t.majority_sum(), 5);
        assert!((purity(&t).unwrap() - 5.0 / 6.0).abs() < 1e-15);
    }

    #[test]
    fn single_cluster_gives_majority_prior() {
        let t = tabulate(&[0; 5], &[1, 1, 2, 1, 0]).unwrap();
        assert!((purity(&t).unwrap() - 3.0 / 5.0).abs() < 1e-15);
    }

    #[test]
    fn empty_table_is_an_error() {
        let t = ContingencyTable::from_counts(vec![vec![0, 0]]).unwrap();
        assert!(purity(&t).is_err());
    }

    #[test]
    fn table_csv_layout() {
        let t = tabulate(&[0, 1], &[0, 1]).unwrap();
        let mut buf = Vec::new();
        t.write_csv(&mut buf).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "cluster,class_0,class_1\n0,1,0\n1,0,1\n"
        );
    }
}
