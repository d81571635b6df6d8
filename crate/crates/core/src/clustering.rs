//! Cluster assignment by minimum output activation.

use std::io::Write;

use serde::Serialize;

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::network::Network;
use crate::objective::complement_unchecked;

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ClusterResult {
    pub assignments: Vec<usize>,
    /// Complement probability of the chosen cluster, per sample.
    pub confidences: Vec<f64>,
}

impl ClusterResult {
    pub fn len(&self) -> usize {
        self.assignments.len()
    }

    pub fn is_empty(&self) -> bool {
        self.assignments.is_empty()
    }

    /// Number of samples in each cluster `0..cluster_count`.
    pub fn cluster_sizes(&self, cluster_count: usize) -> Vec<usize> {
        let mut sizes = vec![0; cluster_count];
        for &a in &self.assignments {
            sizes[a] += 1;
        }
        sizes
    }

    /// Writes `sample,cluster[,confidence]` rows with a header line.
    pub fn write_csv<W: Write>(&self, writer: W, with_confidence: bool) -> Result<()> {
        #[derive(Serialize)]
        struct Row {
            sample: usize,
            cluster: usize,
            #[serde(skip_serializing_if = "Option::is_none")]
            confidence: Option<f64>,
        }
        let mut w = csv::Writer::from_writer(writer);
        for (i, (&c, &p)) in self.assignments.iter().zip(&self.confidences).enumerate() {
            w.serialize(Row {
                sample: i,
                cluster: c,
                confidence: with_confidence.then_some(p),
            })?;
        }
        w.flush().map_err(|e| Error::io("<assignments>", e))?;
        Ok(())
    }
}

/// Index of the smallest value, ties broken toward the lowest index.
pub fn argmin(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate().skip(1) {
        if v < values[best] {
            best = i;
        }
    }
    best
}

/// Index of the largest value, ties broken toward the lowest index.
pub fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate().skip(1) {
        if v > values[best] {
            best = i;
        }
    }
    best
}

/// Cluster of the minimum-output neuron and its complement probability.
pub fn assign_outputs(outputs: &[f64]) -> (usize, f64) {
    let k = argmin(outputs);
    let dist = complement_unchecked(outputs);
    (k, dist.probs[k])
}

pub fn assign(net: &Network, x: &[f64]) -> Result<(usize, f64)> {
    let trace = net.forward(x)?;
    Ok(assign_outputs(trace.output()))
}

pub fn assign_batch(net: &Network, data: &Dataset) -> Result<ClusterResult> {
    let mut result = ClusterResult::default();
    for (i, x) in data.features().iter_rows().enumerate() {
        let (k, p) = assign(net, x).map_err(|e| Error::input(format!("sample {i}: {e}")))?;
        result.assignments.push(k);
        result.confidences.push(p);
    }
    Ok(result)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::Matrix;
    use crate::network::NetworkConfig;
    use approx::assert_abs_diff_eq;

    #[test]
    fn minimum_output_wins() {
        let (k, p) = assign_outputs(&[0.3, 0.7, 0.5]);
        assert_eq!(k, 0);
        assert_abs_diff_eq!(p, 0.7 / 1.5, epsilon = 1e-15);
        assert_abs_diff_eq!(p, 0.4667, epsilon = 1e-4);
    }

    #[test]
    fn ties_go_to_lowest_index() {
        assert_eq!(assign_outputs(&[0.5, 0.5]).0, 0);
        assert_eq!(argmin(&[0.4, 0.2, 0.2]), 1);
        assert_eq!(argmax(&[0.1, 0.3, 0.3]), 1);
    }

    #[test]
    fn batch_matches_single_assignments() {
        let net = Network::init(NetworkConfig::new(2, vec![3], 3).with_seed(4)).unwrap();
        let rows = vec![vec![0.1, 0.2], vec![0.9, 0.4], vec![0.5, 0.5]];
        let data = Dataset::new(Matrix::from_rows(&rows), None).unwrap();
        let batch = assign_batch(&net, &data).unwrap();
        for (i, r) in rows.iter().enumerate() {
            let (k, p) = assign(&net, r).unwrap();
            assert_eq!(batch.assignments[i], k);
            assert_eq!(batch.confidences[i], p);
        }
    }

    #[test]
    fn batch_errors_name_the_sample() {
        let net = Network::init(NetworkConfig::new(3, vec![], 2)).unwrap();
        let data = Dataset::new(Matrix::from_rows(&[vec![0.1, 0.2]]), None).unwrap();
        let msg = assign_batch(&net, &data).unwrap_err().to_string();
        assert!(msg.contains("sample 0"), "{msg}");
    }

    #[test]
    fn empty_result_sizes() {
        let r = ClusterResult::default();
        assert!(r.is_empty());
        assert_eq!(r.cluster_sizes(3), vec![0, 0, 0]);
    }

    #[test]
    fn csv_export_has_optional_confidence() {
        let r = ClusterResult {
            assignments: vec![1, 0],
            confidences: vec![0.75, 0.5],
        };
        let mut buf = Vec::new();
        r.write_csv(&mut buf, true).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "sample,cluster,confidence\n0,1,0.75\n1,0,0.5\n"
        );
        let mut buf = Vec::new();
        r.write_csv(&mut buf, false).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "sample,cluster\n0,1\n1,0\n");
    }
}
