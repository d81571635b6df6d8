//! Plain-text model files.
//!
//! Layout (version 1), one item per line, fields separated by single spaces:
//!
//! ```text
//! maxent-cluster-model 1
//! input_dim <usize>
//! hidden_sizes [<usize> ...]
//! cluster_count <usize>
//! activation logistic
//! include_bias <true|false>
//! init_scale <f64>
//! seed <u64>
//! scaling none                    | scaling minmax <d>
//!                                 | min <d values>
//!                                 | max <d values>
//! layer <index> <rows> <cols>     (repeated for every layer, output layer last)
//! <cols values>                   (one line per row)
//! end
//! ```
//!
//! Floats are written in Rust's shortest round-trip notation, so a save/load cycle
//! reproduces every weight bit for bit.

use std::fmt::Write as _;
use std::str::FromStr;

use crate::data::MinMaxScaling;
use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::network::{Activation, Network, NetworkConfig};

pub const MAGIC: &str = "maxent-cluster-model";
pub const FORMAT_VERSION: u32 = 1;

/// A trained network together with the feature scaling it was trained under.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelFile {
    pub network: Network,
    pub scaling: Option<MinMaxScaling>,
}

fn join<T: ToString>(values: &[T]) -> String {
    values
        .iter()
        .map(ToString::to_string)
        .collect::<Vec<_>>()
        .join(" ")
}

impl ModelFile {
    pub fn to_text(&self) -> String {
        let cfg = self.network.config();
        let mut s = String::new();
        let _ = writeln!(s, "{MAGIC} {FORMAT_VERSION}");
        let _ = writeln!(s, "input_dim {}", cfg.input_dim);
        if cfg.hidden_sizes.is_empty() {
            s.push_str("hidden_sizes\n");
        } else {
            let _ = writeln!(s, "hidden_sizes {}", join(&cfg.hidden_sizes));
        }
        let _ = writeln!(s, "cluster_count {}", cfg.cluster_count);
        let _ = writeln!(s, "activation {}", cfg.activation.name());
        let _ = writeln!(s, "include_bias {}", cfg.include_bias);
        let _ = writeln!(s, "init_scale {}", cfg.init_scale);
        let _ = writeln!(s, "seed {}", cfg.seed);
        match &self.scaling {
            None => s.push_str("scaling none\n"),
            Some(sc) => {
                let _ = writeln!(s, "scaling minmax {}", sc.dim());
                let _ = writeln!(s, "min {}", join(&sc.mins));
                let _ = writeln!(s, "max {}", join(&sc.maxs));
            }
        }
        for (l, w) in self.network.weights().iter().enumerate() {
            let _ = writeln!(s, "layer {l} {} {}", w.rows(), w.cols());
            for row in w.iter_rows() {
                let _ = writeln!(s, "{}", join(row));
            }
        }
        s.push_str("end\n");
        s
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = Lines::new(text);

        let (no, header) = lines.next_line()?;
        let mut parts = header.split(' ');
        if parts.next() != Some(MAGIC) {
            return Err(model_err(no, format!("expected `{MAGIC}` header")));
        }
        let version: u32 = parse_value(no, parts.next().unwrap_or(""))?;
        if version != FORMAT_VERSION {
            return Err(model_err(no, format!("unsupported format version {version}")));
        }

        let input_dim = lines.scalar("input_dim")?;
        let hidden_sizes = lines.list("hidden_sizes")?;
        let cluster_count = lines.scalar("cluster_count")?;
        let (no, act) = lines.keyed("activation")?;
        let activation = match act {
            "logistic" => Activation::Logistic,
            other => return Err(model_err(no, format!("unknown activation `{other}`"))),
        };
        let include_bias = lines.scalar("include_bias")?;
        let init_scale = lines.scalar("init_scale")?;
        let seed = lines.scalar("seed")?;
        let config = NetworkConfig {
            input_dim,
            hidden_sizes,
            cluster_count,
            activation,
            include_bias,
            init_scale,
            seed,
        };
        config
            .validate()
            .map_err(|e| model_err(lines.line_no, e.to_string()))?;

        let (no, scaling_kind) = lines.keyed("scaling")?;
        let scaling = match scaling_kind.split(' ').collect::<Vec<_>>().as_slice() {
            ["none"] => None,
            ["minmax", d] => {
                let d: usize = parse_value(no, d)?;
                let mins: Vec<f64> = lines.list("min")?;
                let maxs: Vec<f64> = lines.list("max")?;
                if mins.len() != d || maxs.len() != d {
                    return Err(model_err(lines.line_no, format!("scaling expects {d} values")));
                }
                if d != input_dim {
                    return Err(model_err(
                        no,
                        format!("scaling has {d} columns, network expects {input_dim}"),
                    ));
                }
                Some(MinMaxScaling { mins, maxs })
            }
            _ => return Err(model_err(no, format!("unknown scaling `{scaling_kind}`"))),
        };

        let mut weights = Vec::new();
        for (l, (rows, cols)) in config.weight_shapes().into_iter().enumerate() {
            let (no, spec) = lines.keyed("layer")?;
            let dims: Vec<usize> = spec
                .split(' ')
                .map(|t| parse_value(no, t))
                .collect::<Result<_>>()?;
            if dims != [l, rows, cols] {
                return Err(model_err(
                    no,
                    format!("expected `layer {l} {rows} {cols}`, found `layer {spec}`"),
                ));
            }
            let mut data = Vec::with_capacity(rows * cols);
            for _ in 0..rows {
                let (no, line) = lines.next_line()?;
                let row: Vec<f64> = line
                    .split(' ')
                    .map(|t| parse_value(no, t))
                    .collect::<Result<_>>()?;
                if row.len() != cols {
                    return Err(model_err(no, format!("expected {cols} weights, found {}", row.len())));
                }
                if row.iter().any(|v| !v.is_finite()) {
                    return Err(model_err(no, "non-finite weight"));
                }
                data.extend(row);
            }
            weights.push(Matrix::from_vec(rows, cols, data));
        }
        let (no, tail) = lines.next_line()?;
        if tail != "end" {
            return Err(model_err(no, format!("expected `end`, found `{tail}`")));
        }
        if let Ok((no, extra)) = lines.next_line() {
            return Err(model_err(no, format!("trailing content `{extra}`")));
        }

        let network = Network::from_weights(config, weights)
            .map_err(|e| model_err(lines.line_no, e.to_string()))?;
        Ok(ModelFile { network, scaling })
    }
}

fn model_err(line: usize, reason: impl Into<String>) -> Error {
    Error::Model {
        line,
        reason: reason.into(),
    }
}

fn parse_value<T: FromStr>(line: usize, token: &str) -> Result<T> {
    token
        .parse()
        .map_err(|_| model_err(line, format!("cannot parse `{token}`")))
}

struct Lines<'a> {
    iter: std::str::Lines<'a>,
    line_no: usize,
}

impl<'a> Lines<'a> {
    fn new(text: &'a str) -> Self {
        Lines {
            iter: text.lines(),
            line_no: 0,
        }
    }

    fn next_line(&mut self) -> Result<(usize, &'a str)> {
        self.line_no += 1;
        self.iter
            .next()
            .map(|l| (self.line_no, l.trim_end_matches('\r')))
            .ok_or_else(|| model_err(self.line_no, "unexpected end of file"))
    }

    /// Reads `key rest` and returns `rest` (possibly empty).
    fn keyed(&mut self, key: &str) -> Result<(usize, &'a str)> {
        let (no, line) = self.next_line()?;
        match line.split_once(' ') {
            Some((k, rest)) if k == key => Ok((no, rest)),
            None if line == key => Ok((no, "")),
            _ => Err(model_err(no, format!("expected `{key}`, found `{line}`"))),
        }
    }

    fn scalar<T: FromStr>(&mut self, key: &str) -> Result<T> {
        let (no, rest) = self.keyed(key)?;
        parse_value(no, rest)
    }

    fn list<T: FromStr>(&mut self, key: &str) -> Result<Vec<T>> {
        let (no, rest) = self.keyed(key)?;
        if rest.is_empty() {
            return Ok(Vec::new());
        }
        rest.split(' ').map(|t| parse_value(no, t)).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> ModelFile {
        let net = Network::init(NetworkConfig::new(3, vec![4, 2], 2).with_seed(13)).unwrap();
        ModelFile {
            network: net,
            scaling: Some(MinMaxScaling {
                mins: vec![0.0, -1.5, 2.0],
                maxs: vec![1.0, 1.5, 2.0],
            }),
        }
    }

    #[test]
    fn round_trip_is_exact() {
        let m = sample();
        let text = m.to_text();
        assert_eq!(ModelFile::from_text(&text).unwrap(), m);
        assert!(text.starts_with("maxent-cluster-model 1\ninput_dim 3\nhidden_sizes 4 2\n"));
    }

    #[test]
    fn round_trip_without_hidden_layers_or_scaling() {
        let net = Network::init(NetworkConfig::new(2, vec![], 3).with_bias(false)).unwrap();
        let m = ModelFile {
            network: net,
            scaling: None,
        };
        let text = m.to_text();
        assert!(text.contains("\nhidden_sizes\n"));
        assert_eq!(ModelFile::from_text(&text).unwrap(), m);
    }

    #[test]
    fn corrupt_files_are_rejected_with_line_numbers() {
        let text = sample().to_text();
        let cases = [
            (text.replace("maxent-cluster-model 1", "something-else 1"), 1),
            (text.replace("maxent-cluster-model 1", "maxent-cluster-model 9"), 1),
            (text.replace("cluster_count 2", "cluster_count x"), 4),
            (text.replace("activation logistic", "activation relu"), 5),
        ];
        for (bad, line) in cases {
            match ModelFile::from_text(&bad) {
                Err(Error::Model { line: l, .. }) => assert_eq!(l, line, "{bad}"),
                other => panic!("expected model error, got {other:?}"),
            }
        }
        let truncated: String = text.lines().take(14).collect::<Vec<_>>().join("\n");
        assert!(ModelFile::from_text(&truncated).is_err());
        assert!(ModelFile::from_text(&format!("{text}extra\n")).is_err());
        assert!(ModelFile::from_text(&text.replace("end\n", "")).is_err());
    }
}
