//! Tabular datasets: CSV loading with descriptor validation, min-max scaling and
//! synthetic Gaussian blobs.

use std::collections::HashMap;
use std::fs;
use std::io::{Read, Write};
use std::path::Path;
use std::sync::OnceLock;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::Matrix;

/// Per-column affine map onto `[0, 1]`, fitted on training data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MinMaxScaling {
    pub mins: Vec<f64>,
    pub maxs: Vec<f64>,
}

impl MinMaxScaling {
    pub fn fit(features: &Matrix) -> Self {
        let d = features.cols();
        let mut mins = vec![f64::INFINITY; d];
        let mut maxs = vec![f64::NEG_INFINITY; d];
        for row in features.iter_rows() {
            for (j, &v) in row.iter().enumerate() {
                mins[j] = mins[j].min(v);
                maxs[j] = maxs[j].max(v);
            }
        }
        MinMaxScaling { mins, maxs }
    }

    pub fn dim(&self) -> usize {
        self.mins.len()
    }

    /// Constant columns (zero range) map to 0.5.
    pub fn apply_value(&self, column: usize, v: f64) -> f64 {
        let (lo, hi) = (self.mins[column], self.maxs[column]);
        let range = hi - lo;
        if range > 0.0 {
            (v - lo) / range
        } else {
            0.5
        }
    }

    pub fn apply(&self, features: &Matrix) -> Result<Matrix> {
        if features.cols() != self.dim() {
            return Err(Error::Validation(format!(
                "scaling fitted on {} features, data has {}",
                self.dim(),
                features.cols()
            )));
        }
        let mut out = features.clone();
        for r in 0..out.rows() {
            for (j, v) in out.row_mut(r).iter_mut().enumerate() {
                *v = self.apply_value(j, *v);
            }
        }
        Ok(out)
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Provenance {
    pub source: String,
    pub scaling: Option<MinMaxScaling>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    features: Matrix,
    labels: Option<Vec<usize>>,
    class_names: Option<Vec<String>>,
    feature_names: Option<Vec<String>>,
    provenance: Provenance,
}

impl Dataset {
    /// Labels, when given, must already be dense ids `0..k`.
    pub fn new(features: Matrix, labels: Option<Vec<usize>>) -> Result<Self> {
        if features.rows() == 0 {
            return Err(Error::input("dataset has no rows"));
        }
        if features.cols() == 0 {
            return Err(Error::input("dataset has no feature columns"));
        }
        if let Some(pos) = features.as_slice().iter().position(|v| !v.is_finite()) {
            return Err(Error::input(format!(
                "non-finite feature at row {}, column {}",
                pos / features.cols(),
                pos % features.cols()
            )));
        }
        if let Some(l) = &labels {
            if l.len() != features.rows() {
                return Err(Error::input(format!(
                    "{} labels for {} rows",
                    l.len(),
                    features.rows()
                )));
            }
        }
        Ok(Dataset {
            features,
            labels,
            class_names: None,
            feature_names: None,
            provenance: Provenance::default(),
        })
    }

    pub fn with_source(mut self, source: impl Into<String>) -> Self {
        self.provenance.source = source.into();
        self
    }

    pub fn with_feature_names(mut self, names: Vec<String>) -> Self {
        self.feature_names = Some(names);
        self
    }

    pub fn features(&self) -> &Matrix {
        &self.features
    }

    pub fn labels(&self) -> Option<&[usize]> {
        self.labels.as_deref()
    }

    pub fn class_names(&self) -> Option<&[String]> {
        self.class_names.as_deref()
    }

    pub fn feature_names(&self) -> Option<&[String]> {
        self.feature_names.as_deref()
    }

    pub fn provenance(&self) -> &Provenance {
        &self.provenance
    }

    pub fn len(&self) -> usize {
        self.features.rows()
    }

    pub fn is_empty(&self) -> bool {
        self.features.rows() == 0
    }

    pub fn dim(&self) -> usize {
        self.features.cols()
    }

    pub fn num_classes(&self) -> Option<usize> {
        self.labels
            .as_ref()
            .map(|l| l.iter().max().map_or(0, |m| m + 1))
    }

    /// Applies a previously fitted scaling (e.g. one stored with a model).
    pub fn scaled_with(&self, scaling: &MinMaxScaling) -> Result<Dataset> {
        let mut out = self.clone();
        out.features = scaling.apply(&self.features)?;
        out.provenance.scaling = Some(scaling.clone());
        Ok(out)
    }
}

/// Maps every feature column onto `[0, 1]`, recording the fitted parameters.
pub fn normalize_minmax(data: &Dataset) -> Dataset {
    let scaling = MinMaxScaling::fit(&data.features);
    data.scaled_with(&scaling)
        .expect("scaling fitted on the same columns")
}

/// Isotropic Gaussian samples around each center; labels are center indices.
pub fn make_blobs(
    centers: &[Vec<f64>],
    per_center: usize,
    spread: f64,
    seed: u64,
) -> Result<Dataset> {
    if centers.is_empty() {
        return Err(Error::input("make_blobs needs at least one center"));
    }
    if per_center == 0 {
        return Err(Error::input("make_blobs needs per_center >= 1"));
    }
    if !(spread.is_finite() && spread > 0.0) {
        return Err(Error::input(format!("spread must be positive, got {spread}")));
    }
    let d = centers[0].len();
    if d == 0 || centers.iter().any(|c| c.len() != d) {
        return Err(Error::input("centers must share one non-zero dimension"));
    }
    let normal = Normal::new(0.0, spread).map_err(|e| Error::input(e.to_string()))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut data = Vec::with_capacity(centers.len() * per_center * d);
    let mut labels = Vec::with_capacity(centers.len() * per_center);
    for (k, c) in centers.iter().enumerate() {
        for _ in 0..per_center {
            data.extend(c.iter().map(|m| m + normal.sample(&mut rng)));
            labels.push(k);
        }
    }
    let features = Matrix::from_vec(labels.len(), d, data);
    Ok(Dataset::new(features, Some(labels))?.with_source(format!("blobs(seed={seed})")))
}

/// How to read a delimited text file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CsvOptions {
    pub delimiter: char,
    pub header: bool,
    /// Lines dropped before CSV parsing starts.
    pub skip_rows: usize,
    /// Column holding the class; negative counts from the end. `None` for unlabeled data.
    pub label_column: Option<i64>,
    pub ignore_columns: Vec<usize>,
}

impl Default for CsvOptions {
    fn default() -> Self {
        CsvOptions {
            delimiter: ',',
            header: false,
            skip_rows: 0,
            label_column: Some(-1),
            ignore_columns: Vec::new(),
        }
    }
}

impl CsvOptions {
    fn delimiter_byte(&self) -> Result<u8> {
        u8::try_from(self.delimiter)
            .ok()
            .filter(u8::is_ascii)
            .ok_or_else(|| Error::config("delimiter", "must be a single ASCII character"))
    }

    fn resolve_label(&self, width: usize) -> Option<std::result::Result<usize, String>> {
        self.label_column.map(|c| {
            let idx = if c < 0 { width as i64 + c } else { c };
            if idx < 0 || idx >= width as i64 {
                Err(format!("label column {c} out of range for {width} columns"))
            } else {
                Ok(idx as usize)
            }
        })
    }
}

/// Expected layout and shape of a named benchmark file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetDescriptor {
    pub name: String,
    pub file: String,
    pub delimiter: char,
    pub header: bool,
    pub skip_rows: usize,
    pub label_column: i64,
    pub ignore_columns: Vec<usize>,
    pub rows: usize,
    pub features: usize,
    pub classes: usize,
    pub published_rows: usize,
    pub published_attributes: usize,
    pub published_classes: usize,
    pub note: String,
}

impl DatasetDescriptor {
    pub fn csv_options(&self) -> CsvOptions {
        CsvOptions {
            delimiter: self.delimiter,
            header: self.header,
            skip_rows: self.skip_rows,
            label_column: Some(self.label_column),
            ignore_columns: self.ignore_columns.clone(),
        }
    }

    pub fn validate(&self, data: &Dataset) -> Result<()> {
        let mut problems = Vec::new();
        if data.len() != self.rows {
            problems.push(format!("rows: expected {}, found {}", self.rows, data.len()));
        }
        if data.dim() != self.features {
            problems.push(format!(
                "feature columns: expected {}, found {}",
                self.features,
                data.dim()
            ));
        }
        let found = data.num_classes().unwrap_or(0);
        if found != self.classes {
            problems.push(format!("classes: expected {}, found {found}", self.classes));
        }
        if problems.is_empty() {
            Ok(())
        } else {
            Err(Error::Validation(format!(
                "{}: {}",
                self.name,
                problems.join("; ")
            )))
        }
    }

    /// Human-readable differences between the on-disk shape and the published one.
    pub fn published_divergence(&self) -> Vec<String> {
        let mut out = Vec::new();
        if self.rows != self.published_rows {
            out.push(format!("rows {} vs published {}", self.rows, self.published_rows));
        }
        if self.classes != self.published_classes {
            out.push(format!(
                "classes {} vs published {}",
                self.classes, self.published_classes
            ));
        }
        out
    }
}

#[derive(Deserialize)]
struct Manifest {
    dataset: Vec<DatasetDescriptor>,
}

/// The checked-in descriptors for the six UCI benchmark sets.
pub fn manifest() -> &'static [DatasetDescriptor] {
    static MANIFEST: OnceLock<Vec<DatasetDescriptor>> = OnceLock::new();
    MANIFEST.get_or_init(|| {
        let text = include_str!("../data/uci_manifest.toml");
        toml::from_str::<Manifest>(text)
            .expect("bundled manifest parses")
            .dataset
    })
}

pub fn descriptor(name: &str) -> Option<&'static DatasetDescriptor> {
    manifest().iter().find(|d| d.name.eq_ignore_ascii_case(name))
}

pub fn load_csv(path: impl AsRef<Path>, opts: &CsvOptions) -> Result<Dataset> {
    let path = path.as_ref();
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    read_csv(file, opts, path)
}

/// Loads a file and checks it against the descriptor's expected shape.
pub fn load_described(path: impl AsRef<Path>, desc: &DatasetDescriptor) -> Result<Dataset> {
    let data = load_csv(path, &desc.csv_options())?;
    desc.validate(&data)?;
    Ok(data)
}

/// Parses delimited text. `source` is used for provenance and error messages.
pub fn read_csv<R: Read>(mut reader: R, opts: &CsvOptions, source: &Path) -> Result<Dataset> {
    let mut text = String::new();
    reader
        .read_to_string(&mut text)
        .map_err(|e| Error::io(source, e))?;
    let mut body = text.as_str();
    for _ in 0..opts.skip_rows {
        body = body.split_once('\n').map_or("", |(_, rest)| rest);
    }
    let parse_err = |line: u64, reason: String| Error::Parse {
        path: source.to_path_buf(),
        line: line + opts.skip_rows as u64,
        reason,
    };

    let mut rdr = csv::ReaderBuilder::new()
        .delimiter(opts.delimiter_byte()?)
        .has_headers(false)
        .trim(csv::Trim::All)
        .from_reader(body.as_bytes());

    let mut header: Option<Vec<String>> = None;
    let mut width: Option<usize> = None;
    let mut label_idx: Option<usize> = None;
    let mut values = Vec::new();
    let mut raw_labels: Vec<String> = Vec::new();
    let mut rows = 0usize;

    for rec in rdr.records() {
        let rec = rec.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line());
            parse_err(line, e.to_string())
        })?;
        let line = rec.position().map_or(0, |p| p.line());
        if rec.iter().all(str::is_empty) {
            continue;
        }
        if width.is_none() {
            let w = rec.len();
            label_idx = opts
                .resolve_label(w)
                .transpose()
                .map_err(|reason| parse_err(line, reason))?;
            if let Some(&bad) = opts.ignore_columns.iter().find(|&&c| c >= w) {
                return Err(parse_err(
                    line,
                    format!("ignored column {bad} out of range for {w} columns"),
                ));
            }
            width = Some(w);
            if opts.header {
                header = Some(rec.iter().map(str::to_string).collect());
                continue;
            }
        }
        let w = width.expect("width set on first record");
        if rec.len() != w {
            return Err(parse_err(
                line,
                format!("expected {w} fields, found {}", rec.len()),
            ));
        }
        for (j, cell) in rec.iter().enumerate() {
            if Some(j) == label_idx {
                raw_labels.push(cell.to_string());
            } else if !opts.ignore_columns.contains(&j) {
                let v: f64 = cell.parse().map_err(|_| {
                    parse_err(line, format!("column {j}: cannot parse {cell:?} as a number"))
                })?;
                if !v.is_finite() {
                    return Err(parse_err(line, format!("column {j}: non-finite value")));
                }
                values.push(v);
            }
        }
        rows += 1;
    }

    let Some(w) = width else {
        return Err(Error::input(format!("{}: no data rows", source.display())));
    };
    if rows == 0 {
        return Err(Error::input(format!("{}: no data rows", source.display())));
    }
    let kept: Vec<usize> = (0..w)
        .filter(|j| Some(*j) != label_idx && !opts.ignore_columns.contains(j))
        .collect();
    let d = kept.len();
    if d == 0 {
        return Err(Error::input(format!("{}: no feature columns", source.display())));
    }

    let (labels, class_names) = if label_idx.is_some() {
        let (ids, names) = dense_labels(&raw_labels);
        (Some(ids), Some(names))
    } else {
        (None, None)
    };
    let mut data = Dataset::new(Matrix::from_vec(rows, d, values), labels)?
        .with_source(source.display().to_string());
    data.class_names = class_names;
    if let Some(h) = header {
        data.feature_names = Some(kept.iter().map(|&j| h[j].clone()).collect());
    }
    Ok(data)
}

/// Maps arbitrary label strings to dense ids in first-appearance order.
pub fn dense_labels(raw: &[String]) -> (Vec<usize>, Vec<String>) {
    let mut index: HashMap<&str, usize> = HashMap::new();
    let mut names = Vec::new();
    let ids = raw
        .iter()
        .map(|s| {
            *index.entry(s.as_str()).or_insert_with(|| {
                names.push(s.clone());
                names.len() - 1
            })
        })
        .collect();
    (ids, names)
}

/// Writes features (and labels as the last column, when present) in the given dialect.
pub fn write_csv<W: Write>(data: &Dataset, writer: W, delimiter: char, header: bool) -> Result<()> {
    let delim = CsvOptions {
        delimiter,
        ..CsvOptions::default()
    }
    .delimiter_byte()?;
    let mut w = csv::WriterBuilder::new()
        .delimiter(delim)
        .from_writer(writer);
    if header {
        let mut names: Vec<String> = match &data.feature_names {
            Some(n) => n.clone(),
            None => (0..data.dim()).map(|j| format!("x{j}")).collect(),
        };
        if data.labels.is_some() {
            names.push("class".into());
        }
        w.write_record(&names)?;
    }
    for (i, row) in data.features.iter_rows().enumerate() {
        let mut rec: Vec<String> = row.iter().map(f64::to_string).collect();
        if let Some(labels) = &data.labels {
            let l = labels[i];
            rec.push(match &data.class_names {
                Some(names) => names[l].clone(),
                None => l.to_string(),
            });
        }
        w.write_record(&rec)?;
    }
    w.flush().map_err(|e| Error::io("<csv writer>", e))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::path::PathBuf;

    fn parse(text: &str, opts: &CsvOptions) -> Result<Dataset> {
        read_csv(text.as_bytes(), opts, &PathBuf::from("mem.csv"))
    }

    #[test]
    fn minmax_maps_endpoints() {
        let d = Dataset::new(Matrix::from_rows(&[vec![2.0], vec![4.0], vec![6.0]]), None).unwrap();
        let n = normalize_minmax(&d);
        assert_eq!(n.features().as_slice(), &[0.0, 0.5, 1.0]);
        assert!(n.provenance().scaling.is_some());
    }

    #[test]
    fn minmax_constant_column_is_half() {
        let d = Dataset::new(Matrix::from_rows(&[vec![3.0], vec![3.0], vec![3.0]]), None).unwrap();
        assert_eq!(normalize_minmax(&d).features().as_slice(), &[0.5, 0.5, 0.5]);
    }

    #[test]
    fn minmax_is_idempotent() {
        let d = make_blobs(&[vec![0.0, 5.0], vec![3.0, -1.0]], 20, 1.0, 3).unwrap();
        let once = normalize_minmax(&d);
        let twice = normalize_minmax(&once);
        for (a, b) in once.features().as_slice().iter().zip(twice.features().as_slice()) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn blobs_are_deterministic_and_labelled() {
        let a = make_blobs(&[vec![0.0, 0.0], vec![10.0, 10.0]], 5, 0.5, 42).unwrap();
        let b = make_blobs(&[vec![0.0, 0.0], vec![10.0, 10.0]], 5, 0.5, 42).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.labels().unwrap(), &[0, 0, 0, 0, 0, 1, 1, 1, 1, 1]);
        assert_eq!(a.num_classes(), Some(2));
    }

    #[test]
    fn blobs_reject_bad_arguments() {
        assert!(make_blobs(&[vec![0.0]], 0, 1.0, 0).is_err());
        assert!(make_blobs(&[vec![0.0]], 3, 0.0, 0).is_err());
        assert!(make_blobs(&[], 3, 1.0, 0).is_err());
        assert!(make_blobs(&[vec![0.0], vec![1.0, 2.0]], 3, 1.0, 0).is_err());
    }

    #[test]
    fn labels_are_dense_in_first_appearance_order() {
        let d = parse("1,2,b\n3,4,a\n5,6,b\n", &CsvOptions::default()).unwrap();
        assert_eq!(d.labels().unwrap(), &[0, 1, 0]);
        assert_eq!(d.class_names().unwrap(), &["b".to_string(), "a".to_string()]);
        assert_eq!(d.features().as_slice(), &[1.0, 2.0, 3.0, 4.0, 5.0, 6.0]);
    }

    #[test]
    fn one_row_file_is_valid() {
        let d = parse("0.5,0.25,yes\n", &CsvOptions::default()).unwrap();
        assert_eq!(d.len(), 1);
        assert_eq!(d.num_classes(), Some(1));
    }

    #[test]
    fn header_and_ignored_columns() {
        let opts = CsvOptions {
            delimiter: ';',
            header: true,
            label_column: Some(0),
            ignore_columns: vec![1],
            ..CsvOptions::default()
        };
        let d = parse("cls;id;a;b\nx;9;1;2\ny;8;3;4\n", &opts).unwrap();
        assert_eq!(d.dim(), 2);
        assert_eq!(d.feature_names().unwrap(), &["a".to_string(), "b".to_string()]);
        assert_eq!(d.features().as_slice(), &[1.0, 2.0, 3.0, 4.0]);
    }

    #[test]
    fn unlabeled_load() {
        let opts = CsvOptions {
            label_column: None,
            ..CsvOptions::default()
        };
        let d = parse("1,2\n3,4\n", &opts).unwrap();
        assert!(d.labels().is_none());
        assert_eq!(d.dim(), 2);
    }

    #[test]
    fn parse_errors_carry_line_numbers() {
        let err = parse("1,2,a\n3,oops,b\n", &CsvOptions::default()).unwrap_err();
        match err {
            Error::Parse { line, .. } => assert_eq!(line, 2),
            other => panic!("{other:?}"),
        }
        let opts = CsvOptions {
            skip_rows: 2,
            ..CsvOptions::default()
        };
        let err = parse("junk\njunk\n1,2,a\n3,4\n", &opts).unwrap_err();
        match err {
            Error::Parse { line, .. } => assert_eq!(line, 4),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn empty_file_is_rejected() {
        assert!(matches!(parse("", &CsvOptions::default()), Err(Error::Input(_))));
        let opts = CsvOptions {
            header: true,
            ..CsvOptions::default()
        };
        assert!(matches!(parse("a,b,c\n", &opts), Err(Error::Input(_))));
    }

    #[test]
    fn manifest_lists_six_sets() {
        let names: Vec<_> = manifest().iter().map(|d| d.name.as_str()).collect();
        assert_eq!(
            names,
            ["banknote", "glass", "red-wine", "white-wine", "image-segment", "magic"]
        );
        let banknote = descriptor("Banknote").unwrap();
        assert_eq!((banknote.published_rows, banknote.published_attributes), (1372, 5));
        assert_eq!(banknote.features + 1, banknote.published_attributes);
        let glass = descriptor("glass").unwrap();
        assert_eq!((glass.published_rows, glass.published_classes), (214, 6));
        assert!(descriptor("red-wine").unwrap().published_divergence().len() == 1);
        assert!(descriptor("magic").unwrap().published_divergence().is_empty());
    }

    fn described(rows: usize, header: bool) -> DatasetDescriptor {
        DatasetDescriptor {
            name: "toy".into(),
            file: "toy.csv".into(),
            delimiter: ',',
            header,
            skip_rows: 0,
            label_column: -1,
            ignore_columns: vec![],
            rows,
            features: 2,
            classes: 2,
            published_rows: rows,
            published_attributes: 3,
            published_classes: 2,
            note: String::new(),
        }
    }

    #[test]
    fn descriptor_catches_header_mistakes() {
        let with_header = "a,b,class\n1,2,x\n3,4,y\n";
        let without_header = "1,2,x\n3,4,y\n";

        let desc = described(2, true);
        assert!(desc.validate(&parse(with_header, &desc.csv_options()).unwrap()).is_ok());
        // header row read as data: not numeric
        let desc_no = described(2, false);
        assert!(matches!(
            parse(with_header, &desc_no.csv_options()),
            Err(Error::Parse { line: 1, .. })
        ));
        // first data row swallowed as header: one row short, and one class short
        let swallowed = parse(without_header, &desc.csv_options()).unwrap();
        let err = desc.validate(&swallowed).unwrap_err().to_string();
        assert!(err.contains("rows: expected 2, found 1"), "{err}");
    }

    #[test]
    fn descriptor_reports_expected_vs_found() {
        let desc = described(3, false);
        let d = parse("1,2,x\n3,4,y\n", &desc.csv_options()).unwrap();
        let msg = desc.validate(&d).unwrap_err().to_string();
        assert!(msg.contains("expected 3, found 2"), "{msg}");
    }

    #[test]
    fn scaling_applies_to_new_data_with_matching_width() {
        let train = Dataset::new(Matrix::from_rows(&[vec![0.0, 10.0], vec![2.0, 20.0]]), None).unwrap();
        let s = MinMaxScaling::fit(train.features());
        let other = Dataset::new(Matrix::from_rows(&[vec![1.0, 15.0]]), None).unwrap();
        assert_eq!(other.scaled_with(&s).unwrap().features().as_slice(), &[0.5, 0.5]);
        let wrong = Dataset::new(Matrix::from_rows(&[vec![1.0]]), None).unwrap();
        assert!(wrong.scaled_with(&s).is_err());
    }

    #[test]
    fn dataset_rejects_non_finite_values() {
        assert!(Dataset::new(Matrix::from_rows(&[vec![f64::NAN]]), None).is_err());
        assert!(Dataset::new(Matrix::from_rows(&[vec![1.0]]), Some(vec![0, 1])).is_err());
    }
}
