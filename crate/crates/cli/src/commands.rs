//! The verbs of the command-line tool.

use std::fs;
use std::io::Write;
use std::path::Path;

use maxent_cluster::clustering::assign_batch;
use maxent_cluster::data::Dataset;
use maxent_cluster::evaluation::{
    best_purity, kmeans_rows, published_purity, purity, run_grid, sweep_hidden_nodes, tabulate,
    write_results_csv, ResultRow,
};
use maxent_cluster::gradcheck::gradcheck;
use maxent_cluster::model::ModelFile;
use maxent_cluster::network::Network;
use maxent_cluster::training::{train, TrainReport};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::config::RunConfig;
use crate::error::{CliError, CliResult, Kind};
use crate::output::{write_atomic, OutputSet};

fn say(out: &mut dyn Write, line: String) -> CliResult<()> {
    writeln!(out, "{line}").map_err(|e| CliError::io(format!("cannot write to stdout: {e}")))
}

fn labels_of(data: &Dataset) -> CliResult<&[usize]> {
    data.labels()
        .ok_or_else(|| CliError::data("the dataset has no label column"))
}

/// Features as the network sees them: scaled when normalization is configured.
fn prepared(cfg: &RunConfig, data: &Dataset) -> CliResult<Dataset> {
    match cfg.fit_scaling(data) {
        Some(s) => Ok(data.scaled_with(&s)?),
        None => Ok(data.clone()),
    }
}

/// One row per epoch: `epoch,objective,output_entropy,hidden_entropy_0,...`.
pub fn report_csv(report: &TrainReport) -> CliResult<Vec<u8>> {
    let hidden = report
        .breakdown_history
        .first()
        .map_or(0, |b| b.hidden_entropies.len());
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header = vec!["epoch".to_string(), "objective".into(), "output_entropy".into()];
    header.extend((0..hidden).map(|l| format!("hidden_entropy_{l}")));
    let csv_err = |e: csv::Error| CliError::io(format!("cannot encode report: {e}"));
    w.write_record(&header).map_err(csv_err)?;
    for (e, b) in report.breakdown_history.iter().enumerate() {
        let mut rec = vec![(e + 1).to_string(), b.total.to_string(), b.output_entropy.to_string()];
        rec.extend(b.hidden_entropies.iter().map(f64::to_string));
        w.write_record(&rec).map_err(csv_err)?;
    }
    w.into_inner()
        .map_err(|e| CliError::io(format!("cannot encode report: {e}")))
}

fn results_csv(rows: &[ResultRow]) -> CliResult<Vec<u8>> {
    let mut buf = Vec::new();
    write_results_csv(rows, &mut buf)?;
    Ok(buf)
}

pub fn cmd_train(cfg: &RunConfig, out: &mut dyn Write) -> CliResult<()> {
    let loaded = cfg.load_data(None)?;
    let scaling = cfg.fit_scaling(&loaded.data);
    let data = match &scaling {
        Some(s) => loaded.data.scaled_with(s)?,
        None => loaded.data.clone(),
    };
    let mut net = Network::init(cfg.network_config(data.dim(), data.num_classes())?)?;
    let report = train(&mut net, &data, &cfg.training)?;

    let model = ModelFile {
        network: net,
        scaling,
    };
    let mut files = OutputSet::new();
    files.stage(&cfg.output_path(&cfg.output.model), model.to_text().as_bytes())?;
    files.stage(&cfg.output_path(&cfg.output.report), &report_csv(&report)?)?;
    files.commit()?;

    say(
        out,
        format!(
            "train dataset={} epochs={} initial_objective={} final_objective={} converged={}",
            loaded.name, report.epochs_run, report.initial_objective, report.final_objective, report.converged
        ),
    )?;
    if !report.converged {
        return Err(CliError::new(
            Kind::NotConverged,
            format!(
                "objective still moving by >= {} after {} epochs; outputs written",
                cfg.training.tolerance, report.epochs_run
            ),
        ));
    }
    Ok(())
}

pub fn cmd_cluster(
    cfg: &RunConfig,
    model_path: Option<&Path>,
    data_path: Option<&Path>,
    out_path: Option<&Path>,
    out: &mut dyn Write,
) -> CliResult<()> {
    let model_path = model_path
        .map(Path::to_path_buf)
        .unwrap_or_else(|| cfg.output_path(&cfg.output.model));
    let text = fs::read_to_string(&model_path)
        .map_err(|e| CliError::io(format!("cannot read model {}: {e}", model_path.display())))?;
    let model = ModelFile::from_text(&text)
        .map_err(|e| CliError::data(format!("{}: {e}", model_path.display())))?;
    let loaded = cfg.load_data(data_path)?;
    let expected = model.network.config().input_dim;
    if loaded.data.dim() != expected {
        return Err(CliError::data(format!(
            "data has {} feature columns but the model expects {expected}",
            loaded.data.dim()
        )));
    }
    let data = match &model.scaling {
        Some(s) => loaded.data.scaled_with(s)?,
        None => loaded.data,
    };
    let result = assign_batch(&model.network, &data)?;
    let mut buf = Vec::new();
    result.write_csv(&mut buf, cfg.output.confidence)?;
    let target = out_path
        .map(Path::to_path_buf)
        .unwrap_or_else(|| cfg.output_path(&cfg.output.assignments));
    write_atomic(&target, &buf)?;
    let sizes = result.cluster_sizes(model.network.config().cluster_count);
    say(
        out,
        format!("cluster samples={} cluster_sizes={sizes:?}", result.len()),
    )
}

/// Reads the `cluster` column of an assignments file.
pub fn read_assignments(path: &Path) -> CliResult<Vec<usize>> {
    let mut reader = csv::Reader::from_path(path)
        .map_err(|e| CliError::io(format!("cannot read assignments {}: {e}", path.display())))?;
    let headers = reader
        .headers()
        .map_err(|e| CliError::data(format!("{}: {e}", path.display())))?
        .clone();
    let col = headers
        .iter()
        .position(|h| h == "cluster")
        .ok_or_else(|| CliError::data(format!("{}: no `cluster` column", path.display())))?;
    let mut assignments = Vec::new();
    for (i, rec) in reader.records().enumerate() {
        let rec = rec.map_err(|e| CliError::data(format!("{}: {e}", path.display())))?;
        let cell = rec.get(col).unwrap_or("");
        let k = cell.trim().parse().map_err(|_| {
            CliError::data(format!("{}:{}: bad cluster index `{cell}`", path.display(), i + 2))
        })?;
        assignments.push(k);
    }
    Ok(assignments)
}

pub fn cmd_eval(
    cfg: &RunConfig,
    assignments_path: Option<&Path>,
    compare: Option<&str>,
    shuffled_control: Option<u64>,
    out: &mut dyn Write,
) -> CliResult<()> {
    let path = assignments_path
        .map(Path::to_path_buf)
        .unwrap_or_else(|| cfg.output_path(&cfg.output.assignments));
    let assignments = read_assignments(&path)?;
    let loaded = cfg.load_data(None)?;
    let labels = labels_of(&loaded.data)?;
    if assignments.len() != labels.len() {
        return Err(CliError::data(format!(
            "{} assignments but {} labelled samples",
            assignments.len(),
            labels.len()
        )));
    }
    let table = tabulate(&assignments, labels)?;
    let p = purity(&table)?;
    let mut buf = Vec::new();
    table.write_csv(&mut buf)?;
    write_atomic(&cfg.output_path(&cfg.output.contingency), &buf)?;
    say(out, format!("purity={p:.4}"))?;

    if let Some(name) = compare {
        let r = published_purity(name)
            .ok_or_else(|| CliError::config(format!("no published purity figures for `{name}`")))?;
        say(
            out,
            format!(
                "reference dataset={} kmeans={:.2} density={:.2} hierarchical={:.2} em={:.2} entropy_network={:.2} this_run={p:.4}",
                r.dataset, r.kmeans, r.density, r.hierarchical, r.em, r.entropy_network
            ),
        )?;
    }
    if let Some(seed) = shuffled_control {
        let mut shuffled = labels.to_vec();
        shuffled.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
        let control = purity(&tabulate(&assignments, &shuffled)?)?;
        let classes = loaded.data.num_classes().unwrap_or(0);
        let mut counts = vec![0usize; classes];
        labels.iter().for_each(|&l| counts[l] += 1);
        let prior = counts.iter().copied().max().unwrap_or(0) as f64 / labels.len() as f64;
        say(
            out,
            format!("shuffled_control seed={seed} purity={control:.4} max_class_prior={prior:.4}"),
        )?;
    }
    Ok(())
}

pub fn cmd_sweep(cfg: &RunConfig, sizes: Option<&[usize]>, out: &mut dyn Write) -> CliResult<()> {
    let sizes = sizes.unwrap_or(&cfg.sweep.sizes);
    if let Some(&w) = sizes.iter().find(|&&w| w < 2) {
        return Err(CliError::config(format!("sweep size {w} is below the minimum width 2")));
    }
    let loaded = cfg.load_data(None)?;
    let data = prepared(cfg, &loaded.data)?;
    labels_of(&data)?;
    let net = cfg.network_config(data.dim(), data.num_classes())?;
    let report = sweep_hidden_nodes(&data, sizes, &net, &cfg.training)?;
    let rows = report.to_result_rows(&loaded.name);
    write_atomic(&cfg.output_path(&cfg.output.sweep), &results_csv(&rows)?)?;
    for r in &rows {
        say(
            out,
            format!(
                "sweep hidden={} purity={} final_objective={} status={}",
                r.hidden_size.unwrap_or(0),
                r.purity.map_or("NA".into(), |p| format!("{p:.4}")),
                r.final_objective.map_or("NA".into(), |j| j.to_string()),
                r.status
            ),
        )?;
    }
    Ok(())
}

pub fn cmd_gradcheck(cfg: &RunConfig, out: &mut dyn Write) -> CliResult<()> {
    let g = &cfg.gradcheck;
    let report = gradcheck(g).map_err(|e| match e {
        maxent_cluster::Error::Config { field, reason } => {
            CliError::config(format!("`gradcheck.{field}`: {reason}"))
        }
        other => other.into(),
    })?;
    say(
        out,
        format!(
            "gradcheck trials={} components={} max_relative_error={:e} tolerance={:e} passed={}",
            report.trials, report.components, report.max_relative_error, g.tolerance, report.passed
        ),
    )?;
    if !report.passed {
        let detail = report.worst.map_or(String::new(), |w| {
            format!(
                " (trial {} layer {} weight {}: analytic {:e}, numeric {:e})",
                w.trial, w.layer, w.index, w.analytic, w.numeric
            )
        });
        return Err(CliError::new(
            Kind::GradcheckFailed,
            format!(
                "max relative error {:e} exceeds {:e}{detail}",
                report.max_relative_error, g.tolerance
            ),
        ));
    }
    Ok(())
}

pub fn cmd_compare_table1(cfg: &RunConfig, out: &mut dyn Write) -> CliResult<()> {
    let loaded = cfg.load_data(None)?;
    let data = prepared(cfg, &loaded.data)?;
    let classes = data
        .num_classes()
        .ok_or_else(|| CliError::data("the dataset has no label column"))?;
    let net = cfg.network_config(data.dim(), Some(classes))?;
    let mut rows = run_grid(&loaded.name, &data, &cfg.grid, &net, &cfg.training);
    rows.extend(kmeans_rows(
        &loaded.name,
        &data,
        classes,
        &cfg.grid.seeds,
        cfg.grid.kmeans_max_iters,
    ));
    write_atomic(&cfg.output_path(&cfg.output.grid), &results_csv(&rows)?)?;

    let ours = best_purity(&rows, "maxent-ffnn");
    let kmeans = best_purity(&rows, "kmeans");
    let fmt = |r: Option<&ResultRow>| r.and_then(|r| r.purity).map_or("NA".into(), |p| format!("{p:.4}"));
    say(
        out,
        format!(
            "grid dataset={} runs={} best_ours={} best_kmeans={}",
            loaded.name,
            cfg.grid.len(),
            fmt(ours),
            fmt(kmeans)
        ),
    )?;
    if let Some(r) = ours {
        say(
            out,
            format!(
                "best_setting hidden={} lambda={} alpha={} seed={}",
                r.hidden_size.unwrap_or(0),
                r.lambda.unwrap_or(f64::NAN),
                r.alpha.unwrap_or(f64::NAN),
                r.seed
            ),
        )?;
    }
    if let Some(r) = published_purity(&loaded.name) {
        say(
            out,
            format!(
                "published dataset={} kmeans={:.2} density={:.2} hierarchical={:.2} em={:.2} entropy_network={:.2}",
                r.dataset, r.kmeans, r.density, r.hierarchical, r.em, r.entropy_network
            ),
        )?;
    }
    let verdict = match (ours.and_then(|r| r.purity), kmeans.and_then(|r| r.purity)) {
        (Some(a), Some(b)) if a > b => "ours-exceeds-kmeans",
        (Some(_), Some(_)) => "shortfall",
        _ => "incomplete",
    };
    say(out, format!("verdict={verdict}"))
}

pub fn cmd_print_config(out: &mut dyn Write) -> CliResult<()> {
    say(out, RunConfig::default().to_toml().trim_end().to_string())
}
