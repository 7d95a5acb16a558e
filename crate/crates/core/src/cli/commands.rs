//! Implementations of the `train`, `predict`, `eval` and `gen` commands.

use std::fmt::Write as _;
use std::path::Path;

use nalgebra::DMatrix;

use crate::classification::{evaluate, predict};
use crate::data::{generate_synthetic, load_labels, load_matrix, save_labels, save_matrix, write_atomic};
use crate::data::{DataMatrix, LabeledDataset, MatrixFormat};
use crate::error::{Error, Result};
use crate::learning::{train_run, TrainedModel};

use super::config::RunConfig;

fn load_features(path: &Path, samples_as_rows: bool) -> Result<DataMatrix> {
    let m = load_matrix(path, MatrixFormat::from_path(path))?;
    if samples_as_rows {
        DataMatrix::samples(m.matrix().transpose())
    } else {
        Ok(m)
    }
}

fn save_features(m: &DMatrix<f64>, path: &Path, samples_as_rows: bool) -> Result<()> {
    let stored = if samples_as_rows { m.transpose() } else { m.clone() };
    save_matrix(&DataMatrix::samples(stored)?, path, MatrixFormat::from_path(path))
}

/// Loads features and labels. Without an explicit mode, data is multi-label
/// when any sample carries other than exactly one label.
fn load_dataset(
    features: &Path,
    labels: &Path,
    config: &RunConfig,
    classes: Option<usize>,
) -> Result<LabeledDataset> {
    let y = load_features(features, config.samples_as_rows)?;
    let sets = load_labels(labels)?;
    if sets.len() != y.ncols() {
        return Err(Error::Dimension(format!(
            "{} has {} label lines, {} has {} samples",
            labels.display(),
            sets.len(),
            features.display(),
            y.ncols()
        )));
    }
    let max = sets.iter().flatten().copied().max();
    let q = match (classes.or(config.classes), max) {
        (Some(q), Some(m)) if m >= q => {
            return Err(Error::InvalidArgument(format!(
                "{}: class index {m} out of range for {q} classes",
                labels.display()
            )))
        }
        (Some(q), _) => q,
        (None, Some(m)) => m + 1,
        (None, None) => return Err(Error::InvalidArgument(format!("{}: no labels", labels.display()))),
    };
    let multi = config.multi_label.unwrap_or_else(|| sets.iter().any(|s| s.len() != 1));
    LabeledDataset::from_label_sets(y, &sets, q, multi)
}

/// Fails early when an output's directory does not exist.
fn check_output(key: &str, path: &Path) -> Result<()> {
    match path.parent() {
        Some(dir) if !dir.as_os_str().is_empty() && !dir.is_dir() => Err(Error::Config(format!(
            "`{key}`: directory {} does not exist",
            dir.display()
        ))),
        _ => Ok(()),
    }
}

fn check_input(key: &str, path: &Path) -> Result<()> {
    if path.is_file() {
        Ok(())
    } else {
        Err(Error::io(
            path,
            std::io::Error::new(std::io::ErrorKind::NotFound, format!("`{key}` file not found")),
        ))
    }
}

pub fn cmd_train(config: &RunConfig) -> Result<String> {
    let features = config.require("features", &config.features)?;
    let labels = config.require("labels", &config.labels)?;
    let model_path = config.require("model", &config.model)?;
    check_input("features", features)?;
    check_input("labels", labels)?;
    check_output("model", model_path)?;
    for (key, p) in [("metrics", &config.metrics), ("dictionary", &config.dictionary)] {
        if let Some(p) = p {
            check_output(key, p)?;
        }
    }
    let ds = load_dataset(features, labels, config, None)?;
    let run = train_run(&ds, &config.train_config())?;
    let model = &run.model;
    model.save(model_path)?;
    if let Some(p) = &config.metrics {
        write_atomic(p, model.diagnostics.to_csv().as_bytes())?;
    }
    if let Some(p) = &config.dictionary {
        save_matrix(&DataMatrix::samples(model.dictionary.clone())?, p, MatrixFormat::from_path(p))?;
    }
    let obj = model.diagnostics.objectives();
    Ok(format!(
        "trained {} on {} samples: K={}, objective {:.6} -> {:.6}",
        model.variant,
        ds.num_samples(),
        model.num_atoms(),
        obj.first().copied().unwrap_or(f64::NAN),
        obj.last().copied().unwrap_or(f64::NAN)
    ))
}

fn load_model(config: &RunConfig) -> Result<TrainedModel> {
    let path = config.require("model", &config.model)?;
    check_input("model", path)?;
    TrainedModel::load(path)
}

pub fn cmd_predict(config: &RunConfig) -> Result<String> {
    let model = load_model(config)?;
    let features = config.require("test_features", &config.test_features)?;
    check_input("test_features", features)?;
    if let Some(p) = &config.predictions {
        check_output("predictions", p)?;
    }
    let y = load_features(features, config.samples_as_rows)?;
    let pred = predict(&model, y.matrix())?;
    match &config.predictions {
        Some(p) => {
            pred.save_csv(p, model.multi_label)?;
            Ok(format!("wrote {} predictions to {}", pred.len(), p.display()))
        }
        None => Ok(pred.to_csv(model.multi_label).trim_end().to_string()),
    }
}

pub fn cmd_eval(config: &RunConfig) -> Result<String> {
    let model = load_model(config)?;
    let features = config.require("test_features", &config.test_features)?;
    let labels = config.require("test_labels", &config.test_labels)?;
    check_input("test_features", features)?;
    check_input("test_labels", labels)?;
    if let Some(p) = &config.report {
        check_output("report", p)?;
    }
    let mut ds = load_dataset(features, labels, config, Some(model.num_classes()))?;
    if ds.is_multi_label() != model.multi_label {
        let auto_single = config.multi_label.is_none() && !ds.is_multi_label();
        if auto_single && model.multi_label {
            // one label per sample is valid multi-label data
            ds = LabeledDataset::new(ds.y().clone(), ds.h().clone(), true)?;
        } else {
            let mode = |m: bool| if m { "multi-label" } else { "single-label" };
            return Err(Error::ModeMismatch(format!(
                "model is {}, {} is {}",
                mode(model.multi_label),
                labels.display(),
                mode(ds.is_multi_label())
            )));
        }
    }
    let pred = predict(&model, ds.y().matrix())?;
    let value = evaluate(&pred, &ds)?;
    let metric = if ds.is_multi_label() { "average_precision" } else { "accuracy" };
    if let Some(p) = &config.report {
        let mut text = String::from("metric,value\n");
        let _ = writeln!(text, "{metric},{value:.2}");
        write_atomic(p, text.as_bytes())?;
    }
    Ok(format!("{value:.2}"))
}

pub fn cmd_gen(config: &RunConfig) -> Result<String> {
    let g = &config.gen;
    let features = config.require("features", &config.features)?;
    let labels = config.require("labels", &config.labels)?;
    let mut outputs = vec![("features", features), ("labels", labels)];
    let test = if g.test_samples > 0 {
        let tf = config.require("test_features", &config.test_features)?;
        let tl = config.require("test_labels", &config.test_labels)?;
        outputs.push(("test_features", tf));
        outputs.push(("test_labels", tl));
        Some((tf, tl))
    } else {
        None
    };
    if let Some(p) = &config.dictionary {
        outputs.push(("dictionary", p));
    }
    for (key, p) in &outputs {
        check_output(key, p)?;
    }
    if g.classes == 0 || g.samples % g.classes != 0 || g.test_samples % g.classes != 0 {
        return Err(Error::InvalidArgument(format!(
            "gen_samples ({}) and gen_test_samples ({}) must be multiples of gen_classes ({})",
            g.samples, g.test_samples, g.classes
        )));
    }
    let total = g.samples + g.test_samples;
    let data = generate_synthetic(g.classes, g.dim, total, config.hyper.sparsity, g.noise_sigma, config.hyper.seed)?;
    let y = data.dataset.y().matrix();
    let sets = data.dataset.label_sets();
    save_features(&y.columns(0, g.samples).into_owned(), features, config.samples_as_rows)?;
    save_labels(labels, &sets[..g.samples])?;
    if let Some((tf, tl)) = test {
        save_features(&y.columns(g.samples, g.test_samples).into_owned(), tf, config.samples_as_rows)?;
        save_labels(tl, &sets[g.samples..])?;
    }
    if let Some(p) = &config.dictionary {
        save_matrix(&data.dictionary, p, MatrixFormat::from_path(p))?;
    }
    Ok(format!(
        "generated {} training and {} test samples ({} classes, {} features)",
        g.samples, g.test_samples, g.classes, g.dim
    ))
}
