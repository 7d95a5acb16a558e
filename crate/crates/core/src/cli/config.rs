//! `key = value` run configuration.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::data::{Hyperparameters, KernelWidth};
use crate::error::{Error, Result};
use crate::learning::{GraphOptions, TrainConfig, Variant};

/// Outer iterations used by the graph variants when `outer_iters` is not set.
pub const GRAPH_OUTER_ITERS: usize = 15;

/// Where a setting came from, for diagnostics.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Origin {
    File { path: PathBuf, line: usize },
    Flag,
}

impl fmt::Display for Origin {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Origin::File { path, line } => write!(f, "{}:{line}", path.display()),
            Origin::Flag => f.write_str("command line"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Entry {
    pub key: String,
    pub value: String,
    pub origin: Origin,
}

/// Parses config text: one `key = value` per line, `#` starts a comment.
pub fn parse_config_text(text: &str, path: &Path) -> Result<Vec<Entry>> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let origin = Origin::File {
            path: path.to_path_buf(),
            line: i + 1,
        };
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("{origin}: expected `key = value`, got {line:?}")))?;
        let key = k.trim();
        if key.is_empty() {
            return Err(Error::Config(format!("{origin}: empty key")));
        }
        out.push(Entry {
            key: key.to_string(),
            value: v.trim().to_string(),
            origin,
        });
    }
    Ok(out)
}

/// Parses a `--key=value` override.
pub fn parse_flag(flag: &str) -> Result<Entry> {
    let body = flag
        .strip_prefix("--")
        .ok_or_else(|| Error::Config(format!("expected --key=value, got {flag:?}")))?;
    let (k, v) = body
        .split_once('=')
        .ok_or_else(|| Error::Config(format!("expected --key=value, got {flag:?}")))?;
    Ok(Entry {
        key: k.trim().to_string(),
        value: v.trim().to_string(),
        origin: Origin::Flag,
    })
}

/// Synthetic-data generation settings.
#[derive(Debug, Clone, PartialEq)]
pub struct GenOptions {
    pub classes: usize,
    pub dim: usize,
    pub samples: usize,
    pub test_samples: usize,
    pub noise_sigma: f64,
}

impl Default for GenOptions {
    fn default() -> Self {
        Self {
            classes: 5,
            dim: 60,
            samples: 500,
            test_samples: 500,
            noise_sigma: 0.05,
        }
    }
}

/// Every setting a command can use. Paths are resolved against the working directory.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub variant: Variant,
    pub hyper: Hyperparameters,
    pub graph: GraphOptions,
    pub ridge: f64,
    pub features: Option<PathBuf>,
    pub labels: Option<PathBuf>,
    pub test_features: Option<PathBuf>,
    pub test_labels: Option<PathBuf>,
    pub model: Option<PathBuf>,
    pub predictions: Option<PathBuf>,
    pub metrics: Option<PathBuf>,
    pub report: Option<PathBuf>,
    pub dictionary: Option<PathBuf>,
    /// `None` detects the mode from the labels file.
    pub multi_label: Option<bool>,
    pub classes: Option<usize>,
    /// Matrix files store one sample per row instead of one per column.
    pub samples_as_rows: bool,
    pub gen: GenOptions,
    pub threads: Option<usize>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            variant: Variant::SupGraphDl,
            hyper: Hyperparameters::default(),
            graph: GraphOptions::default(),
            ridge: 1.0,
            features: None,
            labels: None,
            test_features: None,
            test_labels: None,
            model: None,
            predictions: None,
            metrics: None,
            report: None,
            dictionary: None,
            multi_label: None,
            classes: None,
            samples_as_rows: false,
            gen: GenOptions::default(),
            threads: None,
        }
    }
}

pub const KEYS: &[&str] = &[
    "variant",
    "atoms",
    "sparsity",
    "alpha",
    "beta",
    "gamma",
    "rho",
    "mu",
    "eta",
    "epsilon",
    "outer_iters",
    "inner_iters",
    "graph_knn",
    "seed",
    "feature_knn",
    "label_masked",
    "laplacian_every",
    "feature_learn_iters",
    "manifold_learn_iters",
    "learn_tol",
    "allow_large_manifold",
    "ridge",
    "features",
    "labels",
    "test_features",
    "test_labels",
    "model",
    "predictions",
    "metrics",
    "report",
    "dictionary",
    "multi_label",
    "classes",
    "samples_as_rows",
    "gen_classes",
    "gen_dim",
    "gen_samples",
    "gen_test_samples",
    "noise_sigma",
    "threads",
];

fn value<T: FromStr>(e: &Entry) -> Result<T> {
    e.value
        .parse()
        .map_err(|_| Error::Config(format!("{}: invalid value {:?} for `{}`", e.origin, e.value, e.key)))
}

fn optional_count(e: &Entry) -> Result<Option<usize>> {
    match e.value.as_str() {
        "none" | "dense" => Ok(None),
        _ => value(e).map(Some),
    }
}

fn path(e: &Entry) -> Result<Option<PathBuf>> {
    if e.value.is_empty() {
        return Err(Error::Config(format!("{}: empty path for `{}`", e.origin, e.key)));
    }
    Ok(Some(PathBuf::from(&e.value)))
}

impl RunConfig {
    /// Applies entries in order; later entries override earlier ones.
    pub fn from_entries(entries: &[Entry]) -> Result<Self> {
        let mut c = RunConfig::default();
        let mut outer_set = false;
        for e in entries {
            let h = &mut c.hyper;
            match e.key.as_str() {
                "variant" => {
                    c.variant = e
                        .value
                        .parse()
                        .map_err(|err: Error| Error::Config(format!("{}: `variant`: {err}", e.origin)))?
                }
                "atoms" => h.atoms = value(e)?,
                "sparsity" => h.sparsity = value(e)?,
                "alpha" => h.alpha = value(e)?,
                "beta" => h.beta = value(e)?,
                "gamma" => h.gamma = value(e)?,
                "rho" => h.rho = value(e)?,
                "mu" => h.mu = value(e)?,
                "eta" => h.eta = value(e)?,
                "epsilon" => {
                    h.epsilon = match e.value.as_str() {
                        "median" => KernelWidth::Median,
                        _ => KernelWidth::Fixed(value(e)?),
                    }
                }
                "outer_iters" => {
                    h.outer_iters = value(e)?;
                    outer_set = true;
                }
                "inner_iters" => h.inner_iters = value(e)?,
                "graph_knn" => h.graph_knn = optional_count(e)?,
                "seed" => h.seed = value(e)?,
                "feature_knn" => c.graph.feature_knn = optional_count(e)?,
                "label_masked" => c.graph.label_masked = value(e)?,
                "laplacian_every" => c.graph.laplacian_every = value(e)?,
                "feature_learn_iters" => c.graph.feature_learn_iters = value(e)?,
                "manifold_learn_iters" => c.graph.manifold_learn_iters = value(e)?,
                "learn_tol" => c.graph.learn_tol = value(e)?,
                "allow_large_manifold" => c.graph.allow_large_manifold = value(e)?,
                "ridge" => c.ridge = value(e)?,
                "features" => c.features = path(e)?,
                "labels" => c.labels = path(e)?,
                "test_features" => c.test_features = path(e)?,
                "test_labels" => c.test_labels = path(e)?,
                "model" => c.model = path(e)?,
                "predictions" => c.predictions = path(e)?,
                "metrics" => c.metrics = path(e)?,
                "report" => c.report = path(e)?,
                "dictionary" => c.dictionary = path(e)?,
                "multi_label" => {
                    c.multi_label = match e.value.as_str() {
                        "auto" => None,
                        _ => Some(value(e)?),
                    }
                }
                "classes" => c.classes = Some(value(e)?),
                "samples_as_rows" => c.samples_as_rows = value(e)?,
                "gen_classes" => c.gen.classes = value(e)?,
                "gen_dim" => c.gen.dim = value(e)?,
                "gen_samples" => c.gen.samples = value(e)?,
                "gen_test_samples" => c.gen.test_samples = value(e)?,
                "noise_sigma" => c.gen.noise_sigma = value(e)?,
                "threads" => {
                    let t: usize = value(e)?;
                    if t == 0 {
                        return Err(Error::Config(format!("{}: `threads` must be at least 1", e.origin)));
                    }
                    c.threads = Some(t);
                }
                other => {
                    return Err(Error::Config(format!("{}: unknown key `{other}`", e.origin)));
                }
            }
        }
        if !outer_set && c.variant.uses_graphs() {
            c.hyper.outer_iters = GRAPH_OUTER_ITERS;
        }
        Ok(c)
    }

    /// Reads an optional config file, then applies `--key=value` overrides.
    pub fn load(path: Option<&Path>, overrides: &[String]) -> Result<Self> {
        let mut entries = match path {
            Some(p) => {
                let text = std::fs::read_to_string(p).map_err(|e| Error::io(p, e))?;
                parse_config_text(&text, p)?
            }
            None => Vec::new(),
        };
        for flag in overrides {
            entries.push(parse_flag(flag)?);
        }
        Self::from_entries(&entries)
    }

    pub fn train_config(&self) -> TrainConfig {
        TrainConfig {
            variant: self.variant,
            hyper: self.hyper.clone(),
            graph: self.graph.clone(),
            ridge: self.ridge,
        }
    }

    /// The path stored under `key`, or an error naming the missing key.
    pub fn require<'a>(&self, key: &str, value: &'a Option<PathBuf>) -> Result<&'a Path> {
        value
            .as_deref()
            .ok_or_else(|| Error::Config(format!("missing required key `{key}`")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn entries(text: &str) -> Vec<Entry> {
        parse_config_text(text, Path::new("run.conf")).unwrap()
    }

    #[test]
    fn parses_comments_and_whitespace() {
        let e = entries("# header\nvariant = lcksvd2  # baseline\n\n  atoms=40\n");
        assert_eq!(e.len(), 2);
        assert_eq!(e[0].key, "variant");
        assert_eq!(e[0].value, "lcksvd2");
        assert_eq!(e[1].origin, Origin::File { path: "run.conf".into(), line: 4 });
        let c = RunConfig::from_entries(&e).unwrap();
        assert_eq!(c.variant, Variant::Lcksvd2);
        assert_eq!(c.hyper.atoms, 40);
        assert_eq!(c.hyper.outer_iters, 30);
    }

    #[test]
    fn unknown_key_names_key_and_line() {
        let err = RunConfig::from_entries(&entries("atoms = 3\nbogus = 1\n")).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("bogus") && msg.contains("run.conf:2"), "{msg}");
    }

    #[test]
    fn bad_values_name_the_key() {
        let msg = RunConfig::from_entries(&entries("gamma = lots\n")).unwrap_err().to_string();
        assert!(msg.contains("gamma"), "{msg}");
        assert!(parse_config_text("novalue\n", Path::new("x")).is_err());
        assert!(RunConfig::from_entries(&entries("threads = 0\n")).is_err());
    }

    #[test]
    fn flags_override_file_values() {
        let mut e = entries("seed = 3\nepsilon = 0.5\n");
        e.push(parse_flag("--seed=9").unwrap());
        e.push(parse_flag("--graph_knn=none").unwrap());
        let c = RunConfig::from_entries(&e).unwrap();
        assert_eq!(c.hyper.seed, 9);
        assert_eq!(c.hyper.epsilon, KernelWidth::Fixed(0.5));
        assert_eq!(c.hyper.graph_knn, None);
        assert!(parse_flag("seed=1").is_err());
        assert!(parse_flag("--seed").is_err());
    }

    #[test]
    fn graph_variants_default_to_fewer_outer_iterations() {
        let c = RunConfig::from_entries(&entries("variant = supgraphdl_l\n")).unwrap();
        assert_eq!(c.hyper.outer_iters, GRAPH_OUTER_ITERS);
        let c = RunConfig::from_entries(&entries("variant = supgraphdl\nouter_iters = 4\n")).unwrap();
        assert_eq!(c.hyper.outer_iters, 4);
    }

    #[test]
    fn every_documented_key_is_accepted() {
        let sample = |k: &str| match k {
            "variant" => "ksvd",
            "epsilon" | "multi_label" => "auto",
            "label_masked" | "allow_large_manifold" | "samples_as_rows" => "false",
            "learn_tol" | "ridge" | "noise_sigma" | "alpha" | "beta" | "gamma" | "rho" | "mu" | "eta" => "0.5",
            "features" | "labels" | "test_features" | "test_labels" | "model" | "predictions" | "metrics"
            | "report" | "dictionary" => "out.file",
            _ => "3",
        };
        for &k in KEYS {
            let v = if k == "epsilon" { "median" } else { sample(k) };
            let e = vec![Entry { key: k.into(), value: v.into(), origin: Origin::Flag }];
            RunConfig::from_entries(&e).unwrap_or_else(|err| panic!("{k}: {err}"));
        }
    }
}
