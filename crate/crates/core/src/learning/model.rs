//! Trained models and their on-disk format.

use std::fmt::{self, Write as _};
use std::path::Path;
use std::str::FromStr;

use nalgebra::DMatrix;

use crate::coding::check_unit_columns;
use crate::data::{read_dmat, write_atomic, write_dmat};
use crate::data::{Hyperparameters, KernelWidth};
use crate::error::{Error, Result};

/// Training variants, from plain K-SVD to the graph-learning model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Variant {
    Ksvd,
    /// Label consistency only.
    Lcksvd1,
    /// Label consistency and classifier.
    Lcksvd2,
    /// Classifier with manifold and feature graph penalties.
    SupGraphDl,
    /// [`Variant::SupGraphDl`] plus Laplacian learning.
    SupGraphDlL,
}

impl Variant {
    pub const ALL: [Variant; 5] = [
        Variant::Ksvd,
        Variant::Lcksvd1,
        Variant::Lcksvd2,
        Variant::SupGraphDl,
        Variant::SupGraphDlL,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Variant::Ksvd => "ksvd",
            Variant::Lcksvd1 => "lcksvd1",
            Variant::Lcksvd2 => "lcksvd2",
            Variant::SupGraphDl => "supgraphdl",
            Variant::SupGraphDlL => "supgraphdl_l",
        }
    }

    pub fn uses_graphs(self) -> bool {
        matches!(self, Variant::SupGraphDl | Variant::SupGraphDlL)
    }

    pub fn learns_graphs(self) -> bool {
        self == Variant::SupGraphDlL
    }

    pub fn uses_label_consistency(self) -> bool {
        matches!(self, Variant::Lcksvd1 | Variant::Lcksvd2)
    }

    /// Whether the classifier is learned jointly with the dictionary.
    pub fn learns_classifier(self) -> bool {
        !matches!(self, Variant::Ksvd | Variant::Lcksvd1)
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Variant::ALL
            .into_iter()
            .find(|v| v.name() == s)
            .ok_or_else(|| {
                let names: Vec<&str> = Variant::ALL.iter().map(|v| v.name()).collect();
                Error::InvalidArgument(format!("unknown variant {s:?}; expected one of {}", names.join(", ")))
            })
    }
}

/// Objective terms after one outer iteration. Weights are already applied.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct IterationRecord {
    pub iteration: usize,
    /// `‖Y - DX‖²` on the data rows of the augmented system.
    pub reconstruction: f64,
    /// `α ‖Q - AX‖²`.
    pub label_consistency: f64,
    /// `β ‖H - WX‖²`.
    pub classifier: f64,
    /// `γ Tr(X L_M Xᵀ)`.
    pub manifold: f64,
    /// `ρ Tr(Dᵀ L_G D)`.
    pub feature: f64,
    /// `μ ‖L_G‖_F²`.
    pub feature_frobenius: f64,
    /// `η ‖L_M‖_F²`.
    pub manifold_frobenius: f64,
    pub total: f64,
    pub replaced_atoms: usize,
}

/// One Laplacian update, with its subproblem objective before and after.
#[derive(Debug, Clone, PartialEq)]
pub struct GraphUpdateRecord {
    pub iteration: usize,
    pub graph: GraphKind,
    pub before: f64,
    pub after: f64,
    pub solver_iterations: usize,
    pub stationarity: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GraphKind {
    Feature,
    Manifold,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Diagnostics {
    /// Index 0 is the initialization.
    pub iterations: Vec<IterationRecord>,
    pub graph_updates: Vec<GraphUpdateRecord>,
}

impl Diagnostics {
    pub fn objectives(&self) -> Vec<f64> {
        self.iterations.iter().map(|r| r.total).collect()
    }

    /// CSV with one row per iteration record.
    pub fn to_csv(&self) -> String {
        let mut out = String::from(
            "iteration,total,reconstruction,label_consistency,classifier,manifold,feature,feature_frobenius,manifold_frobenius,replaced_atoms\n",
        );
        for r in &self.iterations {
            let _ = writeln!(
                out,
                "{},{:?},{:?},{:?},{:?},{:?},{:?},{:?},{:?},{}",
                r.iteration,
                r.total,
                r.reconstruction,
                r.label_consistency,
                r.classifier,
                r.manifold,
                r.feature,
                r.feature_frobenius,
                r.manifold_frobenius,
                r.replaced_atoms
            );
        }
        out
    }
}

/// A dictionary `D` (`n × K`, unit-norm columns) with its linear classifier `W` (`q × K`).
#[derive(Debug, Clone, PartialEq)]
pub struct TrainedModel {
    pub dictionary: DMatrix<f64>,
    pub classifier: DMatrix<f64>,
    pub hyper: Hyperparameters,
    pub variant: Variant,
    pub multi_label: bool,
    pub diagnostics: Diagnostics,
}

impl TrainedModel {
    pub fn new(
        dictionary: DMatrix<f64>,
        classifier: DMatrix<f64>,
        hyper: Hyperparameters,
        variant: Variant,
        multi_label: bool,
    ) -> Result<Self> {
        if classifier.ncols() != dictionary.ncols() {
            return Err(Error::Dimension(format!(
                "classifier has {} columns for {} atoms",
                classifier.ncols(),
                dictionary.ncols()
            )));
        }
        if dictionary.iter().chain(classifier.iter()).any(|v| !v.is_finite()) {
            return Err(Error::Numerical("model contains non-finite values".into()));
        }
        check_unit_columns(&dictionary)?;
        Ok(Self {
            dictionary,
            classifier,
            hyper,
            variant,
            multi_label,
            diagnostics: Diagnostics::default(),
        })
    }

    pub fn num_features(&self) -> usize {
        self.dictionary.nrows()
    }

    pub fn num_atoms(&self) -> usize {
        self.dictionary.ncols()
    }

    pub fn num_classes(&self) -> usize {
        self.classifier.nrows()
    }

    /// Serializes the model: a `key=value` header, a blank line, then `D` and `W` as dmat blocks.
    pub fn to_bytes(&self) -> Vec<u8> {
        let h = &self.hyper;
        let mut header = String::new();
        let fields: [(&str, String); 14] = [
            ("variant", self.variant.to_string()),
            ("n", self.num_features().to_string()),
            ("K", self.num_atoms().to_string()),
            ("q", self.num_classes().to_string()),
            ("T", h.sparsity.to_string()),
            ("alpha", format!("{:?}", h.alpha)),
            ("beta", format!("{:?}", h.beta)),
            ("gamma", format!("{:?}", h.gamma)),
            ("rho", format!("{:?}", h.rho)),
            ("mu", format!("{:?}", h.mu)),
            ("eta", format!("{:?}", h.eta)),
            (
                "epsilon",
                match h.epsilon {
                    KernelWidth::Median => "median".to_string(),
                    KernelWidth::Fixed(v) => format!("{v:?}"),
                },
            ),
            ("seed", h.seed.to_string()),
            ("multi_label", self.multi_label.to_string()),
        ];
        for (k, v) in fields {
            let _ = writeln!(header, "{k}={v}");
        }
        header.push('\n');
        let mut out = header.into_bytes();
        write_dmat(&mut out, &self.dictionary).expect("writing to memory");
        write_dmat(&mut out, &self.classifier).expect("writing to memory");
        out
    }

    pub fn from_bytes(bytes: &[u8], path: &Path) -> Result<Self> {
        let mut pos = 0;
        let mut fields: Vec<(String, String)> = Vec::new();
        let mut line_no = 0;
        loop {
            line_no += 1;
            let end = bytes[pos..]
                .iter()
                .position(|&b| b == b'\n')
                .ok_or_else(|| Error::parse(path, format!("line {line_no}"), "header is not terminated by a blank line"))?;
            let line = std::str::from_utf8(&bytes[pos..pos + end])
                .map_err(|_| Error::parse(path, format!("line {line_no}"), "header is not UTF-8"))?;
            pos += end + 1;
            if line.is_empty() {
                break;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::parse(path, format!("line {line_no}"), format!("expected key=value, got {line:?}")))?;
            if fields.iter().any(|(seen, _)| seen == k) {
                return Err(Error::parse(path, format!("line {line_no}"), format!("duplicate key {k}")));
            }
            fields.push((k.to_string(), v.to_string()));
        }
        let get = |key: &str| -> Result<&str> {
            fields
                .iter()
                .find(|(k, _)| k == key)
                .map(|(_, v)| v.as_str())
                .ok_or_else(|| Error::parse(path, "header", format!("missing key {key}")))
        };
        fn num<T: FromStr>(path: &Path, key: &str, v: &str) -> Result<T> {
            v.parse()
                .map_err(|_| Error::parse(path, "header", format!("invalid value {v:?} for {key}")))
        }
        const KNOWN: [&str; 14] = [
            "variant", "n", "K", "q", "T", "alpha", "beta", "gamma", "rho", "mu", "eta", "epsilon", "seed", "multi_label",
        ];
        if let Some((k, _)) = fields.iter().find(|(k, _)| !KNOWN.contains(&k.as_str())) {
            return Err(Error::parse(path, "header", format!("unknown key {k}")));
        }
        let variant: Variant = get("variant")?
            .parse()
            .map_err(|e: Error| Error::parse(path, "header", e.to_string()))?;
        let n: usize = num(path, "n", get("n")?)?;
        let k: usize = num(path, "K", get("K")?)?;
        let q: usize = num(path, "q", get("q")?)?;
        let epsilon = match get("epsilon")? {
            "median" => KernelWidth::Median,
            v => KernelWidth::Fixed(num(path, "epsilon", v)?),
        };
        let hyper = Hyperparameters {
            atoms: k,
            sparsity: num(path, "T", get("T")?)?,
            alpha: num(path, "alpha", get("alpha")?)?,
            beta: num(path, "beta", get("beta")?)?,
            gamma: num(path, "gamma", get("gamma")?)?,
            rho: num(path, "rho", get("rho")?)?,
            mu: num(path, "mu", get("mu")?)?,
            eta: num(path, "eta", get("eta")?)?,
            epsilon,
            seed: num(path, "seed", get("seed")?)?,
            ..Hyperparameters::default()
        };
        let multi_label: bool = num(path, "multi_label", get("multi_label")?)?;
        let (d, end) = read_dmat(bytes, pos, path)?;
        let (w, end) = read_dmat(bytes, end, path)?;
        if end != bytes.len() {
            return Err(Error::parse(path, format!("byte {end}"), "trailing bytes after the classifier block"));
        }
        if d.shape() != (n, k) || w.shape() != (q, k) {
            return Err(Error::parse(
                path,
                "header",
                format!(
                    "header declares n={n}, K={k}, q={q} but blocks are {}x{} and {}x{}",
                    d.nrows(),
                    d.ncols(),
                    w.nrows(),
                    w.ncols()
                ),
            ));
        }
        TrainedModel::new(d, w, hyper, variant, multi_label).map_err(|e| Error::parse(path, "payload", e.to_string()))
    }

    /// Writes the model atomically.
    pub fn save(&self, path: &Path) -> Result<()> {
        write_atomic(path, &self.to_bytes())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
        Self::from_bytes(&bytes, path)
    }
}
