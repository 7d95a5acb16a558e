//! Matrix and dataset containers, file formats and the synthetic generator.
//!
//! Signals are stored column-wise: a data matrix is `features × samples`, a
//! dictionary is `features × atoms` and a code matrix is `atoms × samples`.

mod io;
mod synthetic;

use std::fmt;
use std::ops::Deref;

use nalgebra::DMatrix;

use crate::error::{Error, Result};

pub(crate) use io::write_atomic;
pub use io::{load_labels, load_matrix, read_dmat, save_labels, save_matrix, write_dmat, MatrixFormat};
pub use synthetic::{generate_synthetic, SyntheticData};

/// What the rows of a [`DataMatrix`] index.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RowRole {
    Features,
    Atoms,
    Labels,
    Mixed,
}

/// What the columns of a [`DataMatrix`] index.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ColRole {
    Samples,
    Atoms,
}

/// Dense, finite, non-empty real matrix tagged with the meaning of its axes.
///
/// Dereferences to [`nalgebra::DMatrix`] so that numerical routines can take
/// plain matrices.
#[derive(Debug, Clone, PartialEq)]
pub struct DataMatrix {
    values: DMatrix<f64>,
    row_role: RowRole,
    col_role: ColRole,
}

impl DataMatrix {
    pub fn new(values: DMatrix<f64>, row_role: RowRole, col_role: ColRole) -> Result<Self> {
        if values.nrows() == 0 || values.ncols() == 0 {
            return Err(Error::Dimension(format!(
                "matrix must be non-empty, got {}x{}",
                values.nrows(),
                values.ncols()
            )));
        }
        if let Some(pos) = values.iter().position(|v| !v.is_finite()) {
            let (r, c) = (pos % values.nrows(), pos / values.nrows());
            return Err(Error::Numerical(format!("non-finite entry at ({r}, {c})")));
        }
        Ok(Self {
            values,
            row_role,
            col_role,
        })
    }

    /// Features × samples matrix.
    pub fn samples(values: DMatrix<f64>) -> Result<Self> {
        Self::new(values, RowRole::Features, ColRole::Samples)
    }

    pub fn from_row_major(rows: usize, cols: usize, values: &[f64]) -> Result<Self> {
        if values.len() != rows * cols {
            return Err(Error::Dimension(format!(
                "{} values for a {rows}x{cols} matrix",
                values.len()
            )));
        }
        Self::samples(DMatrix::from_row_slice(rows, cols, values))
    }

    pub fn to_row_major(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.values.len());
        for r in 0..self.values.nrows() {
            out.extend(self.values.row(r).iter());
        }
        out
    }

    pub fn row_role(&self) -> RowRole {
        self.row_role
    }

    pub fn col_role(&self) -> ColRole {
        self.col_role
    }

    pub fn with_roles(mut self, row_role: RowRole, col_role: ColRole) -> Self {
        self.row_role = row_role;
        self.col_role = col_role;
        self
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.values
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.values
    }
}

impl Deref for DataMatrix {
    type Target = DMatrix<f64>;

    fn deref(&self) -> &DMatrix<f64> {
        &self.values
    }
}

/// Training or test data: signals `Y` (n × N) with a binary label matrix `H` (q × N).
#[derive(Debug, Clone)]
pub struct LabeledDataset {
    y: DataMatrix,
    h: DataMatrix,
    multi_label: bool,
    class_names: Option<Vec<String>>,
}

impl LabeledDataset {
    pub fn new(y: DataMatrix, h: DataMatrix, multi_label: bool) -> Result<Self> {
        if y.ncols() != h.ncols() {
            return Err(Error::Dimension(format!(
                "{} samples but {} label columns",
                y.ncols(),
                h.ncols()
            )));
        }
        for (i, col) in h.column_iter().enumerate() {
            let mut ones = 0;
            for &v in col.iter() {
                if v == 1.0 {
                    ones += 1;
                } else if v != 0.0 {
                    return Err(Error::InvalidArgument(format!(
                        "label matrix entry {v} in column {i} is not binary"
                    )));
                }
            }
            if ones == 0 {
                return Err(Error::InvalidArgument(format!("sample {i} has no label")));
            }
            if !multi_label && ones > 1 {
                return Err(Error::InvalidArgument(format!(
                    "sample {i} has {ones} labels in a single-label dataset"
                )));
            }
        }
        let h = h.with_roles(RowRole::Labels, ColRole::Samples);
        Ok(Self {
            y,
            h,
            multi_label,
            class_names: None,
        })
    }

    /// Builds `H` from per-sample label index sets.
    pub fn from_label_sets(
        y: DataMatrix,
        labels: &[Vec<usize>],
        num_classes: usize,
        multi_label: bool,
    ) -> Result<Self> {
        if labels.len() != y.ncols() {
            return Err(Error::Dimension(format!(
                "{} samples but {} label lines",
                y.ncols(),
                labels.len()
            )));
        }
        if num_classes == 0 {
            return Err(Error::InvalidArgument("zero classes".into()));
        }
        let mut h = DMatrix::zeros(num_classes, labels.len());
        for (i, set) in labels.iter().enumerate() {
            for &c in set {
                if c >= num_classes {
                    return Err(Error::InvalidArgument(format!(
                        "sample {i}: class index {c} out of range for {num_classes} classes"
                    )));
                }
                h[(c, i)] = 1.0;
            }
        }
        Self::new(y, DataMatrix::new(h, RowRole::Labels, ColRole::Samples)?, multi_label)
    }

    pub fn with_class_names(mut self, names: Vec<String>) -> Result<Self> {
        if names.len() != self.num_classes() {
            return Err(Error::Dimension(format!(
                "{} class names for {} classes",
                names.len(),
                self.num_classes()
            )));
        }
        self.class_names = Some(names);
        Ok(self)
    }

    pub fn y(&self) -> &DataMatrix {
        &self.y
    }

    pub fn h(&self) -> &DataMatrix {
        &self.h
    }

    pub fn is_multi_label(&self) -> bool {
        self.multi_label
    }

    pub fn class_names(&self) -> Option<&[String]> {
        self.class_names.as_deref()
    }

    pub fn num_features(&self) -> usize {
        self.y.nrows()
    }

    pub fn num_samples(&self) -> usize {
        self.y.ncols()
    }

    pub fn num_classes(&self) -> usize {
        self.h.nrows()
    }

    /// Sorted label indices of sample `i`.
    pub fn labels_of(&self, i: usize) -> Vec<usize> {
        self.h
            .column(i)
            .iter()
            .enumerate()
            .filter(|(_, &v)| v == 1.0)
            .map(|(c, _)| c)
            .collect()
    }

    /// Lowest label index of sample `i`; the class itself for single-label data.
    pub fn primary_class(&self, i: usize) -> usize {
        self.h
            .column(i)
            .iter()
            .position(|&v| v == 1.0)
            .expect("validated: every sample has a label")
    }

    pub fn label_sets(&self) -> Vec<Vec<usize>> {
        (0..self.num_samples()).map(|i| self.labels_of(i)).collect()
    }
}

/// Gaussian kernel width for graph construction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum KernelWidth {
    /// Median of the squared pairwise distances between items.
    Median,
    Fixed(f64),
}

impl fmt::Display for KernelWidth {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            KernelWidth::Median => f.write_str("median"),
            KernelWidth::Fixed(v) => write!(f, "{v}"),
        }
    }
}

/// Model hyperparameters shared by all training variants.
#[derive(Debug, Clone, PartialEq)]
pub struct Hyperparameters {
    /// Dictionary size K.
    pub atoms: usize,
    /// Maximum number of nonzeros per code, T.
    pub sparsity: usize,
    /// Label-consistency weight (LC-KSVD baselines).
    pub alpha: f64,
    /// Classifier weight.
    pub beta: f64,
    /// Manifold smoothness weight on the codes.
    pub gamma: f64,
    /// Feature smoothness weight on the dictionary.
    pub rho: f64,
    /// Frobenius penalty on the learned feature Laplacian.
    pub mu: f64,
    /// Frobenius penalty on the learned manifold Laplacian.
    pub eta: f64,
    pub epsilon: KernelWidth,
    pub outer_iters: usize,
    /// Coding sweeps per outer iteration (graph variants).
    pub inner_iters: usize,
    /// Nearest-neighbour sparsification of the manifold graph; `None` keeps it dense.
    pub graph_knn: Option<usize>,
    pub seed: u64,
}

impl Default for Hyperparameters {
    fn default() -> Self {
        Self {
            atoms: 100,
            sparsity: 5,
            alpha: 1.0,
            beta: 1.0,
            gamma: 0.5,
            rho: 0.1,
            mu: 1.0,
            eta: 1.0,
            epsilon: KernelWidth::Median,
            outer_iters: 30,
            inner_iters: 2,
            graph_knn: Some(10),
            seed: 0,
        }
    }
}

impl Hyperparameters {
    pub fn validate(&self) -> Result<()> {
        if self.sparsity == 0 {
            return Err(Error::InvalidArgument("sparsity must be at least 1".into()));
        }
        if self.sparsity > self.atoms {
            return Err(Error::InvalidArgument(format!(
                "sparsity {} exceeds atom count {}",
                self.sparsity, self.atoms
            )));
        }
        let weights = [
            ("alpha", self.alpha),
            ("beta", self.beta),
            ("gamma", self.gamma),
            ("rho", self.rho),
            ("mu", self.mu),
            ("eta", self.eta),
        ];
        for (name, w) in weights {
            if !(w.is_finite() && w >= 0.0) {
                return Err(Error::InvalidArgument(format!(
                    "{name} must be a finite nonnegative number, got {w}"
                )));
            }
        }
        if let KernelWidth::Fixed(eps) = self.epsilon {
            if !(eps.is_finite() && eps > 0.0) {
                return Err(Error::InvalidArgument(format!(
                    "epsilon must be positive, got {eps}"
                )));
            }
        }
        if self.graph_knn == Some(0) {
            return Err(Error::InvalidArgument("graph_knn must be at least 1".into()));
        }
        Ok(())
    }
}
