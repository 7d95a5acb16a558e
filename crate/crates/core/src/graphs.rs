//! Graph weight matrices and combinatorial Laplacians.
//!
//! Two graphs appear in training: the manifold graph over samples (columns of
//! `Y`) and the feature graph over coordinates (rows of `Y`). Both use a
//! Gaussian kernel `w_ij = exp(-‖a_i - a_j‖² / ε)` and the Laplacian
//! `L = diag(W·1) - W`.

use nalgebra::DMatrix;

use crate::data::{KernelWidth, LabeledDataset};
use crate::error::{Error, Result};

/// Tolerance on Laplacian row sums.
pub const ROW_SUM_TOL: f64 = 1e-10;
/// Tolerance on the trace of a trace-normalized Laplacian.
pub const TRACE_TOL: f64 = 1e-9;
/// Slack on the smallest eigenvalue when checking positive semidefiniteness.
pub const PSD_TOL: f64 = 1e-8;

/// Symmetric nonnegative weights with zero diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightMatrix {
    w: DMatrix<f64>,
}

impl WeightMatrix {
    pub fn new(w: DMatrix<f64>) -> Result<Self> {
        let n = w.nrows();
        if n == 0 || w.ncols() != n {
            return Err(Error::InvalidGraph(format!(
                "weight matrix must be square and non-empty, got {}x{}",
                w.nrows(),
                w.ncols()
            )));
        }
        for i in 0..n {
            if w[(i, i)] != 0.0 {
                return Err(Error::InvalidGraph(format!("nonzero diagonal weight at node {i}")));
            }
            for j in 0..n {
                let v = w[(i, j)];
                if !(v.is_finite() && v >= 0.0) {
                    return Err(Error::InvalidGraph(format!("weight ({i}, {j}) = {v} is not a nonnegative number")));
                }
                if v != w[(j, i)] {
                    return Err(Error::InvalidGraph(format!("weights ({i}, {j}) and ({j}, {i}) differ")));
                }
            }
        }
        Ok(Self { w })
    }

    pub fn size(&self) -> usize {
        self.w.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.w
    }

    /// Zeroes every edge whose endpoints share no label.
    pub fn mask_by_labels(mut self, ds: &LabeledDataset) -> Result<Self> {
        if ds.num_samples() != self.size() {
            return Err(Error::Dimension(format!(
                "{} samples for a graph on {} nodes",
                ds.num_samples(),
                self.size()
            )));
        }
        let h = ds.h();
        for i in 0..self.size() {
            for j in (i + 1)..self.size() {
                let shared = h.column(i).dot(&h.column(j)) > 0.0;
                if !shared {
                    self.w[(i, j)] = 0.0;
                    self.w[(j, i)] = 0.0;
                }
            }
        }
        Ok(self)
    }
}

/// `L = diag(W·1) - W`, optionally scaled to trace equal to its size.
#[derive(Debug, Clone, PartialEq)]
pub struct GraphLaplacian {
    l: DMatrix<f64>,
    normalized: bool,
}

impl GraphLaplacian {
    /// Wraps an existing matrix after checking Laplacian structure.
    pub fn from_matrix(l: DMatrix<f64>, normalized: bool) -> Result<Self> {
        let lap = Self { l, normalized };
        lap.check_membership()?;
        Ok(lap)
    }

    pub fn size(&self) -> usize {
        self.l.nrows()
    }

    pub fn is_normalized(&self) -> bool {
        self.normalized
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.l
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.l
    }

    /// Edge weights `-L_ij` for `i < j`, in row-major upper-triangular order.
    pub fn edge_weights(&self) -> Vec<f64> {
        let n = self.size();
        let mut w = Vec::with_capacity(n * (n - 1) / 2);
        for i in 0..n {
            for j in (i + 1)..n {
                w.push(-self.l[(i, j)]);
            }
        }
        w
    }

    /// Symmetry (exact), nonpositive off-diagonals, zero row sums and, for
    /// normalized Laplacians, trace equal to the size.
    ///
    /// Positive semidefiniteness follows from these (the matrix is diagonally
    /// dominant with nonnegative diagonal); see [`GraphLaplacian::min_eigenvalue`].
    pub fn check_membership(&self) -> Result<()> {
        let l = &self.l;
        let n = l.nrows();
        if n == 0 || l.ncols() != n {
            return Err(Error::InvalidGraph(format!("Laplacian must be square, got {}x{}", l.nrows(), l.ncols())));
        }
        for i in 0..n {
            let mut row_sum = 0.0;
            for j in 0..n {
                let v = l[(i, j)];
                if !v.is_finite() {
                    return Err(Error::InvalidGraph(format!("non-finite entry ({i}, {j})")));
                }
                if v != l[(j, i)] {
                    return Err(Error::InvalidGraph(format!("asymmetric at ({i}, {j})")));
                }
                if i != j && v > 0.0 {
                    return Err(Error::InvalidGraph(format!("positive off-diagonal ({i}, {j}) = {v}")));
                }
                row_sum += v;
            }
            if row_sum.abs() > ROW_SUM_TOL {
                return Err(Error::InvalidGraph(format!("row {i} sums to {row_sum}")));
            }
        }
        if self.normalized {
            let tr = l.trace();
            if (tr - n as f64).abs() > TRACE_TOL {
                return Err(Error::InvalidGraph(format!("trace {tr}, expected {n}")));
            }
        }
        Ok(())
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.l.clone().symmetric_eigenvalues().min()
    }
}

/// Resolves a kernel width against the items it will be applied to (columns of `points`).
pub fn resolve_width(points: &DMatrix<f64>, width: KernelWidth) -> Result<f64> {
    match width {
        KernelWidth::Fixed(eps) if eps.is_finite() && eps > 0.0 => Ok(eps),
        KernelWidth::Fixed(eps) => Err(Error::InvalidArgument(format!("epsilon must be positive, got {eps}"))),
        KernelWidth::Median => median_squared_distance(points),
    }
}

/// Median of `‖p_i - p_j‖²` over item pairs `i < j`; falls back to the mean
/// when more than half the pairs coincide.
pub fn median_squared_distance(points: &DMatrix<f64>) -> Result<f64> {
    let d = squared_distances(points);
    let n = d.nrows();
    if n < 2 {
        return Err(Error::InvalidArgument("need at least two items for a kernel width".into()));
    }
    let mut pairs = Vec::with_capacity(n * (n - 1) / 2);
    for i in 0..n {
        for j in (i + 1)..n {
            pairs.push(d[(i, j)]);
        }
    }
    let mid = pairs.len() / 2;
    let (_, &mut upper, _) = pairs.select_nth_unstable_by(mid, f64::total_cmp);
    let median = if pairs.len() % 2 == 0 {
        let lower = pairs[..mid].iter().copied().fold(f64::NEG_INFINITY, f64::max);
        0.5 * (lower + upper)
    } else {
        upper
    };
    if median > 0.0 {
        return Ok(median);
    }
    let mean = pairs.iter().sum::<f64>() / pairs.len() as f64;
    if mean > 0.0 {
        Ok(mean)
    } else {
        Err(Error::InvalidGraph("all items coincide; kernel width is undefined".into()))
    }
}

/// Pairwise squared distances between the columns of `points`.
pub(crate) fn squared_distances(points: &DMatrix<f64>) -> DMatrix<f64> {
    let n = points.ncols();
    let mut d = DMatrix::zeros(n, n);
    for i in 0..n {
        let a = points.column(i);
        for j in (i + 1)..n {
            let b = points.column(j);
            let s: f64 = a.iter().zip(b.iter()).map(|(x, y)| (x - y) * (x - y)).sum();
            d[(i, j)] = s;
            d[(j, i)] = s;
        }
    }
    d
}

/// Gaussian kernel graph over the columns of `points`.
///
/// With `knn = Some(k)` each node keeps only its `k` nearest neighbours
/// (ties to the lower index) and the result is symmetrized by `max`, i.e. an
/// edge survives if either endpoint selected it.
pub fn gaussian_weights(points: &DMatrix<f64>, epsilon: f64, knn: Option<usize>) -> Result<WeightMatrix> {
    let n = points.ncols();
    if !(epsilon.is_finite() && epsilon > 0.0) {
        return Err(Error::InvalidArgument(format!("epsilon must be positive, got {epsilon}")));
    }
    if let Some(k) = knn {
        if k == 0 || k >= n {
            return Err(Error::InvalidArgument(format!("knn = {k} must lie in [1, {n})")));
        }
    }
    let d = squared_distances(points);
    let mut w = d.map(|v| (-v / epsilon).exp());
    w.fill_diagonal(0.0);
    if let Some(k) = knn {
        let mut keep = DMatrix::from_element(n, n, false);
        let mut order: Vec<usize> = Vec::with_capacity(n);
        for i in 0..n {
            order.clear();
            order.extend((0..n).filter(|&j| j != i));
            order.sort_by(|&a, &b| d[(i, a)].total_cmp(&d[(i, b)]).then(a.cmp(&b)));
            for &j in &order[..k] {
                keep[(i, j)] = true;
                keep[(j, i)] = true;
            }
        }
        for i in 0..n {
            for j in 0..n {
                if !keep[(i, j)] {
                    w[(i, j)] = 0.0;
                }
            }
        }
    }
    WeightMatrix::new(w)
}

/// Gaussian kernel graph over the rows (features) of `y`.
pub fn feature_weights(y: &DMatrix<f64>, epsilon: f64, knn: Option<usize>) -> Result<WeightMatrix> {
    gaussian_weights(&y.transpose(), epsilon, knn)
}

pub fn laplacian_from_weights(w: &WeightMatrix, normalize_trace: bool) -> Result<GraphLaplacian> {
    let n = w.size();
    let wm = w.matrix();
    let mut l = -wm.clone();
    for i in 0..n {
        let degree: f64 = wm.row(i).iter().sum();
        l[(i, i)] = degree;
    }
    if normalize_trace {
        let tr = l.trace();
        if tr <= 0.0 {
            return Err(Error::InvalidGraph("cannot trace-normalize a graph without edges".into()));
        }
        l *= n as f64 / tr;
    }
    GraphLaplacian::from_matrix(l, normalize_trace)
}

/// Which dimension of `Z` the Laplacian couples.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Coupling {
    /// `Tr(Z L Zᵀ)`: nodes are columns (codes over samples).
    Columns,
    /// `Tr(Zᵀ L Z)`: nodes are rows (dictionary over features).
    Rows,
}

/// Graph smoothness of `z`, the Laplacian quadratic form summed over the
/// uncoupled dimension.
pub fn smoothness(l: &GraphLaplacian, z: &DMatrix<f64>, coupling: Coupling) -> Result<f64> {
    let lm = l.matrix();
    let value = match coupling {
        Coupling::Columns => {
            if z.ncols() != l.size() {
                return Err(Error::Dimension(format!("{} columns for a graph on {} nodes", z.ncols(), l.size())));
            }
            (z * lm).component_mul(z).sum()
        }
        Coupling::Rows => {
            if z.nrows() != l.size() {
                return Err(Error::Dimension(format!("{} rows for a graph on {} nodes", z.nrows(), l.size())));
            }
            (lm * z).component_mul(z).sum()
        }
    };
    Ok(value.max(0.0))
}

/// Embeds an `n × n` feature Laplacian in the top-left block of an
/// `(n + extra)²` zero matrix, so that `D̃ᵀ L̃ D̃ = Dᵀ L D` when `D` is the top
/// block of `D̃`.
pub fn zero_pad_feature_laplacian(l: &GraphLaplacian, extra: usize) -> DMatrix<f64> {
    let n = l.size();
    let mut padded = DMatrix::zeros(n + extra, n + extra);
    padded.view_mut((0, 0), (n, n)).copy_from(l.matrix());
    padded
}
