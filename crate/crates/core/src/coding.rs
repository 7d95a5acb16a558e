//! L0-constrained sparse coding.
//!
//! [`omp`] and [`omp_batch`] are plain orthogonal matching pursuit. The
//! training-time coder [`graph_regularized_coding`] adds the manifold term
//! `γ Tr(X L Xᵀ)` and updates one column at a time with the others held fixed
//! (Gauss–Seidel order). Both share one greedy routine, so with `γ = 0` the
//! graph coder reproduces OMP exactly.

use nalgebra::{DMatrix, DVector, DVectorView};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::graphs::GraphLaplacian;

/// Allowed deviation of dictionary column norms from 1.
pub const UNIT_NORM_TOL: f64 = 1e-8;
/// OMP stops once the residual norm drops to this value.
pub const RESIDUAL_STOP: f64 = 1e-10;

/// A sparse column: strictly increasing atom indices with aligned coefficients.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SparseCode {
    pub support: Vec<usize>,
    pub coeffs: Vec<f64>,
}

impl SparseCode {
    fn from_unsorted(mut pairs: Vec<(usize, f64)>) -> Self {
        pairs.sort_unstable_by_key(|p| p.0);
        let (support, coeffs) = pairs.into_iter().unzip();
        Self { support, coeffs }
    }

    pub fn nnz(&self) -> usize {
        self.support.len()
    }

    pub fn is_empty(&self) -> bool {
        self.support.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.support.iter().copied().zip(self.coeffs.iter().copied())
    }

    pub fn to_dense(&self, atoms: usize) -> DVector<f64> {
        let mut v = DVector::zeros(atoms);
        for (k, c) in self.iter() {
            v[k] = c;
        }
        v
    }

    pub fn norm_squared(&self) -> f64 {
        self.coeffs.iter().map(|c| c * c).sum()
    }

    fn dot_dense(&self, v: &[f64]) -> f64 {
        self.iter().map(|(k, c)| c * v[k]).sum()
    }
}

/// Stacks codes as the columns of a `atoms × codes.len()` matrix.
pub fn codes_to_dense(codes: &[SparseCode], atoms: usize) -> DMatrix<f64> {
    let mut x = DMatrix::zeros(atoms, codes.len());
    for (i, code) in codes.iter().enumerate() {
        for (k, c) in code.iter() {
            x[(k, i)] = c;
        }
    }
    x
}

/// Nonzero pattern of each column of `x`.
pub fn codes_from_dense(x: &DMatrix<f64>) -> Vec<SparseCode> {
    x.column_iter()
        .map(|col| {
            let (support, coeffs) = col.iter().enumerate().filter(|(_, &v)| v != 0.0).map(|(k, &v)| (k, v)).unzip();
            SparseCode { support, coeffs }
        })
        .collect()
}

pub(crate) fn check_unit_columns(dict: &DMatrix<f64>) -> Result<()> {
    for (j, col) in dict.column_iter().enumerate() {
        let norm = col.norm();
        if (norm - 1.0).abs() > UNIT_NORM_TOL {
            return Err(Error::NotNormalized { column: j, norm });
        }
    }
    Ok(())
}

/// Shared per-dictionary quantities: the Gram matrix and `Dᵀ Y`.
struct Precomputed {
    gram: DMatrix<f64>,
    dty: DMatrix<f64>,
}

impl Precomputed {
    fn new(dict: &DMatrix<f64>, y: &DMatrix<f64>) -> Self {
        Self {
            gram: dict.tr_mul(dict),
            dty: dict.tr_mul(y),
        }
    }
}

/// One column subproblem
/// `min ‖y - D x‖² + shift ‖x‖² + 2 xᵀ c` over `‖x‖₀ ≤ T`.
struct ColumnProblem<'a> {
    dict: &'a DMatrix<f64>,
    gram: &'a DMatrix<f64>,
    y: DVectorView<'a, f64>,
    /// `Dᵀy - c`
    target: Vec<f64>,
    shift: f64,
    regularized: bool,
}

impl<'a> ColumnProblem<'a> {
    fn new(
        dict: &'a DMatrix<f64>,
        pre: &'a Precomputed,
        y: DVectorView<'a, f64>,
        column: usize,
        shift: f64,
        coupling: Option<&[f64]>,
    ) -> Self {
        let mut target: Vec<f64> = pre.dty.column(column).iter().copied().collect();
        if let Some(c) = coupling {
            for (t, ci) in target.iter_mut().zip(c) {
                *t -= ci;
            }
        }
        let regularized = shift != 0.0 || coupling.is_some_and(|c| c.iter().any(|&v| v != 0.0));
        Self {
            dict,
            gram: &pre.gram,
            y,
            target,
            shift,
            regularized,
        }
    }

    /// Solves `(G_ss + shift I) x = target_s`; `None` if the system is singular.
    fn refit(&self, support: &[usize]) -> Option<Vec<f64>> {
        let s = support.len();
        let mut a = DMatrix::from_fn(s, s, |r, c| self.gram[(support[r], support[c])]);
        for i in 0..s {
            a[(i, i)] += self.shift;
        }
        let b = DVector::from_iterator(s, support.iter().map(|&k| self.target[k]));
        let chol = a.cholesky()?;
        let x = chol.solve(&b);
        x.iter().all(|v| v.is_finite()).then(|| x.iter().copied().collect())
    }

    fn residual_norm(&self, support: &[usize], coeffs: &[f64]) -> f64 {
        let mut r = self.y.clone_owned();
        for (&k, &c) in support.iter().zip(coeffs) {
            r.axpy(-c, &self.dict.column(k), 1.0);
        }
        r.norm()
    }

    /// Generalized OMP: select by largest `|g_k|`, `g = target - (G + shift I) x`,
    /// then re-fit on the support. Ties go to the lowest index.
    fn greedy(&self, sparsity: usize) -> SparseCode {
        let atoms = self.target.len();
        let mut support: Vec<usize> = Vec::with_capacity(sparsity);
        let mut coeffs: Vec<f64> = Vec::with_capacity(sparsity);
        let mut selected = vec![false; atoms];
        loop {
            if !self.regularized && self.residual_norm(&support, &coeffs) <= RESIDUAL_STOP {
                break;
            }
            if support.len() == sparsity {
                break;
            }
            let mut best = None;
            let mut best_val = 0.0;
            for k in 0..atoms {
                if selected[k] {
                    continue;
                }
                let mut g = self.target[k];
                for (&s, &c) in support.iter().zip(&coeffs) {
                    g -= self.gram[(k, s)] * c;
                }
                if g.abs() > best_val {
                    best_val = g.abs();
                    best = Some(k);
                }
            }
            let Some(k) = best else { break };
            support.push(k);
            match self.refit(&support) {
                Some(x) => {
                    selected[k] = true;
                    coeffs = x;
                }
                None => {
                    support.pop();
                    break;
                }
            }
        }
        SparseCode::from_unsorted(support.into_iter().zip(coeffs).collect())
    }

    /// `‖y - Dx‖² + shift ‖x‖² + 2 xᵀ c`, up to the constant `‖y‖²` handled
    /// explicitly through the residual.
    fn objective(&self, code: &SparseCode) -> f64 {
        let r = self.residual_norm(&code.support, &code.coeffs);
        let mut value = r * r + self.shift * code.norm_squared();
        for (k, c) in code.iter() {
            // target = Dᵀy - c  ⇒  c_k = (Dᵀy)_k - target_k
            let dty_k = self.dict.column(k).dot(&self.y);
            value += 2.0 * c * (dty_k - self.target[k]);
        }
        value
    }
}

/// Orthogonal matching pursuit of one signal over a unit-norm dictionary.
pub fn omp(dict: &DMatrix<f64>, y: &DVector<f64>, sparsity: usize) -> Result<SparseCode> {
    let ymat = DMatrix::from_column_slice(y.len(), 1, y.as_slice());
    Ok(omp_batch(dict, &ymat, sparsity)?.pop().expect("one column"))
}

/// OMP of every column of `y`, in parallel over columns.
pub fn omp_batch(dict: &DMatrix<f64>, y: &DMatrix<f64>, sparsity: usize) -> Result<Vec<SparseCode>> {
    check_unit_columns(dict)?;
    if y.nrows() != dict.nrows() {
        return Err(Error::Dimension(format!(
            "signals have {} rows, dictionary has {}",
            y.nrows(),
            dict.nrows()
        )));
    }
    if sparsity == 0 {
        return Err(Error::InvalidArgument("sparsity must be at least 1".into()));
    }
    let pre = Precomputed::new(dict, y);
    Ok((0..y.ncols())
        .into_par_iter()
        .map(|i| ColumnProblem::new(dict, &pre, y.column(i), i, 0.0, None).greedy(sparsity))
        .collect())
}

/// Output of [`graph_regularized_coding`].
#[derive(Debug, Clone)]
pub struct GraphCoding {
    pub codes: Vec<SparseCode>,
    /// Objective `‖Ỹ - D̃X‖² + γ Tr(X L Xᵀ)` at entry (index 0) and after each sweep.
    pub objectives: Vec<f64>,
    /// Whether every support was unchanged during the final sweep.
    pub supports_stable: bool,
}

impl GraphCoding {
    pub fn to_dense(&self, atoms: usize) -> DMatrix<f64> {
        codes_to_dense(&self.codes, atoms)
    }
}

/// `Σ_{j≠i} L_ij x_j` as a dense atom-length vector.
fn neighbour_sum(l: &DMatrix<f64>, codes: &[SparseCode], i: usize, atoms: usize) -> Vec<f64> {
    let mut b = vec![0.0; atoms];
    for (j, code) in codes.iter().enumerate() {
        if j == i {
            continue;
        }
        let lij = l[(i, j)];
        if lij == 0.0 {
            continue;
        }
        for (k, c) in code.iter() {
            b[k] += lij * c;
        }
    }
    b
}

/// `Tr(X L Xᵀ)` for sparse columns.
pub fn code_smoothness(l: &DMatrix<f64>, codes: &[SparseCode], atoms: usize) -> f64 {
    let mut total = 0.0;
    for (i, code) in codes.iter().enumerate() {
        if code.is_empty() {
            continue;
        }
        let b = neighbour_sum(l, codes, i, atoms);
        total += l[(i, i)] * code.norm_squared() + code.dot_dense(&b);
    }
    total.max(0.0)
}

/// `‖Y - D X‖_F²` for sparse columns.
pub fn reconstruction_error(dict: &DMatrix<f64>, y: &DMatrix<f64>, codes: &[SparseCode]) -> f64 {
    codes
        .iter()
        .enumerate()
        .map(|(i, code)| {
            let mut r = y.column(i).clone_owned();
            for (k, c) in code.iter() {
                r.axpy(-c, &dict.column(k), 1.0);
            }
            r.norm_squared()
        })
        .sum()
}

/// Manifold-regularized coding of all columns of `y` over `dict`.
///
/// Each sweep visits columns `0..N` in order. Column `i` minimizes
/// `‖ỹ_i - D̃x‖² + γ L_ii ‖x‖² + 2γ xᵀ Σ_{j≠i} L_ij x_j` under `‖x‖₀ ≤ T`
/// by generalized OMP. For `γ > 0` the greedy result competes with the exact
/// re-fit of the column's current support, and the lower column objective
/// wins, so no column update increases the global objective.
pub fn graph_regularized_coding(
    dict: &DMatrix<f64>,
    y: &DMatrix<f64>,
    laplacian: &GraphLaplacian,
    gamma: f64,
    sparsity: usize,
    x_init: &DMatrix<f64>,
    sweeps: usize,
) -> Result<GraphCoding> {
    check_unit_columns(dict)?;
    let (atoms, n) = (dict.ncols(), y.ncols());
    if y.nrows() != dict.nrows() {
        return Err(Error::Dimension(format!("signals have {} rows, dictionary has {}", y.nrows(), dict.nrows())));
    }
    if laplacian.size() != n {
        return Err(Error::Dimension(format!("graph on {} nodes for {n} signals", laplacian.size())));
    }
    if x_init.shape() != (atoms, n) {
        return Err(Error::Dimension(format!(
            "initial codes are {}x{}, expected {atoms}x{n}",
            x_init.nrows(),
            x_init.ncols()
        )));
    }
    if !(gamma.is_finite() && gamma >= 0.0) {
        return Err(Error::InvalidArgument(format!("gamma must be nonnegative, got {gamma}")));
    }
    if sparsity == 0 {
        return Err(Error::InvalidArgument("sparsity must be at least 1".into()));
    }
    let l = laplacian.matrix();
    let pre = Precomputed::new(dict, y);
    let mut codes = codes_from_dense(x_init);
    let objective = |codes: &[SparseCode]| {
        let mut v = reconstruction_error(dict, y, codes);
        if gamma > 0.0 {
            v += gamma * code_smoothness(l, codes, atoms);
        }
        v
    };
    let mut objectives = vec![objective(&codes)];
    let mut supports_stable = true;
    for _ in 0..sweeps {
        supports_stable = true;
        for i in 0..n {
            let updated = if gamma == 0.0 {
                ColumnProblem::new(dict, &pre, y.column(i), i, 0.0, None).greedy(sparsity)
            } else {
                let coupling: Vec<f64> = neighbour_sum(l, &codes, i, atoms).iter().map(|b| gamma * b).collect();
                let problem = ColumnProblem::new(dict, &pre, y.column(i), i, gamma * l[(i, i)], Some(&coupling));
                let greedy = problem.greedy(sparsity);
                let previous = &codes[i];
                if previous.is_empty() || previous.support == greedy.support || previous.nnz() > sparsity {
                    greedy
                } else {
                    match problem.refit(&previous.support) {
                        Some(coeffs) => {
                            let warm = SparseCode {
                                support: previous.support.clone(),
                                coeffs,
                            };
                            if problem.objective(&warm) < problem.objective(&greedy) {
                                warm
                            } else {
                                greedy
                            }
                        }
                        None => greedy,
                    }
                }
            };
            if updated.support != codes[i].support {
                supports_stable = false;
            }
            codes[i] = updated;
        }
        objectives.push(objective(&codes));
    }
    Ok(GraphCoding {
        codes,
        objectives,
        supports_stable,
    })
}
