//! Atom-wise dictionary update with the feature-graph penalty.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{Error, Result};
use crate::graphs::GraphLaplacian;

/// Coherence above which an atom is treated as a duplicate.
pub const COHERENCE_LIMIT: f64 = 0.99;

/// The penalty `ρ d̃ᵀ L̃_G d̃` with `L̃_G` the zero-padded feature Laplacian.
///
/// Holds an eigendecomposition of `L_G`, so the shifted systems
/// `(s I + ρ L̃_G) d = b` that appear in every atom update cost `O(n²)`.
#[derive(Debug, Clone)]
pub struct FeaturePenalty {
    rho: f64,
    rows: usize,
    graph: Option<(DMatrix<f64>, SymmetricEigen<f64, nalgebra::Dyn>)>,
}

impl FeaturePenalty {
    /// No feature penalty on atoms of length `rows`.
    pub fn none(rows: usize) -> Self {
        Self { rho: 0.0, rows, graph: None }
    }

    /// Penalty on the first `l.size()` of `rows` coordinates.
    pub fn new(l: &GraphLaplacian, rows: usize, rho: f64) -> Result<Self> {
        if l.size() > rows {
            return Err(Error::Dimension(format!("feature graph on {} nodes for atoms of length {rows}", l.size())));
        }
        if !(rho.is_finite() && rho >= 0.0) {
            return Err(Error::InvalidArgument(format!("rho must be nonnegative, got {rho}")));
        }
        if rho == 0.0 {
            return Ok(Self::none(rows));
        }
        let m = l.matrix().clone();
        let eig = m.clone().symmetric_eigen();
        Ok(Self {
            rho,
            rows,
            graph: Some((m, eig)),
        })
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    /// `ρ dᵀ L̃ d`.
    pub fn value(&self, d: &DVector<f64>) -> f64 {
        match &self.graph {
            None => 0.0,
            Some((l, _)) => {
                let top = d.rows(0, l.nrows());
                (self.rho * top.dot(&(l * top))).max(0.0)
            }
        }
    }

    /// Solves `(s I + ρ L̃) d = b` for `s > 0`.
    pub fn solve_shifted(&self, s: f64, b: &DVector<f64>) -> DVector<f64> {
        match &self.graph {
            None => b / s,
            Some((l, eig)) => {
                let n = l.nrows();
                let mut out = b / s;
                let v = &eig.eigenvectors;
                let coeffs = v.tr_mul(&b.rows(0, n));
                let scaled = DVector::from_iterator(
                    n,
                    coeffs
                        .iter()
                        .zip(eig.eigenvalues.iter())
                        .map(|(c, &lam)| c / (s + self.rho * lam.max(0.0))),
                );
                out.rows_mut(0, n).copy_from(&(v * scaled));
                out
            }
        }
    }
}

/// Objective of one atom subproblem: `‖E - d xᵀ‖² + ρ dᵀL̃d`, without the constant `‖E‖²`.
fn atom_objective(e: &DMatrix<f64>, d: &DVector<f64>, x: &DVector<f64>, penalty: &FeaturePenalty) -> f64 {
    let etd = e.tr_mul(d);
    -2.0 * x.dot(&etd) + d.norm_squared() * x.norm_squared() + penalty.value(d)
}

/// Result of [`atom_update`].
#[derive(Debug, Clone, PartialEq)]
pub struct AtomUpdate {
    pub atom: DVector<f64>,
    pub coeffs: DVector<f64>,
}

/// Rank-one refinement of atom `current` against the restricted error `e`
/// (`rows × |ω|`, only the signals using the atom) with coefficients `x`.
///
/// Alternates twice between `d ← (‖x‖² I + ρ L̃)⁻¹ E x` (then normalized)
/// and `x ← Eᵀ d`, keeping a step only if it does not increase the restricted
/// objective. Returns `None` when `x` is zero, i.e. the atom is unused.
pub fn atom_update(
    e: &DMatrix<f64>,
    x: &DVector<f64>,
    current: &DVector<f64>,
    penalty: &FeaturePenalty,
) -> Result<Option<AtomUpdate>> {
    if e.ncols() != x.len() || e.nrows() != current.len() || e.nrows() != penalty.rows() {
        return Err(Error::Dimension(format!(
            "restricted error {}x{}, {} coefficients, atom length {}, penalty on {} rows",
            e.nrows(),
            e.ncols(),
            x.len(),
            current.len(),
            penalty.rows()
        )));
    }
    if x.iter().all(|&v| v == 0.0) {
        return Ok(None);
    }
    let mut d = current.clone();
    let mut coeffs = x.clone();
    let mut best = atom_objective(e, &d, &coeffs, penalty);
    for _ in 0..2 {
        let s = coeffs.norm_squared();
        if s == 0.0 {
            break;
        }
        let mut cand = penalty.solve_shifted(s, &(e * &coeffs));
        let norm = cand.norm();
        if !(norm.is_finite() && norm > 0.0) {
            break;
        }
        cand /= norm;
        let cand_x = e.tr_mul(&cand);
        let value = atom_objective(e, &cand, &cand_x, penalty);
        if value <= best {
            best = value;
            d = cand;
            coeffs = cand_x;
        } else {
            break;
        }
    }
    Ok(Some(AtomUpdate { atom: d, coeffs }))
}

/// What a [`dictionary_pass`] changed.
#[derive(Debug, Clone, Default)]
pub struct PassReport {
    /// Atoms with no coefficients, left untouched.
    pub unused: Vec<usize>,
}

/// `‖Ỹ - D̃X‖_F² + ρ Tr(D̃ᵀ L̃ D̃)`.
pub fn dictionary_objective(
    y: &DMatrix<f64>,
    d: &DMatrix<f64>,
    x: &DMatrix<f64>,
    penalty: &FeaturePenalty,
) -> f64 {
    let r = y - d * x;
    let smooth: f64 = d.column_iter().map(|c| penalty.value(&c.clone_owned())).sum();
    r.norm_squared() + smooth
}

/// Updates every atom in index order, with the coefficients of the signals
/// that use it. `residual` must hold `Ỹ - D̃X` on entry and is kept current.
pub fn dictionary_pass(
    d: &mut DMatrix<f64>,
    x: &mut DMatrix<f64>,
    residual: &mut DMatrix<f64>,
    penalty: &FeaturePenalty,
) -> Result<PassReport> {
    let mut report = PassReport::default();
    for k in 0..d.ncols() {
        let omega: Vec<usize> = (0..x.ncols()).filter(|&i| x[(k, i)] != 0.0).collect();
        if omega.is_empty() {
            report.unused.push(k);
            continue;
        }
        let atom = d.column(k).clone_owned();
        let xk = DVector::from_iterator(omega.len(), omega.iter().map(|&i| x[(k, i)]));
        let mut e = DMatrix::zeros(d.nrows(), omega.len());
        for (p, &i) in omega.iter().enumerate() {
            e.set_column(p, &(residual.column(i) + &atom * xk[p]));
        }
        let Some(update) = atom_update(&e, &xk, &atom, penalty)? else {
            report.unused.push(k);
            continue;
        };
        for (p, &i) in omega.iter().enumerate() {
            let c = update.coeffs[p];
            x[(k, i)] = c;
            residual.set_column(i, &(e.column(p) - &update.atom * c));
        }
        d.set_column(k, &update.atom);
    }
    Ok(report)
}

/// Index of the worst-reconstructed column among those not excluded; lowest index on ties.
pub(crate) fn worst_column(residual: &DMatrix<f64>, exclude: &[usize]) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for (i, col) in residual.column_iter().enumerate() {
        if exclude.contains(&i) {
            continue;
        }
        let e = col.norm_squared();
        if best.is_none_or(|(_, b)| e > b) {
            best = Some((i, e));
        }
    }
    best.map(|b| b.0)
}

/// Replacement for an unused or duplicated atom: the normalized training
/// column with the largest current reconstruction error.
pub fn replace_unused_atom(
    d: &DMatrix<f64>,
    k: usize,
    y: &DMatrix<f64>,
    x: &DMatrix<f64>,
) -> Result<DVector<f64>> {
    if k >= d.ncols() {
        return Err(Error::InvalidArgument(format!("atom {k} out of range")));
    }
    let residual = y - d * x;
    let c = worst_column(&residual, &[]).ok_or_else(|| Error::Dimension("no training columns".into()))?;
    let col = y.column(c);
    let norm = col.norm();
    if norm == 0.0 {
        return Err(Error::Numerical(format!("replacement column {c} is zero")));
    }
    Ok(col / norm)
}

/// Atoms `k` whose coherence with an earlier atom exceeds [`COHERENCE_LIMIT`].
pub fn coherent_atoms(d: &DMatrix<f64>) -> Vec<usize> {
    let gram = d.tr_mul(d);
    (0..d.ncols())
        .filter(|&k| (0..k).any(|j| gram[(k, j)].abs() > COHERENCE_LIMIT))
        .collect()
}
