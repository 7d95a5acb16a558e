//! Augmented (stacked) systems and their initialization.

use std::ops::Range;

use nalgebra::DMatrix;
use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::data::LabeledDataset;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BlockKind {
    /// `Y` over `D`.
    Data,
    /// `√α Q` over `√α A`.
    LabelConsistency,
    /// `√β H` over `√β W`.
    Classifier,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Block {
    pub kind: BlockKind,
    pub rows: Range<usize>,
    /// Square root of the block weight, applied to both `Ỹ` and `D̃` rows.
    pub scale: f64,
}

/// `Ỹ = [Y; √α Q; √β H]`, `D̃ = [D; √α A; √β W]` with jointly unit-norm
/// columns. Blocks with zero weight are left out.
#[derive(Debug, Clone)]
pub struct AugmentedSystem {
    pub y_tilde: DMatrix<f64>,
    pub d_tilde: DMatrix<f64>,
    blocks: Vec<Block>,
}

/// One optional stacked block: target rows, dictionary rows and weight.
pub struct StackedBlock<'a> {
    pub target: &'a DMatrix<f64>,
    pub dictionary: &'a DMatrix<f64>,
    pub weight: f64,
}

impl AugmentedSystem {
    pub fn assemble(
        y: &DMatrix<f64>,
        d: &DMatrix<f64>,
        label_consistency: Option<StackedBlock<'_>>,
        classifier: Option<StackedBlock<'_>>,
    ) -> Result<Self> {
        let (n, samples) = y.shape();
        let atoms = d.ncols();
        if d.nrows() != n {
            return Err(Error::Dimension(format!("dictionary has {} rows, data has {n}", d.nrows())));
        }
        let mut parts: Vec<(BlockKind, &DMatrix<f64>, &DMatrix<f64>, f64)> = vec![(BlockKind::Data, y, d, 1.0)];
        for (kind, block) in [
            (BlockKind::LabelConsistency, label_consistency),
            (BlockKind::Classifier, classifier),
        ] {
            let Some(b) = block else { continue };
            if !(b.weight.is_finite() && b.weight >= 0.0) {
                return Err(Error::InvalidArgument(format!("block weight {} must be nonnegative", b.weight)));
            }
            if b.weight == 0.0 {
                continue;
            }
            if b.target.ncols() != samples || b.dictionary.ncols() != atoms || b.target.nrows() != b.dictionary.nrows() {
                return Err(Error::Dimension(format!(
                    "{kind:?} block: target {}x{}, dictionary {}x{}",
                    b.target.nrows(),
                    b.target.ncols(),
                    b.dictionary.nrows(),
                    b.dictionary.ncols()
                )));
            }
            parts.push((kind, b.target, b.dictionary, b.weight.sqrt()));
        }
        let rows: usize = parts.iter().map(|p| p.1.nrows()).sum();
        let mut y_tilde = DMatrix::zeros(rows, samples);
        let mut d_tilde = DMatrix::zeros(rows, atoms);
        let mut blocks = Vec::with_capacity(parts.len());
        let mut start = 0;
        for (kind, target, dict, scale) in parts {
            let len = target.nrows();
            y_tilde.rows_mut(start, len).copy_from(&(target * scale));
            d_tilde.rows_mut(start, len).copy_from(&(dict * scale));
            blocks.push(Block {
                kind,
                rows: start..start + len,
                scale,
            });
            start += len;
        }
        for (k, mut col) in d_tilde.column_iter_mut().enumerate() {
            let norm = col.norm();
            if norm == 0.0 {
                return Err(Error::Numerical(format!("augmented atom {k} is zero")));
            }
            col /= norm;
        }
        Ok(Self { y_tilde, d_tilde, blocks })
    }

    pub fn blocks(&self) -> &[Block] {
        &self.blocks
    }

    pub fn block(&self, kind: BlockKind) -> Option<&Block> {
        self.blocks.iter().find(|b| b.kind == kind)
    }

    pub fn data_rows(&self) -> usize {
        self.blocks[0].rows.len()
    }

    /// Unnormalized data block of `D̃` (rows of the feature space).
    pub fn data_dictionary(&self) -> DMatrix<f64> {
        self.d_tilde.rows(0, self.data_rows()).into_owned()
    }

    /// Recovers `D` (unit-norm columns) and, when present, `W` from `D̃`.
    ///
    /// For `d̃_k = (d_k; √α a_k; √β w_k)` this returns `d_k / ‖d_k‖` and
    /// `w_k / ‖d_k‖`, so that `W x` computed from codes over the normalized
    /// `D` equals the score of the jointly normalized model.
    pub fn extract(&self) -> Result<(DMatrix<f64>, Option<DMatrix<f64>>)> {
        let mut d = self.data_dictionary();
        let mut norms = Vec::with_capacity(d.ncols());
        for (k, mut col) in d.column_iter_mut().enumerate() {
            let norm = col.norm();
            if norm <= 1e-12 {
                return Err(Error::Numerical(format!("atom {k} has a vanishing data block")));
            }
            col /= norm;
            norms.push(norm);
        }
        let w = self.block(BlockKind::Classifier).map(|b| {
            let mut w = self.d_tilde.rows(b.rows.start, b.rows.len()).into_owned() / b.scale;
            for (mut col, norm) in w.column_iter_mut().zip(&norms) {
                col /= *norm;
            }
            w
        });
        Ok((d, w))
    }
}

/// Binary atom/sample label-consistency matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct QMatrix {
    pub q: DMatrix<f64>,
    pub atom_class: Vec<usize>,
}

/// `Q_ki = 1` iff atom `k` is assigned the class of sample `i`.
pub fn build_q_matrix(ds: &LabeledDataset, atom_class: &[usize]) -> Result<QMatrix> {
    if ds.is_multi_label() {
        return Err(Error::ModeMismatch(
            "label-consistency matrix is defined for single-label data; use build_q_matrix_shared_labels".into(),
        ));
    }
    build_q_matrix_shared_labels(ds, atom_class)
}

/// `Q_ki = 1` iff atom `k`'s class is among sample `i`'s labels.
pub fn build_q_matrix_shared_labels(ds: &LabeledDataset, atom_class: &[usize]) -> Result<QMatrix> {
    let q = ds.num_classes();
    if let Some(&bad) = atom_class.iter().find(|&&c| c >= q) {
        return Err(Error::InvalidArgument(format!("atom class {bad} out of range for {q} classes")));
    }
    let h = ds.h();
    let m = DMatrix::from_fn(atom_class.len(), ds.num_samples(), |k, i| h[(atom_class[k], i)]);
    Ok(QMatrix {
        q: m,
        atom_class: atom_class.to_vec(),
    })
}

/// Splits `atoms` as evenly as possible over `classes`, in class order, with
/// the remainder going to the earliest classes.
pub fn even_atom_classes(atoms: usize, classes: usize) -> Vec<usize> {
    let base = atoms / classes;
    let extra = atoms % classes;
    (0..classes)
        .flat_map(|c| std::iter::repeat_n(c, base + usize::from(c < extra)))
        .collect()
}

/// Initial dictionary drawn from training samples.
#[derive(Debug, Clone)]
pub struct InitialDictionary {
    pub dictionary: DMatrix<f64>,
    /// Class (lowest label) of the sample each atom was drawn from.
    pub atom_class: Vec<usize>,
    pub source_columns: Vec<usize>,
}

/// Largest-remainder proportional allocation of `total` over `counts`.
fn proportional_quota(counts: &[usize], total: usize) -> Vec<usize> {
    let n: usize = counts.iter().sum();
    let exact: Vec<f64> = counts.iter().map(|&c| total as f64 * c as f64 / n as f64).collect();
    let mut quota: Vec<usize> = exact.iter().map(|e| e.floor() as usize).collect();
    let mut left = total - quota.iter().sum::<usize>();
    let mut order: Vec<usize> = (0..counts.len()).collect();
    order.sort_by(|&a, &b| {
        let fa = exact[a] - exact[a].floor();
        let fb = exact[b] - exact[b].floor();
        fb.total_cmp(&fa).then(a.cmp(&b))
    });
    for &c in order.iter().cycle() {
        if left == 0 {
            break;
        }
        if quota[c] < counts[c] {
            quota[c] += 1;
            left -= 1;
        }
    }
    quota
}

/// Picks `atoms` training columns, stratified proportionally by class
/// (lowest label for multi-label data), and normalizes them. Atoms are
/// ordered by class.
pub fn init_dictionary(ds: &LabeledDataset, atoms: usize, seed: u64) -> Result<InitialDictionary> {
    let y = ds.y();
    let candidates: Vec<Vec<usize>> = (0..ds.num_classes())
        .map(|c| {
            (0..ds.num_samples())
                .filter(|&i| ds.primary_class(i) == c && y.column(i).norm() > 0.0)
                .collect()
        })
        .collect();
    let available: usize = candidates.iter().map(Vec::len).sum();
    if atoms == 0 || atoms > available {
        return Err(Error::InvalidArgument(format!(
            "cannot draw {atoms} atoms from {available} nonzero training samples"
        )));
    }
    let counts: Vec<usize> = candidates.iter().map(Vec::len).collect();
    let quota = proportional_quota(&counts, atoms);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut source_columns = Vec::with_capacity(atoms);
    let mut atom_class = Vec::with_capacity(atoms);
    for (c, (pool, &take)) in candidates.iter().zip(&quota).enumerate() {
        let mut picked: Vec<usize> = index::sample(&mut rng, pool.len(), take).into_iter().map(|p| pool[p]).collect();
        picked.sort_unstable();
        atom_class.extend(std::iter::repeat_n(c, picked.len()));
        source_columns.extend(picked);
    }
    let mut dictionary = DMatrix::zeros(y.nrows(), atoms);
    for (k, &i) in source_columns.iter().enumerate() {
        let col = y.column(i);
        dictionary.set_column(k, &(col / col.norm()));
    }
    Ok(InitialDictionary {
        dictionary,
        atom_class,
        source_columns,
    })
}

/// Ridge map from codes to targets: `T Xᵀ (X Xᵀ + λI)⁻¹`.
pub fn init_classifier(x: &DMatrix<f64>, targets: &DMatrix<f64>, lambda: f64) -> Result<DMatrix<f64>> {
    if x.ncols() != targets.ncols() {
        return Err(Error::Dimension(format!("{} code columns, {} target columns", x.ncols(), targets.ncols())));
    }
    if !(lambda.is_finite() && lambda >= 0.0) {
        return Err(Error::InvalidArgument(format!("ridge parameter {lambda} must be nonnegative")));
    }
    let mut gram = x * x.transpose();
    for i in 0..gram.nrows() {
        gram[(i, i)] += lambda;
    }
    let rhs = x * targets.transpose();
    let chol = gram.cholesky().ok_or_else(|| {
        Error::Numerical("code Gram matrix is singular; use a positive ridge parameter".into())
    })?;
    let wt = chol.solve(&rhs);
    if wt.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numerical("ridge solve produced non-finite values; use a positive ridge parameter".into()));
    }
    Ok(wt.transpose())
}
