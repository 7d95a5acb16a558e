use nalgebra::DMatrix;
use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use super::{ColRole, DataMatrix, LabeledDataset, RowRole};
use crate::error::{Error, Result};

/// Output of [`generate_synthetic`].
#[derive(Debug, Clone)]
pub struct SyntheticData {
    pub dataset: LabeledDataset,
    /// Ground-truth dictionary, `n × (q · atoms_per_class)`, class blocks in order.
    pub dictionary: DataMatrix,
    /// Ground-truth codes; `Y = dictionary · codes + noise`.
    pub codes: DMatrix<f64>,
    pub atoms_per_class: usize,
}

/// Draws a labelled dataset from `q` disjoint class sub-dictionaries.
///
/// Each class owns `2T` unit-norm random atoms (orthonormal across all classes
/// when `q · 2T ≤ n`). Sample `i` belongs to class `i mod q` and combines `T`
/// distinct atoms of its class with coefficients drawn from `[0.5, 1.5]`,
/// plus i.i.d. Gaussian noise of standard deviation
/// `noise_sigma`. Samples are drawn sequentially from one seeded stream, so a
/// larger `samples` count extends a smaller one with the same seed.
pub fn generate_synthetic(
    classes: usize,
    features: usize,
    samples: usize,
    sparsity: usize,
    noise_sigma: f64,
    seed: u64,
) -> Result<SyntheticData> {
    if classes == 0 || features == 0 || sparsity == 0 {
        return Err(Error::InvalidArgument(
            "classes, features and sparsity must be positive".into(),
        ));
    }
    if samples == 0 || samples % classes != 0 {
        return Err(Error::InvalidArgument(format!(
            "sample count {samples} is not a positive multiple of {classes} classes"
        )));
    }
    if !(noise_sigma.is_finite() && noise_sigma >= 0.0) {
        return Err(Error::InvalidArgument(format!("noise_sigma {noise_sigma} must be nonnegative")));
    }
    let per_class = 2 * sparsity;
    let total = classes * per_class;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let gaussian = DMatrix::from_fn(features, total, |_, _| rng.sample::<f64, _>(StandardNormal));
    let mut dictionary = if total <= features {
        gaussian.qr().q()
    } else {
        gaussian
    };
    for mut col in dictionary.column_iter_mut() {
        let norm = col.norm();
        col /= norm;
    }

    let mut y = DMatrix::zeros(features, samples);
    let mut codes = DMatrix::zeros(total, samples);
    let mut labels = Vec::with_capacity(samples);
    for i in 0..samples {
        let class = i % classes;
        let mut picked = index::sample(&mut rng, per_class, sparsity).into_vec();
        picked.sort_unstable();
        for atom in picked {
            codes[(class * per_class + atom, i)] = rng.random_range(0.5..1.5);
        }
        let mut col = &dictionary * codes.column(i);
        for v in col.iter_mut() {
            *v += noise_sigma * rng.sample::<f64, _>(StandardNormal);
        }
        y.set_column(i, &col);
        labels.push(vec![class]);
    }

    let dataset = LabeledDataset::from_label_sets(DataMatrix::samples(y)?, &labels, classes, false)?;
    Ok(SyntheticData {
        dataset,
        dictionary: DataMatrix::new(dictionary, RowRole::Features, ColRole::Atoms)?,
        codes,
        atoms_per_class: per_class,
    })
}
