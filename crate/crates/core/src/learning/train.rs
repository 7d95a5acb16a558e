//! The alternating training loop shared by all variants.

use nalgebra::DMatrix;

use crate::coding::{code_smoothness, codes_from_dense, codes_to_dense, graph_regularized_coding, omp_batch};
use crate::data::LabeledDataset;
use crate::error::{Error, Result};
use crate::graph_learning::{edge_costs, learn_laplacian, sparse_edge_costs, LaplacianProblem, DEFAULT_MAX_ITERS, DEFAULT_TOL};
use crate::graphs::{feature_weights, gaussian_weights, laplacian_from_weights, resolve_width, GraphLaplacian};

use super::model::{Diagnostics, GraphKind, GraphUpdateRecord, IterationRecord, TrainedModel, Variant};
use super::system::{
    build_q_matrix, build_q_matrix_shared_labels, init_classifier, init_dictionary, AugmentedSystem, BlockKind,
    StackedBlock,
};
use super::update::{coherent_atoms, dictionary_pass, worst_column, FeaturePenalty};

/// Manifold graphs larger than this are only learned when explicitly allowed.
pub const LARGE_MANIFOLD: usize = 1500;

/// Attempts per atom before a replacement is declared failed.
const REPLACEMENT_ATTEMPTS: usize = 3;

/// Graph construction and Laplacian-learning options.
#[derive(Debug, Clone, PartialEq)]
pub struct GraphOptions {
    /// Nearest-neighbour sparsification of the feature graph; `None` keeps it dense.
    pub feature_knn: Option<usize>,
    /// Keep only manifold edges between samples that share a label.
    pub label_masked: bool,
    /// Learn the Laplacians every this many outer iterations.
    pub laplacian_every: usize,
    pub feature_learn_iters: usize,
    pub manifold_learn_iters: usize,
    pub learn_tol: f64,
    /// Permit learning a manifold graph over more than [`LARGE_MANIFOLD`] samples.
    /// The dense edge set makes each update quadratic in the sample count.
    pub allow_large_manifold: bool,
}

impl Default for GraphOptions {
    fn default() -> Self {
        Self {
            feature_knn: None,
            label_masked: false,
            laplacian_every: 1,
            feature_learn_iters: DEFAULT_MAX_ITERS,
            manifold_learn_iters: DEFAULT_MAX_ITERS,
            learn_tol: DEFAULT_TOL,
            allow_large_manifold: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub variant: Variant,
    pub hyper: crate::data::Hyperparameters,
    pub graph: GraphOptions,
    /// Ridge parameter of the classifier and label-consistency initializations.
    pub ridge: f64,
}

impl TrainConfig {
    pub fn new(variant: Variant, hyper: crate::data::Hyperparameters) -> Self {
        Self {
            variant,
            hyper,
            graph: GraphOptions::default(),
            ridge: 1.0,
        }
    }
}

/// A trained model together with the graphs it was trained against.
#[derive(Debug, Clone)]
pub struct TrainingRun {
    pub model: TrainedModel,
    pub feature_laplacian: Option<GraphLaplacian>,
    pub manifold_laplacian: Option<GraphLaplacian>,
    /// Final augmented system, before extraction.
    pub system: AugmentedSystem,
    /// Final codes over the augmented dictionary.
    pub codes: DMatrix<f64>,
}

pub fn train(ds: &LabeledDataset, config: &TrainConfig) -> Result<TrainedModel> {
    Ok(train_run(ds, config)?.model)
}

/// Manifold graph over the training samples.
pub fn manifold_laplacian(ds: &LabeledDataset, config: &TrainConfig) -> Result<GraphLaplacian> {
    let y = ds.y().matrix();
    let eps = resolve_width(y, config.hyper.epsilon)?;
    let mut w = gaussian_weights(y, eps, config.hyper.graph_knn)?;
    if config.graph.label_masked {
        w = w.mask_by_labels(ds)?;
    }
    laplacian_from_weights(&w, true)
}

/// Feature graph over the rows of the training data.
pub fn feature_laplacian(ds: &LabeledDataset, config: &TrainConfig) -> Result<GraphLaplacian> {
    let y = ds.y().matrix();
    let eps = resolve_width(&y.transpose(), config.hyper.epsilon)?;
    laplacian_from_weights(&feature_weights(y, eps, config.graph.feature_knn)?, true)
}

fn check_config(ds: &LabeledDataset, config: &TrainConfig) -> Result<()> {
    let h = &config.hyper;
    h.validate()?;
    if h.atoms > ds.num_samples() {
        return Err(Error::InvalidArgument(format!(
            "{} atoms requested from {} training samples",
            h.atoms,
            ds.num_samples()
        )));
    }
    if !(config.ridge.is_finite() && config.ridge >= 0.0) {
        return Err(Error::InvalidArgument(format!("ridge must be nonnegative, got {}", config.ridge)));
    }
    if config.graph.laplacian_every == 0 {
        return Err(Error::InvalidArgument("laplacian_every must be at least 1".into()));
    }
    if config.variant.learns_graphs()
        && h.gamma > 0.0
        && ds.num_samples() > LARGE_MANIFOLD
        && !config.graph.allow_large_manifold
    {
        return Err(Error::InvalidArgument(format!(
            "learning a manifold graph over {} samples needs allow_large_manifold (cost grows with the square of the sample count)",
            ds.num_samples()
        )));
    }
    Ok(())
}

struct Graphs {
    manifold: Option<GraphLaplacian>,
    feature: Option<GraphLaplacian>,
    penalty: FeaturePenalty,
}

struct Terms<'a> {
    system: &'a AugmentedSystem,
    graphs: &'a Graphs,
    hyper: &'a crate::data::Hyperparameters,
    learns: bool,
}

impl Terms<'_> {
    fn record(&self, iteration: usize, x: &DMatrix<f64>, replaced_atoms: usize) -> IterationRecord {
        let sys = self.system;
        let r = &sys.y_tilde - &sys.d_tilde * x;
        let block_error = |kind| {
            sys.block(kind)
                .map(|b: &super::system::Block| r.rows(b.rows.start, b.rows.len()).norm_squared())
                .unwrap_or(0.0)
        };
        let mut rec = IterationRecord {
            iteration,
            reconstruction: block_error(BlockKind::Data),
            label_consistency: block_error(BlockKind::LabelConsistency),
            classifier: block_error(BlockKind::Classifier),
            replaced_atoms,
            ..IterationRecord::default()
        };
        if let Some(lm) = &self.graphs.manifold {
            let codes = codes_from_dense(x);
            rec.manifold = self.hyper.gamma * code_smoothness(lm.matrix(), &codes, x.nrows());
            if self.learns {
                rec.manifold_frobenius = self.hyper.eta * lm.matrix().norm_squared();
            }
        }
        if let Some(lg) = &self.graphs.feature {
            rec.feature = sys
                .d_tilde
                .column_iter()
                .map(|c| self.graphs.penalty.value(&c.clone_owned()))
                .sum();
            if self.learns {
                rec.feature_frobenius = self.hyper.mu * lg.matrix().norm_squared();
            }
        }
        rec.total = rec.reconstruction
            + rec.label_consistency
            + rec.classifier
            + rec.manifold
            + rec.feature
            + rec.feature_frobenius
            + rec.manifold_frobenius;
        rec
    }
}

/// Replaces each listed atom by the normalized worst-reconstructed training
/// column, distinct columns for distinct atoms. Coherent atoms have their
/// code rows cleared first. Returns the number of atoms replaced.
fn replace_atoms(
    d: &mut DMatrix<f64>,
    x: &mut DMatrix<f64>,
    residual: &mut DMatrix<f64>,
    y: &DMatrix<f64>,
    atoms: &[usize],
) -> Result<usize> {
    let mut used: Vec<usize> = Vec::new();
    for &k in atoms {
        for i in 0..x.ncols() {
            let c = x[(k, i)];
            if c != 0.0 {
                let col = d.column(k) * c;
                let mut r = residual.column_mut(i);
                r += col;
                x[(k, i)] = 0.0;
            }
        }
        let mut failures = 0;
        loop {
            let c = worst_column(residual, &used)
                .ok_or_else(|| Error::Numerical(format!("no training column left to replace atom {k}")))?;
            used.push(c);
            let norm = y.column(c).norm();
            if norm > 0.0 && norm.is_finite() {
                d.set_column(k, &(y.column(c) / norm));
                break;
            }
            failures += 1;
            if failures == REPLACEMENT_ATTEMPTS {
                return Err(Error::Numerical(format!(
                    "atom {k}: {REPLACEMENT_ATTEMPTS} consecutive replacement candidates were zero; check for constant or empty features"
                )));
            }
        }
    }
    Ok(atoms.len())
}

/// Trains `config.variant` on `ds`, keeping the graphs and final codes.
pub fn train_run(ds: &LabeledDataset, config: &TrainConfig) -> Result<TrainingRun> {
    check_config(ds, config)?;
    let hyper = &config.hyper;
    let variant = config.variant;
    let (k, t) = (hyper.atoms, hyper.sparsity);
    let y = ds.y().matrix();
    let h = ds.h().matrix();

    let init = init_dictionary(ds, k, hyper.seed)?;
    let x0 = codes_to_dense(&omp_batch(&init.dictionary, y, t)?, k);

    let q = if variant.uses_label_consistency() && hyper.alpha > 0.0 {
        let q = if ds.is_multi_label() {
            build_q_matrix_shared_labels(ds, &init.atom_class)?
        } else {
            build_q_matrix(ds, &init.atom_class)?
        };
        let a0 = init_classifier(&x0, &q.q, config.ridge)?;
        Some((q.q, a0))
    } else {
        None
    };
    let w0 = if variant.learns_classifier() && hyper.beta > 0.0 {
        Some(init_classifier(&x0, h, config.ridge)?)
    } else {
        None
    };
    let mut system = AugmentedSystem::assemble(
        y,
        &init.dictionary,
        q.as_ref().map(|(q, a)| StackedBlock {
            target: q,
            dictionary: a,
            weight: hyper.alpha,
        }),
        w0.as_ref().map(|w| StackedBlock {
            target: h,
            dictionary: w,
            weight: hyper.beta,
        }),
    )?;
    let rows = system.y_tilde.nrows();
    let n = ds.num_features();

    let mut graphs = Graphs {
        manifold: None,
        feature: None,
        penalty: FeaturePenalty::none(rows),
    };
    if variant.uses_graphs() {
        if hyper.gamma > 0.0 {
            graphs.manifold = Some(manifold_laplacian(ds, config)?);
        }
        if hyper.rho > 0.0 {
            let lg = feature_laplacian(ds, config)?;
            graphs.penalty = FeaturePenalty::new(&lg, rows, hyper.rho)?;
            graphs.feature = Some(lg);
        }
    }
    let learns = variant.learns_graphs();

    let mut x = x0;
    let mut diagnostics = Diagnostics::default();
    let record = |system: &AugmentedSystem, graphs: &Graphs, it, x: &DMatrix<f64>, replaced| {
        Terms {
            system,
            graphs,
            hyper,
            learns,
        }
        .record(it, x, replaced)
    };
    diagnostics.iterations.push(record(&system, &graphs, 0, &x, 0));

    for it in 1..=hyper.outer_iters {
        let codes = match &graphs.manifold {
            Some(lm) => {
                graph_regularized_coding(&system.d_tilde, &system.y_tilde, lm, hyper.gamma, t, &x, hyper.inner_iters)?
                    .codes
            }
            None => omp_batch(&system.d_tilde, &system.y_tilde, t)?,
        };
        x = codes_to_dense(&codes, k);

        let mut residual = &system.y_tilde - &system.d_tilde * &x;
        let pass = dictionary_pass(&mut system.d_tilde, &mut x, &mut residual, &graphs.penalty)?;
        let mut stale = pass.unused;
        stale.extend(coherent_atoms(&system.d_tilde));
        stale.sort_unstable();
        stale.dedup();
        let replaced = replace_atoms(&mut system.d_tilde, &mut x, &mut residual, &system.y_tilde, &stale)?;

        if learns && it % config.graph.laplacian_every == 0 {
            if let Some(lg) = &graphs.feature {
                let costs = edge_costs(&system.d_tilde.rows(0, n).into_owned())?;
                let problem = LaplacianProblem {
                    costs: &costs,
                    rho: hyper.rho,
                    mu: hyper.mu,
                    nodes: n,
                };
                let start = lg.edge_weights();
                let learned = learn_laplacian(
                    &problem,
                    Some(&start),
                    config.graph.feature_learn_iters,
                    config.graph.learn_tol,
                )?;
                diagnostics.graph_updates.push(GraphUpdateRecord {
                    iteration: it,
                    graph: GraphKind::Feature,
                    before: problem.objective(&start),
                    after: problem.objective(&learned.weights),
                    solver_iterations: learned.report.iterations,
                    stationarity: learned.report.stationarity,
                });
                graphs.penalty = FeaturePenalty::new(&learned.laplacian, rows, hyper.rho)?;
                graphs.feature = Some(learned.laplacian);
            }
            if let Some(lm) = &graphs.manifold {
                let costs = sparse_edge_costs(&codes_from_dense(&x))?;
                let problem = LaplacianProblem {
                    costs: &costs,
                    rho: hyper.gamma,
                    mu: hyper.eta,
                    nodes: ds.num_samples(),
                };
                let start = lm.edge_weights();
                let learned = learn_laplacian(
                    &problem,
                    Some(&start),
                    config.graph.manifold_learn_iters,
                    config.graph.learn_tol,
                )?;
                diagnostics.graph_updates.push(GraphUpdateRecord {
                    iteration: it,
                    graph: GraphKind::Manifold,
                    before: problem.objective(&start),
                    after: problem.objective(&learned.weights),
                    solver_iterations: learned.report.iterations,
                    stationarity: learned.report.stationarity,
                });
                graphs.manifold = Some(learned.laplacian);
            }
        }
        diagnostics.iterations.push(record(&system, &graphs, it, &x, replaced));
    }

    if let Some(bad) = diagnostics.iterations.iter().find(|r| !r.total.is_finite()) {
        return Err(Error::Numerical(format!("objective became non-finite at iteration {}", bad.iteration)));
    }
    let (d, w) = system.extract()?;
    let w = match w {
        Some(w) => w,
        None => {
            let xd = codes_to_dense(&omp_batch(&d, y, t)?, k);
            init_classifier(&xd, h, config.ridge)?
        }
    };
    let mut model = TrainedModel::new(d, w, hyper.clone(), variant, ds.is_multi_label())?;
    model.diagnostics = diagnostics;
    Ok(TrainingRun {
        model,
        feature_laplacian: graphs.feature,
        manifold_laplacian: graphs.manifold,
        system,
        codes: x,
    })
}
