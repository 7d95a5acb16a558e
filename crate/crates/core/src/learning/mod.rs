//! Dictionary learning: augmented systems, atom updates, training and models.

mod model;
mod system;
mod train;
mod update;

pub use model::{Diagnostics, GraphKind, GraphUpdateRecord, IterationRecord, TrainedModel, Variant};
pub use system::{
    build_q_matrix, build_q_matrix_shared_labels, even_atom_classes, init_classifier, init_dictionary,
    AugmentedSystem, Block, BlockKind, InitialDictionary, QMatrix, StackedBlock,
};
pub use train::{
    feature_laplacian, manifold_laplacian, train, train_run, GraphOptions, TrainConfig, TrainingRun, LARGE_MANIFOLD,
};
pub use update::{
    atom_update, coherent_atoms, dictionary_objective, dictionary_pass, replace_unused_atom, AtomUpdate,
    FeaturePenalty, PassReport, COHERENCE_LIMIT,
};
