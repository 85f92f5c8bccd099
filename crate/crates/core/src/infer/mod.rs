//! Classifiers and blind source separation used by the pipelines.

mod cnn;
mod forest;
mod fuzzy;
mod ica;
mod knn;
pub mod linalg;
mod mlp;
mod svm;

use serde::{Deserialize, Serialize};

pub use cnn::{
    argmax_first, cnn_forward, conv1d_block, qcnn_forward, BatchNorm, BlockCache, Cnn1dModel, CnnShape, ConvBlock, QCnnModel, QConvBlock,
    QDense, QLayer, Tensor2,
};
pub use forest::{forest_predict, DecisionTree, ForestModel, TreeNode};
pub use fuzzy::{rp_classify, rp_features, BeatClass, FuzzyRule, RpFeature, RuleSet, Trapezoid};
pub use ica::{fastica_unmix, IcaOptions, IcaResult};
pub use knn::{knn_fear_predict, partial_select_k, KnnTrainingSet, DEFAULT_TRAINING_POINTS};
pub use mlp::{mlp_forward, Activation, DenseLayer};
pub use svm::{svm_predict, SvmKernel, SvmModel};

/// Output of a binary classifier: the raw score (decision value,
/// probability or fraction) and the class it implies.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BinaryDecision {
    pub score: f64,
    pub positive: bool,
}
