//! Supervised learners, evaluation metrics and importance ranking.

mod binning;
mod forest;
mod gbdt;
mod importance;
mod logistic;
mod metrics;
mod split;
mod tree;

pub use binning::{BinnedMatrix, MAX_BINS};
pub use forest::{train_forest, ForestConfig, ForestModel};
pub use gbdt::{train_gbdt, GbdtConfig, GbdtModel};
pub use importance::{ensemble_rank, ImportanceRanking};
pub use logistic::{logistic_objective, train_logreg, LogisticConfig, LogisticModel};
pub use metrics::{accuracy, argmax, auroc, f_score, macro_f};
pub use split::{train_test_split, Split};
pub use tree::{DecisionTree, Node};

use crate::domain::MatrixView;
use crate::error::{Error, Result};

/// Shared interface of the fitted models.
pub trait Classifier {
    fn n_features(&self) -> usize;
    fn n_classes(&self) -> usize;
    /// One probability row per input row; rows sum to 1.
    fn predict_proba(&self, x: MatrixView<'_>) -> Result<Vec<Vec<f64>>>;
    /// Non-negative score per feature; unused features score 0.
    fn feature_importance(&self) -> Vec<f64>;

    fn predict(&self, x: MatrixView<'_>) -> Result<Vec<usize>> {
        Ok(self.predict_proba(x)?.iter().map(|p| argmax(p)).collect())
    }
}

pub(crate) fn check_dims(expected: usize, x: MatrixView<'_>) -> Result<()> {
    if x.n_cols() != expected {
        return Err(Error::DimensionMismatch {
            expected,
            found: x.n_cols(),
        });
    }
    Ok(())
}

pub(crate) fn check_training(x: MatrixView<'_>, y: &[usize]) -> Result<()> {
    if y.len() != x.n_rows() {
        return Err(Error::DimensionMismatch {
            expected: x.n_rows(),
            found: y.len(),
        });
    }
    if y.is_empty() {
        return Err(Error::invalid("cannot train on zero rows"));
    }
    for i in 0..x.n_rows() {
        if x.row(i).iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid(format!("row {i} has a non-finite feature")));
        }
    }
    Ok(())
}
