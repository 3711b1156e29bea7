//! Cluster agreement and subgroup characterization statistics.

mod agreement;
mod heterogeneity;
mod hypothesis;

pub use agreement::{
    adjusted_rand_index, agreement, agreement_matrix, align_labels, cohen_kappa, confusion,
    AgreementReport,
};
pub use heterogeneity::{heterogeneity_summary, highlight_both_medians, median, Comparison, HeterogeneityRow};
pub use hypothesis::{chi_square, midranks, rank_test, rank_test_exact, rank_test_normal, ChiSquare};
