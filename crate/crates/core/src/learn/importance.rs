use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::stats::midranks;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImportanceRanking {
    pub scores: Vec<Vec<f64>>,
    /// Per model: 1 is least important, d most; ties share the average rank.
    pub ranks: Vec<Vec<f64>>,
    pub mean_rank: Vec<f64>,
}

/// Averages per-model importance ranks.
pub fn ensemble_rank(scores: &[Vec<f64>]) -> Result<ImportanceRanking> {
    let d = scores.first().map_or(0, Vec::len);
    if scores.is_empty() || scores.iter().any(|s| s.len() != d) {
        return Err(Error::invalid("importance vectors must be non-empty and equally long"));
    }
    let ranks: Vec<Vec<f64>> = scores.iter().map(|s| midranks(s)).collect();
    let m = ranks.len() as f64;
    let mean_rank = (0..d).map(|j| ranks.iter().map(|r| r[j]).sum::<f64>() / m).collect();
    Ok(ImportanceRanking {
        scores: scores.to_vec(),
        ranks,
        mean_rank,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hand_ranked_example() {
        let r = ensemble_rank(&[vec![1.0, 2.0, 3.0], vec![3.0, 2.0, 1.0], vec![2.0, 2.0, 2.0]]).unwrap();
        assert_eq!(r.mean_rank, vec![2.0, 2.0, 2.0]);
        assert_eq!(r.ranks[2], vec![2.0, 2.0, 2.0]);
    }

    #[test]
    fn identical_scores_keep_their_rank() {
        let s = vec![0.5, 0.1, 0.9, 0.3];
        let r = ensemble_rank(&[s.clone(), s.clone(), s]).unwrap();
        assert_eq!(r.mean_rank, vec![3.0, 1.0, 4.0, 2.0]);
    }

    #[test]
    fn permutation_equivariance() {
        let a = vec![vec![0.2, 0.8, 0.5], vec![1.0, 0.0, 0.3], vec![0.4, 0.4, 0.9]];
        let perm = [2, 0, 1];
        let b: Vec<Vec<f64>> = a.iter().map(|s| perm.iter().map(|&p| s[p]).collect()).collect();
        let ra = ensemble_rank(&a).unwrap();
        let rb = ensemble_rank(&b).unwrap();
        for (i, &p) in perm.iter().enumerate() {
            assert_eq!(rb.mean_rank[i], ra.mean_rank[p]);
        }
    }
}
