use crate::error::{Error, Result};
use crate::stats::midranks;

/// Index of the largest entry; ties go to the lowest index.
pub fn argmax(p: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in p.iter().enumerate() {
        if v > p[best] {
            best = i;
        }
    }
    best
}

pub fn accuracy(y_true: &[usize], y_pred: &[usize]) -> f64 {
    if y_true.is_empty() {
        return f64::NAN;
    }
    let hits = y_true.iter().zip(y_pred).filter(|(a, b)| a == b).count();
    hits as f64 / y_true.len() as f64
}

/// F1 of `positive` against the rest; 0 when there are no true positives.
pub fn f_score(y_true: &[usize], y_pred: &[usize], positive: usize) -> f64 {
    let (mut tp, mut fp, mut fn_) = (0u64, 0u64, 0u64);
    for (&t, &p) in y_true.iter().zip(y_pred) {
        match (t == positive, p == positive) {
            (true, true) => tp += 1,
            (false, true) => fp += 1,
            (true, false) => fn_ += 1,
            _ => {}
        }
    }
    if tp == 0 {
        return 0.0;
    }
    2.0 * tp as f64 / (2 * tp + fp + fn_) as f64
}

/// Unweighted mean of the per-class F1 over `n_classes` classes.
pub fn macro_f(y_true: &[usize], y_pred: &[usize], n_classes: usize) -> f64 {
    (0..n_classes).map(|c| f_score(y_true, y_pred, c)).sum::<f64>() / n_classes as f64
}

/// Probability that a random positive (label 1) outscores a random negative, ties counting ½.
pub fn auroc(y_true: &[usize], scores: &[f64]) -> Result<f64> {
    if y_true.len() != scores.len() {
        return Err(Error::DimensionMismatch {
            expected: y_true.len(),
            found: scores.len(),
        });
    }
    let pos = y_true.iter().filter(|&&y| y == 1).count();
    let neg = y_true.len() - pos;
    if pos == 0 || neg == 0 {
        return Err(Error::invalid("AUROC needs both classes present"));
    }
    if scores.iter().any(|s| s.is_nan()) {
        return Err(Error::invalid("AUROC scores contain NaN"));
    }
    let ranks = midranks(scores);
    let r: f64 = ranks.iter().zip(y_true).filter(|(_, &y)| y == 1).map(|(r, _)| r).sum();
    let (p, n) = (pos as f64, neg as f64);
    Ok((r - p * (p + 1.0) / 2.0) / (p * n))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::rng;
    use rand::Rng;

    #[test]
    fn f_score_examples() {
        // TP=2, FP=1, FN=1
        assert!((f_score(&[1, 1, 1, 0, 0], &[1, 1, 0, 1, 0], 1) - 2.0 / 3.0).abs() < 1e-15);
        assert_eq!(f_score(&[1, 0, 1], &[1, 0, 1], 1), 1.0);
        assert_eq!(f_score(&[1, 0, 1], &[0, 0, 0], 1), 0.0);
    }

    #[test]
    fn auroc_examples() {
        assert_eq!(auroc(&[0, 1], &[0.1, 0.9]).unwrap(), 1.0);
        assert_eq!(auroc(&[0, 1, 0, 1], &[0.3; 4]).unwrap(), 0.5);
        assert!(auroc(&[1, 1], &[0.1, 0.2]).is_err());
    }

    #[test]
    fn auroc_matches_pair_counting() {
        let mut r = rng(41);
        for n in [6, 50, 200] {
            let y: Vec<usize> = (0..n).map(|i| if i < 2 { i } else { r.random_range(0..2) }).collect();
            let s: Vec<f64> = (0..n).map(|_| (r.random_range(0..10) as f64) / 10.0).collect();
            let mut wins = 0.0;
            let mut pairs = 0.0;
            for i in 0..n {
                for j in 0..n {
                    if y[i] == 1 && y[j] == 0 {
                        pairs += 1.0;
                        wins += if s[i] > s[j] { 1.0 } else if s[i] == s[j] { 0.5 } else { 0.0 };
                    }
                }
            }
            assert!((auroc(&y, &s).unwrap() - wins / pairs).abs() <= 1e-12);
        }
    }

    #[test]
    fn argmax_ties_low() {
        assert_eq!(argmax(&[0.3, 0.3, 0.2]), 0);
        assert_eq!(argmax(&[0.1, 0.5, 0.5]), 1);
    }

    #[test]
    fn argmax_is_shift_invariant() {
        let p = [0.2, 1.7, -0.4];
        let shifted: Vec<f64> = p.iter().map(|v| v + 11.0).collect();
        assert_eq!(argmax(&p), argmax(&shifted));
    }
}
