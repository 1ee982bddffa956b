use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One operating point: a border is declared a step change when its score
/// is below `threshold`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RocPoint {
    pub threshold: f64,
    pub sensitivity: f64,
    pub specificity: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RocCurve {
    pub points: Vec<RocPoint>,
    /// Trapezoid area under sensitivity against `1 − specificity`.
    pub auc: f64,
}

fn check(scores: &[f64], truth: &[bool]) -> Result<(usize, usize)> {
    if scores.len() != truth.len() {
        return Err(Error::Dimension(format!("{} scores for {} labels", scores.len(), truth.len())));
    }
    let pos = truth.iter().filter(|&&t| t).count();
    let neg = truth.len() - pos;
    if pos == 0 || neg == 0 {
        return Err(Error::domain("true boundaries", "need at least one boundary and one non-boundary border"));
    }
    Ok((pos, neg))
}

/// Sensitivity and specificity at one threshold.
pub fn operating_point(scores: &[f64], truth: &[bool], threshold: f64) -> RocPoint {
    let (mut tp, mut tn, mut pos, mut neg) = (0usize, 0usize, 0usize, 0usize);
    for (&s, &t) in scores.iter().zip(truth) {
        let declared = s < threshold;
        if t {
            pos += 1;
            tp += declared as usize;
        } else {
            neg += 1;
            tn += !declared as usize;
        }
    }
    let ratio = |a: usize, b: usize| if b == 0 { f64::NAN } else { a as f64 / b as f64 };
    RocPoint { threshold, sensitivity: ratio(tp, pos), specificity: ratio(tn, neg) }
}

/// ROC curve over the thresholds `0, 0.01, …, 1` with boundary scores
/// `E[w_ik | Y]` (low score = step change).
pub fn roc_auc(scores: &[f64], truth: &[bool]) -> Result<RocCurve> {
    check(scores, truth)?;
    let points: Vec<RocPoint> = (0..=100).map(|k| operating_point(scores, truth, k as f64 / 100.0)).collect();
    let mut xy: Vec<(f64, f64)> = points.iter().map(|p| (1.0 - p.specificity, p.sensitivity)).collect();
    xy.push((0.0, 0.0));
    xy.push((1.0, 1.0));
    xy.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
    let auc = xy.windows(2).map(|w| (w[1].0 - w[0].0) * (w[1].1 + w[0].1) / 2.0).sum();
    Ok(RocCurve { points, auc })
}

/// Threshold-free AUC: the probability that a random true boundary scores
/// lower than a random non-boundary, ties counting one half.
pub fn auc_exact(scores: &[f64], truth: &[bool]) -> Result<f64> {
    let (pos, neg) = check(scores, truth)?;
    let mut idx: Vec<usize> = (0..scores.len()).collect();
    idx.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));
    // mid-ranks in descending score order, so low scores rank high
    let mut rank_sum = 0.0;
    let mut start = 0;
    while start < idx.len() {
        let mut end = start + 1;
        while end < idx.len() && scores[idx[end]] == scores[idx[start]] {
            end += 1;
        }
        let mid = (idx.len() - start) as f64 - (end - start - 1) as f64 / 2.0;
        rank_sum += idx[start..end].iter().filter(|&&i| truth[i]).count() as f64 * mid;
        start = end;
    }
    let u = rank_sum - (pos * (pos + 1)) as f64 / 2.0;
    Ok(u / (pos * neg) as f64)
}

/// Fraction of non-boundaries left undeclared at `threshold` (used when
/// there are no true step changes).
pub fn specificity(scores: &[f64], threshold: f64) -> f64 {
    if scores.is_empty() {
        return f64::NAN;
    }
    scores.iter().filter(|&&s| s >= threshold).count() as f64 / scores.len() as f64
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn toy_examples() {
        let truth = [true, true, false, false];
        assert_eq!(roc_auc(&[0.1, 0.2, 0.8, 0.9], &truth).unwrap().auc, 1.0);
        assert_eq!(roc_auc(&[0.4; 4], &truth).unwrap().auc, 0.5);
        assert_eq!(roc_auc(&[0.9, 0.8, 0.2, 0.1], &truth).unwrap().auc, 0.0);
        assert_eq!(auc_exact(&[0.1, 0.2, 0.8, 0.9], &truth).unwrap(), 1.0);
        assert_eq!(auc_exact(&[0.4; 4], &truth).unwrap(), 0.5);
        assert_eq!(roc_auc(&[0.1, 0.2], &[true, true]).unwrap_err().kind(), crate::ErrorKind::Domain);
    }

    /// Exhaustive sweep over every distinct cut point.
    fn brute_auc(scores: &[f64], truth: &[bool]) -> f64 {
        let mut wins = 0.0;
        let mut pairs = 0.0;
        for (i, &ti) in truth.iter().enumerate() {
            for (k, &tk) in truth.iter().enumerate() {
                if ti && !tk {
                    pairs += 1.0;
                    wins += if scores[i] < scores[k] {
                        1.0
                    } else if scores[i] == scores[k] {
                        0.5
                    } else {
                        0.0
                    };
                }
            }
        }
        wins / pairs
    }

    #[test]
    fn exact_auc_matches_pair_count() {
        let scores = [0.3, 0.1, 0.3, 0.7, 0.5, 0.3, 0.9];
        let truth = [true, false, false, true, false, true, false];
        assert!((auc_exact(&scores, &truth).unwrap() - brute_auc(&scores, &truth)).abs() < 1e-15);
    }

    #[test]
    fn grid_curve_has_101_points() {
        let c = roc_auc(&[0.05, 0.5, 0.95], &[true, false, false]).unwrap();
        assert_eq!(c.points.len(), 101);
        assert_eq!(c.points[0].sensitivity, 0.0);
        assert_eq!(c.points[100].specificity, 0.0);
        assert_eq!(specificity(&[0.9, 0.2, 0.7, 0.6], 0.5), 0.75);
    }
}
