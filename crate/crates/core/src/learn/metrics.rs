//! Classifier evaluation: confusion-matrix metrics at a threshold, ROC
//! curve construction, and AUC via the Mann-Whitney rank statistic.

use serde::{Deserialize, Serialize};

use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Confusion {
    pub tp: usize,
    pub fp: usize,
    pub tn: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
}

impl Confusion {
    pub fn total(&self) -> usize {
        self.tp + self.fp + self.tn + self.fn_
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RocPoint<F> {
    pub fpr: F,
    pub tpr: F,
    pub threshold: F,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport<F> {
    pub accuracy: F,
    pub precision: F,
    pub recall: F,
    pub f1: F,
    pub roc_auc: F,
    pub threshold: F,
    pub confusion: Confusion,
    #[serde(skip)]
    pub roc_points: Vec<RocPoint<F>>,
    /// Degenerate conditions (e.g. zero positive predictions) that
    /// forced a metric to its 0 convention.
    pub notes: Vec<String>,
}

/// AUC as the Mann-Whitney statistic: the probability a random positive
/// outscores a random negative, ties counting one half. Returns 0.5
/// when either class is absent.
pub fn auc_rank<F: Scalar>(scores: &[F], labels: &[bool]) -> F {
    let n = scores.len();
    let pos = labels.iter().filter(|&&l| l).count();
    let neg = n - pos;
    if pos == 0 || neg == 0 {
        return F::half();
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| scores[a].partial_cmp(&scores[b]).unwrap());

    // Average ranks within tie groups (1-based ranks).
    let mut rank_sum_pos = F::zero();
    let mut i = 0;
    while i < n {
        let mut j = i;
        while j < n && scores[order[j]] == scores[order[i]] {
            j += 1;
        }
        // Ranks i+1 ..= j share the average (i + j + 1) / 2.
        let avg = F::from_usize_lit(i + j + 1) * F::half();
        for &idx in &order[i..j] {
            if labels[idx] {
                rank_sum_pos = rank_sum_pos + avg;
            }
        }
        i = j;
    }
    let u = rank_sum_pos
        - F::from_usize_lit(pos) * F::from_usize_lit(pos + 1) * F::half();
    u / (F::from_usize_lit(pos) * F::from_usize_lit(neg))
}

/// ROC points by threshold sweep: one point per distinct score,
/// prefixed by (0, 0, +inf). The point at threshold t classifies
/// scores >= t as positive. Degenerate label sets still produce the
/// sweep with the absent class's rate fixed at 0.
pub fn roc_curve<F: Scalar>(scores: &[F], labels: &[bool]) -> Vec<RocPoint<F>> {
    let n = scores.len();
    let pos = labels.iter().filter(|&&l| l).count();
    let neg = n - pos;
    let pos_f = F::from_usize_lit(pos.max(1));
    let neg_f = F::from_usize_lit(neg.max(1));

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| scores[b].partial_cmp(&scores[a]).unwrap());

    let mut points =
        vec![RocPoint { fpr: F::zero(), tpr: F::zero(), threshold: F::infinity() }];
    let mut tp = 0usize;
    let mut fp = 0usize;
    let mut i = 0;
    while i < n {
        let t = scores[order[i]];
        while i < n && scores[order[i]] == t {
            if labels[order[i]] {
                tp += 1;
            } else {
                fp += 1;
            }
            i += 1;
        }
        points.push(RocPoint {
            fpr: F::from_usize_lit(fp) / neg_f,
            tpr: F::from_usize_lit(tp) / pos_f,
            threshold: t,
        });
    }
    points
}

/// Area under the piecewise-linear curve through `points` (assumed
/// sorted by fpr, as produced by [`roc_curve`]).
pub fn trapezoid_auc<F: Scalar>(points: &[RocPoint<F>]) -> F {
    let mut area = F::zero();
    for pair in points.windows(2) {
        let width = pair[1].fpr - pair[0].fpr;
        let height = (pair[1].tpr + pair[0].tpr) * F::half();
        area = area + width * height;
    }
    area
}

/// Threshold metrics plus ROC/AUC. Predictions are positive when
/// score >= threshold.
pub fn evaluate<F: Scalar>(scores: &[F], labels: &[bool], threshold: F) -> EvalReport<F> {
    let mut confusion = Confusion::default();
    for (score, &label) in scores.iter().zip(labels) {
        let predicted = *score >= threshold;
        match (predicted, label) {
            (true, true) => confusion.tp += 1,
            (true, false) => confusion.fp += 1,
            (false, false) => confusion.tn += 1,
            (false, true) => confusion.fn_ += 1,
        }
    }
    let mut notes = Vec::new();
    let ratio = |num: usize, den: usize| F::from_usize_lit(num) / F::from_usize_lit(den);
    let accuracy = ratio(confusion.tp + confusion.tn, confusion.total().max(1));
    let precision = if confusion.tp + confusion.fp == 0 {
        notes.push("no positive predictions; precision reported as 0".to_string());
        F::zero()
    } else {
        ratio(confusion.tp, confusion.tp + confusion.fp)
    };
    let recall = if confusion.tp + confusion.fn_ == 0 {
        notes.push("no positive labels; recall reported as 0".to_string());
        F::zero()
    } else {
        ratio(confusion.tp, confusion.tp + confusion.fn_)
    };
    let f1 = if precision + recall == F::zero() {
        F::zero()
    } else {
        F::two() * precision * recall / (precision + recall)
    };
    let pos = labels.iter().filter(|&&l| l).count();
    if pos == 0 || pos == labels.len() {
        notes.push("single-class labels; AUC reported as 0.5".to_string());
    }
    EvalReport {
        accuracy,
        precision,
        recall,
        f1,
        roc_auc: auc_rank(scores, labels),
        threshold,
        confusion,
        roc_points: roc_curve(scores, labels),
        notes,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Direct pairwise concordance count, the O(n^2) definition.
    fn pairwise_auc(scores: &[f64], labels: &[bool]) -> f64 {
        let mut concordant = 0.0;
        let mut pairs = 0.0;
        for (i, &si) in scores.iter().enumerate() {
            if !labels[i] {
                continue;
            }
            for (j, &sj) in scores.iter().enumerate() {
                if labels[j] {
                    continue;
                }
                pairs += 1.0;
                if si > sj {
                    concordant += 1.0;
                } else if si == sj {
                    concordant += 0.5;
                }
            }
        }
        concordant / pairs
    }

    #[test]
    fn worked_example() {
        let scores = [0.1f64, 0.4, 0.35, 0.8];
        let labels = [false, false, true, true];
        assert!((auc_rank(&scores, &labels) - 0.75).abs() < 1e-15);
    }

    #[test]
    fn perfect_separation() {
        let scores = [0.9, 0.8, 0.2, 0.1];
        let labels = [true, true, false, false];
        assert_eq!(auc_rank(&scores, &labels), 1.0);
        let report = evaluate(&scores, &labels, 0.5);
        assert_eq!(report.f1, 1.0);
        assert_eq!(report.accuracy, 1.0);
    }

    #[test]
    fn all_scores_tied() {
        let scores = [0.5f64; 6];
        let labels = [true, false, true, false, false, true];
        assert!((auc_rank(&scores, &labels) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn rank_equals_pairwise_on_random_sets() {
        let mut state = 12345u64;
        let mut next = || {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1);
            (state >> 11) as f64 / (1u64 << 53) as f64
        };
        for round in 0..50 {
            let n = 5 + (round * 7) % 120;
            let mut scores = Vec::with_capacity(n);
            let mut labels = Vec::with_capacity(n);
            for _ in 0..n {
                // Quantized scores force plenty of ties.
                scores.push((next() * 8.0).floor() / 8.0);
                labels.push(next() < 0.4);
            }
            if !labels.contains(&true) || !labels.contains(&false) {
                continue;
            }
            let rank = auc_rank(&scores, &labels);
            let pair = pairwise_auc(&scores, &labels);
            assert!((rank - pair).abs() < 1e-12, "round {round}: {rank} vs {pair}");
            let trap = trapezoid_auc(&roc_curve(&scores, &labels));
            assert!((trap - pair).abs() < 1e-12, "round {round}: {trap} vs {pair}");
        }
    }

    #[test]
    fn roc_endpoints_and_monotonicity() {
        let scores = [0.1f64, 0.7, 0.7, 0.3, 0.9];
        let labels = [false, true, false, true, true];
        let points = roc_curve(&scores, &labels);
        let first = points.first().unwrap();
        assert_eq!((first.fpr, first.tpr), (0.0, 0.0));
        assert!(first.threshold.is_infinite());
        let last = points.last().unwrap();
        assert_eq!((last.fpr, last.tpr), (1.0, 1.0));
        assert_eq!(last.threshold, 0.1);
        for pair in points.windows(2) {
            assert!(pair[1].fpr >= pair[0].fpr);
            assert!(pair[1].tpr >= pair[0].tpr);
            assert!(pair[1].threshold < pair[0].threshold);
        }
    }

    #[test]
    fn monotone_transform_invariance() {
        let scores = [0.05f64, 0.2, 0.2, 0.6, 0.93];
        let labels = [false, true, false, true, true];
        let transformed: Vec<f64> = scores.iter().map(|s| (4.0 * s).exp()).collect();
        assert!(
            (auc_rank(&scores, &labels) - auc_rank(&transformed, &labels)).abs() < 1e-15
        );
        let a: Vec<(f64, f64)> = roc_curve(&scores, &labels)
            .iter()
            .map(|p| (p.fpr, p.tpr))
            .collect();
        let b: Vec<(f64, f64)> = roc_curve(&transformed, &labels)
            .iter()
            .map(|p| (p.fpr, p.tpr))
            .collect();
        assert_eq!(a, b);
    }

    #[test]
    fn confusion_sums_and_threshold_rule() {
        let scores = [0.2, 0.5, 0.8, 0.4];
        let labels = [false, true, true, false];
        let report = evaluate(&scores, &labels, 0.5);
        assert_eq!(report.confusion.total(), 4);
        // 0.5 >= 0.5 counts as a positive prediction.
        assert_eq!(report.confusion.tp, 2);
        assert_eq!(report.confusion.fp, 0);
        assert_eq!(report.precision, 1.0);
        assert_eq!(report.recall, 1.0);
    }

    #[test]
    fn no_positive_predictions_flagged() {
        let scores = [0.1, 0.2];
        let labels = [true, false];
        let report = evaluate(&scores, &labels, 0.9);
        assert_eq!(report.precision, 0.0);
        assert!(report.notes.iter().any(|n| n.contains("no positive predictions")));
    }
}
