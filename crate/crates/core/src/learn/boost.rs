//! Gradient-boosted trees over logistic loss, in two flavors: classic
//! first-order boosting (trees fit to residuals, leaf values by a
//! one-step line search) and second-order regularized boosting
//! (split gain and leaf values from gradient/hessian sums).

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::scalar::Scalar;

use super::tree::{Node, Tree};
use super::LearnError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoostOrder {
    First,
    Second,
}

impl BoostOrder {
    pub fn parse(s: &str) -> Option<BoostOrder> {
        match s {
            "first" => Some(BoostOrder::First),
            "second" => Some(BoostOrder::Second),
            _ => None,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            BoostOrder::First => "first",
            BoostOrder::Second => "second",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoostParams<F> {
    pub n_trees: usize,
    pub learning_rate: F,
    pub max_depth: usize,
    pub order: BoostOrder,
    /// L2 penalty on leaf values (second order).
    pub lambda: F,
    /// Per-split gain penalty (second order).
    pub gamma: F,
    /// Minimum child mass: hessian sum for second order, row count for
    /// first order.
    pub min_child_weight: F,
    /// Row fraction per tree; 1.0 disables sampling.
    pub subsample: F,
    pub seed: u64,
}

impl<F: Scalar> Default for BoostParams<F> {
    fn default() -> Self {
        BoostParams {
            n_trees: 300,
            learning_rate: F::from_f64_lit(0.1),
            max_depth: 4,
            order: BoostOrder::Second,
            lambda: F::one(),
            gamma: F::zero(),
            min_child_weight: F::one(),
            subsample: F::one(),
            seed: 42,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoostedModel<F> {
    pub params: BoostParams<F>,
    /// Log-odds of the training positive rate; the additive starting
    /// point.
    pub base_score: F,
    pub trees: Vec<Tree<F>>,
    pub feature_schema: Vec<String>,
}

impl<F: Scalar> BoostedModel<F> {
    /// Raw additive score (log-odds) before the sigmoid.
    pub fn decision_margin(&self, row: &[F]) -> F {
        let mut z = self.base_score;
        for tree in &self.trees {
            z = z + self.params.learning_rate * tree.score(row);
        }
        z
    }

    pub fn predict_proba(&self, row: &[F]) -> Result<F, LearnError> {
        if row.len() != self.feature_schema.len() {
            return Err(LearnError::SchemaMismatch {
                expected: self.feature_schema.len(),
                got: row.len(),
            });
        }
        Ok(self.decision_margin(row).sigmoid())
    }
}

/// Per-node statistics the two orders aggregate: g and h are gradient
/// and hessian for second order, residual and hessian for first.
#[derive(Clone, Copy)]
struct Stats<F> {
    g: F,
    h: F,
    n: usize,
}

impl<F: Scalar> Stats<F> {
    fn zero() -> Self {
        Stats { g: F::zero(), h: F::zero(), n: 0 }
    }

    fn add(&mut self, g: F, h: F) {
        self.g = self.g + g;
        self.h = self.h + h;
        self.n += 1;
    }

    fn plus(mut self, other: Stats<F>) -> Self {
        self.g = self.g + other.g;
        self.h = self.h + other.h;
        self.n += other.n;
        self
    }
}

struct Objective<F> {
    order: BoostOrder,
    lambda: F,
    gamma: F,
    min_child_weight: F,
}

impl<F: Scalar> Objective<F> {
    fn child_ok(&self, s: &Stats<F>) -> bool {
        if s.n == 0 {
            return false;
        }
        match self.order {
            BoostOrder::Second => s.h >= self.min_child_weight,
            BoostOrder::First => F::from_usize_lit(s.n) >= self.min_child_weight,
        }
    }

    /// Quality of a node if kept as one leaf; gains are differences of
    /// these.
    fn node_score(&self, s: &Stats<F>) -> F {
        match self.order {
            BoostOrder::Second => s.g * s.g / (s.h + self.lambda),
            // Variance-reduction form for residual fitting.
            BoostOrder::First => s.g * s.g / F::from_usize_lit(s.n),
        }
    }

    fn gain(&self, parent: &Stats<F>, left: &Stats<F>, right: &Stats<F>) -> F {
        let raw = self.node_score(left) + self.node_score(right) - self.node_score(parent);
        match self.order {
            BoostOrder::Second => F::half() * raw - self.gamma,
            BoostOrder::First => raw,
        }
    }

    fn leaf_value(&self, s: &Stats<F>) -> F {
        match self.order {
            BoostOrder::Second => -s.g / (s.h + self.lambda),
            BoostOrder::First => s.g / s.h.max(F::from_f64_lit(1e-16)),
        }
    }
}

struct BestSplit<F> {
    feature: usize,
    threshold: F,
    missing_goes_left: bool,
    gain: F,
}

fn best_split<F: Scalar>(
    x: &[Vec<F>],
    g: &[F],
    h: &[F],
    indices: &[usize],
    n_features: usize,
    objective: &Objective<F>,
) -> Option<BestSplit<F>> {
    let mut parent = Stats::zero();
    for &i in indices {
        parent.add(g[i], h[i]);
    }
    let mut best: Option<BestSplit<F>> = None;

    for feature in 0..n_features {
        let mut present: Vec<(F, usize)> = Vec::with_capacity(indices.len());
        let mut missing = Stats::zero();
        for &i in indices {
            let v = x[i][feature];
            if v.is_nan() {
                missing.add(g[i], h[i]);
            } else {
                present.push((v, i));
            }
        }
        if present.is_empty() {
            continue;
        }
        present.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());

        let mut left = Stats::zero();
        for pos in 0..present.len() {
            let (v, i) = present[pos];
            left.add(g[i], h[i]);
            let last = pos + 1 == present.len();
            let threshold = if last {
                if missing.n == 0 {
                    continue;
                }
                v
            } else if v < present[pos + 1].0 {
                (v + present[pos + 1].0) * F::half()
            } else {
                continue;
            };

            let mut present_right = parent;
            present_right.g = present_right.g - missing.g - left.g;
            present_right.h = present_right.h - missing.h - left.h;
            present_right.n = present_right.n - missing.n - left.n;

            for missing_goes_left in [true, false] {
                let (l, r) = if missing_goes_left {
                    (left.plus(missing), present_right)
                } else {
                    (left, present_right.plus(missing))
                };
                if !objective.child_ok(&l) || !objective.child_ok(&r) {
                    continue;
                }
                let gain = objective.gain(&parent, &l, &r);
                if gain <= F::zero() {
                    continue;
                }
                let better = best.as_ref().map(|b| gain > b.gain).unwrap_or(true);
                if better {
                    best = Some(BestSplit { feature, threshold, missing_goes_left, gain });
                }
            }
        }
    }
    best
}

fn grow<F: Scalar>(
    x: &[Vec<F>],
    g: &[F],
    h: &[F],
    indices: &[usize],
    depth: usize,
    n_features: usize,
    max_depth: usize,
    objective: &Objective<F>,
    nodes: &mut Vec<Node<F>>,
) -> usize {
    let mut stats = Stats::zero();
    for &i in indices {
        stats.add(g[i], h[i]);
    }
    let split = if depth >= max_depth {
        None
    } else {
        best_split(x, g, h, indices, n_features, objective)
    };
    let Some(split) = split else {
        nodes.push(Node::Leaf { value: objective.leaf_value(&stats) });
        return nodes.len() - 1;
    };

    let (mut left_idx, mut right_idx) = (Vec::new(), Vec::new());
    for &i in indices {
        let v = x[i][split.feature];
        let goes_left = if v.is_nan() { split.missing_goes_left } else { v <= split.threshold };
        if goes_left {
            left_idx.push(i);
        } else {
            right_idx.push(i);
        }
    }
    let at = nodes.len();
    nodes.push(Node::Split {
        feature: split.feature,
        threshold: split.threshold,
        missing_goes_left: split.missing_goes_left,
        left: 0,
        right: 0,
    });
    let left = grow(x, g, h, &left_idx, depth + 1, n_features, max_depth, objective, nodes);
    let right = grow(x, g, h, &right_idx, depth + 1, n_features, max_depth, objective, nodes);
    if let Node::Split { left: l, right: r, .. } = &mut nodes[at] {
        *l = left;
        *r = right;
    }
    at
}

pub fn train_boosted<F: Scalar>(
    x: &[Vec<F>],
    y: &[bool],
    feature_schema: Vec<String>,
    params: BoostParams<F>,
) -> Result<BoostedModel<F>, LearnError> {
    if x.is_empty() {
        return Err(LearnError::EmptyDataset);
    }
    let n = x.len();
    let positives = y.iter().filter(|&&v| v).count();
    if positives == 0 || positives == n {
        return Err(LearnError::SingleClass);
    }
    let n_features = feature_schema.len();
    let base_score = (F::from_usize_lit(positives) / F::from_usize_lit(n)).logit();
    let objective = Objective {
        order: params.order,
        lambda: params.lambda,
        gamma: params.gamma,
        min_child_weight: params.min_child_weight,
    };

    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let subsampling = params.subsample < F::one();
    let sample_size = if subsampling {
        let k = (F::from_usize_lit(n) * params.subsample)
            .floor()
            .to_f64()
            .unwrap_or(1.0) as usize;
        k.max(1)
    } else {
        n
    };

    let mut margins = vec![base_score; n];
    let mut g = vec![F::zero(); n];
    let mut h = vec![F::zero(); n];
    let mut trees = Vec::with_capacity(params.n_trees);

    for _ in 0..params.n_trees {
        let rows: Vec<usize> = if subsampling {
            let mut picked = rand::seq::index::sample(&mut rng, n, sample_size).into_vec();
            picked.sort_unstable();
            picked
        } else {
            (0..n).collect()
        };
        for &i in &rows {
            let p = margins[i].sigmoid();
            let target = if y[i] { F::one() } else { F::zero() };
            match params.order {
                // Gradient / hessian of the logistic loss.
                BoostOrder::Second => {
                    g[i] = p - target;
                    h[i] = p * (F::one() - p);
                }
                // Residual to fit; hessian kept for the leaf line search.
                BoostOrder::First => {
                    g[i] = target - p;
                    h[i] = p * (F::one() - p);
                }
            }
        }
        let mut nodes = Vec::new();
        grow(
            x,
            &g,
            &h,
            &rows,
            0,
            n_features,
            params.max_depth,
            &objective,
            &mut nodes,
        );
        let tree = Tree { nodes };
        for i in 0..n {
            margins[i] = margins[i] + params.learning_rate * tree.score(&x[i]);
        }
        trees.push(tree);
    }

    Ok(BoostedModel { params, base_score, trees, feature_schema })
}

/// Mean logistic loss of margins against labels; used by tests to trace
/// the optimization.
pub fn mean_logloss<F: Scalar>(margins: &[F], y: &[bool]) -> F {
    let mut total = F::zero();
    for (z, &label) in margins.iter().zip(y) {
        let softplus = if *z > F::zero() { *z + (-*z).exp().ln_1p() } else { z.exp().ln_1p() };
        total = total + softplus - if label { *z } else { F::zero() };
    }
    total / F::from_usize_lit(margins.len())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::learn::metrics::auc_rank;
    use rand::Rng;

    fn schema(n: usize) -> Vec<String> {
        (0..n).map(|i| format!("f{i}")).collect()
    }

    /// Two Gaussian-ish blobs separated along both axes.
    fn blobs(n: usize, seed: u64) -> (Vec<Vec<f64>>, Vec<bool>) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut x = Vec::with_capacity(n);
        let mut y = Vec::with_capacity(n);
        for i in 0..n {
            let label = i % 2 == 0;
            let center = if label { 1.5 } else { -1.5 };
            let gauss = |rng: &mut ChaCha8Rng| {
                let sum: f64 = (0..12).map(|_| rng.gen::<f64>()).sum();
                sum - 6.0
            };
            x.push(vec![center + gauss(&mut rng), -center + gauss(&mut rng)]);
            y.push(label);
        }
        (x, y)
    }

    #[test]
    fn zero_trees_predicts_base_rate() {
        let (x, y) = blobs(64, 1);
        let params = BoostParams { n_trees: 0, ..BoostParams::default() };
        let model = train_boosted(&x, &y, schema(2), params).unwrap();
        let base = y.iter().filter(|&&v| v).count() as f64 / y.len() as f64;
        for row in &x {
            assert!((model.predict_proba(row).unwrap() - base).abs() < 1e-12);
        }
    }

    #[test]
    fn separates_blobs_second_order() {
        let (x, y) = blobs(600, 2);
        let (x_test, y_test) = blobs(300, 77);
        let params = BoostParams {
            n_trees: 100,
            max_depth: 3,
            ..BoostParams::default()
        };
        let model = train_boosted(&x, &y, schema(2), params).unwrap();
        let scores: Vec<f64> = x_test
            .iter()
            .map(|r| model.predict_proba(r).unwrap())
            .collect();
        let auc = auc_rank(&scores, &y_test);
        assert!(auc >= 0.95, "held-out AUC {auc}");
    }

    #[test]
    fn separates_blobs_first_order() {
        let (x, y) = blobs(600, 3);
        let (x_test, y_test) = blobs(300, 78);
        let params = BoostParams {
            n_trees: 100,
            max_depth: 3,
            order: BoostOrder::First,
            ..BoostParams::default()
        };
        let model = train_boosted(&x, &y, schema(2), params).unwrap();
        let scores: Vec<f64> = x_test
            .iter()
            .map(|r| model.predict_proba(r).unwrap())
            .collect();
        let auc = auc_rank(&scores, &y_test);
        assert!(auc >= 0.95, "held-out AUC {auc}");
    }

    #[test]
    fn training_loss_non_increasing() {
        let (x, y) = blobs(400, 4);
        let params = BoostParams {
            n_trees: 60,
            max_depth: 3,
            gamma: 0.0,
            ..BoostParams::default()
        };
        let model = train_boosted(&x, &y, schema(2), params).unwrap();
        let mut margins: Vec<f64> = vec![model.base_score; x.len()];
        let mut prev = mean_logloss(&margins, &y);
        for tree in &model.trees {
            for (m, row) in margins.iter_mut().zip(&x) {
                *m += model.params.learning_rate * tree.score(row);
            }
            let loss = mean_logloss(&margins, &y);
            assert!(
                loss <= prev + 1e-12,
                "loss rose from {prev} to {loss}"
            );
            prev = loss;
        }
    }

    #[test]
    fn deterministic_with_seed_and_subsample() {
        let (x, y) = blobs(300, 5);
        let params = BoostParams {
            n_trees: 25,
            max_depth: 3,
            subsample: 0.7,
            seed: 99,
            ..BoostParams::default()
        };
        let a = train_boosted(&x, &y, schema(2), params.clone()).unwrap();
        let b = train_boosted(&x, &y, schema(2), params).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn missing_values_learn_direction() {
        // Feature 0 informative when present; class-1 rows often miss it.
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let mut x = Vec::new();
        let mut y = Vec::new();
        for i in 0..400 {
            let label = i % 2 == 0;
            if label && rng.gen::<f64>() < 0.8 {
                x.push(vec![f64::NAN, rng.gen::<f64>()]);
            } else {
                let base = if label { 2.0 } else { -2.0 };
                x.push(vec![base + rng.gen::<f64>(), rng.gen::<f64>()]);
            }
            y.push(label);
        }
        let params = BoostParams { n_trees: 40, max_depth: 3, ..BoostParams::default() };
        let model = train_boosted(&x, &y, schema(2), params).unwrap();
        let p_missing = model.predict_proba(&[f64::NAN, 0.5]).unwrap();
        let p_low = model.predict_proba(&[-2.0, 0.5]).unwrap();
        assert!(
            p_missing > 0.6 && p_low < 0.4,
            "missing {p_missing}, low {p_low}"
        );
    }

    #[test]
    fn single_class_rejected() {
        let x: Vec<Vec<f64>> = vec![vec![0.0], vec![1.0]];
        let err = train_boosted(&x, &[false, false], schema(1), BoostParams::default());
        assert!(matches!(err, Err(LearnError::SingleClass)));
    }

    #[test]
    fn margin_is_base_plus_shrunk_tree_sum() {
        let (x, y) = blobs(200, 6);
        let params = BoostParams { n_trees: 10, max_depth: 2, ..BoostParams::default() };
        let model = train_boosted(&x, &y, schema(2), params).unwrap();
        let row = &x[17];
        let manual: f64 = model.base_score
            + model
                .trees
                .iter()
                .map(|t| model.params.learning_rate * t.score(row))
                .sum::<f64>();
        assert!((model.decision_margin(row) - manual).abs() < 1e-12);
    }
}
