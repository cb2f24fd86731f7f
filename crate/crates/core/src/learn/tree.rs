//! Binary decision trees: the shared node arena used by every tree
//! model, plus greedy CART training with the gini criterion.

use serde::{Deserialize, Serialize};

use crate::scalar::Scalar;

use super::LearnError;

/// One node in a flat arena; index 0 is the root.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Node<F> {
    Split {
        feature: usize,
        threshold: F,
        /// Direction for rows whose feature value is missing (NaN).
        missing_goes_left: bool,
        left: usize,
        right: usize,
    },
    Leaf {
        value: F,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tree<F> {
    pub nodes: Vec<Node<F>>,
}

impl<F: Scalar> Tree<F> {
    pub fn leaf(value: F) -> Tree<F> {
        Tree { nodes: vec![Node::Leaf { value }] }
    }

    /// Route a row to its leaf. Values `<=` threshold go left; missing
    /// values follow the learned direction.
    pub fn score(&self, row: &[F]) -> F {
        let mut at = 0usize;
        loop {
            match &self.nodes[at] {
                Node::Leaf { value } => return *value,
                Node::Split { feature, threshold, missing_goes_left, left, right } => {
                    let v = row[*feature];
                    at = if v.is_nan() {
                        if *missing_goes_left {
                            *left
                        } else {
                            *right
                        }
                    } else if v <= *threshold {
                        *left
                    } else {
                        *right
                    };
                }
            }
        }
    }

    pub fn depth(&self) -> usize {
        fn walk<F>(nodes: &[Node<F>], at: usize) -> usize {
            match &nodes[at] {
                Node::Leaf { .. } => 0,
                Node::Split { left, right, .. } => {
                    1 + walk(nodes, *left).max(walk(nodes, *right))
                }
            }
        }
        walk(&self.nodes, 0)
    }

    pub fn leaf_count(&self) -> usize {
        self.nodes.iter().filter(|n| matches!(n, Node::Leaf { .. })).count()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TreeParams {
    /// `None` grows until pure or unsplittable.
    pub max_depth: Option<usize>,
    pub min_samples_leaf: usize,
}

impl Default for TreeParams {
    fn default() -> Self {
        TreeParams { max_depth: None, min_samples_leaf: 1 }
    }
}

/// A standalone CART classifier. Leaf values are positive-class
/// fractions, so `score` is already a probability.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TreeModel<F> {
    pub tree: Tree<F>,
    pub feature_schema: Vec<String>,
    pub params: TreeParams,
}

impl<F: Scalar> TreeModel<F> {
    pub fn predict_proba(&self, row: &[F]) -> Result<F, LearnError> {
        if row.len() != self.feature_schema.len() {
            return Err(LearnError::SchemaMismatch {
                expected: self.feature_schema.len(),
                got: row.len(),
            });
        }
        Ok(self.tree.score(row))
    }
}

fn gini<F: Scalar>(pos: usize, n: usize) -> F {
    if n == 0 {
        return F::zero();
    }
    let p = F::from_usize_lit(pos) / F::from_usize_lit(n);
    F::two() * p * (F::one() - p)
}

struct GiniSplit<F> {
    feature: usize,
    threshold: F,
    missing_goes_left: bool,
    gain: F,
}

/// Exact greedy scan: candidate thresholds are midpoints between
/// consecutive distinct present values (plus the maximum present value
/// when missing rows exist, which isolates the missing group). Missing
/// rows take whichever side gains more, left on ties. Tie-break across
/// candidates is lowest feature index, then lowest threshold, enforced
/// by scan order plus strictly-greater replacement.
fn best_gini_split<F: Scalar>(
    x: &[Vec<F>],
    y: &[bool],
    indices: &[usize],
    n_features: usize,
    min_leaf: usize,
) -> Option<GiniSplit<F>> {
    let n = indices.len();
    let pos = indices.iter().filter(|&&i| y[i]).count();
    let parent = gini::<F>(pos, n) * F::from_usize_lit(n);
    let mut best: Option<GiniSplit<F>> = None;

    for feature in 0..n_features {
        let mut present: Vec<(F, bool)> = Vec::with_capacity(n);
        let mut miss_n = 0usize;
        let mut miss_pos = 0usize;
        for &i in indices {
            let v = x[i][feature];
            if v.is_nan() {
                miss_n += 1;
                if y[i] {
                    miss_pos += 1;
                }
            } else {
                present.push((v, y[i]));
            }
        }
        if present.is_empty() {
            continue;
        }
        present.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());

        let mut left_n = 0usize;
        let mut left_pos = 0usize;
        for i in 0..present.len() {
            left_n += 1;
            if present[i].1 {
                left_pos += 1;
            }
            let last = i + 1 == present.len();
            let threshold = if last {
                // Splitting present from missing; only meaningful when
                // missing rows exist to fill the right side.
                if miss_n == 0 {
                    continue;
                }
                present[i].0
            } else if present[i].0 < present[i + 1].0 {
                (present[i].0 + present[i + 1].0) * F::half()
            } else {
                continue;
            };

            let right_n = present.len() - left_n;
            let right_pos = pos - miss_pos - left_pos;
            for missing_goes_left in [true, false] {
                let (ln, lp, rn, rp) = if missing_goes_left {
                    (left_n + miss_n, left_pos + miss_pos, right_n, right_pos)
                } else {
                    (left_n, left_pos, right_n + miss_n, right_pos + miss_pos)
                };
                if ln < min_leaf || rn < min_leaf || ln == 0 || rn == 0 {
                    continue;
                }
                let children =
                    gini::<F>(lp, ln) * F::from_usize_lit(ln) + gini::<F>(rp, rn) * F::from_usize_lit(rn);
                let gain = (parent - children) / F::from_usize_lit(n);
                if gain < F::zero() {
                    continue;
                }
                let better = match &best {
                    None => true,
                    Some(b) => gain > b.gain,
                };
                if better {
                    best = Some(GiniSplit { feature, threshold, missing_goes_left, gain });
                }
            }
        }
    }
    best
}

fn grow<F: Scalar>(
    x: &[Vec<F>],
    y: &[bool],
    indices: &[usize],
    depth: usize,
    n_features: usize,
    params: &TreeParams,
    nodes: &mut Vec<Node<F>>,
) -> usize {
    let n = indices.len();
    let pos = indices.iter().filter(|&&i| y[i]).count();
    let fraction = F::from_usize_lit(pos) / F::from_usize_lit(n);

    let depth_reached = params.max_depth.map(|d| depth >= d).unwrap_or(false);
    if pos == 0 || pos == n || depth_reached || n < 2 * params.min_samples_leaf {
        nodes.push(Node::Leaf { value: fraction });
        return nodes.len() - 1;
    }
    let Some(split) =
        best_gini_split(x, y, indices, n_features, params.min_samples_leaf)
    else {
        nodes.push(Node::Leaf { value: fraction });
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
    let left = grow(x, y, &left_idx, depth + 1, n_features, params, nodes);
    let right = grow(x, y, &right_idx, depth + 1, n_features, params, nodes);
    if let Node::Split { left: l, right: r, .. } = &mut nodes[at] {
        *l = left;
        *r = right;
    }
    at
}

pub fn train_tree<F: Scalar>(
    x: &[Vec<F>],
    y: &[bool],
    feature_schema: Vec<String>,
    params: TreeParams,
) -> Result<TreeModel<F>, LearnError> {
    if x.is_empty() || y.is_empty() {
        return Err(LearnError::EmptyDataset);
    }
    debug_assert_eq!(x.len(), y.len());
    let indices: Vec<usize> = (0..x.len()).collect();
    let mut nodes = Vec::new();
    grow(x, y, &indices, 0, feature_schema.len(), &params, &mut nodes);
    Ok(TreeModel { tree: Tree { nodes }, feature_schema, params })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn schema(n: usize) -> Vec<String> {
        (0..n).map(|i| format!("f{i}")).collect()
    }

    #[test]
    fn separable_single_feature_depth_one() {
        let x: Vec<Vec<f64>> =
            vec![vec![-2.0], vec![-0.5], vec![0.25], vec![3.0]];
        let y = vec![false, false, true, true];
        let model = train_tree(&x, &y, schema(1), TreeParams::default()).unwrap();
        assert_eq!(model.tree.depth(), 1);
        match &model.tree.nodes[0] {
            Node::Split { threshold, .. } => {
                assert!((*threshold - (-0.125)).abs() < 1e-12, "midpoint of -0.5 and 0.25");
            }
            other => panic!("expected split at root, got {other:?}"),
        }
        assert_eq!(model.predict_proba(&[-1.0]).unwrap(), 0.0);
        assert_eq!(model.predict_proba(&[1.0]).unwrap(), 1.0);
    }

    #[test]
    fn pure_labels_single_leaf() {
        let x: Vec<Vec<f64>> = vec![vec![1.0], vec![2.0], vec![3.0]];
        let y = vec![true, true, true];
        let model = train_tree(&x, &y, schema(1), TreeParams::default()).unwrap();
        assert_eq!(model.tree.nodes.len(), 1);
        assert_eq!(model.predict_proba(&[9.9]).unwrap(), 1.0);
    }

    #[test]
    fn xor_solved_at_depth_two() {
        let x: Vec<Vec<f64>> = vec![
            vec![0.0, 0.0],
            vec![0.0, 1.0],
            vec![1.0, 0.0],
            vec![1.0, 1.0],
        ];
        let y = vec![false, true, true, false];
        let model = train_tree(
            &x,
            &y,
            schema(2),
            TreeParams { max_depth: Some(2), min_samples_leaf: 1 },
        )
        .unwrap();
        assert_eq!(model.tree.depth(), 2);
        for (row, label) in x.iter().zip(&y) {
            let p = model.predict_proba(row).unwrap();
            assert_eq!(p >= 0.5, *label, "row {row:?}");
        }
    }

    #[test]
    fn leaf_value_is_class_fraction() {
        let x: Vec<Vec<f64>> = (0..10).map(|_| vec![1.0]).collect();
        let y: Vec<bool> = (0..10).map(|i| i < 3).collect();
        let model = train_tree(&x, &y, schema(1), TreeParams::default()).unwrap();
        assert_eq!(model.tree.nodes.len(), 1, "identical rows cannot split");
        assert!((model.predict_proba(&[1.0]).unwrap() - 0.3).abs() < 1e-12);
    }

    #[test]
    fn conflict_free_data_memorized() {
        // 40 distinct rows, labels arbitrary: unlimited depth must
        // reach 100% training accuracy.
        let x: Vec<Vec<f64>> = (0..40)
            .map(|i| vec![(i % 8) as f64, (i / 8) as f64])
            .collect();
        let y: Vec<bool> = (0..40).map(|i| (i * 7) % 3 == 0).collect();
        let model = train_tree(&x, &y, schema(2), TreeParams::default()).unwrap();
        for (row, label) in x.iter().zip(&y) {
            assert_eq!(model.predict_proba(row).unwrap() >= 0.5, *label);
        }
    }

    #[test]
    fn missing_values_routed_by_gain() {
        // Feature present for class 0 around -1, class 1 rows missing it
        // but separable once missing rows get their own side.
        let x: Vec<Vec<f64>> = vec![
            vec![-1.0],
            vec![-1.2],
            vec![-0.8],
            vec![f64::NAN],
            vec![f64::NAN],
            vec![f64::NAN],
        ];
        let y = vec![false, false, false, true, true, true];
        let model = train_tree(&x, &y, schema(1), TreeParams::default()).unwrap();
        assert_eq!(model.predict_proba(&[-1.0]).unwrap(), 0.0);
        assert_eq!(model.predict_proba(&[f64::NAN]).unwrap(), 1.0);
    }

    #[test]
    fn min_samples_leaf_respected() {
        let x: Vec<Vec<f64>> = (0..8).map(|i| vec![i as f64]).collect();
        let y = vec![false, false, false, false, false, false, false, true];
        let model = train_tree(
            &x,
            &y,
            schema(1),
            TreeParams { max_depth: None, min_samples_leaf: 3 },
        )
        .unwrap();
        fn check<F: Scalar>(nodes: &[Node<F>], at: usize, x: &[Vec<F>], idx: &[usize]) {
            if let Node::Split { feature, threshold, missing_goes_left, left, right } = &nodes[at]
            {
                let (mut li, mut ri) = (vec![], vec![]);
                for &i in idx {
                    let v = x[i][*feature];
                    let goes_left =
                        if v.is_nan() { *missing_goes_left } else { v <= *threshold };
                    if goes_left {
                        li.push(i)
                    } else {
                        ri.push(i)
                    }
                }
                assert!(li.len() >= 3 && ri.len() >= 3);
                check(nodes, *left, x, &li);
                check(nodes, *right, x, &ri);
            }
        }
        let idx: Vec<usize> = (0..8).collect();
        check(&model.tree.nodes, 0, &x, &idx);
    }

    #[test]
    fn empty_dataset_rejected() {
        let err = train_tree::<f64>(&[], &[], schema(1), TreeParams::default());
        assert!(matches!(err, Err(LearnError::EmptyDataset)));
    }

    #[test]
    fn schema_mismatch_on_predict() {
        let x: Vec<Vec<f64>> = vec![vec![0.0, 1.0], vec![1.0, 0.0]];
        let y = vec![false, true];
        let model = train_tree(&x, &y, schema(2), TreeParams::default()).unwrap();
        assert!(matches!(
            model.predict_proba(&[1.0]),
            Err(LearnError::SchemaMismatch { expected: 2, got: 1 })
        ));
    }

    #[test]
    fn deterministic_rebuild() {
        let x: Vec<Vec<f64>> = (0..30)
            .map(|i| vec![(i as f64 * 0.7).sin(), (i as f64 * 1.3).cos()])
            .collect();
        let y: Vec<bool> = (0..30).map(|i| i % 3 == 0).collect();
        let a = train_tree(&x, &y, schema(2), TreeParams::default()).unwrap();
        let b = train_tree(&x, &y, schema(2), TreeParams::default()).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn f32_instantiation() {
        let x: Vec<Vec<f32>> = vec![vec![0.0], vec![1.0]];
        let y = vec![false, true];
        let model = train_tree(&x, &y, schema(1), TreeParams::default()).unwrap();
        assert_eq!(model.predict_proba(&[0.0f32]).unwrap(), 0.0f32);
    }
}
