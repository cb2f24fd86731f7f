//! L2-regularized logistic regression trained by damped Newton
//! iteration. Features are standardized internally; the affine
//! transform is stored in the model so serialized models are
//! self-contained.

use serde::{Deserialize, Serialize};

use crate::scalar::Scalar;

use super::LearnError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogregParams<F> {
    pub l2: F,
    pub max_iter: usize,
    pub tol: F,
}

impl<F: Scalar> Default for LogregParams<F> {
    fn default() -> Self {
        LogregParams {
            l2: F::one(),
            max_iter: 100,
            tol: F::from_f64_lit(1e-8),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogisticModel<F> {
    pub weights: Vec<F>,
    pub intercept: F,
    /// Standardization: z_j = (x_j - mean_j) / scale_j.
    pub means: Vec<F>,
    pub scales: Vec<F>,
    pub params: LogregParams<F>,
    pub feature_schema: Vec<String>,
}

impl<F: Scalar> LogisticModel<F> {
    pub fn predict_proba(&self, row: &[F]) -> Result<F, LearnError> {
        if row.len() != self.feature_schema.len() {
            return Err(LearnError::SchemaMismatch {
                expected: self.feature_schema.len(),
                got: row.len(),
            });
        }
        let mut z = self.intercept;
        for j in 0..row.len() {
            let v = standardize(row[j], self.means[j], self.scales[j]);
            z = z + self.weights[j] * v;
        }
        Ok(z.sigmoid())
    }
}

/// Missing values map to the feature mean, which is 0 after
/// standardization.
fn standardize<F: Scalar>(v: F, mean: F, scale: F) -> F {
    if v.is_nan() {
        F::zero()
    } else {
        (v - mean) / scale
    }
}

/// The optimization objective over a standardized design matrix, with
/// parameters laid out as `[w_0 .. w_{d-1}, intercept]`. Public so the
/// analytic gradient can be checked against finite differences.
pub struct LogisticProblem<F> {
    pub x: Vec<Vec<F>>,
    pub y: Vec<bool>,
    pub l2: F,
}

impl<F: Scalar> LogisticProblem<F> {
    fn dim(&self) -> usize {
        self.x.first().map(Vec::len).unwrap_or(0)
    }

    fn margin(&self, theta: &[F], i: usize) -> F {
        let d = self.dim();
        let mut z = theta[d];
        for j in 0..d {
            z = z + theta[j] * self.x[i][j];
        }
        z
    }

    /// Sum of per-row logistic losses plus (l2/2)·||w||²; the intercept
    /// is not penalized.
    pub fn loss(&self, theta: &[F]) -> F {
        let mut total = F::zero();
        for i in 0..self.x.len() {
            let z = self.margin(theta, i);
            // softplus(z) - y*z, stable in both tails
            let softplus = if z > F::zero() { z + (-z).exp().ln_1p() } else { z.exp().ln_1p() };
            total = total + softplus;
            if self.y[i] {
                total = total - z;
            }
        }
        let mut penalty = F::zero();
        for j in 0..self.dim() {
            penalty = penalty + theta[j] * theta[j];
        }
        total + self.l2 * F::half() * penalty
    }

    pub fn grad(&self, theta: &[F]) -> Vec<F> {
        let d = self.dim();
        let mut g = vec![F::zero(); d + 1];
        for i in 0..self.x.len() {
            let resid = self.margin(theta, i).sigmoid()
                - if self.y[i] { F::one() } else { F::zero() };
            for j in 0..d {
                g[j] = g[j] + resid * self.x[i][j];
            }
            g[d] = g[d] + resid;
        }
        for j in 0..d {
            g[j] = g[j] + self.l2 * theta[j];
        }
        g
    }

    fn hessian(&self, theta: &[F]) -> Vec<Vec<F>> {
        let d = self.dim();
        let mut h = vec![vec![F::zero(); d + 1]; d + 1];
        for i in 0..self.x.len() {
            let p = self.margin(theta, i).sigmoid();
            let w = p * (F::one() - p);
            for a in 0..=d {
                let xa = if a < d { self.x[i][a] } else { F::one() };
                for b in a..=d {
                    let xb = if b < d { self.x[i][b] } else { F::one() };
                    h[a][b] = h[a][b] + w * xa * xb;
                }
            }
        }
        for a in 0..=d {
            for b in 0..a {
                h[a][b] = h[b][a];
            }
        }
        for j in 0..d {
            h[j][j] = h[j][j] + self.l2;
        }
        h
    }
}

/// Gaussian elimination with partial pivoting; `None` when singular.
fn solve_linear<F: Scalar>(mut a: Vec<Vec<F>>, mut b: Vec<F>) -> Option<Vec<F>> {
    let n = b.len();
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&i, &j| a[i][col].abs().partial_cmp(&a[j][col].abs()).unwrap())?;
        if a[pivot][col].abs() < F::from_f64_lit(1e-300) {
            return None;
        }
        a.swap(col, pivot);
        b.swap(col, pivot);
        for row in col + 1..n {
            let factor = a[row][col] / a[col][col];
            for k in col..n {
                let v = a[col][k];
                a[row][k] = a[row][k] - factor * v;
            }
            let bv = b[col];
            b[row] = b[row] - factor * bv;
        }
    }
    let mut x = vec![F::zero(); n];
    for col in (0..n).rev() {
        let mut acc = b[col];
        for k in col + 1..n {
            acc = acc - a[col][k] * x[k];
        }
        x[col] = acc / a[col][col];
    }
    Some(x)
}

pub fn train_logreg<F: Scalar>(
    x: &[Vec<F>],
    y: &[bool],
    feature_schema: Vec<String>,
    params: LogregParams<F>,
) -> Result<LogisticModel<F>, LearnError> {
    if x.is_empty() {
        return Err(LearnError::EmptyDataset);
    }
    let positives = y.iter().filter(|&&v| v).count();
    if positives == 0 || positives == y.len() {
        return Err(LearnError::SingleClass);
    }
    let d = feature_schema.len();
    let n = x.len();

    let mut means = vec![F::zero(); d];
    let mut scales = vec![F::one(); d];
    for j in 0..d {
        let mut sum = F::zero();
        let mut count = 0usize;
        for row in x {
            if !row[j].is_nan() {
                sum = sum + row[j];
                count += 1;
            }
        }
        if count > 0 {
            means[j] = sum / F::from_usize_lit(count);
            let mut var = F::zero();
            for row in x {
                if !row[j].is_nan() {
                    let delta = row[j] - means[j];
                    var = var + delta * delta;
                }
            }
            var = var / F::from_usize_lit(count);
            if var > F::zero() {
                scales[j] = var.sqrt();
            }
        }
    }

    let design: Vec<Vec<F>> = x
        .iter()
        .map(|row| {
            (0..d)
                .map(|j| standardize(row[j], means[j], scales[j]))
                .collect()
        })
        .collect();
    let problem = LogisticProblem { x: design, y: y.to_vec(), l2: params.l2 };

    let mut theta = vec![F::zero(); d + 1];
    theta[d] = (F::from_usize_lit(positives) / F::from_usize_lit(n)).logit();

    let mut converged = false;
    let mut grad_norm = F::infinity();
    for _ in 0..params.max_iter {
        let g = problem.grad(&theta);
        grad_norm = g.iter().fold(F::zero(), |m, v| m.max(v.abs()));
        if grad_norm <= params.tol {
            converged = true;
            break;
        }
        let h = problem.hessian(&theta);
        let neg_g: Vec<F> = g.iter().map(|&v| -v).collect();
        let direction = match solve_linear(h, neg_g) {
            Some(dir) => dir,
            // Degenerate curvature: fall back to scaled steepest descent.
            None => g
                .iter()
                .map(|&v| -v / F::from_usize_lit(n))
                .collect(),
        };

        let loss0 = problem.loss(&theta);
        let descent: F = (0..=d).map(|j| g[j] * direction[j]).sum();
        let armijo = F::from_f64_lit(1e-4);
        let mut step = F::one();
        loop {
            let candidate: Vec<F> = (0..=d)
                .map(|j| theta[j] + step * direction[j])
                .collect();
            if problem.loss(&candidate) <= loss0 + armijo * step * descent {
                theta = candidate;
                break;
            }
            step = step * F::half();
            if step < F::from_f64_lit(1e-10) {
                theta = candidate;
                break;
            }
        }
    }
    if !converged {
        // The loop may have exited right at max_iter with the gradient
        // already inside tolerance.
        let g = problem.grad(&theta);
        grad_norm = g.iter().fold(F::zero(), |m, v| m.max(v.abs()));
        converged = grad_norm <= params.tol;
    }
    if !converged {
        return Err(LearnError::NonConvergence {
            grad_norm: grad_norm.to_f64().unwrap_or(f64::NAN),
            iters: params.max_iter,
        });
    }

    Ok(LogisticModel {
        weights: theta[..d].to_vec(),
        intercept: theta[d],
        means,
        scales,
        params,
        feature_schema,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn schema(n: usize) -> Vec<String> {
        (0..n).map(|i| format!("f{i}")).collect()
    }

    fn lcg(seed: &mut u64) -> f64 {
        // Small deterministic generator for test fixtures.
        *seed = seed.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        (*seed >> 11) as f64 / (1u64 << 53) as f64
    }

    #[test]
    fn separable_data_converges_to_full_accuracy() {
        let mut x = Vec::new();
        let mut y = Vec::new();
        for i in 0..40 {
            let offset = (i % 5) as f64 * 0.1;
            x.push(vec![2.0 + offset, -1.0 - offset]);
            y.push(true);
            x.push(vec![-2.0 - offset, 1.0 + offset]);
            y.push(false);
        }
        let model = train_logreg(
            &x,
            &y,
            schema(2),
            LogregParams { l2: 1e-3, max_iter: 200, tol: 1e-8 },
        )
        .unwrap();
        for (row, label) in x.iter().zip(&y) {
            assert_eq!(model.predict_proba(row).unwrap() >= 0.5, *label);
        }
    }

    #[test]
    fn label_independent_data_recovers_base_rate() {
        // Mirrored pairs (v, label) and (-v, label) make the labels
        // exactly orthogonal to the features in-sample, so the unique
        // optimum is weights = 0, intercept = logit(base rate).
        let mut seed = 7u64;
        let mut x = Vec::new();
        let mut y = Vec::new();
        for i in 0..200 {
            let v = vec![lcg(&mut seed) * 4.0 - 2.0, lcg(&mut seed)];
            let label = i % 10 < 3;
            x.push(v.clone());
            y.push(label);
            x.push(v.into_iter().map(|c| -c).collect());
            y.push(label);
        }
        let model = train_logreg(&x, &y, schema(2), LogregParams::default()).unwrap();
        let base = (0.3f64 / 0.7).ln();
        assert!(
            (model.intercept - base).abs() < 1e-4,
            "intercept {} vs logit(base rate) {}",
            model.intercept,
            base
        );
        for w in &model.weights {
            assert!(w.abs() < 1e-6, "weights should vanish, got {w}");
        }
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let mut seed = 42u64;
        let x: Vec<Vec<f64>> = (0..50)
            .map(|_| (0..3).map(|_| lcg(&mut seed) * 2.0 - 1.0).collect())
            .collect();
        let y: Vec<bool> = (0..50).map(|i| i % 3 != 0).collect();
        let problem = LogisticProblem { x, y, l2: 0.5 };
        let theta: Vec<f64> = vec![0.3, -0.7, 1.1, 0.2];
        let g = problem.grad(&theta);
        let eps = 1e-6;
        for j in 0..theta.len() {
            let mut hi = theta.clone();
            let mut lo = theta.clone();
            hi[j] += eps;
            lo[j] -= eps;
            let fd = (problem.loss(&hi) - problem.loss(&lo)) / (2.0 * eps);
            let rel = (g[j] - fd).abs() / fd.abs().max(1.0);
            assert!(rel < 1e-6, "component {j}: analytic {} vs fd {fd}", g[j]);
        }
    }

    #[test]
    fn mean_prediction_equals_base_rate() {
        let mut seed = 3u64;
        let x: Vec<Vec<f64>> = (0..200)
            .map(|_| vec![lcg(&mut seed) * 6.0 - 3.0])
            .collect();
        let y: Vec<bool> = x.iter().enumerate().map(|(i, r)| r[0] + lcg(&mut seed) > 0.4 || i % 7 == 0).collect();
        let model = train_logreg(&x, &y, schema(1), LogregParams::default()).unwrap();
        let mean_pred: f64 = x
            .iter()
            .map(|r| model.predict_proba(r).unwrap())
            .sum::<f64>()
            / x.len() as f64;
        let base = y.iter().filter(|&&v| v).count() as f64 / y.len() as f64;
        assert!((mean_pred - base).abs() < 1e-6, "{mean_pred} vs {base}");
    }

    #[test]
    fn single_class_rejected() {
        let x: Vec<Vec<f64>> = vec![vec![0.0], vec![1.0]];
        let err = train_logreg(&x, &[true, true], schema(1), LogregParams::default());
        assert!(matches!(err, Err(LearnError::SingleClass)));
    }

    #[test]
    fn missing_values_treated_as_mean() {
        let x: Vec<Vec<f64>> = vec![
            vec![2.0],
            vec![-2.0],
            vec![1.5],
            vec![-1.5],
            vec![f64::NAN],
            vec![f64::NAN],
        ];
        let y = vec![true, false, true, false, true, false];
        let model = train_logreg(&x, &y, schema(1), LogregParams::default()).unwrap();
        // A missing value scores exactly the intercept.
        let p = model.predict_proba(&[f64::NAN]).unwrap();
        assert!((p - model.intercept.sigmoid()).abs() < 1e-12);
    }

    #[test]
    fn solver_handles_permuted_system() {
        let a = vec![
            vec![0.0, 2.0, 1.0],
            vec![3.0, 1.0, -1.0],
            vec![1.0, -1.0, 2.0],
        ];
        let x_true = [1.0, -2.0, 0.5];
        let b: Vec<f64> = a
            .iter()
            .map(|row| row.iter().zip(x_true.iter()).map(|(a, x)| a * x).sum())
            .collect();
        let solved = solve_linear(a, b).unwrap();
        for (got, want) in solved.iter().zip(x_true.iter()) {
            assert!((got - want).abs() < 1e-12);
        }
    }

    #[test]
    fn singular_system_detected() {
        let a = vec![vec![1.0, 2.0], vec![2.0, 4.0]];
        assert!(solve_linear(a, vec![1.0, 2.0]).is_none());
    }
}
