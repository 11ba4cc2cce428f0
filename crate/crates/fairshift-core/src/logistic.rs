//! Ridge-penalized logistic regression fit by Newton/IRLS, and the nested
//! likelihood-ratio test built on it. This is the workhorse behind
//! density-ratio weighting (domain discriminator) and the data-driven checks
//! that generated data respects the causal graph's conditional independences.

use alloc::vec;
use alloc::vec::Vec;

use crate::data::Matrix;

pub(crate) fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + libm::exp(-x))
}

/// 0.99 quantile of the chi-squared distribution with one degree of freedom.
pub const CHI2_1_CRIT_ALPHA_01: f64 = 6.634_896_601_021_214_5;

/// Solve the k-by-k system `a x = b` in place (row-major `a`) by Gaussian
/// elimination with partial pivoting. `None` means numerically singular.
pub(crate) fn solve_linear(a: &mut [f64], b: &mut [f64], k: usize) -> Option<Vec<f64>> {
    debug_assert_eq!(a.len(), k * k);
    debug_assert_eq!(b.len(), k);
    for col in 0..k {
        let mut pivot = col;
        for r in col + 1..k {
            if libm::fabs(a[r * k + col]) > libm::fabs(a[pivot * k + col]) {
                pivot = r;
            }
        }
        if libm::fabs(a[pivot * k + col]) < 1e-300 {
            return None;
        }
        if pivot != col {
            for c in 0..k {
                a.swap(pivot * k + c, col * k + c);
            }
            b.swap(pivot, col);
        }
        let d = a[col * k + col];
        for r in col + 1..k {
            let f = a[r * k + col] / d;
            if f == 0.0 {
                continue;
            }
            for c in col..k {
                a[r * k + c] -= f * a[col * k + c];
            }
            b[r] -= f * b[col];
        }
    }
    let mut x = vec![0.0; k];
    for col in (0..k).rev() {
        let mut s = b[col];
        for c in col + 1..k {
            s -= a[col * k + c] * x[c];
        }
        x[col] = s / a[col * k + col];
    }
    Some(x)
}

#[derive(Debug, Clone)]
pub struct LogisticModel {
    pub weights: Vec<f64>,
    pub bias: f64,
    /// Unpenalized log-likelihood at the fitted coefficients.
    pub log_likelihood: f64,
}

impl LogisticModel {
    pub fn probability(&self, row: &[f64]) -> f64 {
        let mut z = self.bias;
        for (w, x) in self.weights.iter().zip(row) {
            z += w * x;
        }
        sigmoid(z)
    }
}

/// Fit `P(label=1 | x) = sigmoid(w·x + b)` with an l2 penalty of
/// `ridge/2 · (|w|² + b²)` on the coefficients. `labels` are 0/1.
/// Deterministic; Newton iterations from zero until the step stalls.
pub fn fit_logistic(x: &Matrix, labels: &[f64], ridge: f64) -> LogisticModel {
    assert_eq!(x.rows, labels.len());
    let k = x.cols + 1; // bias folded in as the last coordinate
    let mut theta = vec![0.0; k];
    let mut probs = vec![0.0; x.rows];
    for _ in 0..60 {
        for i in 0..x.rows {
            let row = x.row(i);
            let mut z = theta[k - 1];
            for j in 0..x.cols {
                z += theta[j] * row[j];
            }
            probs[i] = sigmoid(z);
        }
        // Gradient of the penalized log-likelihood and the (negated) Hessian.
        let mut grad = vec![0.0; k];
        let mut hess = vec![0.0; k * k];
        for i in 0..x.rows {
            let row = x.row(i);
            let r = labels[i] - probs[i];
            let wt = probs[i] * (1.0 - probs[i]);
            for j in 0..k {
                let xj = if j == k - 1 { 1.0 } else { row[j] };
                grad[j] += r * xj;
                for l in j..k {
                    let xl = if l == k - 1 { 1.0 } else { row[l] };
                    hess[j * k + l] += wt * xj * xl;
                }
            }
        }
        for j in 0..k {
            grad[j] -= ridge * theta[j];
            hess[j * k + j] += ridge;
            for l in 0..j {
                hess[j * k + l] = hess[l * k + j];
            }
        }
        let step = match solve_linear(&mut hess, &mut grad, k) {
            Some(s) => s,
            None => break,
        };
        let mut biggest = 0.0f64;
        for j in 0..k {
            theta[j] += step[j];
            biggest = biggest.max(libm::fabs(step[j]));
        }
        if biggest < 1e-10 {
            break;
        }
    }
    let mut ll = 0.0;
    for i in 0..x.rows {
        let row = x.row(i);
        let mut z = theta[k - 1];
        for j in 0..x.cols {
            z += theta[j] * row[j];
        }
        let p = sigmoid(z).clamp(1e-12, 1.0 - 1e-12);
        ll += if labels[i] > 0.5 { libm::log(p) } else { libm::log(1.0 - p) };
    }
    LogisticModel {
        weights: theta[..k - 1].to_vec(),
        bias: theta[k - 1],
        log_likelihood: ll,
    }
}

#[derive(Debug, Clone, Copy)]
pub struct LrTest {
    pub statistic: f64,
    pub reject: bool,
}

/// Likelihood-ratio test at alpha = 0.01 of whether `extra` carries
/// information about `labels` beyond the `base` regressors: fits the nested
/// pair of logistic models and compares twice the log-likelihood gain
/// against the one-degree chi-squared critical value.
pub fn lr_independence_test(base: &Matrix, extra: &[f64], labels: &[f64]) -> LrTest {
    assert_eq!(base.rows, extra.len());
    let ridge = 1e-8;
    let null = fit_logistic(base, labels, ridge);
    let mut data = Vec::with_capacity(base.rows * (base.cols + 1));
    for i in 0..base.rows {
        data.extend_from_slice(base.row(i));
        data.push(extra[i]);
    }
    let full_x = Matrix::new(data, base.rows, base.cols + 1);
    let full = fit_logistic(&full_x, labels, ridge);
    let statistic = (2.0 * (full.log_likelihood - null.log_likelihood)).max(0.0);
    LrTest { statistic, reject: statistic > CHI2_1_CRIT_ALPHA_01 }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::row_rng;
    use rand::Rng;
    use rand_distr::{Distribution, Normal};

    #[test]
    fn critical_value_matches_chi2_cdf() {
        // P(Z^2 <= x) = erf(sqrt(x/2)); the stored quantile must sit at 0.99.
        let p = libm::erf(libm::sqrt(CHI2_1_CRIT_ALPHA_01 / 2.0));
        assert!((p - 0.99).abs() < 1e-14, "cdf at critical value = {p}");
    }

    #[test]
    fn solves_small_system() {
        // [[2,1],[1,3]] x = [5,10] -> x = (1, 3)
        let mut a = vec![2.0, 1.0, 1.0, 3.0];
        let mut b = vec![5.0, 10.0];
        let x = solve_linear(&mut a, &mut b, 2).unwrap();
        assert!((x[0] - 1.0).abs() < 1e-12 && (x[1] - 3.0).abs() < 1e-12);

        let mut sing = vec![1.0, 2.0, 2.0, 4.0];
        let mut b2 = vec![1.0, 2.0];
        assert!(solve_linear(&mut sing, &mut b2, 2).is_none());
    }

    #[test]
    fn recovers_known_coefficients() {
        let n = 4000;
        let normal = Normal::new(0.0, 1.0).unwrap();
        let mut xs = Vec::with_capacity(n * 2);
        let mut ys = Vec::with_capacity(n);
        for i in 0..n {
            let mut rng = row_rng(31, i as u64);
            let a: f64 = normal.sample(&mut rng);
            let b: f64 = normal.sample(&mut rng);
            let p = sigmoid(1.5 * a - 0.7 * b + 0.3);
            let u: f64 = rng.random();
            xs.push(a);
            xs.push(b);
            ys.push(if u < p { 1.0 } else { 0.0 });
        }
        let x = Matrix::new(xs, n, 2);
        let m = fit_logistic(&x, &ys, 1e-6);
        assert!((m.weights[0] - 1.5).abs() < 0.15, "w0 = {}", m.weights[0]);
        assert!((m.weights[1] + 0.7).abs() < 0.15, "w1 = {}", m.weights[1]);
        assert!((m.bias - 0.3).abs() < 0.15, "b = {}", m.bias);
        assert!(m.log_likelihood < 0.0);

        let again = fit_logistic(&x, &ys, 1e-6);
        assert_eq!(m.weights, again.weights);
        assert_eq!(m.bias, again.bias);
    }

    #[test]
    fn lr_test_separates_signal_from_noise() {
        let n = 3000;
        let normal = Normal::new(0.0, 1.0).unwrap();
        let mut base = Vec::with_capacity(n);
        let mut informative = Vec::with_capacity(n);
        let mut noise = Vec::with_capacity(n);
        let mut labels = Vec::with_capacity(n);
        for i in 0..n {
            let mut rng = row_rng(77, i as u64);
            let b: f64 = normal.sample(&mut rng);
            let s: f64 = normal.sample(&mut rng);
            let z: f64 = normal.sample(&mut rng);
            let u: f64 = rng.random();
            base.push(b);
            informative.push(s);
            noise.push(z);
            labels.push(if u < sigmoid(0.8 * b + 1.2 * s) { 1.0 } else { 0.0 });
        }
        let bm = Matrix::from_columns(&[&base]);
        assert!(lr_independence_test(&bm, &informative, &labels).reject);
        assert!(!lr_independence_test(&bm, &noise, &labels).reject);
    }
}
