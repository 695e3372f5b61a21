//! Logistic regression in nonlinear least-squares form.
//!
//! Each observation `(a_i, y_i)` with `y_i ∈ {−1, +1}` contributes the
//! residual `r_i(x) = ln(1 + exp(−y_i a_iᵀx))`. A ridge term `λ‖x‖²` is
//! folded into the residual vector as `d` extra components `√(2λ)·x_j`, so
//! the objective decomposes exactly as `½‖r‖² = data term + λ‖x‖²` while
//! staying smooth at `x = 0` (a single `√(2λ)‖x‖` residual would not be).

use crate::error::{Error, Result};
use crate::linalg;

use super::{DataMatrix, NlsProblem};

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// `ln(1 + e^{−t})` without overflow for any `t`.
#[inline]
fn log1p_exp_neg(t: f64) -> f64 {
    if t >= 0.0 {
        (-t).exp().ln_1p()
    } else {
        -t + t.exp().ln_1p()
    }
}

/// `σ(−t) = 1/(1 + e^t)` without overflow for any `t`.
#[inline]
fn sigmoid_neg(t: f64) -> f64 {
    if t >= 0.0 {
        let e = (-t).exp();
        e / (1.0 + e)
    } else {
        1.0 / (1.0 + t.exp())
    }
}

#[derive(Debug, Clone)]
pub struct LogisticProblem {
    data: DataMatrix,
    labels: Vec<f64>,
    lambda: f64,
    intercept: bool,
}

/// Build a (regularized) logistic-regression problem.
///
/// Labels must be `−1` or `+1`; `lambda ≥ 0` adds the ridge residual block.
pub fn build_logistic(data: DataMatrix, labels: Vec<f64>, lambda: f64) -> Result<LogisticProblem> {
    if labels.len() != data.rows() {
        return Err(Error::dim("logistic labels", data.rows(), labels.len()));
    }
    for (row, &y) in labels.iter().enumerate() {
        if y != 1.0 && y != -1.0 {
            return Err(Error::InvalidLabel { row, value: y });
        }
    }
    if !(lambda >= 0.0 && lambda.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "lambda must be finite and nonnegative, got {lambda}"
        )));
    }
    Ok(LogisticProblem {
        data,
        labels,
        lambda,
        intercept: false,
    })
}

impl LogisticProblem {
    /// Append an intercept variable (an implicit all-ones feature column).
    ///
    /// The ridge block regularizes every optimization variable, the
    /// intercept included.
    pub fn with_intercept(mut self, intercept: bool) -> Self {
        self.intercept = intercept;
        self
    }

    pub fn observations(&self) -> usize {
        self.data.rows()
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    fn reg_scale(&self) -> f64 {
        (2.0 * self.lambda).sqrt()
    }

    /// `y_i · (a_iᵀ w + b)` for all rows.
    fn margins(&self, x: &[f64]) -> Vec<f64> {
        let d_data = self.data.cols();
        let bias = if self.intercept { x[d_data] } else { 0.0 };
        let row = |i: usize| self.labels[i] * (self.data.dot_row(i, &x[..d_data]) + bias);

        #[cfg(feature = "parallel")]
        return (0..self.observations()).into_par_iter().map(row).collect();
        #[cfg(not(feature = "parallel"))]
        return (0..self.observations()).map(row).collect();
    }

    fn check_dim(&self, x: &[f64], context: &'static str) -> Result<()> {
        if x.len() != self.dim() {
            return Err(Error::dim(context, self.dim(), x.len()));
        }
        Ok(())
    }
}

impl NlsProblem for LogisticProblem {
    fn residual_count(&self) -> usize {
        self.observations() + if self.lambda > 0.0 { self.dim() } else { 0 }
    }

    fn dim(&self) -> usize {
        self.data.cols() + usize::from(self.intercept)
    }

    fn residual(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check_dim(x, "logistic residual point")?;
        let margins = self.margins(x);

        #[cfg(feature = "parallel")]
        let mut r: Vec<f64> = margins.par_iter().map(|&t| log1p_exp_neg(t)).collect();
        #[cfg(not(feature = "parallel"))]
        let mut r: Vec<f64> = margins.iter().map(|&t| log1p_exp_neg(t)).collect();

        if self.lambda > 0.0 {
            let scale = self.reg_scale();
            r.extend(x.iter().map(|&xj| scale * xj));
        }
        Ok(r)
    }

    fn jacobian_action(&self, x: &[f64], v: &[f64]) -> Result<Vec<f64>> {
        self.check_dim(x, "logistic action point")?;
        self.check_dim(v, "logistic action direction")?;
        let d_data = self.data.cols();
        let v_bias = if self.intercept { v[d_data] } else { 0.0 };
        let margins = self.margins(x);
        // ∂r_i/∂x = −y_i σ(−t_i) a_i, so (Jv)_i = −y_i σ(−t_i)(a_iᵀv + v_b)
        let row = |i: usize| {
            -self.labels[i]
                * sigmoid_neg(margins[i])
                * (self.data.dot_row(i, &v[..d_data]) + v_bias)
        };

        #[cfg(feature = "parallel")]
        let mut jv: Vec<f64> = (0..self.observations()).into_par_iter().map(row).collect();
        #[cfg(not(feature = "parallel"))]
        let mut jv: Vec<f64> = (0..self.observations()).map(row).collect();

        if self.lambda > 0.0 {
            let scale = self.reg_scale();
            jv.extend(v.iter().map(|&vj| scale * vj));
        }
        Ok(jv)
    }

    fn jacobian_columns(&self, x: &[f64], cols: &[usize]) -> Option<Result<Vec<f64>>> {
        if let Err(e) = self.check_dim(x, "logistic columns point") {
            return Some(Err(e));
        }
        let n_obs = self.observations();
        let n = self.residual_count();
        let d_data = self.data.cols();
        let margins = self.margins(x);
        let weights: Vec<f64> = margins
            .iter()
            .zip(&self.labels)
            .map(|(&t, &y)| -y * sigmoid_neg(t))
            .collect();
        let reg = if self.lambda > 0.0 {
            Some(self.reg_scale())
        } else {
            None
        };

        let mut out = vec![0.0; n * cols.len()];
        let fill = |(k, chunk): (usize, &mut [f64])| {
            let j = cols[k];
            if j < d_data {
                self.data.for_column(j, |i, aij| {
                    chunk[i] = weights[i] * aij;
                });
            } else {
                // intercept column: implicit all-ones feature
                for (i, &w) in weights.iter().enumerate() {
                    chunk[i] = w;
                }
            }
            if let Some(scale) = reg {
                chunk[n_obs + j] = scale;
            }
        };

        #[cfg(feature = "parallel")]
        out.par_chunks_mut(n).enumerate().for_each(fill);
        #[cfg(not(feature = "parallel"))]
        out.chunks_mut(n).enumerate().for_each(fill);

        Some(Ok(out))
    }

    fn gradient(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check_dim(x, "logistic gradient point")?;
        let d = self.dim();
        let d_data = self.data.cols();
        let margins = self.margins(x);

        let accumulate = |mut acc: Vec<f64>, i: usize| {
            let t = margins[i];
            let coeff = log1p_exp_neg(t) * (-self.labels[i] * sigmoid_neg(t));
            self.data.scatter_row(i, coeff, &mut acc[..d_data]);
            if self.intercept {
                acc[d_data] += coeff;
            }
            acc
        };

        #[cfg(feature = "parallel")]
        let mut g = (0..self.observations())
            .into_par_iter()
            .fold(|| vec![0.0; d], accumulate)
            .reduce(
                || vec![0.0; d],
                |mut a, b| {
                    linalg::axpy(1.0, &b, &mut a);
                    a
                },
            );
        #[cfg(not(feature = "parallel"))]
        let mut g = (0..self.observations()).fold(vec![0.0; d], accumulate);

        if self.lambda > 0.0 {
            linalg::axpy(2.0 * self.lambda, x, &mut g);
        }
        Ok(g)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::DenseMatrix;
    use crate::problems::{fd_jacobian_action, SparseRowMatrix};

    fn single_obs(lambda: f64) -> LogisticProblem {
        let data = DataMatrix::Dense(DenseMatrix::from_rows(1, 1, vec![1.0]));
        build_logistic(data, vec![1.0], lambda).unwrap()
    }

    #[test]
    fn residual_and_derivative_at_origin() {
        let p = single_obs(0.0);
        let r = p.residual(&[0.0]).unwrap();
        assert!((r[0] - 2f64.ln()).abs() < 1e-15);
        // dr/dx = −y·a·σ(0) = −1/2
        let jv = p.jacobian_action(&[0.0], &[1.0]).unwrap();
        assert!((jv[0] + 0.5).abs() < 1e-15);
    }

    #[test]
    fn objective_at_origin_is_n_log2_squared_over_two() {
        let n = 11;
        let data = DataMatrix::Dense(DenseMatrix::from_rows(n, 2, vec![0.5; 2 * n]));
        let labels: Vec<f64> = (0..n).map(|i| if i % 2 == 0 { 1.0 } else { -1.0 }).collect();
        let p = build_logistic(data, labels, 0.0).unwrap();
        let f = p.objective(&[0.0, 0.0]).unwrap();
        let expected = n as f64 * 2f64.ln().powi(2) / 2.0;
        assert!((f - expected).abs() < 1e-12);
    }

    #[test]
    fn regularization_residuals_vanish_at_origin() {
        let p = single_obs(1e-10);
        assert_eq!(p.residual_count(), 2);
        let r = p.residual(&[0.0]).unwrap();
        assert_eq!(r[1], 0.0);
    }

    #[test]
    fn large_margins_do_not_overflow() {
        // y·aᵀx = 50 → r = ln(1 + e⁻⁵⁰) ≈ 1.9287e-22, well below 1
        let p = single_obs(0.0);
        let r = p.residual(&[50.0]).unwrap();
        let expected = 1.928_749_847_963_917_8e-22;
        assert!((r[0] - expected).abs() <= 1e-12 * expected);
        // and the opposite tail grows linearly instead of overflowing
        let r = p.residual(&[-1e6]).unwrap();
        assert!((r[0] - 1e6).abs() < 1e-6);
        assert!(r[0].is_finite());
    }

    #[test]
    fn residual_is_monotone_in_margin() {
        let p = single_obs(0.0);
        // non-increasing across ±10⁶ (the far tail underflows to exactly 0)
        let mut last = f64::INFINITY;
        for k in -40..=40 {
            let t = k as f64 * 2.5e4;
            let r = p.residual(&[t]).unwrap()[0];
            assert!(r.is_finite());
            assert!(r <= last, "not monotone at t = {t}");
            last = r;
        }
        // strictly decreasing wherever ln(1+e⁻ᵗ) is representable
        let mut last = f64::INFINITY;
        for k in -100..=100 {
            let t = k as f64 * 7.0;
            let r = p.residual(&[t]).unwrap()[0];
            assert!(r < last, "not strictly decreasing at t = {t}");
            last = r;
        }
    }

    #[test]
    fn objective_decomposes_into_data_term_plus_ridge() {
        let data = DataMatrix::Dense(DenseMatrix::from_rows(
            3,
            2,
            vec![1.0, -0.5, 0.25, 2.0, -1.0, 0.75],
        ));
        let labels = vec![1.0, -1.0, 1.0];
        let lambda = 0.37;
        let with = build_logistic(data.clone(), labels.clone(), lambda).unwrap();
        let without = build_logistic(data, labels, 0.0).unwrap();
        for x in [[0.0, 0.0], [1.5, -2.0], [-0.3, 0.9]] {
            let f_with = with.objective(&x).unwrap();
            let f_without = without.objective(&x).unwrap();
            let ridge = lambda * linalg::dot(&x, &x);
            assert!((f_with - (f_without + ridge)).abs() < 1e-14 * (1.0 + f_with));
        }
    }

    #[test]
    fn labels_must_be_signs() {
        let data = DataMatrix::Dense(DenseMatrix::from_rows(2, 1, vec![1.0, 2.0]));
        let err = build_logistic(data, vec![1.0, 2.0], 0.0).unwrap_err();
        match err {
            Error::InvalidLabel { row, value } => {
                assert_eq!(row, 1);
                assert_eq!(value, 2.0);
            }
            other => panic!("unexpected error {other}"),
        }
    }

    #[test]
    fn sparse_and_dense_agree() {
        let dense = DataMatrix::Dense(DenseMatrix::from_rows(
            3,
            4,
            vec![
                1.0, 0.0, -2.0, 0.0, //
                0.0, 3.0, 0.0, 0.0, //
                0.5, 0.0, 0.0, -1.0,
            ],
        ));
        let sparse = DataMatrix::Sparse(SparseRowMatrix::from_rows(
            4,
            vec![
                vec![(0, 1.0), (2, -2.0)],
                vec![(1, 3.0)],
                vec![(0, 0.5), (3, -1.0)],
            ],
        ));
        let labels = vec![1.0, -1.0, -1.0];
        let pd = build_logistic(dense, labels.clone(), 0.01).unwrap();
        let ps = build_logistic(sparse, labels, 0.01).unwrap();
        let x = [0.4, -1.2, 0.8, 2.0];
        let v = [1.0, 0.5, -0.25, 0.0];
        assert_eq!(pd.residual(&x).unwrap(), ps.residual(&x).unwrap());
        assert_eq!(
            pd.jacobian_action(&x, &v).unwrap(),
            ps.jacobian_action(&x, &v).unwrap()
        );
        assert_eq!(pd.gradient(&x).unwrap(), ps.gradient(&x).unwrap());
        assert_eq!(
            pd.jacobian_columns(&x, &[0, 2, 3]).unwrap().unwrap(),
            ps.jacobian_columns(&x, &[0, 2, 3]).unwrap().unwrap()
        );
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let data = DataMatrix::Dense(DenseMatrix::from_rows(
            4,
            3,
            vec![
                1.0, -0.5, 0.25, //
                2.0, -1.0, 0.75, //
                -0.3, 0.6, 1.1, //
                0.9, 0.2, -0.8,
            ],
        ));
        let p = build_logistic(data, vec![1.0, -1.0, 1.0, -1.0], 0.05)
            .unwrap()
            .with_intercept(true);
        let x = [0.3, -0.6, 0.9, 0.1];
        let g = p.gradient(&x).unwrap();
        let r = p.residual(&x).unwrap();
        for j in 0..p.dim() {
            let mut unit = vec![0.0; p.dim()];
            unit[j] = 1.0;
            let col = fd_jacobian_action(&p, &x, &unit).unwrap();
            let expected = linalg::dot(&col, &r);
            assert!(
                (g[j] - expected).abs() <= 1e-6 * (1.0 + expected.abs()),
                "component {j}: {} vs {expected}",
                g[j]
            );
        }
    }

    #[test]
    fn intercept_adds_a_variable() {
        let p = single_obs(0.0).with_intercept(true);
        assert_eq!(p.dim(), 2);
        // a = (1), y = +1, x = (0, 3): margin t = 3
        let r = p.residual(&[0.0, 3.0]).unwrap();
        assert!((r[0] - log1p_exp_neg(3.0)).abs() < 1e-15);
    }
}
