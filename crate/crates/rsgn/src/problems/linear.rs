//! Linear least-squares `r(x) = Ax − b`, mostly used as an oracle: the
//! Gauss-Newton model is exact for linear residuals, so the acceptance ratio
//! must equal one and solvers must converge in essentially one step.

use crate::error::{Error, Result};
use crate::linalg::DenseMatrix;

use super::NlsProblem;

#[derive(Debug, Clone)]
pub struct LinearProblem {
    a: DenseMatrix,
    b: Vec<f64>,
}

/// `r(x) = Ax − b` with constant Jacobian `A`.
pub fn build_linear(a: DenseMatrix, b: Vec<f64>) -> Result<LinearProblem> {
    if b.len() != a.rows() {
        return Err(Error::dim("linear rhs length", a.rows(), b.len()));
    }
    Ok(LinearProblem { a, b })
}

impl LinearProblem {
    pub fn matrix(&self) -> &DenseMatrix {
        &self.a
    }
}

impl NlsProblem for LinearProblem {
    fn residual_count(&self) -> usize {
        self.a.rows()
    }

    fn dim(&self) -> usize {
        self.a.cols()
    }

    fn residual(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.dim() {
            return Err(Error::dim("linear residual point", self.dim(), x.len()));
        }
        let mut r = self.a.mul_vec(x);
        for (ri, bi) in r.iter_mut().zip(&self.b) {
            *ri -= bi;
        }
        Ok(r)
    }

    fn jacobian_action(&self, x: &[f64], v: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.dim() {
            return Err(Error::dim("linear action point", self.dim(), x.len()));
        }
        if v.len() != self.dim() {
            return Err(Error::dim("linear action direction", self.dim(), v.len()));
        }
        Ok(self.a.mul_vec(v))
    }

    fn jacobian_columns(&self, _x: &[f64], cols: &[usize]) -> Option<Result<Vec<f64>>> {
        let n = self.a.rows();
        let mut out = vec![0.0; n * cols.len()];
        for (k, &j) in cols.iter().enumerate() {
            for i in 0..n {
                out[k * n + i] = self.a.get(i, j);
            }
        }
        Some(Ok(out))
    }

    fn gradient(&self, x: &[f64]) -> Result<Vec<f64>> {
        let r = self.residual(x)?;
        Ok(self.a.mul_transpose_vec(&r))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problems::objective_from_residual;

    #[test]
    fn identity_system_has_unit_minimizer() {
        let a = DenseMatrix::from_rows(2, 2, vec![1.0, 0.0, 0.0, 1.0]);
        let p = build_linear(a, vec![1.0, 1.0]).unwrap();
        let r = p.residual(&[1.0, 1.0]).unwrap();
        assert_eq!(objective_from_residual(&r).unwrap(), 0.0);
    }

    #[test]
    fn overdetermined_minimum_by_normal_equations() {
        // A = [[1],[1]], b = (0,2): x* = 1, f* = 1
        let a = DenseMatrix::from_rows(2, 1, vec![1.0, 1.0]);
        let p = build_linear(a, vec![0.0, 2.0]).unwrap();
        assert_eq!(p.objective(&[1.0]).unwrap(), 1.0);
        // gradient vanishes at the minimizer
        assert_eq!(p.gradient(&[1.0]).unwrap(), vec![0.0]);
    }

    #[test]
    fn action_is_linear() {
        let a = DenseMatrix::from_rows(2, 3, vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0]);
        let p = build_linear(a.clone(), vec![0.0, 0.0]).unwrap();
        let v = [1.0, -1.0, 0.5];
        assert_eq!(p.jacobian_action(&[9.0, 9.0, 9.0], &v).unwrap(), a.mul_vec(&v));
    }

    #[test]
    fn shape_mismatch_is_rejected() {
        let a = DenseMatrix::from_rows(2, 2, vec![1.0; 4]);
        assert!(build_linear(a, vec![1.0]).is_err());
    }
}
