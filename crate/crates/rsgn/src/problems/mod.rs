//! Nonlinear least-squares problems `min ½‖r(x)‖²` as matrix-free residual
//! evaluators.
//!
//! A problem exposes its residual `r(x) ∈ R^n`, Jacobian actions
//! `v ↦ J(x)v` (analytic where possible, central finite differences
//! otherwise), an optional fast Jacobian-column extractor used by selection
//! sketches, and the full gradient `∇f(x) = J(x)ᵀr(x)` for diagnostics. The
//! solver core only ever needs `l` Jacobian actions per iteration, never the
//! full Jacobian.

mod classic;
mod data;
mod dataset;
mod linear;
mod logistic;
mod synthetic;

pub use classic::{build_test_problem, standard_start, TestProblemName};
pub use data::{DataMatrix, SparseRowMatrix};
pub use dataset::{load_dataset, DatasetFormat};
pub use linear::{build_linear, LinearProblem};
pub use logistic::{build_logistic, LogisticProblem};
pub use synthetic::synthetic_classification;

use crate::error::{Error, Result};
use crate::linalg;
use crate::sketch::SketchOperator;

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// A nonlinear least-squares problem with `n` residuals in `d` variables.
///
/// Implementations must be pure in `x`: evaluators may be called
/// concurrently and must not cache state between calls.
pub trait NlsProblem: Send + Sync {
    /// Residual count `n`.
    fn residual_count(&self) -> usize;

    /// Variable dimension `d`.
    fn dim(&self) -> usize;

    /// `r(x) ∈ R^n`.
    fn residual(&self, x: &[f64]) -> Result<Vec<f64>>;

    /// Directional derivative `J(x)v ∈ R^n`.
    ///
    /// The default uses central finite differences on the residual with step
    /// `h = ε^{1/3}(1 + ‖x‖_∞)`.
    fn jacobian_action(&self, x: &[f64], v: &[f64]) -> Result<Vec<f64>> {
        fd_jacobian_action(self, x, v)
    }

    /// Fast extraction of Jacobian columns `cols`, returned column-major as
    /// an `n × cols.len()` buffer; `None` when the problem has no cheap
    /// column access.
    fn jacobian_columns(&self, x: &[f64], cols: &[usize]) -> Option<Result<Vec<f64>>> {
        let _ = (x, cols);
        None
    }

    /// `∇f(x) = J(x)ᵀ r(x)`, for diagnostics and termination measurement.
    ///
    /// The default assembles the gradient from `d` Jacobian actions, which
    /// costs as much as a full Jacobian; problems with analytic gradients
    /// override it.
    fn gradient(&self, x: &[f64]) -> Result<Vec<f64>> {
        log::warn!(
            "full gradient via {} Jacobian actions; supply an analytic gradient if this is hot",
            self.dim()
        );
        let r = self.residual(x)?;
        let d = self.dim();
        let mut g = vec![0.0; d];
        let mut unit = vec![0.0; d];
        for j in 0..d {
            unit[j] = 1.0;
            let col = self.jacobian_action(x, &unit)?;
            g[j] = linalg::dot(&col, &r);
            unit[j] = 0.0;
        }
        Ok(g)
    }

    /// `f(x) = ½‖r(x)‖²`.
    fn objective(&self, x: &[f64]) -> Result<f64> {
        let r = self.residual(x)?;
        objective_from_residual(&r)
    }
}

/// `½‖r‖²`, rejecting non-finite residual components with their index.
pub fn objective_from_residual(r: &[f64]) -> Result<f64> {
    for (index, value) in r.iter().enumerate() {
        if !value.is_finite() {
            return Err(Error::NonFiniteResidual { index });
        }
    }
    Ok(0.5 * linalg::dot(r, r))
}

/// Central-difference Jacobian action used as the analytic fallback.
pub fn fd_jacobian_action<P: NlsProblem + ?Sized>(
    problem: &P,
    x: &[f64],
    v: &[f64],
) -> Result<Vec<f64>> {
    let d = problem.dim();
    if x.len() != d {
        return Err(Error::dim("jacobian_action point", d, x.len()));
    }
    if v.len() != d {
        return Err(Error::dim("jacobian_action direction", d, v.len()));
    }
    let vnorm = linalg::norm2(v);
    if vnorm == 0.0 {
        return Ok(vec![0.0; problem.residual_count()]);
    }
    let xinf = x.iter().fold(0.0f64, |m, &xi| m.max(xi.abs()));
    let h = f64::EPSILON.cbrt() * (1.0 + xinf);
    let step = h / vnorm;
    let mut plus = x.to_vec();
    let mut minus = x.to_vec();
    for j in 0..d {
        plus[j] += step * v[j];
        minus[j] -= step * v[j];
    }
    let r_plus = problem.residual(&plus)?;
    let r_minus = problem.residual(&minus)?;
    Ok(r_plus
        .iter()
        .zip(&r_minus)
        .map(|(p, m)| (p - m) / (2.0 * step))
        .collect())
}

/// The reduced Jacobian `J_S(x) = J(x)Sᵀ`, stored densely column-major
/// (`n × l`).
#[derive(Debug, Clone)]
pub struct SketchedJacobian {
    n: usize,
    l: usize,
    cols: Vec<f64>,
}

impl SketchedJacobian {
    /// Residual dimension `n`.
    pub fn residual_dim(&self) -> usize {
        self.n
    }

    /// Subspace dimension `l`.
    pub fn subspace_dim(&self) -> usize {
        self.l
    }

    pub fn column(&self, i: usize) -> &[f64] {
        &self.cols[i * self.n..(i + 1) * self.n]
    }

    /// `J_S v ∈ R^n` for `v ∈ R^l`.
    pub fn apply(&self, v: &[f64]) -> Vec<f64> {
        assert_eq!(v.len(), self.l);
        let mut out = vec![0.0; self.n];
        for i in 0..self.l {
            linalg::axpy(v[i], self.column(i), &mut out);
        }
        out
    }

    /// `J_Sᵀ w ∈ R^l` for `w ∈ R^n`.
    pub fn apply_transpose(&self, w: &[f64]) -> Vec<f64> {
        assert_eq!(w.len(), self.n);
        (0..self.l).map(|i| linalg::dot(self.column(i), w)).collect()
    }

    /// The Gauss-Newton curvature action `v ↦ J_Sᵀ(J_S v)`.
    pub fn gauss_newton_action(&self, v: &[f64]) -> Vec<f64> {
        self.apply_transpose(&self.apply(v))
    }
}

/// Evaluate `J_S(x) = J(x)Sᵀ` column by column.
///
/// Selection sketches (sampling, identity) with a problem-provided column
/// extractor take the fast path: extract the selected Jacobian columns and
/// scale them by `√(d/l)`. Everything else costs `l` Jacobian actions on the
/// directions `Sᵀe_i`.
pub fn sketched_jacobian<P: NlsProblem + ?Sized>(
    problem: &P,
    x: &[f64],
    sketch: &SketchOperator,
) -> Result<SketchedJacobian> {
    let d = problem.dim();
    let n = problem.residual_count();
    if x.len() != d {
        return Err(Error::dim("sketched_jacobian point", d, x.len()));
    }
    if sketch.cols() != d {
        return Err(Error::dim("sketch column count", d, sketch.cols()));
    }
    let l = sketch.rows();

    if let Some(support) = sketch.column_support() {
        if let Some(extracted) = problem.jacobian_columns(x, &support) {
            let mut cols = extracted?;
            debug_assert_eq!(cols.len(), n * l);
            let scale = sketch.selection_scale();
            if scale != 1.0 {
                for value in &mut cols {
                    *value *= scale;
                }
            }
            return Ok(SketchedJacobian { n, l, cols });
        }
    }

    let mut cols = vec![0.0; n * l];
    let fill = |(i, chunk): (usize, &mut [f64])| -> Result<()> {
        let mut unit = vec![0.0; l];
        unit[i] = 1.0;
        let direction = sketch.apply_transpose(&unit)?;
        let column = problem.jacobian_action(x, &direction)?;
        chunk.copy_from_slice(&column);
        Ok(())
    };

    #[cfg(feature = "parallel")]
    cols.par_chunks_mut(n).enumerate().try_for_each(fill)?;
    #[cfg(not(feature = "parallel"))]
    cols.chunks_mut(n).enumerate().try_for_each(fill)?;

    Ok(SketchedJacobian { n, l, cols })
}
