//! Approximate minimization of the reduced Gauss-Newton model
//! `m(s) = f₀ + ⟨g, s⟩ + ½⟨s, Bs⟩` over the trust region `‖s‖ ≤ Δ`, plus the
//! regularized solve `(B + σI)s = −g` used by the quadratic-regularization
//! variant.
//!
//! Every trust-region step is guaranteed at least the Cauchy decrease
//! `½‖g‖·min(Δ, ‖g‖/‖B‖)`: the Steihaug-CG solution is compared against the
//! Cauchy point and falls back to it if rounding ever drives it below.

use crate::linalg::{self, dot, norm2};
use crate::problems::SketchedJacobian;

/// Per-iteration reduced model state: `f₀ = f(x_k)`, `g = J_Sᵀr`, and the
/// matrix-free curvature operator `v ↦ J_Sᵀ(J_S v)`.
pub struct ReducedModel<'a> {
    f0: f64,
    g: Vec<f64>,
    b_op: Box<dyn Fn(&[f64]) -> Vec<f64> + 'a>,
    b_norm_est: f64,
}

/// Power iterations used for the cached `‖B‖₂` estimate.
const NORM_EST_ITERATIONS: usize = 30;

impl<'a> ReducedModel<'a> {
    /// Build from an explicit curvature operator (must be symmetric PSD).
    pub fn new(f0: f64, g: Vec<f64>, b_op: impl Fn(&[f64]) -> Vec<f64> + 'a) -> Self {
        let boxed: Box<dyn Fn(&[f64]) -> Vec<f64> + 'a> = Box::new(b_op);
        let b_norm_est = estimate_b_norm(&boxed, &g);
        Self {
            f0,
            g,
            b_op: boxed,
            b_norm_est,
        }
    }

    /// Build the Gauss-Newton model from a sketched Jacobian and the
    /// residual at the same point: `g = J_Sᵀr`, `B = J_SᵀJ_S`.
    pub fn from_jacobian(f0: f64, jacobian: &'a SketchedJacobian, residual: &[f64]) -> Self {
        let g = jacobian.apply_transpose(residual);
        Self::new(f0, g, move |v| jacobian.gauss_newton_action(v))
    }

    pub fn dim(&self) -> usize {
        self.g.len()
    }

    pub fn f0(&self) -> f64 {
        self.f0
    }

    pub fn gradient(&self) -> &[f64] {
        &self.g
    }

    /// Cached power-iteration estimate of `‖B‖₂` (a lower bound).
    pub fn curvature_norm_estimate(&self) -> f64 {
        self.b_norm_est
    }

    pub fn apply_curvature(&self, v: &[f64]) -> Vec<f64> {
        (self.b_op)(v)
    }

    /// `m(s) = f₀ + ⟨g, s⟩ + ½⟨s, Bs⟩`
    pub fn value(&self, s: &[f64]) -> f64 {
        self.f0 + dot(&self.g, s) + 0.5 * dot(s, &self.apply_curvature(s))
    }

    /// `m(0) − m(s)`
    pub fn decrease(&self, s: &[f64]) -> f64 {
        -(dot(&self.g, s) + 0.5 * dot(s, &self.apply_curvature(s)))
    }
}

/// Starting the power iteration at `g` makes the estimate at least the
/// Rayleigh quotient `⟨g, Bg⟩/‖g‖²`, which is exactly what the Cauchy
/// decrease bound needs; Rayleigh quotients of the power sequence only grow
/// from there, and never exceed `‖B‖₂`.
fn estimate_b_norm(b_op: &dyn Fn(&[f64]) -> Vec<f64>, g: &[f64]) -> f64 {
    let dim = g.len();
    if dim == 0 {
        return 0.0;
    }
    let start = if norm2(g) > 0.0 {
        g.to_vec()
    } else {
        let mut rng = crate::seeded_rng(0xB0_0E57);
        linalg::seeded_unit_vector(dim, &mut rng)
    };
    linalg::power_iteration_lambda_max(|v| b_op(v), dim, NORM_EST_ITERATIONS, start)
}

/// Result of a subproblem solve.
#[derive(Debug, Clone, PartialEq)]
pub struct SubproblemResult {
    /// Step in the reduced space, `‖s‖ ≤ Δ(1 + 10⁻¹⁰)` for trust-region
    /// solves.
    pub step: Vec<f64>,
    /// `m(0) − m(s) ≥ 0`.
    pub predicted_decrease: f64,
    /// Whether the step ended on the trust-region boundary.
    pub on_boundary: bool,
    /// CG iterations spent (0 for the Cauchy point).
    pub cg_iterations: usize,
}

impl SubproblemResult {
    fn zero(dim: usize) -> Self {
        Self {
            step: vec![0.0; dim],
            predicted_decrease: 0.0,
            on_boundary: false,
            cg_iterations: 0,
        }
    }
}

/// The Cauchy point: exact minimizer of the model along `−g` within the
/// radius. Achieves the classical decrease bound with `c₁ = ½`.
pub fn cauchy_point(model: &ReducedModel<'_>, delta: f64) -> SubproblemResult {
    assert!(delta > 0.0, "trust radius must be positive");
    let g = model.gradient();
    let gnorm = norm2(g);
    if gnorm == 0.0 {
        return SubproblemResult::zero(model.dim());
    }
    let bg = model.apply_curvature(g);
    let gbg = dot(g, &bg);
    let alpha_boundary = delta / gnorm;
    let (alpha, on_boundary) = if gbg > 0.0 {
        let alpha_interior = dot(g, g) / gbg;
        if alpha_interior < alpha_boundary {
            (alpha_interior, false)
        } else {
            (alpha_boundary, true)
        }
    } else {
        (alpha_boundary, true)
    };
    let step = linalg::scale(-alpha, g);
    // decrease along −αg, with ⟨g,Bg⟩ already in hand
    let predicted_decrease = alpha * gnorm * gnorm - 0.5 * alpha * alpha * gbg;
    SubproblemResult {
        step,
        predicted_decrease,
        on_boundary,
        cg_iterations: 0,
    }
}

/// Steihaug-Toint truncated conjugate gradients on `Bs = −g` within
/// `‖s‖ ≤ Δ`.
///
/// Exits to the boundary along the current search direction on radius
/// crossing or (near-)zero curvature; stops when the model-gradient residual
/// drops below `rel_tol·‖g‖` or after `max_iter` iterations. The returned
/// decrease never falls below the Cauchy point's.
pub fn steihaug_cg(
    model: &ReducedModel<'_>,
    delta: f64,
    rel_tol: f64,
    max_iter: usize,
) -> SubproblemResult {
    assert!(delta > 0.0, "trust radius must be positive");
    assert!(rel_tol > 0.0 && rel_tol < 1.0, "rel_tol must lie in (0,1)");
    assert!(max_iter >= 1);
    let dim = model.dim();
    let g = model.gradient();
    let g_norm = norm2(g);
    if g_norm == 0.0 {
        return SubproblemResult::zero(dim);
    }

    let mut s = vec![0.0; dim];
    let mut r = g.to_vec(); // model gradient at s = 0
    let mut direction = linalg::scale(-1.0, g);
    let mut rr = dot(&r, &r);
    let tol = rel_tol * g_norm;
    let mut iterations = 0;
    let mut on_boundary = false;

    while iterations < max_iter {
        iterations += 1;
        let bd = model.apply_curvature(&direction);
        let dbd = dot(&direction, &bd);
        let dd = dot(&direction, &direction);
        if dbd <= f64::EPSILON * dd {
            // zero or negative curvature: ride the direction to the boundary
            let tau = boundary_tau(&s, &direction, delta);
            linalg::axpy(tau, &direction, &mut s);
            on_boundary = true;
            break;
        }
        let alpha = rr / dbd;
        let mut s_next = s.clone();
        linalg::axpy(alpha, &direction, &mut s_next);
        if norm2(&s_next) >= delta {
            let tau = boundary_tau(&s, &direction, delta);
            linalg::axpy(tau, &direction, &mut s);
            on_boundary = true;
            break;
        }
        s = s_next;
        linalg::axpy(alpha, &bd, &mut r);
        let rr_next = dot(&r, &r);
        if rr_next.sqrt() <= tol {
            break;
        }
        let beta = rr_next / rr;
        rr = rr_next;
        for j in 0..dim {
            direction[j] = -r[j] + beta * direction[j];
        }
    }

    let predicted_decrease = model.decrease(&s);
    let result = SubproblemResult {
        step: s,
        predicted_decrease,
        on_boundary,
        cg_iterations: iterations,
    };

    // Guarantee the Cauchy decrease even under rounding.
    let cauchy = cauchy_point(model, delta);
    if result.predicted_decrease < cauchy.predicted_decrease || !result.predicted_decrease.is_finite()
    {
        return SubproblemResult {
            cg_iterations: iterations,
            ..cauchy
        };
    }
    result
}

/// Positive root of `‖s + τ·dir‖ = Δ`.
fn boundary_tau(s: &[f64], dir: &[f64], delta: f64) -> f64 {
    let dd = dot(dir, dir);
    if dd == 0.0 {
        return 0.0;
    }
    let sd = dot(s, dir);
    let ss = dot(s, s);
    let discriminant = (sd * sd + dd * (delta * delta - ss)).max(0.0);
    (-sd + discriminant.sqrt()) / dd
}

/// Conjugate-gradient solve of `(B + σI)s = −g` to relative residual
/// `rel_tol`; the reported decrease is measured against the model alone
/// (the `σ` term is only the step-control device).
pub fn regularized_solve(
    model: &ReducedModel<'_>,
    sigma: f64,
    rel_tol: f64,
    max_iter: usize,
) -> SubproblemResult {
    assert!(sigma > 0.0, "regularization weight must be positive");
    assert!(rel_tol > 0.0 && rel_tol < 1.0);
    assert!(max_iter >= 1);
    let dim = model.dim();
    let g = model.gradient();
    let g_norm = norm2(g);
    if g_norm == 0.0 {
        return SubproblemResult::zero(dim);
    }

    let apply = |v: &[f64]| {
        let mut out = model.apply_curvature(v);
        linalg::axpy(sigma, v, &mut out);
        out
    };

    let mut s = vec![0.0; dim];
    let mut r = linalg::scale(-1.0, g); // residual b − As at s = 0
    let mut p = r.clone();
    let mut rr = dot(&r, &r);
    let tol = rel_tol * g_norm;
    let mut iterations = 0;

    while iterations < max_iter && rr.sqrt() > tol {
        iterations += 1;
        let ap = apply(&p);
        let pap = dot(&p, &ap);
        if pap <= 0.0 {
            break; // σ > 0 makes this impossible in exact arithmetic
        }
        let alpha = rr / pap;
        linalg::axpy(alpha, &p, &mut s);
        linalg::axpy(-alpha, &ap, &mut r);
        let rr_next = dot(&r, &r);
        let beta = rr_next / rr;
        rr = rr_next;
        for j in 0..dim {
            p[j] = r[j] + beta * p[j];
        }
    }

    SubproblemResult {
        predicted_decrease: model.decrease(&s),
        step: s,
        on_boundary: false,
        cg_iterations: iterations,
    }
}

/// Check the Cauchy decrease condition
/// `m(0) − m(s) ≥ c₁‖g‖·min(Δ, ‖g‖/‖B‖)` with `10⁻¹²` absolute slack, using
/// the model's cached curvature-norm estimate.
pub fn verify_cauchy(model: &ReducedModel<'_>, delta: f64, step: &[f64], c1: f64) -> bool {
    assert!(c1 > 0.0 && c1 <= 1.0, "c1 must lie in (0, 1]");
    let gnorm = norm2(model.gradient());
    let required = if gnorm == 0.0 {
        0.0
    } else {
        let b_norm = model.curvature_norm_estimate();
        let curvature_scale = if b_norm > 0.0 {
            gnorm / b_norm
        } else {
            f64::INFINITY
        };
        c1 * gnorm * delta.min(curvature_scale)
    };
    model.decrease(step) >= required - 1e-12
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::DenseMatrix;
    use crate::seeded_rng;
    use rand::Rng;

    fn diagonal_model(f0: f64, g: Vec<f64>, diag: Vec<f64>) -> ReducedModel<'static> {
        ReducedModel::new(f0, g, move |v| {
            v.iter().zip(&diag).map(|(vi, di)| vi * di).collect()
        })
    }

    fn random_psd_model(seed: u64, l: usize) -> (ReducedModel<'static>, DenseMatrix) {
        let mut rng = seeded_rng(seed);
        let rows = l + 2;
        let m = DenseMatrix::from_rows(
            rows,
            l,
            (0..rows * l).map(|_| rng.random::<f64>() * 2.0 - 1.0).collect(),
        );
        let g: Vec<f64> = (0..l).map(|_| rng.random::<f64>() * 2.0 - 1.0).collect();
        let m2 = m.clone();
        let model = ReducedModel::new(1.0, g, move |v| m2.mul_transpose_vec(&m2.mul_vec(v)));
        (model, m)
    }

    #[test]
    fn cauchy_zero_gradient_is_null_step() {
        let model = diagonal_model(1.0, vec![0.0, 0.0], vec![1.0, 1.0]);
        let result = cauchy_point(&model, 2.0);
        assert_eq!(result.step, vec![0.0, 0.0]);
        assert_eq!(result.predicted_decrease, 0.0);
    }

    #[test]
    fn cauchy_interior_minimizer_on_identity_curvature() {
        let model = diagonal_model(0.0, vec![1.0, 0.0], vec![1.0, 1.0]);
        let result = cauchy_point(&model, 2.0);
        assert!((result.step[0] + 1.0).abs() < 1e-14);
        assert_eq!(result.step[1], 0.0);
        assert!((result.predicted_decrease - 0.5).abs() < 1e-14);
        assert!(!result.on_boundary);

        // 1-D grid search along −g confirms the optimum
        let best = (0..=2000)
            .map(|i| {
                let t = 2.0 * i as f64 / 2000.0;
                model.decrease(&[-t, 0.0])
            })
            .fold(f64::NEG_INFINITY, f64::max);
        assert!(result.predicted_decrease >= best - 1e-6);
    }

    #[test]
    fn cauchy_zero_curvature_rides_to_boundary() {
        let model = diagonal_model(0.0, vec![1.0, 0.0], vec![0.0, 0.0]);
        let result = cauchy_point(&model, 3.0);
        assert!((result.step[0] + 3.0).abs() < 1e-14);
        assert!((result.predicted_decrease - 3.0).abs() < 1e-14);
        assert!(result.on_boundary);
    }

    #[test]
    fn steihaug_recovers_newton_step_inside_radius() {
        let g = vec![0.3, -1.2, 0.8];
        let model = diagonal_model(0.0, g.clone(), vec![1.0, 1.0, 1.0]);
        let result = steihaug_cg(&model, 1e6, 1e-10, 10);
        for (si, gi) in result.step.iter().zip(&g) {
            assert!((si + gi).abs() < 1e-10);
        }
        let expected = 0.5 * dot(&g, &g);
        assert!((result.predicted_decrease - expected).abs() < 1e-10);
        assert!(!result.on_boundary);
    }

    #[test]
    fn steihaug_diagonal_closed_form() {
        // B = diag(1, 100), g = (1,1), Δ = 10 → s = (−1, −0.01)
        let model = diagonal_model(0.0, vec![1.0, 1.0], vec![1.0, 100.0]);
        let result = steihaug_cg(&model, 10.0, 1e-12, 50);
        assert!((result.step[0] + 1.0).abs() < 1e-10);
        assert!((result.step[1] + 0.01).abs() < 1e-10);
        assert!((result.predicted_decrease - 0.505).abs() < 1e-10);
        assert!(result.cg_iterations <= 2);
    }

    #[test]
    fn steihaug_dominates_cauchy_on_random_instances() {
        for seed in 0..50 {
            let (model, _) = random_psd_model(seed, 6);
            for delta in [0.05, 0.5, 5.0] {
                let cp = cauchy_point(&model, delta);
                let cg = steihaug_cg(&model, delta, 1e-8, 12);
                assert!(
                    cg.predicted_decrease >= cp.predicted_decrease - 1e-12,
                    "seed {seed} delta {delta}"
                );
                assert!(norm2(&cg.step) <= delta * (1.0 + 1e-10));
                assert!(norm2(&cp.step) <= delta * (1.0 + 1e-10));
                assert!(cg.predicted_decrease >= 0.0);
            }
        }
    }

    #[test]
    fn steihaug_zero_curvature_hits_boundary() {
        let model = diagonal_model(0.0, vec![2.0, 0.0], vec![0.0, 0.0]);
        let result = steihaug_cg(&model, 1.5, 1e-8, 5);
        assert!(result.on_boundary);
        assert!((norm2(&result.step) - 1.5).abs() < 1e-12);
        // decrease = Δ‖g‖ for a linear model
        assert!((result.predicted_decrease - 3.0).abs() < 1e-12);
    }

    #[test]
    fn regularized_zero_curvature_is_scaled_steepest_descent() {
        let model = diagonal_model(0.0, vec![2.0, 0.0], vec![0.0, 0.0]);
        let result = regularized_solve(&model, 1.0, 1e-12, 10);
        assert!((result.step[0] + 2.0).abs() < 1e-12);
        assert_eq!(result.step[1], 0.0);
    }

    #[test]
    fn regularized_identity_curvature_halves_the_step() {
        let model = diagonal_model(0.0, vec![1.0, 0.0], vec![1.0, 1.0]);
        let result = regularized_solve(&model, 1.0, 1e-12, 10);
        assert!((result.step[0] + 0.5).abs() < 1e-12);
    }

    #[test]
    fn regularized_step_norm_shrinks_with_sigma() {
        let model = diagonal_model(0.0, vec![1.0, -2.0, 0.5], vec![2.0, 0.1, 1.0]);
        let mut last = f64::INFINITY;
        for sigma in [1.0, 10.0, 100.0] {
            let result = regularized_solve(&model, sigma, 1e-12, 50);
            let norm = norm2(&result.step);
            assert!(norm < last, "σ = {sigma}: ‖s‖ = {norm} not shrinking");
            assert!(result.predicted_decrease >= 0.0);
            last = norm;
        }
    }

    #[test]
    fn verify_cauchy_accepts_cauchy_point_and_rejects_null_step() {
        for seed in 0..50 {
            let (model, _) = random_psd_model(seed, 5);
            let delta = 0.1 + (seed as f64) * 0.07;
            let cp = cauchy_point(&model, delta);
            assert!(verify_cauchy(&model, delta, &cp.step, 0.5), "seed {seed}");
            let cg = steihaug_cg(&model, delta, 1e-8, 10);
            assert!(verify_cauchy(&model, delta, &cg.step, 0.5), "seed {seed}");
            assert!(!verify_cauchy(&model, delta, &vec![0.0; 5], 0.5));
        }
    }

    #[test]
    fn gauss_newton_model_is_symmetric_psd() {
        let mut rng = seeded_rng(77);
        let (model, m) = random_psd_model(31, 7);
        for _ in 0..20 {
            let v: Vec<f64> = (0..7).map(|_| rng.random::<f64>() * 2.0 - 1.0).collect();
            let w: Vec<f64> = (0..7).map(|_| rng.random::<f64>() * 2.0 - 1.0).collect();
            let bv = model.apply_curvature(&v);
            let bw = model.apply_curvature(&w);
            let lhs = dot(&bv, &w);
            let rhs = dot(&v, &bw);
            assert!((lhs - rhs).abs() <= 1e-12 * lhs.abs().max(1.0));
            assert!(dot(&v, &bv) >= -1e-12 * dot(&v, &v));
        }
        // the cached norm estimate is a lower bound on the true norm
        let true_norm_ub = (0..m.cols())
            .map(|j| {
                let mut e = vec![0.0; m.cols()];
                e[j] = 1.0;
                norm2(&m.mul_transpose_vec(&m.mul_vec(&e)))
            })
            .sum::<f64>(); // crude upper bound via column sums
        assert!(model.curvature_norm_estimate() <= true_norm_ub);
    }

    #[test]
    fn model_value_matches_quadratic_form() {
        let model = diagonal_model(3.0, vec![1.0, -1.0], vec![2.0, 4.0]);
        let s = [0.5, 0.25];
        // f0 + g·s + ½ sᵀBs = 3 + (0.5 − 0.25) + ½(2·0.25 + 4·0.0625)
        let expected = 3.0 + 0.25 + 0.5 * (0.5 + 0.25);
        assert!((model.value(&s) - expected).abs() < 1e-14);
        assert!((model.decrease(&s) - (model.value(&[0.0, 0.0]) - model.value(&s))).abs() < 1e-14);
    }
}
