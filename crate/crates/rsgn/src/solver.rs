//! Randomised subspace Gauss-Newton outer iterations.
//!
//! Each iteration draws a fresh sketch `S_k`, forms the reduced model from
//! `l` Jacobian actions, solves it approximately, and accepts or rejects the
//! candidate `x_k + Sᵀ_k s_k` on the ratio of actual to predicted decrease:
//!
//! * trust region ([`rsgn_tr`]): step from Steihaug-CG inside `‖s‖ ≤ Δ_k`;
//!   accept → `Δ·γ₂`, reject → `Δ·γ₁`;
//! * quadratic regularization ([`rsgn_qr`]): step from `(B + σ_k I)s = −g`;
//!   accept → `σ/γ₂` (floored), reject → `σ/γ₁` (regularization grows).
//!
//! Solves are fully deterministic given the seed: iteration `k` draws its
//! sketch from a child seed derived from `(seed, k)`, so traces reproduce
//! bit-for-bit (timing fields aside).

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, norm2};
use crate::problems::{objective_from_residual, sketched_jacobian, NlsProblem};
use crate::sketch::{draw, SketchKind};
use crate::subproblem::{
    regularized_solve, steihaug_cg, verify_cauchy, ReducedModel, SubproblemResult,
};

/// Trust-region solver parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrConfig {
    /// Acceptance threshold `η ∈ (0,1)`.
    pub eta: f64,
    /// Radius shrink factor `γ₁ ∈ (0,1)`.
    pub gamma1: f64,
    /// Coupling exponent: `γ₂ = γ₁^{−c}` for a positive integer `c`.
    pub c: u32,
    /// Radius growth factor, must equal `γ₁^{−c}`.
    pub gamma2: f64,
    /// Initial radius `Δ₀ > 0`.
    pub delta0: f64,
    /// Radius cap; growth clips here.
    pub delta_max: f64,
    /// Radius floor; shrinking past it terminates with a numerical failure.
    pub delta_min: f64,
    /// Sketch dimension `l`.
    pub l: usize,
    /// Sketch ensemble.
    pub sketch: SketchKind,
    /// Cauchy constant used by the per-iteration decrease check.
    pub c1: f64,
    /// Iteration budget `N`.
    pub max_iters: usize,
    /// Stop once `f(x_k)` falls to this level.
    pub f_target: Option<f64>,
    /// Evaluate the full gradient every this many iterations (0 = never).
    /// Diagnostics only — the solver itself never needs `∇f`.
    pub grad_diag_every: usize,
    /// Base seed; iteration `k` sketches from a child seed of `(seed, k)`.
    pub seed: u64,
    /// CG relative residual tolerance.
    pub cg_rel_tol: f64,
    /// CG iteration cap (default `2l`).
    pub cg_max_iter: Option<usize>,
    /// Starting point (default: the origin).
    pub x0: Option<Vec<f64>>,
}

impl TrConfig {
    pub fn new(l: usize, sketch: SketchKind) -> Self {
        Self {
            eta: 0.1,
            gamma1: 0.5,
            c: 1,
            gamma2: 2.0,
            delta0: 1.0,
            delta_max: 1e6,
            delta_min: 1e-16,
            l,
            sketch,
            c1: 0.5,
            max_iters: 100,
            f_target: None,
            grad_diag_every: 0,
            seed: 0,
            cg_rel_tol: 1e-8,
            cg_max_iter: None,
            x0: None,
        }
    }

    /// Set `γ₁` and `c`, recomputing `γ₂ = γ₁^{−c}`.
    pub fn with_radius_factors(mut self, gamma1: f64, c: u32) -> Self {
        self.gamma1 = gamma1;
        self.c = c;
        self.gamma2 = gamma1.powi(-(c as i32));
        self
    }

    /// Set `Δ₀` (and rescale the cap to `10⁶·Δ₀`).
    pub fn with_delta0(mut self, delta0: f64) -> Self {
        self.delta0 = delta0;
        self.delta_max = 1e6 * delta0;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_max_iters(mut self, max_iters: usize) -> Self {
        self.max_iters = max_iters;
        self
    }

    pub fn with_f_target(mut self, f_target: f64) -> Self {
        self.f_target = Some(f_target);
        self
    }

    pub fn with_x0(mut self, x0: Vec<f64>) -> Self {
        self.x0 = Some(x0);
        self
    }

    pub fn with_grad_diag_every(mut self, every: usize) -> Self {
        self.grad_diag_every = every;
        self
    }

    /// Validate against a problem dimension; returns informational warnings.
    pub fn validate(&self, d: usize) -> Result<Vec<String>> {
        let mut warnings = validate_common(
            self.eta,
            self.gamma1,
            self.c,
            self.gamma2,
            self.c1,
            self.l,
            d,
            self.sketch,
            self.x0.as_deref(),
        )?;
        if self.delta0 <= 0.0 {
            return Err(Error::InvalidConfig(format!(
                "delta0 must be positive, got {}",
                self.delta0
            )));
        }
        if self.delta_min <= 0.0 || self.delta_max < self.delta0 {
            return Err(Error::InvalidConfig(
                "need 0 < delta_min and delta_max >= delta0".into(),
            ));
        }
        warnings.extend(theory_warnings(self.c));
        Ok(warnings)
    }
}

/// Quadratic-regularization solver parameters; mirrors [`TrConfig`] with the
/// radius replaced by the regularization weight `σ`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QrConfig {
    pub eta: f64,
    pub gamma1: f64,
    pub c: u32,
    pub gamma2: f64,
    /// Initial regularization weight `σ₀ > 0`.
    pub sigma0: f64,
    /// Floor for `σ` on accepted steps.
    pub sigma_min: f64,
    pub l: usize,
    pub sketch: SketchKind,
    pub max_iters: usize,
    pub f_target: Option<f64>,
    pub grad_diag_every: usize,
    pub seed: u64,
    pub cg_rel_tol: f64,
    pub cg_max_iter: Option<usize>,
    pub x0: Option<Vec<f64>>,
}

impl QrConfig {
    pub fn new(l: usize, sketch: SketchKind) -> Self {
        Self {
            eta: 0.1,
            gamma1: 0.5,
            c: 1,
            gamma2: 2.0,
            sigma0: 1.0,
            sigma_min: 1e-16,
            l,
            sketch,
            max_iters: 100,
            f_target: None,
            grad_diag_every: 0,
            seed: 0,
            cg_rel_tol: 1e-8,
            cg_max_iter: None,
            x0: None,
        }
    }

    pub fn with_sigma0(mut self, sigma0: f64) -> Self {
        self.sigma0 = sigma0;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_max_iters(mut self, max_iters: usize) -> Self {
        self.max_iters = max_iters;
        self
    }

    pub fn with_f_target(mut self, f_target: f64) -> Self {
        self.f_target = Some(f_target);
        self
    }

    pub fn with_x0(mut self, x0: Vec<f64>) -> Self {
        self.x0 = Some(x0);
        self
    }

    pub fn validate(&self, d: usize) -> Result<Vec<String>> {
        let mut warnings = validate_common(
            self.eta,
            self.gamma1,
            self.c,
            self.gamma2,
            0.5,
            self.l,
            d,
            self.sketch,
            self.x0.as_deref(),
        )?;
        if self.sigma0 <= 0.0 || self.sigma_min <= 0.0 {
            return Err(Error::InvalidConfig(format!(
                "sigma0 and sigma_min must be positive, got {} and {}",
                self.sigma0, self.sigma_min
            )));
        }
        warnings.extend(theory_warnings(self.c));
        Ok(warnings)
    }
}

/// `c₂ = (c+2)/(2c+2)` from the convergence theory.
pub fn c2_constant(c: u32) -> f64 {
    (c as f64 + 2.0) / (2.0 * c as f64 + 2.0)
}

fn theory_warnings(c: u32) -> Vec<String> {
    let c2 = c2_constant(c);
    vec![format!(
        "c2 = {c2:.4} (c = {c}); the convergence theory requires the sketch \
         success probability 1 - delta_S > c2, which is distribution- and \
         l-dependent and not checkable in closed form"
    )]
}

#[allow(clippy::too_many_arguments)]
fn validate_common(
    eta: f64,
    gamma1: f64,
    c: u32,
    gamma2: f64,
    c1: f64,
    l: usize,
    d: usize,
    sketch: SketchKind,
    x0: Option<&[f64]>,
) -> Result<Vec<String>> {
    if !(eta > 0.0 && eta < 1.0) {
        return Err(Error::InvalidConfig(format!(
            "eta must lie in (0,1), got {eta}"
        )));
    }
    if !(gamma1 > 0.0 && gamma1 < 1.0) {
        return Err(Error::InvalidConfig(format!(
            "gamma1 must lie in (0,1), got {gamma1}"
        )));
    }
    if c < 1 {
        return Err(Error::InvalidConfig("c must be a positive integer".into()));
    }
    let expected = gamma1.powi(-(c as i32));
    if !((gamma2 - expected).abs() <= 1e-12 * expected.abs()) {
        return Err(Error::InvalidConfig(format!(
            "gamma2 = {gamma2} violates gamma2 = gamma1^-c = {expected}"
        )));
    }
    if !(c1 > 0.0 && c1 <= 1.0) {
        return Err(Error::InvalidConfig(format!(
            "c1 must lie in (0,1], got {c1}"
        )));
    }
    if l < 1 || l > d {
        return Err(Error::InvalidConfig(format!(
            "sketch dimension l = {l} must satisfy 1 <= l <= d = {d}"
        )));
    }
    if let SketchKind::Hashing { s } = sketch {
        if s < 1 || s > l {
            return Err(Error::InvalidConfig(format!(
                "hashing s = {s} must satisfy 1 <= s <= l = {l}"
            )));
        }
    }
    if sketch == SketchKind::Identity && l != d {
        return Err(Error::InvalidConfig(format!(
            "identity sketch requires l = d, got l = {l}, d = {d}"
        )));
    }
    if let Some(x0) = x0 {
        if x0.len() != d {
            return Err(Error::InvalidConfig(format!(
                "x0 has length {}, problem dimension is {d}",
                x0.len()
            )));
        }
    }
    Ok(Vec::new())
}

/// The ratio of actual to model-predicted decrease.
///
/// Returns `−∞` when the trial objective is non-finite or the predicted
/// decrease is below `10⁻¹⁵·max(1, f)`, which forces a rejection and a
/// shrink instead of dividing by a vanishing denominator.
pub fn compute_rho(f_current: f64, f_trial: f64, model_decrease: f64) -> f64 {
    if !f_trial.is_finite() {
        return f64::NEG_INFINITY;
    }
    if model_decrease <= 1e-15 * f_current.max(1.0) {
        return f64::NEG_INFINITY;
    }
    (f_current - f_trial) / model_decrease
}

/// Why a solve stopped.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    BudgetExhausted,
    FTargetReached,
    NumericalFailure,
}

/// One outer iteration's record.
#[derive(Debug, Clone, PartialEq)]
pub struct IterRecord {
    pub k: usize,
    /// Objective value after this iteration (unchanged on rejection).
    pub f_value: f64,
    /// Decrease ratio; `−∞` encodes a forced rejection.
    pub rho: f64,
    /// The radius (TR) or regularization weight (QR) the step was computed
    /// with.
    pub delta_or_sigma: f64,
    pub accepted: bool,
    pub predicted_decrease: f64,
    /// Norm of the reduced-space step `s_k`.
    pub step_norm: f64,
    /// Child seed the iteration's sketch was drawn from.
    pub sketch_seed: u64,
    /// Cauchy-decrease check outcome (trust region only).
    pub cauchy_ok: Option<bool>,
    /// Cumulative wall-clock milliseconds since the solve started.
    pub wall_clock_ms: f64,
    /// `‖∇f(x)‖` at the post-iteration iterate, when diagnostics are on.
    pub full_gradient_norm: Option<f64>,
}

/// Which configuration produced a trace.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum ConfigSnapshot {
    TrustRegion(TrConfig),
    QuadraticReg(QrConfig),
}

/// Full per-iteration history of one solve.
#[derive(Debug, Clone)]
pub struct RunTrace {
    pub config: ConfigSnapshot,
    pub records: Vec<IterRecord>,
    pub x_final: Vec<f64>,
    pub f_final: f64,
    pub termination: Termination,
}

impl RunTrace {
    /// Objective values of accepted iterations, in order.
    pub fn accepted_f_values(&self) -> Vec<f64> {
        self.records
            .iter()
            .filter(|r| r.accepted)
            .map(|r| r.f_value)
            .collect()
    }

    /// First iteration whose recorded gradient norm is at or below `eps`.
    pub fn iterations_to_gradient(&self, eps: f64) -> Option<usize> {
        self.records
            .iter()
            .find(|r| r.full_gradient_norm.is_some_and(|g| g <= eps))
            .map(|r| r.k)
    }

    /// First iteration whose objective is at or below `target`.
    pub fn iterations_to_target(&self, target: f64) -> Option<usize> {
        self.records.iter().find(|r| r.f_value <= target).map(|r| r.k)
    }
}

enum StepControl {
    TrustRegion {
        delta: f64,
        gamma1: f64,
        gamma2: f64,
        delta_min: f64,
        delta_max: f64,
        c1: f64,
    },
    QuadraticReg {
        sigma: f64,
        gamma1: f64,
        gamma2: f64,
        sigma_min: f64,
    },
}

impl StepControl {
    fn current(&self) -> f64 {
        match self {
            StepControl::TrustRegion { delta, .. } => *delta,
            StepControl::QuadraticReg { sigma, .. } => *sigma,
        }
    }

    fn solve(&self, model: &ReducedModel<'_>, rel_tol: f64, max_iter: usize) -> SubproblemResult {
        match self {
            StepControl::TrustRegion { delta, .. } => {
                steihaug_cg(model, *delta, rel_tol, max_iter)
            }
            StepControl::QuadraticReg { sigma, .. } => {
                regularized_solve(model, *sigma, rel_tol, max_iter)
            }
        }
    }

    fn cauchy_check(&self, model: &ReducedModel<'_>, step: &[f64]) -> Option<bool> {
        match self {
            StepControl::TrustRegion { delta, c1, .. } => {
                Some(verify_cauchy(model, *delta, step, *c1))
            }
            StepControl::QuadraticReg { .. } => None,
        }
    }

    fn on_accept(&mut self) {
        match self {
            StepControl::TrustRegion {
                delta,
                gamma2,
                delta_max,
                ..
            } => *delta = (*delta * *gamma2).min(*delta_max),
            StepControl::QuadraticReg {
                sigma,
                gamma2,
                sigma_min,
                ..
            } => *sigma = (*sigma / *gamma2).max(*sigma_min),
        }
    }

    /// Returns `false` when the control parameter has degenerated and the
    /// solve should stop with a numerical failure.
    fn on_reject(&mut self) -> bool {
        match self {
            StepControl::TrustRegion {
                delta,
                gamma1,
                delta_min,
                ..
            } => {
                *delta *= *gamma1;
                *delta >= *delta_min
            }
            StepControl::QuadraticReg { sigma, gamma1, .. } => {
                *sigma /= *gamma1;
                sigma.is_finite()
            }
        }
    }
}

struct LoopParams {
    eta: f64,
    l: usize,
    sketch: SketchKind,
    max_iters: usize,
    f_target: Option<f64>,
    grad_diag_every: usize,
    seed: u64,
    cg_rel_tol: f64,
    cg_max_iter: usize,
    x0: Option<Vec<f64>>,
}

/// Trust-region R-SGN.
pub fn rsgn_tr<P: NlsProblem + ?Sized>(problem: &P, config: &TrConfig) -> Result<RunTrace> {
    for warning in config.validate(problem.dim())? {
        log::debug!("{warning}");
    }
    let params = LoopParams {
        eta: config.eta,
        l: config.l,
        sketch: config.sketch,
        max_iters: config.max_iters,
        f_target: config.f_target,
        grad_diag_every: config.grad_diag_every,
        seed: config.seed,
        cg_rel_tol: config.cg_rel_tol,
        cg_max_iter: config.cg_max_iter.unwrap_or(2 * config.l),
        x0: config.x0.clone(),
    };
    let control = StepControl::TrustRegion {
        delta: config.delta0,
        gamma1: config.gamma1,
        gamma2: config.gamma2,
        delta_min: config.delta_min,
        delta_max: config.delta_max,
        c1: config.c1,
    };
    run_loop(
        problem,
        params,
        control,
        ConfigSnapshot::TrustRegion(config.clone()),
    )
}

/// Quadratic-regularization R-SGN.
pub fn rsgn_qr<P: NlsProblem + ?Sized>(problem: &P, config: &QrConfig) -> Result<RunTrace> {
    for warning in config.validate(problem.dim())? {
        log::debug!("{warning}");
    }
    let params = LoopParams {
        eta: config.eta,
        l: config.l,
        sketch: config.sketch,
        max_iters: config.max_iters,
        f_target: config.f_target,
        grad_diag_every: config.grad_diag_every,
        seed: config.seed,
        cg_rel_tol: config.cg_rel_tol,
        cg_max_iter: config.cg_max_iter.unwrap_or(2 * config.l),
        x0: config.x0.clone(),
    };
    let control = StepControl::QuadraticReg {
        sigma: config.sigma0,
        gamma1: config.gamma1,
        gamma2: config.gamma2,
        sigma_min: config.sigma_min,
    };
    run_loop(
        problem,
        params,
        control,
        ConfigSnapshot::QuadraticReg(config.clone()),
    )
}

fn run_loop<P: NlsProblem + ?Sized>(
    problem: &P,
    params: LoopParams,
    mut control: StepControl,
    snapshot: ConfigSnapshot,
) -> Result<RunTrace> {
    let d = problem.dim();
    let start = Instant::now();
    let mut x = params.x0.clone().unwrap_or_else(|| vec![0.0; d]);

    let (mut f, mut residual) = match evaluate(problem, &x)? {
        Some(pair) => pair,
        None => {
            // non-finite objective at the starting point
            return Ok(RunTrace {
                config: snapshot,
                records: Vec::new(),
                x_final: x,
                f_final: f64::INFINITY,
                termination: Termination::NumericalFailure,
            });
        }
    };

    let mut records = Vec::with_capacity(params.max_iters);
    let mut termination = Termination::BudgetExhausted;

    if params.f_target.is_some_and(|t| f <= t) {
        termination = Termination::FTargetReached;
        return Ok(RunTrace {
            config: snapshot,
            records,
            x_final: x,
            f_final: f,
            termination,
        });
    }

    for k in 0..params.max_iters {
        let control_value = control.current();
        let sketch_seed = linalg::mix_seed(params.seed, &[k as u64]);
        let sketch = draw(params.sketch, params.l, d, &mut crate::seeded_rng(sketch_seed))?;
        let jacobian = sketched_jacobian(problem, &x, &sketch)?;
        let model = ReducedModel::from_jacobian(f, &jacobian, &residual);

        let sub = control.solve(&model, params.cg_rel_tol, params.cg_max_iter);
        let step_norm = norm2(&sub.step);
        let cauchy_ok = control.cauchy_check(&model, &sub.step);

        let full_step = sketch.apply_transpose(&sub.step)?;
        let mut x_trial = x.clone();
        linalg::axpy(1.0, &full_step, &mut x_trial);

        let trial = evaluate(problem, &x_trial)?;
        let f_trial = trial.as_ref().map_or(f64::INFINITY, |(ft, _)| *ft);
        let rho = compute_rho(f, f_trial, sub.predicted_decrease);
        let accepted = rho >= params.eta;

        let mut failed = false;
        if accepted {
            let (ft, rt) = trial.expect("accepted trial is finite");
            x = x_trial;
            f = ft;
            residual = rt;
            control.on_accept();
        } else {
            failed = !control.on_reject();
        }

        let full_gradient_norm = if params.grad_diag_every > 0 && k % params.grad_diag_every == 0 {
            Some(norm2(&problem.gradient(&x)?))
        } else {
            None
        };

        records.push(IterRecord {
            k,
            f_value: f,
            rho,
            delta_or_sigma: control_value,
            accepted,
            predicted_decrease: sub.predicted_decrease,
            step_norm,
            sketch_seed,
            cauchy_ok,
            wall_clock_ms: start.elapsed().as_secs_f64() * 1e3,
            full_gradient_norm,
        });

        if failed {
            termination = Termination::NumericalFailure;
            break;
        }
        if params.f_target.is_some_and(|t| f <= t) {
            termination = Termination::FTargetReached;
            break;
        }
    }

    Ok(RunTrace {
        config: snapshot,
        records,
        x_final: x,
        f_final: f,
        termination,
    })
}

/// Objective and residual at `x`; `None` when the objective is non-finite
/// (either a non-finite residual component or an overflowing sum).
fn evaluate<P: NlsProblem + ?Sized>(problem: &P, x: &[f64]) -> Result<Option<(f64, Vec<f64>)>> {
    let residual = match problem.residual(x) {
        Ok(r) => r,
        Err(Error::NonFiniteResidual { .. }) => return Ok(None),
        Err(e) => return Err(e),
    };
    match objective_from_residual(&residual) {
        Ok(f) if f.is_finite() => Ok(Some((f, residual))),
        Ok(_) => Ok(None),
        Err(Error::NonFiniteResidual { .. }) => Ok(None),
        Err(e) => Err(e),
    }
}
