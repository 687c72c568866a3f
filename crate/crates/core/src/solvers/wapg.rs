use std::sync::Arc;
use std::time::Instant;

use super::{initial_guess, trace_psnr, SolverTrace, TraceRecord};
use crate::error::{check_len, Error, Result};
use crate::linops::{AdjointOperator, ComposedOperator, LinearOperator, NormalOperator, Operator};
use crate::problems::{ProblemInstance, Regularizer};
use crate::prox::{
    mixed_norm_value, wpm_mixed_dual, BoxConstraint, DualVariable, GroupNorm, MixedDualProblem, SeparableProx,
    SoftThreshold,
    StructuredWpm,
};
use crate::rng::Rng;
use crate::sketch::{nystrom_approx, NystromOptions, Preconditioner};
use crate::vector::dot;

#[derive(Debug, Clone, PartialEq)]
pub struct WapgConfig {
    pub lambda: f64,
    pub phi: GroupNorm,
    /// Sketch size; 0 runs plain APG.
    pub sketch_k: usize,
    /// `μ = mu_rel · ŝ₁`.
    pub mu_rel: f64,
    pub sqrt_tail: bool,
    pub power_iters: usize,
    /// Fixed step; defaults to `1/(1.1·L)` with `L` from power iteration.
    pub step: Option<f64>,
    pub outer_max: usize,
    /// Overrides the problem's default constraint.
    pub constraint: Option<BoxConstraint>,
    pub inner_tol: f64,
    pub inner_max: usize,
    pub x0: Option<Vec<f64>>,
}

impl Default for WapgConfig {
    fn default() -> Self {
        Self {
            lambda: 1e-2,
            phi: GroupNorm::L2,
            sketch_k: 0,
            mu_rel: 1e-6,
            sqrt_tail: true,
            power_iters: 50,
            step: None,
            outer_max: 100,
            constraint: None,
            inner_tol: 1e-6,
            inner_max: 200,
            x0: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct WapgState {
    pub x: Vec<f64>,
    pub u: Vec<f64>,
    pub t: f64,
    pub k: usize,
}

impl WapgState {
    fn new(x0: Vec<f64>) -> Self {
        Self {
            u: x0.clone(),
            x: x0,
            t: 1.0,
            k: 0,
        }
    }

    /// `t⁺ = (1+√(1+4t²))/2`, `u = x⁺ + ((t−1)/t⁺)(x⁺ − x)`.
    fn advance(&mut self, x_next: Vec<f64>) {
        let t_next = (1.0 + (1.0 + 4.0 * self.t * self.t).sqrt()) / 2.0;
        let beta = (self.t - 1.0) / t_next;
        for i in 0..x_next.len() {
            self.u[i] = x_next[i] + beta * (x_next[i] - self.x[i]);
        }
        self.x = x_next;
        self.t = t_next;
        self.k += 1;
    }
}

/// Power-iteration estimate of `λ_max(P^{-1/2} AᵀA P^{-1/2})`.
pub fn estimate_lipschitz_pnorm(a: &dyn LinearOperator, pre: &Preconditioner, iters: usize, rng: &mut Rng) -> Result<f64> {
    if iters == 0 {
        return Err(Error::InvalidArgument("power iteration needs at least one step".into()));
    }
    check_len(a.domain_dim(), pre.dim())?;
    let op = |v: &[f64]| {
        let w = pre.apply_pinv_half(v);
        pre.apply_pinv_half(&a.adjoint(&a.apply(&w)))
    };
    let mut v = rng.normal_vec(a.domain_dim());
    let mut est = 0.0;
    for _ in 0..iters {
        let nv = crate::vector::norm2(&v);
        if nv == 0.0 {
            return Ok(0.0);
        }
        crate::vector::scale(1.0 / nv, &mut v);
        let w = op(&v);
        est = dot(&v, &w);
        v = w;
    }
    Ok(est)
}

/// `½‖Ax − y‖² + λ‖Lx‖_{1,φ}`.
pub fn wapg_cost(problem: &ProblemInstance, x: &[f64], lambda: f64, phi: GroupNorm) -> Result<f64> {
    let r: Vec<f64> = problem.a.apply(x).iter().zip(&problem.y).map(|(a, b)| a - b).collect();
    let lx = problem.l.apply(x);
    Ok(0.5 * dot(&r, &r) + lambda * mixed_norm_value(&lx, phi, problem.groups)?)
}

fn validate(cfg: &WapgConfig) -> Result<()> {
    if !(cfg.lambda >= 0.0 && cfg.lambda.is_finite()) {
        return Err(Error::InvalidArgument(format!("λ must be nonnegative, got {}", cfg.lambda)));
    }
    if let Some(a) = cfg.step {
        if !(a > 0.0 && a.is_finite()) {
            return Err(Error::InvalidArgument(format!("step must be positive, got {a}")));
        }
    }
    if !(cfg.mu_rel > 0.0) || cfg.power_iters == 0 || cfg.inner_max == 0 || !(cfg.inner_tol > 0.0) {
        return Err(Error::InvalidArgument("invalid WAPG configuration".into()));
    }
    Ok(())
}

/// Sketches `Φ`, or returns the identity for `k = 0`. The result has
/// `σ_min = 1`.
fn sketch_preconditioner(phi: &dyn LinearOperator, cfg: &WapgConfig, rng: &mut Rng) -> Result<Preconditioner> {
    let n = phi.domain_dim();
    if cfg.sketch_k == 0 {
        return Ok(Preconditioner::identity(n));
    }
    let factor = nystrom_approx(phi, cfg.sketch_k.min(n), NystromOptions::default(), rng)?;
    let top = factor.eigenvalues().first().copied().unwrap_or(0.0);
    let mu = if top > 0.0 { cfg.mu_rel * top } else { cfg.mu_rel };
    Ok(Preconditioner::new(&factor, mu, cfg.sqrt_tail)?.with_unit_floor())
}

/// Weighted APG with a Nyström sketch of `AᵀA` (or of `W AᵀA Wᵀ` for an
/// orthogonal wavelet regularizer) taken once before the loop.
pub fn wapg_solve(problem: &ProblemInstance, cfg: &WapgConfig, rng: &mut Rng) -> Result<(Vec<f64>, SolverTrace)> {
    validate(cfg)?;
    let start = Instant::now();
    let target: Operator = match problem.regularizer {
        Regularizer::Wavelet => Arc::new(ComposedOperator::new(
            Arc::clone(&problem.a),
            Arc::new(AdjointOperator(Arc::clone(&problem.l))),
        )?),
        _ => Arc::clone(&problem.a),
    };
    let pre = sketch_preconditioner(&NormalOperator(target), cfg, rng)?;
    let sketch_s = start.elapsed().as_secs_f64();
    run(problem, cfg, &pre, rng, start, sketch_s)
}

/// As [`wapg_solve`] with a caller-supplied metric, which must satisfy
/// `σ_min(P) = 1`.
pub fn wapg_solve_with(
    problem: &ProblemInstance,
    cfg: &WapgConfig,
    pre: &Preconditioner,
    rng: &mut Rng,
) -> Result<(Vec<f64>, SolverTrace)> {
    validate(cfg)?;
    run(problem, cfg, pre, rng, Instant::now(), 0.0)
}

fn run(
    problem: &ProblemInstance,
    cfg: &WapgConfig,
    pre: &Preconditioner,
    rng: &mut Rng,
    start: Instant,
    sketch_s: f64,
) -> Result<(Vec<f64>, SolverTrace)> {
    let n = problem.dim();
    check_len(n, pre.dim())?;
    let constraint = cfg.constraint.unwrap_or(problem.constraint);
    let wavelet = problem.regularizer == Regularizer::Wavelet;
    if wavelet && !constraint.is_unbounded() {
        return Err(Error::InvalidArgument("the wavelet path does not support a box constraint".into()));
    }
    let a: Operator = if wavelet {
        Arc::new(ComposedOperator::new(
            Arc::clone(&problem.a),
            Arc::new(AdjointOperator(Arc::clone(&problem.l))),
        )?)
    } else {
        Arc::clone(&problem.a)
    };
    let alpha = match cfg.step {
        Some(s) => s,
        None => 1.0 / (1.1 * estimate_lipschitz_pnorm(a.as_ref(), pre, cfg.power_iters, rng)?),
    };
    let x0 = match &cfg.x0 {
        Some(x0) => {
            check_len(n, x0.len())?;
            x0.clone()
        }
        None => initial_guess(problem),
    };
    let x0 = if wavelet { problem.l.apply(&x0) } else { constraint.clamp_vec(x0) };

    let lambda_bar = alpha * cfg.lambda;
    let dual_problem = MixedDualProblem {
        l: problem.l.as_ref(),
        structure: problem.groups,
        phi: cfg.phi,
        l_norm_sq: problem.l_norm_sq,
        constraint,
        inner_tol: cfg.inner_tol,
        inner_max: cfg.inner_max,
    };
    let shrink = SoftThreshold { tau: lambda_bar };
    let mut gamma = vec![0.0; pre.u_bar().ncols()];
    let mut q = DualVariable::zeros(problem.groups);

    let mut state = WapgState::new(x0);
    let mut trace = SolverTrace::default();
    for k in 1..=cfg.outer_max {
        let mut r = a.apply(&state.u);
        for i in 0..r.len() {
            r[i] -= problem.y[i];
        }
        let g = a.adjoint(&r);
        let g = if pre.is_identity() { g } else { pre.apply_pinv(&g) };
        let mut s = vec![0.0; n];
        for i in 0..n {
            s[i] = state.u[i] - alpha * g[i];
        }
        let (x_next, inner) = if wavelet {
            if pre.is_identity() {
                (shrink.prox(&s), 0)
            } else {
                let tol = 1e-11 * (1.0 + crate::vector::norm2(&s));
                let out = StructuredWpm::new(pre.u_bar(), 1.0, tol)?.solve(&shrink, &s, Some(&gamma))?;
                gamma = out.gamma;
                (out.point, out.iterations)
            }
        } else {
            let out = wpm_mixed_dual(&s, lambda_bar, &dual_problem, pre, Some(&q))?;
            q = out.q;
            (out.x, out.iterations)
        };
        state.advance(x_next);
        let x_img = if wavelet { problem.l.adjoint(&state.x) } else { state.x.clone() };
        let cost = wapg_cost(problem, &x_img, cfg.lambda, cfg.phi)?;
        if !cost.is_finite() {
            return Err(Error::NonFinite("WAPG objective"));
        }
        trace.push(TraceRecord {
            iter: k,
            elapsed_s: start.elapsed().as_secs_f64(),
            cost,
            psnr: trace_psnr(problem, &x_img),
            inner_iters: inner,
            sketch_s: if k == 1 { sketch_s } else { 0.0 },
            baseline_inner_iters: None,
        });
    }
    let x = if wavelet { problem.l.adjoint(&state.x) } else { state.x };
    Ok((x, trace))
}
