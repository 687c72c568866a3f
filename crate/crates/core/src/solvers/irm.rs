use std::sync::Arc;
use std::time::Instant;

use super::{initial_guess, trace_psnr, SolverTrace, TraceRecord};
use crate::error::{check_len, Error, Result};
use crate::krylov::{cg, pcg};
use crate::linops::{DiagonalWeight, GramOperator};
use crate::problems::ProblemInstance;
use crate::rng::Rng;
use crate::sketch::{nystrom_approx, NystromOptions, Preconditioner};
use crate::vector::{dist2, norm2};

/// `(a_p, b_p)` with `min_{β>0} β r² + 1/(b_p β^{a_p}) = |r|^p`.
pub fn half_quadratic_constants(p: f64) -> Result<(f64, f64)> {
    if !(p > 0.0 && p < 2.0) {
        return Err(Error::InvalidArgument(format!("p must lie in (0, 2), got {p}")));
    }
    let a = p / (2.0 - p);
    let b = 2f64.powf(2.0 / (2.0 - p)) / ((2.0 - p) * p.powf(p / (2.0 - p)));
    Ok((a, b))
}

#[derive(Debug, Clone, PartialEq)]
pub struct IrmConfig {
    pub p: f64,
    pub q: f64,
    pub lambda: f64,
    /// Residuals enter the weights as `√(r² + ε)`.
    pub eps_smooth: f64,
    pub outer_tol: f64,
    pub outer_max: usize,
    pub inner_tol: f64,
    pub inner_max: usize,
    /// Sketch size; 0 runs plain CG.
    pub sketch_k: usize,
    /// `μ = mu_floor · ŝ₁`.
    pub mu_floor: f64,
    pub sqrt_tail: bool,
    /// Also run unpreconditioned CG on every inner system and record its count.
    pub compare: bool,
    pub x0: Option<Vec<f64>>,
}

impl Default for IrmConfig {
    fn default() -> Self {
        Self {
            p: 1.0,
            q: 1.0,
            lambda: 1e-3,
            eps_smooth: 1e-4,
            outer_tol: 1e-4,
            outer_max: 30,
            inner_tol: crate::krylov::DEFAULT_TOL,
            inner_max: 200,
            sketch_k: 0,
            mu_floor: 1e-6,
            sqrt_tail: false,
            compare: false,
            x0: None,
        }
    }
}

impl IrmConfig {
    pub fn validate(&self) -> Result<()> {
        for (name, e) in [("p", self.p), ("q", self.q)] {
            if !(e > 0.0 && e <= 2.0) {
                return Err(Error::InvalidArgument(format!("{name} must lie in (0, 2], got {e}")));
            }
        }
        let positive = [
            ("λ", self.lambda),
            ("ε_smooth", self.eps_smooth),
            ("outer_tol", self.outer_tol),
            ("inner_tol", self.inner_tol),
            ("mu_floor", self.mu_floor),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidArgument(format!("{name} must be positive, got {v}")));
            }
        }
        if self.outer_max == 0 || self.inner_max == 0 {
            return Err(Error::InvalidArgument("iteration budgets must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct IrmState {
    pub x: Vec<f64>,
    /// One weight per measurement.
    pub v: Vec<f64>,
    /// One weight per entry of `Lx`, shared within a group.
    pub z: Vec<f64>,
    pub k: usize,
}

fn weight(e: f64, sq: f64, eps: f64) -> f64 {
    if e == 2.0 {
        1.0
    } else {
        0.5 * e * (sq + eps).powf(0.5 * (e - 2.0))
    }
}

/// Closed-form minimizers `v`, `z` of `F` at `x`; group magnitudes are
/// Euclidean.
pub fn update_weights(
    x: &[f64],
    problem: &ProblemInstance,
    p: f64,
    q: f64,
    eps: f64,
) -> Result<(Vec<f64>, Vec<f64>)> {
    check_len(problem.dim(), x.len())?;
    let mut r = problem.a.apply(x);
    for (ri, yi) in r.iter_mut().zip(&problem.y) {
        *ri -= yi;
    }
    let v = r.iter().map(|ri| weight(p, ri * ri, eps)).collect();
    let lx = problem.l.apply(x);
    let g = problem.groups.group_size();
    let mut z = vec![0.0; lx.len()];
    for (zc, lc) in z.chunks_exact_mut(g).zip(lx.chunks_exact(g)) {
        let w = weight(q, lc.iter().map(|t| t * t).sum(), eps);
        zc.fill(w);
    }
    Ok((v, z))
}

/// Half-quadratic constants, or `None` for a plain quadratic term.
type Consts = Option<(f64, f64)>;

fn term(e: Consts, w: f64, sq: f64, eps: f64) -> f64 {
    match e {
        None => sq,
        Some((a, b)) => w * (sq + eps) + 1.0 / (b * w.powf(a)),
    }
}

fn consts(e: f64) -> Result<Consts> {
    if e == 2.0 {
        Ok(None)
    } else {
        half_quadratic_constants(e).map(Some)
    }
}

/// Half-quadratic objective
/// `(1/p)Σ (v(r²+ε) + 1/(b_p v^{a_p})) + (λ/q)Σ_groups (z(‖(Lx)ₗ‖²+ε) + 1/(b_q z^{a_q}))`.
///
/// With `eps = 0` this is the unsmoothed form; an exponent equal to 2
/// contributes its plain quadratic term.
pub fn irm_cost(
    x: &[f64],
    v: &[f64],
    z: &[f64],
    problem: &ProblemInstance,
    p: f64,
    q: f64,
    lambda: f64,
    eps: f64,
) -> Result<f64> {
    check_len(problem.dim(), x.len())?;
    check_len(problem.y.len(), v.len())?;
    check_len(problem.l.range_dim(), z.len())?;
    let (cp, cq) = (consts(p)?, consts(q)?);
    let ax = problem.a.apply(x);
    let fit: f64 = ax
        .iter()
        .zip(&problem.y)
        .zip(v)
        .map(|((a, y), w)| term(cp, *w, (a - y) * (a - y), eps))
        .sum();
    let lx = problem.l.apply(x);
    let g = problem.groups.group_size();
    let reg: f64 = lx
        .chunks_exact(g)
        .zip(z.chunks_exact(g))
        .map(|(lc, zc)| term(cq, zc[0], lc.iter().map(|t| t * t).sum(), eps))
        .sum();
    let f = fit / p + lambda * reg / q;
    if !f.is_finite() {
        return Err(Error::NonFinite("reweighted objective"));
    }
    Ok(f)
}

/// Alternating minimization over `v`, `z` and `x`; each `x`-step solves
/// the weighted normal equations with CG, preconditioned by a fresh
/// Nyström sketch when `sketch_k > 0`.
pub fn irm_solve(problem: &ProblemInstance, cfg: &IrmConfig, rng: &mut Rng) -> Result<(Vec<f64>, SolverTrace)> {
    cfg.validate()?;
    let n = problem.dim();
    let mut x = match &cfg.x0 {
        Some(x0) => {
            check_len(n, x0.len())?;
            x0.clone()
        }
        None => initial_guess(problem),
    };
    let start = Instant::now();
    let mut trace = SolverTrace::default();
    let wf_scale = 2.0 / cfg.p;
    let wg_scale = 2.0 / cfg.q;
    for k in 1..=cfg.outer_max {
        let (v, z) = update_weights(&x, problem, cfg.p, cfg.q, cfg.eps_smooth)?;
        let wf: Vec<f64> = v.iter().map(|t| wf_scale * t).collect();
        let wg: Vec<f64> = z.iter().map(|t| wg_scale * t).collect();
        let rhs = {
            let wy: Vec<f64> = problem.y.iter().zip(&wf).map(|(a, b)| a * b).collect();
            problem.a.adjoint(&wy)
        };
        let phi = GramOperator::new(
            Arc::clone(&problem.a),
            DiagonalWeight::new(wf)?,
            Arc::clone(&problem.l),
            DiagonalWeight::new(wg)?,
            cfg.lambda,
        )?;

        let mut sketch_s = 0.0;
        let report = if cfg.sketch_k > 0 {
            let t0 = Instant::now();
            let mut child = rng.fork();
            let factor = nystrom_approx(&phi, cfg.sketch_k.min(n), NystromOptions::default(), &mut child)?;
            let top = factor.eigenvalues().first().copied().unwrap_or(0.0);
            let mu = if top > 0.0 { cfg.mu_floor * top } else { cfg.mu_floor };
            let pre = Preconditioner::new(&factor, mu, cfg.sqrt_tail)?;
            sketch_s = t0.elapsed().as_secs_f64();
            pcg(&phi, &rhs, |r: &[f64]| pre.apply_pinv(r), cfg.inner_tol, cfg.inner_max, &x)?
        } else {
            cg(&phi, &rhs, cfg.inner_tol, cfg.inner_max, &x)?
        };
        let baseline = if cfg.compare {
            Some(cg(&phi, &rhs, cfg.inner_tol, cfg.inner_max, &x)?.iterations)
        } else {
            None
        };

        let x_new = report.solution;
        let change = dist2(&x_new, &x) / norm2(&x_new).max(f64::MIN_POSITIVE);
        x = x_new;
        let cost = irm_cost(&x, &v, &z, problem, cfg.p, cfg.q, cfg.lambda, cfg.eps_smooth)?;
        trace.push(TraceRecord {
            iter: k,
            elapsed_s: start.elapsed().as_secs_f64(),
            cost,
            psnr: trace_psnr(problem, &x),
            inner_iters: report.iterations,
            sketch_s,
            baseline_inner_iters: baseline,
        });
        if (cfg.p == 2.0 && cfg.q == 2.0) || change < cfg.outer_tol {
            break;
        }
    }
    Ok((x, trace))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::ImageGrid;
    use crate::linops::{GroupKind, GroupStructure, IdentityOperator, Operator};
    use crate::prox::BoxConstraint;
    use crate::problems::Regularizer;

    fn golden_min(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
        let g = 0.5 * (5f64.sqrt() - 1.0);
        for _ in 0..300 {
            let a = hi - g * (hi - lo);
            let b = lo + g * (hi - lo);
            if f(a) < f(b) {
                hi = b;
            } else {
                lo = a;
            }
        }
        0.5 * (lo + hi)
    }

    #[test]
    fn constants_at_p_one() {
        let (a, b) = half_quadratic_constants(1.0).unwrap();
        assert!((a - 1.0).abs() < 1e-15 && (b - 4.0).abs() < 1e-14);
        assert!(half_quadratic_constants(2.0).is_err());
        assert!(half_quadratic_constants(0.0).is_err());
    }

    #[test]
    fn envelope_identity_p_half() {
        let (a, b) = half_quadratic_constants(0.5).unwrap();
        let r: f64 = 3.0;
        let beta = 0.25 * r.powf(-1.5);
        let val = beta * r * r + 1.0 / (b * beta.powf(a));
        assert!((val - 3f64.sqrt()).abs() < 1e-10);
    }

    #[test]
    fn envelope_identity_grid_against_golden_section() {
        for p in [0.3, 0.5, 1.0, 1.5] {
            let (a, b) = half_quadratic_constants(p).unwrap();
            for i in 0..20 {
                let r = 0.1 * 100f64.powf(i as f64 / 19.0);
                let bracket = |lb: f64| {
                    let beta = lb.exp();
                    beta * r * r + 1.0 / (b * beta.powf(a))
                };
                let star = 0.5 * p * r.powf(p - 2.0);
                let lb = golden_min(bracket, star.ln() - 5.0, star.ln() + 5.0);
                assert!((bracket(lb) - r.powf(p)).abs() <= 1e-8, "p={p} r={r}");
                assert!((lb.exp() - star).abs() <= 1e-6 * star.max(1.0), "p={p} r={r}");
            }
        }
    }

    fn identity_problem(y: Vec<f64>) -> ProblemInstance {
        let n = y.len();
        let a: Operator = Arc::new(IdentityOperator(n));
        ProblemInstance {
            a: a.clone(),
            l: a,
            groups: GroupStructure::new(GroupKind::Scalar, n),
            regularizer: Regularizer::Tv,
            l_norm_sq: 1.0,
            y,
            ground_truth: ImageGrid::zeros(n, 1),
            peak: 1.0,
            constraint: BoxConstraint::unbounded(),
            label: "identity".into(),
        }
    }

    #[test]
    fn weight_examples() {
        let p = identity_problem(vec![-4.0, 0.0]);
        let (v, _) = update_weights(&[0.0, 0.0], &p, 2.0, 2.0, 1e-4).unwrap();
        assert_eq!(v, vec![1.0, 1.0]);
        let (v, _) = update_weights(&[0.0, 0.0], &p, 1.0, 1.0, 1e-4).unwrap();
        assert!((v[0] - 0.125).abs() < 1e-6);
        assert!((v[1] - 50.0).abs() < 1e-9);
    }

    #[test]
    fn cost_at_optimal_weights_is_original_objective() {
        let p = identity_problem(vec![1.5, -0.3, 2.0]);
        let x = [0.2, 0.4, -1.0];
        let (v, z) = update_weights(&x, &p, 0.5, 1.0, 1e-14).unwrap();
        let f = irm_cost(&x, &v, &z, &p, 0.5, 1.0, 0.7, 0.0).unwrap();
        let orig: f64 = x.iter().zip(&p.y).map(|(a, b)| (a - b).abs().powf(0.5)).sum::<f64>() / 0.5
            + 0.7 * x.iter().map(|t| t.abs()).sum::<f64>();
        assert!((f - orig).abs() < 1e-8, "{f} vs {orig}");
    }

    #[test]
    fn cost_at_zero_is_penalty_only() {
        let p = identity_problem(vec![0.0; 3]);
        let v = vec![2.0; 3];
        let z = vec![0.5; 3];
        let (ap, bp) = half_quadratic_constants(1.0).unwrap();
        let expect = 3.0 / (bp * 2f64.powf(ap)) + 0.3 * 3.0 / (bp * 0.5f64.powf(ap));
        let f = irm_cost(&[0.0; 3], &v, &z, &p, 1.0, 1.0, 0.3, 0.0).unwrap();
        assert!((f - expect).abs() < 1e-12);
    }

    #[test]
    fn ridge_in_one_outer_iteration() {
        let y = vec![1.0, -2.0, 0.5, 4.0];
        let p = identity_problem(y.clone());
        let cfg = IrmConfig {
            p: 2.0,
            q: 2.0,
            lambda: 0.5,
            inner_tol: 1e-12,
            ..IrmConfig::default()
        };
        let (x, trace) = irm_solve(&p, &cfg, &mut Rng::new(0)).unwrap();
        assert_eq!(trace.len(), 1);
        for (a, b) in x.iter().zip(&y) {
            assert!((a - b / 1.5).abs() < 1e-8);
        }
    }

    #[test]
    fn rejects_bad_config() {
        let p = identity_problem(vec![1.0]);
        for cfg in [
            IrmConfig { p: 2.5, ..IrmConfig::default() },
            IrmConfig { lambda: 0.0, ..IrmConfig::default() },
            IrmConfig { eps_smooth: -1.0, ..IrmConfig::default() },
        ] {
            assert!(irm_solve(&p, &cfg, &mut Rng::new(0)).is_err());
        }
    }
}
