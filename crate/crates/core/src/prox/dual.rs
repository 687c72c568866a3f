use super::groups::{mixed_norm_value, project_group_ball_in_place, DualVariable, GroupNorm};
use super::wpm::StructuredWpm;
use super::{BoxConstraint, SeparableProx};
use crate::error::{check_len, Error, Result};
use crate::linops::{GroupStructure, LinearOperator};
use crate::sketch::Preconditioner;
use crate::vector::{dot, norm2};

/// `min_{x∈C} ½‖x − s‖²_P + λ̄‖Lx‖_{1,φ}`, solved through its dual.
#[derive(Clone, Copy)]
pub struct MixedDualProblem<'a> {
    pub l: &'a dyn LinearOperator,
    pub structure: GroupStructure,
    pub phi: GroupNorm,
    /// Upper bound on `‖L‖²`.
    pub l_norm_sq: f64,
    pub constraint: BoxConstraint,
    pub inner_tol: f64,
    pub inner_max: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DualOutcome {
    pub x: Vec<f64>,
    pub q: DualVariable,
    pub iterations: usize,
}

/// `prox^P_{δC}` with the Newton multiplier carried between calls.
struct WeightedProjection<'a> {
    pre: &'a Preconditioner,
    c: BoxConstraint,
    gamma: Vec<f64>,
}

impl<'a> WeightedProjection<'a> {
    fn new(pre: &'a Preconditioner, c: BoxConstraint) -> Self {
        Self {
            pre,
            c,
            gamma: vec![0.0; pre.u_bar().ncols()],
        }
    }

    fn apply(&mut self, w: &[f64]) -> Result<Vec<f64>> {
        if self.c.is_unbounded() {
            return Ok(w.to_vec());
        }
        if self.gamma.is_empty() {
            return Ok(self.c.prox(w));
        }
        let tol = 1e-11 * (1.0 + norm2(w));
        let out = StructuredWpm::new(self.pre.u_bar(), 1.0, tol)?.solve(&self.c, w, Some(&self.gamma))?;
        self.gamma = out.gamma;
        Ok(out.point)
    }
}

impl MixedDualProblem<'_> {
    fn validate(&self, s: &[f64], lambda_bar: f64, pre: &Preconditioner) -> Result<()> {
        check_len(self.l.domain_dim(), s.len())?;
        check_len(pre.dim(), s.len())?;
        self.structure.validate(self.l.range_dim())?;
        if !(lambda_bar >= 0.0 && lambda_bar.is_finite()) {
            return Err(Error::InvalidArgument(format!("λ̄ must be nonnegative, got {lambda_bar}")));
        }
        if !(self.l_norm_sq > 0.0) {
            return Err(Error::InvalidArgument("‖L‖² bound must be positive".into()));
        }
        if pre.min_eigenvalue() < 1.0 - 1e-12 {
            return Err(Error::InvalidArgument("preconditioner must satisfy σ_min(P) = 1".into()));
        }
        Ok(())
    }

    /// `w = s − λ̄P⁻¹LᵀQ`.
    fn shifted(&self, s: &[f64], lambda_bar: f64, pre: &Preconditioner, q: &[f64]) -> Vec<f64> {
        let lt = self.l.adjoint(q);
        let lt = if pre.is_identity() { lt } else { pre.apply_pinv(&lt) };
        s.iter().zip(&lt).map(|(si, li)| si - lambda_bar * li).collect()
    }
}

/// Weighted prox of `λ̄‖L·‖_{1,φ} + δ_C` in the metric of `P`, by
/// accelerated projected gradient on the dual.
pub fn wpm_mixed_dual(
    s: &[f64],
    lambda_bar: f64,
    problem: &MixedDualProblem<'_>,
    pre: &Preconditioner,
    warm: Option<&DualVariable>,
) -> Result<DualOutcome> {
    problem.validate(s, lambda_bar, pre)?;
    let mut proj = WeightedProjection::new(pre, problem.constraint);
    if lambda_bar == 0.0 {
        return Ok(DualOutcome {
            x: proj.apply(s)?,
            q: DualVariable::zeros(problem.structure),
            iterations: 0,
        });
    }
    let mut q = match warm {
        Some(w) => {
            check_len(problem.structure.len(), w.values().len())?;
            w.clone()
        }
        None => DualVariable::zeros(problem.structure),
    };
    let mut r = q.clone();
    let mut t = 1.0f64;
    let step = 1.0 / (lambda_bar * problem.l_norm_sq);
    let mut x_prev: Option<Vec<f64>> = None;
    let mut iterations = 0;
    while iterations < problem.inner_max {
        iterations += 1;
        let x_r = proj.apply(&problem.shifted(s, lambda_bar, pre, r.values()))?;
        let lx = problem.l.apply(&x_r);
        let mut q_next = r.clone();
        for (v, g) in q_next.values_mut().iter_mut().zip(&lx) {
            *v += step * g;
        }
        project_group_ball_in_place(&mut q_next, problem.phi);
        let t_next = 0.5 * (1.0 + (1.0 + 4.0 * t * t).sqrt());
        let beta = (t - 1.0) / t_next;
        r = q_next.clone();
        for ((rv, qn), qo) in r.values_mut().iter_mut().zip(q_next.values()).zip(q.values()) {
            *rv = qn + beta * (qn - qo);
        }
        q = q_next;
        t = t_next;
        let done = match &x_prev {
            Some(prev) => {
                let change = crate::vector::dist2(&x_r, prev);
                change <= problem.inner_tol * norm2(&x_r).max(f64::MIN_POSITIVE)
            }
            None => false,
        };
        x_prev = Some(x_r);
        if done {
            break;
        }
    }
    let x = proj.apply(&problem.shifted(s, lambda_bar, pre, q.values()))?;
    Ok(DualOutcome { x, q, iterations })
}

/// Primal value at the recovered `x(Q)`, dual value at `Q`, and their gap.
pub fn mixed_dual_gap(
    s: &[f64],
    lambda_bar: f64,
    problem: &MixedDualProblem<'_>,
    pre: &Preconditioner,
    q: &DualVariable,
) -> Result<(f64, f64, f64)> {
    problem.validate(s, lambda_bar, pre)?;
    let mut proj = WeightedProjection::new(pre, problem.constraint);
    let x = proj.apply(&problem.shifted(s, lambda_bar, pre, q.values()))?;
    let d: Vec<f64> = x.iter().zip(s).map(|(a, b)| a - b).collect();
    let fit = 0.5 * dot(&d, &pre.apply_p(&d));
    let lx = problem.l.apply(&x);
    let primal = fit + lambda_bar * mixed_norm_value(&lx, problem.phi, problem.structure)?;
    let dual = fit + lambda_bar * dot(q.values(), &lx);
    Ok((primal, dual, primal - dual))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linops::{grad_operator, GroupKind, IdentityOperator, MatrixOperator};
    use crate::prox::soft_threshold;
    use crate::rng::Rng;
    use crate::DenseMatrix;

    fn problem<'a>(l: &'a dyn LinearOperator, s: GroupStructure, phi: GroupNorm, lns: f64, c: BoxConstraint) -> MixedDualProblem<'a> {
        MixedDualProblem {
            l,
            structure: s,
            phi,
            l_norm_sq: lns,
            constraint: c,
            inner_tol: 1e-12,
            inner_max: 20_000,
        }
    }

    #[test]
    fn zero_lambda_is_projection() {
        let l = IdentityOperator(4);
        let p = problem(&l, GroupStructure::new(GroupKind::Scalar, 4), GroupNorm::L1, 1.0, BoxConstraint::unit());
        let out = wpm_mixed_dual(&[-1.0, 0.5, 2.0, 0.1], 0.0, &p, &Preconditioner::identity(4), None).unwrap();
        assert_eq!(out.x, vec![0.0, 0.5, 1.0, 0.1]);
        assert!(out.q.values().iter().all(|v| *v == 0.0));
    }

    #[test]
    fn two_pixel_tv_closed_form() {
        let l = MatrixOperator(DenseMatrix::from_row_slice(1, 2, &[1.0, -1.0]));
        let p = problem(&l, GroupStructure::new(GroupKind::Scalar, 1), GroupNorm::L1, 2.0, BoxConstraint::unbounded());
        for (x1, x2, lam) in [(3.0, 1.0, 0.4), (3.0, 1.0, 5.0), (-1.0, 2.5, 0.25)] {
            let out = wpm_mixed_dual(&[x1, x2], lam, &p, &Preconditioner::identity(2), None).unwrap();
            let shrink = f64::min(lam, (x1 - x2).abs() / 2.0) * (x1 - x2).signum();
            assert!((out.x[0] - (x1 - shrink)).abs() < 1e-10, "{:?}", out.x);
            assert!((out.x[1] - (x2 + shrink)).abs() < 1e-10);
        }
    }

    #[test]
    fn identity_l_reduces_to_soft_threshold_then_box() {
        let mut rng = Rng::new(4);
        let n = 20;
        let s: Vec<f64> = rng.normal_vec(n).iter().map(|v| 0.5 + v).collect();
        let l = IdentityOperator(n);
        let p = problem(&l, GroupStructure::new(GroupKind::Scalar, n), GroupNorm::L1, 1.0, BoxConstraint::unit());
        let out = wpm_mixed_dual(&s, 0.3, &p, &Preconditioner::identity(n), None).unwrap();
        let expect = BoxConstraint::unit().prox(&soft_threshold(&s, 0.3));
        for (a, b) in out.x.iter().zip(&expect) {
            assert!((a - b).abs() < 1e-8);
        }
    }

    fn small_image(rng: &mut Rng, n: usize) -> Vec<f64> {
        (0..n * n)
            .map(|k| {
                let (i, j) = (k % n, k / n);
                let base = if i >= 2 && i < 6 && j >= 3 { 0.8 } else { 0.2 };
                base + 0.3 * rng.normal_vec(1)[0]
            })
            .collect()
    }

    #[test]
    fn tv_gap_closes() {
        let mut rng = Rng::new(12);
        let s = small_image(&mut rng, 8);
        let (g, gs) = grad_operator(8, 8).unwrap();
        let mut p = problem(&g, gs, GroupNorm::L2, 8.0, BoxConstraint::unit());
        let pre = Preconditioner::identity(64);
        for tol in [1e-4, 1e-5, 1e-6, 1e-7, 1e-8] {
            p.inner_tol = tol;
            let out = wpm_mixed_dual(&s, 0.1, &p, &pre, None).unwrap();
            let (primal, _, gap) = mixed_dual_gap(&s, 0.1, &p, &pre, &out.q).unwrap();
            assert!(gap >= -1e-12);
            assert!(gap <= 10.0 * tol * (1.0 + primal.abs()), "tol {tol} gap {gap}");
        }
    }

    #[test]
    fn preconditioned_tv_is_weighted_optimum() {
        // compare against the P = I solution transported to the weighted problem by brute force
        let mut rng = Rng::new(13);
        let n = 6;
        let s = small_image(&mut rng, n);
        let (g, gs) = grad_operator(n, n).unwrap();
        let mut u = crate::rng::standard_normal_matrix(n * n, 3, &mut rng);
        let qr = u.clone().qr();
        u = qr.q().columns(0, 3).into_owned();
        let f = crate::sketch::NystromFactor::new(u, vec![9.0, 4.0, 1.0], 0.0, 0).unwrap();
        let pre = Preconditioner::new(&f, 1.0, false).unwrap().with_unit_floor();
        let mut p = problem(&g, gs, GroupNorm::L1, 8.0, BoxConstraint::unit());
        p.inner_tol = 1e-12;
        let out = wpm_mixed_dual(&s, 0.05, &p, &pre, None).unwrap();
        let (primal, _, gap) = mixed_dual_gap(&s, 0.05, &p, &pre, &out.q).unwrap();
        assert!(gap <= 1e-8 * (1.0 + primal.abs()), "gap {gap}");
        assert!(BoxConstraint::unit().contains(&out.x));
    }
}
