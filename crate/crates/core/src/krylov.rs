//! Conjugate gradients with optional preconditioning.
//!
//! Both solvers stop on the unpreconditioned residual `‖b − Φx‖/‖b‖`, so
//! iteration counts with and without a preconditioner are directly
//! comparable.

use crate::error::{check_len, Error, Result};
use crate::linops::LinearOperator;
use crate::vector::{axpy, dot, norm2};

pub const DEFAULT_TOL: f64 = 1e-4;
pub const DEFAULT_MAXITER: usize = 500;

#[derive(Debug, Clone, PartialEq)]
pub struct KrylovReport {
    pub solution: Vec<f64>,
    pub iterations: usize,
    pub final_relres: f64,
    pub converged: bool,
}

/// Plain CG on `Φx = b` starting from `x0`.
pub fn cg(
    phi: &dyn LinearOperator,
    b: &[f64],
    tol: f64,
    maxiter: usize,
    x0: &[f64],
) -> Result<KrylovReport> {
    pcg(phi, b, |r: &[f64]| r.to_vec(), tol, maxiter, x0)
}

/// Preconditioned CG; `pinv` applies the (SPD) inverse preconditioner.
pub fn pcg<M>(
    phi: &dyn LinearOperator,
    b: &[f64],
    pinv: M,
    tol: f64,
    maxiter: usize,
    x0: &[f64],
) -> Result<KrylovReport>
where
    M: Fn(&[f64]) -> Vec<f64>,
{
    let n = phi.domain_dim();
    check_len(n, b.len())?;
    check_len(n, x0.len())?;
    if !(tol > 0.0) {
        return Err(Error::InvalidArgument(format!("tolerance must be positive, got {tol}")));
    }
    let bnorm = norm2(b);
    if bnorm == 0.0 {
        return Ok(KrylovReport {
            solution: vec![0.0; n],
            iterations: 0,
            final_relres: 0.0,
            converged: true,
        });
    }

    let mut x = x0.to_vec();
    let mut r = b.to_vec();
    axpy(-1.0, &phi.apply(&x), &mut r);
    let mut relres = norm2(&r) / bnorm;
    if relres <= tol {
        return Ok(KrylovReport {
            solution: x,
            iterations: 0,
            final_relres: relres,
            converged: true,
        });
    }

    let mut z = pinv(&r);
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    let mut q = vec![0.0; n];
    for k in 1..=maxiter {
        phi.apply_into(&p, &mut q);
        let curvature = dot(&p, &q);
        if !(curvature > 0.0) {
            return Err(Error::Breakdown {
                iteration: k,
                curvature,
            });
        }
        let alpha = rz / curvature;
        axpy(alpha, &p, &mut x);
        axpy(-alpha, &q, &mut r);
        relres = norm2(&r) / bnorm;
        if !relres.is_finite() {
            return Err(Error::NonFinite("CG residual"));
        }
        if relres <= tol {
            return Ok(KrylovReport {
                solution: x,
                iterations: k,
                final_relres: relres,
                converged: true,
            });
        }
        z = pinv(&r);
        let rz_next = dot(&r, &z);
        let beta = rz_next / rz;
        rz = rz_next;
        for (pi, zi) in p.iter_mut().zip(&z) {
            *pi = zi + beta * *pi;
        }
    }
    Ok(KrylovReport {
        solution: x,
        iterations: maxiter,
        final_relres: relres,
        converged: false,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dense::{matvec, DenseMatrix};
    use crate::linops::{DiagonalOperator, IdentityOperator, MatrixOperator};
    use crate::rng::Rng;
    use crate::vector::dist2;

    fn random_spd(n: usize, rng: &mut Rng) -> DenseMatrix {
        let g = rng.standard_normal_matrix(n, n);
        &g * g.transpose() + DenseMatrix::identity(n, n) * 0.5
    }

    #[test]
    fn identity_in_one_step() {
        let b = vec![1.0, 2.0, -3.0];
        let r = cg(&IdentityOperator(3), &b, 1e-12, 10, &[0.0; 3]).unwrap();
        assert_eq!(r.iterations, 1);
        assert!(r.converged);
        assert!(dist2(&r.solution, &b) < 1e-15);
    }

    #[test]
    fn matches_dense_solve() {
        let mut rng = Rng::new(6);
        let a = random_spd(5, &mut rng);
        let b = rng.normal_vec(5);
        let r = cg(&MatrixOperator(a.clone()), &b, 1e-13, 100, &[0.0; 5]).unwrap();
        let exact = a.lu().solve(&nalgebra::DVector::from_column_slice(&b)).unwrap();
        assert!(dist2(&r.solution, exact.as_slice()) < 1e-8);
    }

    #[test]
    fn exact_start_needs_no_iterations() {
        let mut rng = Rng::new(7);
        let a = random_spd(4, &mut rng);
        let x = rng.normal_vec(4);
        let b = matvec(&a, &x);
        let r = cg(&MatrixOperator(a), &b, 1e-8, 100, &x).unwrap();
        assert_eq!(r.iterations, 0);
        assert!(r.converged);
    }

    #[test]
    fn identity_preconditioner_is_bitwise_cg() {
        let mut rng = Rng::new(8);
        let a = MatrixOperator(random_spd(12, &mut rng));
        let b = rng.normal_vec(12);
        for maxiter in 1..10 {
            let plain = cg(&a, &b, 1e-14, maxiter, &[0.0; 12]).unwrap();
            let pre = pcg(&a, &b, |r: &[f64]| r.to_vec(), 1e-14, maxiter, &[0.0; 12]).unwrap();
            assert_eq!(plain, pre);
        }
    }

    #[test]
    fn exact_preconditioner_converges_immediately() {
        let mut rng = Rng::new(9);
        let a = random_spd(10, &mut rng);
        let inv = a.clone().try_inverse().unwrap();
        let b = rng.normal_vec(10);
        let r = pcg(&MatrixOperator(a), &b, |v: &[f64]| matvec(&inv, v), 1e-10, 50, &[0.0; 10]).unwrap();
        assert!(r.converged && r.iterations <= 2, "{}", r.iterations);
    }

    #[test]
    fn energy_error_decreases() {
        let mut rng = Rng::new(10);
        let a = random_spd(15, &mut rng);
        let b = rng.normal_vec(15);
        let exact = a.clone().lu().solve(&nalgebra::DVector::from_column_slice(&b)).unwrap();
        let energy = |x: &[f64]| {
            let e: Vec<f64> = x.iter().zip(exact.iter()).map(|(u, v)| u - v).collect();
            dot(&e, &matvec(&a, &e))
        };
        let op = MatrixOperator(a.clone());
        let mut prev = f64::INFINITY;
        for k in 1..15 {
            let r = cg(&op, &b, 1e-300, k, &[0.0; 15]).unwrap();
            let e = energy(&r.solution);
            assert!(e <= prev * (1.0 + 1e-10) + 1e-20);
            prev = e;
        }
    }

    #[test]
    fn indefinite_breakdown() {
        let op = DiagonalOperator(vec![1.0, -1.0]);
        let r = cg(&op, &[1.0, 1.0], 1e-10, 10, &[0.0, 0.0]);
        assert!(matches!(r, Err(Error::Breakdown { .. })));
    }

    #[test]
    fn zero_rhs_and_bad_tol() {
        let r = cg(&IdentityOperator(2), &[0.0, 0.0], 1e-6, 10, &[1.0, 1.0]).unwrap();
        assert_eq!(r.solution, vec![0.0, 0.0]);
        assert!(cg(&IdentityOperator(2), &[1.0, 0.0], 0.0, 10, &[0.0, 0.0]).is_err());
        assert!(cg(&IdentityOperator(2), &[1.0], 1e-3, 10, &[0.0, 0.0]).is_err());
    }
}
