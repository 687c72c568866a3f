use nalgebra::DVector;

use super::SeparableProx;
use crate::dense::{matvec, matvec_t, DenseMatrix};
use crate::error::{check_len, Error, Result};
use crate::vector::norm2;

const MAX_ITER: usize = 100;
const FALLBACK_STEPS: usize = 25;

#[derive(Debug, Clone, PartialEq)]
pub struct WpmOutcome {
    /// `prox^W(x)`.
    pub point: Vec<f64>,
    pub gamma: Vec<f64>,
    /// Norm of `Ūᵀ(x − prox(x ∓ Ūγ)) + γ` at the returned `γ`.
    pub residual: f64,
    pub iterations: usize,
}

/// Weighted proximal mapping for `W = I ± ŪŪᵀ`, reduced to an equation in
/// `r = Ū.ncols()` unknowns.
#[derive(Debug, Clone, Copy)]
pub struct StructuredWpm<'a> {
    u_bar: &'a DenseMatrix,
    sign: f64,
    tol: f64,
}

impl<'a> StructuredWpm<'a> {
    pub fn new(u_bar: &'a DenseMatrix, sign: f64, tol: f64) -> Result<Self> {
        if sign != 1.0 && sign != -1.0 {
            return Err(Error::InvalidArgument(format!("sign must be ±1, got {sign}")));
        }
        if !(tol > 0.0) {
            return Err(Error::InvalidArgument(format!("tolerance must be positive, got {tol}")));
        }
        Ok(Self { u_bar, sign, tol })
    }

    fn eval(&self, prox: &dyn SeparableProx, x: &[f64], gamma: &[f64], w: &mut [f64], u: &mut [f64]) -> Vec<f64> {
        let ug = matvec(self.u_bar, gamma);
        for i in 0..x.len() {
            w[i] = x[i] - self.sign * ug[i];
        }
        prox.prox_into(w, u);
        let diff: Vec<f64> = x.iter().zip(u.iter()).map(|(a, b)| a - b).collect();
        let mut r = matvec_t(self.u_bar, &diff);
        for (ri, gi) in r.iter_mut().zip(gamma) {
            *ri += gi;
        }
        r
    }

    fn newton_direction(&self, prox: &dyn SeparableProx, w: &[f64], res: &[f64]) -> Option<Vec<f64>> {
        let n = w.len();
        let r = res.len();
        let mut m = vec![0.0; n];
        prox.jacobian_diag(w, &mut m);
        let mut um = self.u_bar.clone();
        for j in 0..r {
            for (v, mi) in um.column_mut(j).iter_mut().zip(&m) {
                *v *= mi;
            }
        }
        let mut jac = self.u_bar.tr_mul(&um) * self.sign;
        for i in 0..r {
            jac[(i, i)] += 1.0;
        }
        let rhs = -DVector::from_column_slice(res);
        let d = jac.lu().solve(&rhs)?;
        d.iter().all(|v| v.is_finite()).then(|| d.as_slice().to_vec())
    }

    /// Gradient-type step length for the fixed-point fallback.
    fn damping(&self) -> f64 {
        if self.sign > 0.0 {
            let f2: f64 = self.u_bar.iter().map(|v| v * v).sum();
            1.0 / (1.0 + f2)
        } else {
            1.0
        }
    }

    pub fn solve(&self, prox: &dyn SeparableProx, x: &[f64], gamma0: Option<&[f64]>) -> Result<WpmOutcome> {
        let n = self.u_bar.nrows();
        let r = self.u_bar.ncols();
        check_len(n, x.len())?;
        let mut gamma = match gamma0 {
            Some(g) => {
                check_len(r, g.len())?;
                g.to_vec()
            }
            None => vec![0.0; r],
        };
        let mut w = vec![0.0; n];
        let mut u = vec![0.0; n];
        if r == 0 {
            prox.prox_into(x, &mut u);
            return Ok(WpmOutcome {
                point: u,
                gamma,
                residual: 0.0,
                iterations: 0,
            });
        }
        let mut res = self.eval(prox, x, &gamma, &mut w, &mut u);
        let mut rn = norm2(&res);
        let mut w_try = vec![0.0; n];
        let mut u_try = vec![0.0; n];
        for it in 0..MAX_ITER {
            if rn <= self.tol {
                return Ok(WpmOutcome {
                    point: u,
                    gamma,
                    residual: rn,
                    iterations: it,
                });
            }
            let mut accepted = false;
            if let Some(d) = self.newton_direction(prox, &w, &res) {
                let mut t = 1.0;
                for _ in 0..30 {
                    let g_try: Vec<f64> = gamma.iter().zip(&d).map(|(g, di)| g + t * di).collect();
                    let r_try = self.eval(prox, x, &g_try, &mut w_try, &mut u_try);
                    let rn_try = norm2(&r_try);
                    if rn_try <= (1.0 - 1e-4 * t) * rn {
                        gamma = g_try;
                        res = r_try;
                        rn = rn_try;
                        std::mem::swap(&mut w, &mut w_try);
                        std::mem::swap(&mut u, &mut u_try);
                        accepted = true;
                        break;
                    }
                    t *= 0.5;
                }
            }
            if !accepted {
                let theta = self.damping();
                for _ in 0..FALLBACK_STEPS {
                    for (g, ri) in gamma.iter_mut().zip(&res) {
                        *g -= theta * ri;
                    }
                    res = self.eval(prox, x, &gamma, &mut w, &mut u);
                    rn = norm2(&res);
                    if rn <= self.tol {
                        break;
                    }
                }
            }
        }
        if rn <= self.tol {
            return Ok(WpmOutcome {
                point: u,
                gamma,
                residual: rn,
                iterations: MAX_ITER,
            });
        }
        Err(Error::NoConvergence {
            what: "weighted proximal mapping",
            iterations: MAX_ITER,
            residual: rn,
        })
    }
}

/// `argmin_u h(u) + ½‖u − x‖²_W` for `W = I + sign·ŪŪᵀ`, where `prox`
/// is the unweighted prox of `h`.
pub fn wpm_structured(
    prox: &dyn SeparableProx,
    x: &[f64],
    u_bar: &DenseMatrix,
    sign: f64,
    tol: f64,
) -> Result<WpmOutcome> {
    StructuredWpm::new(u_bar, sign, tol)?.solve(prox, x, None)
}
