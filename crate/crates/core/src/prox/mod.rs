//! Proximal maps.
//!
//! Separable maps expose an element of their generalized Jacobian so the
//! structured weighted proximal mapping can run semismooth Newton on top of
//! them.

mod dual;
mod groups;
mod wpm;

pub use dual::{mixed_dual_gap, wpm_mixed_dual, DualOutcome, MixedDualProblem};
pub use groups::{max_dual_group_norm, mixed_norm_value, project_group_ball, DualVariable, GroupNorm};
pub use wpm::{wpm_structured, StructuredWpm, WpmOutcome};

use crate::error::{Error, Result};

pub trait SeparableProx: Sync {
    /// `out = prox(x)`.
    fn prox_into(&self, x: &[f64], out: &mut [f64]);

    /// Diagonal of one element of the Clarke Jacobian of `prox` at `x`.
    fn jacobian_diag(&self, x: &[f64], out: &mut [f64]);

    fn prox(&self, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; x.len()];
        self.prox_into(x, &mut out);
        out
    }
}

/// Prox of the zero function.
#[derive(Debug, Clone, Copy, Default)]
pub struct IdentityProx;

impl SeparableProx for IdentityProx {
    fn prox_into(&self, x: &[f64], out: &mut [f64]) {
        out.copy_from_slice(x);
    }
    fn jacobian_diag(&self, _x: &[f64], out: &mut [f64]) {
        out.fill(1.0);
    }
}

/// Componentwise interval `[lo, hi]`; either end may be infinite.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoxConstraint {
    pub lo: f64,
    pub hi: f64,
}

impl BoxConstraint {
    pub fn new(lo: f64, hi: f64) -> Result<Self> {
        if lo.is_nan() || hi.is_nan() || !(lo < hi) {
            return Err(Error::InvalidArgument(format!("empty box [{lo}, {hi}]")));
        }
        Ok(Self { lo, hi })
    }

    pub fn unbounded() -> Self {
        Self {
            lo: f64::NEG_INFINITY,
            hi: f64::INFINITY,
        }
    }

    pub fn unit() -> Self {
        Self { lo: 0.0, hi: 1.0 }
    }

    pub fn is_unbounded(&self) -> bool {
        self.lo == f64::NEG_INFINITY && self.hi == f64::INFINITY
    }

    pub fn clamp_vec(&self, mut x: Vec<f64>) -> Vec<f64> {
        for v in x.iter_mut() {
            *v = v.clamp(self.lo, self.hi);
        }
        x
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.iter().all(|v| *v >= self.lo && *v <= self.hi)
    }
}

impl SeparableProx for BoxConstraint {
    fn prox_into(&self, x: &[f64], out: &mut [f64]) {
        for (o, v) in out.iter_mut().zip(x) {
            *o = v.clamp(self.lo, self.hi);
        }
    }
    fn jacobian_diag(&self, x: &[f64], out: &mut [f64]) {
        // zero on the active boundary
        for (o, v) in out.iter_mut().zip(x) {
            *o = if *v > self.lo && *v < self.hi { 1.0 } else { 0.0 };
        }
    }
}

pub fn project_box(x: &[f64], c: &BoxConstraint) -> Vec<f64> {
    c.prox(x)
}

/// Prox of `τ‖·‖₁`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SoftThreshold {
    pub tau: f64,
}

impl SeparableProx for SoftThreshold {
    fn prox_into(&self, x: &[f64], out: &mut [f64]) {
        for (o, v) in out.iter_mut().zip(x) {
            *o = v.signum() * (v.abs() - self.tau).max(0.0);
        }
    }
    fn jacobian_diag(&self, x: &[f64], out: &mut [f64]) {
        for (o, v) in out.iter_mut().zip(x) {
            *o = if v.abs() > self.tau { 1.0 } else { 0.0 };
        }
    }
}

pub fn soft_threshold(x: &[f64], tau: f64) -> Vec<f64> {
    SoftThreshold { tau }.prox(x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn soft_threshold_examples() {
        assert_eq!(soft_threshold(&[3.0], 1.0), vec![2.0]);
        assert_eq!(soft_threshold(&[-0.5], 1.0), vec![0.0]);
        assert_eq!(soft_threshold(&[-3.0], 1.0), vec![-2.0]);
        let x = vec![1.5, -2.0, 0.0, 7.0];
        assert_eq!(soft_threshold(&x, 0.0), x);
    }

    #[test]
    fn box_examples() {
        let c = BoxConstraint::unit();
        assert_eq!(project_box(&[0.2, 0.9], &c), vec![0.2, 0.9]);
        assert_eq!(project_box(&[-1.0, 2.0], &c), vec![0.0, 1.0]);
        let x = vec![-1e9, 3.0, 1e300];
        assert_eq!(project_box(&x, &BoxConstraint::unbounded()), x);
        assert!(BoxConstraint::new(1.0, 1.0).is_err());
        assert!(BoxConstraint::new(f64::NAN, 1.0).is_err());
    }

    #[test]
    fn box_jacobian_zero_on_boundary() {
        let mut d = [0.0; 4];
        BoxConstraint::unit().jacobian_diag(&[0.0, 0.5, 1.0, 2.0], &mut d);
        assert_eq!(d, [0.0, 1.0, 0.0, 0.0]);
    }

    proptest! {
        #[test]
        fn box_projection_idempotent_nonexpansive(
            x in prop::collection::vec(-5.0f64..5.0, 1..20),
            seed in any::<u64>(),
        ) {
            let c = BoxConstraint::new(-1.0, 2.0).unwrap();
            let px = project_box(&x, &c);
            prop_assert_eq!(&project_box(&px, &c), &px);
            let y: Vec<f64> = crate::rng::Rng::new(seed).normal_vec(x.len()).iter().map(|v| 3.0 * v).collect();
            let py = project_box(&y, &c);
            prop_assert!(crate::vector::dist2(&px, &py) <= crate::vector::dist2(&x, &y) + 1e-12);
        }
    }
}
