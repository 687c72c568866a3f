//! Randomized Nyström approximation of PSD operators and the
//! preconditioner built from it.

mod nystrom;
mod precond;

pub use nystrom::{nystrom_approx, nystrom_oracle_dense, NystromFactor, NystromOptions};
pub use precond::{build_preconditioner, Preconditioner};

use crate::dense::{sym_eigenvalues, DenseMatrix};

/// `tr(Φ(Φ + μI)⁻¹) = Σ λᵢ/(λᵢ + μ)` from a dense eigen-decomposition.
pub fn effective_dimension(phi: &DenseMatrix, mu: f64) -> f64 {
    sym_eigenvalues(phi)
        .into_iter()
        .map(|l| {
            let l = l.max(0.0);
            l / (l + mu)
        })
        .sum()
}

/// Sketch size `2⌈1.5·d_eff + 1⌉` for which the expected preconditioned
/// condition number stays below 28.
pub fn sketch_size_for(d_eff: f64) -> usize {
    2 * (1.5 * d_eff + 1.0).ceil() as usize
}

/// Dense oracle: `κ(P^{-1/2}(Φ + μI)P^{-1/2})`.
pub fn preconditioned_condition_number(phi: &DenseMatrix, mu: f64, pre: &Preconditioner) -> f64 {
    let n = phi.nrows();
    let shifted = phi + DenseMatrix::identity(n, n) * mu;
    let mut half = DenseMatrix::zeros(n, n);
    let mut e = vec![0.0; n];
    for j in 0..n {
        e[j] = 1.0;
        half.column_mut(j).copy_from_slice(&pre.apply_pinv_half(&e));
        e[j] = 0.0;
    }
    let m = &half * shifted * &half;
    crate::dense::spd_condition_number(&m)
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::DVector;

    #[test]
    fn effective_dimension_examples() {
        assert!((effective_dimension(&DenseMatrix::identity(10, 10), 1.0) - 5.0).abs() < 1e-12);
        assert_eq!(effective_dimension(&DenseMatrix::zeros(4, 4), 1.0), 0.0);
        let d = DenseMatrix::from_diagonal(&DVector::from_vec(vec![4.0, 1.0]));
        assert!((effective_dimension(&d, 1.0) - 1.3).abs() < 1e-12);
    }

    #[test]
    fn sketch_size_formula() {
        assert_eq!(sketch_size_for(0.0), 2);
        assert_eq!(sketch_size_for(1.3), 6);
        assert_eq!(sketch_size_for(10.0), 32);
    }
}
