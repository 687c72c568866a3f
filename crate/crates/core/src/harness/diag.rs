//! Dense-oracle diagnostics behind the `diag` command.

use nalgebra::DVector;

use crate::dense::{random_orthogonal, DenseMatrix};
use crate::error::Result;
use crate::linops::MatrixOperator;
use crate::rng::Rng;
use crate::sketch::{
    effective_dimension, nystrom_approx, nystrom_oracle_dense, preconditioned_condition_number, sketch_size_for,
    NystromOptions, Preconditioner,
};
use crate::solvers::half_quadratic_constants;

use super::median;

#[derive(Debug, Clone, PartialEq)]
pub struct DiagnosticResult {
    pub name: &'static str,
    pub value: f64,
    pub threshold: f64,
    pub passed: bool,
    pub detail: String,
}

impl std::fmt::Display for DiagnosticResult {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "[{}] {}: {:.6e} (threshold {}) {}",
            if self.passed { "PASS" } else { "FAIL" },
            self.name,
            self.value,
            self.threshold,
            self.detail
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IdentityGrid {
    Coarse,
    Fine,
}

fn psd_with_spectrum(spec: &[f64], rng: &mut Rng) -> DenseMatrix {
    let q = random_orthogonal(spec.len(), rng);
    &q * DenseMatrix::from_diagonal(&DVector::from_column_slice(spec)) * q.transpose()
}

/// Largest relative Frobenius gap between the sketched factor and the
/// direct pseudo-inverse formula over `trials` random 40x40 PSD matrices.
pub fn nystrom_oracle_check(trials: usize, rng: &mut Rng) -> Result<DiagnosticResult> {
    let n = 40;
    let k = 20;
    let mut worst = 0.0f64;
    for _ in 0..trials {
        let b = rng.standard_normal_matrix(n, n);
        let phi = (&b * b.transpose()) / n as f64 + DenseMatrix::identity(n, n) * 0.1;
        let mut probe = rng.clone();
        let omega = probe.standard_normal_matrix(n, k);
        let f = nystrom_approx(&MatrixOperator(phi.clone()), k, NystromOptions::default(), rng)?;
        let oracle = nystrom_oracle_dense(&phi, &omega);
        worst = worst.max((f.to_dense() - &oracle).norm() / oracle.norm());
    }
    Ok(DiagnosticResult {
        name: "nystrom-vs-pinv-formula",
        value: worst,
        threshold: 1e-6,
        passed: worst <= 1e-6,
        detail: format!("max relative Frobenius error over {trials} matrices"),
    })
}

/// Median of `κ(P^{-1/2}(Φ+μI)P^{-1/2})` for `λᵢ = 0.9^i`, `N = 200`,
/// `μ = 1e-2` and the sketch size from the effective dimension.
pub fn theorem2_check(seeds: usize, rng: &mut Rng) -> Result<DiagnosticResult> {
    let n = 200;
    let mu = 1e-2;
    let spec: Vec<f64> = (0..n).map(|i| 0.9f64.powi(i as i32)).collect();
    let mut kappas = Vec::with_capacity(seeds);
    let mut k = 0;
    for _ in 0..seeds {
        let phi = psd_with_spectrum(&spec, rng);
        k = sketch_size_for(effective_dimension(&phi, mu)).min(n);
        let f = nystrom_approx(&MatrixOperator(phi.clone()), k, NystromOptions::default(), rng)?;
        let pre = Preconditioner::new(&f, mu, false)?;
        kappas.push(preconditioned_condition_number(&phi, mu, &pre));
    }
    let med = median(&kappas);
    Ok(DiagnosticResult {
        name: "preconditioned-condition-number",
        value: med,
        threshold: 28.0,
        passed: med < 28.0,
        detail: format!("median kappa over {seeds} seeds, K = {k}"),
    })
}

/// Envelope identity `min_β β r² + 1/(b_p β^{a_p}) = |r|^p` and its
/// minimizer, located by bisection on the derivative.
pub fn half_quadratic_check(grid: IdentityGrid) -> Result<DiagnosticResult> {
    let npts = match grid {
        IdentityGrid::Coarse => 50,
        IdentityGrid::Fine => 400,
    };
    let mut worst_val = 0.0f64;
    let mut worst_arg = 0.0f64;
    for p in [0.3, 0.5, 1.0, 1.5] {
        let (a, b) = half_quadratic_constants(p)?;
        for i in 0..npts {
            let r = 0.1 * 100f64.powf(i as f64 / (npts - 1) as f64);
            // derivative r² − a/(b β^{a+1}) is increasing in β
            let d = |beta: f64| r * r - a / (b * beta.powf(a + 1.0));
            let (mut lo, mut hi) = (1e-12f64, 1e12f64);
            for _ in 0..200 {
                let mid = (lo * hi).sqrt();
                if d(mid) > 0.0 {
                    hi = mid;
                } else {
                    lo = mid;
                }
            }
            let beta = (lo * hi).sqrt();
            let value = beta * r * r + 1.0 / (b * beta.powf(a));
            let star = 0.5 * p * r.powf(p - 2.0);
            worst_val = worst_val.max((value - r.powf(p)).abs());
            worst_arg = worst_arg.max((beta - star).abs() / star.max(1.0));
        }
    }
    let worst = worst_val.max(worst_arg);
    Ok(DiagnosticResult {
        name: "half-quadratic-identity",
        value: worst,
        threshold: 1e-8,
        passed: worst <= 1e-8,
        detail: format!("value error {worst_val:.2e}, argmin error {worst_arg:.2e}, {npts} radii per p"),
    })
}

pub fn run_diagnostics(seed: u64, grid: IdentityGrid) -> Result<Vec<DiagnosticResult>> {
    let mut rng = Rng::new(seed);
    Ok(vec![
        nystrom_oracle_check(10, &mut rng.fork())?,
        theorem2_check(20, &mut rng.fork())?,
        half_quadratic_check(grid)?,
    ])
}
