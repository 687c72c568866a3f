//! Outer solvers: reweighted ℓp–ℓq minimization and weighted accelerated
//! proximal gradient.

mod irm;
mod wapg;

pub use irm::{
    half_quadratic_constants, irm_cost, irm_solve, update_weights, IrmConfig, IrmState,
};
pub use wapg::{estimate_lipschitz_pnorm, wapg_cost, wapg_solve, wapg_solve_with, WapgConfig, WapgState};

use crate::metrics::psnr_slice;
use crate::problems::ProblemInstance;

/// One row of a solver trace.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceRecord {
    pub iter: usize,
    pub elapsed_s: f64,
    pub cost: f64,
    pub psnr: f64,
    pub inner_iters: usize,
    pub sketch_s: f64,
    /// Unpreconditioned inner count for the same system, when measured.
    pub baseline_inner_iters: Option<usize>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct SolverTrace {
    pub records: Vec<TraceRecord>,
}

impl SolverTrace {
    pub fn push(&mut self, rec: TraceRecord) {
        debug_assert!(self.records.last().is_none_or(|r| r.iter < rec.iter && r.elapsed_s <= rec.elapsed_s));
        self.records.push(rec);
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn last(&self) -> Option<&TraceRecord> {
        self.records.last()
    }

    pub fn costs(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.cost).collect()
    }

    pub fn total_inner_iters(&self) -> usize {
        self.records.iter().map(|r| r.inner_iters).sum()
    }

    pub fn elapsed_s(&self) -> f64 {
        self.records.last().map_or(0.0, |r| r.elapsed_s)
    }

    pub const CSV_HEADER: &'static str = "iter,elapsed_s,cost,psnr,inner_iters,sketch_s";

    pub fn to_csv(&self) -> String {
        let mut s = String::from(Self::CSV_HEADER);
        s.push('\n');
        for r in &self.records {
            s.push_str(&format!(
                "{},{:.6},{:.17e},{:.17e},{},{:.6}\n",
                r.iter, r.elapsed_s, r.cost, r.psnr, r.inner_iters, r.sketch_s
            ));
        }
        s
    }
}

fn trace_psnr(problem: &ProblemInstance, x: &[f64]) -> f64 {
    psnr_slice(x, problem.ground_truth.as_slice(), problem.peak).unwrap_or(f64::NAN)
}

/// Default starting point: `y` when `A` is square, otherwise the
/// least-squares scaling of `Aᵀy`.
pub fn initial_guess(problem: &ProblemInstance) -> Vec<f64> {
    let a = &problem.a;
    if a.range_dim() == a.domain_dim() {
        return problem.y.clone();
    }
    let mut x = a.adjoint(&problem.y);
    let ax = a.apply(&x);
    let den = crate::vector::norm2_sq(&ax);
    if den > 0.0 {
        let c = crate::vector::dot(&ax, &problem.y) / den;
        crate::vector::scale(c, &mut x);
    }
    x
}
