use crate::dense::DenseMatrix;
use crate::error::{Error, Result};
use crate::vector::dot;

use super::NystromFactor;

/// `P = (t+μ)⁻¹ U(Ŝ+μI)Uᵀ + (I − UUᵀ)` where `t` is the tail eigenvalue
/// `ŝ_K` or its square root.
///
/// On `range(U)` the map `P` scales column `i` of `U` by
/// `dᵢ = (ŝᵢ+μ)/(t+μ)` and it is the identity on the complement, so all
/// powers of `P` cost `O(NK)`.
#[derive(Debug, Clone)]
pub struct Preconditioner {
    u: DenseMatrix,
    scale: Vec<f64>,
    mu: f64,
    tail: f64,
    u_bar: DenseMatrix,
}

pub fn build_preconditioner(factor: &NystromFactor, mu: f64, sqrt_tail: bool) -> Result<Preconditioner> {
    Preconditioner::new(factor, mu, sqrt_tail)
}

impl Preconditioner {
    pub fn new(factor: &NystromFactor, mu: f64, sqrt_tail: bool) -> Result<Self> {
        if !(mu > 0.0 && mu.is_finite()) {
            return Err(Error::InvalidArgument(format!("μ must be positive, got {mu}")));
        }
        let tail = if sqrt_tail {
            factor.tail().sqrt()
        } else {
            factor.tail()
        };
        let scale = factor
            .eigenvalues()
            .iter()
            .map(|s| (s + mu) / (tail + mu))
            .collect();
        Ok(Self::from_parts(factor.u().clone(), scale, mu, tail))
    }

    /// The identity on `R^n`.
    pub fn identity(n: usize) -> Self {
        Self::from_parts(DenseMatrix::zeros(n, 0), Vec::new(), 1.0, 0.0)
    }

    fn from_parts(u: DenseMatrix, scale: Vec<f64>, mu: f64, tail: f64) -> Self {
        // Ū keeps only columns with a nonnegative radicand dᵢ − 1
        let keep: Vec<usize> = (0..scale.len()).filter(|&i| scale[i] >= 1.0).collect();
        let mut u_bar = DenseMatrix::zeros(u.nrows(), keep.len());
        for (dst, &i) in keep.iter().enumerate() {
            let c = (scale[i] - 1.0).sqrt();
            u_bar.column_mut(dst).copy_from(&(u.column(i) * c));
        }
        Self {
            u,
            scale,
            mu,
            tail,
            u_bar,
        }
    }

    /// Same basis with every `dᵢ` floored at one, so that `P = I + ŪŪᵀ`
    /// holds exactly and `σ_min(P) = 1`.
    pub fn with_unit_floor(&self) -> Self {
        let scale = self.scale.iter().map(|d| d.max(1.0)).collect();
        Self::from_parts(self.u.clone(), scale, self.mu, self.tail)
    }

    pub fn dim(&self) -> usize {
        self.u.nrows()
    }

    pub fn rank(&self) -> usize {
        self.scale.len()
    }

    pub fn is_identity(&self) -> bool {
        self.scale.is_empty()
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    pub fn tail(&self) -> f64 {
        self.tail
    }

    /// Eigenvalues of `P` on `range(U)`.
    pub fn scales(&self) -> &[f64] {
        &self.scale
    }

    pub fn u(&self) -> &DenseMatrix {
        &self.u
    }

    /// `Ū` with `P = I + ŪŪᵀ` whenever every `dᵢ ≥ 1`.
    pub fn u_bar(&self) -> &DenseMatrix {
        &self.u_bar
    }

    /// `σ_min(P)`: one unless some `dᵢ < 1`.
    pub fn min_eigenvalue(&self) -> f64 {
        let m = self.scale.iter().copied().fold(f64::INFINITY, f64::min);
        if self.rank() < self.dim() {
            m.min(1.0)
        } else {
            m
        }
    }

    fn spectral(&self, v: &[f64], f: impl Fn(f64) -> f64) -> Vec<f64> {
        let mut out = v.to_vec();
        for (j, d) in self.scale.iter().enumerate() {
            let col = self.u.column(j);
            let c = (f(*d) - 1.0) * dot(col.as_slice(), v);
            if c != 0.0 {
                for (o, uj) in out.iter_mut().zip(col.iter()) {
                    *o += c * uj;
                }
            }
        }
        out
    }

    pub fn apply_p(&self, v: &[f64]) -> Vec<f64> {
        self.spectral(v, |d| d)
    }

    pub fn apply_pinv(&self, v: &[f64]) -> Vec<f64> {
        self.spectral(v, |d| 1.0 / d)
    }

    pub fn apply_p_half(&self, v: &[f64]) -> Vec<f64> {
        self.spectral(v, f64::sqrt)
    }

    pub fn apply_pinv_half(&self, v: &[f64]) -> Vec<f64> {
        self.spectral(v, |d| 1.0 / d.sqrt())
    }
}
