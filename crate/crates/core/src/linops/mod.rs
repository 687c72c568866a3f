//! Matrix-free linear operators.
//!
//! Every operator declares its domain and range dimensions and provides a
//! matched adjoint. Operators are immutable once built and can be shared
//! across threads behind an [`Operator`] handle.

mod blur;
mod diff;
mod radon;
mod wavelet;

use std::sync::Arc;

pub use blur::{gaussian_kernel, uniform_kernel, ConvolutionOperator, DownsampleOperator};
pub use diff::{grad_operator, hessian_operator, GradientOperator, HessianOperator};
pub use radon::RadonOperator;
pub use wavelet::WaveletOperator;

use crate::dense::DenseMatrix;
use crate::error::{check_len, Error, Result};
use crate::rng::Rng;
use crate::vector::{dot, norm2, scale};

pub trait LinearOperator: Send + Sync {
    fn domain_dim(&self) -> usize;
    fn range_dim(&self) -> usize;

    /// `y = A x`; `y` is overwritten.
    fn apply_into(&self, x: &[f64], y: &mut [f64]);

    /// `x = Aᵀ y`; `x` is overwritten.
    fn adjoint_into(&self, y: &[f64], x: &mut [f64]);

    fn apply(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.range_dim()];
        self.apply_into(x, &mut y);
        y
    }

    fn adjoint(&self, y: &[f64]) -> Vec<f64> {
        let mut x = vec![0.0; self.domain_dim()];
        self.adjoint_into(y, &mut x);
        x
    }
}

pub type Operator = Arc<dyn LinearOperator>;

/// How the range of a regularization operator splits into groups.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GroupKind {
    Scalar,
    /// Groups of `π` consecutive entries.
    Vector(usize),
    /// Symmetric 2x2 matrices stored as `(v11, v22, √2·v12)`. The √2 makes
    /// the Euclidean inner product of triples equal the Frobenius inner
    /// product of the matrices.
    Sym2x2,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GroupStructure {
    pub kind: GroupKind,
    pub count: usize,
}

impl GroupStructure {
    pub fn new(kind: GroupKind, count: usize) -> Self {
        Self { kind, count }
    }

    pub fn group_size(&self) -> usize {
        match self.kind {
            GroupKind::Scalar => 1,
            GroupKind::Vector(pi) => pi,
            GroupKind::Sym2x2 => 3,
        }
    }

    pub fn len(&self) -> usize {
        self.count * self.group_size()
    }

    pub fn is_empty(&self) -> bool {
        self.count == 0
    }

    pub fn validate(&self, range_dim: usize) -> Result<()> {
        check_len(range_dim, self.len())
    }
}

/// Positive diagonal weight used inside Gram operators.
#[derive(Debug, Clone, PartialEq)]
pub struct DiagonalWeight(Vec<f64>);

impl DiagonalWeight {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if let Some(v) = values.iter().find(|v| !(v.is_finite() && **v > 0.0)) {
            return Err(Error::InvalidArgument(format!(
                "weights must be positive and finite, found {v}"
            )));
        }
        Ok(Self(values))
    }

    pub fn ones(n: usize) -> Self {
        Self(vec![1.0; n])
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

#[derive(Debug, Clone)]
pub struct IdentityOperator(pub usize);

impl LinearOperator for IdentityOperator {
    fn domain_dim(&self) -> usize {
        self.0
    }
    fn range_dim(&self) -> usize {
        self.0
    }
    fn apply_into(&self, x: &[f64], y: &mut [f64]) {
        y.copy_from_slice(x);
    }
    fn adjoint_into(&self, y: &[f64], x: &mut [f64]) {
        x.copy_from_slice(y);
    }
}

#[derive(Debug, Clone)]
pub struct DiagonalOperator(pub Vec<f64>);

impl LinearOperator for DiagonalOperator {
    fn domain_dim(&self) -> usize {
        self.0.len()
    }
    fn range_dim(&self) -> usize {
        self.0.len()
    }
    fn apply_into(&self, x: &[f64], y: &mut [f64]) {
        for ((yi, xi), d) in y.iter_mut().zip(x).zip(&self.0) {
            *yi = d * xi;
        }
    }
    fn adjoint_into(&self, y: &[f64], x: &mut [f64]) {
        self.apply_into(y, x);
    }
}

/// Dense matrix wrapped as an operator (test scale).
#[derive(Debug, Clone)]
pub struct MatrixOperator(pub DenseMatrix);

impl LinearOperator for MatrixOperator {
    fn domain_dim(&self) -> usize {
        self.0.ncols()
    }
    fn range_dim(&self) -> usize {
        self.0.nrows()
    }
    fn apply_into(&self, x: &[f64], y: &mut [f64]) {
        y.fill(0.0);
        for (j, xj) in x.iter().enumerate() {
            if *xj != 0.0 {
                for (yi, a) in y.iter_mut().zip(self.0.column(j).iter()) {
                    *yi += a * xj;
                }
            }
        }
    }
    fn adjoint_into(&self, y: &[f64], x: &mut [f64]) {
        for (j, xj) in x.iter_mut().enumerate() {
            *xj = dot(self.0.column(j).as_slice(), y);
        }
    }
}

/// `outer ∘ inner`.
pub struct ComposedOperator {
    outer: Operator,
    inner: Operator,
}

impl ComposedOperator {
    pub fn new(outer: Operator, inner: Operator) -> Result<Self> {
        check_len(outer.domain_dim(), inner.range_dim())?;
        Ok(Self { outer, inner })
    }
}

impl LinearOperator for ComposedOperator {
    fn domain_dim(&self) -> usize {
        self.inner.domain_dim()
    }
    fn range_dim(&self) -> usize {
        self.outer.range_dim()
    }
    fn apply_into(&self, x: &[f64], y: &mut [f64]) {
        let t = self.inner.apply(x);
        self.outer.apply_into(&t, y);
    }
    fn adjoint_into(&self, y: &[f64], x: &mut [f64]) {
        let t = self.outer.adjoint(y);
        self.inner.adjoint_into(&t, x);
    }
}

/// The adjoint of an operator as an operator.
pub struct AdjointOperator(pub Operator);

impl LinearOperator for AdjointOperator {
    fn domain_dim(&self) -> usize {
        self.0.range_dim()
    }
    fn range_dim(&self) -> usize {
        self.0.domain_dim()
    }
    fn apply_into(&self, x: &[f64], y: &mut [f64]) {
        self.0.adjoint_into(x, y);
    }
    fn adjoint_into(&self, y: &[f64], x: &mut [f64]) {
        self.0.apply_into(y, x);
    }
}

/// `x ↦ Aᵀ(W_f(Ax)) + λ·Lᵀ(W_g(Lx))`.
pub struct GramOperator {
    a: Operator,
    wf: DiagonalWeight,
    l: Operator,
    wg: DiagonalWeight,
    lambda: f64,
}

impl GramOperator {
    pub fn new(
        a: Operator,
        wf: DiagonalWeight,
        l: Operator,
        wg: DiagonalWeight,
        lambda: f64,
    ) -> Result<Self> {
        if !(lambda > 0.0 && lambda.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "regularization weight must be positive, got {lambda}"
            )));
        }
        check_len(a.domain_dim(), l.domain_dim())?;
        check_len(a.range_dim(), wf.len())?;
        check_len(l.range_dim(), wg.len())?;
        Ok(Self {
            a,
            wf,
            l,
            wg,
            lambda,
        })
    }
}

impl LinearOperator for GramOperator {
    fn domain_dim(&self) -> usize {
        self.a.domain_dim()
    }
    fn range_dim(&self) -> usize {
        self.a.domain_dim()
    }
    fn apply_into(&self, x: &[f64], y: &mut [f64]) {
        let mut ax = self.a.apply(x);
        for (v, w) in ax.iter_mut().zip(self.wf.values()) {
            *v *= w;
        }
        self.a.adjoint_into(&ax, y);
        let mut lx = self.l.apply(x);
        for (v, w) in lx.iter_mut().zip(self.wg.values()) {
            *v *= w;
        }
        let ltl = self.l.adjoint(&lx);
        for (yi, r) in y.iter_mut().zip(&ltl) {
            *yi += self.lambda * r;
        }
    }
    fn adjoint_into(&self, y: &[f64], x: &mut [f64]) {
        self.apply_into(y, x);
    }
}

/// Free-function constructor mirroring [`GramOperator::new`].
pub fn gram_operator(
    a: Operator,
    wf: DiagonalWeight,
    l: Operator,
    wg: DiagonalWeight,
    lambda: f64,
) -> Result<GramOperator> {
    GramOperator::new(a, wf, l, wg, lambda)
}

/// `x ↦ Aᵀ A x`.
pub struct NormalOperator(pub Operator);

impl LinearOperator for NormalOperator {
    fn domain_dim(&self) -> usize {
        self.0.domain_dim()
    }
    fn range_dim(&self) -> usize {
        self.0.domain_dim()
    }
    fn apply_into(&self, x: &[f64], y: &mut [f64]) {
        let ax = self.0.apply(x);
        self.0.adjoint_into(&ax, y);
    }
    fn adjoint_into(&self, y: &[f64], x: &mut [f64]) {
        self.apply_into(y, x);
    }
}

/// Power-iteration estimate of `‖A‖² = λ_max(AᵀA)`.
///
/// Returns the Rayleigh quotient of the final iterate, which never exceeds
/// the true value and is nondecreasing in `iters`.
pub fn operator_norm_sq(op: &dyn LinearOperator, iters: usize, rng: &mut Rng) -> f64 {
    let mut v = rng.normal_vec(op.domain_dim());
    let nv = norm2(&v);
    if nv == 0.0 {
        return 0.0;
    }
    scale(1.0 / nv, &mut v);
    let mut est = 0.0;
    for _ in 0..iters.max(1) {
        let av = op.apply(&v);
        est = dot(&av, &av);
        let mut w = op.adjoint(&av);
        let nw = norm2(&w);
        if nw == 0.0 {
            return est;
        }
        scale(1.0 / nw, &mut w);
        v = w;
    }
    let av = op.apply(&v);
    est.max(dot(&av, &av))
}

/// Largest relative violation of `⟨Ax, y⟩ = ⟨x, Aᵀy⟩` over random pairs.
pub fn adjoint_mismatch(op: &dyn LinearOperator, trials: usize, rng: &mut Rng) -> f64 {
    let mut worst: f64 = 0.0;
    for _ in 0..trials {
        let x = rng.normal_vec(op.domain_dim());
        let y = rng.normal_vec(op.range_dim());
        let ax = op.apply(&x);
        let aty = op.adjoint(&y);
        let lhs = dot(&ax, &y);
        let rhs = dot(&x, &aty);
        let denom = norm2(&ax) * norm2(&y) + norm2(&x) * norm2(&aty) + f64::MIN_POSITIVE;
        worst = worst.max((lhs - rhs).abs() / denom);
    }
    worst
}

/// Dense matrix of an operator, column by column (test scale only).
pub fn to_dense(op: &dyn LinearOperator) -> DenseMatrix {
    let n = op.domain_dim();
    let mut m = DenseMatrix::zeros(op.range_dim(), n);
    let mut e = vec![0.0; n];
    for j in 0..n {
        e[j] = 1.0;
        let col = op.apply(&e);
        m.column_mut(j).copy_from_slice(&col);
        e[j] = 0.0;
    }
    m
}
