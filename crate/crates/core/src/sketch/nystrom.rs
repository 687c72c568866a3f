use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use rayon::prelude::*;

use crate::dense::{pinv, DenseMatrix};
use crate::error::{Error, Result};
use crate::linops::LinearOperator;
use crate::rng::Rng;

const FACTOR_MAGIC: &[u8; 4] = b"NYSF";

/// Low-rank factorization `Φ ≈ U diag(ŝ) Uᵀ`.
#[derive(Debug, Clone, PartialEq)]
pub struct NystromFactor {
    u: DenseMatrix,
    s_hat: Vec<f64>,
    shift: f64,
    seed: u64,
}

#[derive(Debug, Clone, Copy)]
pub struct NystromOptions {
    /// Machine accuracy multiplying `‖Ω‖_F` in the stabilizing shift.
    pub eps: f64,
    /// Extra shift escalations (×10 each) after a failed Cholesky.
    pub max_escalations: usize,
}

impl Default for NystromOptions {
    fn default() -> Self {
        Self {
            eps: f64::EPSILON,
            max_escalations: 5,
        }
    }
}

impl NystromFactor {
    pub fn new(u: DenseMatrix, s_hat: Vec<f64>, shift: f64, seed: u64) -> Result<Self> {
        crate::error::check_len(u.ncols(), s_hat.len())?;
        if s_hat.iter().any(|s| !(s.is_finite() && *s >= 0.0)) {
            return Err(Error::InvalidArgument("eigenvalues must be finite and nonnegative".into()));
        }
        if s_hat.windows(2).any(|w| w[1] > w[0]) {
            return Err(Error::InvalidArgument("eigenvalues must be nonincreasing".into()));
        }
        Ok(Self {
            u,
            s_hat,
            shift,
            seed,
        })
    }

    /// Rank-zero factor for an `n`-dimensional space.
    pub fn empty(n: usize) -> Self {
        Self {
            u: DenseMatrix::zeros(n, 0),
            s_hat: Vec::new(),
            shift: 0.0,
            seed: 0,
        }
    }

    pub fn dim(&self) -> usize {
        self.u.nrows()
    }

    pub fn rank(&self) -> usize {
        self.s_hat.len()
    }

    pub fn u(&self) -> &DenseMatrix {
        &self.u
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.s_hat
    }

    /// The K-th (smallest retained) eigenvalue, or 0 for an empty factor.
    pub fn tail(&self) -> f64 {
        self.s_hat.last().copied().unwrap_or(0.0)
    }

    pub fn shift(&self) -> f64 {
        self.shift
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Dense `U diag(ŝ) Uᵀ` (test scale).
    pub fn to_dense(&self) -> DenseMatrix {
        let mut us = self.u.clone();
        for (j, s) in self.s_hat.iter().enumerate() {
            us.column_mut(j).scale_mut(*s);
        }
        &us * self.u.transpose()
    }

    pub fn write_to(&self, w: &mut impl Write) -> Result<()> {
        let n = u32::try_from(self.dim()).map_err(|_| Error::Format("N exceeds u32".into()))?;
        let k = u32::try_from(self.rank()).map_err(|_| Error::Format("K exceeds u32".into()))?;
        w.write_all(FACTOR_MAGIC)?;
        w.write_all(&n.to_le_bytes())?;
        w.write_all(&k.to_le_bytes())?;
        w.write_all(&[0u8; 4])?;
        w.write_all(&self.shift.to_le_bytes())?;
        w.write_all(&self.seed.to_le_bytes())?;
        for s in &self.s_hat {
            w.write_all(&s.to_le_bytes())?;
        }
        for v in self.u.iter() {
            w.write_all(&v.to_le_bytes())?;
        }
        Ok(())
    }

    pub fn read_from(r: &mut impl Read) -> Result<Self> {
        let mut header = [0u8; 16];
        r.read_exact(&mut header)?;
        if &header[..4] != FACTOR_MAGIC {
            return Err(Error::Format("bad magic, expected NYSF".into()));
        }
        let n = u32::from_le_bytes(header[4..8].try_into().unwrap()) as usize;
        let k = u32::from_le_bytes(header[8..12].try_into().unwrap()) as usize;
        let mut b8 = [0u8; 8];
        let mut next = |r: &mut dyn Read| -> Result<[u8; 8]> {
            r.read_exact(&mut b8)?;
            Ok(b8)
        };
        let shift = f64::from_le_bytes(next(r)?);
        let seed = u64::from_le_bytes(next(r)?);
        let mut s_hat = Vec::with_capacity(k);
        for _ in 0..k {
            s_hat.push(f64::from_le_bytes(next(r)?));
        }
        let mut data = Vec::with_capacity(n * k);
        for _ in 0..n * k {
            data.push(f64::from_le_bytes(next(r)?));
        }
        Self::new(DenseMatrix::from_vec(n, k, data), s_hat, shift, seed)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut w = BufWriter::new(File::create(path)?);
        self.write_to(&mut w)?;
        w.flush()?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::read_from(&mut BufReader::new(File::open(path)?))
    }
}

/// `Y = ΦΩ`, one independent operator application per column.
fn sketch_columns(phi: &dyn LinearOperator, omega: &DenseMatrix) -> DenseMatrix {
    let n = omega.nrows();
    let mut y = DenseMatrix::zeros(n, omega.ncols());
    y.as_mut_slice()
        .par_chunks_mut(n)
        .zip(omega.as_slice().par_chunks(n))
        .for_each(|(out, col)| phi.apply_into(col, out));
    y
}

/// Stabilized Nyström approximation of a symmetric PSD operator.
///
/// Draws a Gaussian `N x K` test matrix, forms `Y = ΦΩ`, shifts by
/// `ν = ε‖Ω‖_F`, factors `ΩᵀY_ν = CCᵀ`, takes the thin SVD of
/// `B = Y_ν C⁻ᵀ` and removes the shift from the squared singular values.
/// If the Cholesky factorization fails the shift is raised to
/// `max(ν, ε‖Y‖_F)` and then multiplied by ten per retry.
pub fn nystrom_approx(
    phi: &dyn LinearOperator,
    k: usize,
    opts: NystromOptions,
    rng: &mut Rng,
) -> Result<NystromFactor> {
    let n = phi.domain_dim();
    crate::error::check_len(n, phi.range_dim())?;
    if k == 0 || k > n {
        return Err(Error::InvalidArgument(format!(
            "sketch size {k} must lie in [1, {n}]"
        )));
    }
    let seed = rng.seed();
    let omega = rng.standard_normal_matrix(n, k);
    let y = sketch_columns(phi, &omega);
    if y.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("sketch ΦΩ"));
    }

    let mut shift = opts.eps * omega.norm();
    let mut attempt = 0;
    loop {
        let y_shift = &y + &omega * shift;
        let core = omega.transpose() * &y_shift;
        let core = (&core + core.transpose()) * 0.5;
        if let Some(chol) = core.cholesky() {
            // B = Y_ν C⁻ᵀ, i.e. Bᵀ = C⁻¹ Y_νᵀ
            let bt = chol
                .l()
                .solve_lower_triangular(&y_shift.transpose())
                .ok_or(Error::NotPositiveDefinite("singular Cholesky factor".into()))?;
            let b = bt.transpose();
            if b.iter().all(|v| v.is_finite()) {
                return Ok(finish(b, shift, seed));
            }
        }
        if attempt >= opts.max_escalations {
            return Err(Error::NotPositiveDefinite(format!(
                "Cholesky of ΩᵀΦΩ failed with shift {shift:e}"
            )));
        }
        shift = if attempt == 0 {
            shift.max(opts.eps * y.norm()) * 10.0
        } else {
            shift * 10.0
        };
        attempt += 1;
    }
}

fn finish(b: DenseMatrix, shift: f64, seed: u64) -> NystromFactor {
    let (n, k) = b.shape();
    let svd = b.svd(true, false);
    let u_raw = svd.u.expect("requested U");
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&a, &c| svd.singular_values[c].total_cmp(&svd.singular_values[a]));
    let mut u = DenseMatrix::zeros(n, k);
    let mut s_hat = Vec::with_capacity(k);
    for (dst, &src) in order.iter().enumerate() {
        u.column_mut(dst).copy_from(&u_raw.column(src));
        let s = svd.singular_values[src];
        s_hat.push((s * s - shift).max(0.0));
    }
    NystromFactor {
        u,
        s_hat,
        shift,
        seed,
    }
}

/// Direct `(ΦΩ)(ΩᵀΦΩ)†(ΦΩ)ᵀ` with an SVD pseudo-inverse (test scale oracle).
pub fn nystrom_oracle_dense(phi: &DenseMatrix, omega: &DenseMatrix) -> DenseMatrix {
    let y = phi * omega;
    let core = omega.transpose() * &y;
    &y * pinv(&core) * y.transpose()
}
