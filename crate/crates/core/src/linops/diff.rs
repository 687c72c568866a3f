//! Periodic finite-difference operators with per-pixel groups in
//! column-stacked pixel order (`l = j·rows + i`).

use std::f64::consts::SQRT_2;

use crate::error::{Error, Result};

use super::{GroupKind, GroupStructure, LinearOperator};

/// Backward differences `(X[i,j] - X[i-1,j], X[i,j] - X[i,j-1])` per pixel.
#[derive(Debug, Clone)]
pub struct GradientOperator {
    rows: usize,
    cols: usize,
}

impl GradientOperator {
    pub fn new(rows: usize, cols: usize) -> Result<Self> {
        if rows < 2 || cols < 2 {
            return Err(Error::InvalidArgument(format!(
                "gradient needs at least 2x2 pixels, got {rows}x{cols}"
            )));
        }
        Ok(Self { rows, cols })
    }

    pub fn groups(&self) -> GroupStructure {
        GroupStructure::new(GroupKind::Vector(2), self.rows * self.cols)
    }

    /// `‖∇‖²`, exact from the Fourier symbol of the periodic stencil.
    pub fn norm_sq(&self) -> f64 {
        max_symbol(self.rows, self.cols, |c1, _, c2, _| (2.0 - 2.0 * c1) + (2.0 - 2.0 * c2))
    }
}

fn max_symbol(rows: usize, cols: usize, f: impl Fn(f64, f64, f64, f64) -> f64) -> f64 {
    let mut best = 0.0f64;
    for a in 0..rows {
        let (s1, c1) = (std::f64::consts::TAU * a as f64 / rows as f64).sin_cos();
        for b in 0..cols {
            let (s2, c2) = (std::f64::consts::TAU * b as f64 / cols as f64).sin_cos();
            best = best.max(f(c1, s1, c2, s2));
        }
    }
    best
}

pub fn grad_operator(rows: usize, cols: usize) -> Result<(GradientOperator, GroupStructure)> {
    let op = GradientOperator::new(rows, cols)?;
    let g = op.groups();
    Ok((op, g))
}

impl LinearOperator for GradientOperator {
    fn domain_dim(&self) -> usize {
        self.rows * self.cols
    }
    fn range_dim(&self) -> usize {
        2 * self.rows * self.cols
    }
    fn apply_into(&self, x: &[f64], y: &mut [f64]) {
        let (r, c) = (self.rows, self.cols);
        for j in 0..c {
            let jm = (j + c - 1) % c;
            for i in 0..r {
                let im = (i + r - 1) % r;
                let l = j * r + i;
                let v = x[l];
                y[2 * l] = v - x[j * r + im];
                y[2 * l + 1] = v - x[jm * r + i];
            }
        }
    }
    fn adjoint_into(&self, y: &[f64], x: &mut [f64]) {
        let (r, c) = (self.rows, self.cols);
        for j in 0..c {
            let jp = (j + 1) % c;
            for i in 0..r {
                let ip = (i + 1) % r;
                let l = j * r + i;
                x[l] = y[2 * l] - y[2 * (j * r + ip)] + y[2 * l + 1] - y[2 * (jp * r + i) + 1];
            }
        }
    }
}

/// Second-order differences per pixel, emitted as `(v11, v22, √2·v12)`.
#[derive(Debug, Clone)]
pub struct HessianOperator {
    rows: usize,
    cols: usize,
}

impl HessianOperator {
    pub fn new(rows: usize, cols: usize) -> Result<Self> {
        if rows < 3 || cols < 3 {
            return Err(Error::InvalidArgument(format!(
                "hessian needs at least 3x3 pixels, got {rows}x{cols}"
            )));
        }
        Ok(Self { rows, cols })
    }

    pub fn groups(&self) -> GroupStructure {
        GroupStructure::new(GroupKind::Sym2x2, self.rows * self.cols)
    }

    /// `‖H‖²`, exact from the Fourier symbol of the periodic stencil.
    pub fn norm_sq(&self) -> f64 {
        max_symbol(self.rows, self.cols, |c1, s1, c2, s2| {
            (2.0 - 2.0 * c1).powi(2) + (2.0 - 2.0 * c2).powi(2) + 2.0 * (s1 * s2).powi(2)
        })
    }
}

pub fn hessian_operator(rows: usize, cols: usize) -> Result<(HessianOperator, GroupStructure)> {
    let op = HessianOperator::new(rows, cols)?;
    let g = op.groups();
    Ok((op, g))
}

const CROSS: f64 = 0.25 * SQRT_2;

impl LinearOperator for HessianOperator {
    fn domain_dim(&self) -> usize {
        self.rows * self.cols
    }
    fn range_dim(&self) -> usize {
        3 * self.rows * self.cols
    }
    fn apply_into(&self, x: &[f64], y: &mut [f64]) {
        let (r, c) = (self.rows, self.cols);
        let at = |i: usize, j: usize| x[j * r + i];
        for j in 0..c {
            let (jm, jp) = ((j + c - 1) % c, (j + 1) % c);
            for i in 0..r {
                let (im, ip) = ((i + r - 1) % r, (i + 1) % r);
                let l = j * r + i;
                let v = x[l];
                y[3 * l] = at(im, j) - 2.0 * v + at(ip, j);
                y[3 * l + 1] = at(i, jm) - 2.0 * v + at(i, jp);
                y[3 * l + 2] = CROSS * (at(ip, jp) - at(ip, jm) - at(im, jp) + at(im, jm));
            }
        }
    }
    fn adjoint_into(&self, y: &[f64], x: &mut [f64]) {
        let (r, c) = (self.rows, self.cols);
        x.fill(0.0);
        for j in 0..c {
            let (jm, jp) = ((j + c - 1) % c, (j + 1) % c);
            for i in 0..r {
                let (im, ip) = ((i + r - 1) % r, (i + 1) % r);
                let l = j * r + i;
                let (a, b, e) = (y[3 * l], y[3 * l + 1], CROSS * y[3 * l + 2]);
                x[j * r + im] += a;
                x[l] -= 2.0 * a + 2.0 * b;
                x[j * r + ip] += a;
                x[jm * r + i] += b;
                x[jp * r + i] += b;
                x[jp * r + ip] += e;
                x[jm * r + ip] -= e;
                x[jp * r + im] -= e;
                x[jm * r + im] += e;
            }
        }
    }
}
