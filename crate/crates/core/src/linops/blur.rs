use crate::dense::DenseMatrix;
use crate::error::{Error, Result};

use super::{LinearOperator, Operator};

/// `size x size` box kernel with entries `1/size²`.
pub fn uniform_kernel(size: usize) -> DenseMatrix {
    DenseMatrix::from_element(size, size, 1.0 / (size * size) as f64)
}

/// Sampled isotropic Gaussian, normalized to unit sum.
pub fn gaussian_kernel(size: usize, sigma: f64) -> DenseMatrix {
    let c = (size as f64 - 1.0) / 2.0;
    let mut k = DenseMatrix::from_fn(size, size, |i, j| {
        let (di, dj) = (i as f64 - c, j as f64 - c);
        (-(di * di + dj * dj) / (2.0 * sigma * sigma)).exp()
    });
    let s = k.sum();
    k /= s;
    k
}

/// Circular 2D convolution on a `rows x cols` image.
#[derive(Debug, Clone)]
pub struct ConvolutionOperator {
    rows: usize,
    cols: usize,
    // (row offset, col offset, weight); zero taps skipped
    taps: Vec<(isize, isize, f64)>,
}

impl ConvolutionOperator {
    pub fn new(kernel: &DenseMatrix, rows: usize, cols: usize) -> Result<Self> {
        let (kr, kc) = kernel.shape();
        if kr % 2 == 0 || kc % 2 == 0 {
            return Err(Error::InvalidArgument(format!(
                "blur kernel must have odd size, got {kr}x{kc}"
            )));
        }
        if rows == 0 || cols == 0 {
            return Err(Error::InvalidArgument("empty image".into()));
        }
        let (cr, cc) = ((kr / 2) as isize, (kc / 2) as isize);
        let mut taps = Vec::new();
        for v in 0..kc {
            for u in 0..kr {
                let w = kernel[(u, v)];
                if w != 0.0 {
                    taps.push((u as isize - cr, v as isize - cc, w));
                }
            }
        }
        Ok(Self { rows, cols, taps })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    // y(i,j) = Σ k(du,dv) · x(i - sign·du, j - sign·dv)
    fn correlate(&self, x: &[f64], y: &mut [f64], sign: isize) {
        let (r, c) = (self.rows as isize, self.cols as isize);
        y.fill(0.0);
        for &(du, dv, w) in &self.taps {
            let si = (-sign * du).rem_euclid(r) as usize;
            let sj = (-sign * dv).rem_euclid(c) as usize;
            for j in 0..self.cols {
                let jj = (j + sj) % self.cols;
                let src = &x[jj * self.rows..(jj + 1) * self.rows];
                let dst = &mut y[j * self.rows..(j + 1) * self.rows];
                let split = self.rows - si;
                for (d, s) in dst[..split].iter_mut().zip(&src[si..]) {
                    *d += w * s;
                }
                for (d, s) in dst[split..].iter_mut().zip(&src[..si]) {
                    *d += w * s;
                }
            }
        }
    }
}

impl LinearOperator for ConvolutionOperator {
    fn domain_dim(&self) -> usize {
        self.rows * self.cols
    }
    fn range_dim(&self) -> usize {
        self.rows * self.cols
    }
    fn apply_into(&self, x: &[f64], y: &mut [f64]) {
        self.correlate(x, y, 1);
    }
    fn adjoint_into(&self, y: &[f64], x: &mut [f64]) {
        self.correlate(y, x, -1);
    }
}

/// Blur followed by keeping every `factor`-th row and column from index 0.
pub struct DownsampleOperator {
    blur: Operator,
    rows: usize,
    cols: usize,
    factor: usize,
}

impl DownsampleOperator {
    pub fn new(blur: Operator, rows: usize, cols: usize, factor: usize) -> Result<Self> {
        if factor == 0 || rows % factor != 0 || cols % factor != 0 {
            return Err(Error::InvalidArgument(format!(
                "{rows}x{cols} image not divisible by factor {factor}"
            )));
        }
        crate::error::check_len(rows * cols, blur.domain_dim())?;
        crate::error::check_len(rows * cols, blur.range_dim())?;
        Ok(Self {
            blur,
            rows,
            cols,
            factor,
        })
    }

    pub fn low_rows(&self) -> usize {
        self.rows / self.factor
    }

    pub fn low_cols(&self) -> usize {
        self.cols / self.factor
    }
}

impl LinearOperator for DownsampleOperator {
    fn domain_dim(&self) -> usize {
        self.rows * self.cols
    }
    fn range_dim(&self) -> usize {
        self.low_rows() * self.low_cols()
    }
    fn apply_into(&self, x: &[f64], y: &mut [f64]) {
        let b = self.blur.apply(x);
        let lr = self.low_rows();
        for jl in 0..self.low_cols() {
            for il in 0..lr {
                y[jl * lr + il] = b[jl * self.factor * self.rows + il * self.factor];
            }
        }
    }
    fn adjoint_into(&self, y: &[f64], x: &mut [f64]) {
        let mut z = vec![0.0; self.rows * self.cols];
        let lr = self.low_rows();
        for jl in 0..self.low_cols() {
            for il in 0..lr {
                z[jl * self.factor * self.rows + il * self.factor] = y[jl * lr + il];
            }
        }
        self.blur.adjoint_into(&z, x);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linops::{adjoint_mismatch, IdentityOperator};
    use crate::rng::Rng;
    use std::sync::Arc;

    #[test]
    fn unit_kernel_is_identity() {
        let k = DenseMatrix::from_element(1, 1, 1.0);
        let op = ConvolutionOperator::new(&k, 5, 4).unwrap();
        let x = Rng::new(0).normal_vec(20);
        assert_eq!(op.apply(&x), x);
    }

    #[test]
    fn even_kernel_rejected() {
        assert!(ConvolutionOperator::new(&uniform_kernel(4), 8, 8).is_err());
    }

    #[test]
    fn mass_preserved_on_constant() {
        let op = ConvolutionOperator::new(&uniform_kernel(3), 6, 7).unwrap();
        let y = op.apply(&vec![0.3; 42]);
        assert!(y.iter().all(|v| (v - 0.3).abs() < 1e-15));
    }

    #[test]
    fn shifts_in_the_convolution_direction() {
        // kernel with a single tap one row below the centre: y(i,j) = x(i-1,j)
        let mut k = DenseMatrix::zeros(3, 3);
        k[(2, 1)] = 1.0;
        let op = ConvolutionOperator::new(&k, 4, 2).unwrap();
        let x: Vec<f64> = (0..8).map(|v| v as f64).collect();
        assert_eq!(op.apply(&x), vec![3.0, 0.0, 1.0, 2.0, 7.0, 4.0, 5.0, 6.0]);
    }

    #[test]
    fn gaussian_adjoint() {
        let op = ConvolutionOperator::new(&gaussian_kernel(9, 1.6), 16, 16).unwrap();
        assert!(adjoint_mismatch(&op, 20, &mut Rng::new(1)) < 1e-10);
    }

    #[test]
    fn gaussian_kernel_normalized_symmetric() {
        let k = gaussian_kernel(9, 1.6);
        assert!((k.sum() - 1.0).abs() < 1e-12);
        assert!((&k - k.transpose()).norm() < 1e-15);
        assert!((k[(0, 0)] - k[(8, 8)]).abs() < 1e-15);
    }

    #[test]
    fn downsample_examples() {
        let id: Operator = Arc::new(IdentityOperator(16));
        let d1 = DownsampleOperator::new(id.clone(), 4, 4, 1).unwrap();
        let x = Rng::new(0).normal_vec(16);
        assert_eq!(d1.apply(&x), x);

        let d2 = DownsampleOperator::new(id.clone(), 4, 4, 2).unwrap();
        assert_eq!(d2.apply(&vec![2.5; 16]), vec![2.5; 4]);
        let ramp: Vec<f64> = (0..16).map(|v| v as f64).collect();
        assert_eq!(d2.apply(&ramp), vec![0.0, 2.0, 8.0, 10.0]);
        assert!(DownsampleOperator::new(id, 4, 4, 3).is_err());

        let blur: Operator = Arc::new(ConvolutionOperator::new(&gaussian_kernel(7, 1.6), 16, 16).unwrap());
        let d = DownsampleOperator::new(blur, 16, 16, 2).unwrap();
        assert_eq!(d.range_dim(), 64);
        assert!(adjoint_mismatch(&d, 20, &mut Rng::new(2)) < 1e-10);
    }
}
