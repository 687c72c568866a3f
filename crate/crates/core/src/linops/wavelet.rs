//! Orthonormal 2D Daubechies-4 (two vanishing moments) wavelet transform
//! with periodic extension.
//!
//! Coefficients are stored in the usual Mallat layout inside the image:
//! after each level the approximation occupies the top-left quarter of the
//! previous block.

use crate::error::{Error, Result};

use super::LinearOperator;

fn lowpass() -> [f64; 4] {
    let s3 = 3f64.sqrt();
    let d = 4.0 * 2f64.sqrt();
    [(1.0 + s3) / d, (3.0 + s3) / d, (3.0 - s3) / d, (1.0 - s3) / d]
}

fn highpass(h: &[f64; 4]) -> [f64; 4] {
    [h[3], -h[2], h[1], -h[0]]
}

#[derive(Debug, Clone)]
pub struct WaveletOperator {
    rows: usize,
    cols: usize,
    levels: usize,
    h: [f64; 4],
    g: [f64; 4],
}

impl WaveletOperator {
    pub fn new(rows: usize, cols: usize, levels: usize) -> Result<Self> {
        let block = 1usize << levels;
        if levels == 0 || rows % block != 0 || cols % block != 0 {
            return Err(Error::InvalidArgument(format!(
                "{rows}x{cols} image not divisible by 2^{levels}"
            )));
        }
        let h = lowpass();
        Ok(Self {
            rows,
            cols,
            levels,
            g: highpass(&h),
            h,
        })
    }

    pub fn levels(&self) -> usize {
        self.levels
    }

    fn analyze(&self, src: &[f64], dst: &mut [f64]) {
        let n = src.len();
        let half = n / 2;
        for k in 0..half {
            let (mut a, mut d) = (0.0, 0.0);
            for m in 0..4 {
                let v = src[(2 * k + m) % n];
                a += self.h[m] * v;
                d += self.g[m] * v;
            }
            dst[k] = a;
            dst[half + k] = d;
        }
    }

    fn synthesize(&self, src: &[f64], dst: &mut [f64]) {
        let n = src.len();
        let half = n / 2;
        dst.fill(0.0);
        for k in 0..half {
            let (a, d) = (src[k], src[half + k]);
            for m in 0..4 {
                dst[(2 * k + m) % n] += self.h[m] * a + self.g[m] * d;
            }
        }
    }

    // Applies `f` to every column then every row of the top-left `br x bc` block.
    fn pass(
        &self,
        data: &mut [f64],
        br: usize,
        bc: usize,
        columns_first: bool,
        f: impl Fn(&Self, &[f64], &mut [f64]),
    ) {
        let r = self.rows;
        let mut buf_in = vec![0.0; br.max(bc)];
        let mut buf_out = vec![0.0; br.max(bc)];
        let mut do_cols = |data: &mut [f64]| {
            for j in 0..bc {
                let col = &mut data[j * r..j * r + br];
                buf_in[..br].copy_from_slice(col);
                f(self, &buf_in[..br], &mut buf_out[..br]);
                col.copy_from_slice(&buf_out[..br]);
            }
        };
        let mut row_in = vec![0.0; bc];
        let mut row_out = vec![0.0; bc];
        let mut do_rows = |data: &mut [f64]| {
            for i in 0..br {
                for j in 0..bc {
                    row_in[j] = data[j * r + i];
                }
                f(self, &row_in, &mut row_out);
                for j in 0..bc {
                    data[j * r + i] = row_out[j];
                }
            }
        };
        if columns_first {
            do_cols(data);
            do_rows(data);
        } else {
            do_rows(data);
            do_cols(data);
        }
    }
}

impl LinearOperator for WaveletOperator {
    fn domain_dim(&self) -> usize {
        self.rows * self.cols
    }
    fn range_dim(&self) -> usize {
        self.rows * self.cols
    }
    fn apply_into(&self, x: &[f64], y: &mut [f64]) {
        y.copy_from_slice(x);
        let (mut br, mut bc) = (self.rows, self.cols);
        for _ in 0..self.levels {
            self.pass(y, br, bc, true, Self::analyze);
            br /= 2;
            bc /= 2;
        }
    }
    fn adjoint_into(&self, y: &[f64], x: &mut [f64]) {
        x.copy_from_slice(y);
        for lev in (0..self.levels).rev() {
            let (br, bc) = (self.rows >> lev, self.cols >> lev);
            self.pass(x, br, bc, false, Self::synthesize);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linops::adjoint_mismatch;
    use crate::rng::Rng;
    use crate::vector::{dist2, norm2};

    #[test]
    fn filter_orthonormality() {
        let h = lowpass();
        let g = highpass(&h);
        let s: f64 = h.iter().sum();
        assert!((s - 2f64.sqrt()).abs() < 1e-15);
        assert!((h.iter().map(|v| v * v).sum::<f64>() - 1.0).abs() < 1e-15);
        assert!((h[0] * h[2] + h[1] * h[3]).abs() < 1e-15);
        assert!(g.iter().sum::<f64>().abs() < 1e-15);
        // two vanishing moments
        assert!(g.iter().enumerate().map(|(k, v)| k as f64 * v).sum::<f64>().abs() < 1e-14);
    }

    #[test]
    fn perfect_reconstruction_and_parseval() {
        let w = WaveletOperator::new(16, 16, 4).unwrap();
        let mut rng = Rng::new(5);
        for _ in 0..5 {
            let x = rng.normal_vec(256);
            let c = w.apply(&x);
            assert!((norm2(&c) - norm2(&x)).abs() < 1e-10);
            let back = w.adjoint(&c);
            assert!(dist2(&back, &x) < 1e-10);
            // L Lᵀ = I as well
            let fwd = w.apply(&w.adjoint(&x));
            assert!(dist2(&fwd, &x) < 1e-10);
        }
        assert!(adjoint_mismatch(&w, 20, &mut rng) < 1e-10);
    }

    #[test]
    fn constant_image_lives_in_coarse_band() {
        let w = WaveletOperator::new(32, 16, 3).unwrap();
        let c = w.apply(&vec![1.0; 512]);
        for j in 0..16 {
            for i in 0..32 {
                let v = c[j * 32 + i];
                if i < 4 && j < 2 {
                    assert!((v - 8.0).abs() < 1e-12, "{v}");
                } else {
                    assert!(v.abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn non_square_roundtrip() {
        let w = WaveletOperator::new(8, 24, 2).unwrap();
        let x = Rng::new(1).normal_vec(192);
        assert!(dist2(&w.adjoint(&w.apply(&x)), &x) < 1e-12);
    }

    #[test]
    fn indivisible_rejected() {
        assert!(WaveletOperator::new(24, 16, 4).is_err());
        assert!(WaveletOperator::new(16, 16, 0).is_err());
    }
}
