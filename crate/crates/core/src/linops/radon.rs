//! Parallel-beam projector using Joseph's method.
//!
//! Pixel `(i, j)` of an `n x n` image is centred at `x = j - c`,
//! `y = c - i` with `c = (n-1)/2`. View `a` has angle `θ = aπ/views`; a ray
//! with detector offset `s` is the line `x cosθ + y sinθ = s`. Detector bins
//! are unit-spaced and centred. Along each ray we step one pixel row (or
//! column) at a time along the dominant direction and linearly interpolate
//! in the other, scaling by the path length per step. The adjoint scatters
//! the identical weights.
//!
//! Sinogram layout is column-stacked with bins as rows: entry
//! `(bin b, view a)` is at `a * bins + b`.

use std::f64::consts::PI;

use rayon::prelude::*;

use crate::error::{Error, Result};

use super::LinearOperator;

#[derive(Debug, Clone)]
pub struct RadonOperator {
    n: usize,
    views: usize,
    bins: usize,
    angles: Vec<(f64, f64)>,
}

impl RadonOperator {
    pub fn new(n: usize, views: usize, bins: usize) -> Result<Self> {
        if n == 0 || views == 0 || bins == 0 {
            return Err(Error::InvalidArgument(format!(
                "radon geometry must be positive, got n={n} views={views} bins={bins}"
            )));
        }
        let angles = (0..views)
            .map(|a| {
                let t = a as f64 * PI / views as f64;
                (t.cos(), t.sin())
            })
            .collect();
        Ok(Self {
            n,
            views,
            bins,
            angles,
        })
    }

    /// Enough bins to cover the image diagonal.
    pub fn default_bins(n: usize) -> usize {
        (n as f64 * 2f64.sqrt()).ceil() as usize + 1
    }

    pub fn views(&self) -> usize {
        self.views
    }

    pub fn bins(&self) -> usize {
        self.bins
    }

    pub fn image_side(&self) -> usize {
        self.n
    }

    fn detector_offset(&self, b: usize) -> f64 {
        b as f64 - (self.bins as f64 - 1.0) / 2.0
    }

    /// Visits `(pixel index, weight)` pairs of one ray.
    fn for_each_weight(&self, view: usize, bin: usize, mut f: impl FnMut(usize, f64)) {
        let n = self.n;
        let c = (n as f64 - 1.0) / 2.0;
        let (cos, sin) = self.angles[view];
        let s = self.detector_offset(bin);
        if cos.abs() >= sin.abs() {
            // step over rows, interpolate along x
            let w = 1.0 / cos.abs();
            for i in 0..n {
                let y = c - i as f64;
                let jf = (s - y * sin) / cos + c;
                let j0 = jf.floor();
                let frac = jf - j0;
                let j0 = j0 as isize;
                if j0 >= 0 && (j0 as usize) < n {
                    f(j0 as usize * n + i, w * (1.0 - frac));
                }
                let j1 = j0 + 1;
                if j1 >= 0 && (j1 as usize) < n && frac > 0.0 {
                    f(j1 as usize * n + i, w * frac);
                }
            }
        } else {
            let w = 1.0 / sin.abs();
            for j in 0..n {
                let x = j as f64 - c;
                let y = (s - x * cos) / sin;
                let i_f = c - y;
                let i0 = i_f.floor();
                let frac = i_f - i0;
                let i0 = i0 as isize;
                if i0 >= 0 && (i0 as usize) < n {
                    f(j * n + i0 as usize, w * (1.0 - frac));
                }
                let i1 = i0 + 1;
                if i1 >= 0 && (i1 as usize) < n && frac > 0.0 {
                    f(j * n + i1 as usize, w * frac);
                }
            }
        }
    }
}

impl LinearOperator for RadonOperator {
    fn domain_dim(&self) -> usize {
        self.n * self.n
    }
    fn range_dim(&self) -> usize {
        self.views * self.bins
    }
    fn apply_into(&self, x: &[f64], y: &mut [f64]) {
        y.par_chunks_mut(self.bins)
            .enumerate()
            .for_each(|(a, col)| {
                for (b, out) in col.iter_mut().enumerate() {
                    let mut acc = 0.0;
                    self.for_each_weight(a, b, |k, w| acc += w * x[k]);
                    *out = acc;
                }
            });
    }
    fn adjoint_into(&self, y: &[f64], x: &mut [f64]) {
        x.fill(0.0);
        for a in 0..self.views {
            for b in 0..self.bins {
                let v = y[a * self.bins + b];
                if v != 0.0 {
                    self.for_each_weight(a, b, |k, w| x[k] += w * v);
                }
            }
        }
    }
}
