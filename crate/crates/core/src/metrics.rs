use crate::error::{Error, Result};
use crate::grid::ImageGrid;

/// Reported when the reconstruction is exact, so CSV columns stay numeric.
pub const PSNR_CAP_DB: f64 = 300.0;

pub fn mse(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>() / a.len() as f64
}

/// Peak signal-to-noise ratio in dB, capped at [`PSNR_CAP_DB`].
pub fn psnr(x: &ImageGrid, reference: &ImageGrid, peak: f64) -> Result<f64> {
    if x.rows() != reference.rows() || x.cols() != reference.cols() {
        return Err(Error::DimensionMismatch {
            expected: reference.len(),
            got: x.len(),
        });
    }
    psnr_slice(x.as_slice(), reference.as_slice(), peak)
}

pub fn psnr_slice(x: &[f64], reference: &[f64], peak: f64) -> Result<f64> {
    if x.len() != reference.len() {
        return Err(Error::DimensionMismatch {
            expected: reference.len(),
            got: x.len(),
        });
    }
    if !(peak > 0.0) {
        return Err(Error::InvalidArgument(format!("peak must be positive, got {peak}")));
    }
    let m = mse(x, reference);
    if m == 0.0 {
        return Ok(PSNR_CAP_DB);
    }
    Ok((10.0 * (peak * peak / m).log10()).min(PSNR_CAP_DB))
}
