//! Plain `&[f64]` arithmetic shared by the operators and solvers.

use crate::error::{Error, Result};

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm2_sq(a: &[f64]) -> f64 {
    dot(a, a)
}

pub fn norm2(a: &[f64]) -> f64 {
    norm2_sq(a).sqrt()
}

pub fn norm_inf(a: &[f64]) -> f64 {
    a.iter().fold(0.0, |m, v| m.max(v.abs()))
}

/// `y += alpha * x`
pub fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    debug_assert_eq!(x.len(), y.len());
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

pub fn scale(alpha: f64, x: &mut [f64]) {
    for v in x.iter_mut() {
        *v *= alpha;
    }
}

pub fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

pub fn add(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x + y).collect()
}

pub fn dist2(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

/// `Σ |v_i|^p` for `p ∈ (0, 2]`.
pub fn lp_power(v: &[f64], p: f64) -> Result<f64> {
    if !(p > 0.0 && p <= 2.0) {
        return Err(Error::InvalidArgument(format!("p = {p} outside (0, 2]")));
    }
    Ok(if p == 2.0 {
        norm2_sq(v)
    } else if p == 1.0 {
        v.iter().map(|x| x.abs()).sum()
    } else {
        v.iter().map(|x| x.abs().powf(p)).sum()
    })
}

/// `sqrt(vᵀ W v)`; a negative quadratic form means `W` is not PSD.
pub fn weighted_norm<F>(v: &[f64], w_apply: F) -> Result<f64>
where
    F: FnOnce(&[f64]) -> Vec<f64>,
{
    let wv = w_apply(v);
    if wv.len() != v.len() {
        return Err(Error::DimensionMismatch {
            expected: v.len(),
            got: wv.len(),
        });
    }
    let q = dot(v, &wv);
    if !q.is_finite() {
        return Err(Error::NonFinite("weighted norm"));
    }
    // round-off can push a zero quadratic form slightly negative
    let tiny = 1e-14 * norm2_sq(v).max(norm2_sq(&wv));
    if q < -tiny {
        return Err(Error::NotPositiveDefinite(format!(
            "quadratic form vᵀWv = {q:e}"
        )));
    }
    Ok(q.max(0.0).sqrt())
}
