//! Synthetic test problems: phantoms, degradations and noise.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::grid::ImageGrid;
use crate::linops::{
    adjoint_mismatch, gaussian_kernel, uniform_kernel, ConvolutionOperator, DownsampleOperator, GradientOperator,
    GroupKind, GroupStructure, HessianOperator, Operator, RadonOperator, WaveletOperator,
};
use crate::prox::BoxConstraint;
use crate::rng::Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PhantomKind {
    SheppLogan,
    Blocks,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BlurKernel {
    /// 9x9 box filter.
    Uniform9,
    /// 9x9 Gaussian, σ = 1.6.
    Gauss9,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Regularizer {
    Tv,
    Hessian,
    Wavelet,
}

impl std::str::FromStr for PhantomKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "shepp_logan" | "shepp-logan" => Ok(Self::SheppLogan),
            "blocks" => Ok(Self::Blocks),
            _ => Err(Error::InvalidArgument(format!("unknown phantom {s:?}"))),
        }
    }
}

impl std::str::FromStr for BlurKernel {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "uniform9" => Ok(Self::Uniform9),
            "gauss9" | "gauss9_sigma1.6" => Ok(Self::Gauss9),
            _ => Err(Error::InvalidArgument(format!("unknown kernel {s:?}"))),
        }
    }
}

impl std::str::FromStr for Regularizer {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "tv" => Ok(Self::Tv),
            "hs" | "hessian" => Ok(Self::Hessian),
            "wavelet" => Ok(Self::Wavelet),
            _ => Err(Error::InvalidArgument(format!("unknown regularizer {s:?}"))),
        }
    }
}

impl BlurKernel {
    pub fn matrix(self) -> crate::DenseMatrix {
        match self {
            BlurKernel::Uniform9 => uniform_kernel(9),
            BlurKernel::Gauss9 => gaussian_kernel(9, 1.6),
        }
    }
}

/// Everything a solver needs: `y ≈ A x_true` and a regularizer `L`.
#[derive(Clone)]
pub struct ProblemInstance {
    pub a: Operator,
    pub l: Operator,
    pub groups: GroupStructure,
    pub regularizer: Regularizer,
    /// Upper bound on `‖L‖²`.
    pub l_norm_sq: f64,
    pub y: Vec<f64>,
    pub ground_truth: ImageGrid,
    pub peak: f64,
    pub constraint: BoxConstraint,
    pub label: String,
}

impl std::fmt::Debug for ProblemInstance {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ProblemInstance")
            .field("label", &self.label)
            .field("n", &self.a.domain_dim())
            .field("m", &self.a.range_dim())
            .field("regularizer", &self.regularizer)
            .finish()
    }
}

impl ProblemInstance {
    pub fn dim(&self) -> usize {
        self.a.domain_dim()
    }

    fn checked(self, adjoint_tol: f64) -> Result<Self> {
        let n = self.ground_truth.len();
        crate::error::check_len(n, self.a.domain_dim())?;
        crate::error::check_len(n, self.l.domain_dim())?;
        crate::error::check_len(self.a.range_dim(), self.y.len())?;
        self.groups.validate(self.l.range_dim())?;
        let mut rng = Rng::new(0x5eed);
        for (name, op) in [("A", &self.a), ("L", &self.l)] {
            let err = adjoint_mismatch(op.as_ref(), 2, &mut rng);
            if !(err <= adjoint_tol) {
                return Err(Error::InvalidArgument(format!("{name} fails the adjoint test: {err:e}")));
            }
        }
        Ok(self)
    }
}

/// Modified Shepp-Logan ellipses: (intensity, a, b, x0, y0, angle in degrees).
const SHEPP_LOGAN: [(f64, f64, f64, f64, f64, f64); 10] = [
    (1.0, 0.69, 0.92, 0.0, 0.0, 0.0),
    (-0.8, 0.6624, 0.874, 0.0, -0.0184, 0.0),
    (-0.2, 0.11, 0.31, 0.22, 0.0, -18.0),
    (-0.2, 0.16, 0.41, -0.22, 0.0, 18.0),
    (0.1, 0.21, 0.25, 0.0, 0.35, 0.0),
    (0.1, 0.046, 0.046, 0.0, 0.1, 0.0),
    (0.1, 0.046, 0.046, 0.0, -0.1, 0.0),
    (0.1, 0.046, 0.023, -0.08, -0.605, 0.0),
    (0.1, 0.023, 0.023, 0.0, -0.606, 0.0),
    (0.1, 0.023, 0.046, 0.06, -0.605, 0.0),
];

/// Rectangles in fractions of the side: (value, top, left, bottom, right).
const BLOCKS: [(f64, f64, f64, f64, f64); 4] = [
    (0.4, 0.125, 0.125, 0.5, 0.4375),
    (1.0, 0.1875, 0.5625, 0.4375, 0.875),
    (0.7, 0.5625, 0.1875, 0.875, 0.5),
    (0.2, 0.625, 0.625, 0.8125, 0.8125),
];

pub fn phantom(kind: PhantomKind, n: usize) -> Result<ImageGrid> {
    if n < 16 {
        return Err(Error::InvalidArgument(format!("phantom side must be at least 16, got {n}")));
    }
    let img = match kind {
        PhantomKind::SheppLogan => ImageGrid::from_fn(n, n, |i, j| {
            let x = (2 * j + 1) as f64 / n as f64 - 1.0;
            let y = 1.0 - (2 * i + 1) as f64 / n as f64;
            let mut v = 0.0;
            for (val, a, b, x0, y0, deg) in SHEPP_LOGAN {
                let (s, c) = deg.to_radians().sin_cos();
                let (dx, dy) = (x - x0, y - y0);
                let u = dx * c + dy * s;
                let w = -dx * s + dy * c;
                if (u / a).powi(2) + (w / b).powi(2) <= 1.0 {
                    v += val;
                }
            }
            v.clamp(0.0, 1.0)
        }),
        PhantomKind::Blocks => {
            let edge = |f: f64| (f * n as f64).round() as usize;
            ImageGrid::from_fn(n, n, |i, j| {
                let mut v = 0.0;
                for (val, t, l, b, r) in BLOCKS {
                    if i >= edge(t) && i < edge(b) && j >= edge(l) && j < edge(r) {
                        v = val;
                    }
                }
                v
            })
        }
    };
    Ok(img)
}

/// Sets `⌊frac·N⌋` random pixels to 1, then `⌊frac·N⌋` of the others to 0.
pub fn add_salt_pepper(x: &ImageGrid, frac: f64, rng: &mut Rng) -> Result<ImageGrid> {
    if !(0.0..=0.5).contains(&frac) {
        return Err(Error::InvalidArgument(format!("corruption fraction must lie in [0, 0.5], got {frac}")));
    }
    let n = x.len();
    let count = (frac * n as f64).floor() as usize;
    let mut out = x.clone();
    if count == 0 {
        return Ok(out);
    }
    let ones = rand::seq::index::sample(&mut rng.stream(), n, count).into_vec();
    let mut is_one = vec![false; n];
    for &k in &ones {
        is_one[k] = true;
        out.as_mut_slice()[k] = 1.0;
    }
    let rest: Vec<usize> = (0..n).filter(|k| !is_one[*k]).collect();
    for k in rand::seq::index::sample(&mut rng.stream(), rest.len(), count) {
        out.as_mut_slice()[rest[k]] = 0.0;
    }
    Ok(out)
}

fn regularizer_parts(reg: Regularizer, n: usize) -> Result<(Operator, GroupStructure, f64)> {
    Ok(match reg {
        Regularizer::Tv => {
            let g = GradientOperator::new(n, n)?;
            let (s, ns) = (g.groups(), g.norm_sq());
            (Arc::new(g), s, ns)
        }
        Regularizer::Hessian => {
            let h = HessianOperator::new(n, n)?;
            let (s, ns) = (h.groups(), h.norm_sq());
            (Arc::new(h), s, ns)
        }
        Regularizer::Wavelet => {
            let w = WaveletOperator::new(n, n, 4)?;
            (Arc::new(w), GroupStructure::new(GroupKind::Scalar, n * n), 1.0)
        }
    })
}

pub fn make_deblur(
    truth: PhantomKind,
    kernel: BlurKernel,
    n: usize,
    noise_frac: f64,
    rng: &mut Rng,
) -> Result<ProblemInstance> {
    if n < 32 {
        return Err(Error::InvalidArgument(format!("deblurring needs n >= 32, got {n}")));
    }
    let x = phantom(truth, n)?;
    let a: Operator = Arc::new(ConvolutionOperator::new(&kernel.matrix(), n, n)?);
    let clean = ImageGrid::new(n, n, a.apply(x.as_slice()))?;
    let y = add_salt_pepper(&clean, noise_frac, rng)?.into_vec();
    let (l, groups, l_norm_sq) = regularizer_parts(Regularizer::Tv, n)?;
    ProblemInstance {
        a,
        l,
        groups,
        regularizer: Regularizer::Tv,
        l_norm_sq,
        y,
        ground_truth: x,
        peak: 1.0,
        constraint: BoxConstraint::unbounded(),
        label: format!("deblur-{kernel:?}-{n}").to_lowercase(),
    }
    .checked(1e-10)
}

pub fn make_sr(truth: PhantomKind, n: usize, factor: usize, noise_frac: f64, rng: &mut Rng) -> Result<ProblemInstance> {
    if factor == 0 || n % factor != 0 {
        return Err(Error::InvalidArgument(format!("side {n} not divisible by factor {factor}")));
    }
    let x = phantom(truth, n)?;
    let blur: Operator = Arc::new(ConvolutionOperator::new(&gaussian_kernel(7, 1.6), n, n)?);
    let down = DownsampleOperator::new(blur, n, n, factor)?;
    let (lr, lc) = (down.low_rows(), down.low_cols());
    let a: Operator = Arc::new(down);
    let clean = ImageGrid::new(lr, lc, a.apply(x.as_slice()))?;
    let y = add_salt_pepper(&clean, noise_frac, rng)?.into_vec();
    let (l, groups, l_norm_sq) = regularizer_parts(Regularizer::Tv, n)?;
    ProblemInstance {
        a,
        l,
        groups,
        regularizer: Regularizer::Tv,
        l_norm_sq,
        y,
        ground_truth: x,
        peak: 1.0,
        constraint: BoxConstraint::unbounded(),
        label: format!("sr-x{factor}-{n}"),
    }
    .checked(1e-10)
}

pub const CT_DEFAULT_VIEWS: usize = 60;
pub const CT_DEFAULT_NOISE: f64 = 0.01;

pub fn make_ct(
    truth: PhantomKind,
    n: usize,
    views: usize,
    reg: Regularizer,
    noise_sigma: f64,
    rng: &mut Rng,
) -> Result<ProblemInstance> {
    if reg == Regularizer::Wavelet && n % 16 != 0 {
        return Err(Error::InvalidArgument(format!("wavelet CT needs n divisible by 16, got {n}")));
    }
    if !(noise_sigma >= 0.0) {
        return Err(Error::InvalidArgument(format!("noise level must be nonnegative, got {noise_sigma}")));
    }
    let x = phantom(truth, n)?;
    let a: Operator = Arc::new(RadonOperator::new(n, views, RadonOperator::default_bins(n))?);
    let mut y = a.apply(x.as_slice());
    if noise_sigma > 0.0 {
        let scale = noise_sigma * y.iter().copied().fold(0.0, f64::max);
        for (v, e) in y.iter_mut().zip(rng.normal_vec(a.range_dim())) {
            *v += scale * e;
        }
    }
    let (l, groups, l_norm_sq) = regularizer_parts(reg, n)?;
    ProblemInstance {
        a,
        l,
        groups,
        regularizer: reg,
        l_norm_sq,
        y,
        ground_truth: x,
        peak: 1.0,
        constraint: if reg == Regularizer::Wavelet {
            BoxConstraint::unbounded()
        } else {
            BoxConstraint::unit()
        },
        label: format!("ct-{reg:?}-{n}-{views}").to_lowercase(),
    }
    .checked(1e-8)
}
