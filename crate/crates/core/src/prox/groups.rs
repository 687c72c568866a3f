use std::f64::consts::SQRT_2;

use crate::error::{check_len, Error, Result};
use crate::linops::{GroupKind, GroupStructure};

/// Group norm `φ` of a mixed norm `‖·‖_{1,φ}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GroupNorm {
    L1,
    L2,
    Linf,
}

impl GroupNorm {
    pub fn dual(self) -> Self {
        match self {
            GroupNorm::L1 => GroupNorm::Linf,
            GroupNorm::L2 => GroupNorm::L2,
            GroupNorm::Linf => GroupNorm::L1,
        }
    }

    fn of(self, v: &[f64]) -> f64 {
        match self {
            GroupNorm::L1 => v.iter().map(|x| x.abs()).sum(),
            GroupNorm::L2 => v.iter().map(|x| x * x).sum::<f64>().sqrt(),
            GroupNorm::Linf => v.iter().fold(0.0, |m, x| m.max(x.abs())),
        }
    }
}

impl std::str::FromStr for GroupNorm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "1" => Ok(GroupNorm::L1),
            "2" => Ok(GroupNorm::L2),
            "inf" | "Inf" | "infinity" => Ok(GroupNorm::Linf),
            _ => Err(Error::InvalidArgument(format!("group norm must be 1, 2 or inf, got {s:?}"))),
        }
    }
}

/// Element of the dual space of a regularization operator, laid out as
/// `structure.count` consecutive groups.
#[derive(Debug, Clone, PartialEq)]
pub struct DualVariable {
    structure: GroupStructure,
    values: Vec<f64>,
}

impl DualVariable {
    pub fn zeros(structure: GroupStructure) -> Self {
        Self {
            structure,
            values: vec![0.0; structure.len()],
        }
    }

    pub fn new(structure: GroupStructure, values: Vec<f64>) -> Result<Self> {
        check_len(structure.len(), values.len())?;
        Ok(Self { structure, values })
    }

    pub fn structure(&self) -> GroupStructure {
        self.structure
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn group(&self, l: usize) -> &[f64] {
        let g = self.structure.group_size();
        &self.values[l * g..(l + 1) * g]
    }
}

/// Eigenvalues `λ₁ ≥ λ₂` and the angle of the first eigenvector of the
/// symmetric matrix stored as `(a, b, √2·c)`.
fn sym2_eigen(t: &[f64]) -> (f64, f64, f64) {
    let (a, b, c) = (t[0], t[1], t[2] / SQRT_2);
    let m = 0.5 * (a + b);
    let d = 0.5 * (a - b);
    let r = d.hypot(c);
    (m + r, m - r, 0.5 * c.atan2(d))
}

fn sym2_rebuild(l1: f64, l2: f64, theta: f64, out: &mut [f64]) {
    let (s, c) = theta.sin_cos();
    out[0] = l1 * c * c + l2 * s * s;
    out[1] = l1 * s * s + l2 * c * c;
    out[2] = SQRT_2 * (l1 - l2) * s * c;
}

/// Euclidean projection onto the unit `ℓ1` ball.
fn project_l1_ball(v: &mut [f64]) {
    let n1: f64 = v.iter().map(|x| x.abs()).sum();
    if n1 <= 1.0 {
        return;
    }
    let mut a: Vec<f64> = v.iter().map(|x| x.abs()).collect();
    // stable sort keeps index order among ties
    a.sort_by(|x, y| y.total_cmp(x));
    let mut cum = 0.0;
    let mut theta = 0.0;
    for (k, ak) in a.iter().enumerate() {
        cum += ak;
        let t = (cum - 1.0) / (k + 1) as f64;
        if *ak > t {
            theta = t;
        } else {
            break;
        }
    }
    for x in v.iter_mut() {
        *x = x.signum() * (x.abs() - theta).max(0.0);
    }
}

fn project_vec(v: &mut [f64], psi: GroupNorm) {
    match psi {
        GroupNorm::Linf => {
            for x in v.iter_mut() {
                *x = x.clamp(-1.0, 1.0);
            }
        }
        GroupNorm::L2 => {
            let n = GroupNorm::L2.of(v);
            if n > 1.0 {
                for x in v.iter_mut() {
                    *x /= n;
                }
            }
        }
        GroupNorm::L1 => project_l1_ball(v),
    }
}

fn project_group(g: &mut [f64], kind: GroupKind, psi: GroupNorm) {
    match kind {
        GroupKind::Scalar => g[0] = g[0].clamp(-1.0, 1.0),
        GroupKind::Vector(_) => project_vec(g, psi),
        GroupKind::Sym2x2 => {
            let (l1, l2, theta) = sym2_eigen(g);
            let mut lam = [l1, l2];
            project_vec(&mut lam, psi);
            sym2_rebuild(lam[0], lam[1], theta, g);
        }
    }
}

/// Projects each group of `q` onto the unit ball of the dual norm `ψ` of `φ`.
pub fn project_group_ball(q: &DualVariable, phi: GroupNorm) -> DualVariable {
    let mut out = q.clone();
    project_group_ball_in_place(&mut out, phi);
    out
}

pub(crate) fn project_group_ball_in_place(q: &mut DualVariable, phi: GroupNorm) {
    let psi = phi.dual();
    let kind = q.structure.kind;
    let g = q.structure.group_size();
    for chunk in q.values.chunks_exact_mut(g) {
        project_group(chunk, kind, psi);
    }
}

/// `Σₗ ‖vₗ‖_φ`; symmetric 2x2 groups use the Schatten-φ norm.
pub fn mixed_norm_value(v: &[f64], phi: GroupNorm, structure: GroupStructure) -> Result<f64> {
    check_len(structure.len(), v.len())?;
    let g = structure.group_size();
    Ok(v
        .chunks_exact(g)
        .map(|chunk| match structure.kind {
            GroupKind::Scalar => chunk[0].abs(),
            GroupKind::Vector(_) => phi.of(chunk),
            GroupKind::Sym2x2 => {
                let (l1, l2, _) = sym2_eigen(chunk);
                phi.of(&[l1, l2])
            }
        })
        .sum())
}

/// Largest per-group `ψ`-norm; at most one after projection.
pub fn max_dual_group_norm(q: &DualVariable, phi: GroupNorm) -> f64 {
    let psi = phi.dual();
    let g = q.structure.group_size();
    q.values
        .chunks_exact(g)
        .map(|chunk| match q.structure.kind {
            GroupKind::Scalar => chunk[0].abs(),
            GroupKind::Vector(_) => psi.of(chunk),
            GroupKind::Sym2x2 => {
                let (l1, l2, _) = sym2_eigen(chunk);
                psi.of(&[l1, l2])
            }
        })
        .fold(0.0, f64::max)
}
