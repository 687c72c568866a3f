//! Small dense linear algebra used by the sketch and by test oracles.

use nalgebra::{DMatrix, DVector};

/// Column-major dense matrix.
pub type DenseMatrix = DMatrix<f64>;

/// Eigen-decomposition of a symmetric matrix with eigenvalues sorted
/// in nonincreasing order.
pub fn sym_eigen(m: &DenseMatrix) -> (Vec<f64>, DenseMatrix) {
    let sym = (m + m.transpose()) * 0.5;
    let eig = sym.symmetric_eigen();
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = DenseMatrix::from_fn(m.nrows(), order.len(), |r, c| {
        eig.eigenvectors[(r, order[c])]
    });
    (values, vectors)
}

pub fn sym_eigenvalues(m: &DenseMatrix) -> Vec<f64> {
    sym_eigen(m).0
}

/// Moore-Penrose pseudo-inverse; singular values below
/// `max(m,n) * eps * s_max` are treated as zero.
pub fn pinv(m: &DenseMatrix) -> DenseMatrix {
    let svd = m.clone().svd(true, true);
    let smax = svd.singular_values.max();
    let cutoff = m.nrows().max(m.ncols()) as f64 * f64::EPSILON * smax;
    let u = svd.u.as_ref().unwrap();
    let vt = svd.v_t.as_ref().unwrap();
    let mut out = DenseMatrix::zeros(m.ncols(), m.nrows());
    for (k, &s) in svd.singular_values.iter().enumerate() {
        if s > cutoff {
            out += (vt.row(k).transpose() / s) * u.column(k).transpose();
        }
    }
    out
}

/// Numerical rank: singular values above `rel_tol * s_max`.
pub fn numerical_rank(m: &DenseMatrix, rel_tol: f64) -> usize {
    let s = m.singular_values();
    let smax = s.max();
    if smax == 0.0 {
        return 0;
    }
    s.iter().filter(|&&v| v > rel_tol * smax).count()
}

/// Condition number of a symmetric positive definite matrix.
pub fn spd_condition_number(m: &DenseMatrix) -> f64 {
    let ev = sym_eigenvalues(m);
    ev[0] / ev[ev.len() - 1]
}

pub fn matvec(m: &DenseMatrix, x: &[f64]) -> Vec<f64> {
    (m * DVector::from_column_slice(x)).as_slice().to_vec()
}

pub fn matvec_t(m: &DenseMatrix, x: &[f64]) -> Vec<f64> {
    (m.transpose() * DVector::from_column_slice(x))
        .as_slice()
        .to_vec()
}

pub fn frobenius(m: &DenseMatrix) -> f64 {
    m.norm()
}

/// Random `n x n` orthogonal matrix (Q factor of a Gaussian matrix).
pub fn random_orthogonal(n: usize, rng: &mut crate::rng::Rng) -> DenseMatrix {
    let g = rng.standard_normal_matrix(n, n);
    g.qr().q()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn eigen_sorted_descending() {
        let m = DenseMatrix::from_diagonal(&DVector::from_vec(vec![1.0, 5.0, 3.0]));
        let (v, vecs) = sym_eigen(&m);
        assert_eq!(v, vec![5.0, 3.0, 1.0]);
        assert!((vecs[(1, 0)].abs() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn pinv_of_rank_one() {
        let u = DVector::from_vec(vec![1.0, 2.0, 2.0]);
        let m = &u * u.transpose();
        let p = pinv(&m);
        // for u uᵀ the pseudo-inverse is u uᵀ / |u|^4
        let expect = &m / 81.0;
        assert!((p - expect).norm() < 1e-14);
        assert_eq!(numerical_rank(&m, 1e-12), 1);
    }
}
