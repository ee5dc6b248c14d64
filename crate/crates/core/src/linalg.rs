//! Small dense helpers on top of nalgebra.

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64 as C64;

pub type CMat = DMatrix<C64>;
pub type RMat = DMatrix<f64>;

pub const I: C64 = C64 { re: 0.0, im: 1.0 };

/// Eigendecomposition of a Hermitian matrix, eigenvalues ascending.
pub fn eigh(m: &CMat) -> (Vec<f64>, CMat) {
    let n = m.nrows();
    let eig = SymmetricEigen::new(m.clone());
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let vectors = CMat::from_fn(n, n, |r, c| eig.eigenvectors[(r, order[c])]);
    (values, vectors)
}

/// Real symmetric eigendecomposition, eigenvalues ascending.
pub fn eigh_real(m: &RMat) -> (Vec<f64>, RMat) {
    let n = m.nrows();
    let eig = SymmetricEigen::new(m.clone());
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let vectors = RMat::from_fn(n, n, |r, c| eig.eigenvectors[(r, order[c])]);
    (values, vectors)
}

/// Rebuilds `V diag(values) V†`.
pub fn compose(values: &[C64], vectors: &CMat) -> CMat {
    let mut scaled = vectors.clone();
    for (c, v) in values.iter().enumerate() {
        for r in 0..vectors.nrows() {
            scaled[(r, c)] *= v;
        }
    }
    &scaled * vectors.adjoint()
}

pub fn max_abs(m: &CMat) -> f64 {
    m.iter().fold(0.0, |acc, z| acc.max(z.norm()))
}

pub fn to_complex(m: &RMat) -> CMat {
    m.map(|x| C64::new(x, 0.0))
}

/// First element (row-major) where `m` and `m†` differ by more than `tol`.
pub fn hermiticity_violation(m: &CMat, tol: f64) -> Option<(usize, usize, f64)> {
    let n = m.nrows();
    for p in 0..n {
        for q in p..n {
            let diff = (m[(p, q)] - m[(q, p)].conj()).norm();
            if diff > tol {
                return Some((p, q, diff));
            }
        }
    }
    None
}

pub fn unitarity_error(u: &CMat) -> f64 {
    let n = u.nrows();
    max_abs(&(u * u.adjoint() - CMat::identity(n, n)))
}

/// `(m + m†) / 2`
pub fn hermitize(m: &CMat) -> CMat {
    (m + m.adjoint()).scale(0.5)
}

/// Wraps an angle into (-π, π].
pub fn wrap_angle(x: f64) -> f64 {
    let two_pi = 2.0 * std::f64::consts::PI;
    let mut y = x % two_pi;
    if y <= -std::f64::consts::PI {
        y += two_pi;
    } else if y > std::f64::consts::PI {
        y -= two_pi;
    }
    y
}

/// `(m + mᵀ) / 2`
pub fn symmetrize_real(m: &RMat) -> RMat {
    (m + m.transpose()).scale(0.5)
}
