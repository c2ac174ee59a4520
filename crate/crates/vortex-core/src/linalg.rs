//! Small dense helpers over nalgebra.

use alloc::vec::Vec;
use nalgebra::DMatrix;

use crate::C64;

/// Least-squares solution of `a x ≈ b` and the relative residual `‖ax − b‖/‖b‖`.
pub fn lstsq(a: &DMatrix<C64>, b: &DMatrix<C64>) -> (DMatrix<C64>, f64) {
    let svd = a.clone().svd(true, true);
    let smax = svd.singular_values.max();
    let x = svd
        .solve(b, 1e-14 * smax)
        .unwrap_or_else(|_| DMatrix::zeros(a.ncols(), b.ncols()));
    let r = a * &x - b;
    let bn = b.norm();
    (x, if bn > 0.0 { r.norm() / bn } else { r.norm() })
}

/// Singular values in decreasing order.
pub fn singular_values(a: &DMatrix<C64>) -> Vec<f64> {
    let mut s: Vec<f64> = a.clone().svd(false, false).singular_values.iter().copied().collect();
    s.sort_by(|x, y| y.partial_cmp(x).unwrap_or(core::cmp::Ordering::Equal));
    s
}

/// Orthonormal basis (columns) of the numerical null space, `σ ≤ tol·σ_max`.
pub fn null_space(a: &DMatrix<C64>, tol: f64) -> DMatrix<C64> {
    let n = a.ncols();
    let mut padded = DMatrix::<C64>::zeros(a.nrows().max(n), n);
    padded.view_mut((0, 0), (a.nrows(), n)).copy_from(a);
    let svd = padded.svd(false, true);
    let v_t = svd.v_t.expect("right singular vectors requested");
    let smax = svd.singular_values.max().max(1.0);
    let cols: Vec<usize> = (0..svd.singular_values.len())
        .filter(|&i| svd.singular_values[i] <= tol * smax)
        .collect();
    let mut out = DMatrix::<C64>::zeros(n, cols.len());
    for (c, &i) in cols.iter().enumerate() {
        for j in 0..n {
            out[(j, c)] = v_t[(i, j)].conj();
        }
    }
    out
}
