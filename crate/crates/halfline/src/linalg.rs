//! Thin bridge to faer for dense complex solves.

use faer::complex_native::c64;
use faer::prelude::*;
use faer::Mat;
use num_complex::Complex64 as C64;

#[inline]
pub fn to_f(z: C64) -> c64 {
    c64::new(z.re, z.im)
}

#[inline]
pub fn from_f(z: c64) -> C64 {
    C64::new(z.re, z.im)
}

/// Dense matrix from a row-major closure.
pub fn mat_from_fn<F: FnMut(usize, usize) -> C64>(rows: usize, cols: usize, mut f: F) -> Mat<c64> {
    Mat::from_fn(rows, cols, |i, j| to_f(f(i, j)))
}

/// Inverse of a small dense matrix given row-major.
pub fn inverse(n: usize, a: &[C64]) -> Vec<C64> {
    let m = mat_from_fn(n, n, |i, j| a[i * n + j]);
    let inv = m.partial_piv_lu().inverse();
    let mut out = vec![C64::new(0.0, 0.0); n * n];
    for i in 0..n {
        for j in 0..n {
            out[i * n + j] = from_f(inv.read(i, j));
        }
    }
    out
}

/// Solves A X = B, returning X and a lower bound for the 1-norm condition number.
pub fn solve_with_condition(a: &Mat<c64>, b: &Mat<c64>) -> (Mat<c64>, f64) {
    let n = a.nrows();
    let lu = a.partial_piv_lu();
    let x = lu.solve(b);
    let norm1 = (0..n)
        .map(|j| (0..n).map(|i| from_f(a.read(i, j)).norm()).sum::<f64>())
        .fold(0.0, f64::max);
    // One step of a Hager-style estimate with a sign-pattern probe.
    let probe = Mat::from_fn(n, 1, |i, _| {
        let s = if (i * 2654435761usize) % 7 < 3 { -1.0 } else { 1.0 };
        c64::new(s / n as f64, 0.0)
    });
    let y = lu.solve(&probe);
    let ynorm: f64 = (0..n).map(|i| from_f(y.read(i, 0)).norm()).sum();
    (x, norm1 * ynorm)
}

/// Singular values and right singular vectors (columns) of a dense complex matrix.
pub fn svd_right(rows: usize, cols: usize, a: &[C64]) -> (Vec<f64>, Vec<Vec<C64>>) {
    let m = mat_from_fn(rows, cols, |i, j| a[i * cols + j]);
    let svd = m.svd();
    let s: Vec<f64> = (0..rows.min(cols)).map(|i| svd.s_diagonal().read(i).re).collect();
    let v = svd.v();
    let vs = (0..cols).map(|j| (0..cols).map(|i| from_f(v.read(i, j))).collect()).collect();
    (s, vs)
}

/// Least-squares solution of an overdetermined system (row-major `a`, rows × cols) via QR.
pub fn lstsq(rows: usize, cols: usize, a: &[C64], b: &[C64]) -> Vec<C64> {
    let m = mat_from_fn(rows, cols, |i, j| a[i * cols + j]);
    let rhs = mat_from_fn(rows, 1, |i, _| b[i]);
    let x = m.qr().solve_lstsq(&rhs);
    (0..cols).map(|i| from_f(x.read(i, 0))).collect()
}

/// Eigenvalues of a dense complex matrix (row-major, n × n).
pub fn eigenvalues(n: usize, a: &[C64]) -> Vec<C64> {
    mat_from_fn(n, n, |i, j| a[i * n + j]).complex_eigenvalues().into_iter().map(from_f).collect()
}

/// Roots of Σ cⱼ zʲ (coefficients in increasing degree) via the companion matrix.
pub fn poly_roots(coeffs: &[C64]) -> Vec<C64> {
    let n = coeffs.len() - 1;
    let lead = coeffs[n];
    let mut m = vec![C64::new(0.0, 0.0); n * n];
    for i in 1..n {
        m[i * n + i - 1] = C64::new(1.0, 0.0);
    }
    for i in 0..n {
        m[i * n + n - 1] = -coeffs[i] / lead;
    }
    eigenvalues(n, &m)
}
