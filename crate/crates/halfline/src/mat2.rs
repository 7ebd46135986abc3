//! Minimal 2×2 complex matrix used for jumps, Jost solutions and RHP values.

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};
use std::ops::{Add, Mul, Neg, Sub};

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);
pub const I: C64 = C64::new(0.0, 1.0);

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Mat2(pub [[C64; 2]; 2]);

impl Mat2 {
    pub const IDENTITY: Mat2 = Mat2([[ONE, ZERO], [ZERO, ONE]]);
    pub const ZERO: Mat2 = Mat2([[ZERO, ZERO], [ZERO, ZERO]]);

    pub fn new(a: C64, b: C64, c: C64, d: C64) -> Self {
        Mat2([[a, b], [c, d]])
    }

    pub fn diag(a: C64, d: C64) -> Self {
        Mat2([[a, ZERO], [ZERO, d]])
    }

    pub fn upper(b: C64) -> Self {
        Mat2([[ONE, b], [ZERO, ONE]])
    }

    pub fn lower(c: C64) -> Self {
        Mat2([[ONE, ZERO], [c, ONE]])
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> C64 {
        self.0[i][j]
    }

    pub fn det(&self) -> C64 {
        self.0[0][0] * self.0[1][1] - self.0[0][1] * self.0[1][0]
    }

    pub fn inv(&self) -> Mat2 {
        let d = self.det();
        let m = &self.0;
        Mat2([[m[1][1] / d, -m[0][1] / d], [-m[1][0] / d, m[0][0] / d]])
    }

    pub fn scale(&self, s: C64) -> Mat2 {
        let m = &self.0;
        Mat2([[m[0][0] * s, m[0][1] * s], [m[1][0] * s, m[1][1] * s]])
    }

    /// Max-entry norm.
    pub fn norm_max(&self) -> f64 {
        self.0.iter().flatten().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn dist(&self, other: &Mat2) -> f64 {
        (*self - *other).norm_max()
    }

    pub fn off_diag_norm(&self) -> f64 {
        self.0[0][1].norm().max(self.0[1][0].norm())
    }

    /// σ3 M σ3.
    pub fn sigma3_conj(&self) -> Mat2 {
        let m = &self.0;
        Mat2([[m[0][0], -m[0][1]], [-m[1][0], m[1][1]]])
    }

    pub fn col(&self, j: usize) -> [C64; 2] {
        [self.0[0][j], self.0[1][j]]
    }
}

impl Mul for Mat2 {
    type Output = Mat2;
    fn mul(self, r: Mat2) -> Mat2 {
        let a = &self.0;
        let b = &r.0;
        let mut out = [[ZERO; 2]; 2];
        for i in 0..2 {
            for j in 0..2 {
                out[i][j] = a[i][0] * b[0][j] + a[i][1] * b[1][j];
            }
        }
        Mat2(out)
    }
}

impl Add for Mat2 {
    type Output = Mat2;
    fn add(self, r: Mat2) -> Mat2 {
        let mut out = self.0;
        for i in 0..2 {
            for j in 0..2 {
                out[i][j] += r.0[i][j];
            }
        }
        Mat2(out)
    }
}

impl Sub for Mat2 {
    type Output = Mat2;
    fn sub(self, r: Mat2) -> Mat2 {
        self + (-r)
    }
}

impl Neg for Mat2 {
    type Output = Mat2;
    fn neg(self) -> Mat2 {
        self.scale(-ONE)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn inverse_roundtrip() {
        let m = Mat2::new(C64::new(1.0, 2.0), C64::new(0.5, -1.0), C64::new(3.0, 0.0), C64::new(-2.0, 1.0));
        assert!((m * m.inv()).dist(&Mat2::IDENTITY) < 1e-14);
    }

    #[test]
    fn triangular_det_one() {
        let u = Mat2::upper(C64::new(2.0, 3.0));
        let l = Mat2::lower(C64::new(-1.0, 0.5));
        assert!(((u * l).det() - ONE).norm() < 1e-14);
    }
}
