//! Gauss–Legendre rules and barycentric interpolation on their nodes.

use num_complex::Complex64 as C64;
use std::f64::consts::PI;

#[derive(Clone, Debug)]
pub struct GaussLegendre {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
    /// Barycentric interpolation weights for `nodes`.
    pub bary: Vec<f64>,
}

impl GaussLegendre {
    pub fn new(n: usize) -> Self {
        assert!(n >= 1);
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        for i in 0..n {
            // Tricomi initial guess, then Newton on P_n.
            let mut x = -(PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            for _ in 0..100 {
                let (p, dp) = legendre(n, x);
                let dx = p / dp;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let (_, dp) = legendre(n, x);
            nodes[i] = x;
            weights[i] = 2.0 / ((1.0 - x * x) * dp * dp);
        }
        let bary = (0..n)
            .map(|j| {
                let s = if j % 2 == 0 { 1.0 } else { -1.0 };
                s * ((1.0 - nodes[j] * nodes[j]) * weights[j]).sqrt()
            })
            .collect();
        GaussLegendre { nodes, weights, bary }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Lagrange basis values ℓ_j(x) for x in [-1, 1].
    pub fn lagrange_row(&self, x: f64) -> Vec<f64> {
        let n = self.len();
        let mut row = vec![0.0; n];
        for j in 0..n {
            if (x - self.nodes[j]).abs() < 1e-15 {
                row[j] = 1.0;
                return row;
            }
        }
        let mut den = 0.0;
        for j in 0..n {
            row[j] = self.bary[j] / (x - self.nodes[j]);
            den += row[j];
        }
        row.iter_mut().for_each(|r| *r /= den);
        row
    }

    pub fn interpolate(&self, values: &[C64], x: f64) -> C64 {
        self.lagrange_row(x).iter().zip(values).map(|(l, v)| v * *l).sum()
    }

    /// ∫_a^b f over a real interval.
    pub fn integrate<F: Fn(f64) -> C64>(&self, a: f64, b: f64, f: F) -> C64 {
        let h = 0.5 * (b - a);
        let c = 0.5 * (b + a);
        self.nodes.iter().zip(&self.weights).map(|(x, w)| f(c + h * x) * (w * h)).sum()
    }
}

fn legendre(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
        p0 = p1;
        p1 = p2;
    }
    let dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, dp)
}

/// Integral of an analytic function around a circle by the trapezoid rule.
pub fn circle_integral<F: Fn(C64) -> C64>(center: C64, radius: f64, n: usize, f: F) -> C64 {
    let mut acc = C64::new(0.0, 0.0);
    for j in 0..n {
        let th = 2.0 * PI * j as f64 / n as f64;
        let e = C64::from_polar(1.0, th);
        acc += f(center + e * radius) * e * C64::new(0.0, radius);
    }
    acc * (2.0 * PI / n as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn integrates_polynomials_exactly() {
        let g = GaussLegendre::new(16);
        let v = g.integrate(0.0, 2.0, |x| C64::new(x.powi(31), 0.0));
        assert!((v.re - 2f64.powi(32) / 32.0).abs() / v.re < 1e-13);
        assert!((g.weights.iter().sum::<f64>() - 2.0).abs() < 1e-14);
    }

    #[test]
    fn interpolation_is_exact_for_low_degree() {
        let g = GaussLegendre::new(12);
        let vals: Vec<C64> = g.nodes.iter().map(|x| C64::new(x.powi(5) - x, 1.0)).collect();
        let x = 0.3217;
        let z = g.interpolate(&vals, x);
        assert!((z - C64::new(x.powi(5) - x, 1.0)).norm() < 1e-13);
    }

    #[test]
    fn circle_residue() {
        let v = circle_integral(C64::new(1.0, 1.0), 0.5, 64, |z| 1.0 / (z - C64::new(1.0, 1.2)));
        assert!((v - C64::new(0.0, 2.0 * PI)).norm() < 1e-12);
    }
}
