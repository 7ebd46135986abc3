//! Adaptive Dormand–Prince 5(4) integration for small complex systems.

use crate::error::{Error, Result};
use num_complex::Complex64 as C64;

#[derive(Clone, Copy, Debug)]
pub struct OdeOptions {
    pub rtol: f64,
    pub atol: f64,
    pub h_init: f64,
    pub h_min: f64,
    pub max_steps: usize,
}

impl Default for OdeOptions {
    fn default() -> Self {
        OdeOptions { rtol: 1e-11, atol: 1e-14, h_init: 1e-2, h_min: 1e-12, max_steps: 2_000_000 }
    }
}

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

fn axpy<const N: usize>(y: &[C64; N], terms: &[(f64, &[C64; N])], h: f64) -> [C64; N] {
    let mut out = *y;
    for (c, k) in terms {
        for i in 0..N {
            out[i] += k[i] * (c * h);
        }
    }
    out
}

/// Integrates y' = f(x, y) from `x0` to `x1` (either direction) and returns y(x1).
pub fn integrate<const N: usize, F>(f: F, x0: f64, x1: f64, y0: [C64; N], opts: &OdeOptions) -> Result<[C64; N]>
where
    F: Fn(f64, &[C64; N]) -> [C64; N],
{
    let dir = if x1 >= x0 { 1.0 } else { -1.0 };
    let span = (x1 - x0).abs();
    if span == 0.0 {
        return Ok(y0);
    }
    let mut x = x0;
    let mut y = y0;
    let mut h = opts.h_init.min(span);
    let mut k1 = f(x, &y);
    for _ in 0..opts.max_steps {
        let remaining = (x1 - x) * dir;
        if remaining <= 0.0 {
            return Ok(y);
        }
        if h > remaining {
            h = remaining;
        }
        let hs = h * dir;
        let k2 = f(x + C2 * hs, &axpy(&y, &[(A21, &k1)], hs));
        let k3 = f(x + C3 * hs, &axpy(&y, &[(A31, &k1), (A32, &k2)], hs));
        let k4 = f(x + C4 * hs, &axpy(&y, &[(A41, &k1), (A42, &k2), (A43, &k3)], hs));
        let k5 = f(x + C5 * hs, &axpy(&y, &[(A51, &k1), (A52, &k2), (A53, &k3), (A54, &k4)], hs));
        let k6 = f(x + hs, &axpy(&y, &[(A61, &k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)], hs));
        let y5 = axpy(&y, &[(B1, &k1), (B3, &k3), (B4, &k4), (B5, &k5), (B6, &k6)], hs);
        let k7 = f(x + hs, &y5);
        let mut err = 0.0f64;
        for i in 0..N {
            let e = (k1[i] * E1 + k3[i] * E3 + k4[i] * E4 + k5[i] * E5 + k6[i] * E6 + k7[i] * E7) * hs;
            let sc = opts.atol + opts.rtol * y[i].norm().max(y5[i].norm());
            err = err.max(e.norm() / sc);
        }
        if err <= 1.0 {
            x += hs;
            if (x1 - x) * dir < 1e-14 * span {
                x = x1;
            }
            y = y5;
            k1 = k7;
        }
        let fac = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
        h *= fac;
        if h < opts.h_min {
            return Err(Error::StepFailure { x });
        }
    }
    Err(Error::StepFailure { x })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn harmonic_oscillator_backward() {
        let f = |_x: f64, y: &[C64; 2]| [y[1], -y[0]];
        let y = integrate(f, 3.0, 0.0, [C64::new(3f64.sin(), 0.0), C64::new(3f64.cos(), 0.0)], &OdeOptions::default()).unwrap();
        assert!(y[0].norm() < 1e-9);
        assert!((y[1].re - 1.0).abs() < 1e-9);
    }

    #[test]
    fn complex_exponential() {
        let lam = C64::new(-0.3, 2.0);
        let y = integrate(|_x, y: &[C64; 1]| [lam * y[0]], 0.0, 5.0, [C64::new(1.0, 0.0)], &OdeOptions::default()).unwrap();
        assert!((y[0] - (lam * 5.0).exp()).norm() < 1e-9);
    }
}
