//! Closed-form solutions and Dirichlet-to-Neumann reference values.

use crate::error::{Error, Result};
use crate::mat2::I;
use crate::rhsolve::{Plane, PoleColumn, PoleCondition, RHProblem};
use crate::surface::BackgroundParams;
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};
use std::io::Write;

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct BreatherParams {
    pub eta: f64,
    pub x0: f64,
    pub epsilon: f64,
}

impl BreatherParams {
    pub fn new(eta: f64, x0: f64, epsilon: f64) -> Result<Self> {
        if !(eta > 0.0) || !x0.is_finite() || !epsilon.is_finite() {
            return Err(Error::InvalidParams(format!("breather needs eta > 0 (got {eta})")));
        }
        Ok(BreatherParams { eta, x0, epsilon })
    }

    /// Breather with the given boundary amplitude and frequency, x0 ≥ 0.
    pub fn from_boundary(a: f64, omega: f64, epsilon: f64) -> Result<Self> {
        if !(a > 0.0) || omega < 0.5 * a * a {
            return Err(Error::InvalidParams(format!("no breather with a = {a}, omega = {omega}")));
        }
        let eta = (omega / 2.0).sqrt();
        let x0 = (2.0 * eta / a).acosh() / (2.0 * eta);
        Self::new(eta, x0, epsilon)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BreatherBoundary {
    pub a: f64,
    pub omega: f64,
    pub b_hat: f64,
}

pub fn breather(x: f64, t: f64, p: &BreatherParams) -> C64 {
    let e = p.eta;
    let phase = C64::from_polar(1.0, p.epsilon + 4.0 * e * e * t);
    phase * (2.0 * e / (2.0 * e * (x - p.x0)).cosh())
}

/// ∂ₓ of the breather.
pub fn breather_x(x: f64, t: f64, p: &BreatherParams) -> C64 {
    let e = p.eta;
    let z = 2.0 * e * (x - p.x0);
    breather(x, t, p) * (-2.0 * e * z.tanh())
}

/// The breather as a one-pole k-plane problem with poles at ±iη and phase
/// θ = kx + 2k²t; regularize before solving.
pub fn breather_rhp(p: &BreatherParams, x: f64, t: f64) -> RHProblem {
    let eta = p.eta;
    let k1 = C64::new(0.0, eta);
    let c = -I * (2.0 * eta) * (2.0 * eta * p.x0).exp() * C64::from_polar(1.0, -p.epsilon);
    let th = |k: C64| k * x + k * k * (2.0 * t);
    RHProblem::new(Plane::K)
        .with_pole(PoleCondition { point: k1, column: PoleColumn::First, coeff: c * (I * 2.0 * th(k1)).exp() })
        .with_pole(PoleCondition { point: k1.conj(), column: PoleColumn::Second, coeff: -c.conj() * (-I * 2.0 * th(k1.conj())).exp() })
}

pub fn breather_boundary(p: &BreatherParams) -> BreatherBoundary {
    let e = p.eta;
    let a = 2.0 * e / (2.0 * e * p.x0).cosh();
    let omega = 2.0 * e * e;
    let b_hat = e * (2.0 * e * p.x0).tanh();
    debug_assert!((b_hat * b_hat - (omega / 2.0 - a * a / 4.0)).abs() < 1e-10);
    BreatherBoundary { a, omega, b_hat }
}

pub fn planewave(x: f64, t: f64, bg: &BackgroundParams) -> C64 {
    C64::from_polar(bg.a, 2.0 * bg.b * x + 2.0 * bg.omega * t + bg.epsilon)
}

pub fn planewave_x(x: f64, t: f64, bg: &BackgroundParams) -> C64 {
    planewave(x, t, bg) * (2.0 * bg.b) * I
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct DtnBranches {
    /// Coefficient of e^{2iωt+iε} in q_x(0,t) for the plane-wave branch.
    pub neumann_rh: C64,
    /// Same coefficient for the breather branch.
    pub neumann_breather: C64,
    pub rh_valid: bool,
    pub breather_valid: bool,
}

pub fn dtn_branches(a: f64, omega: f64) -> DtnBranches {
    let rh_valid = a > 0.0 && omega > -3.0 * a * a && omega < a * a;
    let breather_valid = a > 0.0 && omega >= 0.5 * a * a;
    let b = ((a * a - omega) / 2.0).max(0.0).sqrt();
    let b_hat = (omega / 2.0 - a * a / 4.0).max(0.0).sqrt();
    DtnBranches {
        neumann_rh: I * (2.0 * a * b),
        neumann_breather: C64::new(2.0 * a * b_hat, 0.0),
        rh_valid,
        breather_valid,
    }
}

/// Samples of q on a rectangular (x, t) grid, row-major in x.
#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct FieldSample {
    pub xs: Vec<f64>,
    pub ts: Vec<f64>,
    pub q: Vec<C64>,
    pub q0t: Option<Vec<C64>>,
    pub qx0t: Option<Vec<C64>>,
    pub u: Option<Vec<C64>>,
    pub v: Option<Vec<C64>>,
}

impl FieldSample {
    pub fn from_fn<F: Fn(f64, f64) -> C64>(xs: Vec<f64>, ts: Vec<f64>, f: F) -> Self {
        let mut q = Vec::with_capacity(xs.len() * ts.len());
        for &x in &xs {
            for &t in &ts {
                q.push(f(x, t));
            }
        }
        FieldSample { xs, ts, q, ..Default::default() }
    }

    pub fn at(&self, ix: usize, it: usize) -> C64 {
        self.q[ix * self.ts.len() + it]
    }

    pub fn validate(&self) -> Result<()> {
        let mono = |v: &[f64]| v.windows(2).all(|w| w[1] > w[0]);
        if !mono(&self.xs) || !mono(&self.ts) {
            return Err(Error::InvalidParams("grid must be strictly increasing".into()));
        }
        if self.q.len() != self.xs.len() * self.ts.len() || self.q.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::InvalidParams("field values missing or non-finite".into()));
        }
        Ok(())
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "x,t,re_q,im_q,abs_q")?;
        for (ix, x) in self.xs.iter().enumerate() {
            for (it, t) in self.ts.iter().enumerate() {
                let z = self.at(ix, it);
                writeln!(w, "{:.12e},{:.12e},{:.15e},{:.15e},{:.15e}", x, t, z.re, z.im, z.norm())?;
            }
        }
        Ok(())
    }
}

fn uniform_step(v: &[f64]) -> Option<f64> {
    let h = v[1] - v[0];
    v.windows(2).all(|w| ((w[1] - w[0]) - h).abs() <= 1e-9 * h.abs()).then_some(h)
}

/// Sup-norm of i q_t + q_xx + 2|q|²q over interior points, fourth-order differences.
pub fn nls_residual(field: &FieldSample) -> Result<f64> {
    field.validate()?;
    let (nx, nt) = (field.xs.len(), field.ts.len());
    if nx < 5 || nt < 5 {
        return Err(Error::GridTooCoarse(format!("need ≥ 5 points per axis for fourth-order stencils, got {nx}×{nt}")));
    }
    let hx = uniform_step(&field.xs).ok_or_else(|| Error::GridTooCoarse("x grid not uniform".into()))?;
    let ht = uniform_step(&field.ts).ok_or_else(|| Error::GridTooCoarse("t grid not uniform".into()))?;
    let mut sup = 0.0f64;
    for ix in 2..nx - 2 {
        for it in 2..nt - 2 {
            let q = |dx: isize, dt: isize| field.at((ix as isize + dx) as usize, (it as isize + dt) as usize);
            let qt = (-q(0, 2) + q(0, 1) * 8.0 - q(0, -1) * 8.0 + q(0, -2)) / (12.0 * ht);
            let qxx = (-q(2, 0) + q(1, 0) * 16.0 - q(0, 0) * 30.0 + q(-1, 0) * 16.0 - q(-2, 0)) / (12.0 * hx * hx);
            let z = q(0, 0);
            let r = I * qt + qxx + z * (2.0 * z.norm_sqr());
            sup = sup.max(r.norm());
        }
    }
    Ok(sup)
}
