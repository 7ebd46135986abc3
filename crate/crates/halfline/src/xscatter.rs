//! Forward scattering for the x-part of the Lax pair,
//! μ_x + ik[σ3, μ] = Qμ with μ → I as x → +∞, on the half-line x ≥ 0.
//!
//! With s(k) = μ(0, k) = [[ā, b], [−b̄, a]], both a = μ₂₂ and b = μ₁₂ come from
//! the second column, which extends analytically to Im k > 0.

use crate::error::{Error, Result};
use crate::linalg;
use crate::mat2::{Mat2, I, ONE, ZERO};
use crate::ode::{self, OdeOptions};
use crate::quad::{circle_integral, GaussLegendre};
use num_complex::Complex64 as C64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::io::Write;
use std::sync::Arc;

type Sampler = Arc<dyn Fn(f64) -> C64 + Send + Sync>;

#[derive(Clone)]
pub struct InitialDatum {
    pub name: String,
    sampler: Sampler,
    pub decay_scale: f64,
    /// |q₀| < 1e−14 beyond this point.
    pub truncation: f64,
}

impl std::fmt::Debug for InitialDatum {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "InitialDatum({}, L = {})", self.name, self.truncation)
    }
}

impl InitialDatum {
    pub fn new<F>(name: impl Into<String>, decay_scale: f64, truncation: f64, f: F) -> Result<Self>
    where
        F: Fn(f64) -> C64 + Send + Sync + 'static,
    {
        let d = InitialDatum { name: name.into(), sampler: Arc::new(f), decay_scale, truncation };
        d.validate()?;
        Ok(d)
    }

    pub fn zero() -> Self {
        InitialDatum { name: "zero".into(), sampler: Arc::new(|_| ZERO), decay_scale: 1.0, truncation: 0.0 }
    }

    /// 2η sech(2η(x − x₀)) e^{iε}.
    pub fn sech(eta: f64, x0: f64, epsilon: f64) -> Result<Self> {
        if !(eta > 0.0) {
            return Err(Error::InvalidParams("sech datum needs eta > 0".into()));
        }
        let l = x0.max(0.0) + (4.0 * eta * 1e14).ln() / (2.0 * eta);
        let ph = C64::from_polar(1.0, epsilon);
        Self::new(format!("sech(eta={eta}, x0={x0})"), 1.0 / (2.0 * eta), l, move |x| ph * (2.0 * eta / (2.0 * eta * (x - x0)).cosh()))
    }

    /// amp·e^{−(x/width)²}·e^{iφ}.
    pub fn gaussian(amp: C64, width: f64) -> Result<Self> {
        if !(width > 0.0) {
            return Err(Error::InvalidParams("gaussian datum needs width > 0".into()));
        }
        let l = width * (amp.norm().max(1e-300) / 1e-15).ln().max(1.0).sqrt();
        Self::new(format!("gaussian(amp={amp}, width={width})"), width, l, move |x| amp * (-(x / width).powi(2)).exp())
    }

    /// Cubic Hermite interpolation of samples on an increasing grid; zero beyond the last sample.
    pub fn from_samples(xs: Vec<f64>, qs: Vec<C64>) -> Result<Self> {
        if xs.len() < 4 || xs.len() != qs.len() || xs[0] != 0.0 || xs.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidParams("samples must start at x = 0, increase, and have ≥ 4 points".into()));
        }
        let n = xs.len();
        let l = xs[n - 1];
        let slopes: Vec<C64> = (0..n)
            .map(|i| {
                let (a, b) = (i.saturating_sub(1), (i + 1).min(n - 1));
                (qs[b] - qs[a]) / (xs[b] - xs[a])
            })
            .collect();
        let f = move |x: f64| {
            if x < 0.0 || x >= l {
                return ZERO;
            }
            let i = xs.partition_point(|&v| v <= x).saturating_sub(1).min(n - 2);
            let h = xs[i + 1] - xs[i];
            let s = (x - xs[i]) / h;
            let (h00, h10, h01, h11) = (2.0 * s.powi(3) - 3.0 * s * s + 1.0, s.powi(3) - 2.0 * s * s + s, -2.0 * s.powi(3) + 3.0 * s * s, s.powi(3) - s * s);
            qs[i] * h00 + slopes[i] * (h10 * h) + qs[i + 1] * h01 + slopes[i + 1] * (h11 * h)
        };
        Self::new("samples", l / 10.0, l, f)
    }

    pub fn eval(&self, x: f64) -> C64 {
        if x > self.truncation {
            ZERO
        } else {
            (self.sampler)(x)
        }
    }

    /// Checks the tail bound beyond the truncation point and a (1+x)⁻⁸ decay surrogate.
    pub fn validate(&self) -> Result<()> {
        let l = self.truncation;
        if !(l >= 0.0) || !l.is_finite() {
            return Err(Error::InvalidParams("truncation must be finite and ≥ 0".into()));
        }
        let n = 400;
        let mut peak = 0.0f64;
        for i in 0..=n {
            let x = l * i as f64 / n as f64;
            let v = (self.sampler)(x);
            if !v.re.is_finite() || !v.im.is_finite() {
                return Err(Error::InvalidParams(format!("datum not finite at x = {x}")));
            }
            peak = peak.max(v.norm() * (1.0 + x).powi(8));
        }
        for i in 0..=n {
            let x = l * (1.0 + i as f64 / n as f64);
            let v = (self.sampler)(x).norm();
            if v > 1e-14 {
                return Err(Error::InvalidParams(format!("|q0({x})| = {v:e} exceeds 1e-14 beyond truncation {l}")));
            }
        }
        let tail = (self.sampler)(l).norm() * (1.0 + l).powi(8);
        if peak > 0.0 && tail > peak {
            return Err(Error::InvalidParams("datum fails the (1+x)^-8 decay surrogate".into()));
        }
        Ok(())
    }

    /// ∫₀^L |q₀| dx.
    pub fn l1_norm(&self) -> f64 {
        if self.truncation == 0.0 {
            return 0.0;
        }
        let gl = GaussLegendre::new(20);
        let m = 200;
        let h = self.truncation / m as f64;
        (0..m).map(|i| gl.integrate(i as f64 * h, (i + 1) as f64 * h, |x| C64::new(self.eval(x).norm(), 0.0)).re).sum()
    }

    pub fn sup_norm(&self) -> f64 {
        (0..=2000).map(|i| self.eval(self.truncation * i as f64 / 2000.0).norm()).fold(0.0, f64::max)
    }
}

fn jost_options() -> OdeOptions {
    OdeOptions { rtol: 1e-12, atol: 1e-15, h_init: 1e-2, h_min: 1e-13, max_steps: 5_000_000 }
}

/// μ(0, k) by integrating the interaction-picture system φ = e^{ikxσ3} μ e^{−ikxσ3},
/// φ' = [[0, q e^{2ikx}], [−q̄ e^{−2ikx}, 0]] φ, from x = L down to 0 with φ(L) = I.
/// The second column is meaningful for Im k ≥ 0, the first for Im k ≤ 0.
pub fn jost_mu(q0: &InitialDatum, k: C64) -> Result<Mat2> {
    let l = q0.truncation;
    if l == 0.0 {
        return Ok(Mat2::IDENTITY);
    }
    let f = |x: f64, y: &[C64; 4]| {
        let q = q0.eval(x);
        let e = (I * 2.0 * k * x).exp();
        let up = q * e;
        let lo = -q.conj() / e;
        [up * y[2], up * y[3], lo * y[0], lo * y[1]]
    };
    let y = ode::integrate(f, l, 0.0, [ONE, ZERO, ZERO, ONE], &jost_options())?;
    Ok(Mat2::new(y[0], y[1], y[2], y[3]))
}

/// (a(k), b(k)) from the second column only, for Im k ≥ 0.
///
/// Uses the interaction picture unless e^{2 Im k · L} would overflow it, in which
/// case μ₁₂' = −2ikμ₁₂ + qμ₂₂, μ₂₂' = −q̄μ₁₂ is integrated directly (stable
/// backwards for Im k > 0).
pub fn jost_column2(q0: &InitialDatum, k: C64) -> Result<(C64, C64)> {
    let l = q0.truncation;
    if l == 0.0 {
        return Ok((ONE, ZERO));
    }
    if 2.0 * k.im * l < 40.0 {
        let f = |x: f64, y: &[C64; 2]| {
            let q = q0.eval(x);
            let e = (I * 2.0 * k * x).exp();
            [q * e * y[1], -q.conj() / e * y[0]]
        };
        let y = ode::integrate(f, l, 0.0, [ZERO, ONE], &jost_options())?;
        return Ok((y[1], y[0]));
    }
    let f = |x: f64, y: &[C64; 2]| {
        let q = q0.eval(x);
        [-2.0 * I * k * y[0] + q * y[1], -q.conj() * y[0]]
    };
    let y = ode::integrate(f, l, 0.0, [ZERO, ONE], &jost_options())?;
    Ok((y[1], y[0]))
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SpectrumEntry {
    pub k: C64,
    pub m1: C64,
}

/// Large-|k| expansion Σₙ cₙ (k + iγ)⁻ⁿ, analytic for Im k > −γ.
#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct TailExpansion {
    pub gamma: f64,
    pub coeffs: Vec<C64>,
}

impl TailExpansion {
    pub fn eval(&self, k: C64) -> C64 {
        if self.coeffs.is_empty() {
            return ZERO;
        }
        let w = 1.0 / (k + I * self.gamma);
        // Horner in w.
        let mut acc = ZERO;
        for c in self.coeffs.iter().rev() {
            acc = (acc + c) * w;
        }
        acc
    }

    /// conj(f(k̄)), analytic for Im k < γ.
    pub fn eval_reflected(&self, k: C64) -> C64 {
        self.eval(k.conj()).conj()
    }

    /// Least-squares fit of `terms` coefficients to samples at real points with |k| ≥ k_min.
    fn fit(ks: &[f64], vals: &[C64], gamma: f64, terms: usize, k_min: f64) -> Self {
        let rows = ks.len();
        let mut a = Vec::with_capacity(rows * terms);
        for &k in ks {
            let w = k_min / C64::new(k, gamma);
            let mut p = ONE;
            for _ in 0..terms {
                p *= w;
                a.push(p);
            }
        }
        let c = linalg::lstsq(rows, terms, &a, vals);
        let coeffs = c.iter().enumerate().map(|(n, v)| v * k_min.powi(n as i32 + 1)).collect();
        TailExpansion { gamma, coeffs }
    }
}

/// Piecewise Gauss–Legendre interpolation of (a, b) on the real segment [−K, K].
#[derive(Clone, Debug)]
struct RealCache {
    gl: GaussLegendre,
    edges: Vec<f64>,
    a: Vec<Vec<C64>>,
    b: Vec<Vec<C64>>,
}

impl RealCache {
    fn locate(&self, k: f64) -> Option<(usize, f64)> {
        let n = self.edges.len();
        if k < self.edges[0] || k > self.edges[n - 1] {
            return None;
        }
        let i = self.edges.partition_point(|&e| e <= k).saturating_sub(1).min(n - 2);
        let (lo, hi) = (self.edges[i], self.edges[i + 1]);
        Some((i, (2.0 * k - lo - hi) / (hi - lo)))
    }
}

/// Tail samples are taken on ±[TAIL_K1, TAIL_K2].
const TAIL_K1: f64 = 10.0;
const TAIL_K2: f64 = 400.0;
const TAIL_TERMS: usize = 12;
const TAIL_GAMMA: f64 = 2.0;
/// Remainder level below which the tail expansion replaces direct evaluation;
/// scaled by max(1, |k|/10) to sit above the integrator's oscillation noise.
const TAIL_TOL: f64 = 1e-13;

#[derive(Clone, Debug)]
pub struct ScatteringData {
    pub datum: InitialDatum,
    /// Beyond ±k_cut on the real line, a, b and r are given by their tail expansions.
    pub k_cut: f64,
    pub grid: Vec<f64>,
    pub a_grid: Vec<C64>,
    pub b_grid: Vec<C64>,
    pub zeros: Vec<C64>,
    pub norming: Vec<C64>,
    /// a − 1 ≈ a_tail, b ≈ b_tail in the closed upper half-plane for |k| > k_cut.
    pub a_tail: TailExpansion,
    pub b_tail: TailExpansion,
    /// r = b̄/a ≈ r_tail on the real line for |k| > k_cut; r_tail is analytic in Im k > −γ.
    pub r_tail: TailExpansion,
    cache: Option<Arc<RealCache>>,
}

impl ScatteringData {
    /// Data of the zero potential.
    pub fn trivial() -> Self {
        ScatteringData {
            datum: InitialDatum::zero(),
            k_cut: 0.0,
            grid: Vec::new(),
            a_grid: Vec::new(),
            b_grid: Vec::new(),
            zeros: Vec::new(),
            norming: Vec::new(),
            a_tail: TailExpansion::default(),
            b_tail: TailExpansion::default(),
            r_tail: TailExpansion::default(),
            cache: None,
        }
    }

    pub fn is_trivial(&self) -> bool {
        self.datum.truncation == 0.0 && self.zeros.is_empty()
    }

    fn far(&self, k: C64) -> bool {
        k.norm() > self.k_cut + 1.0
    }

    /// a(k) for Im k ≥ 0.
    pub fn a(&self, k: C64) -> C64 {
        self.ab(k).0
    }

    /// b(k) for Im k ≥ 0.
    pub fn b(&self, k: C64) -> C64 {
        self.ab(k).1
    }

    /// (a, b) at one point of the closed upper half-plane.
    pub fn ab(&self, k: C64) -> (C64, C64) {
        if self.datum.truncation == 0.0 {
            return (self.blaschke(k), ZERO);
        }
        if k.im.abs() < 1e-14 {
            if let Some(v) = self.cached(k.re) {
                return v;
            }
        }
        if self.far(k) || (k.im.abs() < 1e-14 && k.re.abs() >= self.k_cut) {
            return (ONE + self.a_tail.eval(k), self.b_tail.eval(k));
        }
        jost_column2(&self.datum, k).unwrap_or((C64::new(f64::NAN, 0.0), C64::new(f64::NAN, 0.0)))
    }

    /// Reflection coefficient r = b̄/a on the real line.
    pub fn r(&self, k: f64) -> C64 {
        if self.datum.truncation == 0.0 {
            return ZERO;
        }
        if k.abs() >= self.k_cut {
            return self.r_tail.eval(C64::new(k, 0.0));
        }
        let (a, b) = self.ab(C64::new(k, 0.0));
        b.conj() / a
    }

    /// r − r_tail on the real line; vanishes (to the tail tolerance) beyond ±k_cut.
    pub fn r_remainder(&self, k: f64) -> C64 {
        if k.abs() >= self.k_cut {
            return ZERO;
        }
        self.r(k) - self.r_tail.eval(C64::new(k, 0.0))
    }

    fn cached(&self, k: f64) -> Option<(C64, C64)> {
        let c = self.cache.as_ref()?;
        let (i, tau) = c.locate(k)?;
        Some((c.gl.interpolate(&c.a[i], tau), c.gl.interpolate(&c.b[i], tau)))
    }

    fn blaschke(&self, k: C64) -> C64 {
        self.zeros.iter().map(|z| (k - z) / (k - z.conj())).product()
    }

    pub fn unitarity_residual(&self) -> f64 {
        let mut sup = self.a_grid.iter().zip(&self.b_grid).map(|(a, b)| (a.norm_sqr() + b.norm_sqr() - 1.0).abs()).fold(0.0, f64::max);
        if let Some(c) = &self.cache {
            for (av, bv) in c.a.iter().zip(&c.b) {
                for (a, b) in av.iter().zip(bv) {
                    sup = sup.max((a.norm_sqr() + b.norm_sqr() - 1.0).abs());
                }
            }
        }
        sup
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "k,re_a,im_a,re_b,im_b")?;
        for ((k, a), b) in self.grid.iter().zip(&self.a_grid).zip(&self.b_grid) {
            writeln!(w, "{:.12e},{:.15e},{:.15e},{:.15e},{:.15e}", k, a.re, a.im, b.re, b.im)?;
        }
        Ok(())
    }

    pub fn spectrum_json(&self) -> serde_json::Value {
        let list: Vec<_> = self.zeros.iter().zip(&self.norming).map(|(k, m)| SpectrumEntry { k: *k, m1: *m }).collect();
        serde_json::to_value(list).expect("plain data")
    }

    /// Attaches externally supplied discrete data.
    pub fn with_spectrum(mut self, zeros: Vec<C64>, norming: Vec<C64>) -> Self {
        self.zeros = zeros;
        self.norming = norming;
        self
    }
}

/// Computes a, b on `grid`, fits the large-|k| expansions, builds the
/// real-line interpolant used by the evaluators, checks unitarity, and locates
/// the discrete spectrum unless the L¹ norm rules it out (‖q₀‖₁ < π/2 admits
/// no eigenvalues).
pub fn scattering_pair(q0: &InitialDatum, grid: &[f64]) -> Result<ScatteringData> {
    q0.validate()?;
    if q0.truncation == 0.0 {
        let mut sd = ScatteringData::trivial();
        sd.grid = grid.to_vec();
        sd.a_grid = vec![ONE; grid.len()];
        sd.b_grid = vec![ZERO; grid.len()];
        return Ok(sd);
    }
    let vals: Vec<(C64, C64)> = grid.par_iter().map(|&k| jost_column2(q0, C64::new(k, 0.0))).collect::<Result<_>>()?;

    let m = 40;
    let mut tk: Vec<f64> = (0..m).map(|j| TAIL_K1 * (TAIL_K2 / TAIL_K1).powf(j as f64 / (m - 1) as f64)).collect();
    tk.extend(tk.clone().iter().map(|k| -k));
    let tv: Vec<(C64, C64)> = tk.par_iter().map(|&k| jost_column2(q0, C64::new(k, 0.0))).collect::<Result<_>>()?;
    let a_minus: Vec<C64> = tv.iter().map(|v| v.0 - 1.0).collect();
    let bs: Vec<C64> = tv.iter().map(|v| v.1).collect();
    let rs: Vec<C64> = tv.iter().map(|v| v.1.conj() / v.0).collect();
    let a_tail = TailExpansion::fit(&tk, &a_minus, TAIL_GAMMA, TAIL_TERMS, TAIL_K1);
    let b_tail = TailExpansion::fit(&tk, &bs, TAIL_GAMMA, TAIL_TERMS, TAIL_K1);
    let r_tail = TailExpansion::fit(&tk, &rs, TAIL_GAMMA, TAIL_TERMS, TAIL_K1);
    // k_cut: beyond it every tail sample is within TAIL_TOL of its expansion.
    let mut k_cut = TAIL_K1;
    for (i, &k) in tk.iter().enumerate() {
        let kc = C64::new(k, 0.0);
        let dev = (a_tail.eval(kc) - a_minus[i]).norm().max((b_tail.eval(kc) - bs[i]).norm()).max((r_tail.eval(kc) - rs[i]).norm());
        if dev > TAIL_TOL * (k.abs() / 10.0).max(1.0) {
            k_cut = k_cut.max(k.abs() * 1.1);
        }
    }
    if k_cut > TAIL_K2 {
        return Err(Error::Accuracy { what: "large-|k| expansion of a, b".into(), residual: k_cut, tol: TAIL_K2 });
    }

    let gl = GaussLegendre::new(20);
    let npan = ((2.0 * k_cut) / 0.5).ceil() as usize;
    let edges: Vec<f64> = (0..=npan).map(|i| -k_cut + 2.0 * k_cut * i as f64 / npan as f64).collect();
    let panels: Vec<(Vec<C64>, Vec<C64>)> = (0..npan)
        .into_par_iter()
        .map(|i| {
            let (lo, hi) = (edges[i], edges[i + 1]);
            let mut av = Vec::with_capacity(gl.len());
            let mut bv = Vec::with_capacity(gl.len());
            for x in &gl.nodes {
                let (a, b) = jost_column2(q0, C64::new(0.5 * (lo + hi) + 0.5 * (hi - lo) * x, 0.0))?;
                av.push(a);
                bv.push(b);
            }
            Ok((av, bv))
        })
        .collect::<Result<_>>()?;
    let (a, b): (Vec<_>, Vec<_>) = panels.into_iter().unzip();
    let mut sd = ScatteringData {
        datum: q0.clone(),
        k_cut,
        grid: grid.to_vec(),
        a_grid: vals.iter().map(|v| v.0).collect(),
        b_grid: vals.iter().map(|v| v.1).collect(),
        zeros: Vec::new(),
        norming: Vec::new(),
        a_tail,
        b_tail,
        r_tail,
        cache: Some(Arc::new(RealCache { gl, edges, a, b })),
    };
    let res = sd.unitarity_residual();
    if res > 1e-6 {
        return Err(Error::Accuracy { what: "unitarity |a|²+|b|²=1".into(), residual: res, tol: 1e-6 });
    }
    if q0.l1_norm() >= 0.5 * PI {
        let r = q0.sup_norm().max(q0.l1_norm()) + 1.0;
        let spec = discrete_spectrum(&sd, &SearchBox { re: (-r, 1.0137 * r), im: (1e-3, r) })?;
        sd.zeros = spec.iter().map(|e| e.k).collect();
        sd.norming = spec.iter().map(|e| e.m1).collect();
    }
    Ok(sd)
}


#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct SearchBox {
    pub re: (f64, f64),
    pub im: (f64, f64),
}

impl SearchBox {
    pub fn new(re: (f64, f64), im: (f64, f64)) -> Self {
        SearchBox { re, im }
    }

    fn corners(&self) -> [C64; 4] {
        [C64::new(self.re.0, self.im.0), C64::new(self.re.1, self.im.0), C64::new(self.re.1, self.im.1), C64::new(self.re.0, self.im.1)]
    }

    fn contains(&self, z: C64) -> bool {
        let tol = 1e-9 * self.size();
        z.re >= self.re.0 - tol && z.re <= self.re.1 + tol && z.im >= self.im.0 - tol && z.im <= self.im.1 + tol
    }

    fn quarters(&self, frac: f64) -> [SearchBox; 4] {
        let mr = self.re.0 + frac * (self.re.1 - self.re.0);
        let mi = self.im.0 + frac * (self.im.1 - self.im.0);
        [
            SearchBox { re: (self.re.0, mr), im: (self.im.0, mi) },
            SearchBox { re: (mr, self.re.1), im: (self.im.0, mi) },
            SearchBox { re: (mr, self.re.1), im: (mi, self.im.1) },
            SearchBox { re: (self.re.0, mr), im: (mi, self.im.1) },
        ]
    }

    fn size(&self) -> f64 {
        (self.re.1 - self.re.0).max(self.im.1 - self.im.0)
    }
}

/// Winding number of f around the boundary of `bx`, with adaptive steps so that
/// consecutive samples differ in argument by less than 0.4 rad.
pub fn winding<F: Fn(C64) -> C64>(f: &F, bx: &SearchBox) -> Result<i64> {
    let c = bx.corners();
    let mut total = 0.0;
    for e in 0..4 {
        let (za, zb) = (c[e], c[(e + 1) % 4]);
        let mut t: f64 = 0.0;
        let mut fa = f(za);
        let mut h: f64 = 0.05;
        let mut guard = 0;
        while t < 1.0 {
            let tn = (t + h).min(1.0);
            let fb = f(za + (zb - za) * tn);
            let d = (fb / fa).arg();
            if !d.is_finite() || fa.norm() < 1e-300 {
                return Err(Error::UnresolvedSpectrum { winding: -1, found: 0 });
            }
            if d.abs() > 0.4 && h > 1e-9 {
                h *= 0.5;
                continue;
            }
            total += d;
            t = tn;
            fa = fb;
            h = (h * 1.5).min(0.05);
            guard += 1;
            if guard > 100_000 {
                return Err(Error::UnresolvedSpectrum { winding: -1, found: 0 });
            }
        }
    }
    Ok((total / (2.0 * PI)).round() as i64)
}

/// f'(k) from a 16-point circle of radius h.
pub fn derivative<F: Fn(C64) -> C64>(f: &F, k: C64, h: f64) -> C64 {
    circle_integral(k, h, 16, |z| f(z) / ((z - k) * (z - k))) / C64::new(0.0, 2.0 * PI)
}

/// Zeros of a(k) in `bx` by argument-principle subdivision and Newton refinement,
/// with norming constants m = 1/(i b(k_j) a'(k_j)).
pub fn discrete_spectrum(sd: &ScatteringData, bx: &SearchBox) -> Result<Vec<SpectrumEntry>> {
    if sd.datum.truncation == 0.0 {
        return Ok(Vec::new());
    }
    let f = |k: C64| sd.ab(k).0;
    let found = find_zeros(&f, bx)?;
    let mut out = Vec::new();
    for k in found {
        let (_, bk) = sd.ab(k);
        if bk.norm() < 1e-12 {
            return Err(Error::ReflectionlessDegeneracy(k));
        }
        let da = derivative(&f, k, 1e-2 * k.im);
        out.push(SpectrumEntry { k, m1: 1.0 / (I * bk * da) });
    }
    Ok(out)
}

/// Simple zeros of an analytic function inside `bx`: argument-principle
/// subdivision down to boxes of winding one, then Newton.
pub fn find_zeros<F: Fn(C64) -> C64>(f: &F, bx: &SearchBox) -> Result<Vec<C64>> {
    let total = winding(f, bx)?;
    let mut found: Vec<C64> = Vec::new();
    let mut stack = vec![(*bx, total)];
    while let Some((b, w)) = stack.pop() {
        if w == 0 {
            continue;
        }
        if w == 1 {
            let mut k = C64::new(0.5 * (b.re.0 + b.re.1), 0.5 * (b.im.0 + b.im.1));
            let h = 1e-3 * b.size().min(k.im.abs()).max(1e-6);
            let mut converged = false;
            for _ in 0..40 {
                let step = f(k) / derivative(f, k, h);
                k -= step;
                if !b.contains(k) {
                    break;
                }
                if step.norm() < 1e-12 * (1.0 + k.norm()) {
                    converged = true;
                    break;
                }
            }
            if converged {
                if !found.iter().any(|z| (z - k).norm() < 1e-8) {
                    found.push(k);
                }
                continue;
            }
            // Newton left the box: shrink it first.
        }
        if b.size() < 1e-7 {
            return Err(Error::UnresolvedSpectrum { winding: total, found: found.len() });
        }
        // Split lines through a zero break the winding count; shift them and retry.
        let mut split = None;
        for frac in [0.5, 0.4631, 0.5377, 0.4219] {
            let qs = b.quarters(frac);
            if let Ok(ws) = qs.iter().map(|q| winding(f, q)).collect::<Result<Vec<_>>>() {
                if ws.iter().sum::<i64>() == w {
                    split = Some((qs, ws));
                    break;
                }
            }
        }
        let Some((qs, ws)) = split else {
            return Err(Error::UnresolvedSpectrum { winding: total, found: found.len() });
        };
        stack.extend(qs.into_iter().zip(ws));
    }
    if found.len() as i64 != total {
        return Err(Error::UnresolvedSpectrum { winding: total, found: found.len() });
    }
    Ok(found)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid(n: usize, lo: f64, hi: f64) -> Vec<f64> {
        (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect()
    }

    #[test]
    fn zero_datum() {
        let q = InitialDatum::zero();
        assert_eq!(jost_mu(&q, C64::new(0.3, 0.1)).unwrap(), Mat2::IDENTITY);
        let sd = scattering_pair(&q, &grid(5, -1.0, 1.0)).unwrap();
        assert!(sd.a_grid.iter().all(|a| *a == ONE));
        assert!(sd.b_grid.iter().all(|b| *b == ZERO));
        assert!(discrete_spectrum(&sd, &SearchBox { re: (-1.0, 1.0), im: (0.1, 1.0) }).unwrap().is_empty());
    }

    #[test]
    fn determinant_is_one() {
        let q = InitialDatum::sech(0.5, 3.0, 0.4).unwrap();
        for k in [C64::new(0.3, 0.0), C64::new(-2.0, 0.0), C64::new(1.0, 0.0)] {
            assert!((jost_mu(&q, k).unwrap().det() - 1.0).norm() < 1e-9);
        }
    }

    #[test]
    fn gaussian_unitarity_at_point() {
        let q = InitialDatum::gaussian(C64::new(1.0, 0.0), 1.0).unwrap();
        let m = jost_mu(&q, C64::new(0.3, 0.0)).unwrap();
        let (a, b) = (m.get(1, 1), m.get(0, 1));
        assert!((a.norm_sqr() + b.norm_sqr() - 1.0).abs() < 1e-8);
        // s = [[ā, b], [−b̄, a]] structure of the full matrix on the real line.
        assert!((m.get(0, 0) - a.conj()).norm() < 1e-9);
        assert!((m.get(1, 0) + b.conj()).norm() < 1e-9);
    }

    #[test]
    fn sech_oracle() {
        let q = InitialDatum::sech(0.5, 25.0, 0.3).unwrap();
        let sd = scattering_pair(&q, &grid(81, -10.0, 10.0)).unwrap();
        for (k, a) in sd.grid.iter().zip(&sd.a_grid) {
            let want = (C64::new(*k, -0.5)) / C64::new(*k, 0.5);
            assert!((a - want).norm() < 1e-6);
        }
        assert_eq!(sd.zeros.len(), 1);
        assert!((sd.zeros[0] - C64::new(0.0, 0.5)).norm() < 1e-8);
    }

    #[test]
    fn sech_norming_constant() {
        // Whole-line soliton: m = −2η e^{2ηx₀} e^{−iε}, up to O(e^{−2ηx₀}) truncation effects.
        let q = InitialDatum::sech(0.5, 15.0, 0.3).unwrap();
        let sd = scattering_pair(&q, &[0.0]).unwrap();
        assert_eq!(sd.zeros.len(), 1);
        let want = -C64::from_polar(1.0, -0.3) * (15.0f64).exp();
        assert!((sd.norming[0] / want - 1.0).norm() < 1e-5, "{}", sd.norming[0] / want);
    }

    #[test]
    fn small_gaussian_has_no_zeros() {
        let q = InitialDatum::gaussian(C64::new(0.1, 0.0), 1.0).unwrap();
        let sd = scattering_pair(&q, &grid(41, -8.0, 8.0)).unwrap();
        assert!(sd.unitarity_residual() < 1e-8);
        let spec = discrete_spectrum(&sd, &SearchBox { re: (-3.0, 3.0), im: (0.01, 3.0) }).unwrap();
        assert!(spec.is_empty());
    }

    #[test]
    fn tail_expansions_match_direct_evaluation() {
        let q = InitialDatum::gaussian(C64::new(0.4, 0.0), 1.0).unwrap();
        let sd = scattering_pair(&q, &[0.0]).unwrap();
        assert!(sd.k_cut < 100.0, "k_cut = {}", sd.k_cut);
        for k in [C64::new(sd.k_cut + 5.0, 0.0), C64::new(-700.0, 0.0), C64::new(sd.k_cut + 3.0, 4.0)] {
            let (a, b) = jost_column2(&q, k).unwrap();
            let (at, bt) = sd.ab(k);
            assert!((a - at).norm() < 1e-10 && (b - bt).norm() < 1e-10, "{k}: {a} {at} {b} {bt}");
        }
        let k = 1.3;
        let (a, b) = jost_column2(&q, C64::new(k, 0.0)).unwrap();
        assert!((sd.r(k) - b.conj() / a).norm() < 1e-11);
        // b ~ q₀(0)/(2ik): leading tail coefficient −i q₀(0)/2 up to the γ shift.
        assert!((sd.b_tail.coeffs[0] - C64::new(0.0, -0.2)).norm() < 1e-6, "{}", sd.b_tail.coeffs[0]);
        assert_eq!(sd.r_remainder(sd.k_cut + 1.0), ZERO);
    }

    #[test]
    fn rejects_slow_tail() {
        assert!(InitialDatum::new("slow", 1.0, 5.0, |x| C64::new(1.0 / (1.0 + x * x), 0.0)).is_err());
    }
}
