//! The genus-zero surface of X(k) = √((k+b)² + a²), its contour Σ = {Im Ω = 0},
//! and the plane-wave background matrices.
//!
//! The surface is uniformized by ζ with k + b = (a/2)(ζ − 1/ζ), X = (a/2)(ζ + 1/ζ):
//! ∞₁ ↔ ζ = ∞, ∞₂ ↔ ζ = 0, branch points −b ± ia ↔ ζ = ±i, and the sheet swap
//! is ζ ↦ −1/ζ. Sheet 1 (D1 ∪ D4) is the part of the ζ-plane to the right of
//! Γ ∪ Γ̄, where `sheet_indicator` is non-negative.

use crate::contour::Curve;
use crate::error::{Error, Result};
use crate::mat2::{Mat2, I, ONE};
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};
use std::f64::consts::FRAC_PI_2;
use std::io::Write;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BackgroundParams {
    pub a: f64,
    pub omega: f64,
    pub epsilon: f64,
    pub b: f64,
}

impl BackgroundParams {
    pub fn new(a: f64, omega: f64, epsilon: f64) -> Result<Self> {
        if !(a > 0.0) || !omega.is_finite() || !epsilon.is_finite() {
            return Err(Error::InvalidParams(format!("need a > 0 and finite omega, epsilon (a = {a})")));
        }
        if !(omega > -3.0 * a * a && omega < a * a) {
            return Err(Error::InvalidParams(format!("omega = {omega} outside (-3a², a²) for a = {a}")));
        }
        let b = ((a * a - omega) / 2.0).sqrt();
        Ok(BackgroundParams { a, omega, epsilon, b })
    }

    /// Geometry from (a, b) directly; allows the degenerate b = 0 used in tests.
    pub fn from_ab(a: f64, b: f64, epsilon: f64) -> Result<Self> {
        if !(a > 0.0) || !(b >= 0.0) || b * b >= 2.0 * a * a {
            return Err(Error::InvalidParams(format!("need a > 0, 0 ≤ b < a√2 (a = {a}, b = {b})")));
        }
        Ok(BackgroundParams { a, omega: a * a - 2.0 * b * b, epsilon, b })
    }

    pub fn branch_points(&self) -> (C64, C64) {
        (C64::new(-self.b, self.a), C64::new(-self.b, -self.a))
    }

    /// Default truncation radius in k.
    pub fn r_max(&self) -> f64 {
        40.0 * 1f64.max(self.a).max(self.b)
    }

    pub fn k_of(&self, z: C64) -> C64 {
        (z - 1.0 / z) * (0.5 * self.a) - self.b
    }

    pub fn dk_dzeta(&self, z: C64) -> C64 {
        (ONE + 1.0 / (z * z)) * (0.5 * self.a)
    }

    pub fn x_of(&self, z: C64) -> C64 {
        (z + 1.0 / z) * (0.5 * self.a)
    }

    pub fn omega_of(&self, z: C64) -> C64 {
        (self.k_of(z) - self.b) * self.x_of(z) * 2.0
    }

    pub fn domega_dzeta(&self, z: C64) -> C64 {
        let dx = (ONE - 1.0 / (z * z)) * (0.5 * self.a);
        (self.dk_dzeta(z) * self.x_of(z) + (self.k_of(z) - self.b) * dx) * 2.0
    }

    /// Positive on D1 ∪ D4 (sheet 1), negative on D2 ∪ D3, zero on Γ ∪ Γ̄.
    pub fn sheet_indicator(&self, z: C64) -> f64 {
        let r2 = z.norm_sqr();
        self.a * self.a * (r2 + 1.0 / r2) * z.re - 2.0 * self.a * self.b * (r2 - 1.0)
    }

    pub fn zeta_of(&self, p: SurfacePoint) -> C64 {
        let w = (p.k + self.b) / self.a;
        let s = (w * w + 1.0).sqrt();
        let (z1, z2) = (w + s, w - s);
        let (g1, g2) = (self.sheet_indicator(z1), self.sheet_indicator(z2));
        match p.sheet {
            Sheet::One => {
                if g1 >= g2 {
                    z1
                } else {
                    z2
                }
            }
            Sheet::Two => {
                if g1 >= g2 {
                    z2
                } else {
                    z1
                }
            }
        }
    }

    pub fn point_of(&self, z: C64) -> SurfacePoint {
        let sheet = if self.sheet_indicator(z) >= 0.0 { Sheet::One } else { Sheet::Two };
        SurfacePoint { k: self.k_of(z), sheet }
    }

    pub fn region_of_zeta(&self, z: C64) -> Region {
        let om = self.omega_of(z);
        let tol = 1e-10 * (1.0 + om.norm());
        if om.im.abs() < tol || z.im == 0.0 {
            return Region::OnSigma;
        }
        match (z.im > 0.0, om.im > 0.0) {
            (true, true) => Region::D1,
            (true, false) => Region::D2,
            (false, true) => Region::D3,
            (false, false) => Region::D4,
        }
    }

    /// Angle θ(s) of Γ at |ζ| = e^s, with its derivative.
    pub fn gamma_angle(&self, s: f64) -> (f64, f64) {
        let r = s.exp();
        let n = 2.0 * self.b * (r - 1.0 / r);
        let d = self.a * (r * r + 1.0 / (r * r));
        let dn = 2.0 * self.b * (1.0 + 1.0 / (r * r));
        let dd = self.a * (2.0 * r - 2.0 / (r * r * r));
        let f = n / d;
        let df = (dn * d - n * dd) / (d * d);
        let th = f.acos();
        (th, -df * r / th.sin())
    }

    /// Uniformizing-plane parametrization of an arc of Σ in s = ln|ζ|.
    pub fn arc_curve(&self, label: ArcLabel, s0: f64, s1: f64) -> Curve {
        let p = *self;
        match label {
            ArcLabel::RUpperSheet1 => Curve::new(s0, s1, |s| {
                let z = C64::new(s.exp(), 0.0);
                (z, z)
            }),
            ArcLabel::RSheet2 => Curve::new(s0, s1, |s| {
                let z = C64::new(-s.exp(), 0.0);
                (z, z)
            }),
            ArcLabel::Gamma12 | ArcLabel::Gamma21 => Curve::new(s0, s1, move |s| {
                let (th, dth) = p.gamma_angle(s);
                let z = C64::from_polar(s.exp(), th);
                (z, z * C64::new(1.0, dth))
            }),
            ArcLabel::GammaBar12 | ArcLabel::GammaBar21 => Curve::new(s0, s1, move |s| {
                let (th, dth) = p.gamma_angle(s);
                let z = C64::from_polar(s.exp(), -th);
                (z, z * C64::new(1.0, -dth))
            }),
        }
    }

    /// √(ζ² + 1) ~ ζ at ∞₁, cut along Γ₂₁ ∪ Γ̄₂₁ (through ∞₂).
    fn sqrt_zeta_branch(&self, z: C64) -> C64 {
        let s = z * (ONE + 1.0 / (z * z)).sqrt();
        if z.norm_sqr() < 1.0 && z.re < 0.0 && self.sheet_indicator(z) >= 0.0 {
            -s
        } else {
            s
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Sheet {
    One,
    Two,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SurfacePoint {
    pub k: C64,
    pub sheet: Sheet,
}

impl SurfacePoint {
    pub fn new(k: C64, sheet: Sheet) -> Self {
        SurfacePoint { k, sheet }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Region {
    D1,
    D2,
    D3,
    D4,
    OnSigma,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ArcLabel {
    RUpperSheet1,
    RSheet2,
    Gamma12,
    Gamma21,
    GammaBar12,
    GammaBar21,
}

impl ArcLabel {
    pub const ALL: [ArcLabel; 6] = [
        ArcLabel::RUpperSheet1,
        ArcLabel::RSheet2,
        ArcLabel::Gamma12,
        ArcLabel::Gamma21,
        ArcLabel::GammaBar12,
        ArcLabel::GammaBar21,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            ArcLabel::RUpperSheet1 => "R_upper_sheet1",
            ArcLabel::RSheet2 => "R_sheet2",
            ArcLabel::Gamma12 => "Gamma_12",
            ArcLabel::Gamma21 => "Gamma_21",
            ArcLabel::GammaBar12 => "GammaBar_12",
            ArcLabel::GammaBar21 => "GammaBar_21",
        }
    }
}

pub fn branch_x(p: SurfacePoint, params: &BackgroundParams) -> C64 {
    if (p.k - params.branch_points().0).norm() == 0.0 || (p.k - params.branch_points().1).norm() == 0.0 {
        return C64::new(0.0, 0.0);
    }
    params.x_of(params.zeta_of(p))
}

pub fn omega_fn(p: SurfacePoint, params: &BackgroundParams) -> C64 {
    (p.k - params.b) * branch_x(p, params) * 2.0
}

pub fn classify_region(p: SurfacePoint, params: &BackgroundParams) -> Region {
    params.region_of_zeta(params.zeta_of(p))
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct ArcSample {
    /// ln|ζ|, increasing along the arc.
    pub s: f64,
    pub zeta: C64,
    pub k: C64,
    pub sheet: Sheet,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SigmaArc {
    pub label: ArcLabel,
    pub samples: Vec<ArcSample>,
    pub region_left: Region,
    pub region_right: Region,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ContourGeometry {
    pub params: BackgroundParams,
    pub arcs: Vec<SigmaArc>,
    pub branch_points: (C64, C64),
    /// Parameter window s ∈ [-s_max, s_max] covering |k| ≤ r_max on both sheets.
    pub s_max: f64,
}

impl ContourGeometry {
    pub fn classify(&self, p: SurfacePoint) -> Region {
        classify_region(p, &self.params)
    }

    pub fn arc(&self, label: ArcLabel) -> &SigmaArc {
        self.arcs.iter().find(|a| a.label == label).expect("all six arcs are traced")
    }

    pub fn max_abs_im_omega(&self) -> f64 {
        self.arcs
            .iter()
            .flat_map(|a| a.samples.iter())
            .map(|p| self.params.omega_of(p.zeta).im.abs() / (1.0 + self.params.omega_of(p.zeta).norm()))
            .fold(0.0, f64::max)
    }

    /// Columns: arc_id, s, re_k, im_k, sheet, region_left, region_right. Arcs are
    /// oriented by increasing s = ln|ζ|.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "arc_id,s,re_k,im_k,sheet,region_left,region_right")?;
        for arc in &self.arcs {
            for p in &arc.samples {
                writeln!(
                    w,
                    "{},{:.12e},{:.15e},{:.15e},{},{:?},{:?}",
                    arc.label.name(),
                    p.s,
                    p.k.re,
                    p.k.im,
                    if p.sheet == Sheet::One { 1 } else { 2 },
                    arc.region_left,
                    arc.region_right
                )?;
            }
        }
        Ok(())
    }
}

fn sample(params: &BackgroundParams, s: f64, zeta: C64, sheet: Sheet) -> ArcSample {
    ArcSample { s, zeta, k: params.k_of(zeta), sheet }
}

fn side_regions(params: &BackgroundParams, curve: &Curve) -> (Region, Region) {
    let t = 0.5 * (curve.t0 + curve.t1) + 0.137 * (curve.t1 - curve.t0);
    let (z, dz) = curve.eval(t);
    let n = I * dz / dz.norm() * (1e-3 * z.norm());
    (params.region_of_zeta(z + n), params.region_of_zeta(z - n))
}

/// Traces the upper branch of Γ from ζ = i in direction `dir` of s by
/// predictor–corrector continuation of Im Ω = 0 in the angle θ at fixed |ζ| = e^s.
fn trace_gamma(params: &BackgroundParams, s_end: f64, n: usize) -> Result<Vec<(f64, f64)>> {
    let im_omega = |s: f64, th: f64| {
        let z = C64::from_polar(s.exp(), th);
        let om = params.omega_of(z);
        let d = params.domega_dzeta(z);
        // ∂θ Im Ω = Im(Ω'(ζ)·iζ), ∂s Im Ω = Im(Ω'(ζ)·ζ)
        (om.im, (d * I * z).im, (d * z).im, om.norm())
    };
    let h_nominal = s_end / n as f64;
    let mut out = vec![(0.0, FRAC_PI_2)];
    let (mut s, mut th) = (0.0f64, FRAC_PI_2);
    let mut h = h_nominal;
    while (s_end - s) * h_nominal.signum() > 1e-14 {
        if (s + h - s_end) * h_nominal.signum() > 0.0 {
            h = s_end - s;
        }
        let (_, dth_f, ds_f, _) = im_omega(s, th);
        let mut th_new = th - ds_f / dth_f * h;
        let s_new = s + h;
        let mut ok = false;
        for _ in 0..30 {
            let (f, df, _, scale) = im_omega(s_new, th_new);
            let step = f / df;
            th_new -= step;
            if step.abs() < 1e-13 && f.abs() <= 1e-10 * (1.0 + scale) {
                ok = true;
                break;
            }
        }
        let jumped = (th_new - th).abs() > 0.25;
        if !ok || jumped || !th_new.is_finite() {
            h *= 0.5;
            if h.abs() < 1e-12 {
                return Err(Error::ContinuationFailure { last_good: params.k_of(C64::from_polar(s.exp(), th)) });
            }
            continue;
        }
        s = s_new;
        th = th_new;
        out.push((s, th));
        h = h.signum() * (h.abs() * 1.5).min(h_nominal.abs());
    }
    Ok(out)
}

pub fn trace_sigma(params: &BackgroundParams, resolution: usize) -> Result<ContourGeometry> {
    if resolution < 16 {
        return Err(Error::InvalidParams(format!("resolution {resolution} < 16")));
    }
    let s_max = (2.0 * params.r_max() / params.a + 2.0).ln();
    let n = resolution;
    let mut arcs = Vec::new();
    let grid = |a: f64, b: f64| (0..=n).map(move |i| a + (b - a) * i as f64 / n as f64);

    for (label, sign) in [(ArcLabel::RUpperSheet1, 1.0), (ArcLabel::RSheet2, -1.0)] {
        let samples: Vec<_> = grid(-s_max, s_max)
            .map(|s| {
                let z = C64::new(sign * s.exp(), 0.0);
                sample(params, s, z, if sign > 0.0 { Sheet::One } else { Sheet::Two })
            })
            .collect();
        let (l, r) = side_regions(params, &params.arc_curve(label, -s_max, s_max));
        arcs.push(SigmaArc { label, samples, region_left: l, region_right: r });
    }

    let outer = trace_gamma(params, s_max, n)?;
    let inner = trace_gamma(params, -s_max, n)?;
    let mut pieces = vec![
        (ArcLabel::Gamma12, outer.clone(), 1.0),
        (ArcLabel::Gamma21, inner.iter().rev().cloned().collect::<Vec<_>>(), 1.0),
        (ArcLabel::GammaBar12, outer, -1.0),
        (ArcLabel::GammaBar21, inner.into_iter().rev().collect(), -1.0),
    ];
    for (label, pts, sign) in pieces.drain(..) {
        let samples = pts
            .iter()
            .map(|&(s, th)| {
                let z = C64::from_polar(s.exp(), sign * th);
                sample(params, s, z, if s >= 0.0 { Sheet::One } else { Sheet::Two })
            })
            .collect();
        let (s0, s1) = if matches!(label, ArcLabel::Gamma12 | ArcLabel::GammaBar12) { (0.0, s_max) } else { (-s_max, 0.0) };
        let (l, r) = side_regions(params, &params.arc_curve(label, s0, s1));
        arcs.push(SigmaArc { label, samples, region_left: l, region_right: r });
    }
    Ok(ContourGeometry { params: *params, arcs, branch_points: params.branch_points(), s_max })
}

/// Background matrices (E, H, Ψ) at time t.
pub fn background_matrices(t: f64, p: SurfacePoint, params: &BackgroundParams) -> Result<(Mat2, Mat2, Mat2)> {
    let z = params.zeta_of(p);
    background_matrices_zeta(t, z, params)
}

pub fn background_matrices_zeta(t: f64, z: C64, params: &BackgroundParams) -> Result<(Mat2, Mat2, Mat2)> {
    if (z * z + 1.0).norm() < 1e-14 {
        return Err(Error::SingularEvaluation(params.k_of(z)));
    }
    let s = params.sqrt_zeta_branch(z);
    let d = z / s;
    let e12 = I * C64::from_polar(1.0, params.epsilon) / s;
    let e21 = I * C64::from_polar(1.0, -params.epsilon) / s;
    let e = Mat2::new(d, e12, e21, d);
    let w = C64::from_polar(1.0, params.omega * t);
    let h = Mat2::diag(w, w.conj()) * e * Mat2::diag(w.conj(), w);
    let ph = (I * (params.omega - params.omega_of(z)) * t).exp();
    let psi = h * Mat2::diag(ph, 1.0 / ph);
    Ok((e, h, psi))
}
