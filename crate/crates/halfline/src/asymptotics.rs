//! Long-time analysis of the t-problem: the scalar factor D, triangular
//! factorizations of J^{(t)}, lens deformations onto rays through the saddle
//! points of Ω, and decay measurements of the boundary corrections u, v.
//!
//! With the + sides R^upper: D4, R^lower: D3, Γ: D1, Γ̄: D3 the factorization
//! G^{lo}G^{up} opens every arc except R^upper, which needs J^{up}J^{lo} and
//! the scalar problem D₊ = D₋ A Ā there.

use crate::contour::Curve;
use crate::error::{Error, Result};
use crate::linalg;
use crate::mat2::{Mat2, ONE, ZERO};
use crate::rhsolve::assemble::{left_region, phase, t_jump, t_plus_region};
use crate::rhsolve::{recover_q, recover_qx_boundary, solve, Discretization, JumpArc, Plane, RHProblem, RHSolution, RefineOptions, SolveOptions};
use crate::surface::{ArcLabel, BackgroundParams, Region};
use crate::tdata::{arc_range, sample_arc, BoundarySpectralPair, S_FAR};
use num_complex::Complex64 as C64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::io::Write;
use std::sync::Arc;

/// D = exp C[±log(A Ā)] over a set of arcs, normalized D(∞₁) = 1.
#[derive(Clone)]
pub struct ScalarFactor {
    pub params: BackgroundParams,
    pub arcs: Vec<ArcLabel>,
    disc: Option<Arc<Discretization>>,
    u: Arc<Vec<Mat2>>,
}

impl std::fmt::Debug for ScalarFactor {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ScalarFactor").field("arcs", &self.arcs).field("nodes", &self.u.len()).finish()
    }
}

impl ScalarFactor {
    pub fn is_trivial(&self) -> bool {
        self.disc.is_none()
    }

    /// D(ζ) off its contour.
    pub fn eval(&self, z: C64) -> C64 {
        match &self.disc {
            None => ONE,
            Some(d) => d.cauchy_at(&self.u, z).get(0, 0).exp(),
        }
    }

    /// (D₊, D₋) at a point of an arc, + being the t-problem's + side.
    pub fn boundary(&self, label: ArcLabel, z: C64) -> (C64, C64) {
        let Some(d) = &self.disc else { return (ONE, ONE) };
        match self.arcs.iter().position(|l| *l == label) {
            None => {
                let v = self.eval(z);
                (v, v)
            }
            Some(i) => {
                let left = d.boundary_value(&self.u, i, z, true).get(0, 0).exp();
                let right = d.boundary_value(&self.u, i, z, false).get(0, 0).exp();
                if t_plus_region(label) == left_region(label) {
                    (left, right)
                } else {
                    (right, left)
                }
            }
        }
    }

    /// sup |(D₊/D₋)/(A Ā) − 1| over samples of the D-contour.
    pub fn jump_residual(&self, pair: &BoundarySpectralPair, per_arc: usize) -> f64 {
        let mut sup = 0.0f64;
        for &label in &self.arcs {
            for z in sample_arc(&self.params, label, per_arc) {
                let (dp, dm) = self.boundary(label, z);
                let aa = pair.a_13(label, z) * pair.a_sharp(label, z);
                sup = sup.max((dp / dm / aa - 1.0).norm());
            }
        }
        sup
    }

    /// sup |D(ζ̄)·conj D(ζ) − 1| over the given points; zero when log(A Ā) is
    /// real on a contour lying on the real ζ-axis.
    pub fn reflection_defect(&self, points: &[C64]) -> f64 {
        points.iter().map(|&z| (self.eval(z.conj()) * self.eval(z).conj() - 1.0).norm()).fold(0.0, f64::max)
    }
}

/// Scalar factor on R^upper, the only arc whose factorization needs it.
pub fn scalar_d(pair: &BoundarySpectralPair) -> Result<ScalarFactor> {
    scalar_d_on(pair, &[ArcLabel::RUpperSheet1])
}

/// Scalar factor with D₊ = D₋ A Ā on the given arcs.
pub fn scalar_d_on(pair: &BoundarySpectralPair, arcs: &[ArcLabel]) -> Result<ScalarFactor> {
    let params = pair.params;
    let log_g = |label: ArcLabel, z: C64| (ONE + pair.beta_13(label, z) * pair.beta_sharp(label, z)).ln();
    let trivial = arcs.iter().all(|&l| sample_arc(&params, l, 64).iter().all(|&z| log_g(l, z).norm() < 1e-300));
    if pair.is_trivial() || trivial {
        return Ok(ScalarFactor { params, arcs: arcs.to_vec(), disc: None, u: Arc::new(Vec::new()) });
    }
    for &label in arcs {
        for z in sample_arc(&params, label, 400) {
            let g = ONE + pair.beta_13(label, z) * pair.beta_sharp(label, z);
            if g.arg().abs() > 0.9 * PI {
                return Err(Error::IndexObstruction(1, format!("A Ā winds on {}", label.name())));
            }
        }
    }
    // log D_left − log D_right = ±log(A Ā) = ∓log(1 + ββ♯).
    let sign = |label: ArcLabel| if t_plus_region(label) == left_region(label) { -1.0 } else { 1.0 };
    let jumps: Vec<JumpArc> = arcs
        .iter()
        .map(|&label| {
            let (s0, s1) = arc_range(label, S_FAR);
            let p = pair.clone();
            let sg = sign(label);
            JumpArc::new(label.name(), params.arc_curve(label, s0, s1), move |z| {
                let g = ONE + p.beta_13(label, z) * p.beta_sharp(label, z);
                Mat2::diag((-sg * g.ln()).exp(), ONE)
            })
        })
        .collect();
    let disc = Discretization::build(&jumps, &RefineOptions { tol: 1e-12, ..RefineOptions::default() });
    let mut u = Vec::with_capacity(disc.n_nodes());
    for p in &disc.panels {
        let label = arcs[p.arc];
        for z in &p.z {
            u.push(Mat2::diag(sign(label) * log_g(label, *z), ZERO));
        }
    }
    Ok(ScalarFactor { params, arcs: arcs.to_vec(), disc: Some(Arc::new(disc)), u: Arc::new(u) })
}

/// The four triangular factors of J^{(t)} at a point of Σ.
#[derive(Clone, Copy, Debug)]
pub struct JumpFactors {
    pub j: Mat2,
    pub j_up: Mat2,
    pub j_lo: Mat2,
    pub g_lo: Mat2,
    pub g_up: Mat2,
}

impl JumpFactors {
    /// ‖J^{up}J^{lo} − J‖ (meaningful on the D-contour).
    pub fn j_residual(&self) -> f64 {
        (self.j_up * self.j_lo).dist(&self.j)
    }

    /// ‖G^{lo}G^{up} − J‖.
    pub fn g_residual(&self) -> f64 {
        (self.g_lo * self.g_up).dist(&self.j)
    }
}

pub fn factorize_jump(pair: &BoundarySpectralPair, d: &ScalarFactor, label: ArcLabel, z: C64, t: f64) -> JumpFactors {
    let e = phase(&pair.params, z, 0.0, t);
    let (dp, dm) = d.boundary(label, z);
    let (a, a_s) = (pair.a_13(label, z), pair.a_sharp(label, z));
    let (b, b_s) = (pair.b_13(label, z), pair.b_sharp(label, z));
    JumpFactors {
        j: t_jump(pair, label, z, t),
        j_up: Mat2::new(1.0 / dm, b * a_s * dm / e, ZERO, dm),
        j_lo: Mat2::new(dp, ZERO, a * b_s * e / dp, 1.0 / dp),
        g_lo: Mat2::lower(b_s / a_s * e),
        g_up: Mat2::upper(b / a / e),
    }
}

/// Barycentric rational approximant (AAA).
#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct Aaa {
    pub support: Vec<C64>,
    pub values: Vec<C64>,
    pub weights: Vec<C64>,
}

impl Aaa {
    /// Greedy AAA fit; stops at relative error `tol` or degree `max_degree`.
    /// Returns the approximant and its sup error on the non-support samples.
    pub fn fit(z: &[C64], f: &[C64], tol: f64, max_degree: usize) -> (Aaa, f64) {
        let m = z.len();
        let fmax = f.iter().map(|v| v.norm()).fold(0.0, f64::max).max(1e-300);
        let mean = f.iter().sum::<C64>() / m as f64;
        let mut r = vec![mean; m];
        let mut chosen: Vec<usize> = Vec::new();
        let mut out = Aaa::default();
        let mut err = f64::INFINITY;
        for _ in 0..=max_degree.min(m / 2) {
            let j = (0..m)
                .filter(|i| !chosen.contains(i))
                .max_by(|&x, &y| (f[x] - r[x]).norm().partial_cmp(&(f[y] - r[y]).norm()).unwrap())
                .unwrap();
            chosen.push(j);
            let rows: Vec<usize> = (0..m).filter(|i| !chosen.contains(i)).collect();
            let n = chosen.len();
            let mut loewner = Vec::with_capacity(rows.len() * n);
            for &i in &rows {
                for &c in &chosen {
                    loewner.push((f[i] - f[c]) / (z[i] - z[c]));
                }
            }
            let (_, v) = linalg::svd_right(rows.len(), n, &loewner);
            out = Aaa { support: chosen.iter().map(|&c| z[c]).collect(), values: chosen.iter().map(|&c| f[c]).collect(), weights: v[n - 1].clone() };
            for i in 0..m {
                r[i] = if chosen.contains(&i) { f[i] } else { out.eval(z[i]) };
            }
            err = rows.iter().map(|&i| (f[i] - r[i]).norm()).fold(0.0, f64::max) / fmax;
            if err <= tol {
                break;
            }
        }
        (out, err)
    }

    pub fn degree(&self) -> usize {
        self.support.len().saturating_sub(1)
    }

    pub fn eval(&self, x: C64) -> C64 {
        let mut num = ZERO;
        let mut den = ZERO;
        for ((s, v), w) in self.support.iter().zip(&self.values).zip(&self.weights) {
            let d = x - s;
            if d.norm() < 1e-300 {
                return *v;
            }
            num += w * v / d;
            den += w / d;
        }
        num / den
    }
}

/// Σ grouped by the factorization used on it.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ArcGroup {
    RUpper,
    RLower,
    Gamma,
    GammaBar,
}

impl ArcGroup {
    pub const ALL: [ArcGroup; 4] = [ArcGroup::RUpper, ArcGroup::RLower, ArcGroup::Gamma, ArcGroup::GammaBar];

    pub fn labels(self) -> &'static [ArcLabel] {
        match self {
            ArcGroup::RUpper => &[ArcLabel::RUpperSheet1],
            ArcGroup::RLower => &[ArcLabel::RSheet2],
            ArcGroup::Gamma => &[ArcLabel::Gamma21, ArcLabel::Gamma12],
            ArcGroup::GammaBar => &[ArcLabel::GammaBar21, ArcLabel::GammaBar12],
        }
    }

    /// Region of the lens on the given side.
    pub fn region(self, side: Side) -> Region {
        let label = self.labels()[0];
        let plus = t_plus_region(label);
        match side {
            Side::Plus => plus,
            Side::Minus => match (label, plus) {
                (ArcLabel::RUpperSheet1, _) => Region::D1,
                (ArcLabel::RSheet2, _) => Region::D2,
                (ArcLabel::Gamma21, _) => Region::D2,
                _ => Region::D4,
            },
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Side {
    Plus,
    Minus,
}

/// A lens boundary: the ray ζ = e^{s + iφ}, s ∈ ℝ, from ∞₂ to ∞₁, carrying the
/// factor of `group` on `side`.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct LensRay {
    pub group: ArcGroup,
    pub side: Side,
    pub region: Region,
    pub angle: f64,
    /// Whether the lens (between ray and arc) lies to the left of the outward ray.
    pub lens_on_left: bool,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct LensConfig {
    pub rays: Vec<LensRay>,
    /// Critical points of Ω, one per region.
    pub saddles: Vec<C64>,
    /// Angular offset between two rays sharing a region.
    pub delta: f64,
}

/// Zeros of dΩ/dζ: a(ζ⁴ + 1) = 2bζ(ζ² − 1).
pub fn saddle_points(params: &BackgroundParams) -> Vec<C64> {
    let (a, b) = (params.a, params.b);
    linalg::poly_roots(&[C64::new(a, 0.0), C64::new(2.0 * b, 0.0), ZERO, C64::new(-2.0 * b, 0.0), C64::new(a, 0.0)])
}

/// Extreme angles of Γ: (min over |ζ| ≥ 1, max over |ζ| ≤ 1).
fn gamma_angle_range(params: &BackgroundParams) -> (f64, f64) {
    let (mut lo, mut hi) = (PI, 0.0f64);
    for i in 0..=4000 {
        let s = -12.0 + 24.0 * i as f64 / 4000.0;
        let th = params.gamma_angle(s).0;
        lo = lo.min(th);
        hi = hi.max(th);
    }
    (lo, hi)
}

fn lens_on_left(group: ArcGroup, region: Region) -> bool {
    matches!(
        (region, group),
        (Region::D1, ArcGroup::Gamma) | (Region::D4, ArcGroup::RUpper) | (Region::D2, ArcGroup::RLower) | (Region::D3, ArcGroup::GammaBar)
    )
}

/// Which factors are not identically I for a pair.
pub fn needed_factors(pair: &BoundarySpectralPair) -> Vec<(ArcGroup, Side)> {
    let x_data = !pair.sd.is_trivial();
    let free = !pair.free_ratio.is_zero();
    let mut out = Vec::new();
    for g in ArcGroup::ALL {
        for side in [Side::Plus, Side::Minus] {
            let on = match (g, side) {
                (ArcGroup::RUpper, _) => x_data,
                (ArcGroup::RLower, _) => free,
                (ArcGroup::Gamma, Side::Plus) | (ArcGroup::GammaBar, Side::Minus) => free,
                (ArcGroup::Gamma, Side::Minus) | (ArcGroup::GammaBar, Side::Plus) => x_data,
            };
            if on {
                out.push((g, side));
            }
        }
    }
    out
}

impl LensConfig {
    /// Rays through the saddle point of Ω in each region (paths of steepest
    /// ascent of |Im Ω| towards ∞₁ and ∞₂); two factors in one region get rays
    /// at ±δ around it.
    pub fn saddle(params: &BackgroundParams, needed: &[(ArcGroup, Side)]) -> Result<LensConfig> {
        let saddles = saddle_points(params);
        let (th_min, th_max) = gamma_angle_range(params);
        let mut rays = Vec::new();
        let mut delta_used = 0.0f64;
        for region in [Region::D1, Region::D2, Region::D3, Region::D4] {
            let here: Vec<(ArcGroup, Side)> = needed.iter().copied().filter(|(g, s)| g.region(*s) == region).collect();
            if here.is_empty() {
                continue;
            }
            let sp = saddles
                .iter()
                .find(|z| params.region_of_zeta(**z) == region)
                .ok_or_else(|| Error::LensRejected(format!("no saddle point of Ω in {region:?}")))?;
            let phi = sp.arg();
            let (lo, hi) = match region {
                Region::D1 => (0.0, th_min),
                Region::D2 => (th_max, PI),
                Region::D3 => (-PI, -th_max),
                _ => (-th_min, 0.0),
            };
            let delta = if here.len() > 1 { 0.25 * (phi - lo).min(hi - phi) } else { 0.0 };
            delta_used = delta_used.max(delta);
            for (g, side) in here {
                // The ray for the arc bounding the sector from below sits at φ − δ.
                let lower_arc = matches!(
                    (region, g),
                    (Region::D1, ArcGroup::RUpper) | (Region::D2, ArcGroup::Gamma) | (Region::D3, ArcGroup::RLower) | (Region::D4, ArcGroup::GammaBar)
                );
                let angle = if lower_arc { phi - delta } else { phi + delta };
                let ray = LensRay { group: g, side, region, angle, lens_on_left: lens_on_left(g, region) };
                for i in 0..=200 {
                    let z = C64::from_polar((-8.0 + 16.0 * i as f64 / 200.0).exp(), angle);
                    if params.region_of_zeta(z) != region {
                        return Err(Error::LensRejected(format!("ray at angle {angle:.4} leaves {region:?} near ζ = {z}")));
                    }
                }
                rays.push(ray);
            }
        }
        Ok(LensConfig { rays, saddles, delta: delta_used })
    }

    pub fn curve(ray: &LensRay) -> Curve {
        let phi = ray.angle;
        Curve::new(-S_FAR, S_FAR, move |s| {
            let z = C64::from_polar(s.exp(), phi);
            (z, z)
        })
    }

    /// 2·min |Im Ω| along the rays: the decay rate of the lens jumps.
    pub fn phase_gap(&self, params: &BackgroundParams) -> f64 {
        let mut gap = f64::INFINITY;
        for r in &self.rays {
            for i in 0..=4000 {
                let z = C64::from_polar((-6.0 + 12.0 * i as f64 / 4000.0).exp(), r.angle);
                gap = gap.min(params.omega_of(z).im.abs());
            }
        }
        2.0 * gap
    }
}

/// Analytic continuations of the lens factors: exact for the G-factors
/// (β = b/a or the free ratio, both functions of k), AAA fits in ln ζ for
/// the R^upper factors, which involve D and A.
#[derive(Clone)]
pub struct ApproxFactors {
    pub pair: Arc<BoundarySpectralPair>,
    pub needed: Vec<(ArcGroup, Side)>,
    /// (diagonal, off-diagonal) fits for R^upper on the + and − sides.
    pub fits: Vec<(Side, Aaa, Aaa)>,
    pub achieved: f64,
}

impl std::fmt::Debug for ApproxFactors {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ApproxFactors").field("needed", &self.needed).field("achieved", &self.achieved).finish()
    }
}

impl ApproxFactors {
    fn b_over_a(&self, k: C64) -> C64 {
        let (a, b) = self.pair.sd.ab(k);
        b / a
    }

    /// β continued off the arc (upper-half-plane k for Γ, any k for the free ratio).
    fn beta(&self, g: ArcGroup, z: C64) -> C64 {
        let k = self.pair.params.k_of(z);
        match g {
            ArcGroup::Gamma | ArcGroup::RUpper => if self.pair.sd.is_trivial() { ZERO } else { self.b_over_a(k) },
            ArcGroup::RLower | ArcGroup::GammaBar => self.pair.free_ratio.eval(k),
        }
    }

    fn beta_sharp(&self, g: ArcGroup, z: C64) -> C64 {
        let k = self.pair.params.k_of(z);
        match g {
            ArcGroup::GammaBar | ArcGroup::RUpper => if self.pair.sd.is_trivial() { ZERO } else { self.b_over_a(k.conj()).conj() },
            ArcGroup::RLower | ArcGroup::Gamma => self.pair.free_ratio.eval_reflected(k),
        }
    }

    /// W with O = M^{(t)} W inside the lens of (group, side).
    pub fn lens_matrix(&self, g: ArcGroup, side: Side, z: C64, t: f64) -> Mat2 {
        let e = phase(&self.pair.params, z, 0.0, t);
        match (g, side) {
            (ArcGroup::RUpper, _) => {
                let Some((_, p, q)) = self.fits.iter().find(|(s, _, _)| *s == side) else { return Mat2::IDENTITY };
                let s = z.ln();
                let (p, q) = (p.eval(s), q.eval(s));
                match side {
                    Side::Plus => Mat2::new(p, q / e, ZERO, 1.0 / p),
                    Side::Minus => Mat2::new(p, ZERO, q * e, 1.0 / p).inv(),
                }
            }
            (_, Side::Plus) => Mat2::lower(self.beta_sharp(g, z) * e),
            (_, Side::Minus) => Mat2::upper(-self.beta(g, z) / e),
        }
    }
}

/// Builds continuations of the lens factors with relative error ≤ eps.
pub fn analytic_approx(pair: &Arc<BoundarySpectralPair>, d: &ScalarFactor, lens: &LensConfig, eps: f64, max_degree: usize) -> Result<ApproxFactors> {
    let needed: Vec<(ArcGroup, Side)> = lens.rays.iter().map(|r| (r.group, r.side)).collect();
    let mut fits = Vec::new();
    let mut achieved = 0.0f64;
    for &(g, side) in &needed {
        if g != ArcGroup::RUpper {
            continue;
        }
        let (fp, fq, e) = fit_r_upper(pair, d, side, eps, max_degree);
        achieved = achieved.max(e);
        fits.push((side, fp, fq));
    }
    if achieved > eps {
        return Err(Error::DegreeLimit { degree: max_degree, achieved, target: eps });
    }
    Ok(ApproxFactors { pair: pair.clone(), needed, fits, achieved })
}

/// AAA fits (in s = ln ζ) of the R^upper factor entries: (1/D₋, B Ā D₋) for
/// J^{up} and (D₊, A B̄/D₊) for J^{lo}. Returns the fits and the larger
/// relative error on held-out samples.
pub fn fit_r_upper(pair: &BoundarySpectralPair, d: &ScalarFactor, side: Side, tol: f64, max_degree: usize) -> (Aaa, Aaa, f64) {
    let label = ArcLabel::RUpperSheet1;
    let entries = |s: f64| {
        let z = C64::new(s.exp(), 0.0);
        let (dp, dm) = d.boundary(label, z);
        match side {
            Side::Plus => (1.0 / dm, pair.b_13(label, z) * pair.a_sharp(label, z) * dm),
            Side::Minus => (dp, pair.a_13(label, z) * pair.b_sharp(label, z) / dp),
        }
    };
    let n = 240;
    let ss: Vec<f64> = (0..n).map(|i| -7.0 + 14.0 * i as f64 / (n - 1) as f64).collect();
    let vals: Vec<(C64, C64)> = ss.par_iter().map(|&s| entries(s)).collect();
    let zs: Vec<C64> = ss.iter().map(|&s| C64::new(s, 0.0)).collect();
    let p: Vec<C64> = vals.iter().map(|v| v.0).collect();
    let q: Vec<C64> = vals.iter().map(|v| v.1).collect();
    let (fp, _) = Aaa::fit(&zs, &p, tol, max_degree);
    let (fq, _) = Aaa::fit(&zs, &q, tol, max_degree);
    let check: Vec<f64> = (0..n - 1).map(|i| 0.5 * (ss[i] + ss[i + 1])).collect();
    let scale_q = q.iter().map(|v| v.norm()).fold(0.0, f64::max).max(1e-300);
    let err = check
        .par_iter()
        .map(|&s| {
            let (pv, qv) = entries(s);
            let w = C64::new(s, 0.0);
            ((fp.eval(w) - pv).norm() / pv.norm().max(1.0)).max((fq.eval(w) - qv).norm() / scale_q)
        })
        .reduce(|| 0.0, f64::max);
    (fp, fq, err)
}

/// Measured properties of the lens jumps at one time.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct LensReport {
    pub t: f64,
    pub offdiag_sup: f64,
    pub diag_min: f64,
    pub diag_max: f64,
}

fn ray_jump(approx: &ApproxFactors, ray: &LensRay, z: C64, t: f64) -> Mat2 {
    let w = approx.lens_matrix(ray.group, ray.side, z, t);
    if ray.lens_on_left {
        w.inv()
    } else {
        w
    }
}

/// O-problem: the t-problem with every factor moved onto its ray. With exact
/// continuations the jumps on Σ itself cancel.
pub fn lens_problem(approx: &ApproxFactors, lens: &LensConfig, t: f64) -> Result<RHProblem> {
    check_lens_poles(approx, lens)?;
    let mut prob = RHProblem::new(Plane::Zeta(approx.pair.params));
    for ray in &lens.rays {
        let (a, r) = (approx.clone(), *ray);
        prob = prob.with_arc(JumpArc::new(format!("lens_{:?}_{:?}", ray.group, ray.side), LensConfig::curve(ray), move |z| ray_jump(&a, &r, z, t)));
    }
    Ok(prob)
}

/// The free ratio's poles must stay outside the lens sectors that carry it.
fn check_lens_poles(approx: &ApproxFactors, lens: &LensConfig) -> Result<()> {
    let params = approx.pair.params;
    for ray in &lens.rays {
        if ray.group != ArcGroup::RLower {
            continue;
        }
        for p in approx.pair.free_ratio.pole_list() {
            // Preimages of p (R) lie in the upper half ζ-plane, of p̄ (R*) in the lower.
            for z in [crate::surface::Sheet::One, crate::surface::Sheet::Two].iter().map(|&s| params.zeta_of(crate::surface::SurfacePoint::new(p, s))) {
                let z = if ray.side == Side::Plus { z.conj() } else { z };
                if params.region_of_zeta(z) != ray.region {
                    continue;
                }
                let inside = if ray.region == Region::D2 { z.arg() > ray.angle } else { z.arg() < ray.angle };
                if inside {
                    return Err(Error::LensRejected(format!("pole of the free ratio at k = {p} lies inside the {:?} lens", ray.region)));
                }
            }
        }
    }
    Ok(())
}

pub fn lens_report(approx: &ApproxFactors, lens: &LensConfig, t: f64) -> LensReport {
    let mut rep = LensReport { t, offdiag_sup: 0.0, diag_min: f64::INFINITY, diag_max: 0.0 };
    for ray in &lens.rays {
        for i in 0..=2000 {
            let z = C64::from_polar((-8.0 + 16.0 * i as f64 / 2000.0).exp(), ray.angle);
            let j = ray_jump(approx, ray, z, t);
            rep.offdiag_sup = rep.offdiag_sup.max(j.get(0, 1).norm()).max(j.get(1, 0).norm());
            for d in [j.get(0, 0).norm(), j.get(1, 1).norm()] {
                rep.diag_min = rep.diag_min.min(d);
                rep.diag_max = rep.diag_max.max(d);
            }
        }
    }
    rep
}

/// Solves the O-problem at time t. For t > 0 the lens factors vanish faster
/// than any power at ∞₁, so both moments of O equal those of M^{(t)}; at
/// t = 0 only the first is preserved.
pub fn lens_transform(approx: &ApproxFactors, lens: &LensConfig, t: f64, opts: &SolveOptions) -> Result<(RHSolution, LensReport)> {
    let prob = lens_problem(approx, lens, t)?;
    let sol = solve(&prob, opts)?;
    Ok((sol, lens_report(approx, lens, t)))
}

/// Boundary corrections at one time.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct TraceSample {
    pub t: f64,
    pub u: C64,
    pub v: C64,
    pub residual: f64,
}

/// (u, v) from a t-problem solution: u = 2i(M₁)₁₂ and
/// v = 4(M₂)₁₂ + 2i q(0,t)(M₁)₂₂ with q(0,t) = a e^{2iωt+iε} + u.
pub fn traces(sol: &RHSolution, params: &BackgroundParams, t: f64) -> Result<(C64, C64)> {
    let u = recover_q(sol);
    let q0t = C64::from_polar(params.a, 2.0 * params.omega * t + params.epsilon) + u;
    Ok((u, recover_qx_boundary(sol, q0t)?))
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DecayReport {
    pub samples: Vec<TraceSample>,
    pub kappa_u: f64,
    pub kappa_v: f64,
    pub r2_u: f64,
    pub r2_v: f64,
    /// Times actually used in the fits (above the noise floor).
    pub fit_range: (f64, f64),
    pub floor: f64,
    /// 2·min |Im Ω| on the rays.
    pub kappa_gap: f64,
    /// Decay rate of the sup of the off-diagonal lens jumps over the fit range.
    pub kappa_lens: f64,
    pub lens: Vec<LensReport>,
}

impl DecayReport {
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "t,re_u,im_u,re_v,im_v,abs_u,abs_v")?;
        for s in &self.samples {
            writeln!(w, "{},{:e},{:e},{:e},{:e},{:e},{:e}", s.t, s.u.re, s.u.im, s.v.re, s.v.im, s.u.norm(), s.v.norm())?;
        }
        Ok(())
    }

    pub fn summary_json(&self) -> serde_json::Value {
        serde_json::json!({
            "kappa_u": self.kappa_u, "kappa_v": self.kappa_v, "r2_u": self.r2_u, "r2_v": self.r2_v,
            "kappa_gap": self.kappa_gap, "kappa_lens": self.kappa_lens, "fit_range": self.fit_range, "floor": self.floor,
        })
    }

    /// Largest relative increase of |u| between consecutive fitted samples.
    pub fn ripple(&self) -> f64 {
        let pts: Vec<f64> = self.samples.iter().filter(|s| s.t >= self.fit_range.0 && s.t <= self.fit_range.1).map(|s| s.u.norm()).collect();
        pts.windows(2).map(|w| (w[1] / w[0] - 1.0).max(0.0)).fold(0.0, f64::max)
    }
}

/// Least-squares line y = c + m t; returns (m, c, R²).
pub fn linear_fit(t: &[f64], y: &[f64]) -> (f64, f64, f64) {
    let n = t.len() as f64;
    let (mt, my) = (t.iter().sum::<f64>() / n, y.iter().sum::<f64>() / n);
    let sxy: f64 = t.iter().zip(y).map(|(a, b)| (a - mt) * (b - my)).sum();
    let sxx: f64 = t.iter().map(|a| (a - mt).powi(2)).sum();
    let m = sxy / sxx;
    let c = my - m * mt;
    let ss_res: f64 = t.iter().zip(y).map(|(a, b)| (b - c - m * a).powi(2)).sum();
    let ss_tot: f64 = y.iter().map(|b| (b - my).powi(2)).sum();
    (m, c, if ss_tot > 0.0 { 1.0 - ss_res / ss_tot } else { 1.0 })
}

/// Absolute floor below which traces are treated as solver noise.
pub const NOISE_FLOOR: f64 = 1e-13;

/// Solves the O-problem on a time grid and fits log|u|, log|v| linearly in t.
/// Requires the R^upper factors to be absent: diagonal lens factors would
/// shift the 1/k² moment used for v.
pub fn decay_fit(approx: &ApproxFactors, lens: &LensConfig, t_grid: &[f64], opts: &SolveOptions) -> Result<DecayReport> {
    if lens.rays.iter().any(|r| r.group == ArcGroup::RUpper) {
        return Err(Error::LensRejected("decay fits need trivial R^upper factors (zero x-data)".into()));
    }
    let params = approx.pair.params;
    let solved: Vec<Result<(TraceSample, LensReport)>> = t_grid
        .iter()
        .map(|&t| {
            let (sol, rep) = lens_transform(approx, lens, t, opts)?;
            let (u, v) = traces(&sol, &params, t)?;
            Ok((TraceSample { t, u, v, residual: sol.residual }, rep))
        })
        .collect();
    let mut samples = Vec::new();
    let mut reports = Vec::new();
    for s in solved {
        let (a, b) = s?;
        samples.push(a);
        reports.push(b);
    }
    let floor = samples.iter().map(|s| 10.0 * s.residual).fold(NOISE_FLOOR, f64::max);
    let fit = |f: &dyn Fn(&TraceSample) -> f64| {
        let pts: Vec<(f64, f64)> = samples.iter().filter(|s| f(s) > floor).map(|s| (s.t, f(s).ln())).collect();
        if pts.len() < 3 {
            return (f64::NAN, f64::NAN, (f64::NAN, f64::NAN));
        }
        let (ts, ys): (Vec<f64>, Vec<f64>) = pts.iter().copied().unzip();
        let (m, _, r2) = linear_fit(&ts, &ys);
        (-m, r2, (ts[0], ts[ts.len() - 1]))
    };
    let (kappa_u, r2_u, range) = fit(&|s| s.u.norm());
    let (kappa_v, r2_v, _) = fit(&|s| s.v.norm());
    let lens_pts: Vec<(f64, f64)> = reports.iter().filter(|r| r.t >= range.0 && r.t <= range.1).map(|r| (r.t, r.offdiag_sup.ln())).collect();
    let kappa_lens = if lens_pts.len() >= 2 {
        let (ts, ys): (Vec<f64>, Vec<f64>) = lens_pts.into_iter().unzip();
        -linear_fit(&ts, &ys).0
    } else {
        f64::NAN
    };
    Ok(DecayReport { samples, kappa_u, kappa_v, r2_u, r2_v, fit_range: range, floor, kappa_gap: lens.phase_gap(&params), kappa_lens, lens: reports })
}

/// Default admissible rational family for decay experiments: zero x-data and
/// R = γ/((k − p₁)(k − p₂)) with poles placed away from the lens sectors.
pub fn rational_family(params: &BackgroundParams, gamma: C64) -> Result<Arc<BoundarySpectralPair>> {
    let r = crate::tdata::RationalFn::two_pole(gamma, C64::new(params.b + 0.5, 2.5), C64::new(params.b - 0.5, 3.0));
    Ok(Arc::new(crate::tdata::construct_pair(Arc::new(crate::xscatter::ScatteringData::trivial()), r, params)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rhsolve::assemble_t;
    use crate::tdata::{construct_pair, RationalFn};
    use crate::xscatter::{scattering_pair, InitialDatum, ScatteringData};

    fn params() -> BackgroundParams {
        BackgroundParams::new(1.0, 0.9, 0.3).unwrap()
    }

    fn gaussian_pair() -> Arc<BoundarySpectralPair> {
        let p = params();
        let q = InitialDatum::gaussian(C64::new(0.1, 0.0), 1.0).unwrap();
        let sd = Arc::new(scattering_pair(&q, &[0.0]).unwrap());
        let r = RationalFn::simple(&[(C64::new(-p.b, 2.0), C64::new(0.3, 0.0))]);
        Arc::new(construct_pair(sd, r, &p).unwrap())
    }

    #[test]
    fn saddles_of_omega() {
        let p = params();
        let s = saddle_points(&p);
        assert_eq!(s.len(), 4);
        for z in &s {
            assert!(p.domega_dzeta(*z).norm() < 1e-10);
        }
        let mut regions: Vec<Region> = s.iter().map(|z| p.region_of_zeta(*z)).collect();
        regions.sort_by_key(|r| format!("{r:?}"));
        assert_eq!(regions, vec![Region::D1, Region::D2, Region::D3, Region::D4]);
        // a = 1, ω = 0.9: |Im Ω| = 0.95119 at every saddle.
        for z in &s {
            assert!((p.omega_of(*z).im.abs() - 0.9511924458311259).abs() < 1e-9);
        }
    }

    #[test]
    fn trivial_scalar_factor() {
        let p = params();
        let pair = construct_pair(Arc::new(ScatteringData::trivial()), RationalFn::zero(), &p).unwrap();
        let d = scalar_d(&pair).unwrap();
        assert!(d.is_trivial());
        assert_eq!(d.eval(C64::new(0.3, 0.2)), ONE);
    }

    #[test]
    fn free_ratio_alone_gives_trivial_d() {
        let pair = rational_family(&params(), C64::new(3.0, 0.0)).unwrap();
        let d = scalar_d(&pair).unwrap();
        assert!(d.is_trivial());
        let f = factorize_jump(&pair, &d, ArcLabel::RSheet2, C64::new(-1.3, 0.0), 0.7);
        assert!(f.g_residual() < 1e-14);
        let f = factorize_jump(&pair, &d, ArcLabel::GammaBar12, pair.params.arc_curve(ArcLabel::GammaBar12, 0.0, 2.0).point(0.4), 0.7);
        assert!(f.g_residual() < 1e-14);
    }

    #[test]
    fn d_jump_factorization_and_symmetry() {
        let pair = gaussian_pair();
        let d = scalar_d(&pair).unwrap();
        assert!(!d.is_trivial());
        let res = d.jump_residual(&pair, 20);
        assert!(res < 1e-6, "D jump residual {res:e}");
        let pts = [C64::new(0.5, 0.7), C64::new(2.0, 0.1), C64::new(-1.0, 0.4)];
        assert!(d.reflection_defect(&pts) < 1e-10);
        for z in sample_arc(&pair.params, ArcLabel::RUpperSheet1, 8) {
            let f = factorize_jump(&pair, &d, ArcLabel::RUpperSheet1, z, 1.5);
            assert!(f.j_residual() < 1e-10, "J^up J^lo residual {:e}", f.j_residual());
        }
        for label in [ArcLabel::Gamma12, ArcLabel::Gamma21, ArcLabel::RSheet2, ArcLabel::GammaBar21] {
            for z in sample_arc(&pair.params, label, 5) {
                let f = factorize_jump(&pair, &d, label, z, 1.5);
                assert!(f.g_residual() < 1e-10, "G^lo G^up residual {:e}", f.g_residual());
            }
        }
    }

    #[test]
    fn aaa_recovers_rational_and_converges_on_smooth_data() {
        let z: Vec<C64> = (0..200).map(|i| C64::new(-3.0 + 6.0 * i as f64 / 199.0, 0.0)).collect();
        let f: Vec<C64> = z.iter().map(|&x| 1.0 / (x - C64::new(0.5, 0.8)) + 2.0 / (x + C64::new(1.0, 0.3))).collect();
        let (r, err) = Aaa::fit(&z, &f, 1e-13, 10);
        assert!(err < 1e-12 && r.degree() <= 3);
        let x = C64::new(0.2, 0.4);
        assert!((r.eval(x) - (1.0 / (x - C64::new(0.5, 0.8)) + 2.0 / (x + C64::new(1.0, 0.3)))).norm() < 1e-10);
        let g: Vec<C64> = z.iter().map(|&x| (x + 4.0).sqrt()).collect();
        let errs: Vec<f64> = [2, 4, 8, 16].iter().map(|&m| Aaa::fit(&z, &g, 1e-15, m).1).collect();
        assert!(errs.windows(2).all(|w| w[1] < w[0]), "{errs:?}");
    }

    #[test]
    fn analytic_approx_degree_sweep() {
        let pair = gaussian_pair();
        let d = scalar_d(&pair).unwrap();
        let errs: Vec<f64> = [2, 5, 10].iter().map(|&m| fit_r_upper(&pair, &d, Side::Plus, 1e-15, m).2).collect();
        assert!(errs.windows(2).all(|w| w[1] < w[0]), "{errs:?}");
    }

    #[test]
    fn rational_family_passes_through() {
        let pair = rational_family(&params(), C64::new(3.0, 0.0)).unwrap();
        let d = scalar_d(&pair).unwrap();
        let lens = LensConfig::saddle(&pair.params, &needed_factors(&pair)).unwrap();
        assert_eq!(lens.rays.len(), 4);
        let approx = analytic_approx(&pair, &d, &lens, 1e-14, 20).unwrap();
        assert_eq!(approx.achieved, 0.0);
    }

    #[test]
    fn lens_is_exact_bookkeeping_at_t_zero() {
        let pair = rational_family(&params(), C64::new(3.0, 0.0)).unwrap();
        let d = scalar_d(&pair).unwrap();
        let lens = LensConfig::saddle(&pair.params, &needed_factors(&pair)).unwrap();
        let approx = analytic_approx(&pair, &d, &lens, 1e-14, 20).unwrap();
        let opts = SolveOptions::default();
        let direct = solve(&assemble_t(&pair, 0.0).unwrap(), &opts).unwrap();
        let (o, _) = lens_transform(&approx, &lens, 0.0, &opts).unwrap();
        let (qd, qo) = (recover_q(&direct), recover_q(&o));
        assert!(qd.norm() > 1e-3, "{qd} {qo}");
        assert!((qd - qo).norm() < 1e-8, "{qd} vs {qo}; residuals {:e} {:e}", direct.residual, o.residual);
        // Schwarz symmetry of the solution: (M₁)₂₁ = −conj (M₁)₁₂.
        assert!((o.m1.get(1, 0) + o.m1.get(0, 1).conj()).norm() < 1e-9);
    }

    #[test]
    fn lens_jumps_decay_with_bounded_diagonal() {
        let pair = rational_family(&params(), C64::new(3.0, 0.0)).unwrap();
        let d = scalar_d(&pair).unwrap();
        let lens = LensConfig::saddle(&pair.params, &needed_factors(&pair)).unwrap();
        let approx = analytic_approx(&pair, &d, &lens, 1e-14, 20).unwrap();
        let r5 = lens_report(&approx, &lens, 5.0);
        let r10 = lens_report(&approx, &lens, 10.0);
        let kappa = (r5.offdiag_sup / r10.offdiag_sup).ln() / 5.0;
        let gap = lens.phase_gap(&pair.params);
        assert!((kappa - gap).abs() < 0.05 * gap, "κ {kappa} vs gap {gap}");
        for t in [0.0, 5.0, 20.0] {
            let r = lens_report(&approx, &lens, t);
            assert!(r.diag_min > 0.999 && r.diag_max < 1.001);
        }
    }

    #[test]
    fn linear_fit_exact_line() {
        let (m, c, r2) = linear_fit(&[0.0, 1.0, 2.0], &[1.0, -1.0, -3.0]);
        assert!((m + 2.0).abs() < 1e-14 && (c - 1.0).abs() < 1e-14 && (r2 - 1.0).abs() < 1e-14);
    }
}
