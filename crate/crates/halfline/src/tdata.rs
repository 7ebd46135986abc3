//! Spectral data for the t-problem: admissible pairs (A, B) built from the
//! x-data and a free rational ratio, and the derived transition matrices.
//!
//! Everything lives in the uniformizing ζ-plane. On each arc of Σ one side
//! borders D1 or D3 (where A, B are analytic) and the other borders D2 or D4
//! (where Ā(k̄), B̄(k̄) are). Writing β = B/A and f♯(ζ) = conj f(ζ̄), the
//! condition A·A♯ + B·B♯ = 1 becomes the scalar problem
//! A·A♯ = 1/(1 + β β♯), solved by A = exp C[σ log(1/(1 + β β♯))] where σ = +1
//! on the real arcs (D1/D3 on the left) and −1 on Γ, Γ̄ (D1/D3 on the right).

use crate::error::{Error, Result};
use crate::mat2::{Mat2, ONE, ZERO};
use crate::rhsolve::{Discretization, JumpArc, RefineOptions};
use crate::surface::{ArcLabel, BackgroundParams, Region};
use crate::xscatter::{derivative, find_zeros, ScatteringData, SearchBox};
use num_complex::Complex64 as C64;
use rand::{Rng, SeedableRng};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::sync::Arc;

/// Σ_poles Σ_m c_m (k − p)^{−m} + Σ_n d_n kⁿ.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct RationalFn {
    pub poles: Vec<(C64, Vec<C64>)>,
    #[serde(default)]
    pub poly: Vec<C64>,
}

impl RationalFn {
    pub fn zero() -> Self {
        RationalFn::default()
    }

    /// Σ c_j / (k − p_j).
    pub fn simple(terms: &[(C64, C64)]) -> Self {
        RationalFn { poles: terms.iter().map(|&(p, c)| (p, vec![c])).collect(), poly: Vec::new() }
    }

    /// γ / ((k − p₁)(k − p₂)), an O(1/k²) ratio.
    pub fn two_pole(gamma: C64, p1: C64, p2: C64) -> Self {
        let c = gamma / (p1 - p2);
        Self::simple(&[(p1, c), (p2, -c)])
    }

    pub fn eval(&self, k: C64) -> C64 {
        let mut acc = ZERO;
        for (p, cs) in &self.poles {
            let w = 1.0 / (k - p);
            let mut wp = w;
            for c in cs {
                acc += c * wp;
                wp *= w;
            }
        }
        let mut kp = ONE;
        for d in &self.poly {
            acc += d * kp;
            kp *= k;
        }
        acc
    }

    /// conj f(k̄).
    pub fn eval_reflected(&self, k: C64) -> C64 {
        self.eval(k.conj()).conj()
    }

    pub fn is_zero(&self) -> bool {
        self.poles.iter().all(|(_, cs)| cs.iter().all(|c| *c == ZERO)) && self.poly.iter().all(|d| *d == ZERO)
    }

    /// Decay order at infinity: f = O(k^{−order}).
    pub fn decay_order(&self) -> i32 {
        if self.poly.iter().any(|d| *d != ZERO) {
            return -(self.poly.iter().rposition(|d| *d != ZERO).unwrap() as i32);
        }
        // Moments Σ c₁ p^j of the simple-pole parts decide the leading power.
        for n in 1..8 {
            let mut m = ZERO;
            for (p, cs) in &self.poles {
                // Coefficient of k^{−n} in Σ_m c_m (k−p)^{−m} = Σ_m c_m Σ_j C(j+m−1, m−1) p^j k^{−m−j}.
                for (mi, c) in cs.iter().enumerate() {
                    let mdeg = mi + 1;
                    if mdeg <= n {
                        let j = n - mdeg;
                        m += c * binom(j + mdeg - 1, mdeg - 1) * p.powu(j as u32);
                    }
                }
            }
            if m.norm() > 1e-14 {
                return n as i32;
            }
        }
        8
    }

    pub fn pole_list(&self) -> Vec<C64> {
        self.poles.iter().map(|(p, _)| *p).collect()
    }
}

fn binom(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// σ = +1 where D1/D3 lies on the left of the arc.
pub fn side_sign(label: ArcLabel) -> f64 {
    match label {
        ArcLabel::RUpperSheet1 | ArcLabel::RSheet2 => 1.0,
        _ => -1.0,
    }
}

/// Image of an arc under ζ ↦ ζ̄.
pub fn conj_label(label: ArcLabel) -> ArcLabel {
    match label {
        ArcLabel::Gamma12 => ArcLabel::GammaBar12,
        ArcLabel::GammaBar12 => ArcLabel::Gamma12,
        ArcLabel::Gamma21 => ArcLabel::GammaBar21,
        ArcLabel::GammaBar21 => ArcLabel::Gamma21,
        l => l,
    }
}

/// Parameter range (in s = ln|ζ|) used for the arcs of Σ.
pub fn arc_range(label: ArcLabel, s_far: f64) -> (f64, f64) {
    match label {
        ArcLabel::RUpperSheet1 | ArcLabel::RSheet2 => (-s_far, s_far),
        ArcLabel::Gamma12 | ArcLabel::GammaBar12 => (0.0, s_far),
        ArcLabel::Gamma21 | ArcLabel::GammaBar21 => (-s_far, 0.0),
    }
}

/// Arc parameters reach |k| ≈ (a/2)e^{20} ≈ 2.4e8·a; algebraically decaying
/// densities are truncated well before.
pub const S_FAR: f64 = 20.0;

/// Admissible t-problem spectral pair.
#[derive(Clone)]
pub struct BoundarySpectralPair {
    pub params: BackgroundParams,
    pub sd: Arc<ScatteringData>,
    pub free_ratio: RationalFn,
    /// Discretized log-density of A; `None` when β ≡ 0 and A ≡ 1.
    log_disc: Option<Arc<Discretization>>,
    log_u: Arc<Vec<Mat2>>,
    labels: Vec<ArcLabel>,
}

impl std::fmt::Debug for BoundarySpectralPair {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("BoundarySpectralPair")
            .field("params", &self.params)
            .field("free_ratio", &self.free_ratio)
            .field("nodes", &self.log_u.len())
            .finish()
    }
}

impl BoundarySpectralPair {
    pub fn is_trivial(&self) -> bool {
        self.log_disc.is_none()
    }

    pub fn n_nodes(&self) -> usize {
        self.log_u.len()
    }

    fn k(&self, z: C64) -> C64 {
        self.params.k_of(z)
    }

    /// β at an interior point of D1 (b/a) or D3 (free ratio).
    pub fn beta(&self, z: C64) -> Result<C64> {
        match self.params.region_of_zeta(z) {
            Region::D1 => Ok(ratio_ba(&self.sd, self.k(z))),
            Region::D3 => Ok(self.free_ratio.eval(self.k(z))),
            r => Err(Error::InvalidParams(format!("β is defined in D1 ∪ D3, not {r:?}"))),
        }
    }

    /// Boundary value of β on an arc from the D1/D3 side.
    pub fn beta_13(&self, label: ArcLabel, z: C64) -> C64 {
        beta_13(&self.sd, &self.free_ratio, &self.params, label, z)
    }

    /// β♯ = conj β(ζ̄) on an arc, the D2/D4-side companion.
    pub fn beta_sharp(&self, label: ArcLabel, z: C64) -> C64 {
        self.beta_13(conj_label(label), z.conj()).conj()
    }

    fn log_a(&self, z: C64) -> C64 {
        match &self.log_disc {
            None => ZERO,
            Some(d) => d.cauchy_at(&self.log_u, z).get(0, 0),
        }
    }

    /// A(ζ) for ζ off Σ. In D2 ∪ D4 this is 1/A♯.
    pub fn a_fn(&self, z: C64) -> C64 {
        self.log_a(z).exp()
    }

    pub fn b_fn(&self, z: C64) -> Result<C64> {
        Ok(self.beta(z)? * self.a_fn(z))
    }

    /// Boundary value of A from the D1/D3 side.
    pub fn a_13(&self, label: ArcLabel, z: C64) -> C64 {
        let Some(d) = &self.log_disc else { return ONE };
        let arc = self.labels.iter().position(|l| *l == label).expect("all arcs present");
        let plus = side_sign(label) > 0.0;
        d.boundary_value(&self.log_u, arc, z, plus).get(0, 0).exp()
    }

    /// A♯(ζ) = conj A(ζ̄) on an arc, from the D2/D4 side.
    pub fn a_sharp(&self, label: ArcLabel, z: C64) -> C64 {
        self.a_13(conj_label(label), z.conj()).conj()
    }

    pub fn b_13(&self, label: ArcLabel, z: C64) -> C64 {
        self.beta_13(label, z) * self.a_13(label, z)
    }

    pub fn b_sharp(&self, label: ArcLabel, z: C64) -> C64 {
        self.b_13(conj_label(label), z.conj()).conj()
    }

    /// sup |A A♯ + B B♯ − 1| over `per_arc` points on every arc (between nodes).
    pub fn condition_iii_residual(&self, per_arc: usize) -> f64 {
        let mut sup = 0.0f64;
        for &label in &ArcLabel::ALL {
            for z in sample_arc(&self.params, label, per_arc) {
                let v = self.a_13(label, z) * self.a_sharp(label, z) + self.b_13(label, z) * self.b_sharp(label, z);
                sup = sup.max((v - 1.0).norm());
            }
        }
        sup
    }

    /// sup |b A − a B| over random D1 samples.
    pub fn global_relation_residual(&self, n: usize, seed: u64) -> f64 {
        let mut rng = rand::rngs::StdRng::seed_from_u64(seed);
        let mut sup = 0.0f64;
        let mut count = 0;
        while count < n {
            let z = C64::from_polar((rng.gen::<f64>() * 4.0 - 2.0).exp(), rng.gen::<f64>() * PI * 0.5);
            if self.params.region_of_zeta(z) != Region::D1 {
                continue;
            }
            let (a, b) = self.sd.ab(self.k(z));
            let big_a = self.a_fn(z);
            let big_b = self.b_fn(z).unwrap_or(ZERO);
            sup = sup.max((b * big_a - a * big_b).norm());
            count += 1;
        }
        sup
    }
}

fn ratio_ba(sd: &ScatteringData, k: C64) -> C64 {
    if sd.is_trivial() {
        return ZERO;
    }
    let (a, b) = sd.ab(k);
    b / a
}

fn beta_13(sd: &ScatteringData, r: &RationalFn, p: &BackgroundParams, label: ArcLabel, z: C64) -> C64 {
    let k = p.k_of(z);
    match label {
        ArcLabel::RUpperSheet1 => ratio_ba(sd, C64::new(k.re, 0.0)),
        ArcLabel::Gamma12 | ArcLabel::Gamma21 => ratio_ba(sd, k),
        ArcLabel::RSheet2 => r.eval(C64::new(k.re, 0.0)),
        ArcLabel::GammaBar12 | ArcLabel::GammaBar21 => r.eval(k),
    }
}

/// Points strictly between panel nodes on an arc, log-uniform in |ζ| over the
/// part where data are non-negligible.
pub fn sample_arc(p: &BackgroundParams, label: ArcLabel, n: usize) -> Vec<C64> {
    let (s0, s1) = arc_range(label, 6.0);
    let c = p.arc_curve(label, s0, s1);
    (0..n).map(|i| c.point(s0 + (s1 - s0) * (i as f64 + 0.5 + 0.123) / (n as f64 + 1.0))).collect()
}

/// Builds A from β = b/a in D1 and β = free_ratio in D3.
pub fn construct_pair(sd: Arc<ScatteringData>, free_ratio: RationalFn, params: &BackgroundParams) -> Result<BoundarySpectralPair> {
    for (p, _) in &free_ratio.poles {
        if p.im <= 0.0 {
            return Err(Error::Inadmissible(format!("free ratio has a pole at {p} in the closed lower half-plane (D3 or Σ)")));
        }
    }
    if free_ratio.decay_order() < 1 {
        return Err(Error::Inadmissible("free ratio must be O(1/k) at infinity".into()));
    }
    let labels = ArcLabel::ALL.to_vec();
    if sd.is_trivial() && free_ratio.is_zero() {
        return Ok(BoundarySpectralPair { params: *params, sd, free_ratio, log_disc: None, log_u: Arc::new(Vec::new()), labels });
    }

    // 1 + β β♯ must stay off the negative axis for the principal logarithm.
    for &label in &labels {
        let (s0, s1) = arc_range(label, 8.0);
        let c = params.arc_curve(label, s0, s1);
        for i in 0..=400 {
            let z = c.point(s0 + (s1 - s0) * i as f64 / 400.0);
            let g = ONE + beta_13(&sd, &free_ratio, params, label, z) * beta_13(&sd, &free_ratio, params, conj_label(label), z.conj()).conj();
            if g.norm() < 1e-10 {
                return Err(Error::Inadmissible(format!("1 + ββ♯ vanishes on {} near ζ = {z}", label.name())));
            }
            if g.arg().abs() > 0.9 * PI {
                return Err(Error::IndexObstruction(1, format!("arg(1 + ββ♯) leaves the principal branch on {}", label.name())));
            }
        }
    }

    let arcs: Vec<JumpArc> = labels
        .iter()
        .map(|&label| {
            let (s0, s1) = arc_range(label, S_FAR);
            let curve = params.arc_curve(label, s0, s1);
            let (sd, r, p) = (sd.clone(), free_ratio.clone(), *params);
            let sigma = side_sign(label);
            JumpArc::new(label.name(), curve, move |z| {
                let g = ONE + beta_13(&sd, &r, &p, label, z) * beta_13(&sd, &r, &p, conj_label(label), z.conj()).conj();
                Mat2::diag((-sigma * g.ln()).exp(), ONE)
            })
        })
        .collect();
    let opts = RefineOptions { tol: 1e-12, ..RefineOptions::default() };
    let disc = Discretization::build(&arcs, &opts);
    let mut u = Vec::with_capacity(disc.n_nodes());
    for p in &disc.panels {
        let label = labels[p.arc];
        for z in &p.z {
            let g = ONE + beta_13(&sd, &free_ratio, params, label, *z) * beta_13(&sd, &free_ratio, params, conj_label(label), z.conj()).conj();
            u.push(Mat2::diag(-side_sign(label) * g.ln(), ZERO));
        }
    }
    Ok(BoundarySpectralPair { params: *params, sd, free_ratio, log_disc: Some(Arc::new(disc)), log_u: Arc::new(u), labels })
}

type ScalarFn = Arc<dyn Fn(C64) -> C64 + Send + Sync>;

/// Transition data. `c`, `c_den` take k in the upper half-plane (≅ D2);
/// `r`, `rho` take real k; `s` takes real k; `big_s` and `g` take a point of Σ.
#[derive(Clone)]
pub struct TransitionMatrices {
    pub pair: Option<Arc<BoundarySpectralPair>>,
    pub r: ScalarFn,
    pub rho: ScalarFn,
    pub c: ScalarFn,
    /// An analytic function whose zeros contain the poles of c in D2.
    pub c_den: ScalarFn,
    pub c_poles: Vec<(C64, C64)>,
    sd: Arc<ScatteringData>,
}

impl std::fmt::Debug for TransitionMatrices {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("TransitionMatrices").field("c_poles", &self.c_poles).finish()
    }
}

impl TransitionMatrices {
    /// Transition data from explicit closures (used for synthetic checks).
    pub fn from_parts(r: ScalarFn, rho: ScalarFn, c: ScalarFn, c_den: ScalarFn) -> Self {
        TransitionMatrices { pair: None, r, rho, c, c_den, c_poles: Vec::new(), sd: Arc::new(ScatteringData::trivial()) }
    }

    /// s(k) = [[ā, b], [−b̄, a]] for real k.
    pub fn s(&self, k: f64) -> Mat2 {
        let (a, b) = self.sd.ab(C64::new(k, 0.0));
        Mat2::new(a.conj(), b, -b.conj(), a)
    }

    /// S = [[A♯, B], [−B♯, A]] on an arc of Σ (A, B from the D1/D3 side).
    pub fn big_s(&self, label: ArcLabel, z: C64) -> Mat2 {
        match &self.pair {
            None => Mat2::IDENTITY,
            Some(p) => Mat2::new(p.a_sharp(label, z), p.b_13(label, z), -p.b_sharp(label, z), p.a_13(label, z)),
        }
    }

    /// G = s⁻¹S on a real arc.
    pub fn g(&self, label: ArcLabel, z: C64) -> Result<Mat2> {
        if !matches!(label, ArcLabel::RUpperSheet1 | ArcLabel::RSheet2) {
            return Err(Error::InvalidParams("G is formed on the real arcs".into()));
        }
        let p = self.pair.as_ref().map(|p| p.params).ok_or_else(|| Error::InvalidParams("no pair attached".into()))?;
        let k = p.k_of(z).re;
        Ok(self.s(k).inv() * self.big_s(label, z))
    }

    /// Cauchy-integral analyticity check of c at interior points of D2 (k in the upper half-plane).
    pub fn analyticity_residual(&self, centers: &[C64], radius: f64) -> f64 {
        centers
            .iter()
            .map(|&z0| {
                let ci = crate::quad::circle_integral(z0, radius, 64, |z| (self.c)(z) / (z - z0)) / C64::new(0.0, 2.0 * PI);
                (ci - (self.c)(z0)).norm()
            })
            .fold(0.0, f64::max)
    }
}

/// Transition matrices for a constructed pair; the D2 poles of c are located
/// in the box Re k ∈ [−K, K], Im k ∈ [δ, K] with K = 1 + max(|k_j|, 2‖q₀‖∞ + 2).
pub fn transition(sd: Arc<ScatteringData>, pair: Arc<BoundarySpectralPair>) -> Result<TransitionMatrices> {
    let rf = pair.free_ratio.clone();
    let sd1 = sd.clone();
    let r: ScalarFn = Arc::new(move |k: C64| sd1.r(k.re));
    let sd2 = sd.clone();
    let rf2 = rf.clone();
    let c: ScalarFn = Arc::new(move |k: C64| {
        let rs = rf2.eval_reflected(k);
        if rs == ZERO {
            return ZERO;
        }
        let (a, b) = sd2.ab(k);
        -rs / (a * (a + b * rs))
    });
    let sd3 = sd.clone();
    let rf3 = rf.clone();
    let c_den: ScalarFn = Arc::new(move |k: C64| {
        let (a, b) = sd3.ab(k);
        a * (a + b * rf3.eval_reflected(k))
    });
    // ρ = r + c on the real line (equivalent to G₂₁/G₁₁ by unitarity).
    let (r2, c2) = (r.clone(), c.clone());
    let rho: ScalarFn = Arc::new(move |k: C64| {
        let k = C64::new(k.re, 0.0);
        r2(k) + c2(k)
    });
    let mut tm = TransitionMatrices { pair: Some(pair), r, rho, c, c_den, c_poles: Vec::new(), sd: sd.clone() };
    if !rf.is_zero() && !sd.is_trivial() {
        let kmax = sd.zeros.iter().map(|z| z.norm()).fold(2.0 * sd.datum.sup_norm() + 2.0, f64::max) + 1.0;
        tm.c_poles = pole_inventory(&tm, &SearchBox::new((-kmax, 1.0137 * kmax), (1e-3, kmax)))?;
    }
    Ok(tm)
}

/// Poles z_j of c in the given k-box of D2 with m²_j = −res c, residues by
/// small-circle quadrature.
pub fn pole_inventory(tm: &TransitionMatrices, region: &SearchBox) -> Result<Vec<(C64, C64)>> {
    let den = tm.c_den.clone();
    let f = move |k: C64| den(k);
    let zeros = find_zeros(&f, region)?;
    let mut out = Vec::new();
    for z in zeros {
        if z.im < 1e-8 {
            return Err(Error::PoleOnContour(z));
        }
        let rad = 1e-3 * z.im.min(1.0);
        let res = crate::quad::circle_integral(z, rad, 32, |k| (tm.c)(k)) / C64::new(0.0, 2.0 * PI);
        // Zeros of the denominator that the numerator cancels are not poles.
        let scale = derivative(&f, z, rad).norm().max(1e-300);
        if res.norm() > 1e-12 * (1.0 / scale).max(1.0) {
            out.push((z, -res));
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::xscatter::{scattering_pair, InitialDatum};

    fn params() -> BackgroundParams {
        BackgroundParams::new(1.0, 0.5, 0.2).unwrap()
    }

    #[test]
    fn rational_evaluation_and_decay() {
        let f = RationalFn::two_pole(C64::new(0.5, 0.0), C64::new(1.0, 1.0), C64::new(-1.0, 2.0));
        let k = C64::new(0.3, -0.7);
        let want = 0.5 / ((k - C64::new(1.0, 1.0)) * (k - C64::new(-1.0, 2.0)));
        assert!((f.eval(k) - want).norm() < 1e-14);
        assert_eq!(f.decay_order(), 2);
        assert_eq!(RationalFn::simple(&[(C64::new(0.0, 1.0), ONE)]).decay_order(), 1);
    }

    #[test]
    fn trivial_pair() {
        let p = params();
        let pair = construct_pair(Arc::new(ScatteringData::trivial()), RationalFn::zero(), &p).unwrap();
        assert!(pair.is_trivial());
        let z = C64::new(0.7, 0.4);
        assert_eq!(pair.a_fn(z), ONE);
        assert_eq!(pair.b_fn(z).unwrap(), ZERO);
        let tm = transition(Arc::new(ScatteringData::trivial()), Arc::new(pair)).unwrap();
        assert_eq!((tm.c)(C64::new(0.2, 0.5)), ZERO);
        assert!(tm.c_poles.is_empty());
    }

    #[test]
    fn rejects_pole_in_d3() {
        let p = params();
        let r = RationalFn::simple(&[(C64::new(0.0, -1.0), ONE)]);
        assert!(matches!(construct_pair(Arc::new(ScatteringData::trivial()), r, &p), Err(Error::Inadmissible(_))));
    }

    #[test]
    fn condition_iii_pure_free_ratio() {
        let p = params();
        let r = RationalFn::two_pole(C64::new(0.4, 0.1), C64::new(1.5, 1.0), C64::new(-1.0, 1.5));
        let pair = construct_pair(Arc::new(ScatteringData::trivial()), r, &p).unwrap();
        let res = pair.condition_iii_residual(24);
        assert!(res < 1e-8, "condition (iii) residual {res:e}");
        // A → 1 at ∞₁.
        let z = C64::from_polar(2e3, 0.7);
        assert!((pair.a_fn(z) - 1.0).norm() * pair.params.k_of(z).norm() < 10.0);
    }

    #[test]
    fn condition_iii_with_x_data() {
        let p = params();
        let q = InitialDatum::gaussian(C64::new(0.1, 0.0), 1.0).unwrap();
        let sd = Arc::new(scattering_pair(&q, &[0.0]).unwrap());
        let r = RationalFn::simple(&[(C64::new(-p.b, 2.0), C64::new(0.3, 0.0))]);
        let pair = construct_pair(sd.clone(), r, &p).unwrap();
        let res = pair.condition_iii_residual(16);
        assert!(res < 1e-8, "condition (iii) residual {res:e}");
        assert!(pair.global_relation_residual(50, 7) < 1e-10);
        let pair = Arc::new(pair);
        let tm = transition(sd, pair.clone()).unwrap();
        // ρ = G₂₁/G₁₁ on the sheet-2 real line; c = ρ − r.
        let z = C64::new(-1.3, 0.0);
        let g = tm.g(ArcLabel::RSheet2, z).unwrap();
        let k = p.k_of(z);
        assert!((g.get(1, 0) / g.get(0, 0) - (tm.rho)(k)).norm() < 1e-8);
        assert!(((tm.rho)(k) - (tm.r)(k) - (tm.c)(k)).norm() < 1e-10);
        // det S = 1 on Σ.
        let z = C64::new(0.8, 0.0);
        assert!((tm.big_s(ArcLabel::RUpperSheet1, z).det() - 1.0).norm() < 1e-8);
        // c analytic in D2 (upper half k-plane).
        let res = tm.analyticity_residual(&[C64::new(0.3, 0.8), C64::new(-1.0, 2.5)], 0.2);
        assert!(res < 1e-7, "{res:e}");
    }

    #[test]
    fn inventory_of_synthetic_pole() {
        let zp = C64::new(2.0, 0.5);
        let c: ScalarFn = Arc::new(move |k| 0.7 / (k - zp) + 0.1 / (k + C64::new(0.0, 3.0)));
        let den: ScalarFn = Arc::new(move |k| k - zp);
        let tm = TransitionMatrices::from_parts(c.clone(), c.clone(), c, den.clone());
        let inv = pole_inventory(&tm, &SearchBox::new((-4.0, 4.1), (0.01, 4.0))).unwrap();
        assert_eq!(inv.len(), 1);
        assert!((inv[0].0 - zp).norm() < 1e-10);
        assert!((inv[0].1 + 0.7).norm() < 1e-9);
        // A pole-free perturbation leaves the residue unchanged.
        let c2: ScalarFn = Arc::new(move |k| 0.7 / (k - zp) + 0.1 / (k + C64::new(0.0, 3.0)) + (k * 0.01).exp());
        let tm2 = TransitionMatrices::from_parts(c2.clone(), c2.clone(), c2, den);
        let inv2 = pole_inventory(&tm2, &SearchBox::new((-4.0, 4.1), (0.01, 4.0))).unwrap();
        assert!((inv2[0].1 - inv[0].1).norm() < 1e-9);
    }

    #[test]
    fn trivial_x_data_gives_no_c_poles() {
        let p = params();
        let r = RationalFn::two_pole(ONE, C64::new(1.0, 1.0), C64::new(-1.0, 1.0));
        let pair = Arc::new(construct_pair(Arc::new(ScatteringData::trivial()), r, &p).unwrap());
        let tm = transition(Arc::new(ScatteringData::trivial()), pair).unwrap();
        assert!(tm.c_poles.is_empty());
        let k = C64::new(0.4, 0.9);
        assert!(((tm.c)(k) + RationalFn::two_pole(ONE, C64::new(1.0, 1.0), C64::new(-1.0, 1.0)).eval_reflected(k)).norm() < 1e-15);
    }
}
