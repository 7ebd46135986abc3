//! Assembly of the (x,t) problem and of the x = 0 t-problem on Σ, both posed in
//! the uniformizing variable ζ.
//!
//! Arcs are oriented by increasing s = ln|ζ|, so the left (+) sides are
//! R^upper: D1, R^lower: D3, Γ: D2, Γ̄: D4. Jumps whose natural + side is the
//! other one are inverted before they are handed to the solver.

use super::problem::{pole_in_zeta, JumpArc, Plane, PoleColumn, RHProblem};
use super::solver::{regularize_poles, solve, RHSolution, SolveOptions};
use crate::error::{Error, Result};
use crate::mat2::{Mat2, I, ONE, ZERO};
use crate::surface::{ArcLabel, BackgroundParams, Region, Sheet, SurfacePoint};
use crate::tdata::{arc_range, conj_label, BoundarySpectralPair, TransitionMatrices, S_FAR};
use crate::xscatter::ScatteringData;
use num_complex::Complex64 as C64;
use std::sync::Arc;

/// Tail coefficients below this are treated as absent.
const TAIL_NEGLIGIBLE: f64 = 1e-15;

/// e^{2i(kx + (Ω − ω)t)} at ζ.
pub fn phase(params: &BackgroundParams, z: C64, x: f64, t: f64) -> C64 {
    let k = params.k_of(z);
    (I * 2.0 * (k * x + (params.omega_of(z) - params.omega) * t)).exp()
}

/// Region on the + side of each arc in the t-problem.
pub fn t_plus_region(label: ArcLabel) -> Region {
    match label {
        ArcLabel::RUpperSheet1 => Region::D4,
        ArcLabel::RSheet2 => Region::D3,
        ArcLabel::Gamma12 | ArcLabel::Gamma21 => Region::D1,
        ArcLabel::GammaBar12 | ArcLabel::GammaBar21 => Region::D3,
    }
}

/// Region on the left of an arc oriented by increasing s.
pub fn left_region(label: ArcLabel) -> Region {
    match label {
        ArcLabel::RUpperSheet1 => Region::D1,
        ArcLabel::RSheet2 => Region::D3,
        ArcLabel::Gamma12 | ArcLabel::Gamma21 => Region::D2,
        ArcLabel::GammaBar12 | ArcLabel::GammaBar21 => Region::D4,
    }
}

/// J^{(t)} = [[1, β e⁻¹], [β♯ e, 1 + β β♯]] with + side `t_plus_region(label)`.
pub fn t_jump(pair: &BoundarySpectralPair, label: ArcLabel, z: C64, t: f64) -> Mat2 {
    let e = phase(&pair.params, z, 0.0, t);
    let beta = pair.beta_13(label, z);
    let sharp = pair.beta_sharp(label, z);
    Mat2::new(ONE, beta / e, sharp * e, ONE + beta * sharp)
}

/// x-problem jump with + side the upper half k-plane: L(−ρe)·U(−ρ̄e⁻¹).
fn real_line_jump(rho: C64, e: C64) -> Mat2 {
    Mat2::lower(-rho * e) * Mat2::upper(-rho.conj() / e)
}

/// Jump of the (x,t) problem in the solver's orientation.
pub fn xt_jump(tm: &TransitionMatrices, params: &BackgroundParams, label: ArcLabel, z: C64, x: f64, t: f64) -> Mat2 {
    let e = phase(params, z, x, t);
    let k = params.k_of(z);
    match label {
        ArcLabel::RUpperSheet1 => real_line_jump((tm.r)(k), e),
        ArcLabel::RSheet2 => real_line_jump((tm.rho)(k), e).inv(),
        // M_{D1} = M_{D2} L(−c e); D2 is on the left.
        ArcLabel::Gamma12 | ArcLabel::Gamma21 => Mat2::lower(-(tm.c)(k) * e),
        // M_{D4} = M_{D3} U(c̄ e⁻¹); D3 is on the right.
        ArcLabel::GammaBar12 | ArcLabel::GammaBar21 => Mat2::upper((tm.c)(k.conj()).conj() / e).inv(),
    }
}

fn has_tail(sd: &ScatteringData) -> bool {
    !sd.is_trivial() && sd.r_tail.coeffs.iter().any(|c| c.norm() > TAIL_NEGLIGIBLE)
}

/// ζ in D1 (or D2) above a point k of the upper half-plane.
pub fn zeta_in(params: &BackgroundParams, k: C64, region: Region) -> Result<C64> {
    for sheet in [Sheet::One, Sheet::Two] {
        let z = params.zeta_of(SurfacePoint::new(k, sheet));
        if params.region_of_zeta(z) == region {
            return Ok(z);
        }
    }
    Err(Error::PoleOnContour(k))
}

/// Pole conditions of the (x,t) problem: zeros k_j of a in D1 with res M₁ = i m¹_j e M₂,
/// poles z_j of c in D2 with res M₁ = (res c) e M₂ = −m²_j e M₂, and their conjugates.
pub fn xt_poles(sd: &ScatteringData, tm: &TransitionMatrices, params: &BackgroundParams, x: f64, t: f64) -> Result<Vec<super::problem::PoleCondition>> {
    let mut list: Vec<(C64, C64)> = Vec::new();
    for (kj, mj) in sd.zeros.iter().zip(&sd.norming) {
        list.push((zeta_in(params, *kj, Region::D1)?, I * mj));
    }
    // In D2 the zeros of a are cancelled by poles of c unless R*(k_j) = 0; the
    // net coefficient is i m¹ + res c.
    let mut d2: Vec<(C64, C64)> = tm.c_poles.iter().map(|&(z, m2)| (z, -m2)).collect();
    for (kj, mj) in sd.zeros.iter().zip(&sd.norming) {
        match d2.iter_mut().find(|(z, _)| (z - kj).norm() < 1e-7) {
            Some(entry) => entry.1 += I * mj,
            None => d2.push((*kj, I * mj)),
        }
    }
    for (k, coeff) in d2 {
        if coeff.norm() > 1e-10 {
            list.push((zeta_in(params, k, Region::D2)?, coeff));
        }
    }
    let mut out = Vec::new();
    for (z, coeff) in list {
        let c = coeff * phase(params, z, x, t);
        out.push(pole_in_zeta(params, z, PoleColumn::First, c));
        out.push(pole_in_zeta(params, z.conj(), PoleColumn::Second, -c.conj()));
    }
    Ok(out)
}

/// The (x,t) problem. For t = 0 the slowly decaying part r_tail of the
/// reflection coefficient is removed analytically (M ↦ M L(−r_tail e) above the
/// real axis, M ↦ M U(r̄_tail e⁻¹) below), which leaves the 1/k coefficient
/// above the axis unchanged; for t > 0 such data are rejected.
pub fn assemble_xt(sd: &Arc<ScatteringData>, tm: &TransitionMatrices, x: f64, t: f64) -> Result<RHProblem> {
    if x < 0.0 || t < 0.0 {
        return Err(Error::InvalidParams(format!("(x, t) = ({x}, {t}) outside the quarter plane")));
    }
    let params = tm.pair.as_ref().map(|p| p.params).ok_or_else(|| Error::InvalidParams("transition data carry no pair".into()))?;
    let subtract = has_tail(sd);
    if subtract && t > 0.0 {
        return Err(Error::Inadmissible("r(k) decays only like 1/k; (x,t) problems with t > 0 need r = O(1/k²)".into()));
    }
    let mut prob = RHProblem::new(Plane::Zeta(params));
    for &label in &ArcLabel::ALL {
        let (s0, s1) = arc_range(label, S_FAR);
        let curve = params.arc_curve(label, s0, s1);
        let tm2 = tm.clone();
        let sd2 = sd.clone();
        let real = matches!(label, ArcLabel::RUpperSheet1 | ArcLabel::RSheet2);
        let arc = JumpArc::new(label.name(), curve, move |z| {
            if subtract && real {
                let k = params.k_of(z);
                let e = phase(&params, z, x, t);
                let tail = sd2.r_tail.eval(k);
                let rho = if label == ArcLabel::RSheet2 { (tm2.rho)(k) } else { (tm2.r)(k) };
                let j = real_line_jump(rho - tail, e);
                if label == ArcLabel::RSheet2 { j.inv() } else { j }
            } else {
                xt_jump(&tm2, &params, label, z, x, t)
            }
        });
        prob = prob.with_arc(arc);
    }
    for p in xt_poles(sd, tm, &params, x, t)? {
        prob = prob.with_pole(p);
    }
    Ok(prob)
}

/// q(x, t) from the (x,t) problem, with residue conditions moved onto small circles.
pub fn solve_xt(sd: &Arc<ScatteringData>, tm: &TransitionMatrices, x: f64, t: f64, opts: &SolveOptions) -> Result<RHSolution> {
    let prob = assemble_xt(sd, tm, x, t)?;
    let prob = if prob.poles.is_empty() { prob } else { regularize_poles(&prob, 0.1)? };
    solve(&prob, opts)
}

/// The t-problem M^{(t)}₋ = M^{(t)}₊ J^{(t)} on Σ.
pub fn assemble_t(pair: &Arc<BoundarySpectralPair>, t: f64) -> Result<RHProblem> {
    if t < 0.0 {
        return Err(Error::InvalidParams(format!("t = {t} < 0")));
    }
    let params = pair.params;
    let mut prob = RHProblem::new(Plane::Zeta(params));
    for &label in &ArcLabel::ALL {
        let (s0, s1) = arc_range(label, S_FAR);
        let curve = params.arc_curve(label, s0, s1);
        // A on Σ: A A♯ = 1/(1 + β β♯) must stay away from zero.
        for i in 0..=64 {
            let z = curve.point(s0 + (s1 - s0) * i as f64 / 64.0);
            let g = ONE + pair.beta_13(label, z) * pair.beta_sharp(label, z);
            if !(g.norm() < 1e10) {
                return Err(Error::Inadmissible(format!("A vanishes on {} near ζ = {z}", label.name())));
            }
        }
        let flip = t_plus_region(label) != left_region(label);
        let p2 = pair.clone();
        prob = prob.with_arc(JumpArc::new(label.name(), curve, move |z| {
            let j = t_jump(&p2, label, z, t);
            if flip { j.inv() } else { j }
        }));
    }
    Ok(prob)
}

/// Checks the conjugation symmetry J(ζ̄) = σ₂ conj(J(ζ))⁻¹ σ₂ of the t-problem
/// jumps across conjugate arcs; returns the largest defect over the samples.
pub fn t_symmetry_defect(pair: &BoundarySpectralPair, t: f64, per_arc: usize) -> f64 {
    let sigma2 = Mat2::new(ZERO, -I, I, ZERO);
    let mut sup = 0.0f64;
    for &label in &ArcLabel::ALL {
        for z in crate::tdata::sample_arc(&pair.params, label, per_arc) {
            let j = t_jump(pair, label, z, t);
            let jc = t_jump(pair, conj_label(label), z.conj(), t);
            let conj = Mat2::new(jc.get(0, 0).conj(), jc.get(0, 1).conj(), jc.get(1, 0).conj(), jc.get(1, 1).conj());
            sup = sup.max((sigma2 * conj * sigma2 * j - Mat2::IDENTITY).norm_max());
        }
    }
    sup
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rhsolve::{recover_q, regularize_poles, solve, SolveOptions};
    use crate::tdata::{construct_pair, transition, RationalFn};
    use crate::xscatter::{scattering_pair, InitialDatum};

    fn params() -> BackgroundParams {
        BackgroundParams::new(1.0, 0.9, 0.3).unwrap()
    }

    fn free_pair() -> Arc<BoundarySpectralPair> {
        let r = RationalFn::two_pole(C64::new(0.3, 0.1), C64::new(1.0, 1.5), C64::new(-0.5, 2.0));
        Arc::new(construct_pair(Arc::new(ScatteringData::trivial()), r, &params()).unwrap())
    }

    #[test]
    fn trivial_data_give_identity_jumps() {
        let p = params();
        let sd = Arc::new(ScatteringData::trivial());
        let pair = Arc::new(construct_pair(sd.clone(), RationalFn::zero(), &p).unwrap());
        let tm = transition(sd.clone(), pair.clone()).unwrap();
        let prob = assemble_xt(&sd, &tm, 0.7, 1.3).unwrap();
        assert!(prob.poles.is_empty());
        let probt = assemble_t(&pair, 2.0).unwrap();
        for a in prob.arcs.iter().chain(&probt.arcs) {
            for i in 0..=20 {
                let z = a.curve.point(a.curve.t0 + (a.curve.t1 - a.curve.t0) * i as f64 / 20.0);
                assert!((a.jump)(z).dist(&Mat2::IDENTITY) < 1e-15);
            }
        }
    }

    #[test]
    fn t_jump_has_unit_determinant_and_symmetry() {
        let pair = free_pair();
        let prob = assemble_t(&pair, 0.5).unwrap();
        assert!(prob.det_defect(200) < 1e-10);
        assert!(t_symmetry_defect(&pair, 0.5, 30) < 1e-12);
    }

    #[test]
    fn t_jump_decays_like_the_phase() {
        let pair = free_pair();
        let p = pair.params;
        // A point on Γ̄ where Im Ω = 0 keeps |e| = 1; off Σ the factor is e^{−2 Im Ω t}.
        let z = p.arc_curve(ArcLabel::GammaBar12, 0.0, 3.0).point(0.7);
        let j0 = t_jump(&pair, ArcLabel::GammaBar12, z, 0.0);
        let j10 = t_jump(&pair, ArcLabel::GammaBar12, z, 10.0);
        assert!((j0.get(0, 1).norm() - j10.get(0, 1).norm()).abs() < 1e-12);
        let w = C64::new(0.8, 0.9);
        let decay = phase(&p, w, 0.0, 10.0).norm();
        assert!((decay - (-2.0 * p.omega_of(w).im * 10.0).exp()).abs() < 1e-12 * decay.max(1e-300));
        // On the real arcs |e| = 1.
        for s in [-2.0, -0.3, 0.4, 1.7] {
            for label in [ArcLabel::RUpperSheet1, ArcLabel::RSheet2] {
                let z = p.arc_curve(label, -3.0, 3.0).point(s);
                assert!((phase(&p, z, 1.3, 10.0).norm() - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn xt_jumps_have_unit_determinant() {
        let p = params();
        let q = InitialDatum::gaussian(C64::new(0.1, 0.05), 1.0).unwrap();
        let sd = Arc::new(scattering_pair(&q, &[0.0]).unwrap());
        let r = RationalFn::simple(&[(C64::new(-p.b, 2.0), C64::new(0.3, 0.0))]);
        let pair = Arc::new(construct_pair(sd.clone(), r, &p).unwrap());
        let tm = transition(sd.clone(), pair).unwrap();
        let prob = assemble_xt(&sd, &tm, 0.5, 0.0).unwrap();
        assert!(prob.det_defect(100) < 1e-10);
        assert!(matches!(assemble_xt(&sd, &tm, 0.5, 1.0), Err(Error::Inadmissible(_))));
    }

    #[test]
    fn x_zero_reduction_on_gamma_arcs() {
        // Zero x-data: on Γ ∪ Γ̄ the two problems differ by σ₃ conjugation
        // (c = −β♯ there).
        let pair = free_pair();
        let p = pair.params;
        let sd = Arc::new(ScatteringData::trivial());
        let tm = transition(sd, pair.clone()).unwrap();
        let s3 = Mat2::diag(ONE, -ONE);
        let t = 0.8;
        for label in [ArcLabel::Gamma12, ArcLabel::Gamma21, ArcLabel::GammaBar12, ArcLabel::GammaBar21] {
            for z in crate::tdata::sample_arc(&p, label, 12) {
                let jt = t_jump(&pair, label, z, t);
                let jt = if t_plus_region(label) != left_region(label) { jt.inv() } else { jt };
                let jx = xt_jump(&tm, &p, label, z, 0.0, t);
                assert!(jx.dist(&(s3 * jt * s3)) < 1e-10, "{label:?} at {z}");
            }
        }
    }

    #[test]
    fn soliton_on_the_half_line_at_t_zero() {
        // A sech soliton centred far from the boundary: the (x,0) problem
        // carries one pole pair and tiny reflection.
        let p = params();
        let (eta, x0, eps) = (0.5, 12.0, 0.4);
        let q = InitialDatum::sech(eta, x0, eps).unwrap();
        let sd = Arc::new(scattering_pair(&q, &[0.0]).unwrap());
        assert_eq!(sd.zeros.len(), 1);
        let pair = Arc::new(construct_pair(sd.clone(), RationalFn::zero(), &p).unwrap());
        let tm = transition(sd.clone(), pair).unwrap();
        for x in [10.5, 12.0] {
            let prob = regularize_poles(&assemble_xt(&sd, &tm, x, 0.0).unwrap(), 0.1).unwrap();
            let sol = solve(&prob, &SolveOptions::default()).unwrap();
            let got = recover_q(&sol);
            let want = q.eval(x);
            assert!((got - want).norm() < 1e-7, "x = {x}: {got} vs {want}");
        }
    }
}
