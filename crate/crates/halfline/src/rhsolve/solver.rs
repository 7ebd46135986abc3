use super::discretize::{Discretization, RefineOptions};
use super::problem::{JumpArc, Plane, PoleColumn, RHProblem};
use crate::contour::Curve;
use crate::error::{Error, Result};
use crate::linalg::{self, from_f};
use crate::mat2::{Mat2, I, ZERO};
use num_complex::Complex64 as C64;
use std::f64::consts::PI;
use std::sync::Arc;

#[derive(Clone, Debug)]
pub struct SolveOptions {
    pub refine: RefineOptions,
    /// Accepted jump defect at check points.
    pub defect_tol: f64,
    pub max_condition: f64,
    /// Check the defect and det M after solving.
    pub verify: bool,
    /// Largest dense system attempted.
    pub max_nodes: usize,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions { refine: RefineOptions::default(), defect_tol: 1e-8, max_condition: 1e12, verify: true, max_nodes: 12_000 }
    }
}

impl SolveOptions {
    pub fn with_panels(n_per_arc: usize) -> Self {
        let mut o = SolveOptions::default();
        o.refine.min_panels = n_per_arc;
        o
    }
}

#[derive(Clone, Debug)]
pub struct RHSolution {
    pub plane: Plane,
    pub disc: Arc<Discretization>,
    /// Density u = M₊ − M₋ at the nodes.
    pub u: Vec<Mat2>,
    /// Coefficients of 1/k and 1/k² at ∞₁ (k-plane normalization).
    pub m1: Mat2,
    pub m2: Mat2,
    /// Same coefficients in the native variable of the problem.
    pub y1: Mat2,
    pub y2: Mat2,
    pub residual: f64,
    pub det_defect: f64,
    pub condition: f64,
}

impl RHSolution {
    pub fn n_nodes(&self) -> usize {
        self.u.len()
    }

    /// M at a point off the contour, in the native variable.
    pub fn eval(&self, z: C64) -> Mat2 {
        Mat2::IDENTITY + self.disc.cauchy_at(&self.u, z)
    }

    /// Boundary values (z, M₊, M₋) at parameter τ ∈ (−1,1) of panel `pi`.
    pub fn boundary(&self, pi: usize, tau: f64) -> (C64, Mat2, Mat2) {
        let (z, cp, cm) = self.disc.cauchy_boundary(&self.u, pi, tau);
        (z, Mat2::IDENTITY + cp, Mat2::IDENTITY + cm)
    }

    /// Sup of ‖M₋ − M₊J‖ over off-node check points.
    pub fn jump_defect(&self) -> f64 {
        let mut sup = 0.0f64;
        for pi in 0..self.disc.panels.len() {
            let arc = self.disc.panels[pi].arc;
            for tau in [-0.61, 0.37] {
                let (z, mp, mm) = self.boundary(pi, tau);
                let j = (self.disc.jumps[arc])(z);
                sup = sup.max(mm.dist(&(mp * j)));
            }
        }
        sup
    }

    /// Sup of |det M − 1| at points offset from every panel on both sides.
    pub fn det_check(&self) -> f64 {
        let mut sup = 0.0f64;
        for p in self.disc.panels.iter().step_by(3) {
            let mid = p.len() / 2;
            let d = p.tangent[mid] * I * (0.3 * p.chord());
            for z in [p.z[mid] + d, p.z[mid] - d] {
                if self.disc.panels.iter().all(|q| q.z.iter().all(|s| (s - z).norm() > 0.05 * p.chord())) {
                    sup = sup.max((self.eval(z).det() - 1.0).norm());
                }
            }
        }
        sup
    }

    /// CSV of nodes and boundary values M₊, M₋.
    pub fn write_csv<W: std::io::Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "panel,re_z,im_z,entry,re_mplus,im_mplus,re_mminus,im_mminus")?;
        for pi in 0..self.disc.panels.len() {
            for (j, tau) in self.disc.gl.nodes.iter().enumerate().step_by(4) {
                let (z, mp, mm) = self.boundary(pi, *tau);
                let _ = j;
                for (e, (a, b)) in [(0, 0), (0, 1), (1, 0), (1, 1)].iter().enumerate() {
                    let (x, y) = (mp.get(*a, *b), mm.get(*a, *b));
                    writeln!(w, "{pi},{:.15e},{:.15e},{e},{:.15e},{:.15e},{:.15e},{:.15e}", z.re, z.im, x.re, x.im, y.re, y.im)?;
                }
            }
        }
        Ok(())
    }

    pub fn summary_json(&self) -> serde_json::Value {
        serde_json::json!({"M1": self.m1, "M2": self.m2, "residual": self.residual, "det_defect": self.det_defect, "nodes": self.n_nodes()})
    }
}

/// Solves a problem without pole conditions by Nyström collocation of
/// u = (I + C₊u)(I − J).
pub fn solve(prob: &RHProblem, opts: &SolveOptions) -> Result<RHSolution> {
    if !prob.poles.is_empty() {
        return Err(Error::InvalidParams("regularize pole conditions before solving".into()));
    }
    let disc = Arc::new(Discretization::build(&prob.arcs, &opts.refine));
    let n = disc.n_nodes();
    if n > opts.max_nodes {
        return Err(Error::NodeLimit { needed: n, limit: opts.max_nodes });
    }
    let coef = -1.0 / C64::new(0.0, 2.0 * PI);
    let (u, condition) = if n == 0 {
        (Vec::new(), 1.0)
    } else {
        let mut m = Vec::with_capacity(n);
        for p in &disc.panels {
            for z in &p.z {
                m.push(Mat2::IDENTITY - (disc.jumps[p.arc])(*z));
            }
        }
        let kc = disc.cauchy_plus();
        let a = linalg::mat_from_fn(2 * n, 2 * n, |r, c| {
            let (j, nn) = (r / n, r % n);
            let (i, mm) = (c / n, c % n);
            let d = if r == c { C64::new(1.0, 0.0) } else { ZERO };
            d - m[nn].get(i, j) * kc[nn * n + mm]
        });
        let b = linalg::mat_from_fn(2 * n, 2, |r, p| m[r % n].get(p, r / n));
        let (x, cond) = linalg::solve_with_condition(&a, &b);
        let u = (0..n)
            .map(|nn| {
                Mat2::new(from_f(x.read(nn, 0)), from_f(x.read(n + nn, 0)), from_f(x.read(nn, 1)), from_f(x.read(n + nn, 1)))
            })
            .collect();
        (u, cond)
    };
    if condition > opts.max_condition {
        return Err(Error::Conditioning(condition));
    }
    let mut y1 = Mat2::ZERO;
    let mut y2 = Mat2::ZERO;
    let mut off = 0;
    for p in &disc.panels {
        for j in 0..p.len() {
            y1 = y1 + u[off + j].scale(p.w[j] * coef);
            y2 = y2 + u[off + j].scale(p.w[j] * p.z[j] * coef);
        }
        off += p.len();
    }
    let (m1, m2) = match prob.plane {
        Plane::K => (y1, y2),
        Plane::Zeta(bg) => (y1.scale((0.5 * bg.a).into()), y1.scale((-0.5 * bg.a * bg.b).into()) + y2.scale((0.25 * bg.a * bg.a).into())),
    };
    let mut sol = RHSolution { plane: prob.plane, disc, u, m1, m2, y1, y2, residual: 0.0, det_defect: 0.0, condition };
    if opts.verify && n > 0 {
        sol.residual = sol.jump_defect();
        sol.det_defect = sol.det_check();
        if !(sol.residual <= opts.defect_tol) {
            return Err(Error::NonConvergence(sol.residual));
        }
    }
    Ok(sol)
}

/// Replaces each pole condition by a jump on a small counterclockwise circle.
/// The radius is `factor` times the distance from the pole to the contour.
pub fn regularize_poles(prob: &RHProblem, factor: f64) -> Result<RHProblem> {
    let mut out = RHProblem { plane: prob.plane, arcs: prob.arcs.clone(), poles: Vec::new() };
    let mut circles: Vec<(C64, f64)> = Vec::new();
    for pole in &prob.poles {
        let d = prob.distance_to_contour(pole.point, 4000);
        if d < 1e-8 {
            return Err(Error::PoleOnContour(pole.point));
        }
        let mut r = if d.is_finite() { factor * d } else { factor };
        let mut tries = 0;
        while circles.iter().any(|(c, rc)| (c - pole.point).norm() < 1.5 * (r + rc)) {
            r *= 0.5;
            tries += 1;
            if tries > 6 {
                return Err(Error::InvalidParams(format!("pole circles around {} overlap", pole.point)));
            }
        }
        circles.push((pole.point, r));
        let (p, c, column) = (pole.point, pole.coeff, pole.column);
        let jump = move |z: C64| match column {
            PoleColumn::First => Mat2::lower(c / (z - p)),
            PoleColumn::Second => Mat2::upper(c / (z - p)),
        };
        out.arcs.push(JumpArc::new(format!("loop@{p}"), Curve::circle(p, r), jump).closed().with_panels(4, 2.0));
    }
    Ok(out)
}

/// q = 2i (M₁)₁₂.
pub fn recover_q(sol: &RHSolution) -> C64 {
    I * 2.0 * sol.m1.get(0, 1)
}

/// q_x(0,t) = 4 (M₂)₁₂ + 2i q(0,t) (M₁)₂₂.
pub fn recover_qx_boundary(sol: &RHSolution, q0t: C64) -> Result<C64> {
    if !sol.m2.0.iter().flatten().all(|z| z.re.is_finite() && z.im.is_finite()) {
        return Err(Error::MomentOrder);
    }
    Ok(sol.m2.get(0, 1) * 4.0 + I * 2.0 * q0t * sol.m1.get(1, 1))
}
