//! Panel discretization of the jump contour and Cauchy-integral quadrature.
//!
//! Each arc is split into Gauss–Legendre panels. Cauchy integrals over a panel
//! are evaluated with plain Gauss weights for far targets and with
//! product-integration weights (monomial interpolation in the panel's scaled
//! coordinate) for near targets and for principal values on the panel itself.

use super::problem::{JumpArc, JumpFn};
use crate::contour::Curve;
use crate::linalg;
use crate::mat2::Mat2;
use crate::quad::GaussLegendre;
use num_complex::Complex64 as C64;
use rayon::prelude::*;
use std::f64::consts::PI;

/// Bernstein-ellipse size (|σ−1|+|σ+1|) below which near quadrature is used.
const NEAR_ELLIPSE: f64 = 3.6;

#[derive(Clone, Debug)]
pub struct Panel {
    pub arc: usize,
    pub t0: f64,
    pub t1: f64,
    pub z: Vec<C64>,
    /// Weights for ∫ f dz.
    pub w: Vec<C64>,
    /// Unit tangents at the nodes.
    pub tangent: Vec<C64>,
    pub za: C64,
    pub zb: C64,
    center: C64,
    half: C64,
    sigma: Vec<C64>,
    /// Inverse of the transposed monomial Vandermonde matrix (row-major).
    vt_inv: Vec<C64>,
}

impl Panel {
    fn build(arc: usize, curve: &Curve, t0: f64, t1: f64, gl: &GaussLegendre) -> Panel {
        let n = gl.len();
        let ht = 0.5 * (t1 - t0);
        let ct = 0.5 * (t1 + t0);
        let mut z = Vec::with_capacity(n);
        let mut w = Vec::with_capacity(n);
        let mut tangent = Vec::with_capacity(n);
        for j in 0..n {
            let (p, dp) = curve.eval(ct + ht * gl.nodes[j]);
            z.push(p);
            w.push(dp * (gl.weights[j] * ht));
            tangent.push(dp / dp.norm());
        }
        let za = curve.point(t0);
        let zb = curve.point(t1);
        let center = 0.5 * (za + zb);
        let half = 0.5 * (zb - za);
        let sigma: Vec<C64> = z.iter().map(|p| (p - center) / half).collect();
        let mut vt = vec![C64::new(0.0, 0.0); n * n];
        for k in 0..n {
            for j in 0..n {
                vt[k * n + j] = sigma[j].powu(k as u32);
            }
        }
        let vt_inv = linalg::inverse(n, &vt);
        Panel { arc, t0, t1, z, w, tangent, za, zb, center, half, sigma, vt_inv }
    }

    pub fn len(&self) -> usize {
        self.z.len()
    }

    pub fn is_empty(&self) -> bool {
        self.z.is_empty()
    }

    pub fn chord(&self) -> f64 {
        (self.zb - self.za).norm()
    }

    fn scaled(&self, z: C64) -> C64 {
        (z - self.center) / self.half
    }

    pub fn is_near(&self, z: C64) -> bool {
        let s = self.scaled(z);
        (s - 1.0).norm() + (s + 1.0).norm() < NEAR_ELLIPSE
    }

    /// Weights v with Σ v_j f(z_j) ≈ ∫_panel f(s)/(s − z) ds for z off the panel.
    pub fn near_weights(&self, z: C64) -> Vec<C64> {
        let s0 = self.scaled(z);
        let mut pts = Vec::with_capacity(self.len() + 2);
        pts.push(C64::new(-1.0, 0.0));
        pts.extend_from_slice(&self.sigma);
        pts.push(C64::new(1.0, 0.0));
        let arg = arg_sum(&pts, s0);
        self.weights_from_i0(s0, C64::new(((1.0 - s0).norm() / (1.0 + s0).norm()).ln(), arg))
    }

    /// Principal-value weights at an on-panel point with parameter `tau` ∈ (-1, 1).
    pub fn pv_weights(&self, z: C64, tau: f64, tangent: C64, gl: &GaussLegendre) -> Vec<C64> {
        let s0 = self.scaled(z);
        let t = tangent / self.half;
        let t = t / t.norm();
        let mut before = vec![C64::new(-1.0, 0.0)];
        let mut after = Vec::new();
        for (j, s) in self.sigma.iter().enumerate() {
            if gl.nodes[j] < tau - 1e-14 {
                before.push(*s);
            } else if gl.nodes[j] > tau + 1e-14 {
                after.push(*s);
            }
        }
        after.push(C64::new(1.0, 0.0));
        let mut arg = arg_sum(&before, s0);
        arg += (-t / (before[before.len() - 1] - s0)).arg();
        arg += ((after[0] - s0) / t).arg();
        arg += arg_sum(&after, s0);
        self.weights_from_i0(s0, C64::new(((1.0 - s0).norm() / (1.0 + s0).norm()).ln(), arg))
    }

    fn weights_from_i0(&self, s0: C64, i0: C64) -> Vec<C64> {
        let n = self.len();
        let mut moments = vec![C64::new(0.0, 0.0); n];
        moments[0] = i0;
        for k in 1..n {
            let odd = if k % 2 == 1 { 2.0 / k as f64 } else { 0.0 };
            moments[k] = s0 * moments[k - 1] + odd;
        }
        (0..n).map(|j| (0..n).map(|k| self.vt_inv[j * n + k] * moments[k]).sum()).collect()
    }
}

fn arg_sum(pts: &[C64], s0: C64) -> f64 {
    pts.windows(2).map(|w| ((w[1] - s0) / (w[0] - s0)).arg()).sum()
}

#[derive(Clone, Debug)]
pub struct RefineOptions {
    pub nodes: usize,
    pub min_panels: usize,
    pub tol: f64,
    pub trunc_tol: f64,
    pub max_panels: usize,
}

impl Default for RefineOptions {
    fn default() -> Self {
        RefineOptions { nodes: 16, min_panels: 8, tol: 1e-13, trunc_tol: 1e-16, max_panels: 4000 }
    }
}

/// Discretized contour: panels plus flattened node arrays.
#[derive(Clone)]
pub struct Discretization {
    pub gl: GaussLegendre,
    pub panels: Vec<Panel>,
    pub jumps: Vec<JumpFn>,
    pub curves: Vec<Curve>,
    pub closed: Vec<bool>,
}

impl std::fmt::Debug for Discretization {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "Discretization({} panels, {} nodes)", self.panels.len(), self.n_nodes())
    }
}

impl Discretization {
    pub fn n_nodes(&self) -> usize {
        self.panels.iter().map(|p| p.len()).sum()
    }

    pub fn nodes(&self) -> impl Iterator<Item = (usize, usize, C64)> + '_ {
        self.panels.iter().enumerate().flat_map(|(pi, p)| p.z.iter().enumerate().map(move |(j, z)| (pi, j, *z)))
    }

    /// Builds panels for every arc, refining until jumps and geometry are resolved.
    pub fn build(arcs: &[JumpArc], opts: &RefineOptions) -> Discretization {
        let gl = GaussLegendre::new(opts.nodes);
        let test_tau = [-0.97, -0.83, -0.55, -0.21, 0.13, 0.47, 0.79, 0.95];
        let rows: Vec<Vec<f64>> = test_tau.iter().map(|&t| gl.lagrange_row(t)).collect();

        // Coarse samples of each arc, to resolve proximity between arcs.
        let samples: Vec<Vec<C64>> = arcs
            .iter()
            .map(|a| (0..=256).map(|i| a.curve.point(a.curve.t0 + (a.curve.t1 - a.curve.t0) * i as f64 / 256.0)).collect())
            .collect();

        let per_arc: Vec<Vec<(f64, f64)>> = arcs
            .par_iter()
            .enumerate()
            .map(|(ai, arc)| {
                let c = &arc.curve;
                let np = opts.min_panels.max(arc.min_panels);
                let mut queue: Vec<(f64, f64)> =
                    (0..np).map(|i| (c.t0 + (c.t1 - c.t0) * i as f64 / np as f64, c.t0 + (c.t1 - c.t0) * (i + 1) as f64 / np as f64)).rev().collect();
                let mut done = Vec::new();
                while let Some((a, b)) = queue.pop() {
                    let split = done.len() + queue.len() < opts.max_panels
                        && (b - a) > 1e-9 * (c.t1 - c.t0)
                        && needs_split(arc, &samples, ai, a, b, &gl, &test_tau, &rows, opts.tol);
                    if split {
                        let m = 0.5 * (a + b);
                        queue.push((m, b));
                        queue.push((a, m));
                    } else {
                        done.push((a, b));
                    }
                }
                done.sort_by(|x, y| x.0.partial_cmp(&y.0).unwrap());
                if !arc.closed {
                    let negligible = |&(a, b): &(f64, f64)| {
                        (0..=8).all(|i| (arc.jump)(c.point(a + (b - a) * i as f64 / 8.0)).dist(&Mat2::IDENTITY) < opts.trunc_tol)
                    };
                    while done.first().map_or(false, negligible) {
                        done.remove(0);
                    }
                    while done.last().map_or(false, negligible) {
                        done.pop();
                    }
                }
                done
            })
            .collect();

        let mut panels = Vec::new();
        for (ai, list) in per_arc.iter().enumerate() {
            for &(a, b) in list {
                panels.push((ai, a, b));
            }
        }
        let panels: Vec<Panel> = panels.par_iter().map(|&(ai, a, b)| Panel::build(ai, &arcs[ai].curve, a, b, &gl)).collect();
        Discretization {
            gl,
            panels,
            jumps: arcs.iter().map(|a| a.jump.clone()).collect(),
            curves: arcs.iter().map(|a| a.curve.clone()).collect(),
            closed: arcs.iter().map(|a| a.closed).collect(),
        }
    }

    /// Matrix of the boundary operator C₊ on the nodes (row-major, N×N).
    pub fn cauchy_plus(&self) -> Vec<C64> {
        let n = self.n_nodes();
        let offsets: Vec<usize> = self.panels.iter().scan(0, |acc, p| {
            let o = *acc;
            *acc += p.len();
            Some(o)
        }).collect();
        let targets: Vec<(usize, usize, C64)> = self.nodes().collect();
        let coef = 1.0 / C64::new(0.0, 2.0 * PI);
        let mut mat = vec![C64::new(0.0, 0.0); n * n];
        mat.par_chunks_mut(n).enumerate().for_each(|(row, out)| {
            let (tp, tj, z) = targets[row];
            for (pi, p) in self.panels.iter().enumerate() {
                let off = offsets[pi];
                if pi == tp {
                    let w = p.pv_weights(z, self.gl.nodes[tj], p.tangent[tj], &self.gl);
                    for j in 0..p.len() {
                        out[off + j] = w[j] * coef;
                    }
                    out[off + tj] += 0.5;
                } else if p.is_near(z) {
                    let w = p.near_weights(z);
                    for j in 0..p.len() {
                        out[off + j] = w[j] * coef;
                    }
                } else {
                    for j in 0..p.len() {
                        out[off + j] = p.w[j] / (p.z[j] - z) * coef;
                    }
                }
            }
        });
        mat
    }

    /// Cauchy transform (1/2πi)∫ u(s)/(s − z) ds at an off-contour point.
    pub fn cauchy_at(&self, u: &[Mat2], z: C64) -> Mat2 {
        let coef = 1.0 / C64::new(0.0, 2.0 * PI);
        let mut acc = Mat2::ZERO;
        let mut off = 0;
        for p in &self.panels {
            let w: Vec<C64> = if p.is_near(z) { p.near_weights(z) } else { p.z.iter().zip(&p.w).map(|(s, w)| w / (s - z)).collect() };
            for j in 0..p.len() {
                acc = acc + u[off + j].scale(w[j] * coef);
            }
            off += p.len();
        }
        acc
    }

    /// Panel and local parameter τ ∈ [−1, 1] of a point lying on arc `arc`, if it
    /// falls inside a (non-truncated) panel of that arc.
    pub fn locate(&self, arc: usize, z: C64) -> Option<(usize, f64)> {
        let scale = 1.0 + z.norm();
        for (pi, p) in self.panels.iter().enumerate() {
            if p.arc != arc || !p.is_near(z) {
                continue;
            }
            let curve = &self.curves[arc];
            let (m, h) = (0.5 * (p.t0 + p.t1), 0.5 * (p.t1 - p.t0));
            let j0 = (0..p.len()).min_by(|&i, &j| (p.z[i] - z).norm().partial_cmp(&(p.z[j] - z).norm()).unwrap()).unwrap();
            let mut tau = self.gl.nodes[j0];
            for _ in 0..30 {
                let (zt, dz) = curve.eval(m + h * tau);
                let step = ((zt - z) / (dz * h)).re;
                tau -= step;
                if step.abs() < 1e-15 {
                    break;
                }
            }
            if tau.abs() <= 1.0 + 1e-10 && (curve.point(m + h * tau) - z).norm() < 1e-11 * scale {
                return Some((pi, tau.clamp(-1.0 + 1e-9, 1.0 - 1e-9)));
            }
        }
        None
    }

    /// Boundary value of C[u] from the left (`plus`) or right side at a point of arc `arc`.
    /// Points beyond the truncated ends carry no density and get the plain transform.
    pub fn boundary_value(&self, u: &[Mat2], arc: usize, z: C64, plus: bool) -> Mat2 {
        match self.locate(arc, z) {
            Some((pi, tau)) => {
                let (_, cp, cm) = self.cauchy_boundary(u, pi, tau);
                if plus {
                    cp
                } else {
                    cm
                }
            }
            None => self.cauchy_at(u, z),
        }
    }

    /// Boundary values (C₊u, C₋u) and the point itself at parameter τ of panel `pi`.
    pub fn cauchy_boundary(&self, u: &[Mat2], pi: usize, tau: f64) -> (C64, Mat2, Mat2) {
        let p = &self.panels[pi];
        let curve = &self.curves[p.arc];
        let t = 0.5 * (p.t0 + p.t1) + 0.5 * (p.t1 - p.t0) * tau;
        let (z, dz) = curve.eval(t);
        let coef = 1.0 / C64::new(0.0, 2.0 * PI);
        let mut pv = Mat2::ZERO;
        let mut off = 0;
        let mut u_here = Mat2::ZERO;
        for (qi, q) in self.panels.iter().enumerate() {
            let w: Vec<C64> = if qi == pi {
                let row = self.gl.lagrange_row(tau);
                for j in 0..q.len() {
                    u_here = u_here + u[off + j].scale(C64::new(row[j], 0.0));
                }
                q.pv_weights(z, tau, dz / dz.norm(), &self.gl)
            } else if q.is_near(z) {
                q.near_weights(z)
            } else {
                q.z.iter().zip(&q.w).map(|(s, w)| w / (s - z)).collect()
            };
            for j in 0..q.len() {
                pv = pv + u[off + j].scale(w[j] * coef);
            }
            off += q.len();
        }
        let half = u_here.scale(C64::new(0.5, 0.0));
        (z, pv + half, pv - half)
    }
}

#[allow(clippy::too_many_arguments)]
fn needs_split(arc: &JumpArc, samples: &[Vec<C64>], ai: usize, a: f64, b: f64, gl: &GaussLegendre, test_tau: &[f64], rows: &[Vec<f64>], tol: f64) -> bool {
    let c = &arc.curve;
    let h = 0.5 * (b - a);
    let m = 0.5 * (a + b);
    if h * 2.0 > arc.max_panel_len {
        return true;
    }
    let z: Vec<C64> = gl.nodes.iter().map(|x| c.point(m + h * x)).collect();
    let jn: Vec<Mat2> = z.iter().map(|&p| (arc.jump)(p)).collect();
    let scale = 1.0 + jn.iter().map(|j| j.norm_max()).fold(0.0, f64::max);
    let chord = (c.point(b) - c.point(a)).norm();
    for (k, &tau) in test_tau.iter().enumerate() {
        let row = &rows[k];
        let zt = c.point(m + h * tau);
        let zi: C64 = row.iter().zip(&z).map(|(l, p)| p * *l).sum();
        if (zi - zt).norm() > 1e-13 * (chord + zt.norm()) {
            return true;
        }
        let jt = (arc.jump)(zt);
        let mut ji = Mat2::ZERO;
        for (l, jj) in row.iter().zip(&jn) {
            ji = ji + jj.scale(C64::new(*l, 0.0));
        }
        if ji.dist(&jt) > tol * scale {
            return true;
        }
    }
    // Keep panels no larger than their distance to other arcs.
    let center = c.point(m);
    let d = samples
        .iter()
        .enumerate()
        .filter(|(j, _)| *j != ai)
        .flat_map(|(_, s)| s.iter())
        .map(|s| (s - center).norm())
        .fold(f64::INFINITY, f64::min);
    chord > 1.5 * d && jn.iter().any(|j| j.dist(&Mat2::IDENTITY) > 1e-15)
}
