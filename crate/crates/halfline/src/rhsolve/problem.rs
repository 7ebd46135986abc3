use crate::contour::Curve;
use crate::mat2::Mat2;
use crate::surface::BackgroundParams;
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};
use std::sync::Arc;

pub type JumpFn = Arc<dyn Fn(C64) -> Mat2 + Send + Sync>;

/// An oriented arc with jump M₋ = M₊ J, where + is the left side.
#[derive(Clone)]
pub struct JumpArc {
    pub label: String,
    pub curve: Curve,
    pub jump: JumpFn,
    pub closed: bool,
    pub min_panels: usize,
    pub max_panel_len: f64,
}

impl std::fmt::Debug for JumpArc {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "JumpArc({}, {:?})", self.label, self.curve)
    }
}

impl JumpArc {
    pub fn new<F>(label: impl Into<String>, curve: Curve, jump: F) -> Self
    where
        F: Fn(C64) -> Mat2 + Send + Sync + 'static,
    {
        JumpArc { label: label.into(), curve, jump: Arc::new(jump), closed: false, min_panels: 1, max_panel_len: f64::INFINITY }
    }

    pub fn closed(mut self) -> Self {
        self.closed = true;
        self
    }

    pub fn with_panels(mut self, min_panels: usize, max_panel_len: f64) -> Self {
        self.min_panels = min_panels;
        self.max_panel_len = max_panel_len;
        self
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum PoleColumn {
    /// res_p M₁ = coeff · M₂(p)
    First,
    /// res_p M₂ = coeff · M₁(p)
    Second,
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct PoleCondition {
    pub point: C64,
    pub column: PoleColumn,
    pub coeff: C64,
}

/// Independent variable of the problem: the spectral plane itself, or the
/// uniformizing coordinate ζ of the genus-zero surface.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub enum Plane {
    K,
    Zeta(BackgroundParams),
}

#[derive(Clone, Debug)]
pub struct RHProblem {
    pub plane: Plane,
    pub arcs: Vec<JumpArc>,
    pub poles: Vec<PoleCondition>,
}

impl RHProblem {
    pub fn new(plane: Plane) -> Self {
        RHProblem { plane, arcs: Vec::new(), poles: Vec::new() }
    }

    pub fn with_arc(mut self, arc: JumpArc) -> Self {
        self.arcs.push(arc);
        self
    }

    pub fn with_pole(mut self, pole: PoleCondition) -> Self {
        self.poles.push(pole);
        self
    }

    /// Largest |det J − 1| over `n` samples per arc.
    pub fn det_defect(&self, n: usize) -> f64 {
        self.arcs
            .iter()
            .flat_map(|a| {
                (0..=n).map(move |i| {
                    let z = a.curve.point(a.curve.t0 + (a.curve.t1 - a.curve.t0) * i as f64 / n as f64);
                    ((a.jump)(z).det() - 1.0).norm()
                })
            })
            .fold(0.0, f64::max)
    }

    /// Minimum distance from `z` to the arcs, estimated from `n` samples per arc.
    pub fn distance_to_contour(&self, z: C64, n: usize) -> f64 {
        self.arcs
            .iter()
            .flat_map(|a| (0..=n).map(move |i| a.curve.point(a.curve.t0 + (a.curve.t1 - a.curve.t0) * i as f64 / n as f64)))
            .map(|p| (p - z).norm())
            .fold(f64::INFINITY, f64::min)
    }

    /// JSON dump of arcs (sampled jumps) and poles.
    pub fn dump(&self, samples_per_arc: usize) -> serde_json::Value {
        let arcs: Vec<_> = self
            .arcs
            .iter()
            .map(|a| {
                let pts: Vec<_> = (0..=samples_per_arc)
                    .map(|i| {
                        let t = a.curve.t0 + (a.curve.t1 - a.curve.t0) * i as f64 / samples_per_arc as f64;
                        let z = a.curve.point(t);
                        serde_json::json!({"t": t, "z": [z.re, z.im], "jump": (a.jump)(z)})
                    })
                    .collect();
                serde_json::json!({"label": a.label, "closed": a.closed, "samples": pts})
            })
            .collect();
        serde_json::json!({"plane": self.plane, "arcs": arcs, "poles": self.poles})
    }
}

/// Converts residue data for a pole condition from k to ζ: res_ζ = res_k / (dk/dζ).
pub fn pole_in_zeta(params: &BackgroundParams, zeta: C64, column: PoleColumn, coeff_k: C64) -> PoleCondition {
    PoleCondition { point: zeta, column, coeff: coeff_k / params.dk_dzeta(zeta) }
}

pub fn identity_jump() -> impl Fn(C64) -> Mat2 + Send + Sync + 'static {
    |_| Mat2::IDENTITY
}
