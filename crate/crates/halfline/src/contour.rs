//! Parametrized curves in the uniformizing plane.

use num_complex::Complex64 as C64;
use std::f64::consts::PI;
use std::sync::Arc;

type CurveFn = dyn Fn(f64) -> (C64, C64) + Send + Sync;

/// A smooth oriented curve t ↦ (z(t), z'(t)) for t ∈ [t0, t1].
#[derive(Clone)]
pub struct Curve {
    map: Arc<CurveFn>,
    pub t0: f64,
    pub t1: f64,
}

impl std::fmt::Debug for Curve {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "Curve[{} → {}]", self.point(self.t0), self.point(self.t1))
    }
}

impl Curve {
    pub fn new<F>(t0: f64, t1: f64, f: F) -> Self
    where
        F: Fn(f64) -> (C64, C64) + Send + Sync + 'static,
    {
        Curve { map: Arc::new(f), t0, t1 }
    }

    pub fn segment(a: C64, b: C64) -> Self {
        Curve::new(0.0, 1.0, move |t| (a + (b - a) * t, b - a))
    }

    /// Counterclockwise circle.
    pub fn circle(center: C64, radius: f64) -> Self {
        Curve::new(0.0, 2.0 * PI, move |t| {
            let e = C64::from_polar(1.0, t);
            (center + e * radius, C64::new(0.0, radius) * e)
        })
    }

    /// Ray z = origin + e^{iφ}·ρ(τ) with ρ = e^τ − 1, from near origin outwards.
    pub fn ray(origin: C64, angle: f64, tau0: f64, tau1: f64) -> Self {
        let d = C64::from_polar(1.0, angle);
        Curve::new(tau0, tau1, move |t| (origin + d * (t.exp() - 1.0), d * t.exp()))
    }

    pub fn eval(&self, t: f64) -> (C64, C64) {
        (self.map)(t)
    }

    pub fn point(&self, t: f64) -> C64 {
        (self.map)(t).0
    }

    pub fn start(&self) -> C64 {
        self.point(self.t0)
    }

    pub fn end(&self) -> C64 {
        self.point(self.t1)
    }

    pub fn reversed(&self) -> Curve {
        let m = self.map.clone();
        let (t0, t1) = (self.t0, self.t1);
        Curve::new(-t1, -t0, move |t| {
            let (z, dz) = m(-t);
            (z, -dz)
        })
    }

    /// Image under a holomorphic map with derivative.
    pub fn mapped<G>(&self, g: G) -> Curve
    where
        G: Fn(C64) -> (C64, C64) + Send + Sync + 'static,
    {
        let m = self.map.clone();
        Curve::new(self.t0, self.t1, move |t| {
            let (z, dz) = m(t);
            let (w, dw) = g(z);
            (w, dw * dz)
        })
    }

    pub fn restricted(&self, t0: f64, t1: f64) -> Curve {
        Curve { map: self.map.clone(), t0, t1 }
    }

    /// Complex conjugate curve, same orientation in parameter.
    pub fn conjugated(&self) -> Curve {
        let m = self.map.clone();
        Curve::new(self.t0, self.t1, move |t| {
            let (z, dz) = m(t);
            (z.conj(), dz.conj())
        })
    }
}
