use halfline::error::{Error, Result};
use halfline::exact::BreatherParams;
use halfline::rhsolve::SolveOptions;
use halfline::surface::BackgroundParams;
use halfline::tdata::RationalFn;
use halfline::xscatter::InitialDatum;
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};
use std::path::Path;

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Background {
    pub a: f64,
    pub omega: f64,
    #[serde(default)]
    pub epsilon: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum DatumSpec {
    Zero,
    Sech { eta: f64, x0: f64, #[serde(default)] epsilon: f64 },
    Gaussian { amp: C64, width: f64 },
    /// CSV with columns x, re_q, im_q (header line optional).
    Samples { path: String },
}

impl Default for DatumSpec {
    fn default() -> Self {
        DatumSpec::Zero
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverSpec {
    pub n_per_arc: usize,
    pub defect_tol: f64,
    pub refine_tol: f64,
    pub trunc_tol: f64,
}

impl Default for SolverSpec {
    fn default() -> Self {
        let d = SolveOptions::default();
        SolverSpec { n_per_arc: d.refine.min_panels, defect_tol: d.defect_tol, refine_tol: d.refine.tol, trunc_tol: d.refine.trunc_tol }
    }
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Grid {
    pub min: f64,
    pub max: f64,
    pub n: usize,
}

impl Grid {
    pub fn points(&self) -> Vec<f64> {
        if self.n == 1 {
            return vec![self.min];
        }
        (0..self.n).map(|i| self.min + (self.max - self.min) * i as f64 / (self.n - 1) as f64).collect()
    }

    fn check(&self, name: &str, nonneg: bool) -> Result<()> {
        if self.n == 0 || !(self.min <= self.max) || !self.min.is_finite() || !self.max.is_finite() {
            return Err(Error::InvalidParams(format!("grid {name}: need n ≥ 1 and finite min ≤ max")));
        }
        if nonneg && self.min < 0.0 {
            return Err(Error::InvalidParams(format!("grid {name} must be non-negative")));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Grids {
    pub k: Grid,
    pub x: Grid,
    pub t: Grid,
}

impl Default for Grids {
    fn default() -> Self {
        Grids { k: Grid { min: -10.0, max: 10.0, n: 401 }, x: Grid { min: 0.0, max: 5.0, n: 11 }, t: Grid { min: 0.0, max: 10.0, n: 11 } }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AsymptoticsSpec {
    pub eps: f64,
    pub max_degree: usize,
}

impl Default for AsymptoticsSpec {
    fn default() -> Self {
        AsymptoticsSpec { eps: 1e-12, max_degree: 24 }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub background: Background,
    #[serde(default)]
    pub datum: DatumSpec,
    /// Free ratio of the t-data; `null` selects the zero function.
    #[serde(default)]
    pub free_ratio: Option<RationalFn>,
    #[serde(default)]
    pub solver: SolverSpec,
    #[serde(default)]
    pub grids: Grids,
    /// Breather for `oracle` and `dtn-demo`; defaults to the one matching the background.
    #[serde(default)]
    pub breather: Option<BreatherParams>,
    #[serde(default)]
    pub asymptotics: AsymptoticsSpec,
}

/// Everything a command needs, built and checked before any computation.
pub struct Validated {
    pub config: RunConfig,
    pub params: BackgroundParams,
    pub datum: InitialDatum,
    pub free_ratio: RationalFn,
    pub opts: SolveOptions,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<RunConfig> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::InvalidParams(format!("cannot read {}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| Error::InvalidParams(format!("{}: {e}", path.display())))
    }

    pub fn validate(mut self, resolution: Option<usize>) -> Result<Validated> {
        if let Some(n) = resolution {
            if n == 0 {
                return Err(Error::InvalidParams("resolution must be positive".into()));
            }
            self.solver.n_per_arc = n;
        }
        let params = BackgroundParams::new(self.background.a, self.background.omega, self.background.epsilon)?;
        let s = &self.solver;
        if s.n_per_arc == 0 || !(s.defect_tol > 0.0) || !(s.refine_tol > 0.0) || !(s.trunc_tol > 0.0) {
            return Err(Error::InvalidParams("solver tolerances and n_per_arc must be positive".into()));
        }
        self.grids.k.check("k", false)?;
        self.grids.x.check("x", true)?;
        self.grids.t.check("t", true)?;
        if !(self.asymptotics.eps > 0.0) || self.asymptotics.max_degree == 0 {
            return Err(Error::InvalidParams("asymptotics.eps and max_degree must be positive".into()));
        }
        if let Some(b) = &self.breather {
            BreatherParams::new(b.eta, b.x0, b.epsilon)?;
        }
        let datum = match &self.datum {
            DatumSpec::Zero => InitialDatum::zero(),
            DatumSpec::Sech { eta, x0, epsilon } => InitialDatum::sech(*eta, *x0, *epsilon)?,
            DatumSpec::Gaussian { amp, width } => InitialDatum::gaussian(*amp, *width)?,
            DatumSpec::Samples { path } => read_samples(Path::new(path))?,
        };
        datum.validate()?;
        let free_ratio = self.free_ratio.clone().unwrap_or_else(RationalFn::zero);
        let mut opts = SolveOptions::with_panels(self.solver.n_per_arc);
        opts.defect_tol = s.defect_tol;
        opts.refine.tol = s.refine_tol;
        opts.refine.trunc_tol = s.trunc_tol;
        Ok(Validated { config: self, params, datum, free_ratio, opts })
    }
}

fn read_samples(path: &Path) -> Result<InitialDatum> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::InvalidParams(format!("cannot read {}: {e}", path.display())))?;
    let (mut xs, mut qs) = (Vec::new(), Vec::new());
    for (i, line) in text.lines().enumerate() {
        let cols: Vec<&str> = line.split(',').map(str::trim).collect();
        let parsed: Option<Vec<f64>> = cols.iter().map(|c| c.parse().ok()).collect();
        match parsed {
            Some(v) if v.len() == 3 => {
                xs.push(v[0]);
                qs.push(C64::new(v[1], v[2]));
            }
            _ if i == 0 => continue,
            _ => return Err(Error::InvalidParams(format!("{}:{}: expected x,re_q,im_q", path.display(), i + 1))),
        }
    }
    InitialDatum::from_samples(xs, qs)
}
