use crate::config::Validated;
use halfline::asymptotics::{analytic_approx, decay_fit, lens_transform, needed_factors, rational_family, scalar_d, traces, ArcGroup, LensConfig};
use halfline::error::{Error, Result};
use halfline::exact::{breather, breather_boundary, breather_x, dtn_branches, nls_residual, planewave, planewave_x, BreatherParams, FieldSample};
use halfline::rhsolve::{assemble_t, recover_q, solve, solve_xt};
use halfline::surface::ArcLabel;
use halfline::tdata::{construct_pair, sample_arc, transition, BoundarySpectralPair};
use halfline::xscatter::{scattering_pair, ScatteringData};
use num_complex::Complex64 as C64;
use rayon::prelude::*;
use serde_json::{json, Value};
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;
use std::sync::Arc;

fn write_json(out: &Path, name: &str, cfg: &Validated, mut body: Value) -> Result<()> {
    body["config"] = serde_json::to_value(&cfg.config)?;
    let mut f = BufWriter::new(File::create(out.join(name))?);
    serde_json::to_writer_pretty(&mut f, &body)?;
    writeln!(f)?;
    Ok(())
}

fn create(out: &Path, name: &str) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(out.join(name))?))
}

fn scatter_data(cfg: &Validated) -> Result<Arc<ScatteringData>> {
    Ok(Arc::new(scattering_pair(&cfg.datum, &cfg.config.grids.k.points())?))
}

fn pair(cfg: &Validated, sd: Arc<ScatteringData>) -> Result<Arc<BoundarySpectralPair>> {
    Ok(Arc::new(construct_pair(sd, cfg.free_ratio.clone(), &cfg.params)?))
}

fn c(z: C64) -> String {
    format!("{:.15e},{:.15e}", z.re, z.im)
}

pub fn scatter(cfg: &Validated, out: &Path) -> Result<()> {
    let sd = scatter_data(cfg)?;
    sd.write_csv(create(out, "scattering.csv")?)?;
    let body = json!({
        "datum": cfg.datum.name,
        "spectrum": sd.spectrum_json(),
        "unitarity_residual": sd.unitarity_residual(),
        "k_cut": sd.k_cut,
    });
    write_json(out, "spectrum.json", cfg, body)
}

pub fn tdata(cfg: &Validated, out: &Path) -> Result<()> {
    let p = pair(cfg, scatter_data(cfg)?)?;
    let mut w = create(out, "tdata.csv")?;
    writeln!(w, "arc,re_zeta,im_zeta,re_beta,im_beta,re_beta_sharp,im_beta_sharp,re_a,im_a")?;
    for label in ArcLabel::ALL {
        for z in sample_arc(&cfg.params, label, 200) {
            writeln!(w, "{},{},{},{},{}", label.name(), c(z), c(p.beta_13(label, z)), c(p.beta_sharp(label, z)), c(p.a_13(label, z)))?;
        }
    }
    w.flush()?;
    let body = json!({
        "trivial": p.is_trivial(),
        "nodes": p.n_nodes(),
        "condition_iii_residual": p.condition_iii_residual(50),
        "global_relation_residual": p.global_relation_residual(20, 7),
    });
    write_json(out, "tdata.json", cfg, body)
}

pub fn solve_field(cfg: &Validated, out: &Path) -> Result<()> {
    let sd = scatter_data(cfg)?;
    let tm = transition(sd.clone(), pair(cfg, sd.clone())?)?;
    let (xs, ts) = (cfg.config.grids.x.points(), cfg.config.grids.t.points());
    let jobs: Vec<(f64, f64)> = xs.iter().flat_map(|&x| ts.iter().map(move |&t| (x, t))).collect();
    let solved: Vec<(C64, f64)> = jobs
        .par_iter()
        .map(|&(x, t)| solve_xt(&sd, &tm, x, t, &cfg.opts).map(|s| (recover_q(&s), s.residual)))
        .collect::<Result<_>>()?;
    let field = FieldSample { xs, ts, q: solved.iter().map(|s| s.0).collect(), ..Default::default() };
    field.write_csv(create(out, "field.csv")?)?;
    let at_t0: Vec<f64> = jobs.iter().zip(&solved).filter(|(j, _)| j.1 == 0.0).map(|(j, s)| (s.0 - cfg.datum.eval(j.0)).norm()).collect();
    let body = json!({
        "points": jobs.len(),
        "max_residual": solved.iter().map(|s| s.1).fold(0.0, f64::max),
        "initial_data_error": at_t0.iter().copied().fold(None, |m: Option<f64>, e| Some(m.map_or(e, |m| m.max(e)))),
    });
    write_json(out, "field.json", cfg, body)
}

/// u, v and the full traces on the t grid: the t-problem itself at t = 0,
/// its lens deformation for t > 0 (where the jumps on Σ oscillate unboundedly).
pub fn boundary(cfg: &Validated, out: &Path) -> Result<()> {
    let p = pair(cfg, scatter_data(cfg)?)?;
    let ts = cfg.config.grids.t.points();
    let lensed = if ts.iter().any(|&t| t > 0.0) {
        let lens = LensConfig::saddle(&cfg.params, &needed_factors(&p))?;
        if lens.rays.iter().any(|r| r.group == ArcGroup::RUpper) {
            return Err(Error::LensRejected("boundary traces for t > 0 need zero x-data".into()));
        }
        Some((analytic_approx(&p, &scalar_d(&p)?, &lens, cfg.config.asymptotics.eps, cfg.config.asymptotics.max_degree)?, lens))
    } else {
        None
    };
    let rows: Vec<(C64, C64, f64)> = ts
        .par_iter()
        .map(|&t| {
            let sol = match &lensed {
                Some((approx, lens)) if t > 0.0 => lens_transform(approx, lens, t, &cfg.opts)?.0,
                _ => solve(&assemble_t(&p, t)?, &cfg.opts)?,
            };
            let (u, v) = traces(&sol, &cfg.params, t)?;
            Ok((u, v, sol.residual))
        })
        .collect::<Result<_>>()?;
    let mut w = create(out, "boundary.csv")?;
    writeln!(w, "t,re_u,im_u,re_v,im_v,re_g0,im_g0,re_g1,im_g1")?;
    for (t, (u, v, _)) in ts.iter().zip(&rows) {
        let g0 = planewave(0.0, *t, &cfg.params) + u;
        let g1 = planewave_x(0.0, *t, &cfg.params) + v;
        writeln!(w, "{:.12e},{},{},{},{}", t, c(*u), c(*v), c(g0), c(g1))?;
    }
    w.flush()?;
    let body = json!({ "max_residual": rows.iter().map(|r| r.2).fold(0.0, f64::max) });
    write_json(out, "boundary.json", cfg, body)
}

pub fn asymptotics(cfg: &Validated, out: &Path) -> Result<()> {
    let p = pair(cfg, scatter_data(cfg)?)?;
    let d = scalar_d(&p)?;
    let lens = LensConfig::saddle(&cfg.params, &needed_factors(&p))?;
    let approx = analytic_approx(&p, &d, &lens, cfg.config.asymptotics.eps, cfg.config.asymptotics.max_degree)?;
    let rep = decay_fit(&approx, &lens, &cfg.config.grids.t.points(), &cfg.opts)?;
    rep.write_csv(create(out, "decay.csv")?)?;
    let mut body = rep.summary_json();
    body["below_noise_floor"] = json!(rep.samples.iter().all(|s| s.u.norm() <= rep.floor));
    body["approximation_error"] = json!(approx.achieved);
    body["rays"] = serde_json::to_value(&lens.rays)?;
    body["lens"] = serde_json::to_value(&rep.lens)?;
    write_json(out, "decay.json", cfg, body)
}

fn breather_for(cfg: &Validated) -> Result<BreatherParams> {
    match cfg.config.breather {
        Some(b) => BreatherParams::new(b.eta, b.x0, b.epsilon),
        None => BreatherParams::from_boundary(cfg.params.a, cfg.params.omega, cfg.params.epsilon),
    }
}

pub fn oracle(cfg: &Validated, out: &Path) -> Result<()> {
    let bp = breather_for(cfg)?;
    let (xs, ts) = (cfg.config.grids.x.points(), cfg.config.grids.t.points());
    let field = FieldSample::from_fn(xs.clone(), ts.clone(), |x, t| breather(x, t, &bp));
    field.write_csv(create(out, "breather.csv")?)?;
    FieldSample::from_fn(xs, ts, |x, t| planewave(x, t, &cfg.params)).write_csv(create(out, "planewave.csv")?)?;
    let residual = match nls_residual(&field) {
        Ok(r) => json!(r),
        Err(Error::GridTooCoarse(_)) => Value::Null,
        Err(e) => return Err(e),
    };
    let body = json!({ "breather": bp, "boundary": breather_boundary(&bp), "nls_residual": residual });
    write_json(out, "oracle.json", cfg, body)
}

/// Juxtaposes a zero-datum RH family and the breather sharing its Dirichlet
/// asymptotics: equal Dirichlet traces up to exponentially small terms,
/// Neumann traces on different branches.
pub fn dtn_demo(cfg: &Validated, out: &Path) -> Result<String> {
    let (a, omega) = (cfg.params.a, cfg.params.omega);
    let branches = dtn_branches(a, omega);
    if !branches.rh_valid || !branches.breather_valid {
        return Err(Error::InvalidParams(format!("(a, ω) = ({a}, {omega}) is outside the window shared by both families")));
    }
    if cfg.datum.truncation != 0.0 {
        return Err(Error::InvalidParams("dtn-demo uses the zero initial datum for the RH family".into()));
    }
    let bp = breather_for(cfg)?;
    let bb = breather_boundary(&bp);
    if (bb.a - a).abs() > 1e-9 || (bb.omega - omega).abs() > 1e-9 {
        return Err(Error::InvalidParams(format!("breather boundary (a, ω) = ({}, {}) does not match the background", bb.a, bb.omega)));
    }
    let p = if cfg.free_ratio.is_zero() {
        rational_family(&cfg.params, C64::new(3.0, 0.0))?
    } else {
        pair(cfg, Arc::new(ScatteringData::trivial()))?
    };
    let d = scalar_d(&p)?;
    let lens = LensConfig::saddle(&cfg.params, &needed_factors(&p))?;
    let approx = analytic_approx(&p, &d, &lens, cfg.config.asymptotics.eps, cfg.config.asymptotics.max_degree)?;
    let ts = cfg.config.grids.t.points();
    let rep = decay_fit(&approx, &lens, &ts, &cfg.opts)?;
    let bg = |t: f64| C64::from_polar(a, 2.0 * omega * t + cfg.params.epsilon);
    let mut w = create(out, "dtn.csv")?;
    writeln!(w, "t,dirichlet_diff_rh,dirichlet_diff_breather,neumann_abs_rh,neumann_abs_breather")?;
    let mut rows = Vec::new();
    for s in &rep.samples {
        let t = s.t;
        let row = (
            s.u.norm(),
            (breather(0.0, t, &bp) - bg(t)).norm(),
            (planewave_x(0.0, t, &cfg.params) + s.v).norm(),
            breather_x(0.0, t, &bp).norm(),
        );
        writeln!(w, "{:.12e},{:.15e},{:.15e},{:.15e},{:.15e}", t, row.0, row.1, row.2, row.3)?;
        rows.push(row);
    }
    w.flush()?;
    let last = *rows.last().expect("non-empty t grid");
    let late = &rows[rows.len() / 2..];
    let sup = |f: fn(&(f64, f64, f64, f64)) -> f64| late.iter().map(f).fold(0.0, f64::max);
    let body = json!({
        "t_final": ts[ts.len() - 1],
        "dirichlet_diff_final": { "rh": last.0, "breather": last.1 },
        "dirichlet_diff_sup_late": { "rh": sup(|r| r.0), "breather": sup(|r| r.1) },
        "neumann_abs_final": { "rh": last.2, "breather": last.3 },
        "predicted": { "rh": branches.neumann_rh.norm(), "breather": branches.neumann_breather.norm() },
        "neumann_ratio": last.3 / last.2,
        "kappa_u": rep.kappa_u,
    });
    write_json(out, "dtn.json", cfg, body)?;
    Ok(format!(
        "{:<10} {:>22} {:>18} {:>12}\n{:<10} {:>22.3e} {:>18.6} {:>12.6}\n{:<10} {:>22.3e} {:>18.6} {:>12.6}\n",
        "family",
        "|q(0,t)-a e^{2iwt}|",
        "|q_x(0,t)|",
        "predicted",
        "rh",
        last.0,
        last.2,
        branches.neumann_rh.norm(),
        "breather",
        last.1,
        last.3,
        branches.neumann_breather.norm(),
    ))
}
