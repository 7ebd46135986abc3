//! End-to-end acceptance checks. Runs without the libtest harness so that
//! every criterion prints exactly one PASS/FAIL line; exits non-zero if any fails.

use halfline::asymptotics::{analytic_approx, decay_fit, factorize_jump, needed_factors, rational_family, scalar_d, traces, LensConfig};
use halfline::exact::{breather, breather_boundary, breather_rhp, breather_x, dtn_branches, planewave_x, BreatherParams};
use halfline::rhsolve::{assemble_t, recover_q, recover_qx_boundary, regularize_poles, solve, solve_xt, RHSolution, SolveOptions};
use halfline::surface::{ArcLabel, BackgroundParams};
use halfline::tdata::{construct_pair, sample_arc, transition, RationalFn};
use halfline::xscatter::{scattering_pair, InitialDatum};
use num_complex::Complex64 as C64;
use rand::{Rng, SeedableRng};
use std::sync::Arc;
use std::time::Instant;

type Outcome = Result<String, String>;

fn grid(n: usize, a: f64, b: f64) -> Vec<f64> {
    (0..n).map(|i| a + (b - a) * i as f64 / (n - 1) as f64).collect()
}

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn e<T: std::fmt::Display>(err: T) -> String {
    format!("error: {err}")
}

fn sech_oracle() -> Outcome {
    let q = InitialDatum::sech(0.5, 25.0, 0.3).map_err(e)?;
    let sd = scattering_pair(&q, &grid(401, -10.0, 10.0)).map_err(e)?;
    let sup = sd.grid.iter().zip(&sd.a_grid).map(|(k, a)| (a - C64::new(*k, -0.5) / C64::new(*k, 0.5)).norm()).fold(0.0, f64::max);
    let zero_err = match sd.zeros.as_slice() {
        [z] => (z - C64::new(0.0, 0.5)).norm(),
        _ => f64::INFINITY,
    };
    check(sup < 1e-6 && zero_err < 1e-8, format!("sup|a − (k−i/2)/(k+i/2)| = {sup:.2e}, {} zero(s), eigenvalue error {zero_err:.2e}", sd.zeros.len()))
}

fn unitarity() -> Outcome {
    let data = [
        InitialDatum::gaussian(C64::new(0.4, 0.0), 1.0),
        InitialDatum::gaussian(C64::new(0.3, 0.2), 2.0),
        InitialDatum::sech(0.5, 12.0, 0.3),
        InitialDatum::new("x e^{-x^2}", 1.0, 6.5, |x| C64::new(x * (-x * x).exp(), 0.0)),
        InitialDatum::new("chirped gaussian", 1.0, 7.5, |x| C64::from_polar(0.5 * (-(x - 1.0).powi(2)).exp(), 3.0 * x)),
    ];
    let k = grid(201, -10.0, 10.0);
    let mut worst = 0.0f64;
    for d in data {
        let sd = scattering_pair(&d.map_err(e)?, &k).map_err(e)?;
        let res = sd.grid.iter().enumerate().map(|(i, _)| (sd.a_grid[i].norm_sqr() + sd.b_grid[i].norm_sqr() - 1.0).abs()).fold(0.0, f64::max);
        worst = worst.max(res);
    }
    check(worst < 1e-8, format!("max ||a|²+|b|²−1| over 5 data = {worst:.2e}"))
}

fn round_trip() -> Outcome {
    let p = BackgroundParams::new(1.0, 0.9, 0.0).map_err(e)?;
    let q = InitialDatum::gaussian(C64::new(0.4, 0.0), 1.0).map_err(e)?;
    let sd = Arc::new(scattering_pair(&q, &grid(201, -10.0, 10.0)).map_err(e)?);
    let pair = Arc::new(construct_pair(sd.clone(), RationalFn::zero(), &p).map_err(e)?);
    let tm = transition(sd.clone(), pair).map_err(e)?;
    let mut sup = 0.0f64;
    for x in grid(21, 0.0, 5.0) {
        let sol = solve_xt(&sd, &tm, x, 0.0, &SolveOptions::default()).map_err(e)?;
        sup = sup.max((recover_q(&sol) - q.eval(x)).norm());
    }
    check(sup < 1e-6, format!("sup over 21 points of x ∈ [0,5]: |q − q₀| = {sup:.2e}"))
}

fn breather_solve(p: &BreatherParams, x: f64, t: f64) -> Result<RHSolution, String> {
    solve(&regularize_poles(&breather_rhp(p, x, t), 0.1).map_err(e)?, &SolveOptions::default()).map_err(e)
}

fn one_pole() -> Outcome {
    let p = BreatherParams::new(0.5, 1.0, 0.3).map_err(e)?;
    let mut rng = rand::rngs::StdRng::seed_from_u64(2024);
    let mut sup = 0.0f64;
    for _ in 0..20 {
        let (x, t) = (rng.gen_range(0.0..4.0), rng.gen_range(0.0..3.0));
        sup = sup.max((recover_q(&breather_solve(&p, x, t)?) - breather(x, t, &p)).norm());
    }
    check(sup < 1e-8, format!("max |q_RH − q_breather| at 20 random points = {sup:.2e}"))
}

fn breather_traces() -> Outcome {
    let p = BreatherParams::new(0.5, 1.0, 0.0).map_err(e)?;
    let bb = breather_boundary(&p);
    let consts = (bb.a - 0.648054).abs() < 1e-6 && (bb.omega - 0.5).abs() < 1e-12 && (bb.b_hat - 0.380797).abs() < 1e-6;
    let mut sup = 0.0f64;
    for t in grid(13, 0.0, 3.0) {
        let sol = breather_solve(&p, 0.0, t)?;
        let q = recover_q(&sol);
        let qx = recover_qx_boundary(&sol, q).map_err(e)?;
        let ph = C64::from_polar(1.0, 2.0 * bb.omega * t + p.epsilon);
        sup = sup.max((q - bb.a * ph).norm()).max((qx - 2.0 * bb.a * bb.b_hat * ph).norm());
        sup = sup.max((qx - breather_x(0.0, t, &p)).norm());
    }
    check(
        consts && sup < 1e-5,
        format!("a = {:.6}, ω = {}, b̂ = {:.6}; max trace error on t ∈ [0,3] = {sup:.2e}", bb.a, bb.omega, bb.b_hat),
    )
}

fn decay() -> Outcome {
    let p = BackgroundParams::new(1.0, 0.9, 0.0).map_err(e)?;
    let pair = rational_family(&p, C64::new(3.0, 0.0)).map_err(e)?;
    let d = scalar_d(&pair).map_err(e)?;
    let lens = LensConfig::saddle(&p, &needed_factors(&pair)).map_err(e)?;
    let approx = analytic_approx(&pair, &d, &lens, 1e-12, 20).map_err(e)?;
    let rep = decay_fit(&approx, &lens, &grid(12, 1.0, 12.0), &SolveOptions::default()).map_err(e)?;
    let within = |k: f64| (k - rep.kappa_lens).abs() <= 0.2 * rep.kappa_lens;
    check(
        rep.kappa_u > 0.0 && rep.kappa_v > 0.0 && rep.r2_u > 0.99 && rep.r2_v > 0.99 && within(rep.kappa_u) && within(rep.kappa_v),
        format!(
            "κ_u = {:.3} (R² {:.4}), κ_v = {:.3} (R² {:.4}), lens κ = {:.3}, phase gap {:.3}, fit t ∈ [{}, {}]",
            rep.kappa_u, rep.r2_u, rep.kappa_v, rep.r2_v, rep.kappa_lens, rep.kappa_gap, rep.fit_range.0, rep.fit_range.1
        ),
    )
}

fn instability() -> Outcome {
    let (a, omega, t) = (1.0, 0.9, 10.0);
    let p = BackgroundParams::new(a, omega, 0.0).map_err(e)?;
    let pair = rational_family(&p, C64::new(3.0, 0.0)).map_err(e)?;
    let lens = LensConfig::saddle(&p, &needed_factors(&pair)).map_err(e)?;
    let approx = analytic_approx(&pair, &scalar_d(&pair).map_err(e)?, &lens, 1e-12, 20).map_err(e)?;
    let (sol, _) = halfline::asymptotics::lens_transform(&approx, &lens, t, &SolveOptions::default()).map_err(e)?;
    let (u, v) = traces(&sol, &p, t).map_err(e)?;
    let bp = BreatherParams::from_boundary(a, omega, 0.0).map_err(e)?;
    let dirichlet_rh = C64::from_polar(a, 2.0 * omega * t) + u;
    let dirichlet_diff = (dirichlet_rh - breather(0.0, t, &bp)).norm();
    let n_rh = (planewave_x(0.0, t, &p) + v).norm();
    let n_br = breather_x(0.0, t, &bp).norm();
    let br = dtn_branches(a, omega);
    let ratio = n_br / n_rh;
    check(
        dirichlet_diff < 1e-6 && (ratio - 2.0).abs() < 0.04 && (n_rh - br.neumann_rh.norm()).abs() < 1e-4 && (n_br - br.neumann_breather.norm()).abs() < 1e-4,
        format!("t = 10: |Δ Dirichlet| = {dirichlet_diff:.2e}; |q_x| = {n_rh:.4} vs {n_br:.4} (ratio {ratio:.4})"),
    )
}

fn structural() -> Outcome {
    let p = BackgroundParams::new(1.0, 0.9, 0.3).map_err(e)?;
    let q = InitialDatum::gaussian(C64::new(0.1, 0.0), 1.0).map_err(e)?;
    let sd = Arc::new(scattering_pair(&q, &grid(101, -10.0, 10.0)).map_err(e)?);
    let free = RationalFn::simple(&[(C64::new(-p.b, 2.0), C64::new(0.3, 0.0))]);
    let pair = Arc::new(construct_pair(sd.clone(), free, &p).map_err(e)?);
    let x_pair = Arc::new(construct_pair(sd.clone(), RationalFn::zero(), &p).map_err(e)?);
    let tm = transition(sd.clone(), x_pair).map_err(e)?;
    let opts = SolveOptions::default();
    let sols = [
        solve_xt(&sd, &tm, 1.0, 0.0, &opts).map_err(e)?,
        solve(&assemble_t(&pair, 0.0).map_err(e)?, &opts).map_err(e)?,
        breather_solve(&BreatherParams::new(0.5, 1.0, 0.3).map_err(e)?, 0.5, 0.5)?,
    ];
    let det = sols.iter().map(|s| s.det_check().max(s.det_defect)).fold(0.0, f64::max);
    let jump = sols.iter().map(|s| s.jump_defect()).fold(0.0, f64::max);
    let d = scalar_d(&pair).map_err(e)?;
    let mut fact = 0.0f64;
    for label in ArcLabel::ALL {
        for z in sample_arc(&p, label, 12) {
            let f = factorize_jump(&pair, &d, label, z, 1.0);
            fact = fact.max(f.g_residual());
            if label == ArcLabel::RUpperSheet1 {
                fact = fact.max(f.j_residual());
            }
        }
    }
    let djump = d.jump_residual(&pair, 30);
    check(
        det < 1e-8 && jump < 1e-8 && fact < 1e-10 && djump < 1e-6,
        format!("|det M − 1| = {det:.2e}, jump defect = {jump:.2e}, factorization = {fact:.2e}, D jump = {djump:.2e}"),
    )
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 8] = [
        ("scattering oracle (sech)", sech_oracle),
        ("unitarity, 5 data", unitarity),
        ("RHP round trip at t = 0", round_trip),
        ("one-pole breather", one_pole),
        ("breather boundary traces", breather_traces),
        ("exponential decay of u, v", decay),
        ("Dirichlet-to-Neumann instability", instability),
        ("structural identities", structural),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let (tag, detail) = match f() {
            Ok(d) => ("PASS", d),
            Err(d) => {
                failed += 1;
                ("FAIL", d)
            }
        };
        println!("criterion {} [{tag}] {name}: {detail} ({:.1} s)", i + 1, start.elapsed().as_secs_f64());
    }
    if failed > 0 {
        println!("{failed} criterion(s) failed");
        std::process::exit(1);
    }
}
