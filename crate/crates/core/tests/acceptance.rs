//! Acceptance suite: one PASS/FAIL line per criterion. Runs without the
//! libtest harness so the lines are always printed; exits non-zero if any
//! criterion fails.

mod common;

use std::time::Instant;

use pks_selfsim::backward::{
    bracket_critical, critical_compact_profile, find_critical_a, rescaled_limit_check, solve_backward, sweep_a,
    BackwardOptions, ProfileSet,
};
use pks_selfsim::forward::{
    fit_decay_rate, fit_decay_rate_at, solve_forward, support_radius, support_radius_upper_bound, ForwardOptions,
};
use pks_selfsim::odecore::{energy_derivative_check, EventKind, IntegratorOptions, ProfileSolution};
use pks_selfsim::params::{derive_params, ModelParams};
use pks_selfsim::reconstruct::{
    delta_test, mass, phi_from_u, psi_from_phi, system_residual, Direction, SelfSimilarSolution, TestFunction,
};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

type Outcome = (bool, String);

fn closed_form_a_c(prm: &ModelParams) -> f64 {
    let q = prm.q().unwrap();
    ((q + 1.0) / (prm.m() * prm.chi())).powf(1.0 / q)
}

fn critical_height_closed_form() -> Outcome {
    let start = Instant::now();
    let mut worst: f64 = 0.0;
    let mut ok = true;
    let mut detail = Vec::new();
    for (p, chi) in [(2.5, 1.0), (3.0, 1.0), (4.0, 1.0), (3.0, 2.0)] {
        let prm = derive_params(1, p, chi).unwrap();
        let bo = BackwardOptions::default();
        let res = bracket_critical(&prm, &bo).and_then(|br| find_critical_a(&prm, br, &bo));
        match res {
            Ok(c) => {
                let rel = (c.a_c - closed_form_a_c(&prm)).abs() / closed_form_a_c(&prm);
                worst = worst.max(rel);
                detail.push(format!("p={p},chi={chi}: {rel:.1e}"));
            }
            Err(e) => {
                ok = false;
                detail.push(format!("p={p},chi={chi}: {e}"));
            }
        }
    }
    let secs = start.elapsed().as_secs_f64();
    ok &= worst < 1e-6 && secs < 10.0;
    (ok, format!("max rel err {worst:.2e} [{}], {secs:.2}s", detail.join("; ")))
}

fn energy_laws() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_0002);
    let mut checked = 0;
    let mut full_range = 0;
    let mut failures = Vec::new();
    let (mut worst_inc, mut worst_drift): (f64, f64) = (0.0, 0.0);
    let opts = IntegratorOptions { r_max: 30.0, ..Default::default() };
    while checked < 60 {
        let c = common::random_case(&mut rng, true);
        let prm = derive_params(c.n, c.p, c.chi).unwrap();
        let sol = match solve_backward(&prm, c.a, &opts) {
            Ok(s) => s,
            Err(e) => {
                failures.push(format!("{c:?}: {e}"));
                checked += 1;
                continue;
            }
        };
        if sol.r_last() >= 30.0 || sol.first_event(EventKind::UZero).is_some() {
            full_range += 1;
        }
        let ec = energy_derivative_check(&sol);
        let scale = ec.e0.abs();
        if c.n == 1 {
            let d = ec.max_drift / scale;
            worst_drift = worst_drift.max(d);
            if d >= 1e-6 {
                failures.push(format!("{c:?}: drift {d:.2e}"));
            }
        } else {
            let inc = ec.max_increase / scale;
            worst_inc = worst_inc.max(inc);
            if inc >= 1e-8 {
                failures.push(format!("{c:?}: increase {inc:.2e}"));
            }
        }
        checked += 1;
    }
    (
        failures.is_empty(),
        format!(
            "{checked} points ({full_range} reached r=30 or a zero), max relative increase (N>=2) {worst_inc:.2e}, max relative drift (N=1) {worst_drift:.2e}{}",
            if failures.is_empty() { String::new() } else { format!("; failures: {}", failures.join(" | ")) }
        ),
    )
}

fn linear_convergence() -> Outcome {
    let prm = derive_params(4, 2.0, 1.0).unwrap();
    let us = prm.u_star_log().unwrap();
    let target = 2.0 * 2f64.ln();
    let mut ok = (prm.m() - 0.5).abs() < 1e-15 && (us - target).abs() < 1e-14;
    let mut detail = vec![format!("m={}, u_*={us:.12}", prm.m())];
    for b in [us - 1.0, us + 1.0] {
        let opts = IntegratorOptions { r_max: 200.0, ..Default::default() };
        let sol = solve_backward(&prm, b, &opts).unwrap();
        let env: Vec<f64> = sol.events_of(EventKind::UPrimeZero).map(|e| (e.u - us).abs()).collect();
        let strictly = env.windows(2).all(|w| w[1] < w[0]);
        let at200 = sol.eval(200.0).map(|y| (y[0] - us).abs()).unwrap_or(f64::INFINITY);
        ok &= strictly && env.len() >= 3 && at200 < 1e-3;
        detail.push(format!(
            "b={b:.4}: {} extrema, envelope strictly decreasing={strictly}, |u(200)-u_*|={at200:.2e}",
            env.len()
        ));
    }
    (ok, detail.join("; "))
}

fn forward_decay_rates() -> Outcome {
    let lin = derive_params(2, 2.0, 1.0).unwrap();
    let fp = solve_forward(&lin, 0.0, &ForwardOptions::default()).unwrap();
    let f = fit_decay_rate_at(&fp, 30.0).unwrap();
    let fast = derive_params(3, 1.8, 1.0).unwrap();
    let fp2 = solve_forward(&fast, 1.0, &ForwardOptions::default()).unwrap();
    let g = fit_decay_rate(&fp2).unwrap();
    let ok = f.raw_rel_err() < 0.02 && f.extrapolated_rel_err() < 0.005 && g.raw_rel_err() < 0.02;
    (
        ok,
        format!(
            "p=2: ln(phi)/r^2 at r=30 = {:.6} (rel err {:.2e}), extrapolated {:.6} (rel err {:.2e}); \
             p=1.8,N=3: phi r^(p/(2-p)) at r={:.1} = {:.6e} vs {:.6e} (rel err {:.2e})",
            f.raw,
            f.raw_rel_err(),
            f.extrapolated,
            f.extrapolated_rel_err(),
            g.r,
            g.raw,
            g.target,
            g.raw_rel_err()
        ),
    )
}

fn compact_support() -> Outcome {
    let mut ok = true;
    let mut detail = Vec::new();
    for (n, p) in [(1usize, 3.0), (2, 3.0), (3, 2.5)] {
        let prm = derive_params(n, p, 1.0).unwrap();
        let a = 1.0;
        let fp = solve_forward(&prm, a, &ForwardOptions::default()).unwrap();
        match support_radius(&fp) {
            Ok(sr) => {
                let bound = support_radius_upper_bound(&prm, a).unwrap();
                // φ' at R0 - ε for shrinking ε
                let ep = prm.phi_exponent().unwrap();
                let ode = &fp.sol.ode;
                let slopes: Vec<f64> = [1e-2, 1e-3, 1e-4, 1e-5]
                    .iter()
                    .map(|eps| {
                        let y = fp.sol.eval(sr.r0 - eps).unwrap();
                        (ep * y[0].max(0.0).powf(ep - 1.0) * ode.uprime(y[1])).abs()
                    })
                    .collect();
                let vanishing = slopes.windows(2).all(|w| w[1] < w[0]) && sr.terminal_phi_slope.abs() < 1e-4;
                let good = sr.r0.is_finite() && sr.terminal_u_slope < 0.0 && vanishing && sr.r0 <= bound;
                ok &= good;
                detail.push(format!(
                    "(N,p)=({n},{p}): R0={:.6} <= {:.6}, u'(R0)={:.4e}, |phi'(R0-1e-6)|={:.2e}",
                    sr.r0, bound, sr.terminal_u_slope, sr.terminal_phi_slope.abs()
                ));
            }
            Err(e) => {
                ok = false;
                detail.push(format!("(N,p)=({n},{p}): {e}"));
            }
        }
    }
    (ok, detail.join("; "))
}

struct Case6 {
    name: &'static str,
    prm: ModelParams,
    sol: ProfileSolution,
    dir: Direction,
}

fn critical_profile(n: usize, p: f64) -> (ModelParams, ProfileSolution) {
    let prm = derive_params(n, p, 1.0).unwrap();
    let bo = BackwardOptions::default();
    let crit = bracket_critical(&prm, &bo).and_then(|br| find_critical_a(&prm, br, &bo)).unwrap();
    let fine = IntegratorOptions { rel_tol: 1e-12, abs_tol: 1e-12, ..Default::default() };
    let sol = critical_compact_profile(&prm, &crit, &fine).unwrap();
    (prm, sol)
}

fn fine_forward(n: usize, p: f64, a: f64) -> (ModelParams, ProfileSolution) {
    let prm = derive_params(n, p, 1.0).unwrap();
    let mut fo = ForwardOptions::default();
    fo.integrator.rel_tol = 1e-12;
    fo.integrator.abs_tol = 1e-12;
    fo.integrator.max_step = 0.01;
    (prm, solve_forward(&prm, a, &fo).unwrap().sol)
}

fn mass_and_delta() -> Outcome {
    let t_blowup = 2.0;
    let mut cases = Vec::new();
    let (prm, sol) = critical_profile(1, 2.1);
    cases.push(Case6 { name: "backward N=1 p=2.1 a=a_c", prm, sol, dir: Direction::Backward { t_blowup } });
    let (prm, sol) = fine_forward(1, 2.1, 1.0);
    cases.push(Case6 { name: "forward slow N=1 p=2.1", prm, sol, dir: Direction::Forward });
    let (prm, sol) = fine_forward(2, 2.0, 0.0);
    cases.push(Case6 { name: "forward linear N=2 p=2", prm, sol, dir: Direction::Forward });
    let (prm, sol) = fine_forward(3, 1.8, 1.0);
    cases.push(Case6 { name: "forward fast N=3 p=1.8", prm, sol, dir: Direction::Forward });

    let mut ok = true;
    let mut detail = Vec::new();
    for c in cases {
        let phi = phi_from_u(&c.sol, &c.prm).unwrap();
        let psi = psi_from_phi(&phi, &c.prm).unwrap();
        let m = mass(&phi, &c.prm).unwrap();
        let ss = SelfSimilarSolution::new(c.dir, c.prm, phi, psi).unwrap();
        let s: Vec<f64> = (0..=6).map(|k| 1e-2 * 0.25f64.powi(k)).collect();
        let times: Vec<f64> = match c.dir {
            Direction::Backward { t_blowup } => s.iter().map(|s| t_blowup - s).collect(),
            Direction::Forward => s.clone(),
        };
        let sample_times: Vec<f64> = match c.dir {
            Direction::Backward { t_blowup } => [1.0, 0.5, 0.1, 1e-2, 1e-4].iter().map(|s| t_blowup - s).collect(),
            Direction::Forward => vec![1e-4, 1e-2, 0.1, 1.0, 10.0],
        };
        let drift = sample_times
            .iter()
            .map(|&t| (ss.mass_at(t).unwrap() - m).abs() / m)
            .fold(0.0, f64::max);
        let rep = delta_test(&ss, &TestFunction::Gaussian, &times).unwrap();
        let factor = rep.samples[0].deviation / rep.samples.last().unwrap().deviation;
        let good = m.is_finite() && m > 0.0 && drift < 1e-8 && rep.monotone && factor >= 1e3;
        ok &= good;
        detail.push(format!(
            "{}: M={m:.8}, mass drift {drift:.1e}, deviation monotone={} decrease x{factor:.3e}",
            c.name, rep.monotone
        ));
    }
    (ok, detail.join("; "))
}

fn system_residuals() -> Outcome {
    let mut ok = true;
    let mut detail = Vec::new();
    let mut runs: Vec<(String, ModelParams, ProfileSolution, bool)> = Vec::new();
    for (n, p) in [(1usize, 3.0), (2, 3.0), (3, 2.5)] {
        let (prm, sol) = critical_profile(n, p);
        runs.push((format!("backward a_c N={n} p={p}"), prm, sol, true));
    }
    for (n, p, a) in [(1usize, 3.0, 1.0), (3, 1.8, 1.0), (2, 2.0, 0.0)] {
        let (prm, sol) = fine_forward(n, p, a);
        runs.push((format!("forward N={n} p={p}"), prm, sol, false));
    }
    for (name, prm, sol, backward) in runs {
        let phi = phi_from_u(&sol, &prm).unwrap();
        let psi = psi_from_phi(&phi, &prm).unwrap();
        let r = phi.support_radius.unwrap_or_else(|| phi.r_end());
        let res = system_residual(&phi, &psi, &prm, backward, (0.1 * r, 0.9 * r)).unwrap();
        let good = res.res1 < 1e-6 && res.res2 < 1e-6 && res.identity < 1e-6 && res.points > 0;
        ok &= good;
        detail.push(format!(
            "{name}: res1={:.1e} res2={:.1e} identity={:.1e}",
            res.res1, res.res2, res.identity
        ));
    }
    (ok, detail.join("; "))
}

fn rescaling_limit() -> Outcome {
    let prm = derive_params(2, 3.0, 1.0).unwrap();
    let opts = IntegratorOptions::default();
    let lo = rescaled_limit_check(&prm, 1e3, &opts).unwrap();
    let hi = rescaled_limit_check(&prm, 1e4, &opts).unwrap();
    (
        hi.sup_deviation < lo.sup_deviation,
        format!(
            "sup deviation a=1e3: {:.9e}, a=1e4: {:.9e} (analytic forcing a^-q: {:.1e}, {:.1e})",
            lo.sup_deviation,
            hi.sup_deviation,
            1e3f64.powf(-prm.q().unwrap()),
            1e4f64.powf(-prm.q().unwrap())
        ),
    )
}

fn oracle_equivalence() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_0009);
    let mut accepted = 0;
    let mut worst: f64 = 0.0;
    let mut attempts = 0;
    let opts = IntegratorOptions { r_max: 1.0, ..Default::default() };
    while accepted < 20 && attempts < 1000 {
        attempts += 1;
        let backward = rng.gen_bool(0.5);
        let c = common::random_case(&mut rng, backward);
        let prm = derive_params(c.n, c.p, c.chi).unwrap();
        let sol = if backward {
            solve_backward(&prm, c.a, &opts)
        } else {
            let fo = ForwardOptions { integrator: opts, ..Default::default() };
            solve_forward(&prm, c.a, &fo).map(|f| f.sol)
        };
        // cases that leave the positive cone or stop before r = 1 have no u(1)
        let Ok(sol) = sol else { continue };
        if sol.r_last() < 1.0 || sol.u_last().abs() < 1e-2 {
            continue;
        }
        let oracle = common::rk4_u(&c, 1.0, 1e-5);
        let rel = (sol.u_last() - oracle).abs() / oracle.abs();
        worst = worst.max(rel);
        accepted += 1;
    }
    (accepted == 20 && worst < 1e-6, format!("{accepted} cases, max rel diff in u(1) {worst:.2e}"))
}

use rand::Rng;

fn sweep_structure() -> Outcome {
    let mut detail = Vec::new();
    let prm = derive_params(3, 2.5, 1.0).unwrap();
    let us = prm.u_star().unwrap();
    let grid: Vec<f64> = (0..200).map(|k| us * 10f64.powf(-2.0 + 6.0 * k as f64 / 199.0)).collect();
    let sw = sweep_a(&prm, &grid, &BackwardOptions::default()).unwrap();
    let sets: Vec<ProfileSet> = sw.entries.iter().map(|e| e.set).collect();
    let first_non_p = sets.iter().position(|&s| s != ProfileSet::P).unwrap_or(sets.len());
    let last_non_n = sets.iter().rposition(|&s| s != ProfileSet::N).map_or(0, |i| i + 1);
    let prefix_covers = grid.iter().take_while(|&&a| a <= us).count() <= first_non_p;
    let tail_nonempty = last_non_n < sets.len();
    let ok1 = prefix_covers && tail_nonempty && first_non_p > 0;
    detail.push(format!(
        "N=3 p=2.5: P prefix up to a1={:.6}, N tail from a2={:.6} ({} P, {} N of {})",
        sw.a1.unwrap_or(f64::NAN),
        sw.a2.unwrap_or(f64::NAN),
        sets.iter().filter(|&&s| s == ProfileSet::P).count(),
        sets.iter().filter(|&&s| s == ProfileSet::N).count(),
        sets.len()
    ));

    let prm2 = derive_params(3, 2.1, 1.0).unwrap();
    let q = prm2.q().unwrap();
    let bound = 3.0 * 2.1 / (3.0 - 2.1) - 1.0;
    let us2 = prm2.u_star().unwrap();
    let grid2: Vec<f64> = (0..200).map(|k| us2 * 10f64.powf(-2.0 + 6.0 * k as f64 / 199.0)).collect();
    let sw2 = sweep_a(&prm2, &grid2, &BackwardOptions::default()).unwrap();
    let all_p = sw2.entries.iter().all(|e| e.set == ProfileSet::P);
    detail.push(format!("N=3 p=2.1: q={q:.4} >= {bound:.4}, all {} points P = {all_p}", grid2.len()));
    (ok1 && all_p && q >= bound, detail.join("; "))
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 10] = [
        ("critical-height closed form (N=1)", critical_height_closed_form),
        ("energy laws", energy_laws),
        ("backward linear convergence", linear_convergence),
        ("forward decay rates", forward_decay_rates),
        ("compact support (slow forward)", compact_support),
        ("mass and delta-concentration", mass_and_delta),
        ("system residual", system_residuals),
        ("rescaling limit", rescaling_limit),
        ("oracle equivalence", oracle_equivalence),
        ("sweep structure", sweep_structure),
    ];
    let total = Instant::now();
    let mut failed = 0;
    for (k, (name, f)) in criteria.iter().enumerate() {
        let t = Instant::now();
        let (ok, detail) = f();
        if !ok {
            failed += 1;
        }
        println!(
            "criterion {:>2} {}: {name} ({:.2}s) :: {detail}",
            k + 1,
            if ok { "PASS" } else { "FAIL" },
            t.elapsed().as_secs_f64()
        );
    }
    println!("acceptance: {} passed, {failed} failed ({:.1}s)", 10 - failed, total.elapsed().as_secs_f64());
    if failed > 0 {
        std::process::exit(1);
    }
}
