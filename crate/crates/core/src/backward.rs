//! Backward (blow-up) profiles: solving, classification of initial heights,
//! the critical height, the large-height limit and multi-bubble assembly.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::odecore::{
    integrate, integrate_with, Control, EventKind, Forcing, IntegratorOptions, Observation,
    ProfileSolution, RadialOde, Termination,
};
use crate::params::{ModelParams, Regime};

/// Options for classification and the critical-height search.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BackwardOptions {
    /// Integrator settings; `r_max` doubles as the scan radius.
    pub integrator: IntegratorOptions,
    /// Terminal slopes at or below this are reported as N0.
    pub slope_tol: f64,
    /// A zero or positive minimum whose energy satisfies
    /// `|E| <= touch_tol·|G(u*)|` is reported as N0.
    pub touch_tol: f64,
    /// `E < -energy_margin·|G(u*)|` certifies P.
    pub energy_margin: f64,
    /// `|u - u*|` and `|w|` below this accept P early.
    pub conv_tol: f64,
    /// Relative bracket width at which bisection stops.
    pub a_tol: f64,
    pub max_bisections: usize,
}

impl Default for BackwardOptions {
    fn default() -> Self {
        BackwardOptions {
            integrator: IntegratorOptions::default(),
            slope_tol: 1e-6,
            touch_tol: 1e-8,
            energy_margin: 1e-8,
            conv_tol: 1e-8,
            a_tol: 1e-10,
            max_bisections: 200,
        }
    }
}

impl BackwardOptions {
    /// Classifier without the N0 band: every run is P or N.
    pub fn strict(&self) -> Self {
        BackwardOptions { slope_tol: 0.0, touch_tol: 0.0, ..*self }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ProfileSet {
    /// positive on the whole scan
    P,
    /// vanishes with negative slope
    N,
    /// vanishes with zero slope, to tolerance
    N0,
    Inconclusive,
}

/// How a classification was reached.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Certificate {
    ZeroCrossing,
    /// positive minimum inside the N0 energy band
    Touch,
    /// energy below zero, so u can no longer reach 0
    NegativeEnergy,
    /// N = 1: a positive minimum followed by a maximum above u*
    FullOscillation,
    Converged,
    SurvivedScan,
    Failed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Classification {
    pub a: f64,
    pub set: ProfileSet,
    /// R(a) for N and N0.
    pub r_of_a: Option<f64>,
    pub terminal_slope: Option<f64>,
    pub certificate: Certificate,
    /// Last radius integrated.
    pub r_end: f64,
}

impl Classification {
    /// True when the trajectory reached `u = 0`.
    pub fn vanished(&self) -> bool {
        self.certificate == Certificate::ZeroCrossing
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CriticalResult {
    pub a_c: f64,
    pub bracket: (f64, f64),
    pub bracket_width: f64,
    /// Radius of the near-vanishing minimum on the P side of the bracket.
    pub r_c: f64,
    /// `u'` at `r_c`.
    pub terminal_slope: f64,
    /// `u` at `r_c`.
    pub terminal_u: f64,
    /// Strict classification of the lower bracket end.
    pub lower: Classification,
    /// Strict classification of the upper bracket end.
    pub upper: Classification,
    pub bisections: usize,
    /// P-side trajectory stopped at its first minimum below u*.
    pub profile: ProfileSolution,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    pub entries: Vec<Classification>,
    /// Largest height of the leading run of P.
    pub a1: Option<f64>,
    /// Smallest height of the trailing run of N.
    pub a2: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RescaledLimit {
    pub a: f64,
    pub lambda: f64,
    pub sup_deviation: f64,
    /// Upper end of the compared range in rescaled radius.
    pub r_compare: f64,
    /// First zero of the limit profile.
    pub z1: f64,
    /// `a^λ R(a)` when the unscaled profile vanished in range.
    pub scaled_r_of_a: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MultiBubbleProfile {
    /// Zeros of u in increasing order.
    pub zeros: Vec<f64>,
    /// `(index, start, end)` of each kept positivity interval.
    pub kept_intervals: Vec<(usize, f64, f64)>,
    pub r: Vec<f64>,
    pub phi: Vec<f64>,
}

impl MultiBubbleProfile {
    /// Linear interpolation of φ, zero beyond the grid.
    pub fn phi_at(&self, r: f64) -> f64 {
        crate::reconstruct::interp_linear(&self.r, &self.phi, r).unwrap_or(0.0)
    }
}

fn check_height(params: &ModelParams, a: f64) -> Result<()> {
    if !a.is_finite() {
        return Err(Error::domain(format!("initial height must be finite, got {a}")));
    }
    if params.regime() != Regime::LinearDiffusion && a <= 0.0 {
        return Err(Error::domain(format!("initial height must be > 0, got {a}")));
    }
    Ok(())
}

fn admissible(params: &ModelParams) -> Result<()> {
    slow_only(params, "critical height search")?;
    if !params.compact_support_admissible() {
        return Err(Error::domain(format!(
            "(N, p) = ({}, {}) is outside the admissible range for compactly supported profiles \
             (N >= 3 needs p > {:.6})",
            params.n(),
            params.p(),
            crate::params::compact_support_threshold(params.n())
        )));
    }
    Ok(())
}

fn slow_only(params: &ModelParams, what: &str) -> Result<()> {
    if params.regime() != Regime::SlowDiffusion {
        return Err(Error::Regime(format!("{what} needs p > 2, got p = {}", params.p())));
    }
    Ok(())
}

/// The backward ODE for the regime of `params`.
pub fn backward_ode(params: &ModelParams) -> Result<RadialOde> {
    RadialOde::new(*params, Forcing::backward_for(params.regime()))
}

/// Integrates the backward problem from `u(0) = a` (`b` when p = 2).
pub fn solve_backward(params: &ModelParams, a: f64, opts: &IntegratorOptions) -> Result<ProfileSolution> {
    check_height(params, a)?;
    integrate(&backward_ode(params)?, a, opts)
}

#[derive(Default)]
struct Watch {
    verdict: Option<(Certificate, Option<f64>)>,
    pending_min: bool,
    seen_min: bool,
}

/// Assigns `a` to P, N or N0 by integrating the slow backward problem.
pub fn classify(params: &ModelParams, a: f64, opts: &BackwardOptions) -> Result<Classification> {
    slow_only(params, "classification")?;
    check_height(params, a)?;
    let ode = backward_ode(params)?;
    let us = params.u_star()?;
    let p = params.p();
    let g_star = ode.potential(us)?.abs();
    let margin = opts.energy_margin * g_star;
    let band = opts.touch_tol * g_star;
    let one_d = params.n() == 1;
    let mut watch = Watch { seen_min: a < us, ..Default::default() };

    let iopts = IntegratorOptions { stop_at_zero: true, ..opts.integrator };
    let sol = integrate_with(&ode, a, &iopts, |obs| {
        match obs {
            Observation::Event(ev) if ev.kind == EventKind::UPrimeZero => {
                let is_min = ev.u < us;
                if is_min && ev.u > 0.0 && ode.potential(ev.u).map_or(false, |e| e.abs() <= band) {
                    watch.verdict = Some((Certificate::Touch, Some(ev.r)));
                    return Control::Stop;
                }
                if is_min && watch.pending_min {
                    watch.verdict = Some((Certificate::NegativeEnergy, None));
                    return Control::Stop;
                }
                if one_d {
                    if is_min && ev.u > 0.0 {
                        watch.seen_min = true;
                    } else if !is_min && watch.seen_min {
                        watch.verdict = Some((Certificate::FullOscillation, None));
                        return Control::Stop;
                    }
                }
            }
            Observation::Step { u, w, .. } if !one_d => {
                if (u - us).abs() < opts.conv_tol && w.abs() < opts.conv_tol {
                    watch.verdict = Some((Certificate::Converged, None));
                    return Control::Stop;
                }
                if !watch.pending_min {
                    let e = ode.energy(u, w).unwrap_or(f64::NAN);
                    if e < -margin {
                        if w < 0.0 && u < us {
                            watch.pending_min = true;
                        } else {
                            watch.verdict = Some((Certificate::NegativeEnergy, None));
                            return Control::Stop;
                        }
                    }
                }
            }
            _ => {}
        }
        Control::Continue
    })?;

    let r_end = sol.r_last();
    let mut out = Classification {
        a,
        set: ProfileSet::P,
        r_of_a: None,
        terminal_slope: None,
        certificate: Certificate::SurvivedScan,
        r_end,
    };
    match sol.termination {
        Termination::UCrossedZero => {
            let w = sol.w_last();
            let slope = ode.uprime(w);
            let kinetic = (p - 1.0) / p * w * slope;
            out.set = if slope.abs() <= opts.slope_tol || kinetic <= band {
                ProfileSet::N0
            } else {
                ProfileSet::N
            };
            out.r_of_a = Some(r_end);
            out.terminal_slope = Some(slope);
            out.certificate = Certificate::ZeroCrossing;
        }
        Termination::Stopped | Termination::UPrimeVanished => {
            let (cert, r_touch) = watch.verdict.unwrap_or((Certificate::SurvivedScan, None));
            out.certificate = cert;
            if let Some(r) = r_touch {
                out.set = ProfileSet::N0;
                out.r_of_a = Some(r);
                out.terminal_slope = Some(ode.uprime(sol.w_last()));
            }
        }
        Termination::ReachedRmax => {}
        Termination::StepUnderflow | Termination::Diverged => {
            return Err(Error::Inconclusive {
                a,
                reason: format!("integration ended by {:?} at r = {r_end}", sol.termination),
            });
        }
    }
    Ok(out)
}

/// Bisects the P/N dichotomy inside `bracket`.
pub fn find_critical_a(
    params: &ModelParams,
    bracket: (f64, f64),
    opts: &BackwardOptions,
) -> Result<CriticalResult> {
    admissible(params)?;
    let (mut lo, mut hi) = bracket;
    if !(lo > 0.0 && hi > lo) {
        return Err(Error::BadBracket(format!("need 0 < a_lo < a_hi, got ({lo}, {hi})")));
    }
    let strict = opts.strict();
    let c_lo = classify(params, lo, opts)?;
    let c_hi = classify(params, hi, opts)?;
    if c_lo.set == ProfileSet::N0 && c_hi.set == ProfileSet::N0 {
        return Err(Error::Ambiguous);
    }
    if c_lo.vanished() || !c_hi.vanished() {
        return Err(Error::BadBracket(format!(
            "endpoints classify as {:?} at {lo} and {:?} at {hi}; need a non-vanishing lower end and a vanishing upper end",
            c_lo.set, c_hi.set
        )));
    }
    let mut bisections = 0;
    while hi - lo > opts.a_tol * hi && bisections < opts.max_bisections {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if classify(params, mid, &strict)?.vanished() {
            hi = mid;
        } else {
            lo = mid;
        }
        bisections += 1;
    }
    let lower = classify(params, lo, &strict)?;
    let upper = classify(params, hi, &strict)?;

    let ode = backward_ode(params)?;
    let us = params.u_star()?;
    let iopts = IntegratorOptions { stop_at_zero: true, ..opts.integrator };
    let profile = integrate_with(&ode, lo, &iopts, |obs| match obs {
        Observation::Event(ev) if ev.kind == EventKind::UPrimeZero && ev.u < us => Control::Stop,
        _ => Control::Continue,
    })?;
    let r_c = profile.r_last();
    Ok(CriticalResult {
        a_c: 0.5 * (lo + hi),
        bracket: (lo, hi),
        bracket_width: hi - lo,
        r_c,
        terminal_slope: ode.uprime(profile.w_last()),
        terminal_u: profile.u_last(),
        lower,
        upper,
        bisections,
        profile,
    })
}

/// Compactly supported profile at the critical height: integrates from the
/// vanishing end of the bracket, nudged up by `1e-7` relative so the run
/// still reaches zero under `integrator`. An infinite `max_step` is replaced
/// by `r_c / 2000` so the grid resolves difference stencils.
pub fn critical_compact_profile(
    params: &ModelParams,
    crit: &CriticalResult,
    integrator: &IntegratorOptions,
) -> Result<ProfileSolution> {
    let mut iopts = IntegratorOptions { stop_at_zero: true, ..*integrator };
    if !iopts.max_step.is_finite() {
        iopts.max_step = crit.r_c / 2000.0;
    }
    let sol = solve_backward(params, crit.bracket.1 * (1.0 + 1e-7), &iopts)?;
    if sol.first_event(EventKind::UZero).is_none() {
        return Err(Error::NoSupportRadius);
    }
    Ok(sol)
}

/// Brackets the critical height starting from `[u*, 2u*]` and doubling.
pub fn bracket_critical(params: &ModelParams, opts: &BackwardOptions) -> Result<(f64, f64)> {
    admissible(params)?;
    let strict = opts.strict();
    let mut lo = params.u_star()?;
    let mut hi = 2.0 * lo;
    for _ in 0..64 {
        if classify(params, hi, &strict)?.vanished() {
            return Ok((lo, hi));
        }
        lo = hi;
        hi *= 2.0;
    }
    Err(Error::BadBracket(format!("no vanishing profile found up to a = {hi}")))
}

/// Classifies every grid height in parallel; results keep grid order.
pub fn sweep_a(params: &ModelParams, grid: &[f64], opts: &BackwardOptions) -> Result<SweepResult> {
    slow_only(params, "sweep")?;
    let entries: Vec<Classification> = grid
        .par_iter()
        .map(|&a| match classify(params, a, opts) {
            Ok(c) => Ok(c),
            Err(Error::Inconclusive { a, .. }) => Ok(Classification {
                a,
                set: ProfileSet::Inconclusive,
                r_of_a: None,
                terminal_slope: None,
                certificate: Certificate::Failed,
                r_end: f64::NAN,
            }),
            Err(e) => Err(e),
        })
        .collect::<Result<_>>()?;
    let a1 = entries.iter().take_while(|c| c.set == ProfileSet::P).last().map(|c| c.a);
    let a2 = entries.iter().rev().take_while(|c| c.set == ProfileSet::N).last().map(|c| c.a);
    Ok(SweepResult { entries, a1, a2 })
}

/// Sup distance between the rescaled profile `u(r a^{-λ})/a` and the limit
/// profile with `w(0) = 1`, over `[0, min(0.9 z1, a^λ R(a))]`.
pub fn rescaled_limit_check(params: &ModelParams, a: f64, opts: &IntegratorOptions) -> Result<RescaledLimit> {
    slow_only(params, "rescaled limit")?;
    check_height(params, a)?;
    let lambda = params.lambda()?;
    let limit_ode = RadialOde::new(*params, Forcing::Limit)?;
    let lim = integrate(&limit_ode, 1.0, &IntegratorOptions { stop_at_zero: true, ..*opts })?;
    let z1 = lim
        .first_event(EventKind::UZero)
        .map(|e| e.r)
        .ok_or_else(|| Error::InsufficientRange(format!("limit profile has no zero below r = {}", opts.r_max)))?;

    let scale = a.powf(-lambda);
    let r_cmp_target = 0.9 * z1;
    let unscaled = IntegratorOptions {
        r0: opts.r0 * scale,
        r_max: 1.01 * r_cmp_target * scale,
        stop_at_zero: true,
        ..*opts
    };
    let sol = integrate(&backward_ode(params)?, a, &unscaled)?;
    let scaled_r_of_a = sol.first_event(EventKind::UZero).map(|e| e.r / scale);
    let r_compare = scaled_r_of_a.map_or(r_cmp_target, |r| r.min(r_cmp_target));

    let mut sup: f64 = 0.0;
    let mut probe = |rt: f64| {
        if let (Some(yl), Some(yu)) = (lim.eval(rt), sol.eval(rt * scale)) {
            sup = sup.max((yu[0] / a - yl[0]).abs());
        }
    };
    for seg in lim.segments() {
        for k in 0..4 {
            let rt = seg.r + 0.25 * k as f64 * seg.h;
            if rt <= r_compare {
                probe(rt);
            }
        }
    }
    probe(r_compare);
    Ok(RescaledLimit { a, lambda, sup_deviation: sup, r_compare, z1, scaled_r_of_a })
}

/// Assembles φ on the kept positivity intervals of an oscillating profile.
/// Interval 0 is `[0, R_1]`, interval k is `[R_{2k}, R_{2k+1}]`.
pub fn build_multi_bubble(
    profile: &ProfileSolution,
    kept: &[usize],
    params: &ModelParams,
) -> Result<MultiBubbleProfile> {
    slow_only(params, "multi-bubble assembly")?;
    let expo = params.phi_exponent()?;
    let zeros: Vec<f64> = profile.events_of(EventKind::UZero).map(|e| e.r).collect();
    let mut kept: Vec<usize> = kept.to_vec();
    kept.sort_unstable();
    kept.dedup();
    let needed = kept.last().map_or(0, |&k| 2 * k + 1);
    if zeros.len() < needed {
        return Err(Error::NotEnoughZeros { found: zeros.len(), needed });
    }
    let intervals: Vec<(usize, f64, f64)> = kept
        .iter()
        .map(|&k| {
            let start = if k == 0 { 0.0 } else { zeros[2 * k - 1] };
            (k, start, zeros[2 * k])
        })
        .collect();

    let mut r: Vec<f64> = vec![0.0];
    let mut u: Vec<f64> = vec![profile.u[0]];
    let mut zi = 0;
    for (&ri, &ui) in profile.r.iter().zip(&profile.u) {
        while zi < zeros.len() && zeros[zi] < ri {
            r.push(zeros[zi]);
            u.push(0.0);
            zi += 1;
        }
        if zi < zeros.len() && zeros[zi] == ri {
            zi += 1;
        }
        r.push(ri);
        u.push(ui);
    }
    while zi < zeros.len() {
        r.push(zeros[zi]);
        u.push(0.0);
        zi += 1;
    }
    let phi = r
        .iter()
        .zip(&u)
        .map(|(&ri, &ui)| {
            let inside = intervals.iter().any(|&(_, s, e)| ri >= s && ri <= e);
            if inside && ui > 0.0 {
                ui.powf(expo)
            } else {
                0.0
            }
        })
        .collect();
    Ok(MultiBubbleProfile { zeros, kept_intervals: intervals, r, phi })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::derive_params;

    fn closed_form(prm: &ModelParams) -> f64 {
        let q = prm.q().unwrap();
        ((q + 1.0) / (prm.m() * prm.chi())).powf(1.0 / q)
    }

    #[test]
    fn equilibrium_height_is_constant() {
        let prm = derive_params(2, 3.0, 1.0).unwrap();
        let us = prm.u_star().unwrap();
        let sol = solve_backward(&prm, us, &IntegratorOptions { r_max: 20.0, ..Default::default() }).unwrap();
        assert!(sol.u.iter().all(|u| (u - us).abs() < 1e-9));
    }

    #[test]
    fn rejects_nonpositive_height() {
        let prm = derive_params(1, 3.0, 1.0).unwrap();
        assert!(matches!(solve_backward(&prm, 0.0, &IntegratorOptions::default()), Err(Error::Domain(_))));
    }

    #[test]
    fn n1_classes_around_closed_form() {
        let prm = derive_params(1, 3.0, 1.0).unwrap();
        let ac = closed_form(&prm);
        assert!((ac - 1.10668).abs() < 1e-5);
        let opts = BackwardOptions::default();
        assert_eq!(classify(&prm, 0.5, &opts).unwrap().set, ProfileSet::P);
        assert_eq!(classify(&prm, 0.99 * ac, &opts).unwrap().set, ProfileSet::P);
        let c = classify(&prm, 2.0 * ac, &opts).unwrap();
        assert_eq!(c.set, ProfileSet::N);
        assert!(c.terminal_slope.unwrap() < 0.0);
        assert_eq!(classify(&prm, ac, &opts).unwrap().set, ProfileSet::N0);
    }

    #[test]
    fn n1_critical_height() {
        let prm = derive_params(1, 3.0, 1.0).unwrap();
        let opts = BackwardOptions::default();
        let br = bracket_critical(&prm, &opts).unwrap();
        let cr = find_critical_a(&prm, br, &opts).unwrap();
        let ac = closed_form(&prm);
        assert!(((cr.a_c - ac) / ac).abs() < 1e-6, "{} vs {ac}", cr.a_c);
        assert_eq!(cr.lower.set, ProfileSet::P);
        assert_eq!(cr.upper.set, ProfileSet::N);
    }

    #[test]
    fn inadmissible_search_is_domain_error() {
        let prm = derive_params(3, 2.1, 1.0).unwrap();
        assert!(matches!(find_critical_a(&prm, (0.5, 5.0), &BackwardOptions::default()), Err(Error::Domain(_))));
    }

    #[test]
    fn bad_bracket() {
        let prm = derive_params(1, 3.0, 1.0).unwrap();
        let r = find_critical_a(&prm, (0.5, 0.6), &BackwardOptions::default());
        assert!(matches!(r, Err(Error::BadBracket(_))));
    }

    #[test]
    fn multi_bubble_from_n1_oscillation() {
        let prm = derive_params(1, 3.0, 1.0).unwrap();
        let opts = IntegratorOptions { r_max: 40.0, stop_at_zero: false, ..Default::default() };
        let sol = solve_backward(&prm, 1.5, &opts).unwrap();
        let mb = build_multi_bubble(&sol, &[0, 1, 2], &prm).unwrap();
        assert_eq!(mb.kept_intervals.len(), 3);
        for &z in &mb.zeros[..5] {
            assert_eq!(mb.phi_at(z), 0.0);
        }
        let (_, s, e) = mb.kept_intervals[1];
        assert!(mb.phi_at(0.5 * (s + e)) > 0.0);
        let (_, _, e0) = mb.kept_intervals[0];
        assert_eq!(mb.phi_at(0.5 * (e0 + s)), 0.0);
        assert!(matches!(
            build_multi_bubble(&sol, &[40], &prm),
            Err(Error::NotEnoughZeros { .. })
        ));
    }
}
