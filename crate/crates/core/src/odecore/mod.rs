//! Adaptive integration of the radial profile equations in flux form.

mod dopri;
mod energy;
mod forcing;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use dopri::Segment;
pub use energy::{energy_derivative_check, local_residuals, EnergyCheck};
pub use forcing::{Forcing, RadialOde};

/// Integrator settings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntegratorOptions {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub event_tol: f64,
    pub r_max: f64,
    /// Integration stops with [`Termination::Diverged`] once `|u|` exceeds this.
    pub u_ceiling: f64,
    /// Startup radius.
    pub r0: f64,
    /// The startup radius is also capped at `r0_rel` times the length over
    /// which the startup series moves `u` by `max(|u0|, 1)`.
    pub r0_rel: f64,
    pub max_steps: usize,
    /// Upper bound on the step size.
    pub max_step: f64,
    /// Stop at the first zero of `u`.
    pub stop_at_zero: bool,
}

impl Default for IntegratorOptions {
    fn default() -> Self {
        IntegratorOptions {
            rel_tol: 1e-10,
            abs_tol: 1e-10,
            event_tol: 1e-12,
            r_max: 1e3,
            u_ceiling: 1e12,
            r0: 1e-6,
            r0_rel: 1e-6,
            max_steps: 2_000_000,
            max_step: f64::INFINITY,
            stop_at_zero: true,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum EventKind {
    UZero,
    UPrimeZero,
    EquilibriumHit,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Event {
    pub kind: EventKind,
    pub r: f64,
    pub u: f64,
    pub w: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Termination {
    ReachedRmax,
    UCrossedZero,
    UPrimeVanished,
    StepUnderflow,
    Diverged,
    /// Halted by the caller's observer.
    Stopped,
}

/// Trajectory of `(u, w)` on the accepted grid with dense output between nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct ProfileSolution {
    /// Initial height `u(0)`.
    pub u0: f64,
    pub r: Vec<f64>,
    pub u: Vec<f64>,
    pub w: Vec<f64>,
    pub energy: Vec<f64>,
    pub events: Vec<Event>,
    pub termination: Termination,
    pub ode: RadialOde,
    segments: Vec<Segment>,
}

impl ProfileSolution {
    pub fn len(&self) -> usize {
        self.r.len()
    }

    pub fn is_empty(&self) -> bool {
        self.r.is_empty()
    }

    pub fn r_first(&self) -> f64 {
        self.r[0]
    }

    pub fn r_last(&self) -> f64 {
        *self.r.last().expect("solution has at least one point")
    }

    pub fn u_last(&self) -> f64 {
        *self.u.last().expect("solution has at least one point")
    }

    pub fn w_last(&self) -> f64 {
        *self.w.last().expect("solution has at least one point")
    }

    /// `u'` at every grid point.
    pub fn uprime(&self) -> Vec<f64> {
        self.w.iter().map(|&w| self.ode.uprime(w)).collect()
    }

    pub fn segments(&self) -> &[Segment] {
        &self.segments
    }

    /// `(u, w)` at radius `r` from the dense output, `None` outside the grid.
    pub fn eval(&self, r: f64) -> Option<[f64; 2]> {
        let (lo, hi) = (self.r_first(), self.r_last());
        if !(r >= lo && r <= hi) {
            return None;
        }
        if self.segments.is_empty() {
            return Some([self.u[0], self.w[0]]);
        }
        let idx = self.segments.partition_point(|s| s.r <= r).saturating_sub(1);
        Some(self.segments[idx].eval(r))
    }

    pub fn events_of(&self, kind: EventKind) -> impl Iterator<Item = &Event> {
        self.events.iter().filter(move |e| e.kind == kind)
    }

    pub fn first_event(&self, kind: EventKind) -> Option<&Event> {
        self.events_of(kind).next()
    }
}

/// What the observer passed to [`integrate_with`] sees.
#[derive(Debug, Clone, Copy)]
pub enum Observation<'a> {
    Event(&'a Event),
    Step { r: f64, u: f64, w: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Control {
    Continue,
    Stop,
}

/// Two-term startup series at `r0`.
pub fn startup_state(ode: &RadialOde, u0: f64, r0: f64) -> Result<(f64, f64)> {
    if !(r0 > 0.0) || !r0.is_finite() {
        return Err(Error::domain(format!("startup radius must be > 0, got {r0}")));
    }
    if !u0.is_finite() {
        return Err(Error::domain(format!("initial value must be finite, got {u0}")));
    }
    if ode.singular_at_zero() && u0 <= 0.0 {
        return Err(Error::domain(format!("forcing is singular at u = 0; need u0 > 0, got {u0}")));
    }
    let g0 = ode.g(u0);
    if g0 == 0.0 {
        return Ok((u0, 0.0));
    }
    let n = ode.params().nf();
    let p = ode.p_eff();
    let w = -g0 * r0 / n;
    let du = (p - 1.0) / p * (g0.abs() / (ode.b_eff() * n)).powf(1.0 / (p - 1.0)) * r0.powf(p / (p - 1.0));
    Ok((u0 - g0.signum() * du, w))
}

/// Startup radius actually used for `u0`.
pub fn startup_radius(ode: &RadialOde, u0: f64, opts: &IntegratorOptions) -> f64 {
    let g0 = ode.g(u0).abs();
    if g0 == 0.0 || !g0.is_finite() || opts.r0_rel <= 0.0 {
        return opts.r0;
    }
    let p = ode.p_eff();
    let n = ode.params().nf();
    // u is additive for p = 2; otherwise u itself sets the scale of a change
    let delta = if ode.params().p() == 2.0 || u0 == 0.0 { u0.abs().max(1.0) } else { u0.abs() };
    let len = (delta * p / (p - 1.0)).powf((p - 1.0) / p) * (ode.b_eff() * n / g0).powf(1.0 / p);
    opts.r0.min(opts.r0_rel * len)
}

/// Integrate from the startup radius until `r_max` or a terminating event.
pub fn integrate(ode: &RadialOde, u0: f64, opts: &IntegratorOptions) -> Result<ProfileSolution> {
    integrate_with(ode, u0, opts, |_| Control::Continue)
}

fn event_value(kind: EventKind, y: &[f64; 2], u_eq: f64) -> f64 {
    match kind {
        EventKind::UZero => y[0],
        EventKind::UPrimeZero => y[1],
        EventKind::EquilibriumHit => y[0] - u_eq,
    }
}

fn crosses(f0: f64, f1: f64) -> bool {
    (f0 < 0.0 && f1 >= 0.0) || (f0 > 0.0 && f1 <= 0.0)
}

fn locate(seg: &Segment, kind: EventKind, u_eq: f64, f0: f64) -> f64 {
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    let floor = f64::EPSILON * (seg.r.abs() + seg.h.abs());
    for _ in 0..200 {
        if (hi - lo) * seg.h <= floor {
            break;
        }
        let mid = 0.5 * (lo + hi);
        let fm = event_value(kind, &seg.eval_theta(mid), u_eq);
        if fm == 0.0 {
            return seg.r + mid * seg.h;
        }
        if (fm < 0.0) == (f0 < 0.0) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    seg.r + hi * seg.h
}

/// Integrate, handing every located event and accepted step to `observe`.
/// Returning [`Control::Stop`] on an event truncates the trajectory there.
pub fn integrate_with<F>(
    ode: &RadialOde,
    u0: f64,
    opts: &IntegratorOptions,
    mut observe: F,
) -> Result<ProfileSolution>
where
    F: FnMut(Observation<'_>) -> Control,
{
    let r0 = startup_radius(ode, u0, opts);
    if !(opts.r_max > r0) {
        return Err(Error::domain(format!("r_max = {} must exceed r0 = {r0}", opts.r_max)));
    }
    if !(opts.rel_tol > 0.0 && opts.abs_tol > 0.0) {
        return Err(Error::domain("tolerances must be positive"));
    }
    let (us, ws) = startup_state(ode, u0, r0)?;
    let f = |r: f64, y: &[f64; 2]| ode.rhs(r, y);
    let u_eq = ode.equilibrium();
    let kinds: &[EventKind] = if u_eq.is_some() {
        &[EventKind::UZero, EventKind::UPrimeZero, EventKind::EquilibriumHit]
    } else {
        &[EventKind::UZero, EventKind::UPrimeZero]
    };
    let u_eq = u_eq.unwrap_or(0.0);

    let mut sol = ProfileSolution {
        u0,
        r: vec![r0],
        u: vec![us],
        w: vec![ws],
        energy: Vec::new(),
        events: Vec::new(),
        termination: Termination::ReachedRmax,
        ode: *ode,
        segments: Vec::new(),
    };

    let mut r = r0;
    let mut y = [us, ws];
    let mut k1 = f(r, &y);
    if !(k1[0].is_finite() && k1[1].is_finite()) {
        return Err(Error::Solver(format!("non-finite right-hand side at startup (u0 = {u0})")));
    }
    let mut h = (0.5 * r0).min(opts.max_step);
    let mut steps = 0usize;

    let termination = 'outer: loop {
        if r >= opts.r_max {
            break Termination::ReachedRmax;
        }
        if steps >= opts.max_steps {
            return Err(Error::Solver(format!("exceeded {} steps at r = {r}", opts.max_steps)));
        }
        h = h.min(opts.max_step).min(opts.r_max - r);
        if h < 1e-14 * r {
            break Termination::StepUnderflow;
        }
        let trial = match dopri::step(&f, r, &y, &k1, h, opts.abs_tol, opts.rel_tol) {
            Some(t) if t.err <= 1.0 => t,
            Some(t) if t.err.is_finite() => {
                h *= (0.9 * t.err.powf(-0.2)).clamp(0.1, 0.9);
                continue;
            }
            _ => {
                h *= 0.25;
                continue;
            }
        };
        // u is only C^{1,1/(p-1)} where the flux changes sign; land a step on
        // that point instead of stepping across it.
        if ode.p_eff() != 2.0 && crosses(y[1], trial.y1[1]) {
            let re = locate(&trial.seg, EventKind::UPrimeZero, 0.0, y[1]);
            if re - r > 1e-3 * h && r + h - re > 1e-3 * h {
                h = re - r;
                continue;
            }
        }
        steps += 1;
        let seg = trial.seg;
        let r1 = r + h;

        let mut found: Vec<Event> = Vec::new();
        for &kind in kinds {
            let f0 = event_value(kind, &y, u_eq);
            let f1 = event_value(kind, &trial.y1, u_eq);
            if crosses(f0, f1) {
                let re = locate(&seg, kind, u_eq, f0);
                let ye = seg.eval(re);
                found.push(Event { kind, r: re, u: ye[0], w: ye[1] });
            }
        }
        found.sort_by(|a, b| a.r.total_cmp(&b.r));

        for ev in found {
            sol.events.push(ev);
            let stop_zero = opts.stop_at_zero && ev.kind == EventKind::UZero;
            let ctl = observe(Observation::Event(&ev));
            if stop_zero || ctl == Control::Stop {
                sol.segments.push(seg);
                if ev.r > r {
                    sol.r.push(ev.r);
                    sol.u.push(ev.u);
                    sol.w.push(ev.w);
                }
                break 'outer match ev.kind {
                    EventKind::UZero => Termination::UCrossedZero,
                    EventKind::UPrimeZero => Termination::UPrimeVanished,
                    EventKind::EquilibriumHit => Termination::Stopped,
                };
            }
        }

        sol.segments.push(seg);
        r = r1;
        y = trial.y1;
        k1 = trial.k7;
        sol.r.push(r);
        sol.u.push(y[0]);
        sol.w.push(y[1]);

        if y[0].abs() > opts.u_ceiling {
            break Termination::Diverged;
        }
        if ode.singular_at_zero() && y[0] < 1e-8 {
            break Termination::StepUnderflow;
        }
        if observe(Observation::Step { r, u: y[0], w: y[1] }) == Control::Stop {
            break Termination::Stopped;
        }

        let fac = if trial.err > 0.0 { (0.9 * trial.err.powf(-0.2)).clamp(0.2, 5.0) } else { 5.0 };
        h *= fac;
    };

    sol.termination = termination;
    sol.energy = sol
        .u
        .iter()
        .zip(&sol.w)
        .map(|(&u, &w)| ode.energy(u, w).unwrap_or(f64::NAN))
        .collect();
    Ok(sol)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::derive_params;

    fn bwd_slow(n: usize, p: f64) -> RadialOde {
        RadialOde::new(derive_params(n, p, 1.0).unwrap(), Forcing::BackwardSlow).unwrap()
    }

    #[test]
    fn startup_at_equilibrium() {
        let ode = bwd_slow(1, 3.0);
        let us = ode.equilibrium().unwrap();
        let (u, w) = startup_state(&ode, us, 1e-4).unwrap();
        assert!((u - us).abs() < 1e-15);
        assert!(w.abs() < 1e-18);
    }

    #[test]
    fn startup_series_values() {
        let ode = bwd_slow(1, 3.0);
        let (u, w) = startup_state(&ode, 2.0, 1e-4).unwrap();
        assert!((w + 255.75e-4).abs() < 1e-15);
        // u = 2 - (2/3) (255.75/4)^{1/2} r0^{3/2}
        let expect = 2.0 - 2.0 / 3.0 * (255.75f64 / 4.0).sqrt() * 1e-6;
        assert!((u - expect).abs() < 1e-15);

        let lin = RadialOde::new(derive_params(2, 2.0, 1.0).unwrap(), Forcing::ForwardLinear).unwrap();
        let (u, w) = startup_state(&lin, 0.0, 1e-3).unwrap();
        assert!((w + 1e-3).abs() < 1e-17);
        assert!((u + 2.0 / 4.0 * 1e-6).abs() < 1e-18);
    }

    #[test]
    fn fast_startup_rejects_zero() {
        let ode = RadialOde::new(derive_params(3, 1.8, 1.0).unwrap(), Forcing::BackwardFast).unwrap();
        assert!(matches!(startup_state(&ode, 0.0, 1e-6), Err(Error::Domain(_))));
    }

    #[test]
    fn equilibrium_stays_constant() {
        let ode = bwd_slow(1, 3.0);
        let us = ode.equilibrium().unwrap();
        let sol = integrate(&ode, us, &IntegratorOptions::default()).unwrap();
        assert_eq!(sol.termination, Termination::ReachedRmax);
        assert!(sol.u.iter().all(|u| (u - us).abs() < 1e-9));
    }

    #[test]
    fn n1_oscillation_has_events_and_no_zero() {
        let ode = bwd_slow(1, 3.0);
        let opts = IntegratorOptions { r_max: 30.0, ..Default::default() };
        let sol = integrate(&ode, 0.5, &opts).unwrap();
        assert_eq!(sol.termination, Termination::ReachedRmax);
        assert!(sol.first_event(EventKind::UZero).is_none());
        assert!(sol.events_of(EventKind::UPrimeZero).count() >= 4);
        for ev in sol.events_of(EventKind::UPrimeZero) {
            assert!(ev.w.abs() <= 1e-12);
        }
    }

    #[test]
    fn dense_eval_matches_nodes() {
        let ode = bwd_slow(2, 3.0);
        let opts = IntegratorOptions { r_max: 5.0, ..Default::default() };
        let sol = integrate(&ode, 0.5, &opts).unwrap();
        for i in (0..sol.len()).step_by(7) {
            let y = sol.eval(sol.r[i]).unwrap();
            assert!((y[0] - sol.u[i]).abs() < 1e-13);
        }
        assert!(sol.eval(10.0).is_none());
    }
}
