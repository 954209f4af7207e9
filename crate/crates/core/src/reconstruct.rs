//! Density and potential profiles, the space-time self-similar pair, mass,
//! Dirac-δ concentration and full-system residuals.

use crate::backward::MultiBubbleProfile;
use crate::error::{Error, Result};
use crate::forward::TailModel;
use crate::odecore::{EventKind, ProfileSolution};
use crate::params::{ModelParams, Regime};
use crate::quad;

/// Piecewise-linear interpolation on an increasing grid; `None` outside it.
pub fn interp_linear(x: &[f64], y: &[f64], t: f64) -> Option<f64> {
    if x.is_empty() || !(t >= x[0] && t <= x[x.len() - 1]) {
        return None;
    }
    let i = x.partition_point(|&v| v <= t);
    if i == 0 {
        return Some(y[0]);
    }
    if i >= x.len() {
        return Some(y[x.len() - 1]);
    }
    let (x0, x1) = (x[i - 1], x[i]);
    if x1 == x0 {
        return Some(y[i]);
    }
    let s = (t - x0) / (x1 - x0);
    Some(y[i - 1] + s * (y[i] - y[i - 1]))
}

/// Cubic Hermite interpolation with Fritsch–Carlson limited slopes.
pub fn interp_monotone_cubic(x: &[f64], y: &[f64], d: &[f64], t: f64) -> Option<f64> {
    if x.is_empty() || !(t >= x[0] && t <= x[x.len() - 1]) {
        return None;
    }
    let i = x.partition_point(|&v| v <= t).clamp(1, x.len() - 1);
    let (x0, x1) = (x[i - 1], x[i]);
    let h = x1 - x0;
    if h <= 0.0 {
        return Some(y[i]);
    }
    let delta = (y[i] - y[i - 1]) / h;
    let (mut d0, mut d1) = (d[i - 1], d[i]);
    if delta == 0.0 {
        d0 = 0.0;
        d1 = 0.0;
    } else {
        if d0 * delta < 0.0 {
            d0 = 0.0;
        }
        if d1 * delta < 0.0 {
            d1 = 0.0;
        }
        let (a, b) = (d0 / delta, d1 / delta);
        let s = a * a + b * b;
        if s > 9.0 {
            let tau = 3.0 / s.sqrt();
            d0 = tau * a * delta;
            d1 = tau * b * delta;
        }
    }
    let s = (t - x0) / h;
    let (s2, s3) = (s * s, s * s * s);
    Some(
        (2.0 * s3 - 3.0 * s2 + 1.0) * y[i - 1]
            + (s3 - 2.0 * s2 + s) * h * d0
            + (-2.0 * s3 + 3.0 * s2) * y[i]
            + (s3 - s2) * h * d1,
    )
}

/// Reconstructed density profile φ.
#[derive(Debug, Clone, PartialEq)]
pub struct PhiProfile {
    pub r: Vec<f64>,
    pub phi: Vec<f64>,
    /// `|φ'|^{p-2}φ'/φ`, available when φ comes from an integrated profile.
    pub flux: Option<Vec<f64>>,
    pub tail: TailModel,
    pub support_radius: Option<f64>,
    /// `d ln φ / dr` at the last grid point.
    pub log_slope_end: f64,
    pub backward: bool,
}

impl PhiProfile {
    pub fn r_end(&self) -> f64 {
        *self.r.last().unwrap_or(&0.0)
    }

    fn phi_end(&self) -> f64 {
        *self.phi.last().unwrap_or(&0.0)
    }

    /// `ln φ` of the tail model at `s ≥ r_end` (`-∞` when φ vanishes there).
    fn tail_log_phi(&self, s: f64) -> f64 {
        let re = self.r_end();
        match self.tail {
            TailModel::Compact { .. } if s > re => f64::NEG_INFINITY,
            TailModel::Power { exponent, coefficient } => coefficient.ln() + exponent * s.ln(),
            TailModel::LogQuadratic { coefficient } => {
                let d = s - re;
                self.phi_end().ln() + self.log_slope_end * d + coefficient * d * d
            }
            _ => self.phi_end().ln(),
        }
    }

    /// φ at radius `r`: linear on the grid, tail model beyond it.
    pub fn phi_at(&self, r: f64) -> f64 {
        let r = r.abs();
        match interp_linear(&self.r, &self.phi, r) {
            Some(v) => v,
            None => self.tail_log_phi(r).exp(),
        }
    }

    /// `∫_from^∞ s^β (ln s)^{[log]} φ(s)^pow ds` over the tail, `from ≥ r_end`.
    /// `None` when the tail integral diverges.
    fn tail_integral(&self, pow: f64, beta: f64, from: f64, log: bool) -> Option<f64> {
        let from = from.max(self.r_end());
        match self.tail {
            TailModel::Compact { .. } => Some(0.0),
            TailModel::NonDecaying => None,
            TailModel::Power { exponent, coefficient } => {
                let e = beta + exponent * pow;
                if e >= -1.0 {
                    return None;
                }
                let c = coefficient.powf(pow);
                let k = e + 1.0;
                let fk = from.powf(k);
                Some(if log { c * (-fk * from.ln() / k + fk / (k * k)) } else { -c * fk / k })
            }
            TailModel::LogQuadratic { coefficient } => {
                let slope = self.log_slope_end + 2.0 * coefficient * (from - self.r_end());
                let rate = -(pow * slope) - beta / from;
                if rate <= 0.0 {
                    return None;
                }
                let lf = if log { from.ln() } else { 1.0 };
                let v = (pow * self.tail_log_phi(from)).exp() * from.powf(beta) * lf / rate;
                Some(if v.is_finite() { v } else { 0.0 })
            }
        }
    }
}

fn tail_from_solution(sol: &ProfileSolution, params: &ModelParams, backward: bool) -> Result<TailModel> {
    Ok(match params.regime() {
        Regime::SlowDiffusion => match sol.first_event(EventKind::UZero) {
            Some(ev) => TailModel::Compact { radius: ev.r },
            None => TailModel::NonDecaying,
        },
        Regime::FastDiffusion if !backward => {
            let exponent = params.p() / (params.p() - 2.0);
            let rl = sol.r_last();
            let coefficient = sol.u_last().powf(params.phi_exponent()?) * rl.powf(-exponent);
            TailModel::Power { exponent, coefficient }
        }
        Regime::LinearDiffusion if !backward => {
            TailModel::LogQuadratic { coefficient: -1.0 / (2.0 * params.m() * params.nf()) }
        }
        _ => TailModel::NonDecaying,
    })
}

/// Maps an integrated u-profile to φ. Slow profiles are truncated at the
/// first zero of u.
pub fn phi_from_u(sol: &ProfileSolution, params: &ModelParams) -> Result<PhiProfile> {
    if sol.is_empty() {
        return Err(Error::domain("empty profile"));
    }
    let backward = sol.ode.forcing().is_backward();
    let regime = params.regime();
    let tail = tail_from_solution(sol, params, backward)?;
    let cut = match tail {
        TailModel::Compact { radius } => Some(radius),
        _ => None,
    };
    let p = params.p();
    let flux_sign = if p < 2.0 { -1.0 } else { 1.0 };

    let mut r = Vec::with_capacity(sol.len() + 2);
    let mut u = Vec::with_capacity(sol.len() + 2);
    let mut w = Vec::with_capacity(sol.len() + 2);
    if sol.r[0] > 0.0 {
        r.push(0.0);
        u.push(sol.u0);
        w.push(0.0);
    }
    for i in 0..sol.len() {
        if let Some(rc) = cut {
            if sol.r[i] >= rc {
                break;
            }
        }
        r.push(sol.r[i]);
        u.push(sol.u[i]);
        w.push(sol.w[i]);
    }
    if let Some(rc) = cut {
        let ev = sol.first_event(EventKind::UZero).expect("compact tail has a zero");
        r.push(rc);
        u.push(0.0);
        w.push(ev.w);
    }

    let phi: Vec<f64> = match regime {
        Regime::LinearDiffusion => u.iter().map(|v| v.exp()).collect(),
        Regime::FastDiffusion => {
            if let Some(i) = u.iter().position(|&v| v <= 0.0) {
                return Err(Error::NegativeBase { r: r[i], u: u[i] });
            }
            let e = params.phi_exponent()?;
            u.iter().map(|v| v.powf(e)).collect()
        }
        Regime::SlowDiffusion => {
            let e = params.phi_exponent()?;
            u.iter().map(|&v| if v > 0.0 { v.powf(e) } else { 0.0 }).collect()
        }
    };
    let flux: Vec<f64> = w.iter().map(|&x| flux_sign * x).collect();
    let (ul, wl) = (*u.last().unwrap(), *w.last().unwrap());
    let upl = sol.ode.uprime(wl);
    let log_slope_end = match regime {
        Regime::LinearDiffusion => upl,
        _ if ul > 0.0 => params.phi_exponent()? * upl / ul,
        _ => f64::NEG_INFINITY,
    };
    Ok(PhiProfile {
        r,
        phi,
        flux: Some(flux),
        tail,
        support_radius: cut,
        log_slope_end,
        backward,
    })
}

/// φ of an assembled multi-bubble profile, compactly supported on the last
/// kept interval.
pub fn phi_from_multi_bubble(mb: &MultiBubbleProfile) -> Result<PhiProfile> {
    let radius = mb
        .kept_intervals
        .iter()
        .map(|&(_, _, e)| e)
        .fold(f64::NAN, f64::max);
    if !radius.is_finite() {
        return Err(Error::domain("multi-bubble profile keeps no interval"));
    }
    let n = mb.r.partition_point(|&x| x <= radius);
    Ok(PhiProfile {
        r: mb.r[..n].to_vec(),
        phi: mb.phi[..n].to_vec(),
        flux: None,
        tail: TailModel::Compact { radius },
        support_radius: Some(radius),
        log_slope_end: f64::NEG_INFINITY,
        backward: true,
    })
}

#[derive(Debug, Clone, PartialEq)]
struct Exterior {
    /// `∫_0^∞ s^{N-1} φ^m`.
    i_total: f64,
}

/// Reconstructed potential profile ψ.
#[derive(Debug, Clone, PartialEq)]
pub struct PsiProfile {
    pub r: Vec<f64>,
    pub psi: Vec<f64>,
    pub dpsi: Vec<f64>,
    pub n: usize,
    /// All tail integrals converge (always true on a returned profile; a
    /// divergent tail is reported as [`Error::IllPosedPotential`]).
    pub well_posed: bool,
    ext: Exterior,
    phi: PhiProfile,
    m: f64,
}

/// Well-posedness bound for non-compact tails: ψ needs `p > 2√(N/(N+1))`.
pub fn potential_threshold(n: usize) -> f64 {
    let nf = n as f64;
    2.0 * (nf / (nf + 1.0)).sqrt()
}

/// Reconstructs ψ from φ with the radial Newtonian kernel.
pub fn psi_from_phi(phi: &PhiProfile, params: &ModelParams) -> Result<PsiProfile> {
    let n = params.n();
    let nf = params.nf();
    let m = params.m();
    let p = params.p();
    let compact = matches!(phi.tail, TailModel::Compact { .. });
    if !compact && p <= potential_threshold(n) {
        return Err(Error::IllPosedPotential(format!(
            "p = {p} <= 2*sqrt(N/(N+1)) = {} and the profile has a non-compact tail",
            potential_threshold(n)
        )));
    }
    let ill = |what: &str| Error::IllPosedPotential(format!("tail integral of {what} diverges ({:?})", phi.tail));

    let r = &phi.r;
    let fm: Vec<f64> = phi.phi.iter().map(|v| v.powf(m)).collect();
    let weighted = |g: &dyn Fn(f64) -> f64| -> Vec<f64> { r.iter().zip(&fm).map(|(&s, &f)| g(s) * f).collect() };
    let re = phi.r_end();

    let i_cum = quad::cumulative(r, &weighted(&|s| s.powf(nf - 1.0)));
    let i_total = i_cum.last().unwrap() + phi.tail_integral(m, nf - 1.0, re, false).ok_or_else(|| ill("s^{N-1} φ^m"))?;
    let dpsi: Vec<f64> = r
        .iter()
        .zip(&i_cum)
        .map(|(&s, &i)| if s > 0.0 { -i * s.powf(1.0 - nf) } else { 0.0 })
        .collect();

    let psi: Vec<f64> = match n {
        1 => {
            let j = quad::cumulative(r, &weighted(&|s| s));
            let jt = j.last().unwrap() + phi.tail_integral(m, 1.0, re, false).ok_or_else(|| ill("s φ^m"))?;
            (0..r.len()).map(|k| -r[k] * i_cum[k] - (jt - j[k])).collect()
        }
        2 => {
            let j = quad::cumulative(r, &weighted(&|s| if s > 0.0 { s * s.ln() } else { 0.0 }));
            let jt = j.last().unwrap() + phi.tail_integral(m, 1.0, re, true).ok_or_else(|| ill("s ln s φ^m"))?;
            (0..r.len())
                .map(|k| {
                    let near = if r[k] > 0.0 { -r[k].ln() * i_cum[k] } else { 0.0 };
                    near - (jt - j[k])
                })
                .collect()
        }
        _ => {
            let j = quad::cumulative(r, &weighted(&|s| s));
            let jt = j.last().unwrap() + phi.tail_integral(m, 1.0, re, false).ok_or_else(|| ill("s φ^m"))?;
            (0..r.len())
                .map(|k| {
                    let near = if r[k] > 0.0 { i_cum[k] * r[k].powf(2.0 - nf) } else { 0.0 };
                    (near + (jt - j[k])) / (nf - 2.0)
                })
                .collect()
        }
    };
    Ok(PsiProfile {
        r: r.clone(),
        psi,
        dpsi,
        n,
        well_posed: true,
        ext: Exterior { i_total },
        phi: phi.clone(),
        m,
    })
}

impl PsiProfile {
    /// ψ at radius `r`: monotone cubic on the grid, kernel formula beyond it.
    pub fn psi_at(&self, r: f64) -> f64 {
        let r = r.abs();
        if let Some(v) = interp_monotone_cubic(&self.r, &self.psi, &self.dpsi, r) {
            return v;
        }
        let nf = self.n as f64;
        let tail = |beta: f64, log: bool| self.phi.tail_integral(self.m, beta, r, log).unwrap_or(0.0);
        let i_r = self.ext.i_total - tail(nf - 1.0, false);
        match self.n {
            1 => -r * i_r - tail(1.0, false),
            2 => -r.ln() * i_r - tail(1.0, true),
            _ => (i_r * r.powf(2.0 - nf) + tail(1.0, false)) / (nf - 2.0),
        }
    }

    /// ψ' at radius `r`.
    pub fn dpsi_at(&self, r: f64) -> f64 {
        let r = r.abs();
        if let Some(v) = interp_linear(&self.r, &self.dpsi, r) {
            return v;
        }
        let nf = self.n as f64;
        let i_r = self.ext.i_total - self.phi.tail_integral(self.m, nf - 1.0, r, false).unwrap_or(0.0);
        -i_r * r.powf(1.0 - nf)
    }

    /// `∫_0^∞ s^{N-1} φ^m ds`.
    pub fn source_integral(&self) -> f64 {
        self.ext.i_total
    }
}

/// Total mass `ω_N ∫ φ r^{N-1} dr`.
pub fn mass(phi: &PhiProfile, params: &ModelParams) -> Result<f64> {
    let nf = params.nf();
    let y: Vec<f64> = phi.r.iter().zip(&phi.phi).map(|(&s, &f)| f * s.powf(nf - 1.0)).collect();
    let tail = phi
        .tail_integral(1.0, nf - 1.0, phi.r_end(), false)
        .ok_or_else(|| Error::InfiniteMass(format!("tail {:?} is not integrable against r^(N-1)", phi.tail)))?;
    Ok(params.omega() * (quad::integrate(&phi.r, &y) + tail))
}

/// Time direction of a self-similar solution.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Direction {
    /// Collapses at `t_blowup`.
    Backward { t_blowup: f64 },
    Forward,
}

/// Space-time self-similar pair built from a profile.
#[derive(Debug, Clone, PartialEq)]
pub struct SelfSimilarSolution {
    pub direction: Direction,
    pub params: ModelParams,
    pub phi: PhiProfile,
    pub psi: PsiProfile,
}

impl SelfSimilarSolution {
    pub fn new(direction: Direction, params: ModelParams, phi: PhiProfile, psi: PsiProfile) -> Result<Self> {
        if let Direction::Backward { t_blowup } = direction {
            if !t_blowup.is_finite() {
                return Err(Error::domain("blow-up time must be finite"));
            }
        }
        if phi.backward != matches!(direction, Direction::Backward { .. }) {
            return Err(Error::domain("profile direction does not match the requested direction"));
        }
        Ok(Self { direction, params, phi, psi })
    }

    /// Time scale `s` (`T - t` or `t`) and length scale `θ = s^{1/(mN)}`.
    pub fn scales(&self, t: f64) -> Result<(f64, f64)> {
        let s = match self.direction {
            Direction::Backward { t_blowup } => {
                if !(t < t_blowup) {
                    return Err(Error::OutOfTimeDomain { t, reason: format!("backward solution needs t < T = {t_blowup}") });
                }
                if !(t > 0.0) {
                    return Err(Error::OutOfTimeDomain { t, reason: "backward solution needs t > 0".into() });
                }
                t_blowup - t
            }
            Direction::Forward => {
                if !(t > 0.0 && t.is_finite()) {
                    return Err(Error::OutOfTimeDomain { t, reason: "forward solution needs t > 0".into() });
                }
                t
            }
        };
        Ok((s, s.powf(self.params.beta())))
    }

    /// Support radius at time `t`, if φ is compactly supported.
    pub fn support_radius_at(&self, t: f64) -> Result<Option<f64>> {
        let (_, th) = self.scales(t)?;
        Ok(self.phi.support_radius.map(|r| th * r))
    }

    /// `(ρ, c)` at the point `x` and time `t`.
    pub fn evaluate(&self, x: &[f64], t: f64) -> Result<(f64, f64)> {
        if x.len() != self.params.n() {
            return Err(Error::domain(format!("point has dimension {}, expected {}", x.len(), self.params.n())));
        }
        let (s, th) = self.scales(t)?;
        let xi = x.iter().map(|v| v * v).sum::<f64>().sqrt() / th;
        let rho = s.powf(-self.params.alpha()) * self.phi.phi_at(xi);
        let c = s.powf(self.params.gamma()) * self.psi.psi_at(xi);
        Ok((rho, c))
    }

    /// Mass of `ρ(·, t)` from samples of ρ on the mapped profile grid.
    pub fn mass_at(&self, t: f64) -> Result<f64> {
        let (s, th) = self.scales(t)?;
        let n = self.params.n();
        let nf = self.params.nf();
        let mut x = vec![0.0; n];
        let mut xs = Vec::with_capacity(self.phi.r.len());
        let mut ys = Vec::with_capacity(self.phi.r.len());
        for &ri in &self.phi.r {
            x[0] = th * ri;
            let (rho, _) = self.evaluate(&x, t)?;
            xs.push(x[0]);
            ys.push(rho * x[0].powf(nf - 1.0));
        }
        let tail = self
            .phi
            .tail_integral(1.0, nf - 1.0, self.phi.r_end(), false)
            .ok_or_else(|| Error::InfiniteMass(format!("tail {:?}", self.phi.tail)))?;
        let tail = s.powf(-self.params.alpha()) * th.powf(nf) * tail;
        Ok(self.params.omega() * (quad::integrate(&xs, &ys) + tail))
    }
}

type RadialFn = Box<dyn Fn(f64) -> f64 + Send + Sync>;
type PointFn = Box<dyn Fn(&[f64]) -> f64 + Send + Sync>;

/// Test function for the δ-concentration check.
pub enum TestFunction {
    /// `exp(-|x|²)`, differenced with `expm1`.
    Gaussian,
    /// Radial function given by its profile `f(|x|)`.
    Radial(RadialFn),
    /// General function of the point; spherical means are taken by quadrature
    /// (N ≤ 3).
    General(PointFn),
}

impl std::fmt::Debug for TestFunction {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            TestFunction::Gaussian => write!(f, "Gaussian"),
            TestFunction::Radial(_) => write!(f, "Radial(..)"),
            TestFunction::General(_) => write!(f, "General(..)"),
        }
    }
}

struct SphereRule {
    dirs: Vec<Vec<f64>>,
    weights: Vec<f64>,
}

fn sphere_rule(n: usize) -> Result<SphereRule> {
    use std::f64::consts::PI;
    let (dirs, weights) = match n {
        1 => (vec![vec![1.0], vec![-1.0]], vec![0.5, 0.5]),
        2 => {
            let k = 64;
            let d = (0..k)
                .map(|j| {
                    let a = 2.0 * PI * j as f64 / k as f64;
                    vec![a.cos(), a.sin()]
                })
                .collect();
            (d, vec![1.0 / k as f64; k])
        }
        3 => {
            let (zs, wz) = quad::gauss_legendre(32);
            let k = 64;
            let mut d = Vec::new();
            let mut w = Vec::new();
            for (z, wz) in zs.iter().zip(&wz) {
                let rho = (1.0 - z * z).sqrt();
                for j in 0..k {
                    let a = 2.0 * PI * j as f64 / k as f64;
                    d.push(vec![rho * a.cos(), rho * a.sin(), *z]);
                    w.push(wz / (2.0 * k as f64));
                }
            }
            (d, w)
        }
        _ => return Err(Error::domain(format!("general test functions are supported for N <= 3, got N = {n}"))),
    };
    Ok(SphereRule { dirs, weights })
}

impl TestFunction {
    /// Returns a closure computing `mean_{|σ|=1} f(ρσ) - f(0)`.
    fn centered_mean(&self, n: usize) -> Result<Box<dyn Fn(f64) -> f64 + '_>> {
        Ok(match self {
            TestFunction::Gaussian => Box::new(|rho: f64| (-rho * rho).exp_m1()),
            TestFunction::Radial(f) => {
                let f0 = f(0.0);
                Box::new(move |rho: f64| f(rho) - f0)
            }
            TestFunction::General(f) => {
                let rule = sphere_rule(n)?;
                let f0 = f(&vec![0.0; n]);
                Box::new(move |rho: f64| {
                    let mut acc = 0.0;
                    let mut pt = vec![0.0; n];
                    for (d, w) in rule.dirs.iter().zip(&rule.weights) {
                        for (p, c) in pt.iter_mut().zip(d) {
                            *p = rho * c;
                        }
                        acc += w * (f(&pt) - f0);
                    }
                    acc
                })
            }
        })
    }
}

/// One δ-test sample.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct DeltaSample {
    pub t: f64,
    pub theta: f64,
    pub deviation: f64,
}

/// δ-concentration deviations along a time list.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct DeltaReport {
    pub mass: f64,
    pub samples: Vec<DeltaSample>,
    /// Deviation strictly decreases toward the singular time.
    pub monotone: bool,
}

/// `|∫ρ(·,t) f - M f(0)|` at each time, reduced to the similarity variable:
/// `ω_N |∫ φ(r) r^{N-1} (f̄(θ r) - f(0)) dr|` with `f̄` the spherical mean.
pub fn delta_test(ss: &SelfSimilarSolution, f: &TestFunction, times: &[f64]) -> Result<DeltaReport> {
    let n = ss.params.n();
    let nf = ss.params.nf();
    let mass = mass(&ss.phi, &ss.params)?;
    let g = f.centered_mean(n)?;
    let phi = &ss.phi;
    let re = phi.r_end();
    let (gx, gw) = quad::gauss_legendre(16);

    let mut samples = Vec::with_capacity(times.len());
    for &t in times {
        let (_, th) = ss.scales(t)?;
        // resolve the test function's length scale 1/θ on the profile grid
        let h_target = 0.05 / th;
        let mut xs = Vec::with_capacity(phi.r.len());
        for w in phi.r.windows(2) {
            let k = ((w[1] - w[0]) / h_target).ceil().clamp(1.0, 1e4) as usize;
            for j in 0..k {
                xs.push(w[0] + (w[1] - w[0]) * j as f64 / k as f64);
            }
        }
        xs.push(re);
        let ys: Vec<f64> = xs.iter().map(|&x| phi.phi_at(x) * x.powf(nf - 1.0) * g(th * x)).collect();
        let mut acc = quad::integrate(&xs, &ys);

        // tail in τ = ln(r / r_end)
        let decay = match phi.tail {
            TailModel::Power { exponent, .. } => Some(-(exponent + nf)),
            TailModel::LogQuadratic { .. } => Some(1.0),
            TailModel::Compact { .. } => None,
            TailModel::NonDecaying => {
                return Err(Error::InfiniteMass("profile does not decay".into()));
            }
        };
        if let Some(dec) = decay {
            let tau_max = (46.0 / dec).min(60.0);
            let panels = ((tau_max / 0.25).ceil() as usize).max(1);
            let hw = tau_max / panels as f64 / 2.0;
            for k in 0..panels {
                let mid = (2 * k + 1) as f64 * hw;
                for (x, w) in gx.iter().zip(&gw) {
                    let tau = mid + hw * x;
                    let rr = re * tau.exp();
                    let v = phi.tail_log_phi(rr).exp() * rr.powf(nf) * g(th * rr);
                    if v.is_finite() {
                        acc += hw * w * v;
                    }
                }
            }
        }
        samples.push(DeltaSample { t, theta: th, deviation: (ss.params.omega() * acc).abs() });
    }
    let monotone = samples.windows(2).all(|w| w[1].deviation < w[0].deviation);
    Ok(DeltaReport { mass, samples, monotone })
}

/// Maximum residuals of the reduced system on a radial interval.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct Residuals {
    /// Scalar profile equation `F' + (N-1)/r F + χφ^m ∓ 1/m`.
    pub res1: f64,
    /// Poisson equation `ψ'' + (N-1)/r ψ' + φ^m`.
    pub res2: f64,
    /// First integral `±r/(mN) - F + χψ'`.
    pub identity: f64,
    pub points: usize,
}

/// Residuals of the reduced system at grid points in `[lo, hi]`, with
/// derivatives by five-point differences on the grid.
pub fn system_residual(
    phi: &PhiProfile,
    psi: &PsiProfile,
    params: &ModelParams,
    backward: bool,
    range: (f64, f64),
) -> Result<Residuals> {
    let flux = phi
        .flux
        .as_ref()
        .ok_or_else(|| Error::domain("residuals need a profile with flux data"))?;
    if phi.r != psi.r {
        return Err(Error::domain("φ and ψ profiles are on different grids"));
    }
    // drop near-duplicate nodes so difference stencils stay well conditioned
    let mut idx: Vec<usize> = Vec::with_capacity(phi.r.len());
    for (i, &x) in phi.r.iter().enumerate() {
        if let Some(&j) = idx.last() {
            if x - phi.r[j] <= 1e-12 * x.max(1e-300) {
                continue;
            }
        }
        idx.push(i);
    }
    let pick = |v: &[f64]| -> Vec<f64> { idx.iter().map(|&i| v[i]).collect() };
    let r = pick(&phi.r);
    let f = pick(flux);
    let ph = pick(&phi.phi);
    let dps = pick(&psi.dpsi);
    let df = quad::derivative(&r, &f);
    let d2ps = quad::derivative(&r, &dps);

    let nf = params.nf();
    let m = params.m();
    let chi = params.chi();
    let (src, lin) = if backward { (-1.0 / m, 1.0) } else { (1.0 / m, -1.0) };
    let mut out = Residuals { res1: 0.0, res2: 0.0, identity: 0.0, points: 0 };
    for k in 0..r.len() {
        let x = r[k];
        if x < range.0 || x > range.1 || x <= 0.0 {
            continue;
        }
        let fm = ph[k].powf(m);
        let e1 = df[k] + (nf - 1.0) / x * f[k] + chi * fm + src;
        let e2 = d2ps[k] + (nf - 1.0) / x * dps[k] + fm;
        let e3 = lin * x / (m * nf) - f[k] + chi * dps[k];
        out.res1 = out.res1.max(e1.abs());
        out.res2 = out.res2.max(e2.abs());
        out.identity = out.identity.max(e3.abs());
        out.points += 1;
    }
    Ok(out)
}
