//! Forward (spreading) profiles: solving, the compact-support radius in the
//! slow regime, and decay-rate fits in the fast and linear regimes.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::odecore::{integrate, EventKind, Forcing, IntegratorOptions, ProfileSolution, RadialOde, Termination};
use crate::params::{ModelParams, Regime};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ForwardOptions {
    pub integrator: IntegratorOptions,
    /// p = 2 runs stop once u falls below this.
    pub u_floor: f64,
    /// p < 2 runs stop once u exceeds this.
    pub u_ceiling: f64,
}

impl Default for ForwardOptions {
    fn default() -> Self {
        // r_max is raised so that the p < 2 runs reach their u bound
        let integrator = IntegratorOptions { r_max: 1e4, ..Default::default() };
        ForwardOptions { integrator, u_floor: -1e3, u_ceiling: 1e6 }
    }
}

/// Behaviour of φ beyond the last grid point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum TailModel {
    /// φ vanishes beyond `radius`.
    Compact { radius: f64 },
    /// φ ~ coefficient · r^exponent.
    Power { exponent: f64, coefficient: f64 },
    /// ln φ ~ coefficient · r².
    LogQuadratic { coefficient: f64 },
    /// The profile has not been shown to decay; no tail is attached.
    NonDecaying,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ForwardProfile {
    pub regime: Regime,
    pub sol: ProfileSolution,
    pub support_radius: Option<f64>,
    pub tail: TailModel,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SupportRadius {
    pub r0: f64,
    pub terminal_u_slope: f64,
    /// φ' evaluated at `r0 - eps`.
    pub terminal_phi_slope: f64,
    pub eps: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecayFit {
    /// Radius of the raw estimate.
    pub r: f64,
    pub raw: f64,
    /// Extrapolation to r → ∞ over the last decade `[r/10, r]`.
    pub extrapolated: f64,
    pub target: f64,
}

impl DecayFit {
    pub fn raw_rel_err(&self) -> f64 {
        ((self.raw - self.target) / self.target).abs()
    }

    pub fn extrapolated_rel_err(&self) -> f64 {
        ((self.extrapolated - self.target) / self.target).abs()
    }
}

/// `K = (1/(BNm))^{1/(p-1)} (p-1)/p`.
pub fn decay_constant_k(params: &ModelParams) -> Result<f64> {
    let b = params.b()?;
    let p = params.p();
    Ok((1.0 / (b * params.nf() * params.m())).powf(1.0 / (p - 1.0)) * (p - 1.0) / p)
}

/// Limit of `φ r^{p/(2-p)}` (p < 2) or of `ln φ / r²` (p = 2).
pub fn decay_target(params: &ModelParams) -> Result<f64> {
    match params.regime() {
        Regime::FastDiffusion => Ok(decay_constant_k(params)?.powf(params.phi_exponent()?)),
        Regime::LinearDiffusion => Ok(-1.0 / (2.0 * params.m() * params.nf())),
        Regime::SlowDiffusion => Err(Error::Regime("decay rates apply to p <= 2".into())),
    }
}

/// Upper bound `(a p/(p-1))^{(p-1)/p} (BmN)^{1/p}` on the support radius.
pub fn support_radius_upper_bound(params: &ModelParams, a: f64) -> Result<f64> {
    let p = params.p();
    let b = params.b()?;
    Ok((a * p / (p - 1.0)).powf((p - 1.0) / p) * (b * params.m() * params.nf()).powf(1.0 / p))
}

/// Two-sided bound on a p < 2 forward profile at radius `r`.
pub fn fast_envelope(params: &ModelParams, a: f64, r: f64) -> Result<(f64, f64)> {
    let p = params.p();
    let b = params.b()?;
    let q = params.q()?;
    let (n, m, chi) = (params.nf(), params.m(), params.chi());
    let k = (p - 1.0) / p;
    let e = p / (p - 1.0);
    let lo = a + k * (1.0 / (m * b * n)).powf(1.0 / (p - 1.0)) * r.powf(e);
    let hi = a + k * (1.0 / (m * b * n) + chi * a.powf(q) / (b * n)).powf(1.0 / (p - 1.0)) * r.powf(e);
    Ok((lo, hi))
}

/// Lower bound `b - (χe^{bm} + 1/m) r²/(2N)` on a p = 2 forward profile.
pub fn linear_lower_bound(params: &ModelParams, b: f64, r: f64) -> f64 {
    let m = params.m();
    b - (params.chi() * (b * m).exp() + 1.0 / m) * r * r / (2.0 * params.nf())
}

/// Integrates the forward problem from `u(0) = a` (`b` when p = 2).
pub fn solve_forward(params: &ModelParams, a_or_b: f64, opts: &ForwardOptions) -> Result<ForwardProfile> {
    if !a_or_b.is_finite() {
        return Err(Error::domain(format!("initial value must be finite, got {a_or_b}")));
    }
    let regime = params.regime();
    let ode = RadialOde::new(*params, Forcing::forward_for(regime))?;
    let mut iopts = opts.integrator;
    match regime {
        Regime::SlowDiffusion | Regime::FastDiffusion if a_or_b <= 0.0 => {
            return Err(Error::domain(format!("initial height must be > 0, got {a_or_b}")));
        }
        Regime::SlowDiffusion => iopts.stop_at_zero = true,
        Regime::FastDiffusion => iopts.u_ceiling = opts.u_ceiling,
        Regime::LinearDiffusion => {
            if a_or_b <= opts.u_floor {
                return Err(Error::domain(format!("b = {a_or_b} is below the floor {}", opts.u_floor)));
            }
            iopts.u_ceiling = opts.u_floor.abs().max(a_or_b.abs());
        }
    }
    let sol = integrate(&ode, a_or_b, &iopts)?;
    let (support_radius, tail) = match regime {
        Regime::SlowDiffusion => {
            let r0 = sol.first_event(EventKind::UZero).map(|e| e.r);
            (r0, r0.map_or(TailModel::NonDecaying, |radius| TailModel::Compact { radius }))
        }
        Regime::FastDiffusion => {
            let expo = params.p() / (params.p() - 2.0);
            let rl = sol.r_last();
            let coefficient = sol.u_last().powf(params.phi_exponent()?) * rl.powf(-expo);
            (None, TailModel::Power { exponent: expo, coefficient })
        }
        Regime::LinearDiffusion => {
            (None, TailModel::LogQuadratic { coefficient: -1.0 / (2.0 * params.m() * params.nf()) })
        }
    };
    Ok(ForwardProfile { regime, sol, support_radius, tail })
}

/// Support radius of a slow forward profile with the slopes of u and φ there.
pub fn support_radius(fp: &ForwardProfile) -> Result<SupportRadius> {
    if fp.regime != Regime::SlowDiffusion {
        return Err(Error::Regime("support radius needs p > 2".into()));
    }
    let ev = fp.sol.first_event(EventKind::UZero).ok_or(Error::NoSupportRadius)?;
    let ode = &fp.sol.ode;
    let p = ode.params().p();
    let eps = 1e-6;
    let y = fp.sol.eval(ev.r - eps).ok_or(Error::NoSupportRadius)?;
    let phi_slope = (p - 1.0) / (p - 2.0) * y[0].max(0.0).powf(1.0 / (p - 2.0)) * ode.uprime(y[1]);
    Ok(SupportRadius { r0: ev.r, terminal_u_slope: ode.uprime(ev.w), terminal_phi_slope: phi_slope, eps })
}

/// Decay estimate at the last grid point.
pub fn fit_decay_rate(fp: &ForwardProfile) -> Result<DecayFit> {
    fit_decay_rate_at(fp, fp.sol.r_last())
}

fn decay_quantity(fp: &ForwardProfile, r: f64) -> Result<f64> {
    let y = fp
        .sol
        .eval(r)
        .ok_or_else(|| Error::InsufficientRange(format!("r = {r} is outside the profile")))?;
    let params = fp.sol.ode.params();
    Ok(match fp.regime {
        Regime::LinearDiffusion => y[0] / (r * r),
        _ => {
            let p = params.p();
            y[0].powf(params.phi_exponent()?) * r.powf(p / (2.0 - p))
        }
    })
}

/// Decay estimate at radius `r`, with an extrapolation over `[r/10, r]` that
/// fits the known correction terms: `{1, h², h² ln h}` at p = 2 and
/// `{1, h^κ, h^{2κ}}` with `κ = p/(p-1)` at p < 2, where `h = 1/r`.
pub fn fit_decay_rate_at(fp: &ForwardProfile, r: f64) -> Result<DecayFit> {
    if fp.regime == Regime::SlowDiffusion {
        return Err(Error::Regime("decay rates apply to p <= 2".into()));
    }
    if r < 10.0 {
        return Err(Error::InsufficientRange(format!("decay fit needs r >= 10, got {r}")));
    }
    if r > fp.sol.r_last() {
        return Err(Error::InsufficientRange(format!(
            "profile ends at r = {}, fit requested at {r}",
            fp.sol.r_last()
        )));
    }
    let params = fp.sol.ode.params();
    let target = decay_target(params)?;
    let raw = decay_quantity(fp, r)?;

    let basis: Box<dyn Fn(f64) -> [f64; 3]> = match fp.regime {
        Regime::LinearDiffusion => Box::new(|h: f64| [1.0, h * h, h * h * h.ln()]),
        _ => {
            let kappa = params.p() / (params.p() - 1.0);
            Box::new(move |h: f64| [1.0, h.powf(kappa), h.powf(2.0 * kappa)])
        }
    };
    let samples = 24;
    let mut ata = [[0.0f64; 3]; 3];
    let mut atb = [0.0f64; 3];
    for k in 0..samples {
        let rk = r * 10f64.powf(-(k as f64) / (samples - 1) as f64);
        let f = decay_quantity(fp, rk)?;
        let phi = basis(1.0 / rk);
        for i in 0..3 {
            atb[i] += phi[i] * f;
            for j in 0..3 {
                ata[i][j] += phi[i] * phi[j];
            }
        }
    }
    let coef = solve3(ata, atb).unwrap_or([raw, 0.0, 0.0]);
    Ok(DecayFit { r, raw, extrapolated: coef[0], target })
}

/// Gaussian elimination with partial pivoting for a 3×3 system.
fn solve3(mut a: [[f64; 3]; 3], mut b: [f64; 3]) -> Option<[f64; 3]> {
    for c in 0..3 {
        let piv = (c..3).max_by(|&i, &j| a[i][c].abs().total_cmp(&a[j][c].abs()))?;
        if a[piv][c].abs() < 1e-300 {
            return None;
        }
        a.swap(c, piv);
        b.swap(c, piv);
        for i in c + 1..3 {
            let f = a[i][c] / a[c][c];
            for j in c..3 {
                a[i][j] -= f * a[c][j];
            }
            b[i] -= f * b[c];
        }
    }
    let mut x = [0.0; 3];
    for i in (0..3).rev() {
        let s: f64 = (i + 1..3).map(|j| a[i][j] * x[j]).sum();
        x[i] = (b[i] - s) / a[i][i];
    }
    Some(x)
}

/// True when the forward run ended the way its regime requires.
pub fn terminated_as_expected(fp: &ForwardProfile) -> bool {
    match fp.regime {
        Regime::SlowDiffusion => fp.sol.termination == Termination::UCrossedZero,
        Regime::FastDiffusion | Regime::LinearDiffusion => fp.sol.termination == Termination::Diverged,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::derive_params;

    #[test]
    fn slow_forward_has_compact_support() {
        let prm = derive_params(1, 3.0, 1.0).unwrap();
        let fp = solve_forward(&prm, 1.0, &ForwardOptions::default()).unwrap();
        let sr = support_radius(&fp).unwrap();
        assert!(sr.terminal_u_slope < 0.0);
        assert!(sr.terminal_phi_slope.abs() < 1e-4);
        assert!(sr.r0 <= support_radius_upper_bound(&prm, 1.0).unwrap());
        assert!(fp.sol.uprime()[1..].iter().all(|&d| d < 0.0));
    }

    #[test]
    fn linear_forward_decreases_to_floor() {
        let prm = derive_params(2, 2.0, 1.0).unwrap();
        let fp = solve_forward(&prm, 0.0, &ForwardOptions::default()).unwrap();
        assert!(terminated_as_expected(&fp));
        assert!(fp.sol.w[1..].iter().all(|&w| w < 0.0));
        let fit = fit_decay_rate_at(&fp, 30.0).unwrap();
        assert_eq!(fit.target, -0.25);
        assert!(fit.raw_rel_err() < 0.02, "{fit:?}");
        assert!(fit.extrapolated_rel_err() < 0.005, "{fit:?}");
    }

    #[test]
    fn fast_forward_grows() {
        let prm = derive_params(3, 1.8, 1.0).unwrap();
        let fp = solve_forward(&prm, 1.0, &ForwardOptions::default()).unwrap();
        assert!(terminated_as_expected(&fp));
        let fit = fit_decay_rate(&fp).unwrap();
        assert!(fit.raw_rel_err() < 0.02, "{fit:?}");
        // B = 4^0.8 for p = 1.8
        assert!((prm.b().unwrap() - 4f64.powf(0.8)).abs() < 1e-14);
    }

    #[test]
    fn short_range_is_rejected() {
        let prm = derive_params(2, 2.0, 1.0).unwrap();
        let fp = solve_forward(&prm, 0.0, &ForwardOptions::default()).unwrap();
        assert!(matches!(fit_decay_rate_at(&fp, 5.0), Err(Error::InsufficientRange(_))));
    }
}
