use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::params::{ModelParams, Regime};

/// The non-gradient term `g(u)` of a radial profile equation
/// `(B|u'|^{p-2}u')' + B(N-1)/r |u'|^{p-2}u' + g(u) = 0`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Forcing {
    /// `χ|u|^{q-1}u - 1/m`, p > 2
    BackwardSlow,
    /// `-χ|u|^{q-1}u + 1/m`, p < 2
    BackwardFast,
    /// `χe^{mu} - 1/m`, p = 2
    BackwardLinear,
    /// `χ|u|^{q-1}u + 1/m`, p > 2
    ForwardSlow,
    /// `-χ|u|^{q-1}u - 1/m`, p < 2
    ForwardFast,
    /// `χe^{mu} + 1/m`, p = 2
    ForwardLinear,
    /// `χ|u|^{q-1}u`, the large-height limit of the backward slow problem
    Limit,
}

impl Forcing {
    pub fn backward_for(regime: Regime) -> Self {
        match regime {
            Regime::SlowDiffusion => Forcing::BackwardSlow,
            Regime::FastDiffusion => Forcing::BackwardFast,
            Regime::LinearDiffusion => Forcing::BackwardLinear,
        }
    }

    pub fn forward_for(regime: Regime) -> Self {
        match regime {
            Regime::SlowDiffusion => Forcing::ForwardSlow,
            Regime::FastDiffusion => Forcing::ForwardFast,
            Regime::LinearDiffusion => Forcing::ForwardLinear,
        }
    }

    pub fn regime(self) -> Regime {
        match self {
            Forcing::BackwardSlow | Forcing::ForwardSlow | Forcing::Limit => Regime::SlowDiffusion,
            Forcing::BackwardFast | Forcing::ForwardFast => Regime::FastDiffusion,
            Forcing::BackwardLinear | Forcing::ForwardLinear => Regime::LinearDiffusion,
        }
    }

    pub fn is_backward(self) -> bool {
        matches!(self, Forcing::BackwardSlow | Forcing::BackwardFast | Forcing::BackwardLinear)
    }
}

/// A radial profile ODE written as a first-order system in `(u, w)` with
/// flux `w = B|u'|^{p-2}u'`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RadialOde {
    params: ModelParams,
    forcing: Forcing,
    b_eff: f64,
    p_eff: f64,
    q: f64,
    inv_pm1: f64,
    n_minus_1: f64,
}

/// `|u|^{q-1}u`
fn spow(u: f64, q: f64) -> f64 {
    u.signum() * u.abs().powf(q)
}

impl RadialOde {
    pub fn new(params: ModelParams, forcing: Forcing) -> Result<Self> {
        if forcing.regime() != params.regime() {
            return Err(Error::Regime(format!(
                "{forcing:?} requires {:?}, p = {} is {:?}",
                forcing.regime(),
                params.p(),
                params.regime()
            )));
        }
        let q = params.q().unwrap_or(f64::NAN);
        let p_eff = params.p_eff();
        Ok(RadialOde {
            params,
            forcing,
            b_eff: params.b_eff(),
            p_eff,
            q,
            inv_pm1: 1.0 / (p_eff - 1.0),
            n_minus_1: params.nf() - 1.0,
        })
    }

    pub fn params(&self) -> &ModelParams {
        &self.params
    }

    pub fn forcing(&self) -> Forcing {
        self.forcing
    }

    pub fn b_eff(&self) -> f64 {
        self.b_eff
    }

    pub fn p_eff(&self) -> f64 {
        self.p_eff
    }

    /// True when the forcing is singular at `u = 0` (q < 0).
    pub fn singular_at_zero(&self) -> bool {
        self.forcing.regime() == Regime::FastDiffusion
    }

    /// Forcing value. Sums that cancel to rounding level are returned as 0 so
    /// that equilibria are exact fixed points.
    pub fn g(&self, u: f64) -> f64 {
        let chi = self.params.chi();
        let im = 1.0 / self.params.m();
        let (a, b) = match self.forcing {
            Forcing::BackwardSlow => (chi * spow(u, self.q), -im),
            Forcing::BackwardFast => (-chi * spow(u, self.q), im),
            Forcing::BackwardLinear => (chi * (self.params.m() * u).exp(), -im),
            Forcing::ForwardSlow => (chi * spow(u, self.q), im),
            Forcing::ForwardFast => (-chi * spow(u, self.q), -im),
            Forcing::ForwardLinear => (chi * (self.params.m() * u).exp(), im),
            Forcing::Limit => (chi * spow(u, self.q), 0.0),
        };
        let s = a + b;
        if s.abs() <= 4.0 * f64::EPSILON * (a.abs() + b.abs()) {
            0.0
        } else {
            s
        }
    }

    /// Antiderivative `G` of `g`, the potential part of the energy.
    pub fn potential(&self, u: f64) -> Result<f64> {
        let chi = self.params.chi();
        let m = self.params.m();
        let q = self.q;
        let pw = || chi / (q + 1.0) * u.abs().powf(q + 1.0);
        let log_form = (q + 1.0).abs() < 1e-12;
        let fast_pw = || -> Result<f64> {
            if log_form {
                if u <= 0.0 {
                    return Err(Error::domain(format!("log energy needs u > 0, got {u}")));
                }
                Ok(-chi * u.ln())
            } else {
                Ok(-pw())
            }
        };
        Ok(match self.forcing {
            Forcing::BackwardSlow => pw() - u / m,
            Forcing::BackwardFast => fast_pw()? + u / m,
            Forcing::BackwardLinear => chi / m * (m * u).exp() - u / m,
            Forcing::ForwardSlow => pw() + u / m,
            Forcing::ForwardFast => fast_pw()? - u / m,
            Forcing::ForwardLinear => chi / m * (m * u).exp() + u / m,
            Forcing::Limit => pw(),
        })
    }

    /// `u'` recovered from the flux.
    pub fn uprime(&self, w: f64) -> f64 {
        if self.p_eff == 2.0 {
            w / self.b_eff
        } else {
            w.signum() * (w.abs() / self.b_eff).powf(self.inv_pm1)
        }
    }

    /// Flux `B|u'|^{p-2}u'` of a slope.
    pub fn flux(&self, up: f64) -> f64 {
        self.b_eff * up.signum() * up.abs().powf(self.p_eff - 1.0)
    }

    pub fn rhs(&self, r: f64, y: &[f64; 2]) -> [f64; 2] {
        let [u, w] = *y;
        [self.uprime(w), -(self.n_minus_1 / r) * w - self.g(u)]
    }

    /// `E = (p-1)/p B|u'|^p + G(u)`.
    pub fn energy(&self, u: f64, w: f64) -> Result<f64> {
        let kinetic = (self.p_eff - 1.0) / self.p_eff * w * self.uprime(w);
        Ok(kinetic + self.potential(u)?)
    }

    /// Predicted energy slope `-(N-1)/r · B|u'|^p`.
    pub fn energy_rate(&self, r: f64, w: f64) -> f64 {
        -(self.n_minus_1 / r) * w * self.uprime(w)
    }

    /// Constant solution of the equation, where one exists for `u > 0`.
    pub fn equilibrium(&self) -> Option<f64> {
        match self.forcing {
            Forcing::BackwardSlow | Forcing::BackwardFast => self.params.u_star().ok(),
            Forcing::BackwardLinear => self.params.u_star_log().ok(),
            _ => None,
        }
    }
}
