//! Parameter algebra for the critical system.
//!
//! Everything downstream is driven by the triple `(N, p, χ)`. The critical
//! exponent `m` is tied to `p` and `N`, and the transformed problems need a
//! handful of further constants whose existence depends on the diffusion
//! regime. Constants that do not exist in a regime are stored as `None` and
//! reading them through the accessor returns [`Error::Absent`].

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Diffusion regime, decided by comparing `p` with 2 exactly.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Regime {
    /// p > 2
    SlowDiffusion,
    /// p = 2
    LinearDiffusion,
    /// 2N/(N+1) < p < 2
    FastDiffusion,
}

/// Validated `(N, p, χ)` with every derived constant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelParams {
    n: usize,
    p: f64,
    chi: f64,
    m: f64,
    q: Option<f64>,
    b: Option<f64>,
    lambda: Option<f64>,
    u_star: Option<f64>,
    u_star_log: Option<f64>,
    alpha: f64,
    beta: f64,
    gamma: f64,
}

/// Lower end of the admissible `p` range: `m > 0` iff `p > 2N/(N+1)`.
pub fn p_lower_bound(n: usize) -> f64 {
    2.0 * n as f64 / (n as f64 + 1.0)
}

/// Critical exponent `m = ((p-2)N + p)/N`.
pub fn critical_m(n: usize, p: f64) -> f64 {
    let nf = n as f64;
    ((p - 2.0) * nf + p) / nf
}

/// Inverse of [`critical_m`]: `p = (m+2)N/(N+1)`.
pub fn p_from_m(n: usize, m: f64) -> f64 {
    let nf = n as f64;
    (m + 2.0) * nf / (nf + 1.0)
}

impl ModelParams {
    pub fn new(n: usize, p: f64, chi: f64) -> Result<Self> {
        derive_params(n, p, chi)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn nf(&self) -> f64 {
        self.n as f64
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn chi(&self) -> f64 {
        self.chi
    }

    pub fn m(&self) -> f64 {
        self.m
    }

    pub fn q(&self) -> Result<f64> {
        self.q.ok_or(Error::Absent { field: "q", p: self.p })
    }

    /// `B = |(p-1)/(p-2)|^(p-1)`.
    pub fn b(&self) -> Result<f64> {
        self.b.ok_or(Error::Absent { field: "B", p: self.p })
    }

    /// Rescaling exponent of the large-height limit, slow diffusion only.
    pub fn lambda(&self) -> Result<f64> {
        self.lambda.ok_or(Error::Absent { field: "lambda", p: self.p })
    }

    /// Equilibrium `(1/(χm))^(1/q)` of the power-law problems.
    pub fn u_star(&self) -> Result<f64> {
        self.u_star.ok_or(Error::Absent { field: "u_star", p: self.p })
    }

    /// Equilibrium `(1/m) ln(1/(χm))` of the exponential problem.
    pub fn u_star_log(&self) -> Result<f64> {
        self.u_star_log.ok_or(Error::Absent { field: "u_star_log", p: self.p })
    }

    /// Equilibrium of the backward profile equation in whichever regime applies.
    pub fn equilibrium(&self) -> f64 {
        self.u_star.or(self.u_star_log).expect("one equilibrium is always defined")
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn regime(&self) -> Regime {
        regime_of(self)
    }

    /// Effective flux coefficient: `B` off the linear case, 1 at `p = 2`.
    pub fn b_eff(&self) -> f64 {
        self.b.unwrap_or(1.0)
    }

    /// Exponent used in the flux/derivative map; the linear case uses 2.
    pub fn p_eff(&self) -> f64 {
        if self.p == 2.0 {
            2.0
        } else {
            self.p
        }
    }

    /// Exponent of the map `φ = u^{(p-1)/(p-2)}`; absent at `p = 2`.
    pub fn phi_exponent(&self) -> Result<f64> {
        if self.p == 2.0 {
            Err(Error::Absent { field: "(p-1)/(p-2)", p: self.p })
        } else {
            Ok((self.p - 1.0) / (self.p - 2.0))
        }
    }

    /// Surface area of the unit sphere in R^N.
    pub fn omega(&self) -> f64 {
        sphere_area(self.n)
    }

    pub fn compact_support_admissible(&self) -> bool {
        compact_support_admissible(self.n, self.p)
    }

    /// Same parameters with a different χ.
    pub fn with_chi(&self, chi: f64) -> Result<Self> {
        derive_params(self.n, self.p, chi)
    }
}

/// Validates `(N, p, χ)` and fills in every derived constant.
pub fn derive_params(n: usize, p: f64, chi: f64) -> Result<ModelParams> {
    if n < 1 {
        return Err(Error::domain(format!("N must be >= 1, got {n}")));
    }
    if !chi.is_finite() || chi <= 0.0 {
        return Err(Error::domain(format!("chi must be > 0, got {chi}")));
    }
    if !p.is_finite() {
        return Err(Error::domain(format!("p must be finite, got {p}")));
    }
    let p_min = p_lower_bound(n);
    let m = critical_m(n, p);
    if p <= p_min || m <= 0.0 {
        return Err(Error::domain(format!(
            "p = {p} must exceed 2N/(N+1) = {p_min} (m = {m} must be > 0)"
        )));
    }
    let nf = n as f64;
    let alpha = 1.0 / m;
    let beta = 1.0 / (m * nf);
    let gamma = (2.0 - m * nf) / (m * nf);

    let (q, b, lambda, u_star, u_star_log) = if p == 2.0 {
        (None, None, None, None, Some((1.0 / (chi * m)).ln() / m))
    } else {
        let q = m * (p - 1.0) / (p - 2.0);
        let b = ((p - 1.0) / (p - 2.0)).abs().powf(p - 1.0);
        let u_star = (1.0 / (chi * m)).powf(1.0 / q);
        let lambda = (p > 2.0).then(|| (p - 1.0) * (m + 2.0 - p) / (p * (p - 2.0)));
        (Some(q), Some(b), lambda, Some(u_star), None)
    };

    Ok(ModelParams { n, p, chi, m, q, b, lambda, u_star, u_star_log, alpha, beta, gamma })
}

pub fn regime_of(params: &ModelParams) -> Regime {
    if params.p == 2.0 {
        Regime::LinearDiffusion
    } else if params.p > 2.0 {
        Regime::SlowDiffusion
    } else {
        Regime::FastDiffusion
    }
}

/// `p` threshold above which compactly supported backward profiles exist for `N >= 3`.
pub fn compact_support_threshold(n: usize) -> f64 {
    if n <= 2 {
        return 2.0;
    }
    let nf = n as f64;
    ((5.0 * nf * nf + 2.0 * nf + 1.0).sqrt() + 3.0 * nf + 1.0) / (2.0 * (nf + 1.0))
}

/// Whether `(N, p)` lies in the range where the backward problem has
/// compactly supported profiles.
pub fn compact_support_admissible(n: usize, p: f64) -> bool {
    if n == 0 || p <= 2.0 {
        return false;
    }
    if n <= 2 {
        return true;
    }
    p > compact_support_threshold(n)
}

/// Sobolev-type bound `Np/(N-p) - 1` on `q`, `None` when `p >= N`.
pub fn q_upper_bound(n: usize, p: f64) -> Option<f64> {
    let nf = n as f64;
    (p < nf).then(|| nf * p / (nf - p) - 1.0)
}

/// Surface area of the unit sphere `S^{N-1}`: `ω_1 = 2`, `ω_2 = 2π`,
/// `ω_{N+2} = 2π ω_N / N`.
pub fn sphere_area(n: usize) -> f64 {
    use std::f64::consts::PI;
    match n {
        0 => 0.0,
        1 => 2.0,
        2 => 2.0 * PI,
        _ => 2.0 * PI * sphere_area(n - 2) / (n as f64 - 2.0),
    }
}
