//! Test-side oracles, written independently of the library's ODE code.
#![allow(dead_code)]

use rand::Rng;
use rand_chacha::ChaCha8Rng;

/// One random parameter point.
#[derive(Debug, Clone, Copy)]
pub struct Case {
    pub n: usize,
    pub p: f64,
    pub chi: f64,
    pub a: f64,
    pub backward: bool,
}

/// Profile nonlinearity in flux form, derived from the scalar φ-equation
/// `F' + (N-1)/r F + χφ^m ∓ 1/m = 0` (upper sign backward) with
/// `F = ±B|u'|^{p-2}u'` (`+` for p ≥ 2, `-` for p < 2).
pub struct OracleOde {
    n: f64,
    p: f64,
    chi: f64,
    m: f64,
    q: f64,
    b: f64,
    sign_f: f64,
    src: f64,
}

impl OracleOde {
    pub fn new(c: &Case) -> Self {
        let nf = c.n as f64;
        let m = ((c.p - 2.0) * nf + c.p) / nf;
        let (q, b) = if c.p == 2.0 {
            (f64::NAN, 1.0)
        } else {
            (m * (c.p - 1.0) / (c.p - 2.0), ((c.p - 1.0) / (c.p - 2.0)).abs().powf(c.p - 1.0))
        };
        let sign_f = if c.p < 2.0 { -1.0 } else { 1.0 };
        let src = if c.backward { -1.0 / m } else { 1.0 / m };
        OracleOde { n: nf, p: c.p, chi: c.chi, m, q, b, sign_f, src }
    }

    /// φ^m as a function of u.
    fn phi_m(&self, u: f64) -> f64 {
        if self.p == 2.0 {
            (self.m * u).exp()
        } else {
            u.abs().powf(self.q - 1.0) * u
        }
    }

    /// `g` in `w' = -(N-1)/r w - g(u)`, from `F = sign_f·w`.
    pub fn g(&self, u: f64) -> f64 {
        self.sign_f * (self.chi * self.phi_m(u) + self.src)
    }

    fn pexp(&self) -> f64 {
        if self.p == 2.0 {
            2.0
        } else {
            self.p
        }
    }

    pub fn rhs(&self, r: f64, y: [f64; 2]) -> [f64; 2] {
        let up = y[1].signum() * (y[1].abs() / self.b).powf(1.0 / (self.pexp() - 1.0));
        [up, -(self.n - 1.0) / r * y[1] - self.g(y[0])]
    }

    /// Leading-order series at small r.
    pub fn start(&self, a: f64, r0: f64) -> [f64; 2] {
        let g = self.g(a);
        let pe = self.pexp();
        let du = (pe - 1.0) / pe * (g.abs() / (self.b * self.n)).powf(1.0 / (pe - 1.0)) * r0.powf(pe / (pe - 1.0));
        [a - g.signum() * du, -g * r0 / self.n]
    }
}

/// Classical RK4 with fixed step `h` from `r0 = h` to `r_end`.
pub fn rk4_u(c: &Case, r_end: f64, h: f64) -> f64 {
    let ode = OracleOde::new(c);
    let mut r = h;
    let mut y = ode.start(c.a, r);
    let steps = ((r_end - r) / h).round() as usize;
    for _ in 0..steps {
        let k1 = ode.rhs(r, y);
        let k2 = ode.rhs(r + h / 2.0, [y[0] + h / 2.0 * k1[0], y[1] + h / 2.0 * k1[1]]);
        let k3 = ode.rhs(r + h / 2.0, [y[0] + h / 2.0 * k2[0], y[1] + h / 2.0 * k2[1]]);
        let k4 = ode.rhs(r + h, [y[0] + h * k3[0], y[1] + h * k3[1]]);
        for i in 0..2 {
            y[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
        r += h;
    }
    y[0]
}

/// Equilibrium of the backward problem, from `χφ^m = 1/m`.
pub fn equilibrium(n: usize, p: f64, chi: f64) -> f64 {
    let nf = n as f64;
    let m = ((p - 2.0) * nf + p) / nf;
    if p == 2.0 {
        (1.0 / (chi * m)).ln() / m
    } else {
        (1.0 / (chi * m)).powf((p - 2.0) / (m * (p - 1.0)))
    }
}

/// Random admissible point: N in 1..=4, regime chosen uniformly, heights
/// scaled around the backward equilibrium.
pub fn random_case(rng: &mut ChaCha8Rng, backward: bool) -> Case {
    let n: usize = rng.gen_range(1..=4);
    let nf = n as f64;
    let chi = rng.gen_range(0.5..2.0);
    let p = match rng.gen_range(0..3) {
        0 => rng.gen_range(2.05..4.0),
        1 => 2.0,
        _ => {
            let lo = 2.0 * nf / (nf + 1.0) + 0.05;
            rng.gen_range(lo..1.95)
        }
    };
    let ue = equilibrium(n, p, chi);
    let a = if p == 2.0 { ue + rng.gen_range(-1.5..1.5) } else { ue * rng.gen_range(0.3..3.0) };
    Case { n, p, chi, a, backward }
}
