use super::ProfileSolution;

/// Summary of how well a trajectory obeys the energy dissipation law.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergyCheck {
    /// Largest `|ΔE - ∫ dE/dr|` over grid intervals.
    pub max_violation: f64,
    /// Largest increase of `E` between consecutive grid points.
    pub max_increase: f64,
    /// Largest `|E(r) - E(r0)|`.
    pub max_drift: f64,
    pub e0: f64,
}

/// Compares energy increments with the predicted dissipation
/// `-(N-1)/r B|u'|^p`, integrated per interval by Simpson's rule on the dense output.
pub fn energy_derivative_check(sol: &ProfileSolution) -> EnergyCheck {
    let ode = &sol.ode;
    let e = &sol.energy;
    let e0 = e[0];
    let mut out = EnergyCheck { max_violation: 0.0, max_increase: 0.0, max_drift: 0.0, e0 };
    for i in 0..sol.len().saturating_sub(1) {
        let (ra, rb) = (sol.r[i], sol.r[i + 1]);
        let rm = 0.5 * (ra + rb);
        let wm = sol.eval(rm).map_or(0.5 * (sol.w[i] + sol.w[i + 1]), |y| y[1]);
        let pred = (rb - ra) / 6.0
            * (ode.energy_rate(ra, sol.w[i]) + 4.0 * ode.energy_rate(rm, wm) + ode.energy_rate(rb, sol.w[i + 1]));
        let de = e[i + 1] - e[i];
        out.max_violation = out.max_violation.max((de - pred).abs());
        out.max_increase = out.max_increase.max(de);
        out.max_drift = out.max_drift.max((e[i + 1] - e0).abs());
    }
    out
}

/// Scaled defect `h·|y'(r_mid) - f(r_mid, y(r_mid))| / (atol + rtol|y|)` of the
/// dense interpolant at every step midpoint.
pub fn local_residuals(sol: &ProfileSolution, atol: f64, rtol: f64) -> Vec<f64> {
    let ode = &sol.ode;
    sol.segments()
        .iter()
        .map(|seg| {
            let rm = seg.r + 0.5 * seg.h;
            let y = seg.eval(rm);
            let dy = seg.deriv(rm);
            let f = ode.rhs(rm, &y);
            (0..2)
                .map(|i| seg.h * (dy[i] - f[i]).abs() / (atol + rtol * y[i].abs()))
                .fold(0.0, f64::max)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::odecore::{integrate, Forcing, IntegratorOptions, RadialOde};
    use crate::params::derive_params;

    #[test]
    fn constant_solution_has_flat_energy() {
        let ode = RadialOde::new(derive_params(2, 3.0, 1.0).unwrap(), Forcing::BackwardSlow).unwrap();
        let us = ode.equilibrium().unwrap();
        let sol = integrate(&ode, us, &IntegratorOptions { r_max: 10.0, ..Default::default() }).unwrap();
        let chk = energy_derivative_check(&sol);
        assert!(chk.max_drift < 1e-14 && chk.max_violation < 1e-14);
    }

    #[test]
    fn energy_of_equilibrium_is_direct_g_value() {
        let prm = derive_params(1, 3.0, 1.0).unwrap();
        let ode = RadialOde::new(prm, Forcing::BackwardSlow).unwrap();
        let us = prm.u_star().unwrap();
        let q = prm.q().unwrap();
        let direct = -q / (q + 1.0) * us / prm.m();
        assert!((ode.energy(us, 0.0).unwrap() - direct).abs() < 1e-15);
        assert_eq!(ode.energy(0.0, 0.0).unwrap(), 0.0);
    }

    #[test]
    fn log_energy_at_one() {
        // q = -1 at p = (2N+1)/(N+1)
        let prm = derive_params(2, 5.0 / 3.0, 1.0).unwrap();
        assert!((prm.q().unwrap() + 1.0).abs() < 1e-12);
        let ode = RadialOde::new(prm, Forcing::BackwardFast).unwrap();
        assert!((ode.energy(1.0, 0.0).unwrap() - 1.0 / prm.m()).abs() < 1e-15);
        assert!(ode.energy(-1.0, 0.0).is_err());
    }

    #[test]
    fn n1_energy_conserved_n3_dissipated() {
        let opts = IntegratorOptions { r_max: 40.0, ..Default::default() };
        let ode = RadialOde::new(derive_params(1, 3.0, 1.0).unwrap(), Forcing::BackwardSlow).unwrap();
        let sol = integrate(&ode, 0.6, &opts).unwrap();
        let chk = energy_derivative_check(&sol);
        assert!(chk.max_drift < 1e-6 * chk.e0.abs(), "{chk:?}");

        let ode = RadialOde::new(derive_params(3, 3.0, 1.0).unwrap(), Forcing::BackwardSlow).unwrap();
        let sol = integrate(&ode, 0.6, &opts).unwrap();
        let chk = energy_derivative_check(&sol);
        assert!(chk.max_increase < 1e-8 * chk.e0.abs(), "{chk:?}");
    }
}
