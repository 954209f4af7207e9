//! Density φ and potential ψ from a profile, with the residuals of the
//! coupled system and the total mass.

use pks_selfsim::backward::{bracket_critical, critical_compact_profile, find_critical_a, BackwardOptions};
use pks_selfsim::derive_params;
use pks_selfsim::forward::{solve_forward, ForwardOptions};
use pks_selfsim::odecore::IntegratorOptions;
use pks_selfsim::reconstruct::{mass, phi_from_u, psi_from_phi, system_residual};

fn main() -> pks_selfsim::Result<()> {
    let prm = derive_params(2, 3.0, 1.0)?;
    let opts = BackwardOptions::default();
    let crit = find_critical_a(&prm, bracket_critical(&prm, &opts)?, &opts)?;
    let sol = critical_compact_profile(&prm, &crit, &IntegratorOptions::default())?;
    let phi = phi_from_u(&sol, &prm)?;
    let psi = psi_from_phi(&phi, &prm)?;
    let rr = phi.support_radius.expect("critical profile is compact");
    let res = system_residual(&phi, &psi, &prm, true, (0.05 * rr, 0.95 * rr))?;
    println!("backward critical N = 2, p = 3: support {rr:.6}, mass {:.8}", mass(&phi, &prm)?);
    println!("  residuals {:.2e} {:.2e}, identity {:.2e}", res.res1, res.res2, res.identity);

    let prm = derive_params(3, 1.8, 1.0)?;
    let fopts = ForwardOptions {
        integrator: IntegratorOptions { max_step: 0.01, rel_tol: 1e-12, abs_tol: 1e-12, ..ForwardOptions::default().integrator },
        ..Default::default()
    };
    let fp = solve_forward(&prm, 1.0, &fopts)?;
    let phi = phi_from_u(&fp.sol, &prm)?;
    let psi = psi_from_phi(&phi, &prm)?;
    let res = system_residual(&phi, &psi, &prm, false, (0.1, 5.0))?;
    println!("forward N = 3, p = 1.8: tail {:?}, mass {:.8}", phi.tail, mass(&phi, &prm)?);
    println!("  residuals {:.2e} {:.2e}, identity {:.2e}", res.res1, res.res2, res.identity);
    for r in [0.0, 0.5, 1.0, 2.0, 4.0] {
        println!("  r = {r:3.1}: phi = {:.6e}, psi = {:.6e}, psi' = {:.6e}", phi.phi_at(r), psi.psi_at(r), psi.dpsi_at(r));
    }
    Ok(())
}
