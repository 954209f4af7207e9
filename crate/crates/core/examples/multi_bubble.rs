//! Oscillating backward profile above the critical height: φ is assembled
//! on selected positivity intervals of u and its potential computed.

use pks_selfsim::backward::{build_multi_bubble, solve_backward};
use pks_selfsim::derive_params;
use pks_selfsim::odecore::{EventKind, IntegratorOptions};
use pks_selfsim::reconstruct::{mass, phi_from_multi_bubble, psi_from_phi};

fn main() -> pks_selfsim::Result<()> {
    let prm = derive_params(1, 3.0, 1.0)?;
    let opts = IntegratorOptions { r_max: 40.0, stop_at_zero: false, ..Default::default() };
    let sol = solve_backward(&prm, 1.5, &opts)?;
    let zeros: Vec<f64> = sol.events_of(EventKind::UZero).map(|e| e.r).collect();
    println!("zeros of u: {zeros:.5?}");
    let mb = build_multi_bubble(&sol, &[0, 2], &prm)?;
    for (k, s, e) in &mb.kept_intervals {
        println!("bubble {k}: [{s:.5}, {e:.5}]");
    }
    let phi = phi_from_multi_bubble(&mb)?;
    let psi = psi_from_phi(&phi, &prm)?;
    println!("mass {:.8}, psi(0) = {:.6}", mass(&phi, &prm)?, psi.psi_at(0.0));
    Ok(())
}
