//! Linear diffusion (p = 2): the backward profile oscillates around u_* with
//! decaying amplitude.

use pks_selfsim::backward::solve_backward;
use pks_selfsim::derive_params;
use pks_selfsim::odecore::{EventKind, IntegratorOptions};

fn main() -> pks_selfsim::Result<()> {
    let prm = derive_params(4, 2.0, 1.0)?;
    let us = prm.u_star_log()?;
    let sol = solve_backward(&prm, us + 1.0, &IntegratorOptions { r_max: 200.0, ..Default::default() })?;
    let extrema: Vec<(f64, f64)> = sol.events_of(EventKind::UPrimeZero).map(|e| (e.r, (e.u - us).abs())).collect();
    println!("u_* = {us:.6}, {} extrema up to r = 200", extrema.len());
    for (r, amp) in extrema.iter().step_by(8) {
        println!("r = {r:9.4}  |u - u_*| = {amp:.4e}");
    }
    println!("|u(200) - u_*| = {:.3e}", (sol.u_last() - us).abs());
    Ok(())
}
