//! Support radius of slow-diffusion forward profiles and its a-priori bound.

use pks_selfsim::derive_params;
use pks_selfsim::forward::{solve_forward, support_radius, support_radius_upper_bound, ForwardOptions};

fn main() -> pks_selfsim::Result<()> {
    for (n, p) in [(1, 3.0), (2, 3.0), (3, 2.5)] {
        let prm = derive_params(n, p, 1.0)?;
        let fp = solve_forward(&prm, 1.0, &ForwardOptions::default())?;
        let sr = support_radius(&fp)?;
        let bound = support_radius_upper_bound(&prm, 1.0)?;
        println!(
            "N = {n}, p = {p}: R0 = {:.8} (bound {:.6}), u'(R0) = {:.3e}, phi'(R0-) = {:.3e}",
            sr.r0, bound, sr.terminal_u_slope, sr.terminal_phi_slope
        );
    }
    Ok(())
}
