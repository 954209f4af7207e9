//! Bisection for the critical height a_c of the backward profile.
//!
//! For N = 1 the energy is conserved and the zero-energy level gives
//! a_c = ((q+1)/(χm))^{1/q} in closed form.

use pks_selfsim::backward::{bracket_critical, find_critical_a, BackwardOptions};
use pks_selfsim::derive_params;

fn main() -> pks_selfsim::Result<()> {
    let opts = BackwardOptions::default();
    for (n, p) in [(1, 3.0), (2, 3.0), (3, 2.5)] {
        let prm = derive_params(n, p, 1.0)?;
        let bracket = bracket_critical(&prm, &opts)?;
        let crit = find_critical_a(&prm, bracket, &opts)?;
        println!(
            "N = {n}, p = {p}: a_c = {:.12}  r_c = {:.6}  width = {:.1e}  ({:?} / {:?})",
            crit.a_c, crit.r_c, crit.bracket_width, crit.lower.set, crit.upper.set
        );
        if n == 1 {
            let q = prm.q()?;
            let exact = ((q + 1.0) / (prm.m() * prm.chi())).powf(1.0 / q);
            println!("    closed form {exact:.12}, relative error {:.1e}", (crit.a_c - exact).abs() / exact);
        }
    }
    Ok(())
}
