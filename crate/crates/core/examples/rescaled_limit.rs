//! Large-height behaviour: u(r a^{-λ})/a against the limit profile.

use pks_selfsim::backward::rescaled_limit_check;
use pks_selfsim::derive_params;
use pks_selfsim::odecore::IntegratorOptions;

fn main() -> pks_selfsim::Result<()> {
    let prm = derive_params(2, 3.0, 1.0)?;
    let opts = IntegratorOptions { rel_tol: 1e-12, abs_tol: 1e-14, ..Default::default() };
    for a in [1e1, 1e2, 1e3, 1e4] {
        let rl = rescaled_limit_check(&prm, a, &opts)?;
        println!(
            "a = {a:.0e}: sup deviation {:.3e} on [0, {:.4}], limit zero z1 = {:.6}, a^λ R(a) = {:?}",
            rl.sup_deviation, rl.r_compare, rl.z1, rl.scaled_r_of_a
        );
    }
    Ok(())
}
