//! Forward profiles in the three diffusion regimes: compact support for
//! p > 2, Gaussian-like decay for p = 2 and algebraic decay for p < 2.

use pks_selfsim::derive_params;
use pks_selfsim::forward::{fit_decay_rate, fit_decay_rate_at, solve_forward, ForwardOptions};

fn main() -> pks_selfsim::Result<()> {
    let opts = ForwardOptions::default();

    let prm = derive_params(2, 2.0, 1.0)?;
    let fp = solve_forward(&prm, 0.0, &opts)?;
    let fit = fit_decay_rate_at(&fp, 30.0)?;
    println!(
        "p = 2, N = 2: u'/r at r = {} is {:.6}, extrapolated {:.6}, target {:.6}",
        fit.r, fit.raw, fit.extrapolated, fit.target
    );

    let prm = derive_params(3, 1.8, 1.0)?;
    let fp = solve_forward(&prm, 1.0, &opts)?;
    let fit = fit_decay_rate(&fp)?;
    println!(
        "p = 1.8, N = 3: r u'/u at r = {:.1} is {:.6}, target {:.6} (rel err {:.1e})",
        fit.r,
        fit.raw,
        fit.target,
        fit.raw_rel_err()
    );
    println!("tail model {:?}", fp.tail);
    Ok(())
}
