//! Classifies a logarithmic grid of heights into P, N and N0 and reports
//! where the leading P run ends and the trailing N run starts.

use pks_selfsim::backward::{sweep_a, BackwardOptions, ProfileSet};
use pks_selfsim::derive_params;

fn main() -> pks_selfsim::Result<()> {
    let prm = derive_params(3, 2.5, 1.0)?;
    let grid: Vec<f64> = (0..60).map(|k| 0.05 * (100.0f64 / 0.05).powf(k as f64 / 59.0)).collect();
    let sweep = sweep_a(&prm, &grid, &BackwardOptions::default())?;
    let mut line = String::new();
    for e in &sweep.entries {
        line.push(match e.set {
            ProfileSet::P => 'P',
            ProfileSet::N => 'N',
            ProfileSet::N0 => '0',
            ProfileSet::Inconclusive => '?',
        });
    }
    println!("u* = {:.6}", prm.u_star()?);
    println!("{line}");
    println!("last P of leading run a1 = {:?}", sweep.a1);
    println!("first N of trailing run a2 = {:?}", sweep.a2);
    for e in sweep.entries.iter().filter(|e| e.set != ProfileSet::P).take(3) {
        println!("a = {:.4}: R(a) = {:?}, slope {:?}", e.a, e.r_of_a, e.terminal_slope);
    }
    Ok(())
}
