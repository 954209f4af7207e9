//! Mass conservation of the self-similar density and its concentration to a
//! Dirac mass as t → 0+ (forward) or t → T- (backward).

use pks_selfsim::derive_params;
use pks_selfsim::forward::{solve_forward, ForwardOptions};
use pks_selfsim::reconstruct::{delta_test, phi_from_u, psi_from_phi, Direction, SelfSimilarSolution, TestFunction};

fn main() -> pks_selfsim::Result<()> {
    let prm = derive_params(3, 1.8, 1.0)?;
    let fp = solve_forward(&prm, 1.0, &ForwardOptions::default())?;
    let phi = phi_from_u(&fp.sol, &prm)?;
    let psi = psi_from_phi(&phi, &prm)?;
    let ss = SelfSimilarSolution::new(Direction::Forward, prm, phi, psi)?;
    let times: Vec<f64> = (0..7).map(|k| 1e-2 * 0.25f64.powi(k)).collect();
    let rep = delta_test(&ss, &TestFunction::Gaussian, &times)?;
    println!("mass {:.10}", rep.mass);
    for s in &rep.samples {
        println!("t = {:.3e}  theta = {:.3e}  mass(t) = {:.10}  deviation = {:.3e}", s.t, s.theta, ss.mass_at(s.t)?, s.deviation);
    }
    let first = rep.samples.first().map_or(0.0, |s| s.deviation);
    let last = rep.samples.last().map_or(0.0, |s| s.deviation);
    println!("monotone: {}, decrease factor {:.3e}", rep.monotone, first / last);
    Ok(())
}
