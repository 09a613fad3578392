//! Non-resonant chain certificate on the offset spectrum.

use gatedqdot::chain::{build_graph, certify, check_connected};
use gatedqdot::coupling::{assemble_coupling_matrix, ZeroTol};
use gatedqdot::gate::solve_full_gate_mode;
use gatedqdot::quadrature::QuadratureConfig;
use gatedqdot::spectral::{enumerate_modes, shifted_spectrum};

fn main() -> gatedqdot::Result<()> {
    let k = 30;
    let s = enumerate_modes(1.0, k)?;
    for n in [1, 2] {
        let v = solve_full_gate_mode(n, 1.0)?;
        let c = assemble_coupling_matrix(&v, &s, k, ZeroTol::default(), QuadratureConfig::default())?;
        let shifted = shifted_spectrum(&s, &c, 0.15, k)?;
        let levels = shifted.coupling_matrix(&c);
        let g = build_graph(&levels, k)?;
        let conn = check_connected(&g);
        let cert = certify(&g, &shifted.eigenvalues, &levels, None, 1e-6)?;
        println!(
            "n = {n}: {} components, {} chain edges, {} violations, certified = {}",
            conn.components.len(),
            cert.chain_edges.len(),
            cert.violations.len(),
            cert.certified()
        );
    }
    Ok(())
}
