//! Coupling entries vanish exactly for same-parity j1 when the gate mode is even.

use gatedqdot::coupling::{assemble_coupling_matrix, ZeroTol};
use gatedqdot::gate::solve_full_gate_mode;
use gatedqdot::quadrature::QuadratureConfig;
use gatedqdot::spectral::enumerate_modes;

fn main() -> gatedqdot::Result<()> {
    let s = enumerate_modes(1.0, 8)?;
    for n in [1, 2] {
        let v = solve_full_gate_mode(n, 1.0)?;
        let c = assemble_coupling_matrix(&v, &s, 8, ZeroTol::default(), QuadratureConfig::default())?;
        println!("n = {n}: {} stored entries, {} dropped", c.entries.len(), c.dropped);
        for a in 0..8 {
            let row: String = (0..8)
                .map(|b| if c.is_coupled(a, b) { " x" } else { " ." })
                .collect();
            println!("  {:>7}{row}", c.modes[a].to_string());
        }
    }
    Ok(())
}
