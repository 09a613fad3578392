//! Population transfer (1,1) -> (2,1) -> (3,1) with concatenated π-pulses.

use gatedqdot::coupling::{assemble_coupling_matrix, ZeroTol};
use gatedqdot::dynamics::{plan_chain_transfer, propagate_bilinear, synthesize_chain_transfer, PulseOptions, WaveState};
use gatedqdot::gate::solve_full_gate_mode;
use gatedqdot::quadrature::QuadratureConfig;
use gatedqdot::spectral::{enumerate_modes, mode};

fn main() -> gatedqdot::Result<()> {
    let (k, delta) = (30, 0.3);
    let s = enumerate_modes(1.0, k)?;
    let v = solve_full_gate_mode(2, 1.0)?;
    let c = assemble_coupling_matrix(&v, &s, k, ZeroTol::default(), QuadratureConfig::default())?;
    let path = [mode(1, 1), mode(2, 1), mode(3, 1)];
    let opts = PulseOptions::default();

    for p in plan_chain_transfer(&path, &s, &c, delta, &opts)? {
        println!("{} -> {}: omega {:.4}, coupling {:.4}, T {:.1}", p.from, p.to, p.omega, p.coupling, p.duration);
    }
    let control = synthesize_chain_transfer(&path, &s, &c, delta, &opts)?;
    let init = WaveState::basis(&s.modes(), path[0])?;
    let traj = propagate_bilinear(&s, &c, &control, &init, k)?;
    let stride = traj.len() / 10;
    for st in traj.iter().step_by(stride) {
        let pops = st.populations();
        println!("t = {:>7.1}  {:.3} {:.3} {:.3}", st.time, pops[0], pops[1], pops[2]);
    }
    let last = traj.last().unwrap();
    println!("final population of {}: {:.4}", path[2], last.populations()[2]);
    Ok(())
}
