//! Full-gate potential: closed form against the finite-difference solve.

use gatedqdot::gate::{solve_full_gate_fd, GateProfile};
use gatedqdot::grid::GridSpec;

fn main() -> gatedqdot::Result<()> {
    let l = 1.0;
    let gate = GateProfile::FourierMode { n: 2 };
    let exact = gate.solve(l)?;
    for n in [32, 64, 128] {
        let fd = solve_full_gate_fd(|x| gate.trace(x, l), GridSpec::square(n), l)?;
        let err = fd
            .values
            .indexed_iter()
            .map(|((i, j), v)| (v - exact.value(fd.grid.x1(i), fd.grid.x2(j))).abs())
            .fold(0.0, f64::max);
        println!("{n:>4} cells: max error {err:.3e}");
    }
    println!("V0(pi/4, L) = {:.6}", exact.value(std::f64::consts::FRAC_PI_4, l));
    Ok(())
}
