//! A centered partial gate approaches the full gate as it widens.

use gatedqdot::gate::gate_convergence_sweep;
use gatedqdot::grid::GridSpec;

fn main() -> gatedqdot::Result<()> {
    let points = gate_convergence_sweep(&[0.5, 0.75, 0.9, 0.99], 2, 1.0, GridSpec::square(128))?;
    println!("{:>8} {:>16} {:>10} {:>10}", "fraction", "segment", "L2", "H1");
    for p in points {
        let (a, b) = p.snapped_segment;
        println!("{:>8} {:>16} {:>10.3e} {:>10.3e}", p.fraction, format!("[{a:.3}, {b:.3}]"), p.l2_error, p.h1_error);
    }
    Ok(())
}
