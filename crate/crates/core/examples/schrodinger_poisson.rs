//! Deviation of the self-consistent flow from the linear one for a few α.

use gatedqdot::coupling::{assemble_coupling_matrix, ZeroTol};
use gatedqdot::dynamics::{alpha_scaling_study, synthesize_chain_transfer, GridWave, NonlinearConfig, PulseOptions};
use gatedqdot::gate::solve_full_gate_mode;
use gatedqdot::grid::{Grid, GridSpec};
use gatedqdot::quadrature::QuadratureConfig;
use gatedqdot::spectral::{enumerate_modes, mode};

fn main() -> gatedqdot::Result<()> {
    let s = enumerate_modes(1.0, 30)?;
    let v = solve_full_gate_mode(2, 1.0)?;
    let c = assemble_coupling_matrix(&v, &s, 30, ZeroTol::default(), QuadratureConfig::default())?;
    let control = synthesize_chain_transfer(&[mode(1, 1), mode(2, 1)], &s, &c, 0.3, &PulseOptions::default())?;

    let spec = GridSpec::square(64);
    let cfg = NonlinearConfig { dt: 2e-3, grid: spec, ..NonlinearConfig::default() };
    let init = GridWave::mode(Grid::new(spec, 1.0)?, mode(1, 1));
    let study = alpha_scaling_study(&[1e-3, 1e-2, 1e-1], &control, 1.0, &cfg, &v, &init)?;
    for p in &study.points {
        println!("alpha {:>6}: deviation {:.3e}, norm drift {:.1e}", p.alpha, p.deviation, p.max_norm_drift);
    }
    println!("log-log slope {:.4}", study.slope.unwrap_or(f64::NAN));
    Ok(())
}
