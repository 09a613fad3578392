//! Command-line front end: one subcommand per pipeline stage plus `certify`.

use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Parser, Subcommand};
use log::{debug, info};
use serde_json::{json, Value};

use crate::chain::{build_graph, certify, check_connected};
use crate::config::{load_config, RunConfig};
use crate::coupling::{assemble_coupling_matrix, CouplingMatrix};
use crate::dynamics::{
    alpha_scaling_study, plan_chain_transfer, propagate_bilinear, synthesize_chain_transfer, transfer_fidelity,
    ControlSignal, GridWave, LogRow, NonlinearConfig, TrajectoryLog, WaveState,
};
use crate::error::{Error, Result};
use crate::gate::{gate_convergence_sweep, solve_partial_gate_fd, PotentialField};
use crate::grid::Grid;
use crate::report::{Report, ReportBody, Verdict};
use crate::spectral::{
    check_simplicity, check_weak_nonresonance, eigenvalue_shape_derivative, enumerate_modes, shifted_spectrum,
    BoundaryDisplacement, Spectrum,
};

#[derive(Debug, Parser)]
#[command(name = "gatedqdot", version, about = "Spectral simulator and controllability analyzer for a gated 2-D quantum device")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// JSON run configuration; defaults are used when omitted.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory (overridden by GATEDQDOT_OUT).
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Worker threads for parallel sweeps.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    #[arg(long, short, global = true)]
    pub verbose: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Ordered Dirichlet spectrum and simplicity check.
    ///
    /// spectrum.csv: rank,j1,j2,lambda
    Spectrum,
    /// Gate potential V_0 on the grid.
    ///
    /// potential.csv: x1,x2,value
    Potential,
    /// Coupling matrix of V_0 over the truncated basis.
    ///
    /// coupling.csv: a1,a2,b1,b2,value (upper triangle); coupling.json: {modes, zero_tol, dropped, entries}
    Coupling,
    /// Connectivity of the coupling graph.
    ///
    /// chain.json: components and witness paths
    Chain,
    /// Weak non-resonance of the bare and offset spectra.
    ///
    /// resonance.json: collisions per spectrum
    Resonance,
    /// Hadamard eigenvalue derivatives for a uniform wall displacement.
    ///
    /// shape_derivative.csv: j1,j2,lambda,derivative
    ShapeDerivative,
    /// Chained pulse transfer propagated in the Galerkin basis.
    ///
    /// trajectory.csv: time,norm,h1_seminorm,population_1..population_K,control_value
    Evolve,
    /// Synthesized chain-transfer control.
    ///
    /// control.csv: start,duration,value
    Control,
    /// Self-consistent deviation study over the configured alphas.
    ///
    /// nonlinear.csv: alpha,deviation,max_norm_drift,max_h1_seminorm
    Nonlinear,
    /// Partial-gate fields against the full-gate closed form.
    ///
    /// gate_sweep.csv: fraction,a,b,l2_error,h1_error,iterations
    GateSweep,
    /// Full pipeline ending in the non-resonant chain certificate on the offset spectrum.
    ///
    /// certificate.json: the certificate; the verdict object is also printed
    Certify,
}

impl Command {
    fn name(self) -> &'static str {
        match self {
            Command::Spectrum => "spectrum",
            Command::Potential => "potential",
            Command::Coupling => "coupling",
            Command::Chain => "chain",
            Command::Resonance => "resonance",
            Command::ShapeDerivative => "shape-derivative",
            Command::Evolve => "evolve",
            Command::Control => "control",
            Command::Nonlinear => "nonlinear",
            Command::GateSweep => "gate-sweep",
            Command::Certify => "certify",
        }
    }
}

/// What a command produced, held in memory until the run succeeds.
#[derive(Default)]
struct Output {
    verdicts: Vec<Verdict>,
    results: Value,
    files: Vec<(String, Vec<u8>)>,
    stdout: Option<Value>,
}

impl Output {
    fn file(&mut self, name: &str, write: impl FnOnce(&mut Vec<u8>) -> std::io::Result<()>) -> Result<()> {
        let mut buf = Vec::new();
        write(&mut buf)?;
        self.files.push((name.to_string(), buf));
        Ok(())
    }
}

fn spectrum_of(c: &RunConfig) -> Result<Spectrum> {
    enumerate_modes(c.l, c.truncation)
}

fn potential_of(c: &RunConfig) -> Result<PotentialField> {
    match c.gate_segment {
        None => c.gate.solve(c.l),
        Some(seg) => {
            let seg = crate::gate::GateSegment::new(seg.a, seg.b)?;
            let field = solve_partial_gate_fd(seg, |x| c.gate.trace(x, c.l), c.grid, c.l)?;
            Ok(PotentialField::Grid(field))
        }
    }
}

fn coupling_of(c: &RunConfig, s: &Spectrum, v: &PotentialField) -> Result<CouplingMatrix> {
    assemble_coupling_matrix(v, s, c.truncation, c.tolerances.zero_tol, c.tolerances.quadrature)
}

fn zero_tol_value(c: &RunConfig) -> f64 {
    match c.tolerances.zero_tol {
        crate::coupling::ZeroTol::Absolute(v) | crate::coupling::ZeroTol::RowRelative(v) => v,
    }
}

fn log_row(state: &WaveState, lambda: &[f64], k: usize, u: f64) -> LogRow {
    let pops = state.populations();
    LogRow {
        time: state.time,
        norm: state.norm(),
        h1_seminorm: pops.iter().zip(lambda).map(|(p, l)| p * l).sum::<f64>().sqrt(),
        populations: pops[..k].to_vec(),
        control_value: u,
        potential_energy: None,
    }
}

fn run_spectrum(c: &RunConfig) -> Result<Output> {
    let s = spectrum_of(c)?;
    let simple = check_simplicity(&s, c.tolerances.simplicity);
    let mut out = Output::default();
    out.file("spectrum.csv", |w| {
        use std::io::Write;
        writeln!(w, "rank,j1,j2,lambda")?;
        for (k, p) in s.pairs.iter().enumerate() {
            writeln!(w, "{},{},{},{:.16e}", k + 1, p.index.j1, p.index.j2, p.lambda)?;
        }
        Ok(())
    })?;
    out.verdicts.push(Verdict {
        name: "simplicity".into(),
        passed: simple.is_simple(),
        truncation: simple.truncation,
        tolerance: simple.tol,
        detail: json!({ "collisions": simple.collisions }),
    });
    out.results = json!({ "lowest": s.pairs.first().map(|p| p.lambda), "highest": s.pairs.last().map(|p| p.lambda) });
    Ok(out)
}

fn run_potential(c: &RunConfig) -> Result<Output> {
    let v = potential_of(c)?;
    let grid = Grid::new(c.grid, c.l)?;
    let field = v.sample(&grid)?;
    let mut out = Output::default();
    out.file("potential.csv", |w| field.write_csv(w))?;
    out.results = json!({
        "grid": c.grid,
        "solver": field.info,
        "max_abs": field.values.iter().fold(0.0_f64, |m, v| m.max(v.abs())),
    });
    Ok(out)
}

fn run_coupling(c: &RunConfig) -> Result<Output> {
    let s = spectrum_of(c)?;
    let m = coupling_of(c, &s, &potential_of(c)?)?;
    let mut out = Output::default();
    out.file("coupling.csv", |w| m.write_csv(w))?;
    out.file("coupling.json", |w| {
        serde_json::to_writer_pretty(&mut *w, &m.to_json())?;
        Ok(())
    })?;
    out.results = json!({ "stored": m.entries.len(), "dropped": m.dropped, "zero_tol": m.zero_tol });
    Ok(out)
}

fn run_chain(c: &RunConfig) -> Result<Output> {
    let s = spectrum_of(c)?;
    let m = coupling_of(c, &s, &potential_of(c)?)?;
    let g = build_graph(&m, c.truncation)?;
    let conn = check_connected(&g);
    let components: Vec<Vec<_>> = conn
        .components
        .iter()
        .map(|comp| comp.iter().map(|&v| g.nodes[v]).collect())
        .collect();
    let mut out = Output::default();
    let doc = json!({ "connected": conn.connected, "components": components });
    out.file("chain.json", |w| {
        serde_json::to_writer_pretty(&mut *w, &doc)?;
        Ok(())
    })?;
    out.verdicts.push(Verdict {
        name: "chain connectivity".into(),
        passed: conn.connected,
        truncation: c.truncation,
        tolerance: zero_tol_value(c),
        detail: json!({ "components": components.len() }),
    });
    out.results = json!({ "connected": conn.connected, "component_count": components.len() });
    Ok(out)
}

fn run_resonance(c: &RunConfig) -> Result<Output> {
    let s = spectrum_of(c)?;
    let m = coupling_of(c, &s, &potential_of(c)?)?;
    let tol = c.tolerances.resonance;
    let mut out = Output::default();
    let mut doc = serde_json::Map::new();
    for (label, rho) in [("bare", 0.0), ("offset", 0.5 * c.delta)] {
        let sh = shifted_spectrum(&s, &m, rho, c.truncation)?;
        let labels = sh.dominant_modes();
        let hits: Vec<_> = check_weak_nonresonance(&sh.eigenvalues, tol)
            .iter()
            .map(|r| r.to_modes(&labels))
            .collect();
        out.verdicts.push(Verdict {
            name: format!("weak non-resonance ({label}, rho = {rho})"),
            passed: hits.is_empty(),
            truncation: c.truncation,
            tolerance: tol,
            detail: json!({ "collisions": hits.len() }),
        });
        doc.insert(label.into(), json!({ "rho": rho, "collisions": hits }));
    }
    let doc = Value::Object(doc);
    out.file("resonance.json", |w| {
        serde_json::to_writer_pretty(&mut *w, &doc)?;
        Ok(())
    })?;
    Ok(out)
}

fn run_shape(c: &RunConfig) -> Result<Output> {
    let s = spectrum_of(c)?;
    let disp = BoundaryDisplacement::uniform(c.shape.wall);
    let count = c.shape.modes.min(s.len());
    let mut rows = Vec::with_capacity(count);
    for p in &s.pairs[..count] {
        rows.push((p.index, p.lambda, eigenvalue_shape_derivative(&s, p.index, &disp)?));
    }
    let mut out = Output::default();
    out.file("shape_derivative.csv", |w| {
        use std::io::Write;
        writeln!(w, "j1,j2,lambda,derivative")?;
        for (m, l, d) in &rows {
            writeln!(w, "{},{},{:.16e},{:.16e}", m.j1, m.j2, l, d)?;
        }
        Ok(())
    })?;
    out.results = json!({ "wall": c.shape.wall, "modes": count });
    Ok(out)
}

fn chain_control(c: &RunConfig, s: &Spectrum, m: &CouplingMatrix) -> Result<ControlSignal> {
    if c.dynamics.path.len() < 2 {
        return ControlSignal::constant(0.0, c.dynamics.final_time, c.delta);
    }
    synthesize_chain_transfer(&c.dynamics.path, s, m, c.delta, &c.pulse_options())
}

fn run_evolve(c: &RunConfig) -> Result<Output> {
    let s = spectrum_of(c)?;
    let m = coupling_of(c, &s, &potential_of(c)?)?;
    let control = chain_control(c, &s, &m)?;
    let modes = s.modes();
    let init = WaveState::basis(&modes, c.dynamics.path[0])?;
    let traj = propagate_bilinear(&s, &m, &control, &init, c.truncation)?;
    let lambda = s.eigenvalues();
    let k = c.dynamics.populations;
    let mut log = TrajectoryLog::default();
    for (i, st) in traj.iter().enumerate() {
        let u = control.samples.get(i.saturating_sub(1)).map_or(0.0, |x| x.1);
        log.rows.push(log_row(st, &lambda, k, u));
    }
    let target = *c.dynamics.path.last().expect("validated nonempty");
    let last = traj.last().expect("trajectory holds the initial state");
    let fidelity = transfer_fidelity(last, target)?;
    let mut out = Output::default();
    out.file("trajectory.csv", |w| log.write_csv(w))?;
    out.results = json!({
        "target": target,
        "fidelity": fidelity,
        "duration": control.duration(),
        "samples": control.samples.len(),
        "max_norm_drift": log.max_norm_drift(),
    });
    Ok(out)
}

fn run_control(c: &RunConfig) -> Result<Output> {
    let s = spectrum_of(c)?;
    let m = coupling_of(c, &s, &potential_of(c)?)?;
    let plan = plan_chain_transfer(&c.dynamics.path, &s, &m, c.delta, &c.pulse_options())?;
    let control = chain_control(c, &s, &m)?;
    let mut out = Output::default();
    out.file("control.csv", |w| {
        use std::io::Write;
        writeln!(w, "start,duration,value")?;
        let mut t = 0.0;
        for &(d, u) in &control.samples {
            writeln!(w, "{t:.16e},{d:.16e},{u:.16e}")?;
            t += d;
        }
        Ok(())
    })?;
    out.results = json!({ "pulses": plan, "duration": control.duration(), "samples": control.samples.len() });
    Ok(out)
}

fn run_nonlinear(c: &RunConfig) -> Result<Output> {
    let s = spectrum_of(c)?;
    let v = potential_of(c)?;
    let m = coupling_of(c, &s, &v)?;
    let control = chain_control(c, &s, &m)?;
    let t = c.dynamics.final_time.min(control.duration());
    let cfg = NonlinearConfig {
        alpha: 0.0,
        dt: c.dynamics.dt,
        grid: c.dynamics.nonlinear_grid,
        populations: c.dynamics.populations,
    };
    let init = GridWave::mode(Grid::new(cfg.grid, c.l)?, c.dynamics.path[0]);
    let study = alpha_scaling_study(&c.dynamics.alphas, &control, t, &cfg, &v, &init)?;
    let mut out = Output::default();
    out.file("nonlinear.csv", |w| {
        use std::io::Write;
        writeln!(w, "alpha,deviation,max_norm_drift,max_h1_seminorm")?;
        for p in &study.points {
            writeln!(
                w,
                "{:.16e},{:.16e},{:.16e},{:.16e}",
                p.alpha, p.deviation, p.max_norm_drift, p.max_h1_seminorm
            )?;
        }
        Ok(())
    })?;
    out.results = serde_json::to_value(&study)?;
    Ok(out)
}

fn run_gate_sweep(c: &RunConfig) -> Result<Output> {
    let n = c
        .gate_mode()
        .ok_or_else(|| Error::invalid("gate-sweep needs a fourier_mode gate profile"))?;
    let pts = gate_convergence_sweep(&c.sweep.fractions, n, c.l, c.grid)?;
    let mut out = Output::default();
    out.file("gate_sweep.csv", |w| {
        use std::io::Write;
        writeln!(w, "fraction,a,b,l2_error,h1_error,iterations")?;
        for p in &pts {
            writeln!(
                w,
                "{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{}",
                p.fraction, p.snapped_segment.0, p.snapped_segment.1, p.l2_error, p.h1_error, p.iterations
            )?;
        }
        Ok(())
    })?;
    let decreasing = pts.windows(2).all(|w| w[1].l2_error < w[0].l2_error);
    out.verdicts.push(Verdict {
        name: "partial-gate errors decrease".into(),
        passed: decreasing,
        truncation: c.grid.nx,
        tolerance: 0.0,
        detail: json!({ "l2_errors": pts.iter().map(|p| p.l2_error).collect::<Vec<_>>() }),
    });
    Ok(out)
}

fn run_certify(c: &RunConfig) -> Result<Output> {
    let s = spectrum_of(c)?;
    let v = potential_of(c)?;
    let m = coupling_of(c, &s, &v)?;
    let rho = 0.5 * c.delta;
    let shifted = shifted_spectrum(&s, &m, rho, c.truncation)?;
    let rotated = shifted.coupling_matrix(&m);
    let graph = build_graph(&rotated, c.truncation)?;
    let cert = certify(&graph, &shifted.eigenvalues, &rotated, None, c.tolerances.resonance)?;
    let simple = check_simplicity(&s, c.tolerances.simplicity);
    let mut out = Output::default();
    out.verdicts.push(Verdict {
        name: "simplicity (bare spectrum)".into(),
        passed: simple.is_simple(),
        truncation: simple.truncation,
        tolerance: simple.tol,
        detail: json!({ "collisions": simple.collisions.len() }),
    });
    out.verdicts.push(Verdict {
        name: "chain connectivity (offset spectrum)".into(),
        passed: cert.connected,
        truncation: cert.truncation,
        tolerance: zero_tol_value(c),
        detail: json!({ "components": cert.components.len() }),
    });
    out.verdicts.push(Verdict {
        name: "non-resonant chain (offset spectrum)".into(),
        passed: cert.violations.is_empty(),
        truncation: cert.truncation,
        tolerance: cert.resonance_tolerance,
        detail: json!({ "violations": cert.violations.len() }),
    });
    let verdict = json!({
        "certified": cert.certified(),
        "chain": if cert.connected { "connected" } else { "disconnected" },
        "components": cert.components.len(),
        "resonance_violations": cert.violations.len(),
        "rho": rho,
        "truncation": cert.truncation,
        "resonance_tolerance": cert.resonance_tolerance,
        "zero_tolerance": cert.zero_tolerance,
    });
    out.file("certificate.json", |w| {
        serde_json::to_writer_pretty(&mut *w, &cert)?;
        Ok(())
    })?;
    out.results = verdict.clone();
    out.stdout = Some(verdict);
    Ok(out)
}

fn execute(command: Command, c: &RunConfig) -> Result<Output> {
    match command {
        Command::Spectrum => run_spectrum(c),
        Command::Potential => run_potential(c),
        Command::Coupling => run_coupling(c),
        Command::Chain => run_chain(c),
        Command::Resonance => run_resonance(c),
        Command::ShapeDerivative => run_shape(c),
        Command::Evolve => run_evolve(c),
        Command::Control => run_control(c),
        Command::Nonlinear => run_nonlinear(c),
        Command::GateSweep => run_gate_sweep(c),
        Command::Certify => run_certify(c),
    }
}

fn output_dir(cli: &Cli) -> PathBuf {
    std::env::var_os("GATEDQDOT_OUT")
        .map(PathBuf::from)
        .or_else(|| cli.out.clone())
        .unwrap_or_else(|| PathBuf::from("gatedqdot-out"))
}

fn write_outputs(dir: &Path, out: &Output, report: &Report) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    for (name, bytes) in &out.files {
        std::fs::write(dir.join(name), bytes)?;
    }
    report.write(dir)
}

/// Runs a parsed invocation and returns the report on success.
pub fn run(cli: &Cli) -> Result<Report> {
    let start = Instant::now();
    let config = match &cli.config {
        Some(p) => load_config(p)?,
        None => RunConfig::default(),
    };
    debug!("configuration: {config:?}");
    let threads = cli.threads.unwrap_or_else(rayon::current_num_threads);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::invalid(format!("cannot build thread pool: {e}")))?;
    let out = pool.install(|| execute(cli.command, &config))?;
    let mut artifacts: Vec<String> = out.files.iter().map(|f| f.0.clone()).collect();
    artifacts.push("report.json".into());
    let body = ReportBody {
        command: cli.command.name().into(),
        config,
        verdicts: out.verdicts.clone(),
        results: out.results.clone(),
        artifacts,
    };
    let report = Report::new(body, threads, start.elapsed().as_secs_f64())?;
    let dir = output_dir(cli);
    write_outputs(&dir, &out, &report)?;
    info!("wrote {} files to {}", out.files.len() + 1, dir.display());
    match &out.stdout {
        Some(v) => println!("{}", serde_json::to_string_pretty(v)?),
        None => println!("{}", dir.join("report.json").display()),
    }
    Ok(report)
}

/// Process entry point; returns the exit code.
pub fn main() -> i32 {
    let cli = Cli::parse();
    let level = if cli.verbose { "debug" } else { "warn" };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match run(&cli) {
        Ok(_) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
