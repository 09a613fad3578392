use std::f64::consts::PI;

use nalgebra::DVector;
use ndarray::{Array2, Zip};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{ControlSignal, LogRow, TrajectoryLog, WaveState};
use crate::error::{Error, Result};
use crate::gate::{HartreeSolver, PotentialField};
use crate::grid::{Grid, GridSpec};
use crate::spectral::{enumerate_modes, ModeIndex};
use crate::transforms::SineTransform;

const DRIFT_LIMIT: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NonlinearConfig {
    pub alpha: f64,
    pub dt: f64,
    pub grid: GridSpec,
    /// Number of ordered modes whose populations are logged.
    pub populations: usize,
}

impl Default for NonlinearConfig {
    fn default() -> Self {
        Self {
            alpha: 0.0,
            dt: 1e-3,
            grid: GridSpec::square(128),
            populations: 4,
        }
    }
}

impl NonlinearConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.alpha >= 0.0) || !self.alpha.is_finite() {
            return Err(Error::invalid(format!("alpha must be nonnegative, got {}", self.alpha)));
        }
        if !(self.dt > 0.0) || !self.dt.is_finite() {
            return Err(Error::invalid(format!("dt must be positive, got {}", self.dt)));
        }
        if self.grid.nx < 4 || self.grid.ny < 4 {
            return Err(Error::invalid("nonlinear grid needs at least 4 cells per axis"));
        }
        Ok(())
    }
}

/// Complex wave function on the node lattice, zero on the boundary.
#[derive(Debug, Clone, PartialEq)]
pub struct GridWave {
    pub grid: Grid,
    pub values: Array2<Complex64>,
    pub time: f64,
}

impl GridWave {
    /// Sampled eigenfunction φ_m; its discrete norm is 1 up to roundoff.
    pub fn mode(grid: Grid, m: ModeIndex) -> Self {
        let c = 2.0 / (PI * grid.l).sqrt();
        let k2 = m.j2 as f64 * PI / grid.l;
        let values = Array2::from_shape_fn(grid.shape(), |(i, j)| {
            let v = if i == 0 || i == grid.nx || j == 0 || j == grid.ny {
                0.0
            } else {
                c * (m.j1 as f64 * grid.x1(i)).sin() * (k2 * grid.x2(j)).sin()
            };
            Complex64::new(v, 0.0)
        });
        Self { grid, values, time: 0.0 }
    }

    /// Synthesizes Σ c_j φ_j from a Galerkin state.
    pub fn from_state(grid: Grid, state: &WaveState) -> Self {
        let mut values = Array2::zeros(grid.shape());
        for (m, &c) in state.modes.iter().zip(state.coefficients.iter()) {
            let phi = Self::mode(grid, *m);
            Zip::from(&mut values).and(&phi.values).for_each(|v: &mut Complex64, &p| *v += c * p.re);
        }
        Self {
            grid,
            values,
            time: state.time,
        }
    }

    pub fn norm(&self) -> f64 {
        (self.values.iter().map(|c| c.norm_sqr()).sum::<f64>() * self.grid.h1 * self.grid.h2).sqrt()
    }

    /// Discrete L² distance; both waves must share a grid.
    pub fn distance(&self, other: &GridWave) -> f64 {
        assert_eq!(self.grid, other.grid);
        let s: f64 = Zip::from(&self.values)
            .and(&other.values)
            .fold(0.0, |acc, a, b| acc + (a - b).norm_sqr());
        (s * self.grid.h1 * self.grid.h2).sqrt()
    }

    /// Galerkin coefficients ⟨φ_m, ψ⟩ (discrete inner product).
    pub fn project(&self, modes: &[ModeIndex]) -> WaveState {
        let w = self.grid.h1 * self.grid.h2;
        let coefficients = DVector::from_iterator(
            modes.len(),
            modes.iter().map(|m| {
                let phi = Self::mode(self.grid, *m);
                Zip::from(&self.values)
                    .and(&phi.values)
                    .fold(Complex64::new(0.0, 0.0), |acc, v, p| acc + v * p.re)
                    * w
            }),
        );
        WaveState {
            modes: modes.to_vec(),
            coefficients,
            time: self.time,
        }
    }

    fn density(&self) -> Array2<f64> {
        self.values.map(|c| c.norm_sqr())
    }
}

/// Strang splitting for i∂ψ = −Δψ + u(t)V_0ψ + W_ψψ with −ΔW = α|ψ|².
pub struct NonlinearSolver {
    grid: Grid,
    config: NonlinearConfig,
    hartree: HartreeSolver,
    sx: SineTransform,
    sy: SineTransform,
    /// Dirichlet eigenvalues j1² + (j2π/L)² on the interior index box.
    lambda: Array2<f64>,
    v0: Array2<f64>,
    pop_modes: Vec<ModeIndex>,
}

impl NonlinearSolver {
    pub fn new(config: NonlinearConfig, l: f64, v0: &PotentialField) -> Result<Self> {
        config.validate()?;
        let grid = Grid::new(config.grid, l)?;
        let v0 = match v0 {
            PotentialField::Spectral(_) => v0.sample(&grid)?.values,
            PotentialField::Grid(g) if g.grid == grid => g.values.clone(),
            PotentialField::Grid(g) => {
                grid.from_fn(|a, b| g.value_at(a, b))
            }
        };
        let lambda = Array2::from_shape_fn((grid.nx - 1, grid.ny - 1), |(a, b)| {
            let j1 = (a + 1) as f64;
            let j2 = (b + 1) as f64 * PI / l;
            j1 * j1 + j2 * j2
        });
        let pop_modes = if config.populations == 0 {
            Vec::new()
        } else {
            enumerate_modes(l, config.populations)?.modes()
        };
        if pop_modes
            .iter()
            .any(|m| m.j1 as usize >= grid.nx || m.j2 as usize >= grid.ny)
        {
            return Err(Error::invalid("logged modes are not resolved by the grid"));
        }
        Ok(Self {
            grid,
            config,
            hartree: HartreeSolver::new(grid),
            sx: SineTransform::new(grid.nx),
            sy: SineTransform::new(grid.ny),
            lambda,
            v0,
            pop_modes,
        })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    /// dt · max kinetic eigenvalue on the grid.
    pub fn kinetic_stiffness(&self) -> f64 {
        self.config.dt * self.lambda.iter().copied().fold(0.0, f64::max)
    }

    fn dst2(&self, a: &mut Array2<f64>, forward: bool) {
        for mut row in a.rows_mut() {
            let buf = row.as_slice_mut().expect("standard layout");
            if forward {
                self.sy.analyze(buf);
            } else {
                self.sy.synthesize(buf);
            }
        }
        let mut buf = vec![0.0; a.nrows()];
        for mut col in a.columns_mut() {
            buf.iter_mut().zip(col.iter()).for_each(|(b, v)| *b = *v);
            if forward {
                self.sx.analyze(&mut buf);
            } else {
                self.sx.synthesize(&mut buf);
            }
            col.iter_mut().zip(&buf).for_each(|(v, b)| *v = *b);
        }
    }

    /// Sine coefficients of the interior values (real and imaginary parts).
    fn coefficients(&self, psi: &Array2<Complex64>) -> (Array2<f64>, Array2<f64>) {
        let (m1, m2) = (self.grid.nx - 1, self.grid.ny - 1);
        let mut re = Array2::from_shape_fn((m1, m2), |(a, b)| psi[[a + 1, b + 1]].re);
        let mut im = Array2::from_shape_fn((m1, m2), |(a, b)| psi[[a + 1, b + 1]].im);
        self.dst2(&mut re, true);
        self.dst2(&mut im, true);
        (re, im)
    }

    fn potential_phase(&self, psi: &mut Array2<Complex64>, u: f64, tau: f64) -> Result<()> {
        let w = if self.config.alpha > 0.0 {
            Some(self.hartree.solve(&psi.map(|c| c.norm_sqr()), self.config.alpha)?)
        } else {
            None
        };
        for ((i, j), c) in psi.indexed_iter_mut() {
            let mut p = u * self.v0[[i, j]];
            if let Some(w) = &w {
                p += w[[i, j]];
            }
            *c *= Complex64::from_polar(1.0, -p * tau);
        }
        Ok(())
    }

    fn kinetic(&self, psi: &mut Array2<Complex64>, tau: f64) {
        let (mut re, mut im) = self.coefficients(psi);
        Zip::from(&mut re)
            .and(&mut im)
            .and(&self.lambda)
            .for_each(|r, i, &l| {
                let z = Complex64::new(*r, *i) * Complex64::from_polar(1.0, -l * tau);
                *r = z.re;
                *i = z.im;
            });
        self.dst2(&mut re, false);
        self.dst2(&mut im, false);
        for ((a, b), r) in re.indexed_iter() {
            psi[[a + 1, b + 1]] = Complex64::new(*r, im[[a, b]]);
        }
    }

    /// One Strang step of length `tau` with control value `u`.
    pub fn step(&self, wave: &mut GridWave, u: f64, tau: f64) -> Result<()> {
        self.potential_phase(&mut wave.values, u, 0.5 * tau)?;
        self.kinetic(&mut wave.values, tau);
        self.potential_phase(&mut wave.values, u, 0.5 * tau)?;
        wave.time += tau;
        Ok(())
    }

    pub fn observe(&self, wave: &GridWave, u: f64) -> LogRow {
        let (re, im) = self.coefficients(&wave.values);
        let l = self.grid.l;
        // ψ = Σ s_j sin sin, so ⟨ψ, φ_j⟩ = s_j √(πL) / 2
        let scale = (PI * l).sqrt() / 2.0;
        let h1 = Zip::from(&re)
            .and(&im)
            .and(&self.lambda)
            .fold(0.0, |acc, r, i, l| acc + l * (r * r + i * i))
            .sqrt()
            * scale;
        let populations = self
            .pop_modes
            .iter()
            .map(|m| {
                let (a, b) = (m.j1 as usize - 1, m.j2 as usize - 1);
                (re[[a, b]].powi(2) + im[[a, b]].powi(2)) * scale * scale
            })
            .collect();
        let density = wave.density();
        let potential = self.grid.integrate(&(&density * &self.v0));
        LogRow {
            time: wave.time,
            norm: wave.norm(),
            h1_seminorm: h1,
            populations,
            control_value: u,
            potential_energy: Some(potential),
        }
    }
}

#[derive(Debug, Clone)]
pub struct NonlinearRun {
    pub final_state: GridWave,
    pub log: TrajectoryLog,
    pub kinetic_stiffness: f64,
    pub steps: usize,
}

/// Integrates over the full control duration; the control is read at each step midpoint.
pub fn propagate_nonlinear(
    initial: &GridWave,
    control: &ControlSignal,
    config: &NonlinearConfig,
    v0: &PotentialField,
) -> Result<NonlinearRun> {
    control.validate()?;
    if initial.grid.spec() != config.grid {
        return Err(Error::invalid("initial wave does not live on the configured grid"));
    }
    let norm0 = initial.norm();
    if (norm0 - 1.0).abs() > 1e-8 {
        return Err(Error::invalid(format!("initial wave has norm {norm0}, expected 1")));
    }
    let solver = NonlinearSolver::new(*config, initial.grid.l, v0)?;
    let total = control.duration();
    let steps = ((total / config.dt).round() as usize).max(1);
    let tau = total / steps as f64;
    let mut wave = initial.clone();
    let t0 = wave.time;
    let mut log = TrajectoryLog::default();
    log.rows.push(solver.observe(&wave, control.value_at(0.0)));
    for s in 0..steps {
        let u = control.value_at((s as f64 + 0.5) * tau);
        solver.step(&mut wave, u, tau)?;
        let row = solver.observe(&wave, u);
        let drift = (row.norm - norm0).abs();
        if drift > DRIFT_LIMIT || !drift.is_finite() {
            return Err(Error::Instability { drift, time: wave.time - t0 });
        }
        log.rows.push(row);
    }
    Ok(NonlinearRun {
        final_state: wave,
        log,
        kinetic_stiffness: solver.kinetic_stiffness(),
        steps,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AlphaPoint {
    pub alpha: f64,
    pub deviation: f64,
    pub max_norm_drift: f64,
    pub max_h1_seminorm: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AlphaStudy {
    pub final_time: f64,
    pub points: Vec<AlphaPoint>,
    /// Least-squares slope of log(deviation) against log(alpha); absent for fewer than two points.
    pub slope: Option<f64>,
}

/// Deviation of each α-trajectory from the α = 0 trajectory at time `t_final`.
pub fn alpha_scaling_study(
    alphas: &[f64],
    control: &ControlSignal,
    t_final: f64,
    config: &NonlinearConfig,
    v0: &PotentialField,
    initial: &GridWave,
) -> Result<AlphaStudy> {
    if alphas.is_empty() {
        return Err(Error::invalid("alpha list is empty"));
    }
    if alphas.iter().any(|&a| !(a > 0.0)) || alphas.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::invalid("alphas must be positive and strictly increasing"));
    }
    let control = control.truncated(t_final)?;
    let mut runs: Vec<f64> = vec![0.0];
    runs.extend_from_slice(alphas);
    let results: Vec<Result<NonlinearRun>> = runs
        .par_iter()
        .map(|&alpha| {
            let cfg = NonlinearConfig { alpha, ..*config };
            propagate_nonlinear(initial, &control, &cfg, v0)
        })
        .collect();
    let mut results = results.into_iter().collect::<Result<Vec<_>>>()?;
    let linear = results.remove(0);
    let points: Vec<AlphaPoint> = alphas
        .iter()
        .zip(&results)
        .map(|(&alpha, run)| AlphaPoint {
            alpha,
            deviation: run.final_state.distance(&linear.final_state),
            max_norm_drift: run.log.max_norm_drift(),
            max_h1_seminorm: run.log.max_h1(),
        })
        .collect();
    let slope = log_log_slope(&points);
    Ok(AlphaStudy {
        final_time: t_final,
        points,
        slope,
    })
}

fn log_log_slope(points: &[AlphaPoint]) -> Option<f64> {
    if points.len() < 2 || points.iter().any(|p| !(p.deviation > 0.0)) {
        return None;
    }
    let xs: Vec<f64> = points.iter().map(|p| p.alpha.ln()).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.deviation.ln()).collect();
    let n = xs.len() as f64;
    let (mx, my) = (xs.iter().sum::<f64>() / n, ys.iter().sum::<f64>() / n);
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    Some(sxy / sxx)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gate::solve_full_gate_mode;
    use crate::spectral::mode;

    fn cfg(alpha: f64) -> NonlinearConfig {
        NonlinearConfig {
            alpha,
            dt: 1e-3,
            grid: GridSpec::square(32),
            populations: 3,
        }
    }

    #[test]
    fn sampled_modes_are_orthonormal() {
        let g = Grid::new(GridSpec::square(16), 1.3).unwrap();
        let w = GridWave::mode(g, mode(2, 3));
        assert!((w.norm() - 1.0).abs() < 1e-13);
        let p = w.project(&[mode(1, 1), mode(2, 3)]);
        assert!(p.coefficients[0].norm() < 1e-14);
        assert!((p.coefficients[1].re - 1.0).abs() < 1e-13);
    }

    #[test]
    fn free_eigenmode_is_stationary() {
        let g = Grid::new(GridSpec::square(32), 1.0).unwrap();
        let v0 = solve_full_gate_mode(2, 1.0).unwrap();
        let init = GridWave::mode(g, mode(1, 1));
        let ctl = ControlSignal::constant(0.0, 0.2, 0.3).unwrap();
        let run = propagate_nonlinear(&init, &ctl, &cfg(0.0), &v0).unwrap();
        for r in &run.log.rows {
            assert!((r.populations[0] - 1.0).abs() < 1e-12);
            assert!((r.norm - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn norm_is_conserved_with_self_consistency() {
        let g = Grid::new(GridSpec::square(32), 1.0).unwrap();
        let v0 = solve_full_gate_mode(2, 1.0).unwrap();
        let init = GridWave::mode(g, mode(1, 1));
        let ctl = ControlSignal::constant(0.3, 0.1, 0.3).unwrap();
        let run = propagate_nonlinear(&init, &ctl, &cfg(1.0), &v0).unwrap();
        assert_eq!(run.steps, 100);
        assert!(run.log.max_norm_drift() < 1e-12);
    }

    #[test]
    fn single_alpha_has_no_slope() {
        let g = Grid::new(GridSpec::square(16), 1.0).unwrap();
        let v0 = solve_full_gate_mode(2, 1.0).unwrap();
        let init = GridWave::mode(g, mode(1, 1));
        let ctl = ControlSignal::constant(0.15, 0.05, 0.3).unwrap();
        let c = NonlinearConfig {
            grid: GridSpec::square(16),
            ..cfg(0.0)
        };
        let study = alpha_scaling_study(&[0.1], &ctl, 0.05, &c, &v0, &init).unwrap();
        assert_eq!(study.points.len(), 1);
        assert!(study.slope.is_none());
        assert!(alpha_scaling_study(&[0.1, 0.05], &ctl, 0.05, &c, &v0, &init).is_err());
    }
}
