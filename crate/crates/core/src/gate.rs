//! Gate potential V_0 and the self-consistent Hartree field W_ψ.
//!
//! V_0 is harmonic on (0, π) × (0, L), carries the gate profile χ as Dirichlet
//! trace on the gate, vanishes on the source/drain sides x1 ∈ {0, π}, and has
//! zero normal derivative on the bulk side x2 = 0 (and, for a partial gate, on
//! the uncovered part of the top side).

use std::f64::consts::PI;

use ndarray::{Array2, Zip};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{Grid, GridField, GridSpec, SolveInfo};
use crate::transforms::{QuarterWaveTransform, SineTransform};

/// Boundary datum χ on the full gate, as a function of x1 ∈ [0, π].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum GateProfile {
    /// χ_n(x1) = cosh(nL) sin(n x1).
    FourierMode { n: u32 },
    /// χ(x1) = Σ_m c_m sin(m x1), m = 1..M.
    SineSeries { coefficients: Vec<f64> },
}

impl GateProfile {
    pub fn trace(&self, x1: f64, l: f64) -> f64 {
        match self {
            Self::FourierMode { n } => {
                let n = *n as f64;
                (n * l).cosh() * (n * x1).sin()
            }
            Self::SineSeries { coefficients } => coefficients
                .iter()
                .enumerate()
                .map(|(k, c)| c * ((k + 1) as f64 * x1).sin())
                .sum(),
        }
    }

    pub fn solve(&self, l: f64) -> Result<PotentialField> {
        match self {
            Self::FourierMode { n } => solve_full_gate_mode(*n, l),
            Self::SineSeries { coefficients } => solve_full_gate_series(coefficients, l),
        }
    }
}

/// Closed-form harmonic field Σ_m amp_m · sin(m x1) · cosh(m x2).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpectralField {
    pub l: f64,
    /// (m, amp_m) with m ≥ 1; amp_m = c_m / cosh(mL) for a sine-series trace.
    pub terms: Vec<(u32, f64)>,
}

impl SpectralField {
    pub fn value(&self, x1: f64, x2: f64) -> f64 {
        self.terms
            .iter()
            .map(|&(m, amp)| {
                let m = m as f64;
                amp * (m * x1).sin() * (m * x2).cosh()
            })
            .sum()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum PotentialField {
    Spectral(SpectralField),
    Grid(GridField),
}

impl PotentialField {
    pub fn value(&self, x1: f64, x2: f64) -> f64 {
        match self {
            Self::Spectral(s) => s.value(x1, x2),
            Self::Grid(g) => g.value_at(x1, x2),
        }
    }

    /// Samples the field on `grid`; a grid field must already live on that grid.
    pub fn sample(&self, grid: &Grid) -> Result<GridField> {
        match self {
            Self::Spectral(s) => Ok(GridField::new(*grid, grid.from_fn(|a, b| s.value(a, b)))),
            Self::Grid(g) if g.grid == *grid => Ok(g.clone()),
            Self::Grid(_) => Err(Error::invalid("grid field sampled on a different grid")),
        }
    }

    pub fn is_zero(&self) -> bool {
        match self {
            Self::Spectral(s) => s.terms.iter().all(|t| t.1 == 0.0),
            Self::Grid(g) => g.values.iter().all(|&v| v == 0.0),
        }
    }
}

/// V_0 for the trace χ_n: exactly sin(n x1) cosh(n x2).
pub fn solve_full_gate_mode(n: u32, l: f64) -> Result<PotentialField> {
    if n == 0 {
        return Err(Error::invalid("gate mode n must be >= 1"));
    }
    if !(l > 0.0) {
        return Err(Error::invalid(format!("L must be positive, got {l}")));
    }
    Ok(PotentialField::Spectral(SpectralField {
        l,
        terms: vec![(n, 1.0)],
    }))
}

/// V_0 for the trace Σ_m c_m sin(m x1): Σ_m c_m sin(m x1) cosh(m x2) / cosh(mL).
pub fn solve_full_gate_series(coefficients: &[f64], l: f64) -> Result<PotentialField> {
    if !(l > 0.0) {
        return Err(Error::invalid(format!("L must be positive, got {l}")));
    }
    if coefficients.iter().any(|c| !c.is_finite()) {
        return Err(Error::invalid("sine-series coefficients must be finite"));
    }
    let terms = coefficients
        .iter()
        .enumerate()
        .map(|(k, &c)| {
            let m = (k + 1) as u32;
            (m, c / (m as f64 * l).cosh())
        })
        .collect();
    Ok(PotentialField::Spectral(SpectralField { l, terms }))
}

/// Footprint a < x1 < b of a partial gate on the top side.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GateSegment {
    pub a: f64,
    pub b: f64,
}

impl GateSegment {
    pub fn new(a: f64, b: f64) -> Result<Self> {
        if !(0.0 < a && a < b && b < PI) {
            return Err(Error::invalid(format!(
                "gate segment must satisfy 0 < a < b < pi, got ({a}, {b})"
            )));
        }
        Ok(Self { a, b })
    }

    /// Segment of length fraction·π centered on x1 = π/2.
    pub fn centered(fraction: f64) -> Result<Self> {
        if !(fraction > 0.0 && fraction < 1.0) {
            return Err(Error::invalid(format!("gate fraction must lie in (0,1), got {fraction}")));
        }
        let half = 0.5 * fraction * PI;
        Self::new(0.5 * PI - half, 0.5 * PI + half)
    }
}

const CG_TOL: f64 = 1e-10;

/// Node classification for the mixed Laplace problem.
struct MixedProblem<'a> {
    grid: &'a Grid,
    /// Top-row nodes i carrying a Dirichlet value.
    top_dirichlet: Vec<Option<f64>>,
}

impl MixedProblem<'_> {
    #[inline]
    fn is_unknown(&self, i: usize, j: usize) -> bool {
        i != 0 && i != self.grid.nx && !(j == self.grid.ny && self.top_dirichlet[i].is_some())
    }

    /// Symmetrized 5-point operator at unknown node (i, j); Neumann rows carry half weight.
    #[inline]
    fn stencil(&self, u: &Array2<f64>, i: usize, j: usize) -> f64 {
        let g = self.grid;
        let ih1 = 1.0 / (g.h1 * g.h1);
        let ih2 = 1.0 / (g.h2 * g.h2);
        let c = u[[i, j]];
        let horiz = (2.0 * c - u[[i - 1, j]] - u[[i + 1, j]]) * ih1;
        if j == 0 {
            0.5 * horiz + (c - u[[i, 1]]) * ih2
        } else if j == g.ny {
            0.5 * horiz + (c - u[[i, j - 1]]) * ih2
        } else {
            horiz + (2.0 * c - u[[i, j - 1]] - u[[i, j + 1]]) * ih2
        }
    }

    fn diagonal(&self, j: usize) -> f64 {
        let g = self.grid;
        let ih1 = 1.0 / (g.h1 * g.h1);
        let ih2 = 1.0 / (g.h2 * g.h2);
        if j == 0 || j == g.ny {
            ih1 + ih2
        } else {
            2.0 * ih1 + 2.0 * ih2
        }
    }

    fn apply(&self, u: &Array2<f64>, out: &mut Array2<f64>) {
        let g = self.grid;
        for i in 0..=g.nx {
            for j in 0..=g.ny {
                out[[i, j]] = if self.is_unknown(i, j) {
                    self.stencil(u, i, j)
                } else {
                    0.0
                };
            }
        }
    }

    /// Preconditioned conjugate gradients; returns (solution incl. Dirichlet data, info).
    fn solve(&self) -> Result<(Array2<f64>, SolveInfo)> {
        let g = self.grid;
        let mut lift = g.zeros();
        for (i, v) in self.top_dirichlet.iter().enumerate() {
            if let Some(v) = v {
                lift[[i, g.ny]] = *v;
            }
        }
        let mut b = g.zeros();
        self.apply(&lift, &mut b);
        b.mapv_inplace(|v| -v);
        let bnorm = b.iter().map(|v| v * v).sum::<f64>().sqrt();
        let method = "pcg-jacobi".to_string();
        if bnorm == 0.0 {
            return Ok((
                lift,
                SolveInfo {
                    method,
                    iterations: 0,
                    relative_residual: 0.0,
                    snapped_segment: None,
                },
            ));
        }
        let inv_diag = Array2::from_shape_fn(g.shape(), |(i, j)| {
            if self.is_unknown(i, j) {
                1.0 / self.diagonal(j)
            } else {
                0.0
            }
        });
        let mut x = g.zeros();
        let mut r = b.clone();
        let mut z = &r * &inv_diag;
        let mut p = z.clone();
        let mut ap = g.zeros();
        let mut rz: f64 = dot(&r, &z);
        let max_iter = 20 * (g.nx + g.ny) * 10;
        let mut rel = 1.0;
        for it in 1..=max_iter {
            self.apply(&p, &mut ap);
            let alpha = rz / dot(&p, &ap);
            Zip::from(&mut x).and(&p).for_each(|x, &p| *x += alpha * p);
            Zip::from(&mut r).and(&ap).for_each(|r, &a| *r -= alpha * a);
            rel = dot(&r, &r).sqrt() / bnorm;
            if rel <= CG_TOL {
                let mut u = x;
                u += &lift;
                return Ok((
                    u,
                    SolveInfo {
                        method,
                        iterations: it,
                        relative_residual: rel,
                        snapped_segment: None,
                    },
                ));
            }
            Zip::from(&mut z).and(&r).and(&inv_diag).for_each(|z, &r, &d| *z = r * d);
            let rz_new = dot(&r, &z);
            let beta = rz_new / rz;
            rz = rz_new;
            Zip::from(&mut p).and(&z).for_each(|p, &z| *p = z + beta * *p);
        }
        Err(Error::SolverFailure {
            iterations: max_iter,
            residual: rel,
        })
    }
}

fn dot(a: &Array2<f64>, b: &Array2<f64>) -> f64 {
    Zip::from(a).and(b).fold(0.0, |acc, &x, &y| acc + x * y)
}

/// Discrete Laplace residual max |Δ_h u| over nodes where the equation is posed.
pub fn harmonic_residual(field: &GridField, top_dirichlet: &[bool]) -> f64 {
    let g = &field.grid;
    let problem = MixedProblem {
        grid: g,
        top_dirichlet: top_dirichlet.iter().map(|&d| d.then_some(0.0)).collect(),
    };
    let mut worst: f64 = 0.0;
    for i in 1..g.nx {
        for j in 0..=g.ny {
            if problem.is_unknown(i, j) {
                let s = problem.stencil(&field.values, i, j) / problem.diagonal(j);
                worst = worst.max(s.abs());
            }
        }
    }
    worst
}

fn check_grid(spec: GridSpec) -> Result<()> {
    if spec.nx < 16 || spec.ny < 16 {
        return Err(Error::invalid(format!(
            "finite-difference grid needs at least 16 cells per axis, got {}x{}",
            spec.nx, spec.ny
        )));
    }
    Ok(())
}

/// Finite-difference V_0 with the whole top side as gate (trace given pointwise).
pub fn solve_full_gate_fd(trace: impl Fn(f64) -> f64, spec: GridSpec, l: f64) -> Result<GridField> {
    check_grid(spec)?;
    let grid = Grid::new(spec, l)?;
    let top = (0..=grid.nx)
        .map(|i| {
            if i == 0 || i == grid.nx {
                None
            } else {
                Some(trace(grid.x1(i)))
            }
        })
        .collect();
    let problem = MixedProblem {
        grid: &grid,
        top_dirichlet: top,
    };
    let (values, info) = problem.solve()?;
    Ok(GridField {
        grid,
        values,
        info: Some(info),
    })
}

/// Finite-difference V_0 for a partial gate: Dirichlet trace on the grid nodes of
/// the (snapped) segment, homogeneous Neumann on the rest of the top and on the bottom.
pub fn solve_partial_gate_fd(
    segment: GateSegment,
    trace: impl Fn(f64) -> f64,
    spec: GridSpec,
    l: f64,
) -> Result<GridField> {
    check_grid(spec)?;
    let grid = Grid::new(spec, l)?;
    let ia = ((segment.a / grid.h1).round() as usize).max(1);
    let ib = ((segment.b / grid.h1).round() as usize).min(grid.nx - 1);
    if ia > ib {
        return Err(Error::invalid("gate segment contains no interior grid node"));
    }
    let top = (0..=grid.nx)
        .map(|i| (ia..=ib).contains(&i).then(|| trace(grid.x1(i))))
        .collect();
    let problem = MixedProblem {
        grid: &grid,
        top_dirichlet: top,
    };
    let (values, mut info) = problem.solve()?;
    info.snapped_segment = Some((grid.x1(ia), grid.x1(ib)));
    Ok(GridField {
        grid,
        values,
        info: Some(info),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepPoint {
    pub fraction: f64,
    pub snapped_segment: (f64, f64),
    pub l2_error: f64,
    pub h1_error: f64,
    pub iterations: usize,
}

/// Partial gates of growing length against the closed-form full-gate field for χ_n.
pub fn gate_convergence_sweep(fractions: &[f64], n: u32, l: f64, spec: GridSpec) -> Result<Vec<SweepPoint>> {
    if fractions.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::invalid("gate fractions must be strictly increasing"));
    }
    let full = solve_full_gate_mode(n, l)?;
    let profile = GateProfile::FourierMode { n };
    let grid = Grid::new(spec, l)?;
    let exact = full.sample(&grid)?.values;
    fractions
        .par_iter()
        .map(|&fraction| {
            let segment = GateSegment::centered(fraction)?;
            let field = solve_partial_gate_fd(segment, |x| profile.trace(x, l), spec, l)?;
            let err = &field.values - &exact;
            let l2 = grid.l2_norm(&err);
            let grad = grid.gradient_norm(&err);
            let info = field.info.expect("fd solve reports info");
            Ok(SweepPoint {
                fraction,
                snapped_segment: info.snapped_segment.expect("partial solve reports segment"),
                l2_error: l2,
                h1_error: (l2 * l2 + grad * grad).sqrt(),
                iterations: info.iterations,
            })
        })
        .collect()
}

/// Solver for −ΔW = α·ρ with W = 0 on the gate and both sides and ∂W/∂ν = 0 at the bottom.
///
/// Expands in the separable basis sin(j1 x1)·cos((k + ½) π x2 / L), which satisfies
/// the mixed conditions exactly, and divides by the continuous eigenvalues
/// j1² + ((k + ½) π / L)².
#[derive(Clone)]
pub struct HartreeSolver {
    grid: Grid,
    sine: SineTransform,
    quarter: QuarterWaveTransform,
    inv_eigen: Array2<f64>,
}

impl HartreeSolver {
    pub fn new(grid: Grid) -> Self {
        let sine = SineTransform::new(grid.nx);
        let quarter = QuarterWaveTransform::new(grid.ny);
        let inv_eigen = Array2::from_shape_fn((grid.nx - 1, grid.ny), |(a, k)| {
            let j1 = (a + 1) as f64;
            let q = (k as f64 + 0.5) * PI / grid.l;
            1.0 / (j1 * j1 + q * q)
        });
        Self {
            grid,
            sine,
            quarter,
            inv_eigen,
        }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    /// W for source α·density, returned on all lattice nodes.
    pub fn solve(&self, density: &Array2<f64>, alpha: f64) -> Result<Array2<f64>> {
        if !(alpha >= 0.0) {
            return Err(Error::invalid(format!("alpha must be nonnegative, got {alpha}")));
        }
        if density.dim() != self.grid.shape() {
            return Err(Error::invalid("density does not match the Hartree grid"));
        }
        let g = &self.grid;
        let mut out = g.zeros();
        if alpha == 0.0 {
            return Ok(out);
        }
        let (m1, m2) = (g.nx - 1, g.ny);
        // interior in x1, nodes 0..ny-1 in x2
        let mut work = Array2::from_shape_fn((m1, m2), |(a, j)| density[[a + 1, j]]);
        self.transform_rows(&mut work, true);
        self.transform_cols(&mut work, true);
        Zip::from(&mut work).and(&self.inv_eigen).for_each(|w, &e| *w *= alpha * e);
        self.transform_cols(&mut work, false);
        self.transform_rows(&mut work, false);
        for a in 0..m1 {
            for j in 0..m2 {
                out[[a + 1, j]] = work[[a, j]];
            }
        }
        Ok(out)
    }

    /// Quarter-wave transform along x2 (contiguous rows).
    fn transform_rows(&self, work: &mut Array2<f64>, forward: bool) {
        for mut row in work.rows_mut() {
            let buf = row.as_slice_mut().expect("standard layout");
            if forward {
                self.quarter.analyze(buf);
            } else {
                self.quarter.synthesize(buf);
            }
        }
    }

    /// Sine transform along x1.
    fn transform_cols(&self, work: &mut Array2<f64>, forward: bool) {
        let mut buf = vec![0.0; work.nrows()];
        for mut col in work.columns_mut() {
            for (b, v) in buf.iter_mut().zip(col.iter()) {
                *b = *v;
            }
            if forward {
                self.sine.analyze(&mut buf);
            } else {
                self.sine.synthesize(&mut buf);
            }
            for (v, b) in col.iter_mut().zip(&buf) {
                *v = *b;
            }
        }
    }
}

/// One-shot Hartree solve on a grid; see [`HartreeSolver`].
pub fn solve_hartree(density: &Array2<f64>, alpha: f64, grid: &Grid) -> Result<GridField> {
    if density.iter().any(|&d| d < 0.0 || !d.is_finite()) {
        return Err(Error::invalid("density must be finite and nonnegative"));
    }
    let values = HartreeSolver::new(*grid).solve(density, alpha)?;
    Ok(GridField {
        grid: *grid,
        values,
        info: Some(SolveInfo {
            method: "sine-quarterwave-spectral".into(),
            iterations: 0,
            relative_residual: 0.0,
            snapped_segment: None,
        }),
    })
}
