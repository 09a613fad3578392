//! Uniform node lattice on the rectangle (0, π) × (0, L) and fields sampled on it.

use std::f64::consts::PI;
use std::io::Write;

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Number of cells per axis; the lattice has (nx + 1) × (ny + 1) nodes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub nx: usize,
    pub ny: usize,
}

impl GridSpec {
    pub fn square(n: usize) -> Self {
        Self { nx: n, ny: n }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Grid {
    pub nx: usize,
    pub ny: usize,
    pub l: f64,
    pub h1: f64,
    pub h2: f64,
}

impl Grid {
    pub fn new(spec: GridSpec, l: f64) -> Result<Self> {
        if spec.nx < 2 || spec.ny < 2 {
            return Err(Error::invalid(format!(
                "grid needs at least 2 cells per axis, got {}x{}",
                spec.nx, spec.ny
            )));
        }
        if !(l > 0.0) {
            return Err(Error::invalid(format!("L must be positive, got {l}")));
        }
        Ok(Self {
            nx: spec.nx,
            ny: spec.ny,
            l,
            h1: PI / spec.nx as f64,
            h2: l / spec.ny as f64,
        })
    }

    pub fn spec(&self) -> GridSpec {
        GridSpec {
            nx: self.nx,
            ny: self.ny,
        }
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.nx + 1, self.ny + 1)
    }

    #[inline]
    pub fn x1(&self, i: usize) -> f64 {
        if i == self.nx {
            PI
        } else {
            i as f64 * self.h1
        }
    }

    #[inline]
    pub fn x2(&self, j: usize) -> f64 {
        if j == self.ny {
            self.l
        } else {
            j as f64 * self.h2
        }
    }

    pub fn zeros(&self) -> Array2<f64> {
        Array2::zeros(self.shape())
    }

    pub fn from_fn(&self, f: impl Fn(f64, f64) -> f64) -> Array2<f64> {
        Array2::from_shape_fn(self.shape(), |(i, j)| f(self.x1(i), self.x2(j)))
    }

    /// Trapezoidal weight of node (i, j), including the cell area.
    #[inline]
    pub fn weight(&self, i: usize, j: usize) -> f64 {
        let w1 = if i == 0 || i == self.nx { 0.5 } else { 1.0 };
        let w2 = if j == 0 || j == self.ny { 0.5 } else { 1.0 };
        w1 * w2 * self.h1 * self.h2
    }

    pub fn integrate(&self, values: &Array2<f64>) -> f64 {
        values
            .indexed_iter()
            .map(|((i, j), v)| self.weight(i, j) * v)
            .sum()
    }

    /// Discrete L² norm with trapezoidal weights.
    pub fn l2_norm(&self, values: &Array2<f64>) -> f64 {
        values
            .indexed_iter()
            .map(|((i, j), v)| self.weight(i, j) * v * v)
            .sum::<f64>()
            .sqrt()
    }

    /// ‖∇u‖ from one-sided differences on cell edges, trapezoidal in the transverse direction.
    pub fn gradient_norm(&self, u: &Array2<f64>) -> f64 {
        let mut acc = 0.0;
        for i in 0..self.nx {
            for j in 0..=self.ny {
                let w = if j == 0 || j == self.ny { 0.5 } else { 1.0 };
                let d = (u[[i + 1, j]] - u[[i, j]]) / self.h1;
                acc += w * d * d;
            }
        }
        for i in 0..=self.nx {
            let w = if i == 0 || i == self.nx { 0.5 } else { 1.0 };
            for j in 0..self.ny {
                let d = (u[[i, j + 1]] - u[[i, j]]) / self.h2;
                acc += w * d * d;
            }
        }
        (acc * self.h1 * self.h2).sqrt()
    }

    /// Bilinear interpolation of node values at an arbitrary point of the closed rectangle.
    pub fn interpolate(&self, values: &Array2<f64>, x1: f64, x2: f64) -> f64 {
        let s = (x1 / self.h1).clamp(0.0, self.nx as f64);
        let t = (x2 / self.h2).clamp(0.0, self.ny as f64);
        let i = (s.floor() as usize).min(self.nx - 1);
        let j = (t.floor() as usize).min(self.ny - 1);
        let fs = s - i as f64;
        let ft = t - j as f64;
        (1.0 - fs) * (1.0 - ft) * values[[i, j]]
            + fs * (1.0 - ft) * values[[i + 1, j]]
            + (1.0 - fs) * ft * values[[i, j + 1]]
            + fs * ft * values[[i + 1, j + 1]]
    }
}

/// How a grid field was produced.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SolveInfo {
    pub method: String,
    pub iterations: usize,
    pub relative_residual: f64,
    /// Gate endpoints after snapping to grid nodes, when a partial gate was solved.
    pub snapped_segment: Option<(f64, f64)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridField {
    pub grid: Grid,
    /// Node values indexed `[i, j]` with x1 = i·h1, x2 = j·h2.
    pub values: Array2<f64>,
    pub info: Option<SolveInfo>,
}

impl GridField {
    pub fn new(grid: Grid, values: Array2<f64>) -> Self {
        assert_eq!(values.dim(), grid.shape());
        Self {
            grid,
            values,
            info: None,
        }
    }

    pub fn value_at(&self, x1: f64, x2: f64) -> f64 {
        self.grid.interpolate(&self.values, x1, x2)
    }

    /// CSV with header `x1,x2,value`, x1-major, 17 significant digits.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "x1,x2,value")?;
        for ((i, j), v) in self.values.indexed_iter() {
            writeln!(
                w,
                "{:.16e},{:.16e},{:.16e}",
                self.grid.x1(i),
                self.grid.x2(j),
                v
            )?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn trapezoid_integrates_bilinear_exactly() {
        let g = Grid::new(GridSpec { nx: 8, ny: 5 }, 1.3).unwrap();
        let v = g.from_fn(|x1, x2| 1.0 + x1 + 2.0 * x2 + x1 * x2);
        let exact = PI * 1.3 + PI * PI / 2.0 * 1.3 + PI * 1.3 * 1.3 + PI * PI / 2.0 * 1.3 * 1.3 / 2.0;
        assert!((g.integrate(&v) - exact).abs() < 1e-12);
    }

    #[test]
    fn interpolation_reproduces_nodes_and_corners() {
        let g = Grid::new(GridSpec::square(4), 1.0).unwrap();
        let v = g.from_fn(|x1, x2| x1 * 3.0 - x2);
        assert!((g.interpolate(&v, PI, 1.0) - (3.0 * PI - 1.0)).abs() < 1e-13);
        assert!((g.interpolate(&v, 0.3, 0.7) - (0.9 - 0.7)).abs() < 1e-13);
    }

    #[test]
    fn csv_has_header_and_all_nodes() {
        let g = Grid::new(GridSpec::square(2), 1.0).unwrap();
        let f = GridField::new(g, g.from_fn(|a, b| a + b));
        let mut out = Vec::new();
        f.write_csv(&mut out).unwrap();
        let text = String::from_utf8(out).unwrap();
        let lines: Vec<_> = text.lines().collect();
        assert_eq!(lines[0], "x1,x2,value");
        assert_eq!(lines.len(), 10);
        let last: Vec<f64> = lines[9].split(',').map(|s| s.parse().unwrap()).collect();
        assert_eq!(last, vec![PI, 1.0, PI + 1.0]);
    }
}
