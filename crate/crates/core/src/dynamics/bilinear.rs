use std::collections::HashMap;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use super::{ControlSignal, WaveState};
use crate::coupling::CouplingMatrix;
use crate::error::{Error, Result};
use crate::linalg::symmetric_eigen;
use crate::spectral::{ModeIndex, Spectrum};

/// Exact propagator for i dc/dt = (diag(λ) + u·B) c with piecewise-constant u.
///
/// Frozen Hamiltonians are diagonalized once per distinct control value.
pub struct BilinearPropagator {
    modes: Vec<ModeIndex>,
    lambda: Vec<f64>,
    coupling: DMatrix<f64>,
    cache: HashMap<u64, (Vec<f64>, DMatrix<f64>)>,
}

impl BilinearPropagator {
    pub fn new(spectrum: &Spectrum, coupling: &CouplingMatrix, truncation: usize) -> Result<Self> {
        if truncation == 0 || truncation > spectrum.len() || truncation > coupling.modes.len() {
            return Err(Error::invalid(format!(
                "truncation {truncation} exceeds available data (spectrum {}, coupling {})",
                spectrum.len(),
                coupling.modes.len()
            )));
        }
        let modes = spectrum.modes()[..truncation].to_vec();
        if modes[..] != coupling.modes[..truncation] {
            return Err(Error::invalid("coupling mode order differs from spectrum"));
        }
        Ok(Self {
            modes,
            lambda: spectrum.eigenvalues()[..truncation].to_vec(),
            coupling: coupling.dense(truncation),
            cache: HashMap::new(),
        })
    }

    /// Builds a propagator from explicit matrices (used for gauge and oracle checks).
    pub fn from_parts(modes: Vec<ModeIndex>, lambda: Vec<f64>, coupling: DMatrix<f64>) -> Result<Self> {
        let k = modes.len();
        if lambda.len() != k || coupling.nrows() != k || coupling.ncols() != k {
            return Err(Error::invalid("propagator parts have inconsistent sizes"));
        }
        Ok(Self {
            modes,
            lambda,
            coupling,
            cache: HashMap::new(),
        })
    }

    pub fn modes(&self) -> &[ModeIndex] {
        &self.modes
    }

    fn frozen(&mut self, u: f64) -> &(Vec<f64>, DMatrix<f64>) {
        let (lambda, coupling) = (&self.lambda, &self.coupling);
        self.cache.entry(u.to_bits()).or_insert_with(|| {
            let mut h = coupling * u;
            for (k, l) in lambda.iter().enumerate() {
                h[(k, k)] += l;
            }
            symmetric_eigen(h)
        })
    }

    /// Applies exp(−i(diag(λ) + u·B)·duration) in place.
    pub fn step(&mut self, state: &mut WaveState, u: f64, duration: f64) {
        let (mu, v) = self.frozen(u);
        let re = DVector::from_iterator(state.coefficients.len(), state.coefficients.iter().map(|c| c.re));
        let im = DVector::from_iterator(state.coefficients.len(), state.coefficients.iter().map(|c| c.im));
        let (wr, wi) = (v.tr_mul(&re), v.tr_mul(&im));
        let mut pr = DVector::zeros(mu.len());
        let mut pi = DVector::zeros(mu.len());
        for k in 0..mu.len() {
            let (s, c) = (-mu[k] * duration).sin_cos();
            pr[k] = c * wr[k] - s * wi[k];
            pi[k] = s * wr[k] + c * wi[k];
        }
        let (nr, ni) = (v * pr, v * pi);
        for (k, c) in state.coefficients.iter_mut().enumerate() {
            *c = Complex64::new(nr[k], ni[k]);
        }
        state.time += duration;
    }
}

/// States at every sample boundary, starting with `initial`.
pub fn propagate_bilinear(
    spectrum: &Spectrum,
    coupling: &CouplingMatrix,
    control: &ControlSignal,
    initial: &WaveState,
    truncation: usize,
) -> Result<Vec<WaveState>> {
    control.validate()?;
    let mut prop = BilinearPropagator::new(spectrum, coupling, truncation)?;
    if initial.modes != prop.modes {
        return Err(Error::invalid("initial state basis differs from the truncated spectrum"));
    }
    let norm = initial.norm();
    if (norm - 1.0).abs() > 1e-10 {
        return Err(Error::invalid(format!("initial state has norm {norm}, expected 1")));
    }
    let mut out = Vec::with_capacity(control.samples.len() + 1);
    let mut state = initial.clone();
    out.push(state.clone());
    for &(d, u) in &control.samples {
        prop.step(&mut state, u, d);
        out.push(state.clone());
    }
    Ok(out)
}
