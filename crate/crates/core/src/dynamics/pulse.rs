use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::ControlSignal;
use crate::coupling::CouplingMatrix;
use crate::error::{Error, Result};
use crate::spectral::{shifted_spectrum, ModeIndex, Spectrum};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PulseOptions {
    /// Drive amplitude as a fraction of δ, in (0, 1/2].
    pub amplitude_fraction: f64,
    pub samples_per_period: usize,
    /// Galerkin size used for the offset spectrum.
    pub truncation: usize,
    pub duration_cap: Option<f64>,
}

impl Default for PulseOptions {
    fn default() -> Self {
        Self {
            amplitude_fraction: 0.1,
            samples_per_period: 40,
            truncation: 30,
            duration_cap: None,
        }
    }
}

/// One resonant pulse of a chained transfer.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EdgePulse {
    pub from: ModeIndex,
    pub to: ModeIndex,
    /// Transition frequency on the offset spectrum.
    pub omega: f64,
    /// Coupling between the two offset eigenvectors.
    pub coupling: f64,
    pub offset: f64,
    pub amplitude: f64,
    pub duration: f64,
}

impl EdgePulse {
    /// u(t) = ū + a cos(ωt) sampled at sample midpoints and clamped into [0, δ].
    pub fn samples(&self, delta: f64, per_period: usize) -> Vec<(f64, f64)> {
        let dt = 2.0 * PI / self.omega / per_period as f64;
        let full = (self.duration / dt).floor() as usize;
        let value = |phase: f64| (self.offset + self.amplitude * phase.cos()).clamp(0.0, delta);
        let mut out: Vec<(f64, f64)> = (0..full)
            .map(|k| {
                // reduced phase keeps repeated values bit-identical
                let r = (k % per_period) as f64 + 0.5;
                (dt, value(2.0 * PI * r / per_period as f64))
            })
            .collect();
        let rest = self.duration - full as f64 * dt;
        if rest > 1e-12 * self.duration {
            out.push((rest, value(self.omega * (full as f64 * dt + 0.5 * rest))));
        }
        out
    }
}

/// Resonant pulse parameters for each consecutive pair of `path`.
///
/// Frequencies and couplings are taken on the spectrum of −Δ + (δ/2)·V_0, with
/// levels matched to modes by largest overlap. A first-order π-pulse in the
/// rotating frame lasts π / (a·|b'|).
pub fn plan_chain_transfer(
    path: &[ModeIndex],
    spectrum: &Spectrum,
    coupling: &CouplingMatrix,
    delta: f64,
    options: &PulseOptions,
) -> Result<Vec<EdgePulse>> {
    if !(delta > 0.0) {
        return Err(Error::invalid(format!("delta must be positive, got {delta}")));
    }
    let f = options.amplitude_fraction;
    if !(f > 0.0 && f <= 0.5) {
        return Err(Error::invalid(format!("amplitude fraction must lie in (0, 1/2], got {f}")));
    }
    if options.samples_per_period < 40 {
        return Err(Error::invalid(format!(
            "need at least 40 samples per period, got {}",
            options.samples_per_period
        )));
    }
    if path.len() < 2 {
        return Ok(Vec::new());
    }
    let offset = 0.5 * delta;
    let amplitude = f * delta;
    let shifted = shifted_spectrum(spectrum, coupling, offset, options.truncation)?;
    let b = coupling.dense(options.truncation);
    let rotated = shifted.eigenvectors.transpose() * &b * &shifted.eigenvectors;

    let position = |m: ModeIndex| {
        coupling.modes[..options.truncation]
            .iter()
            .position(|&x| x == m)
            .ok_or_else(|| Error::invalid(format!("mode {m} lies outside the truncation")))
    };
    let mut pulses = Vec::with_capacity(path.len() - 1);
    for w in path.windows(2) {
        let (pa, pb) = (position(w[0])?, position(w[1])?);
        if pa == pb || !coupling.is_coupled(pa, pb) {
            return Err(Error::invalid(format!("modes {} and {} are not coupled", w[0], w[1])));
        }
        let la = shifted.level_of(w[0]).expect("mode is in the truncation");
        let lb = shifted.level_of(w[1]).expect("mode is in the truncation");
        let bp = rotated[(la, lb)];
        if bp == 0.0 || la == lb {
            return Err(Error::invalid(format!(
                "offset levels of {} and {} are not coupled",
                w[0], w[1]
            )));
        }
        let omega = (shifted.eigenvalues[lb] - shifted.eigenvalues[la]).abs();
        let duration = PI / (amplitude * bp.abs());
        if let Some(cap) = options.duration_cap {
            if duration > cap {
                return Err(Error::CapExceeded { duration, cap });
            }
        }
        pulses.push(EdgePulse {
            from: w[0],
            to: w[1],
            omega,
            coupling: bp,
            offset,
            amplitude,
            duration,
        });
    }
    Ok(pulses)
}

/// Concatenated π-pulses transferring population along `path`.
pub fn synthesize_chain_transfer(
    path: &[ModeIndex],
    spectrum: &Spectrum,
    coupling: &CouplingMatrix,
    delta: f64,
    options: &PulseOptions,
) -> Result<ControlSignal> {
    let plan = plan_chain_transfer(path, spectrum, coupling, delta, options)?;
    let mut samples = Vec::new();
    for p in &plan {
        samples.extend(p.samples(delta, options.samples_per_period));
    }
    if let Some(cap) = options.duration_cap {
        let total: f64 = plan.iter().map(|p| p.duration).sum();
        if total > cap {
            return Err(Error::CapExceeded { duration: total, cap });
        }
    }
    ControlSignal::new(samples, delta)
}
