//! Time evolution: bilinear Galerkin propagation, resonant pulse synthesis and
//! the split-step Schrödinger–Poisson integrator.

mod bilinear;
mod nonlinear;
mod pulse;

use std::io::Write;

use nalgebra::DVector;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spectral::ModeIndex;

pub use bilinear::{propagate_bilinear, BilinearPropagator};
pub use nonlinear::{
    alpha_scaling_study, propagate_nonlinear, AlphaPoint, AlphaStudy, GridWave, NonlinearConfig, NonlinearRun,
    NonlinearSolver,
};
pub use pulse::{plan_chain_transfer, synthesize_chain_transfer, EdgePulse, PulseOptions};

/// Galerkin state: complex coefficients over an ordered mode list.
#[derive(Debug, Clone, PartialEq)]
pub struct WaveState {
    pub modes: Vec<ModeIndex>,
    pub coefficients: DVector<Complex64>,
    pub time: f64,
}

impl WaveState {
    pub fn basis(modes: &[ModeIndex], target: ModeIndex) -> Result<Self> {
        let pos = modes
            .iter()
            .position(|&m| m == target)
            .ok_or_else(|| Error::invalid(format!("mode {target} is not in the state basis")))?;
        let mut c = DVector::from_element(modes.len(), Complex64::new(0.0, 0.0));
        c[pos] = Complex64::new(1.0, 0.0);
        Ok(Self {
            modes: modes.to_vec(),
            coefficients: c,
            time: 0.0,
        })
    }

    pub fn norm(&self) -> f64 {
        self.coefficients.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn populations(&self) -> Vec<f64> {
        self.coefficients.iter().map(|c| c.norm_sqr()).collect()
    }

    pub fn conj(&self) -> Self {
        Self {
            modes: self.modes.clone(),
            coefficients: self.coefficients.map(|c| c.conj()),
            time: self.time,
        }
    }
}

/// |⟨φ_target, ψ⟩|² for a normalized state.
pub fn transfer_fidelity(state: &WaveState, target: ModeIndex) -> Result<f64> {
    let pos = state
        .modes
        .iter()
        .position(|&m| m == target)
        .ok_or_else(|| Error::invalid(format!("mode {target} is not in the state basis")))?;
    Ok(state.coefficients[pos].norm_sqr().clamp(0.0, 1.0))
}

/// Piecewise-constant control: consecutive (duration, value) samples, values in [0, δ].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ControlSignal {
    pub samples: Vec<(f64, f64)>,
    pub delta: f64,
}

impl ControlSignal {
    pub fn new(samples: Vec<(f64, f64)>, delta: f64) -> Result<Self> {
        let s = Self { samples, delta };
        s.validate()?;
        Ok(s)
    }

    pub fn constant(value: f64, duration: f64, delta: f64) -> Result<Self> {
        Self::new(vec![(duration, value)], delta)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.delta > 0.0) {
            return Err(Error::invalid(format!("delta must be positive, got {}", self.delta)));
        }
        for (k, &(d, v)) in self.samples.iter().enumerate() {
            if !(d > 0.0) || !d.is_finite() {
                return Err(Error::invalid(format!("sample {k} has nonpositive duration {d}")));
            }
            if !(0.0..=self.delta).contains(&v) {
                return Err(Error::invalid(format!(
                    "control value {v} at sample {k} lies outside [0, {}]",
                    self.delta
                )));
            }
        }
        Ok(())
    }

    pub fn duration(&self) -> f64 {
        self.samples.iter().map(|s| s.0).sum()
    }

    /// Control value at time t (the last sample holds past the end).
    pub fn value_at(&self, t: f64) -> f64 {
        let mut acc = 0.0;
        for &(d, v) in &self.samples {
            acc += d;
            if t < acc {
                return v;
            }
        }
        self.samples.last().map_or(0.0, |s| s.1)
    }

    /// Restriction to [0, t].
    pub fn truncated(&self, t: f64) -> Result<Self> {
        if t > self.duration() * (1.0 + 1e-12) {
            return Err(Error::invalid(format!(
                "control lasts {} but {t} was requested",
                self.duration()
            )));
        }
        let mut out = Vec::new();
        let mut acc = 0.0;
        for &(d, v) in &self.samples {
            if acc >= t {
                break;
            }
            let take = d.min(t - acc);
            if take > 0.0 {
                out.push((take, v));
            }
            acc += d;
        }
        Ok(Self {
            samples: out,
            delta: self.delta,
        })
    }

    /// Samples in reverse order.
    pub fn reversed(&self) -> Self {
        Self {
            samples: self.samples.iter().rev().copied().collect(),
            delta: self.delta,
        }
    }

    /// Appends another signal with the same bound.
    pub fn extend(&mut self, other: &ControlSignal) {
        self.samples.extend_from_slice(&other.samples);
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LogRow {
    pub time: f64,
    pub norm: f64,
    pub h1_seminorm: f64,
    pub populations: Vec<f64>,
    pub control_value: f64,
    /// ∫ V_0 |ψ|², when the propagator tracks it.
    pub potential_energy: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct TrajectoryLog {
    pub rows: Vec<LogRow>,
}

impl TrajectoryLog {
    /// CSV `time,norm,h1_seminorm,population_1..population_K,control_value`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        let k = self.rows.first().map_or(0, |r| r.populations.len());
        let mut header = vec!["time".to_string(), "norm".into(), "h1_seminorm".into()];
        header.extend((1..=k).map(|i| format!("population_{i}")));
        header.push("control_value".into());
        writeln!(w, "{}", header.join(","))?;
        for r in &self.rows {
            let mut cols = vec![
                format!("{:.16e}", r.time),
                format!("{:.16e}", r.norm),
                format!("{:.16e}", r.h1_seminorm),
            ];
            cols.extend(r.populations.iter().map(|p| format!("{p:.16e}")));
            cols.push(format!("{:.16e}", r.control_value));
            writeln!(w, "{}", cols.join(","))?;
        }
        Ok(())
    }

    pub fn max_norm_drift(&self) -> f64 {
        let first = self.rows.first().map_or(1.0, |r| r.norm);
        self.rows
            .iter()
            .map(|r| (r.norm - first).abs())
            .fold(0.0, f64::max)
    }

    pub fn max_h1(&self) -> f64 {
        self.rows.iter().map(|r| r.h1_seminorm).fold(0.0, f64::max)
    }
}
