//! Run configuration: a single JSON document with defaults for every field.

use std::f64::consts::PI;
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::coupling::ZeroTol;
use crate::dynamics::PulseOptions;
use crate::error::{Error, Result};
use crate::gate::{GateProfile, GateSegment};
use crate::grid::GridSpec;
use crate::quadrature::QuadratureConfig;
use crate::spectral::{mode, ModeIndex, Wall};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Tolerances {
    pub simplicity: f64,
    pub resonance: f64,
    pub zero_tol: ZeroTol,
    pub quadrature: QuadratureConfig,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            simplicity: 1e-9,
            resonance: 1e-6,
            zero_tol: ZeroTol::default(),
            quadrature: QuadratureConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DynamicsConfig {
    pub dt: f64,
    /// Final time for free evolution and the nonlinear study.
    pub final_time: f64,
    pub alphas: Vec<f64>,
    /// Chain of modes driven one edge at a time; the first entry is the initial state.
    pub path: Vec<ModeIndex>,
    pub amplitude_fraction: f64,
    pub samples_per_period: usize,
    pub duration_cap: Option<f64>,
    pub nonlinear_grid: GridSpec,
    /// Populations logged per trajectory row.
    pub populations: usize,
}

impl Default for DynamicsConfig {
    fn default() -> Self {
        Self {
            dt: 1e-3,
            final_time: 2.0,
            alphas: vec![1e-3, 1e-2, 1e-1],
            path: vec![mode(1, 1), mode(2, 1), mode(3, 1)],
            amplitude_fraction: 0.1,
            samples_per_period: 40,
            duration_cap: None,
            nonlinear_grid: GridSpec::square(128),
            populations: 4,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ShapeConfig {
    pub wall: Wall,
    pub modes: usize,
}

impl Default for ShapeConfig {
    fn default() -> Self {
        Self {
            wall: Wall::Left,
            modes: 10,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepConfig {
    pub fractions: Vec<f64>,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            fractions: vec![0.5, 0.75, 0.9, 0.99],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    #[serde(rename = "L")]
    pub l: f64,
    pub gate: GateProfile,
    /// Partial gate footprint; the full top side when absent.
    pub gate_segment: Option<GateSegment>,
    pub delta: f64,
    pub truncation: usize,
    /// Cells per axis of the finite-difference grid.
    pub grid: GridSpec,
    pub tolerances: Tolerances,
    pub dynamics: DynamicsConfig,
    pub shape: ShapeConfig,
    pub sweep: SweepConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            l: 1.0,
            gate: GateProfile::FourierMode { n: 2 },
            gate_segment: None,
            delta: 0.3,
            truncation: 30,
            grid: GridSpec::square(256),
            tolerances: Tolerances::default(),
            dynamics: DynamicsConfig::default(),
            shape: ShapeConfig::default(),
            sweep: SweepConfig::default(),
        }
    }
}

impl RunConfig {
    pub fn pulse_options(&self) -> PulseOptions {
        PulseOptions {
            amplitude_fraction: self.dynamics.amplitude_fraction,
            samples_per_period: self.dynamics.samples_per_period,
            truncation: self.truncation,
            duration_cap: self.dynamics.duration_cap,
        }
    }

    /// Gate Fourier index, when the profile is a single mode.
    pub fn gate_mode(&self) -> Option<u32> {
        match self.gate {
            GateProfile::FourierMode { n } => Some(n),
            GateProfile::SineSeries { .. } => None,
        }
    }
}

/// Keys present in `raw` but absent from the serialized default, by dotted path.
/// Reports and removes keys absent from `reference`.
fn strip_unknown_keys(raw: &mut Value, reference: &Value, path: &str, out: &mut Vec<String>) {
    let (Value::Object(r), Value::Object(d)) = (raw, reference) else {
        return;
    };
    r.retain(|k, _| {
        let known = d.contains_key(k);
        if !known {
            let here = if path.is_empty() { k.clone() } else { format!("{path}.{k}") };
            out.push(format!("unknown key `{here}`"));
        }
        known
    });
    for (k, v) in r.iter_mut() {
        let here = if path.is_empty() { k.clone() } else { format!("{path}.{k}") };
        // tagged enums and optional blocks are left to the typed parse
        if here != "gate" && here != "tolerances.zero_tol" {
            strip_unknown_keys(v, &d[k], &here, out);
        }
    }
}

fn range_errors(c: &RunConfig) -> Vec<String> {
    let mut e = Vec::new();
    let mut check = |ok: bool, msg: String| {
        if !ok {
            e.push(msg);
        }
    };
    check(c.l > 0.0 && c.l.is_finite(), format!("L must be positive, got {}", c.l));
    check(c.delta > 0.0 && c.delta.is_finite(), format!("delta must be positive, got {}", c.delta));
    check(
        (1..=5000).contains(&c.truncation),
        format!("truncation must lie in 1..=5000, got {}", c.truncation),
    );
    match &c.gate {
        GateProfile::FourierMode { n } => check(*n >= 1, "gate fourier_mode n must be at least 1".into()),
        GateProfile::SineSeries { coefficients } => {
            check(!coefficients.is_empty(), "gate sine_series needs at least one coefficient".into());
            check(
                coefficients.iter().all(|x| x.is_finite()),
                "gate sine_series coefficients must be finite".into(),
            );
        }
    }
    if let Some(s) = c.gate_segment {
        check(
            0.0 < s.a && s.a < s.b && s.b < PI,
            format!("gate_segment must satisfy 0 < a < b < pi, got ({}, {})", s.a, s.b),
        );
    }
    check(
        c.grid.nx >= 16 && c.grid.ny >= 16,
        format!("grid needs at least 16 cells per axis, got {}x{}", c.grid.nx, c.grid.ny),
    );
    let t = &c.tolerances;
    check(t.simplicity >= 0.0, format!("tolerances.simplicity must be nonnegative, got {}", t.simplicity));
    check(t.resonance >= 0.0, format!("tolerances.resonance must be nonnegative, got {}", t.resonance));
    let z = match t.zero_tol {
        ZeroTol::Absolute(v) | ZeroTol::RowRelative(v) => v,
    };
    check(z >= 0.0, format!("tolerances.zero_tol must be nonnegative, got {z}"));
    check(
        t.quadrature.panels >= 1 && (2..=64).contains(&t.quadrature.nodes),
        "tolerances.quadrature needs panels >= 1 and nodes in 2..=64".into(),
    );
    let d = &c.dynamics;
    check(d.dt > 0.0 && d.dt.is_finite(), format!("dynamics.dt must be positive, got {}", d.dt));
    check(
        d.final_time > 0.0 && d.final_time.is_finite(),
        format!("dynamics.final_time must be positive, got {}", d.final_time),
    );
    check(
        d.alphas.iter().all(|&a| a > 0.0) && d.alphas.windows(2).all(|w| w[0] < w[1]),
        "dynamics.alphas must be positive and strictly increasing".into(),
    );
    check(!d.path.is_empty(), "dynamics.path needs at least one mode".into());
    check(
        d.amplitude_fraction > 0.0 && d.amplitude_fraction <= 0.5,
        format!("dynamics.amplitude_fraction must lie in (0, 0.5], got {}", d.amplitude_fraction),
    );
    check(
        d.samples_per_period >= 40,
        format!("dynamics.samples_per_period must be at least 40, got {}", d.samples_per_period),
    );
    if let Some(cap) = d.duration_cap {
        check(cap > 0.0, format!("dynamics.duration_cap must be positive, got {cap}"));
    }
    check(
        d.nonlinear_grid.nx >= 4 && d.nonlinear_grid.ny >= 4,
        "dynamics.nonlinear_grid needs at least 4 cells per axis".into(),
    );
    check(
        c.truncation == 0 || d.populations <= c.truncation,
        format!("dynamics.populations ({}) exceeds truncation ({})", d.populations, c.truncation),
    );
    check(c.shape.modes >= 1, "shape.modes must be at least 1".into());
    check(
        c.sweep.fractions.iter().all(|&f| f > 0.0 && f < 1.0) && c.sweep.fractions.windows(2).all(|w| w[0] < w[1]),
        "sweep.fractions must lie in (0, 1) and strictly increase".into(),
    );
    e
}

/// Full structural and range validation; all problems are reported together.
pub fn validate_config(raw: &Value) -> Result<RunConfig> {
    if !raw.is_object() {
        return Err(Error::Validation(vec!["configuration must be a JSON object".into()]));
    }
    let reference = serde_json::to_value(RunConfig::default())?;
    let mut errors = Vec::new();
    let mut known = raw.clone();
    strip_unknown_keys(&mut known, &reference, "", &mut errors);
    let parsed = serde_json::from_value::<RunConfig>(known);
    match &parsed {
        Ok(config) => errors.extend(range_errors(config)),
        Err(e) => errors.push(e.to_string()),
    }
    match parsed {
        Ok(config) if errors.is_empty() => Ok(config),
        _ => Err(Error::Validation(errors)),
    }
}

pub fn parse_config(text: &str) -> Result<RunConfig> {
    let raw: Value = serde_json::from_str(text).map_err(|e| Error::Validation(vec![format!("malformed JSON: {e}")]))?;
    validate_config(&raw)
}

pub fn load_config(path: &Path) -> Result<RunConfig> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Validation(vec![format!("cannot read {}: {e}", path.display())]))?;
    parse_config(&text)
}
