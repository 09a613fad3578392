//! Coupling operator entries ∫ V_0 φ_a φ_b over the rectangle.
//!
//! For a closed-form field sin(n x1) cosh(n x2) the integral factorizes as
//! (4 / (πL)) · A(n, a1, b1) · B(n, a2, b2, L); general fields go through a
//! tensor-product Gauss–Legendre rule that validates itself by panel doubling.

use std::collections::{BTreeMap, HashMap};
use std::f64::consts::PI;
use std::io::Write;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gate::PotentialField;
use crate::quadrature::QuadratureConfig;
use crate::spectral::{ModeIndex, Spectrum};

/// ∫₀^π sin(n x) sin(j x) sin(k x) dx.
///
/// Zero when n + j + k is even, otherwise
/// 4 j k n / ((j + k − n)(j − k + n)(−j + k + n)(j + k + n)).
pub fn coupling_x1_closed(n: u32, j1: u32, k1: u32) -> f64 {
    if (n + j1 + k1) % 2 == 0 {
        return 0.0;
    }
    let (n, j, k) = (n as i64, j1 as i64, k1 as i64);
    let num = 4 * j * k * n;
    let den = (j + k - n) * (j - k + n) * (-j + k + n) * (j + k + n);
    num as f64 / den as f64
}

/// ∫₀^L cosh(n x) sin(j π x / L) sin(k π x / L) dx.
pub fn coupling_x2_closed(n: u32, j2: u32, k2: u32, l: f64) -> f64 {
    let nf = n as f64;
    let (j, k) = (j2 as f64, k2 as f64);
    let sign = if (j2 + k2) % 2 == 0 { 1.0 } else { -1.0 };
    let nl2 = nf * nf * l * l;
    let pi2 = PI * PI;
    sign * 2.0 * l * l * nf * pi2 * j * k * (nf * l).sinh()
        / ((nl2 + pi2 * (j - k).powi(2)) * (nl2 + pi2 * (j + k).powi(2)))
}

/// Row-relative or absolute threshold below which an entry is a structural zero.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "value", rename_all = "snake_case")]
pub enum ZeroTol {
    Absolute(f64),
    /// Multiplies max(|row a|, |row b|) for entry (a, b).
    RowRelative(f64),
}

impl Default for ZeroTol {
    fn default() -> Self {
        ZeroTol::RowRelative(1e-12)
    }
}

/// Symmetric sparse coupling matrix over an ordered mode list.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CouplingMatrix {
    pub modes: Vec<ModeIndex>,
    /// Keys are list positions (a, b) with a ≤ b.
    #[serde(skip)]
    pub entries: BTreeMap<(usize, usize), f64>,
    pub zero_tol: ZeroTol,
    pub dropped: usize,
}

impl CouplingMatrix {
    pub fn get(&self, a: usize, b: usize) -> f64 {
        let key = if a <= b { (a, b) } else { (b, a) };
        self.entries.get(&key).copied().unwrap_or(0.0)
    }

    pub fn is_coupled(&self, a: usize, b: usize) -> bool {
        let key = if a <= b { (a, b) } else { (b, a) };
        self.entries.contains_key(&key)
    }

    /// Dense block over the first `size` modes.
    pub fn dense(&self, size: usize) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(size, size);
        for (&(a, b), &v) in self.entries.range((0, 0)..(size, 0)) {
            if b < size {
                m[(a, b)] = v;
                m[(b, a)] = v;
            }
        }
        m
    }

    /// Upper-triangle CSV `a1,a2,b1,b2,value`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "a1,a2,b1,b2,value")?;
        for (&(a, b), v) in &self.entries {
            let (ma, mb) = (self.modes[a], self.modes[b]);
            writeln!(w, "{},{},{},{},{:.16e}", ma.j1, ma.j2, mb.j1, mb.j2, v)?;
        }
        Ok(())
    }

    /// JSON document `{modes, zero_tol, dropped, entries: [[a, b, value], ...]}`.
    pub fn to_json(&self) -> serde_json::Value {
        let triplets: Vec<_> = self
            .entries
            .iter()
            .map(|(&(a, b), &v)| serde_json::json!([a, b, v]))
            .collect();
        serde_json::json!({
            "modes": self.modes,
            "zero_tol": self.zero_tol,
            "dropped": self.dropped,
            "entries": triplets,
        })
    }
}

/// Cached tensor-product rule for one field: node weights × field values.
struct TensorRule {
    x1: Vec<f64>,
    x2: Vec<f64>,
    /// weighted[p][r] = w1_p · w2_r · V(x1_p, x2_r), row-major in p.
    weighted: Vec<f64>,
    l: f64,
    field_scale: f64,
}

impl TensorRule {
    fn new(field: &PotentialField, q: QuadratureConfig, l: f64) -> Self {
        let (q1, q2) = match field {
            // align panels with the grid cells so each panel sees a smooth bilinear piece
            PotentialField::Grid(g) => {
                let nodes = q.nodes.min(4);
                let align = |cells: usize| QuadratureConfig {
                    panels: q.panels.div_ceil(cells).max(1) * cells,
                    nodes,
                };
                (align(g.grid.nx), align(g.grid.ny))
            }
            PotentialField::Spectral(_) => (q, q),
        };
        let (x1, w1) = q1.rule_on(0.0, PI);
        let (x2, w2) = q2.rule_on(0.0, l);
        let mut weighted = Vec::with_capacity(x1.len() * x2.len());
        let mut field_scale: f64 = 0.0;
        for &a in &x1 {
            for (&b, &wb) in x2.iter().zip(&w2) {
                let v = field.value(a, b);
                field_scale = field_scale.max(v.abs());
                weighted.push(wb * v);
            }
        }
        for (p, &wa) in w1.iter().enumerate() {
            weighted[p * x2.len()..(p + 1) * x2.len()]
                .iter_mut()
                .for_each(|v| *v *= wa);
        }
        Self {
            x1,
            x2,
            weighted,
            l,
            field_scale,
        }
    }

    /// Evaluates all requested pairs, sharing the x2 contraction per (a2, b2).
    fn entries(&self, pairs: &[(ModeIndex, ModeIndex)]) -> Vec<f64> {
        let nr = self.x2.len();
        let mut vertical: HashMap<(u32, u32), Vec<f64>> = HashMap::new();
        let norm = 4.0 / (PI * self.l);
        pairs
            .iter()
            .map(|&(a, b)| {
                let key = (a.j2.min(b.j2), a.j2.max(b.j2));
                let g = vertical.entry(key).or_insert_with(|| {
                    let t: Vec<f64> = self
                        .x2
                        .iter()
                        .map(|&y| {
                            (key.0 as f64 * PI * y / self.l).sin() * (key.1 as f64 * PI * y / self.l).sin()
                        })
                        .collect();
                    (0..self.x1.len())
                        .map(|p| {
                            self.weighted[p * nr..(p + 1) * nr]
                                .iter()
                                .zip(&t)
                                .map(|(v, t)| v * t)
                                .sum()
                        })
                        .collect()
                });
                let s: f64 = self
                    .x1
                    .iter()
                    .zip(g.iter())
                    .map(|(&x, &gv)| (a.j1 as f64 * x).sin() * (b.j1 as f64 * x).sin() * gv)
                    .sum();
                norm * s
            })
            .collect()
    }
}

fn self_checked(field: &PotentialField, pairs: &[(ModeIndex, ModeIndex)], q: QuadratureConfig, l: f64) -> Result<Vec<f64>> {
    let coarse = TensorRule::new(field, q, l);
    let fine = TensorRule::new(field, q.doubled(), l);
    let a = coarse.entries(pairs);
    let b = fine.entries(pairs);
    let scale = coarse.field_scale.max(fine.field_scale);
    for (x, y) in a.iter().zip(&b) {
        let tolerance = 1e-12 * x.abs().max(y.abs()).max(scale);
        let change = (x - y).abs();
        if change > tolerance {
            return Err(Error::Precision { change, tolerance });
        }
    }
    Ok(b)
}

/// (4 / (πL)) ∫∫ V sin(a1 x1) sin(a2 π x2 / L) sin(b1 x1) sin(b2 π x2 / L) dx by
/// tensor Gauss–Legendre, validated against the panel-doubled rule.
pub fn coupling_quadrature(
    field: &PotentialField,
    a: ModeIndex,
    b: ModeIndex,
    q: QuadratureConfig,
    l: f64,
) -> Result<f64> {
    Ok(self_checked(field, &[(a, b)], q, l)?[0])
}

/// [`coupling_quadrature`] for many pairs sharing one cached rule.
pub fn coupling_quadrature_batch(
    field: &PotentialField,
    pairs: &[(ModeIndex, ModeIndex)],
    q: QuadratureConfig,
    l: f64,
) -> Result<Vec<f64>> {
    self_checked(field, pairs, q, l)
}

/// α_j = ∫ V_0 φ_j², the first-order eigenvalue slope under ρ·V_0.
pub fn eigenvalue_slope(
    field: &PotentialField,
    index: ModeIndex,
    spectrum: &Spectrum,
    q: QuadratureConfig,
) -> Result<f64> {
    if spectrum.position(index).is_none() {
        return Err(Error::invalid(format!("mode {index} is not in the spectrum")));
    }
    coupling_quadrature(field, index, index, q, spectrum.l)
}

fn closed_form_entry(terms: &[(u32, f64)], a: ModeIndex, b: ModeIndex, l: f64) -> f64 {
    let norm = 4.0 / (PI * l);
    terms
        .iter()
        .map(|&(n, amp)| {
            let x1 = coupling_x1_closed(n, a.j1, b.j1);
            if x1 == 0.0 || amp == 0.0 {
                0.0
            } else {
                amp * x1 * coupling_x2_closed(n, a.j2, b.j2, l)
            }
        })
        .sum::<f64>()
        * norm
}

/// Evaluates every unordered pair among the first `truncation` modes and keeps
/// the entries above the zero threshold.
pub fn assemble_coupling_matrix(
    field: &PotentialField,
    spectrum: &Spectrum,
    truncation: usize,
    zero_tol: ZeroTol,
    q: QuadratureConfig,
) -> Result<CouplingMatrix> {
    if truncation == 0 || truncation > spectrum.len() {
        return Err(Error::invalid(format!(
            "truncation {truncation} exceeds spectrum size {}",
            spectrum.len()
        )));
    }
    let modes: Vec<ModeIndex> = spectrum.pairs[..truncation].iter().map(|p| p.index).collect();
    let mut keys = Vec::with_capacity(truncation * (truncation + 1) / 2);
    for a in 0..truncation {
        for b in a..truncation {
            keys.push((a, b));
        }
    }
    let values: Vec<f64> = match field {
        PotentialField::Spectral(s) => keys
            .iter()
            .map(|&(a, b)| closed_form_entry(&s.terms, modes[a], modes[b], spectrum.l))
            .collect(),
        PotentialField::Grid(_) => {
            let pairs: Vec<_> = keys.iter().map(|&(a, b)| (modes[a], modes[b])).collect();
            self_checked(field, &pairs, q, spectrum.l)?
        }
    };
    Ok(thresholded(modes, &keys, &values, zero_tol))
}

/// Drops entries at or below the zero threshold.
pub(crate) fn thresholded(
    modes: Vec<ModeIndex>,
    keys: &[(usize, usize)],
    values: &[f64],
    zero_tol: ZeroTol,
) -> CouplingMatrix {
    let mut row_max = vec![0.0_f64; modes.len()];
    for (&(a, b), &v) in keys.iter().zip(values) {
        row_max[a] = row_max[a].max(v.abs());
        row_max[b] = row_max[b].max(v.abs());
    }
    let mut entries = BTreeMap::new();
    let mut dropped = 0;
    for (&(a, b), &v) in keys.iter().zip(values) {
        let threshold = match zero_tol {
            ZeroTol::Absolute(t) => t,
            ZeroTol::RowRelative(r) => r * row_max[a].max(row_max[b]),
        };
        if v.abs() <= threshold {
            dropped += 1;
        } else {
            entries.insert((a, b), v);
        }
    }
    CouplingMatrix {
        modes,
        entries,
        zero_tol,
        dropped,
    }
}
