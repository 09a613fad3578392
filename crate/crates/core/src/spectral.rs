//! Laplace–Dirichlet spectrum of the rectangle (0, π) × (0, L).
//!
//! Eigenpairs are indexed by [`ModeIndex`] `(j1, j2)`:
//!
//! ```text
//! λ = j1² + j2² π² / L²,    φ(x) = 2/√(πL) · sin(j1 x1) · sin(j2 π x2 / L)
//! ```
//!
//! Every verdict produced here (simplicity, weak non-resonance) holds only for
//! the finite list of modes it was computed on and at the stated tolerance.

use std::cmp::Ordering;
use std::collections::BTreeSet;
use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::coupling::{thresholded, CouplingMatrix};
use crate::error::{Error, Result};
use crate::linalg::{jacobi_eigenvalues, symmetric_eigen};
use crate::quadrature::QuadratureConfig;

/// Double index `(j1, j2)` of a rectangle eigenmode, both ≥ 1.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(into = "(u32, u32)", try_from = "(u32, u32)")]
pub struct ModeIndex {
    pub j1: u32,
    pub j2: u32,
}

impl ModeIndex {
    pub fn new(j1: u32, j2: u32) -> Result<Self> {
        if j1 == 0 || j2 == 0 {
            return Err(Error::invalid(format!(
                "mode indices must be >= 1, got ({j1},{j2})"
            )));
        }
        Ok(Self { j1, j2 })
    }

    pub fn eigenvalue(&self, l: f64) -> f64 {
        let j1 = self.j1 as f64;
        let j2 = self.j2 as f64;
        j1 * j1 + j2 * j2 * (PI / l).powi(2)
    }
}

impl From<ModeIndex> for (u32, u32) {
    fn from(m: ModeIndex) -> Self {
        (m.j1, m.j2)
    }
}

impl TryFrom<(u32, u32)> for ModeIndex {
    type Error = Error;
    fn try_from((j1, j2): (u32, u32)) -> Result<Self> {
        ModeIndex::new(j1, j2)
    }
}

impl fmt::Display for ModeIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{})", self.j1, self.j2)
    }
}

/// Shorthand used throughout tests and examples.
pub fn mode(j1: u32, j2: u32) -> ModeIndex {
    ModeIndex::new(j1, j2).expect("mode indices must be positive")
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EigenPair {
    pub index: ModeIndex,
    pub lambda: f64,
    /// L²-normalization factor 2/√(πL).
    pub norm_const: f64,
}

impl EigenPair {
    pub fn eigenfunction(&self, x1: f64, x2: f64, l: f64) -> f64 {
        self.norm_const * (self.index.j1 as f64 * x1).sin() * (self.index.j2 as f64 * PI * x2 / l).sin()
    }
}

/// The `count` lowest eigenpairs, ordered by λ with lexicographic `(j1, j2)` tie-break.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Spectrum {
    pub l: f64,
    pub pairs: Vec<EigenPair>,
}

fn spectral_order(a: &EigenPair, b: &EigenPair) -> Ordering {
    a.lambda
        .total_cmp(&b.lambda)
        .then_with(|| a.index.cmp(&b.index))
}

/// Enumerates the `count` smallest Laplace–Dirichlet eigenpairs of (0, π) × (0, L).
pub fn enumerate_modes(l: f64, count: usize) -> Result<Spectrum> {
    if !(l > 0.0) || !l.is_finite() {
        return Err(Error::invalid(format!("rectangle height L must be positive, got {l}")));
    }
    if count == 0 {
        return Err(Error::invalid("mode count must be >= 1"));
    }
    let ratio = PI / l;
    let count_below = |cut: f64| -> usize {
        let mut n = 0usize;
        let mut j1 = 1u64;
        while (j1 * j1) as f64 + ratio * ratio <= cut {
            let rest = cut - (j1 * j1) as f64;
            n += (rest.sqrt() / ratio).floor() as usize;
            j1 += 1;
        }
        n
    };
    // grow the cutoff until it holds at least `count` modes
    let mut cut = 1.0 + ratio * ratio;
    while count_below(cut) < count {
        cut *= 2.0;
    }
    // candidate box from the cutoff
    let bound = (cut.sqrt() * f64::max(1.0, l / PI)).ceil() as u32 + 1;
    let mut candidates = Vec::new();
    for j1 in 1..=bound {
        for j2 in 1..=bound {
            let index = ModeIndex { j1, j2 };
            let lambda = index.eigenvalue(l);
            if lambda <= cut {
                candidates.push(EigenPair {
                    index,
                    lambda,
                    norm_const: 2.0 / (PI * l).sqrt(),
                });
            }
        }
    }
    candidates.sort_by(spectral_order);
    assert!(candidates.len() >= count, "candidate box missed modes below the cutoff");
    let excluded = candidates.get(count).copied();
    candidates.truncate(count);
    if let (Some(last), Some(next)) = (candidates.last(), excluded) {
        assert!(spectral_order(last, &next) == Ordering::Less);
    }
    Ok(Spectrum {
        l,
        pairs: candidates,
    })
}

impl Spectrum {
    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn modes(&self) -> Vec<ModeIndex> {
        self.pairs.iter().map(|p| p.index).collect()
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        self.pairs.iter().map(|p| p.lambda).collect()
    }

    pub fn position(&self, index: ModeIndex) -> Option<usize> {
        self.pairs.iter().position(|p| p.index == index)
    }

    pub fn truncated(&self, count: usize) -> Spectrum {
        Spectrum {
            l: self.l,
            pairs: self.pairs[..count.min(self.pairs.len())].to_vec(),
        }
    }

    /// Spectral diameter λ_max − λ_min of the listed modes.
    pub fn diameter(&self) -> f64 {
        match (self.pairs.first(), self.pairs.last()) {
            (Some(a), Some(b)) => b.lambda - a.lambda,
            _ => 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimplicityReport {
    pub truncation: usize,
    pub tol: f64,
    pub collisions: Vec<(ModeIndex, ModeIndex)>,
}

impl SimplicityReport {
    pub fn is_simple(&self) -> bool {
        self.collisions.is_empty()
    }
}

/// Lists every pair of listed modes whose eigenvalues differ by at most `tol`.
pub fn check_simplicity(spectrum: &Spectrum, tol: f64) -> SimplicityReport {
    let pairs = &spectrum.pairs;
    let mut collisions = Vec::new();
    for a in 0..pairs.len() {
        for b in a + 1..pairs.len() {
            if pairs[b].lambda - pairs[a].lambda > tol {
                break;
            }
            collisions.push((pairs[a].index, pairs[b].index));
        }
    }
    SimplicityReport {
        truncation: pairs.len(),
        tol,
        collisions,
    }
}

/// A collision λ_{s.0} − λ_{s.1} ≈ λ_{t.0} − λ_{t.1} between two ordered level pairs.
///
/// Pairs are stored with the higher level first so that both differences are
/// nonnegative; a near-degenerate pair `s` is reported against the diagonal
/// pair `(s.1, s.1)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Resonance<T> {
    pub s: (T, T),
    pub t: (T, T),
    pub gap: f64,
}

impl Resonance<usize> {
    pub fn to_modes(&self, modes: &[ModeIndex]) -> Resonance<ModeIndex> {
        Resonance {
            s: (modes[self.s.0], modes[self.s.1]),
            t: (modes[self.t.0], modes[self.t.1]),
            gap: self.gap,
        }
    }
}

/// All collisions among the pairwise gaps of a sorted eigenvalue list.
///
/// Each collision is reported once: orientation reversal `(s̄, t̄)` and the
/// swap `s ↔ t` are folded into a single canonical entry with `s < t`.
pub fn check_weak_nonresonance(eigenvalues: &[f64], tol: f64) -> Vec<Resonance<usize>> {
    let n = eigenvalues.len();
    // (difference, hi, lo) with hi > lo in list position
    let mut diffs = Vec::with_capacity(n * n.saturating_sub(1) / 2);
    for hi in 0..n {
        for lo in 0..hi {
            diffs.push((eigenvalues[hi] - eigenvalues[lo], hi, lo));
        }
    }
    diffs.sort_by(|a, b| a.0.total_cmp(&b.0).then((a.1, a.2).cmp(&(b.1, b.2))));

    let mut found = BTreeSet::new();
    let mut out = Vec::new();
    for (i, &(d, hi, lo)) in diffs.iter().enumerate() {
        if d.abs() <= tol {
            out.push(Resonance {
                s: (hi, lo),
                t: (lo, lo),
                gap: d.abs(),
            });
        }
        for &(d2, hi2, lo2) in &diffs[i + 1..] {
            if d2 - d > tol {
                break;
            }
            let (s, t) = if (hi, lo) < (hi2, lo2) {
                ((hi, lo), (hi2, lo2))
            } else {
                ((hi2, lo2), (hi, lo))
            };
            if found.insert((s, t)) {
                out.push(Resonance {
                    s,
                    t,
                    gap: (d2 - d).abs(),
                });
            }
        }
    }
    out.sort_by(|a, b| (a.s, a.t).cmp(&(b.s, b.t)));
    out
}

/// Spectrum of the Galerkin matrix diag(λ) + ρ·B on the lowest `truncation` modes.
#[derive(Debug, Clone)]
pub struct ShiftedSpectrum {
    pub rho: f64,
    pub modes: Vec<ModeIndex>,
    pub eigenvalues: Vec<f64>,
    /// Column `k` holds the k-th shifted eigenvector in the unshifted basis.
    pub eigenvectors: DMatrix<f64>,
    pub truncation: usize,
}

impl ShiftedSpectrum {
    /// Position of the shifted eigenvector with the largest overlap on `index`.
    pub fn level_of(&self, index: ModeIndex) -> Option<usize> {
        let row = self.modes.iter().position(|&m| m == index)?;
        (0..self.truncation).max_by(|&a, &b| {
            self.eigenvectors[(row, a)]
                .abs()
                .total_cmp(&self.eigenvectors[(row, b)].abs())
        })
    }

    /// Mode with the largest component in each shifted eigenvector.
    pub fn dominant_modes(&self) -> Vec<ModeIndex> {
        (0..self.truncation)
            .map(|k| {
                let row = (0..self.truncation)
                    .max_by(|&a, &b| {
                        self.eigenvectors[(a, k)]
                            .abs()
                            .total_cmp(&self.eigenvectors[(b, k)].abs())
                    })
                    .expect("nonempty truncation");
                self.modes[row]
            })
            .collect()
    }

    /// Coupling operator in the shifted eigenbasis, levels labeled by their dominant mode.
    pub fn coupling_matrix(&self, coupling: &CouplingMatrix) -> CouplingMatrix {
        let b = coupling.dense(self.truncation);
        let r = self.eigenvectors.transpose() * b * &self.eigenvectors;
        let mut keys = Vec::new();
        let mut values = Vec::new();
        for a in 0..self.truncation {
            for c in a..self.truncation {
                keys.push((a, c));
                values.push(0.5 * (r[(a, c)] + r[(c, a)]));
            }
        }
        thresholded(self.dominant_modes(), &keys, &values, coupling.zero_tol)
    }
}

fn check_galerkin_inputs(spectrum: &Spectrum, coupling: &CouplingMatrix, truncation: usize) -> Result<()> {
    if truncation == 0 || truncation > spectrum.len() || truncation > coupling.modes.len() {
        return Err(Error::invalid(format!(
            "truncation {truncation} exceeds available data (spectrum {}, coupling {})",
            spectrum.len(),
            coupling.modes.len()
        )));
    }
    for k in 0..truncation {
        if spectrum.pairs[k].index != coupling.modes[k] {
            return Err(Error::invalid(format!(
                "coupling mode order differs from spectrum at position {k}"
            )));
        }
    }
    Ok(())
}

/// Diagonalizes diag(λ) + ρ·coupling on the first `truncation` ordered modes.
///
/// Negative ρ is accepted: the operator is defined for every real shift and
/// central differences at ρ = 0 need it.
pub fn shifted_spectrum(
    spectrum: &Spectrum,
    coupling: &CouplingMatrix,
    rho: f64,
    truncation: usize,
) -> Result<ShiftedSpectrum> {
    if !rho.is_finite() {
        return Err(Error::invalid("rho must be finite"));
    }
    check_galerkin_inputs(spectrum, coupling, truncation)?;
    let mut h = coupling.dense(truncation) * rho;
    for k in 0..truncation {
        h[(k, k)] += spectrum.pairs[k].lambda;
    }
    let (eigenvalues, eigenvectors) = symmetric_eigen(h);
    Ok(ShiftedSpectrum {
        rho,
        modes: coupling.modes[..truncation].to_vec(),
        eigenvalues,
        eigenvectors,
        truncation,
    })
}

/// λ_k(ρ) − λ_k for the level continuing mode position `k`, computed by Jacobi
/// rotations on diag(λ − λ_k) + ρ·coupling so the small offset keeps its
/// relative accuracy.
pub fn eigenvalue_shift(
    spectrum: &Spectrum,
    coupling: &CouplingMatrix,
    rho: f64,
    truncation: usize,
    k: usize,
) -> Result<f64> {
    if k >= truncation {
        return Err(Error::invalid(format!("position {k} lies outside truncation {truncation}")));
    }
    check_galerkin_inputs(spectrum, coupling, truncation)?;
    let mut h = coupling.dense(truncation) * rho;
    let base = spectrum.pairs[k].lambda;
    for i in 0..truncation {
        h[(i, i)] += spectrum.pairs[i].lambda - base;
    }
    Ok(jacobi_eigenvalues(h)[k])
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Wall {
    Left,
    Right,
    Bottom,
    Top,
}

/// Normal displacement speed X·ν along a wall, as a function of arclength.
#[derive(Clone)]
pub enum DisplacementProfile {
    Uniform(f64),
    Function(Arc<dyn Fn(f64) -> f64 + Send + Sync>),
}

impl fmt::Debug for DisplacementProfile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Uniform(v) => write!(f, "Uniform({v})"),
            Self::Function(_) => f.write_str("Function(..)"),
        }
    }
}

impl DisplacementProfile {
    fn at(&self, s: f64) -> f64 {
        match self {
            Self::Uniform(v) => *v,
            Self::Function(g) => g(s),
        }
    }
}

/// Outward displacement of one wall of the rectangle. Arclength runs along
/// x2 on the vertical walls and along x1 on the horizontal ones.
#[derive(Debug, Clone)]
pub struct BoundaryDisplacement {
    pub wall: Wall,
    pub profile: DisplacementProfile,
}

impl BoundaryDisplacement {
    pub fn uniform(wall: Wall) -> Self {
        Self {
            wall,
            profile: DisplacementProfile::Uniform(1.0),
        }
    }
}

/// Outward normal derivative of the normalized eigenfunction on `wall` at arclength `s`.
pub fn normal_derivative(pair: &EigenPair, l: f64, wall: Wall, s: f64) -> f64 {
    let j1 = pair.index.j1 as f64;
    let k2 = pair.index.j2 as f64 * PI / l;
    let c = pair.norm_const;
    match wall {
        Wall::Left => -c * j1 * (k2 * s).sin(),
        Wall::Right => c * j1 * (j1 * PI).cos() * (k2 * s).sin(),
        Wall::Bottom => -c * k2 * (j1 * s).sin(),
        Wall::Top => c * k2 * (k2 * l).cos() * (j1 * s).sin(),
    }
}

/// Hadamard first variation dλ/dt = −∫_wall (∂φ/∂ν)² (X·ν) ds of a simple eigenvalue.
pub fn eigenvalue_shape_derivative(
    spectrum: &Spectrum,
    index: ModeIndex,
    disp: &BoundaryDisplacement,
) -> Result<f64> {
    let pos = spectrum
        .position(index)
        .ok_or_else(|| Error::invalid(format!("mode {index} is not in the spectrum")))?;
    let pair = spectrum.pairs[pos];
    let tol = 1e-10 * pair.lambda.max(1.0);
    if let Some(other) = spectrum
        .pairs
        .iter()
        .find(|p| p.index != index && (p.lambda - pair.lambda).abs() <= tol)
    {
        return Err(Error::Degenerate {
            mode: index.to_string(),
            other: other.index.to_string(),
        });
    }
    let l = spectrum.l;
    let length = match disp.wall {
        Wall::Left | Wall::Right => l,
        Wall::Bottom | Wall::Top => PI,
    };
    // integrand is a trig polynomial times the profile; 8x16 GL is exact to rounding
    // for the uniform case up to very high mode numbers
    let q = QuadratureConfig {
        panels: 8 + (pair.index.j1.max(pair.index.j2) as usize) / 4,
        nodes: 16,
    };
    let integral = q.integrate(0.0, length, |s| {
        let dn = normal_derivative(&pair, l, disp.wall, s);
        dn * dn * disp.profile.at(s)
    });
    Ok(-integral)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn first_three_modes_for_unit_height() {
        let s = enumerate_modes(1.0, 3).unwrap();
        let idx: Vec<_> = s.modes();
        assert_eq!(idx, vec![mode(1, 1), mode(2, 1), mode(3, 1)]);
        let pi2 = PI * PI;
        for (p, j1) in s.pairs.iter().zip([1.0, 2.0, 3.0]) {
            assert_eq!(p.lambda, j1 * j1 + pi2);
        }
        assert!((s.pairs[0].lambda - 10.8696).abs() < 1e-4);
        assert!((s.pairs[2].lambda - 18.8696).abs() < 1e-4);
    }

    #[test]
    fn square_degeneracy_is_ordered_lexicographically() {
        let s = enumerate_modes(PI, 3).unwrap();
        assert_eq!(s.modes(), vec![mode(1, 1), mode(1, 2), mode(2, 1)]);
        assert_eq!(s.pairs[0].lambda, 2.0);
        assert_eq!(s.pairs[1].lambda, 5.0);
        assert_eq!(s.pairs[2].lambda, 5.0);
    }

    #[test]
    fn rejects_bad_arguments() {
        assert!(matches!(enumerate_modes(0.0, 3), Err(Error::InvalidArgument(_))));
        assert!(matches!(enumerate_modes(-1.0, 3), Err(Error::InvalidArgument(_))));
        assert!(matches!(enumerate_modes(1.0, 0), Err(Error::InvalidArgument(_))));
        assert!(ModeIndex::new(0, 1).is_err());
    }

    #[test]
    fn enumeration_matches_brute_force_box() {
        for &l in &[0.3, 1.0, 2.7, 6.0] {
            let s = enumerate_modes(l, 100).unwrap();
            let mut all = Vec::new();
            for j1 in 1..=60 {
                for j2 in 1..=60 {
                    let m = mode(j1, j2);
                    all.push((m.eigenvalue(l), m));
                }
            }
            all.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
            let expect: Vec<_> = all[..100].iter().map(|p| p.1).collect();
            assert_eq!(s.modes(), expect, "L = {l}");
        }
    }

    #[test]
    fn simplicity_scan() {
        let s = enumerate_modes(1.0, 50).unwrap();
        assert!(check_simplicity(&s, 1e-9).is_simple());
        let sq = enumerate_modes(PI, 10).unwrap();
        let r = check_simplicity(&sq, 1e-9);
        assert!(r.collisions.contains(&(mode(1, 2), mode(2, 1))));
        let one = enumerate_modes(1.0, 1).unwrap();
        assert!(check_simplicity(&one, 1.0).is_simple());
    }

    #[test]
    fn weak_nonresonance_small_lists() {
        assert!(check_weak_nonresonance(&[1.0, 2.0, 4.0], 1e-12).is_empty());
        let r = check_weak_nonresonance(&[1.0, 2.0, 3.0], 1e-12);
        assert_eq!(r.len(), 1);
        assert_eq!(r[0].s, (1, 0));
        assert_eq!(r[0].t, (2, 1));
        assert_eq!(r[0].gap, 0.0);
    }

    #[test]
    fn weak_nonresonance_reports_integer_identity() {
        let s = enumerate_modes(1.0, 100).unwrap();
        let modes = s.modes();
        let r: Vec<_> = check_weak_nonresonance(&s.eigenvalues(), 1e-9)
            .iter()
            .map(|r| r.to_modes(&modes))
            .collect();
        let hit = r.iter().any(|v| {
            let pairs = [v.s, v.t];
            pairs.contains(&(mode(8, 1), mode(7, 1))) && pairs.contains(&(mode(4, 1), mode(1, 1)))
        });
        assert!(hit);
    }

    #[test]
    fn degenerate_mode_has_no_shape_derivative() {
        let sq = enumerate_modes(PI, 10).unwrap();
        let e = eigenvalue_shape_derivative(&sq, mode(1, 2), &BoundaryDisplacement::uniform(Wall::Left));
        assert!(matches!(e, Err(Error::Degenerate { .. })));
    }

    #[test]
    fn zero_profile_gives_zero_derivative() {
        let s = enumerate_modes(1.0, 10).unwrap();
        let d = BoundaryDisplacement {
            wall: Wall::Left,
            profile: DisplacementProfile::Uniform(0.0),
        };
        assert_eq!(eigenvalue_shape_derivative(&s, mode(1, 1), &d).unwrap(), 0.0);
    }

    #[test]
    fn uniform_left_wall_value() {
        let s = enumerate_modes(1.0, 40).unwrap();
        let d = BoundaryDisplacement::uniform(Wall::Left);
        let v = eigenvalue_shape_derivative(&s, mode(1, 1), &d).unwrap();
        assert!((v + 2.0 / PI).abs() < 1e-12);
        let v = eigenvalue_shape_derivative(&s, mode(3, 2), &d).unwrap();
        assert!((v + 18.0 / PI).abs() < 1e-12);
    }
}
