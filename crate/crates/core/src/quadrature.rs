//! Composite Gauss–Legendre rules on intervals and rectangles.

use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// Nodes and weights of the `n`-point Gauss–Legendre rule on [-1, 1].
///
/// Roots of P_n are found by Newton iteration from the Chebyshev-like
/// initial guess cos(π(i - 1/4)/(n + 1/2)); weights are 2/((1-x²) P_n'(x)²).
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1, "Gauss-Legendre rule needs at least one node");
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(n, x);
        if d != 0.0 {
            dp = d;
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }
    (nodes, weights)
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Composite Gauss–Legendre configuration: `panels` equal sub-intervals per
/// axis, each carrying a `nodes`-point rule.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QuadratureConfig {
    pub panels: usize,
    pub nodes: usize,
}

impl Default for QuadratureConfig {
    fn default() -> Self {
        Self {
            panels: 8,
            nodes: 16,
        }
    }
}

impl QuadratureConfig {
    pub fn doubled(self) -> Self {
        Self {
            panels: self.panels * 2,
            nodes: self.nodes,
        }
    }

    /// Absolute nodes and weights of the composite rule on [a, b].
    pub fn rule_on(&self, a: f64, b: f64) -> (Vec<f64>, Vec<f64>) {
        let (xs, ws) = gauss_legendre(self.nodes);
        let h = (b - a) / self.panels as f64;
        let mut nodes = Vec::with_capacity(self.panels * self.nodes);
        let mut weights = Vec::with_capacity(self.panels * self.nodes);
        for p in 0..self.panels {
            let left = a + h * p as f64;
            let mid = left + 0.5 * h;
            for (x, w) in xs.iter().zip(&ws) {
                nodes.push(mid + 0.5 * h * x);
                weights.push(0.5 * h * w);
            }
        }
        (nodes, weights)
    }

    pub fn integrate<F: Fn(f64) -> f64>(&self, a: f64, b: f64, f: F) -> f64 {
        let (xs, ws) = self.rule_on(a, b);
        xs.iter().zip(&ws).map(|(&x, &w)| w * f(x)).sum()
    }
}
