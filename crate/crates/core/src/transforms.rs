//! Fast trigonometric transforms on the uniform node lattice.
//!
//! * [`SineTransform`]: f_i = Σ_{k=1}^{N-1} c_k sin(π k i / N) on interior nodes i = 1..N-1.
//! * [`QuarterWaveTransform`]: f_j = Σ_{k=0}^{N-1} a_k cos(π (k + ½) j / N) on nodes j = 0..N-1
//!   (even about j = 0, vanishing at j = N).

use std::sync::Arc;

use rustdct::{DctPlanner, Dst1, TransformType2And3};

#[derive(Clone)]
pub struct SineTransform {
    intervals: usize,
    plan: Arc<dyn Dst1<f64>>,
}

impl SineTransform {
    /// Transform for a lattice with `intervals` cells (N − 1 interior nodes).
    pub fn new(intervals: usize) -> Self {
        assert!(intervals >= 2);
        let mut planner = DctPlanner::new();
        Self {
            intervals,
            plan: planner.plan_dst1(intervals - 1),
        }
    }

    pub fn len(&self) -> usize {
        self.intervals - 1
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Interior samples → sine coefficients (in place).
    pub fn analyze(&self, buf: &mut [f64]) {
        self.plan.process_dst1(buf);
        let s = 2.0 / self.intervals as f64;
        buf.iter_mut().for_each(|v| *v *= s);
    }

    /// Sine coefficients → interior samples (in place).
    pub fn synthesize(&self, buf: &mut [f64]) {
        self.plan.process_dst1(buf);
    }
}

#[derive(Clone)]
pub struct QuarterWaveTransform {
    intervals: usize,
    dct2: Arc<dyn TransformType2And3<f64>>,
    dct3: Arc<dyn TransformType2And3<f64>>,
}

impl QuarterWaveTransform {
    pub fn new(intervals: usize) -> Self {
        assert!(intervals >= 1);
        let mut planner = DctPlanner::new();
        Self {
            intervals,
            dct2: planner.plan_dct2(intervals),
            dct3: planner.plan_dct3(intervals),
        }
    }

    pub fn len(&self) -> usize {
        self.intervals
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Samples on j = 0..N-1 → quarter-wave coefficients (in place).
    pub fn analyze(&self, buf: &mut [f64]) {
        self.dct3.process_dct3(buf);
        let s = 2.0 / self.intervals as f64;
        buf.iter_mut().for_each(|v| *v *= s);
    }

    /// Coefficients → samples on j = 0..N-1 (in place).
    pub fn synthesize(&self, buf: &mut [f64]) {
        self.dct2.process_dct2(buf);
    }
}
