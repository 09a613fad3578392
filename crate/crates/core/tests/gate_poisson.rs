use std::f64::consts::PI;

use ndarray::Array2;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use gatedqdot::gate::{
    gate_convergence_sweep, harmonic_residual, solve_full_gate_fd, solve_full_gate_mode, solve_full_gate_series,
    solve_hartree, solve_partial_gate_fd, GateProfile, GateSegment, HartreeSolver,
};
use gatedqdot::grid::{Grid, GridSpec};

#[test]
fn fd_full_gate_matches_cosh_example() {
    let profile = GateProfile::FourierMode { n: 1 };
    let spec = GridSpec::square(256);
    let fd = solve_full_gate_fd(|x| profile.trace(x, 1.0), spec, 1.0).unwrap();
    let exact = solve_full_gate_mode(1, 1.0).unwrap();
    assert!((exact.value(PI / 2.0, 1.0) - 1.543080634815).abs() < 1e-12);
    assert!((fd.value_at(PI / 2.0, 1.0) - 1.543080634815).abs() < 1e-4);
    let worst = fd
        .values
        .indexed_iter()
        .map(|((i, j), v)| (v - exact.value(fd.grid.x1(i), fd.grid.x2(j))).abs())
        .fold(0.0, f64::max);
    assert!(worst < 1e-4, "max error {worst}");
}

#[test]
fn fd_two_mode_series_cross_check() {
    let coeffs = [1.0, 1.0];
    let series = solve_full_gate_series(&coeffs, 1.0).unwrap();
    assert!((series.value(PI / 2.0, 0.5) - 0.730762825846).abs() < 1e-11);
    let fd = solve_full_gate_fd(|x| x.sin() + (2.0 * x).sin(), GridSpec::square(256), 1.0).unwrap();
    assert!((fd.value_at(PI / 2.0, 0.5) - 0.730762825846).abs() < 1e-4);
}

#[test]
fn manufactured_solution_converges_at_second_order() {
    let exact = |x1: f64, x2: f64| x1.sin() * x2.cosh();
    let mut errs = Vec::new();
    for n in [32, 64, 128] {
        let fd = solve_full_gate_fd(|x| exact(x, 1.0), GridSpec::square(n), 1.0).unwrap();
        let e = fd
            .values
            .indexed_iter()
            .map(|((i, j), v)| (v - exact(fd.grid.x1(i), fd.grid.x2(j))).abs())
            .fold(0.0, f64::max);
        errs.push(e);
    }
    for w in errs.windows(2) {
        let ratio = w[0] / w[1];
        assert!((3.5..4.5).contains(&ratio), "ratio {ratio}, errors {errs:?}");
    }
}

#[test]
fn partial_gate_field_is_harmonic_with_exact_traces() {
    let seg = GateSegment::centered(0.6).unwrap();
    let profile = GateProfile::FourierMode { n: 2 };
    let f = solve_partial_gate_fd(seg, |x| profile.trace(x, 1.0), GridSpec::square(64), 1.0).unwrap();
    let (a, b) = f.info.as_ref().unwrap().snapped_segment.unwrap();
    let g = f.grid;
    let on_gate: Vec<bool> = (0..=g.nx).map(|i| g.x1(i) >= a - 1e-12 && g.x1(i) <= b + 1e-12).collect();
    assert!(harmonic_residual(&f, &on_gate) < 1e-8);
    for (i, &d) in on_gate.iter().enumerate() {
        if d {
            assert_eq!(f.values[[i, g.ny]], profile.trace(g.x1(i), 1.0));
        }
    }
    for j in 0..=g.ny {
        assert_eq!(f.values[[0, j]], 0.0);
        assert_eq!(f.values[[g.nx, j]], 0.0);
    }
    // maximum principle: extremes sit on the Dirichlet boundary
    let max = f.values.iter().copied().fold(f64::MIN, f64::max);
    let min = f.values.iter().copied().fold(f64::MAX, f64::min);
    let top: Vec<f64> = (0..=g.nx).map(|i| f.values[[i, g.ny]]).collect();
    let bmax = top.iter().copied().fold(0.0, f64::max);
    let bmin = top.iter().copied().fold(0.0, f64::min);
    assert!(max <= bmax + 1e-9 && min >= bmin - 1e-9);
}

#[test]
fn sweep_is_deterministic() {
    let a = gate_convergence_sweep(&[0.5], 2, 1.0, GridSpec::square(64)).unwrap();
    let b = gate_convergence_sweep(&[0.5], 2, 1.0, GridSpec::square(64)).unwrap();
    assert_eq!(a, b);
    assert!(gate_convergence_sweep(&[0.7, 0.5], 2, 1.0, GridSpec::square(64)).is_err());
}

#[test]
fn hartree_basis_example() {
    let grid = Grid::new(GridSpec::square(64), 1.0).unwrap();
    let rho = grid.from_fn(|x1, x2| x1.sin() * (PI * x2 / 2.0).cos());
    let w = solve_hartree(&rho, 1.0, &grid).unwrap();
    let expected = rho.mapv(|v| v / 3.4674011002723395);
    let err = (&w.values - &expected).iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    assert!(err < 1e-13);
}

#[test]
fn hartree_is_nonnegative_for_nonnegative_sources() {
    let grid = Grid::new(GridSpec::square(48), 1.0).unwrap();
    let solver = HartreeSolver::new(grid);
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..20 {
        // smooth nonnegative bumps
        let (c1, c2, s) = (rng.random_range(0.3..2.8), rng.random_range(0.0..1.0), rng.random_range(0.05..0.4));
        let rho = grid.from_fn(|x1, x2| (-((x1 - c1).powi(2) + (x2 - c2).powi(2)) / (s * s)).exp());
        let w = solver.solve(&rho, 1.0).unwrap();
        let min = w.iter().copied().fold(f64::MAX, f64::min);
        let max = w.iter().copied().fold(0.0, f64::max);
        assert!(min >= -1e-6 * max, "min {min}, max {max}");
    }
}

#[test]
fn hartree_energy_identity() {
    let grid = Grid::new(GridSpec::square(128), 1.0).unwrap();
    let psi = grid.from_fn(|x1, x2| 2.0 / PI.sqrt() * x1.sin() * (PI * x2).sin());
    let density = psi.mapv(|v| v * v);
    let alpha = 0.7;
    let w = solve_hartree(&density, alpha, &grid).unwrap();
    let grad = grid.gradient_norm(&w.values);
    let rhs = alpha * grid.integrate(&(&w.values * &density));
    assert!((grad * grad - rhs).abs() < 1e-3 * rhs, "{} vs {rhs}", grad * grad);
}

#[test]
fn hartree_rejects_mismatched_density() {
    let grid = Grid::new(GridSpec::square(16), 1.0).unwrap();
    let bad = Array2::zeros((5, 5));
    assert!(solve_hartree(&bad, 1.0, &grid).is_err());
    let neg = grid.from_fn(|_, _| -1.0);
    assert!(solve_hartree(&neg, 1.0, &grid).is_err());
}

proptest! {
    #[test]
    fn series_solve_is_linear(
        a in prop::collection::vec(-2.0f64..2.0, 1..6),
        b in prop::collection::vec(-2.0f64..2.0, 1..6),
        s in -3.0f64..3.0,
        t in -3.0f64..3.0,
        x1 in 0.0f64..PI,
        x2 in 0.0f64..1.3,
    ) {
        let n = a.len().max(b.len());
        let pad = |v: &[f64]| { let mut w = v.to_vec(); w.resize(n, 0.0); w };
        let (a, b) = (pad(&a), pad(&b));
        let mix: Vec<f64> = a.iter().zip(&b).map(|(x, y)| s * x + t * y).collect();
        let va = solve_full_gate_series(&a, 1.3).unwrap();
        let vb = solve_full_gate_series(&b, 1.3).unwrap();
        let vm = solve_full_gate_series(&mix, 1.3).unwrap();
        let lhs = vm.value(x1, x2);
        let rhs = s * va.value(x1, x2) + t * vb.value(x1, x2);
        prop_assert!((lhs - rhs).abs() <= 1e-13 * (1.0 + lhs.abs()));
    }
}
