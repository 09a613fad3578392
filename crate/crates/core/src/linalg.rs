use nalgebra::DMatrix;

/// Eigen-decomposition of a real symmetric matrix with eigenvalues ascending.
///
/// Each eigenvector is signed so that its largest-magnitude component is
/// positive, which makes the output deterministic.
pub fn symmetric_eigen(m: DMatrix<f64>) -> (Vec<f64>, DMatrix<f64>) {
    let n = m.nrows();
    let eig = m.symmetric_eigen();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let mut vectors = DMatrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        let col = eig.eigenvectors.column(src);
        let pivot = col.iter().copied().fold(0.0_f64, |acc, v| {
            if v.abs() > acc.abs() {
                v
            } else {
                acc
            }
        });
        let sign = if pivot < 0.0 { -1.0 } else { 1.0 };
        vectors.set_column(dst, &(col * sign));
    }
    (values, vectors)
}

/// Eigenvalues of a real symmetric matrix by cyclic Jacobi rotations, left in
/// diagonal position order (not sorted).
///
/// Rotations only mix entries that share a row or column, so eigenvalues that
/// are small compared to the matrix norm keep their relative accuracy when
/// the off-diagonal part is small.
pub fn jacobi_eigenvalues(mut a: DMatrix<f64>) -> Vec<f64> {
    let n = a.nrows();
    assert_eq!(n, a.ncols());
    for sweep in 0..100 {
        let mut rotated = false;
        for p in 0..n {
            for q in p + 1..n {
                let apq = a[(p, q)];
                if apq == 0.0 {
                    continue;
                }
                let (app, aqq) = (a[(p, p)], a[(q, q)]);
                let g = 100.0 * apq.abs();
                if sweep > 3 && app.abs() + g == app.abs() && aqq.abs() + g == aqq.abs() {
                    a[(p, q)] = 0.0;
                    a[(q, p)] = 0.0;
                    continue;
                }
                rotated = true;
                let theta = (aqq - app) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                let tau = s / (1.0 + c);
                a[(p, p)] = app - t * apq;
                a[(q, q)] = aqq + t * apq;
                a[(p, q)] = 0.0;
                a[(q, p)] = 0.0;
                for r in 0..n {
                    if r == p || r == q {
                        continue;
                    }
                    let (arp, arq) = (a[(r, p)], a[(r, q)]);
                    let np = arp - s * (arq + tau * arp);
                    let nq = arq + s * (arp - tau * arq);
                    a[(r, p)] = np;
                    a[(p, r)] = np;
                    a[(r, q)] = nq;
                    a[(q, r)] = nq;
                }
            }
        }
        if !rotated {
            break;
        }
    }
    (0..n).map(|k| a[(k, k)]).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reconstructs_matrix() {
        let m = DMatrix::from_row_slice(3, 3, &[2.0, 1.0, 0.0, 1.0, 3.0, 0.5, 0.0, 0.5, 1.0]);
        let (vals, vecs) = symmetric_eigen(m.clone());
        assert!(vals.windows(2).all(|w| w[0] <= w[1]));
        let d = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vals));
        let r = &vecs * d * vecs.transpose();
        assert!((r - m).abs().max() < 1e-13);
        let id = vecs.transpose() * &vecs;
        assert!((id - DMatrix::identity(3, 3)).abs().max() < 1e-14);
    }

    #[test]
    fn jacobi_matches_dense_solver() {
        let m = DMatrix::from_fn(6, 6, |i, j| {
            if i == j {
                (i * i) as f64 + 1.0
            } else {
                0.1 / (1.0 + (i + j) as f64)
            }
        });
        let mut jac = jacobi_eigenvalues(m.clone());
        jac.sort_by(f64::total_cmp);
        let (dense, _) = symmetric_eigen(m);
        for (a, b) in jac.iter().zip(&dense) {
            assert!((a - b).abs() < 1e-13);
        }
    }

    #[test]
    fn jacobi_keeps_small_eigenvalues_accurate() {
        // small eigenvalue −e² / (500 + √(250000 + e²))
        let e = 1e-6;
        let m = DMatrix::from_row_slice(2, 2, &[0.0, e, e, 1e3]);
        let v = jacobi_eigenvalues(m);
        let reference = -e * e / (500.0 + (250_000.0_f64 + e * e).sqrt());
        assert!((v[0] - reference).abs() <= 1e-15 * reference.abs());
    }
}
