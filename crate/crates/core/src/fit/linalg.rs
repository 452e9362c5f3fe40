//! Tiny dense solver for the 2x2 and 3x3 systems the fitter needs.

/// Solves `A x = b` in place via Gaussian elimination with partial
/// pivoting. `a` is row-major `n x n`. Returns `None` when the matrix is
/// numerically singular.
pub fn solve(n: usize, a: &mut [f64], b: &mut [f64]) -> Option<Vec<f64>> {
    debug_assert_eq!(a.len(), n * n);
    debug_assert_eq!(b.len(), n);

    for col in 0..n {
        let pivot_row = (col..n)
            .max_by(|&r1, &r2| {
                a[r1 * n + col].abs().partial_cmp(&a[r2 * n + col].abs()).unwrap()
            })
            .unwrap();
        let pivot = a[pivot_row * n + col];
        if !pivot.is_finite() || pivot.abs() < 1e-300 {
            return None;
        }
        if pivot_row != col {
            for k in 0..n {
                a.swap(col * n + k, pivot_row * n + k);
            }
            b.swap(col, pivot_row);
        }
        for row in col + 1..n {
            let factor = a[row * n + col] / a[col * n + col];
            if factor == 0.0 {
                continue;
            }
            for k in col..n {
                a[row * n + k] -= factor * a[col * n + k];
            }
            b[row] -= factor * b[col];
        }
    }

    let mut x = vec![0.0; n];
    for row in (0..n).rev() {
        let mut sum = b[row];
        for k in row + 1..n {
            sum -= a[row * n + k] * x[k];
        }
        x[row] = sum / a[row * n + row];
        if !x[row].is_finite() {
            return None;
        }
    }
    Some(x)
}

/// Least-squares solve of an overdetermined system via the normal
/// equations: rows are (coefficients, rhs).
pub fn least_squares(n: usize, rows: &[(Vec<f64>, f64)]) -> Option<Vec<f64>> {
    let mut ata = vec![0.0; n * n];
    let mut atb = vec![0.0; n];
    for (coeffs, rhs) in rows {
        debug_assert_eq!(coeffs.len(), n);
        for i in 0..n {
            for j in 0..n {
                ata[i * n + j] += coeffs[i] * coeffs[j];
            }
            atb[i] += coeffs[i] * rhs;
        }
    }
    solve(n, &mut ata, &mut atb)
}
