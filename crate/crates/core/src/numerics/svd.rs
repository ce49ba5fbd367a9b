//! Singular values by one-sided (Hestenes) Jacobi rotations, and the
//! numerical rank derived from them.

use crate::numerics::Matrix;

const MAX_SWEEPS: usize = 60;

/// Singular values of `m` in descending order.
///
/// Columns of a working copy are rotated pairwise until they are mutually
/// orthogonal; the singular values are then the column norms. Wide inputs are
/// transposed first so the working copy always has at least as many rows as
/// columns.
pub fn singular_values(m: &Matrix) -> Vec<f64> {
    let a = if m.rows() >= m.cols() {
        m.clone()
    } else {
        m.transpose()
    };
    let (rows, cols) = a.shape();
    if rows == 0 || cols == 0 {
        return Vec::new();
    }

    // column-major copy so each rotation touches contiguous memory
    let mut colv: Vec<Vec<f64>> = (0..cols)
        .map(|j| (0..rows).map(|i| a[(i, j)]).collect())
        .collect();

    for _ in 0..MAX_SWEEPS {
        let mut rotated = false;
        for p in 0..cols {
            for q in p + 1..cols {
                let (alpha, beta, gamma) = {
                    let (cp, cq) = (&colv[p], &colv[q]);
                    let mut alpha = 0.0;
                    let mut beta = 0.0;
                    let mut gamma = 0.0;
                    for i in 0..rows {
                        alpha += cp[i] * cp[i];
                        beta += cq[i] * cq[i];
                        gamma += cp[i] * cq[i];
                    }
                    (alpha, beta, gamma)
                };
                if alpha == 0.0 || beta == 0.0 {
                    continue;
                }
                if gamma.abs() <= f64::EPSILON * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                let (left, right) = colv.split_at_mut(q);
                let (cp, cq) = (&mut left[p], &mut right[0]);
                for i in 0..rows {
                    let x = cp[i];
                    let y = cq[i];
                    cp[i] = c * x - s * y;
                    cq[i] = s * x + c * y;
                }
            }
        }
        if !rotated {
            break;
        }
    }

    let mut sv: Vec<f64> = colv
        .iter()
        .map(|c| c.iter().map(|v| v * v).sum::<f64>().sqrt())
        .collect();
    sv.sort_by(|a, b| b.total_cmp(a));
    sv
}

/// Number of singular values strictly above `rel_tol` times the largest one.
/// The zero matrix has rank 0.
pub fn numerical_rank(m: &Matrix, rel_tol: f64) -> usize {
    let sv = singular_values(m);
    let Some(&largest) = sv.first() else {
        return 0;
    };
    if largest == 0.0 {
        return 0;
    }
    let cutoff = rel_tol * largest;
    sv.iter().filter(|&&s| s > cutoff).count()
}
