//! Central finite differences, used as the gradient oracle for every
//! hand-written backward pass in the crate.

use crate::numerics::Matrix;

/// Gradient of `f` at `x` by central differences with step `h`.
pub fn finite_diff_grad<F>(f: F, x: &Matrix, h: f64) -> Matrix
where
    F: Fn(&Matrix) -> f64,
{
    assert!(h > 0.0, "finite-difference step must be positive");
    let mut probe = x.clone();
    let mut grad = Matrix::zeros(x.rows(), x.cols());
    for i in 0..x.len() {
        let orig = x.as_slice()[i];
        probe.as_mut_slice()[i] = orig + h;
        let f_plus = f(&probe);
        probe.as_mut_slice()[i] = orig - h;
        let f_minus = f(&probe);
        probe.as_mut_slice()[i] = orig;
        grad.as_mut_slice()[i] = (f_plus - f_minus) / (2.0 * h);
    }
    grad
}

/// Largest entrywise error relative to the gradient scale:
/// `max_i |a_i - b_i| / max(max_i |b_i|, floor)`.
///
/// Normalizing by the whole tensor's scale rather than per entry keeps
/// near-zero entries (where central differences have only absolute accuracy)
/// from dominating the check.
pub fn relative_error(analytic: &Matrix, numeric: &Matrix, floor: f64) -> f64 {
    assert_eq!(analytic.shape(), numeric.shape());
    let scale = numeric.max_abs().max(analytic.max_abs()).max(floor);
    analytic
        .as_slice()
        .iter()
        .zip(numeric.as_slice())
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max)
        / scale
}
