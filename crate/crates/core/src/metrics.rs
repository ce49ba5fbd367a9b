//! Codebook-health and reconstruction metrics.

use std::fmt;

use crate::error::{Result, VqError};
use crate::numerics::{numerical_rank, Matrix};

/// Peak signal-to-noise ratio, with a distinguished value for an exact
/// reconstruction instead of `+inf`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Psnr {
    Db(f64),
    Perfect,
}

impl Psnr {
    pub fn db(self) -> Option<f64> {
        match self {
            Psnr::Db(v) => Some(v),
            Psnr::Perfect => None,
        }
    }
}

impl fmt::Display for Psnr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Psnr::Db(v) => write!(f, "{v}"),
            Psnr::Perfect => f.write_str("perfect"),
        }
    }
}

/// One evaluation record, written once per training epoch.
#[derive(Clone, Debug, PartialEq)]
pub struct MetricsRow {
    pub epoch: usize,
    pub utilization: f64,
    pub perplexity: f64,
    pub w_rank: usize,
    pub w_fro: f64,
    pub mse: f64,
    pub psnr: Psnr,
}

fn distinct(indices: &[usize], size: usize) -> usize {
    let mut seen = vec![false; size];
    let mut n = 0;
    for &i in indices {
        if !seen[i] {
            seen[i] = true;
            n += 1;
        }
    }
    n
}

fn check_indices(indices: &[usize], size: usize) -> Result<()> {
    if size == 0 {
        return Err(VqError::InvalidArgument(
            "codebook size must be >= 1".into(),
        ));
    }
    match indices.iter().find(|&&i| i >= size) {
        Some(i) => Err(VqError::InvalidArgument(format!(
            "code index {i} out of range for {size} codes"
        ))),
        None => Ok(()),
    }
}

/// Fraction of the `size` codes selected at least once. Empty input gives 0.
pub fn utilization(indices: &[usize], size: usize) -> Result<f64> {
    check_indices(indices, size)?;
    Ok(distinct(indices, size) as f64 / size as f64)
}

/// `exp(H)` of the empirical code distribution, natural log, `0 log 0 = 0`.
pub fn perplexity(indices: &[usize], size: usize) -> Result<f64> {
    check_indices(indices, size)?;
    if indices.is_empty() {
        return Err(VqError::InvalidArgument(
            "perplexity of an empty index list".into(),
        ));
    }
    let mut counts = vec![0usize; size];
    for &i in indices {
        counts[i] += 1;
    }
    let n = indices.len() as f64;
    let entropy: f64 = counts
        .iter()
        .filter(|&&c| c > 0)
        .map(|&c| {
            let p = c as f64 / n;
            -p * p.ln()
        })
        .sum();
    Ok(entropy.exp())
}

/// Mean of squared entrywise differences.
pub fn mse(x: &Matrix, x_hat: &Matrix) -> Result<f64> {
    if x.shape() != x_hat.shape() {
        return Err(VqError::dims(
            "mse",
            format!("{:?} vs {:?}", x.shape(), x_hat.shape()),
        ));
    }
    if x.is_empty() {
        return Err(VqError::InvalidArgument("mse of an empty matrix".into()));
    }
    Ok(x.sub(x_hat)?.sum_squares() / x.len() as f64)
}

pub fn psnr_from_mse(mse: f64, peak: f64) -> Psnr {
    if mse == 0.0 {
        Psnr::Perfect
    } else {
        Psnr::Db(10.0 * (peak * peak / mse).log10())
    }
}

/// `10 log10(peak^2 / MSE)`.
pub fn psnr(x: &Matrix, x_hat: &Matrix, peak: f64) -> Result<Psnr> {
    if !(peak > 0.0) {
        return Err(VqError::InvalidArgument(format!(
            "PSNR peak must be > 0, got {peak}"
        )));
    }
    Ok(psnr_from_mse(mse(x, x_hat)?, peak))
}

/// Dynamic range (max - min) over all entries.
pub fn dynamic_range(x: &Matrix) -> f64 {
    let (lo, hi) = x
        .as_slice()
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
            (lo.min(v), hi.max(v))
        });
    if lo > hi {
        0.0
    } else {
        hi - lo
    }
}

/// `(numerical rank, Frobenius norm)` of a square basis.
pub fn basis_diagnostics(w: &Matrix, rel_tol: f64) -> Result<(usize, f64)> {
    if w.rows() != w.cols() {
        return Err(VqError::dims(
            "basis_diagnostics",
            format!("basis must be square, got {}x{}", w.rows(), w.cols()),
        ));
    }
    Ok((numerical_rank(w, rel_tol), w.frobenius_norm()))
}
