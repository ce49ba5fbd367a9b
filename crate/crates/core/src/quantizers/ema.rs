//! Codebook maintained by exponential moving averages of cluster statistics
//! instead of gradient descent.

use crate::error::{Result, VqError};
use crate::numerics::Matrix;
use crate::quantizers::Codebook;

/// Smallest cluster mass used as a divisor.
pub const EMA_EPS: f64 = 1e-5;

/// A codebook together with its running cluster sizes `N_j` and sums `m_j`.
#[derive(Clone, Debug, PartialEq)]
pub struct EmaCodebook {
    pub codebook: Codebook,
    pub cluster_size: Vec<f64>,
    pub embed_sum: Matrix,
}

impl EmaCodebook {
    /// Starts with empty statistics (`N_j = 0`, `m_j = 0`). A code keeps its
    /// initial vector until it first receives mass.
    pub fn new(codebook: Codebook) -> Self {
        Self::with_prior(codebook, 0.0)
    }

    /// Starts with `N_j = prior` and `m_j = prior * q_j` for every code.
    pub fn with_prior(codebook: Codebook, prior: f64) -> Self {
        let cluster_size = vec![prior; codebook.size()];
        let embed_sum = codebook.coeffs.scale(prior);
        Self {
            codebook,
            cluster_size,
            embed_sum,
        }
    }

    /// One EMA step:
    ///
    /// ```text
    /// N_j <- decay N_j + (1 - decay) count_j
    /// m_j <- decay m_j + (1 - decay) sum_{b: k_b = j} z_e[b]
    /// q_j <- m_j / max(N_j, eps)
    /// ```
    ///
    /// Codes whose mass is still exactly zero are left untouched.
    pub fn update(&mut self, z_e: &Matrix, indices: &[usize], decay: f64) -> Result<()> {
        if !(0.0..1.0).contains(&decay) {
            return Err(VqError::InvalidArgument(format!(
                "EMA decay must lie in [0, 1), got {decay}"
            )));
        }
        if z_e.rows() != indices.len() || z_e.cols() != self.codebook.dim() {
            return Err(VqError::dims(
                "ema_update",
                format!(
                    "{} latents of dim {} for {} indices, code dim {}",
                    z_e.rows(),
                    z_e.cols(),
                    indices.len(),
                    self.codebook.dim()
                ),
            ));
        }
        let k = self.codebook.size();
        let mut counts = vec![0.0; k];
        let mut sums = Matrix::zeros(k, z_e.cols());
        for (b, &j) in indices.iter().enumerate() {
            if j >= k {
                return Err(VqError::InvalidArgument(format!(
                    "code index {j} out of range for {k} codes"
                )));
            }
            counts[j] += 1.0;
            for (s, &v) in sums.row_mut(j).iter_mut().zip(z_e.row(b)) {
                *s += v;
            }
        }
        let fresh = 1.0 - decay;
        #[allow(clippy::needless_range_loop)]
        for j in 0..k {
            self.cluster_size[j] = decay * self.cluster_size[j] + fresh * counts[j];
            for (m, &s) in self.embed_sum.row_mut(j).iter_mut().zip(sums.row(j)) {
                *m = decay * *m + fresh * s;
            }
            let n = self.cluster_size[j];
            if n == 0.0 {
                continue;
            }
            let denom = n.max(EMA_EPS);
            let (m_row, q_row) = (self.embed_sum.row(j), self.codebook.coeffs.row_mut(j));
            for (q, &m) in q_row.iter_mut().zip(m_row) {
                *q = m / denom;
            }
        }
        Ok(())
    }
}

/// Functional form of [`EmaCodebook::update`].
pub fn ema_update(
    state: &EmaCodebook,
    z_e: &Matrix,
    indices: &[usize],
    decay: f64,
) -> Result<EmaCodebook> {
    let mut next = state.clone();
    next.update(z_e, indices, decay)?;
    Ok(next)
}
