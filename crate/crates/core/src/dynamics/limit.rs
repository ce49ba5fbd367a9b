//! Plain gradient descent on the latent basis alone, with the coefficients
//! and the encoder outputs held fixed.
//!
//! With a single code `c` and a single target `z`, the residual
//! `r = c W - z` obeys `r <- (1 - 2 eta |c|^2) r`, so descent converges to
//! `c W = z` whenever `eta |c|^2 < 1`.

use crate::error::{Result, VqError};
use crate::numerics::Matrix;
use crate::quantizers::{
    simvq_effective_codebook, simvq_w_grad, ste_quantize, Codebook, LatentBasis,
};

#[derive(Clone, Debug, PartialEq)]
pub struct LimitTrace {
    /// `sqrt(commit_codebook)` before each step and after the last one.
    pub residuals: Vec<f64>,
    /// First step count at which the residual fell below the tolerance.
    pub steps_to_tol: Option<usize>,
    pub basis: LatentBasis,
}

impl LimitTrace {
    pub fn final_residual(&self) -> f64 {
        self.residuals[self.residuals.len() - 1]
    }
}

/// Descends `W <- W - eta * d_basis` on `commit_codebook` for at most
/// `max_steps` steps, stopping early once the RMS residual
/// `sqrt(mean_b ||C[k_b] W - z_e[b]||^2)` drops below `tol`.
pub fn run_basis_limit(
    codebook: &Codebook,
    basis: LatentBasis,
    z_e: &Matrix,
    eta: f64,
    max_steps: usize,
    tol: f64,
) -> Result<LimitTrace> {
    if !(eta > 0.0) || !eta.is_finite() {
        return Err(VqError::InvalidArgument(format!(
            "eta must be > 0, got {eta}"
        )));
    }
    let mut basis = basis;
    let mut residuals = Vec::new();
    let mut steps_to_tol = None;
    for step in 0..=max_steps {
        let eff = simvq_effective_codebook(codebook, &basis)?;
        let r = ste_quantize(z_e, &eff, 1.0, 1.0)?;
        let residual = r.commit_codebook.sqrt();
        residuals.push(residual);
        if !residual.is_finite() {
            return Err(VqError::NonFinite {
                what: "basis residual".into(),
                epoch: 0,
                step,
            });
        }
        if residual < tol {
            steps_to_tol = Some(step);
            break;
        }
        if step == max_steps {
            break;
        }
        let g = simvq_w_grad(&r, z_e, codebook, &basis)?;
        let d_basis = g.d_basis.expect("basis gradient is always produced");
        basis.basis.axpy(-eta, &d_basis)?;
    }
    Ok(LimitTrace {
        residuals,
        steps_to_tol,
        basis,
    })
}
