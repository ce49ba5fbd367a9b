//! Codebook reparameterized through a latent basis: the effective codes are
//! the rows of `C W`.
//!
//! With `C` frozen, only `W` (`d x d`) receives gradient. Every selected code
//! contributes `C[k]^T (C[k] W - z_e)` to that gradient, so each update
//! rotates and stretches the whole span of the codebook rather than moving
//! the selected rows alone. `W = I` recovers plain VQ exactly.

use crate::error::{Result, VqError};
use crate::numerics::Matrix;
use crate::quantizers::vq::{check_batch, commit_encoder_grad, scatter_code_grads};
use crate::quantizers::{Codebook, LatentBasis, QuantizeResult, QuantizerGrads};

/// `C W`, the codebook actually searched at quantization time.
pub fn simvq_effective_codebook(codebook: &Codebook, basis: &LatentBasis) -> Result<Matrix> {
    if codebook.dim() != basis.dim() {
        return Err(VqError::dims(
            "simvq_effective_codebook",
            format!(
                "codes have {} dims, basis is {}x{0}",
                codebook.dim(),
                basis.dim()
            ),
        ));
    }
    codebook.coeffs.matmul(&basis.basis)
}

/// Gradients of `commit_codebook = mean_b ||sg(z_e[b]) - C[k_b] W||^2`.
///
/// `d_basis = (2/B) sum_b C[k_b]^T (C[k_b] W - z_e[b])`. When the codebook is
/// trainable, `d_coeffs` row `j` is `(2/B) sum_{b: k_b = j} (C[j] W - z_e[b]) W^T`;
/// when it is frozen (the default) no coefficient buffer is produced at all.
pub fn simvq_w_grad(
    result: &QuantizeResult,
    z_e: &Matrix,
    codebook: &Codebook,
    basis: &LatentBasis,
) -> Result<QuantizerGrads> {
    check_batch(result, z_e, basis.dim())?;
    if codebook.dim() != basis.dim() {
        return Err(VqError::dims(
            "simvq_w_grad",
            format!(
                "codes have {} dims, basis is {}",
                codebook.dim(),
                basis.dim()
            ),
        ));
    }
    let scale = 2.0 / z_e.rows() as f64;
    let d = basis.dim();

    let mut d_basis = Matrix::zeros(d, d);
    for (b, &k) in result.indices.iter().enumerate() {
        let c = codebook.coeffs.row(k);
        let q = result.z_q.row(b);
        let z = z_e.row(b);
        for (i, &ci) in c.iter().enumerate() {
            if ci == 0.0 {
                continue;
            }
            for ((g, &qv), &zv) in d_basis.row_mut(i).iter_mut().zip(q).zip(z) {
                *g += scale * ci * (qv - zv);
            }
        }
    }

    let d_coeffs = if codebook.frozen {
        None
    } else {
        // gradient w.r.t. the effective rows, pulled back through W^T
        let d_eff = scatter_code_grads(result, z_e, codebook.size());
        Some(d_eff.matmul_t(&basis.basis)?)
    };

    Ok(QuantizerGrads {
        d_coeffs,
        d_basis: Some(d_basis),
        d_z_e: commit_encoder_grad(z_e, &result.z_q)?,
    })
}
