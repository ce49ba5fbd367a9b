//! Nearest-code vector quantization with a straight-through estimator.

use crate::error::{Result, VqError};
use crate::numerics::{squared_distance, Matrix};
use crate::quantizers::Codebook;

/// Output of a quantization forward pass.
#[derive(Clone, Debug, PartialEq)]
pub struct QuantizeResult {
    /// Selected code per batch row.
    pub indices: Vec<usize>,
    /// Selected code rows (`B x d`), copied bit for bit from the codebook.
    pub z_q: Matrix,
    /// `mean_b ||z_e[b] - sg(q[b])||^2`
    pub commit_encoder: f64,
    /// `mean_b ||sg(z_e[b]) - q[b]||^2`
    pub commit_codebook: f64,
    pub beta_enc: f64,
    pub beta_code: f64,
}

impl QuantizeResult {
    pub fn batch_size(&self) -> usize {
        self.indices.len()
    }

    /// `beta_enc * commit_encoder + beta_code * commit_codebook`
    pub fn weighted_commitment(&self) -> f64 {
        self.beta_enc * self.commit_encoder + self.beta_code * self.commit_codebook
    }

    /// Gradient reaching `z_e`: the downstream gradient on `z_q` copied
    /// through unchanged, plus the encoder-side commitment pull
    /// `2 * beta_enc * (z_e - q) / B`.
    pub fn backward_z_e(&self, z_e: &Matrix, d_zq: &Matrix) -> Result<Matrix> {
        let mut grad = d_zq.clone();
        let pull = commit_encoder_grad(z_e, &self.z_q)?;
        grad.axpy(self.beta_enc, &pull)?;
        Ok(grad)
    }
}

/// Gradients of the commitment terms with respect to quantizer parameters.
///
/// `d_coeffs` and `d_basis` are derivatives of the unweighted
/// `commit_codebook` term; `d_z_e` is the derivative of the unweighted
/// `commit_encoder` term. Callers scale by the betas.
#[derive(Clone, Debug, PartialEq)]
pub struct QuantizerGrads {
    pub d_coeffs: Option<Matrix>,
    pub d_basis: Option<Matrix>,
    pub d_z_e: Matrix,
}

impl QuantizerGrads {
    /// Number of entries in the trainable codebook-path gradient buffers.
    pub fn trainable_entries(&self) -> usize {
        self.d_coeffs.as_ref().map_or(0, Matrix::len) + self.d_basis.as_ref().map_or(0, Matrix::len)
    }
}

/// Index of the row of `codebook` closest to `z` in squared Euclidean
/// distance. Ties go to the smallest index.
pub fn nearest_code(z: &[f64], codebook: &Matrix) -> usize {
    debug_assert_eq!(z.len(), codebook.cols());
    let mut best = 0;
    let mut best_dist = f64::INFINITY;
    for (j, row) in codebook.row_iter().enumerate() {
        let d = squared_distance(z, row);
        if d < best_dist {
            best = j;
            best_dist = d;
        }
    }
    best
}

/// Nearest code for every row of `z`.
pub fn assign(z: &Matrix, codebook: &Matrix) -> Result<Vec<usize>> {
    if z.cols() != codebook.cols() {
        return Err(VqError::dims(
            "assign",
            format!(
                "latents have {} dims, codebook {}",
                z.cols(),
                codebook.cols()
            ),
        ));
    }
    if codebook.rows() == 0 {
        return Err(VqError::InvalidArgument("empty codebook".into()));
    }
    Ok(z.row_iter().map(|r| nearest_code(r, codebook)).collect())
}

/// The `K x K` matrix `delta_k^T delta_k`: zero except a one at `(k, k)`.
pub fn selection_matrix(k: usize, size: usize) -> Result<Matrix> {
    if k >= size {
        return Err(VqError::InvalidArgument(format!(
            "code index {k} out of range for {size} codes"
        )));
    }
    let mut m = Matrix::zeros(size, size);
    m[(k, k)] = 1.0;
    Ok(m)
}

/// Quantizes each row of `z_e` to its nearest row of `effective_codebook`.
pub fn ste_quantize(
    z_e: &Matrix,
    effective_codebook: &Matrix,
    beta_enc: f64,
    beta_code: f64,
) -> Result<QuantizeResult> {
    if z_e.rows() == 0 {
        return Err(VqError::EmptyBatch);
    }
    if beta_enc < 0.0 || beta_code < 0.0 {
        return Err(VqError::InvalidArgument(format!(
            "commitment coefficients must be >= 0, got ({beta_enc}, {beta_code})"
        )));
    }
    let indices = assign(z_e, effective_codebook)?;
    let z_q = effective_codebook.select_rows(&indices);
    let commit = mean_squared_row_distance(z_e, &z_q);
    Ok(QuantizeResult {
        indices,
        z_q,
        commit_encoder: commit,
        commit_codebook: commit,
        beta_enc,
        beta_code,
    })
}

/// `mean_b ||a[b] - b[b]||^2`
pub(crate) fn mean_squared_row_distance(a: &Matrix, b: &Matrix) -> f64 {
    let total: f64 = a
        .row_iter()
        .zip(b.row_iter())
        .map(|(x, y)| squared_distance(x, y))
        .sum();
    total / a.rows() as f64
}

/// `d/dz_e mean_b ||z_e - sg(q)||^2 = 2 (z_e - q) / B`
pub(crate) fn commit_encoder_grad(z_e: &Matrix, z_q: &Matrix) -> Result<Matrix> {
    let scale = 2.0 / z_e.rows() as f64;
    z_e.zip_map(z_q, "commit_encoder_grad", |z, q| scale * (z - q))
}

/// Gradient of `commit_codebook` with respect to the codebook rows.
///
/// Row `j` is `(2/B) * sum over b with indices[b] = j of (q_j - z_e[b])`.
/// Rows never selected in the batch are exactly zero; this is what leaves
/// unselected codes stranded under plain VQ. Absent when the codebook is
/// frozen.
pub fn vanilla_codebook_grad(
    result: &QuantizeResult,
    z_e: &Matrix,
    codebook: &Codebook,
) -> Result<QuantizerGrads> {
    check_batch(result, z_e, codebook.dim())?;
    let d_coeffs = if codebook.frozen {
        None
    } else {
        Some(scatter_code_grads(result, z_e, codebook.size()))
    };
    Ok(QuantizerGrads {
        d_coeffs,
        d_basis: None,
        d_z_e: commit_encoder_grad(z_e, &result.z_q)?,
    })
}

pub(crate) fn check_batch(result: &QuantizeResult, z_e: &Matrix, dim: usize) -> Result<()> {
    if result.z_q.shape() != z_e.shape() || z_e.cols() != dim {
        return Err(VqError::dims(
            "codebook gradient",
            format!(
                "z_e {}x{}, z_q {}x{}, code dim {dim}",
                z_e.rows(),
                z_e.cols(),
                result.z_q.rows(),
                result.z_q.cols()
            ),
        ));
    }
    Ok(())
}

/// Accumulates `(2/B)(q_b - z_e[b])` into row `indices[b]` of a `K x d` zero matrix.
pub(crate) fn scatter_code_grads(result: &QuantizeResult, z_e: &Matrix, size: usize) -> Matrix {
    let scale = 2.0 / z_e.rows() as f64;
    let mut grad = Matrix::zeros(size, z_e.cols());
    for (b, &k) in result.indices.iter().enumerate() {
        let q = result.z_q.row(b);
        let z = z_e.row(b);
        for ((g, &qv), &zv) in grad.row_mut(k).iter_mut().zip(q).zip(z) {
            *g += scale * (qv - zv);
        }
    }
    grad
}
