//! Factorized codes: project latents to a low dimension, L2-normalize, and
//! search a codebook of unit vectors.

use crate::error::{Result, VqError};
use crate::numerics::{dot, Matrix};
use crate::quantizers::vq::{assign, mean_squared_row_distance};
use crate::quantizers::QuantizeResult;

#[derive(Clone, Debug, PartialEq)]
pub struct FcQuantizeResult {
    /// Quantization of the normalized projections; `z_q` is `B x p`.
    pub result: QuantizeResult,
    /// `z proj`, before normalization.
    pub projected: Matrix,
    /// Row-normalized `projected`.
    pub normalized: Matrix,
}

/// Rescales each row to unit L2 norm. Zero rows are an error.
pub fn normalize_rows(m: &Matrix) -> Result<Matrix> {
    let mut out = m.clone();
    for i in 0..m.rows() {
        let norm = dot(m.row(i), m.row(i)).sqrt();
        if norm == 0.0 {
            return Err(VqError::ZeroNorm { row: i });
        }
        for v in out.row_mut(i) {
            *v /= norm;
        }
    }
    Ok(out)
}

pub fn fc_project_quantize(
    z: &Matrix,
    proj: &Matrix,
    codebook_lowdim: &Matrix,
    beta_enc: f64,
    beta_code: f64,
) -> Result<FcQuantizeResult> {
    if z.rows() == 0 {
        return Err(VqError::EmptyBatch);
    }
    if proj.cols() > proj.rows() {
        return Err(VqError::dims(
            "fc_project_quantize",
            format!(
                "projection {}x{} widens the latent",
                proj.rows(),
                proj.cols()
            ),
        ));
    }
    if codebook_lowdim.cols() != proj.cols() {
        return Err(VqError::dims(
            "fc_project_quantize",
            format!(
                "codebook dim {} vs projection width {}",
                codebook_lowdim.cols(),
                proj.cols()
            ),
        ));
    }
    let projected = z.matmul(proj)?;
    let normalized = normalize_rows(&projected)?;
    let indices = assign(&normalized, codebook_lowdim)?;
    let z_q = codebook_lowdim.select_rows(&indices);
    let commit = mean_squared_row_distance(&normalized, &z_q);
    Ok(FcQuantizeResult {
        result: QuantizeResult {
            indices,
            z_q,
            commit_encoder: commit,
            commit_codebook: commit,
            beta_enc,
            beta_code,
        },
        projected,
        normalized,
    })
}

impl FcQuantizeResult {
    /// Pulls a gradient on `z_q` (plus the encoder-side commitment term) back
    /// through normalization and projection. Returns `(d_z, d_proj)`.
    pub fn backward(&self, z: &Matrix, proj: &Matrix, d_zq: &Matrix) -> Result<(Matrix, Matrix)> {
        let d_u = self.result.backward_z_e(&self.normalized, d_zq)?;
        let mut d_y = Matrix::zeros(d_u.rows(), d_u.cols());
        for b in 0..d_u.rows() {
            let y = self.projected.row(b);
            let u = self.normalized.row(b);
            let g = d_u.row(b);
            let norm = dot(y, y).sqrt();
            let ug = dot(u, g);
            for ((o, &gv), &uv) in d_y.row_mut(b).iter_mut().zip(g).zip(u) {
                *o = (gv - uv * ug) / norm;
            }
        }
        let d_z = d_y.matmul_t(proj)?;
        let d_proj = z.t_matmul(&d_y)?;
        Ok((d_z, d_proj))
    }
}
