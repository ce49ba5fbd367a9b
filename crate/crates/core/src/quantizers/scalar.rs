//! Codebook-free quantizers: finite scalar quantization (per-dimension
//! rounding to a fixed level grid) and lookup-free quantization (per-dimension
//! sign). Both pass gradients straight through (`dz_q/dz = I`).

use crate::error::{Result, VqError};
use crate::numerics::Matrix;

/// Level counts for FSQ; their product is the implicit codebook size.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FsqLevels(Vec<usize>);

impl FsqLevels {
    pub fn new(levels: Vec<usize>) -> Result<Self> {
        if levels.is_empty() {
            return Err(VqError::InvalidArgument(
                "FSQ needs at least one level".into(),
            ));
        }
        if let Some(&l) = levels.iter().find(|&&l| l < 2) {
            return Err(VqError::InvalidArgument(format!(
                "every FSQ level count must be >= 2, got {l}"
            )));
        }
        Ok(Self(levels))
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn codebook_size(&self) -> usize {
        self.0.iter().product()
    }
}

/// Grid position of `z` for an `levels`-point grid:
/// `round_half_even((tanh(z) + 1) (L - 1) / 2)`.
fn fsq_level_index(z: f64, levels: usize) -> usize {
    let half = (levels - 1) as f64 / 2.0;
    let u = z.tanh() * half + half;
    (u.round_ties_even() as usize).min(levels - 1)
}

/// Grid value of level index `i`: `2 i / (L - 1) - 1`, so the grid spans `[-1, 1]`.
fn fsq_level_value(i: usize, levels: usize) -> f64 {
    2.0 * i as f64 / (levels - 1) as f64 - 1.0
}

/// Quantizes each coordinate of `z` to the FSQ grid.
///
/// Returns the grid values and a flat index per row, composed in mixed radix
/// with dimension 0 least significant.
pub fn fsq_quantize(z: &Matrix, levels: &FsqLevels) -> Result<(Matrix, Vec<usize>)> {
    if z.cols() != levels.dim() {
        return Err(VqError::dims(
            "fsq_quantize",
            format!("{} latent dims for {} levels", z.cols(), levels.dim()),
        ));
    }
    let mut codes = Matrix::zeros(z.rows(), z.cols());
    let mut indices = Vec::with_capacity(z.rows());
    for b in 0..z.rows() {
        let mut index = 0;
        let mut radix = 1;
        for (i, (&v, &l)) in z.row(b).iter().zip(levels.as_slice()).enumerate() {
            let level = fsq_level_index(v, l);
            codes[(b, i)] = fsq_level_value(level, l);
            index += level * radix;
            radix *= l;
        }
        indices.push(index);
    }
    Ok((codes, indices))
}

/// Largest latent width whose LFQ index fits comfortably in a `usize`.
pub const LFQ_MAX_DIM: usize = 30;

/// Sign quantization: each coordinate becomes `+1` (for `z >= 0`) or `-1`.
/// The index sets bit `i` when coordinate `i` is positive (dimension 0 is the
/// least significant bit).
pub fn lfq_quantize(z: &Matrix) -> Result<(Matrix, Vec<usize>)> {
    if z.cols() > LFQ_MAX_DIM {
        return Err(VqError::InvalidArgument(format!(
            "LFQ supports at most {LFQ_MAX_DIM} dims, got {}",
            z.cols()
        )));
    }
    let codes = z.map(|v| if v >= 0.0 { 1.0 } else { -1.0 });
    let indices = codes
        .row_iter()
        .map(|r| {
            r.iter()
                .enumerate()
                .filter(|(_, &v)| v > 0.0)
                .fold(0usize, |acc, (i, _)| acc | (1 << i))
        })
        .collect();
    Ok((codes, indices))
}

pub fn lfq_codebook_size(dim: usize) -> usize {
    1 << dim
}
