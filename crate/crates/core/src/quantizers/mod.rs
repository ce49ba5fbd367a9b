//! Quantization layers: forward passes, straight-through behaviour,
//! commitment losses and analytic parameter gradients.

mod codebook;
mod ema;
mod fc;
mod scalar;
mod simvq;
mod vq;

pub use codebook::{Codebook, CodebookInit, LatentBasis};
pub use ema::{ema_update, EmaCodebook, EMA_EPS};
pub use fc::{fc_project_quantize, normalize_rows, FcQuantizeResult};
pub use scalar::{fsq_quantize, lfq_codebook_size, lfq_quantize, FsqLevels, LFQ_MAX_DIM};
pub use simvq::{simvq_effective_codebook, simvq_w_grad};
pub use vq::{
    assign, nearest_code, selection_matrix, ste_quantize, vanilla_codebook_grad, QuantizeResult,
    QuantizerGrads,
};
