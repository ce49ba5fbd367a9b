use std::fmt;
use std::str::FromStr;

use crate::dynamics::DatasetSpec;
use crate::error::{Result, VqError};
use crate::numerics::DEFAULT_RANK_TOL;
use crate::quantizers::{CodebookInit, FsqLevels};
use crate::training::OptimizerKind;

/// Which quantization layer sits between encoder and decoder.
#[derive(Clone, Debug, PartialEq)]
pub enum QuantizerKind {
    /// Nearest code in `C`, codebook trained by gradient descent.
    Vanilla,
    /// Nearest code in `C W`; `W` trained, `C` frozen unless configured otherwise.
    SimVq,
    /// Nearest code in `C`, codebook maintained by EMA statistics.
    Ema {
        decay: f64,
    },
    Fsq {
        levels: FsqLevels,
    },
    Lfq,
    /// Linear projection to `dim`, L2 normalization, spherical codebook.
    Fc {
        dim: usize,
    },
}

impl QuantizerKind {
    pub fn name(&self) -> &'static str {
        match self {
            QuantizerKind::Vanilla => "vanilla",
            QuantizerKind::SimVq => "simvq",
            QuantizerKind::Ema { .. } => "ema",
            QuantizerKind::Fsq { .. } => "fsq",
            QuantizerKind::Lfq => "lfq",
            QuantizerKind::Fc { .. } => "fc",
        }
    }
}

/// Initialization of the latent basis `W` in training runs.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BasisInit {
    Identity,
    /// `U(-1/sqrt(d), 1/sqrt(d))`, the usual default for a bias-free linear layer.
    Linear,
}

impl fmt::Display for BasisInit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            BasisInit::Identity => "identity",
            BasisInit::Linear => "linear",
        })
    }
}

impl FromStr for BasisInit {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "identity" => Ok(BasisInit::Identity),
            "linear" => Ok(BasisInit::Linear),
            other => Err(format!("unknown basis init `{other}`")),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrainConfig {
    pub eta: f64,
    pub beta_enc: f64,
    pub beta_code: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub codebook_size: usize,
    pub latent_dim: usize,
    pub hidden_width: usize,
    pub quantizer: QuantizerKind,
    pub codebook_init: CodebookInit,
    pub codebook_frozen: bool,
    pub basis_init: BasisInit,
    pub optimizer: OptimizerKind,
    pub seed: u64,
    pub dataset: DatasetSpec,
    pub rank_tol: f64,
    /// PSNR peak; the validation split's dynamic range when unset.
    pub psnr_peak: Option<f64>,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            eta: 1e-4,
            beta_enc: 1.0,
            beta_code: 1.0,
            epochs: 50,
            batch_size: 32,
            codebook_size: 1024,
            latent_dim: 8,
            hidden_width: 32,
            quantizer: QuantizerKind::SimVq,
            codebook_init: CodebookInit::Gaussian,
            codebook_frozen: true,
            basis_init: BasisInit::Linear,
            optimizer: OptimizerKind::Adam,
            seed: 1,
            dataset: DatasetSpec::default(),
            rank_tol: DEFAULT_RANK_TOL,
            psnr_peak: None,
        }
    }
}

impl TrainConfig {
    /// Plain VQ on the default benchmark: trainable Gaussian codebook.
    pub fn vanilla() -> Self {
        Self {
            quantizer: QuantizerKind::Vanilla,
            codebook_frozen: false,
            ..Self::default()
        }
    }

    pub fn simvq() -> Self {
        Self::default()
    }

    /// Number of codes the quantizer can emit.
    pub fn effective_codebook_size(&self) -> usize {
        match &self.quantizer {
            QuantizerKind::Fsq { levels } => levels.codebook_size(),
            QuantizerKind::Lfq => crate::quantizers::lfq_codebook_size(self.latent_dim),
            _ => self.codebook_size,
        }
    }

    /// Width of the decoder input.
    pub fn decoder_input(&self) -> usize {
        match &self.quantizer {
            QuantizerKind::Fc { dim } => *dim,
            _ => self.latent_dim,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(VqError::InvalidArgument(msg));
        if !(self.eta > 0.0) || !self.eta.is_finite() {
            return bad(format!("eta must be > 0, got {}", self.eta));
        }
        if !(self.beta_enc >= 0.0) || !(self.beta_code >= 0.0) {
            return bad("commitment coefficients must be >= 0".into());
        }
        if self.batch_size == 0 {
            return bad("batch_size must be >= 1".into());
        }
        if self.codebook_size == 0 {
            return bad("codebook_size must be >= 1".into());
        }
        if self.latent_dim == 0 || self.hidden_width == 0 {
            return bad("latent_dim and hidden_width must be >= 1".into());
        }
        if !(self.rank_tol > 0.0 && self.rank_tol < 1.0) {
            return bad(format!(
                "rank_tol must lie in (0, 1), got {}",
                self.rank_tol
            ));
        }
        if let Some(p) = self.psnr_peak {
            if !(p > 0.0) {
                return bad(format!("psnr_peak must be > 0, got {p}"));
            }
        }
        match &self.quantizer {
            QuantizerKind::Ema { decay } if !(*decay >= 0.0 && *decay < 1.0) => {
                return bad(format!("ema decay must lie in [0, 1), got {decay}"));
            }
            QuantizerKind::Fsq { levels } if levels.dim() != self.latent_dim => {
                return bad(format!(
                    "fsq has {} levels but latent_dim is {}",
                    levels.dim(),
                    self.latent_dim
                ));
            }
            QuantizerKind::Lfq if self.latent_dim > crate::quantizers::LFQ_MAX_DIM => {
                return bad(format!("lfq latent_dim {} too large", self.latent_dim));
            }
            QuantizerKind::Fc { dim } if *dim == 0 || *dim > self.latent_dim => {
                return bad(format!(
                    "fc dim must lie in 1..={}, got {dim}",
                    self.latent_dim
                ));
            }
            _ => {}
        }
        self.dataset.validate()
    }
}
