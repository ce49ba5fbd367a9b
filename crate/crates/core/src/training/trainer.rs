//! The training loop: encode, search the nearest code, pass gradients
//! straight through, decode, and descend on
//! `MSE(x, x_hat) + beta_enc ||z_e - sg(q)||^2 + beta_code ||sg(z_e) - q||^2`.

use crate::dynamics::Split;
use crate::error::{Result, VqError};
use crate::metrics::{self, MetricsRow};
use crate::numerics::{Matrix, RngStream};
use crate::quantizers::{
    fc_project_quantize, fsq_quantize, lfq_quantize, normalize_rows, simvq_effective_codebook,
    simvq_w_grad, ste_quantize, vanilla_codebook_grad, Codebook, EmaCodebook, LatentBasis,
};
use crate::training::{BasisInit, MlpGrads, MlpParams, OptimizerState, QuantizerKind, TrainConfig};

/// Quantizer parameters held by a model.
#[derive(Clone, Debug, PartialEq)]
pub enum QuantizerState {
    Vanilla {
        codebook: Codebook,
    },
    SimVq {
        codebook: Codebook,
        basis: LatentBasis,
    },
    Ema {
        ema: EmaCodebook,
        decay: f64,
    },
    Fsq {
        levels: crate::quantizers::FsqLevels,
    },
    Lfq,
    Fc {
        /// `d x p`
        proj: Matrix,
        /// `K x p`, rows kept at unit norm.
        codebook: Codebook,
    },
}

impl QuantizerState {
    pub fn init(cfg: &TrainConfig) -> Result<Self> {
        let mut rng = RngStream::new(cfg.seed, "codebook-init");
        let k = cfg.codebook_size;
        let d = cfg.latent_dim;
        Ok(match &cfg.quantizer {
            QuantizerKind::Vanilla => QuantizerState::Vanilla {
                codebook: Codebook::sample(&mut rng, k, d, cfg.codebook_init, cfg.codebook_frozen)?,
            },
            QuantizerKind::SimVq => {
                let codebook =
                    Codebook::sample(&mut rng, k, d, cfg.codebook_init, cfg.codebook_frozen)?;
                let basis = match cfg.basis_init {
                    BasisInit::Identity => LatentBasis::identity(d),
                    BasisInit::Linear => {
                        let a = 1.0 / (d as f64).sqrt();
                        let mut basis_rng = RngStream::new(cfg.seed, "basis-init");
                        LatentBasis::new(basis_rng.uniform_matrix(d, d, -a, a))?
                    }
                };
                QuantizerState::SimVq { codebook, basis }
            }
            QuantizerKind::Ema { decay } => QuantizerState::Ema {
                ema: EmaCodebook::new(Codebook::sample(&mut rng, k, d, cfg.codebook_init, true)?),
                decay: *decay,
            },
            QuantizerKind::Fsq { levels } => QuantizerState::Fsq {
                levels: levels.clone(),
            },
            QuantizerKind::Lfq => QuantizerState::Lfq,
            QuantizerKind::Fc { dim } => {
                let sampled =
                    Codebook::sample(&mut rng, k, *dim, cfg.codebook_init, cfg.codebook_frozen)?;
                let codebook = Codebook {
                    coeffs: normalize_rows(&sampled.coeffs)?,
                    ..sampled
                };
                let a = 1.0 / (d as f64).sqrt();
                let mut proj_rng = RngStream::new(cfg.seed, "fc-proj-init");
                QuantizerState::Fc {
                    proj: proj_rng.uniform_matrix(d, *dim, -a, a),
                    codebook,
                }
            }
        })
    }

    /// The latent basis reported in metrics: `W` for the reparameterized
    /// codebook, the identity for quantizers without one.
    pub fn reported_basis(&self, latent_dim: usize) -> Matrix {
        match self {
            QuantizerState::SimVq { basis, .. } => basis.basis.clone(),
            _ => Matrix::identity(latent_dim),
        }
    }

    pub fn codebook(&self) -> Option<&Codebook> {
        match self {
            QuantizerState::Vanilla { codebook }
            | QuantizerState::SimVq { codebook, .. }
            | QuantizerState::Fc { codebook, .. } => Some(codebook),
            QuantizerState::Ema { ema, .. } => Some(&ema.codebook),
            _ => None,
        }
    }
}

/// Encoder, quantizer and decoder.
#[derive(Clone, Debug, PartialEq)]
pub struct Model {
    pub params: MlpParams,
    pub quantizer: QuantizerState,
}

impl Model {
    pub fn init(cfg: &TrainConfig) -> Result<Self> {
        cfg.validate()?;
        let mut rng = RngStream::new(cfg.seed, "mlp-init");
        let params = MlpParams::init(
            &mut rng,
            cfg.dataset.dim,
            cfg.hidden_width,
            cfg.latent_dim,
            cfg.decoder_input(),
        )?;
        Ok(Self {
            params,
            quantizer: QuantizerState::init(cfg)?,
        })
    }

    pub fn is_finite(&self) -> bool {
        let q = match &self.quantizer {
            QuantizerState::Vanilla { codebook } => codebook.coeffs.is_finite(),
            QuantizerState::SimVq { codebook, basis } => {
                codebook.coeffs.is_finite() && basis.basis.is_finite()
            }
            QuantizerState::Ema { ema, .. } => ema.codebook.coeffs.is_finite(),
            QuantizerState::Fc { proj, codebook } => {
                proj.is_finite() && codebook.coeffs.is_finite()
            }
            QuantizerState::Fsq { .. } | QuantizerState::Lfq => true,
        };
        q && self.params.encoder.is_finite() && self.params.decoder.is_finite()
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct LossTerms {
    pub reconstruction: f64,
    pub commit_encoder: f64,
    pub commit_codebook: f64,
    pub total: f64,
}

/// Gradients of the total loss for every trainable tensor.
#[derive(Clone, Debug, PartialEq)]
pub struct ModelGrads {
    pub encoder: MlpGrads,
    pub decoder: MlpGrads,
    /// Codebook coefficients; absent when frozen or not gradient-trained.
    pub coeffs: Option<Matrix>,
    pub basis: Option<Matrix>,
    pub proj: Option<Matrix>,
}

/// Everything one forward/backward pass produces.
#[derive(Clone, Debug)]
pub struct StepOutput {
    pub losses: LossTerms,
    pub grads: ModelGrads,
    pub z_e: Matrix,
    pub indices: Vec<usize>,
    pub x_hat: Matrix,
}

/// Forward and backward pass over one batch, without touching parameters.
pub fn loss_and_grads(model: &Model, x: &Matrix, cfg: &TrainConfig) -> Result<StepOutput> {
    if x.rows() == 0 {
        return Err(VqError::EmptyBatch);
    }
    let (z_e, enc_cache) = model.params.encoder.forward(x)?;

    // quantize; `commit` carries the quantizer-side gradients to be finished
    // once the decoder gradient is known
    enum Commit {
        Vq(crate::quantizers::QuantizeResult),
        Fc(Box<crate::quantizers::FcQuantizeResult>),
        Free,
    }
    let (z_q, indices, commit) = match &model.quantizer {
        QuantizerState::Vanilla { codebook } => {
            let r = ste_quantize(&z_e, &codebook.coeffs, cfg.beta_enc, cfg.beta_code)?;
            (r.z_q.clone(), r.indices.clone(), Commit::Vq(r))
        }
        QuantizerState::SimVq { codebook, basis } => {
            let eff = simvq_effective_codebook(codebook, basis)?;
            let r = ste_quantize(&z_e, &eff, cfg.beta_enc, cfg.beta_code)?;
            (r.z_q.clone(), r.indices.clone(), Commit::Vq(r))
        }
        QuantizerState::Ema { ema, .. } => {
            let r = ste_quantize(&z_e, &ema.codebook.coeffs, cfg.beta_enc, cfg.beta_code)?;
            (r.z_q.clone(), r.indices.clone(), Commit::Vq(r))
        }
        QuantizerState::Fsq { levels } => {
            let (codes, idx) = fsq_quantize(&z_e, levels)?;
            (codes, idx, Commit::Free)
        }
        QuantizerState::Lfq => {
            let (codes, idx) = lfq_quantize(&z_e)?;
            (codes, idx, Commit::Free)
        }
        QuantizerState::Fc { proj, codebook } => {
            let r = fc_project_quantize(&z_e, proj, &codebook.coeffs, cfg.beta_enc, cfg.beta_code)?;
            (
                r.result.z_q.clone(),
                r.result.indices.clone(),
                Commit::Fc(Box::new(r)),
            )
        }
    };

    let (x_hat, dec_cache) = model.params.decoder.forward(&z_q)?;
    let diff = x_hat.sub(x)?;
    let reconstruction = diff.sum_squares() / x.len() as f64;
    let d_xhat = diff.scale(2.0 / x.len() as f64);
    let (dec_grads, d_zq) = model.params.decoder.backward(&dec_cache, &d_xhat)?;

    let mut coeffs = None;
    let mut basis_grad = None;
    let mut proj_grad = None;
    let (d_z_e, commit_encoder, commit_codebook) = match commit {
        Commit::Vq(r) => {
            let d_z_e = r.backward_z_e(&z_e, &d_zq)?;
            match &model.quantizer {
                QuantizerState::Vanilla { codebook } => {
                    let g = vanilla_codebook_grad(&r, &z_e, codebook)?;
                    coeffs = g.d_coeffs.map(|m| m.scale(cfg.beta_code));
                }
                QuantizerState::SimVq { codebook, basis } => {
                    let g = simvq_w_grad(&r, &z_e, codebook, basis)?;
                    coeffs = g.d_coeffs.map(|m| m.scale(cfg.beta_code));
                    basis_grad = g.d_basis.map(|m| m.scale(cfg.beta_code));
                }
                _ => {}
            }
            (d_z_e, r.commit_encoder, r.commit_codebook)
        }
        Commit::Fc(r) => {
            let QuantizerState::Fc { proj, codebook } = &model.quantizer else {
                unreachable!("fc result from a non-fc quantizer")
            };
            let (d_z_e, d_proj) = r.backward(&z_e, proj, &d_zq)?;
            proj_grad = Some(d_proj);
            if !codebook.frozen {
                let g = vanilla_codebook_grad(&r.result, &r.normalized, codebook)?;
                coeffs = g.d_coeffs.map(|m| m.scale(cfg.beta_code));
            }
            (d_z_e, r.result.commit_encoder, r.result.commit_codebook)
        }
        Commit::Free => (d_zq, 0.0, 0.0),
    };

    let (enc_grads, _) = model.params.encoder.backward(&enc_cache, &d_z_e)?;
    let total = reconstruction + cfg.beta_enc * commit_encoder + cfg.beta_code * commit_codebook;
    Ok(StepOutput {
        losses: LossTerms {
            reconstruction,
            commit_encoder,
            commit_codebook,
            total,
        },
        grads: ModelGrads {
            encoder: enc_grads,
            decoder: dec_grads,
            coeffs,
            basis: basis_grad,
            proj: proj_grad,
        },
        z_e,
        indices,
        x_hat,
    })
}

/// One optimizer step on a batch. Frozen codebooks are never written.
pub fn train_step(
    model: &mut Model,
    opt: &mut OptimizerState,
    batch: &Matrix,
    cfg: &TrainConfig,
) -> Result<LossTerms> {
    let out = loss_and_grads(model, batch, cfg)?;
    if !out.losses.total.is_finite() {
        return Err(VqError::NonFinite {
            what: format!("loss {:?}", out.losses),
            epoch: 0,
            step: opt.step as usize,
        });
    }
    apply_grads(model, opt, &out)?;
    if !model.is_finite() {
        return Err(VqError::NonFinite {
            what: "parameters".into(),
            epoch: 0,
            step: opt.step as usize,
        });
    }
    Ok(out.losses)
}

fn apply_grads(model: &mut Model, opt: &mut OptimizerState, out: &StepOutput) -> Result<()> {
    opt.begin_step();
    let mut slot = 0;
    for (p, g) in model
        .params
        .encoder
        .params_mut()
        .zip(out.grads.encoder.tensors())
    {
        opt.update(slot, p, g)?;
        slot += 1;
    }
    for (p, g) in model
        .params
        .decoder
        .params_mut()
        .zip(out.grads.decoder.tensors())
    {
        opt.update(slot, p, g)?;
        slot += 1;
    }
    let coeff_slot = slot;
    let basis_slot = slot + 1;
    let proj_slot = slot + 2;
    match &mut model.quantizer {
        QuantizerState::Vanilla { codebook } => {
            if let (false, Some(g)) = (codebook.frozen, &out.grads.coeffs) {
                opt.update(coeff_slot, &mut codebook.coeffs, g)?;
            }
        }
        QuantizerState::SimVq { codebook, basis } => {
            if let (false, Some(g)) = (codebook.frozen, &out.grads.coeffs) {
                opt.update(coeff_slot, &mut codebook.coeffs, g)?;
            }
            if let Some(g) = &out.grads.basis {
                opt.update(basis_slot, &mut basis.basis, g)?;
            }
        }
        QuantizerState::Ema { ema, decay } => {
            ema.update(&out.z_e, &out.indices, *decay)?;
        }
        QuantizerState::Fc { proj, codebook } => {
            if let Some(g) = &out.grads.proj {
                opt.update(proj_slot, proj, g)?;
            }
            if let (false, Some(g)) = (codebook.frozen, &out.grads.coeffs) {
                opt.update(coeff_slot, &mut codebook.coeffs, g)?;
                codebook.coeffs = normalize_rows(&codebook.coeffs)?;
            }
        }
        QuantizerState::Fsq { .. } | QuantizerState::Lfq => {}
    }
    Ok(())
}

/// Result of encoding a dataset without updating anything.
#[derive(Clone, Debug)]
pub struct Evaluation {
    pub indices: Vec<usize>,
    pub x_hat: Matrix,
    pub mse: f64,
}

pub fn evaluate(model: &Model, x: &Matrix, cfg: &TrainConfig) -> Result<Evaluation> {
    let out = loss_and_grads(model, x, cfg)?;
    Ok(Evaluation {
        indices: out.indices,
        mse: out.losses.reconstruction,
        x_hat: out.x_hat,
    })
}

/// Stateful driver for one training run.
pub struct Trainer {
    pub cfg: TrainConfig,
    pub model: Model,
    pub opt: OptimizerState,
    pub data: Split,
    order_rng: RngStream,
    epoch: usize,
    peak: f64,
}

impl Trainer {
    pub fn new(cfg: TrainConfig) -> Result<Self> {
        cfg.validate()?;
        let data = cfg.dataset.generate(cfg.seed)?;
        let model = Model::init(&cfg)?;
        let opt = OptimizerState::new(cfg.optimizer, cfg.eta)?;
        let peak = match cfg.psnr_peak {
            Some(p) => p,
            None => {
                let r = metrics::dynamic_range(&data.val);
                if r > 0.0 {
                    r
                } else {
                    1.0
                }
            }
        };
        Ok(Self {
            order_rng: RngStream::new(cfg.seed, "data-order"),
            cfg,
            model,
            opt,
            data,
            epoch: 0,
            peak,
        })
    }

    pub fn epoch(&self) -> usize {
        self.epoch
    }

    /// One pass over the shuffled training split. Returns the mean total loss.
    pub fn run_epoch(&mut self) -> Result<f64> {
        let n = self.data.train.rows();
        let mut order: Vec<usize> = (0..n).collect();
        self.order_rng.shuffle(&mut order);
        let mut total = 0.0;
        let mut batches = 0;
        for (step, chunk) in order.chunks(self.cfg.batch_size).enumerate() {
            let batch = self.data.train.select_rows(chunk);
            let losses = train_step(&mut self.model, &mut self.opt, &batch, &self.cfg).map_err(
                |e| match e {
                    VqError::NonFinite { what, .. } => VqError::NonFinite {
                        what,
                        epoch: self.epoch,
                        step,
                    },
                    other => other,
                },
            )?;
            total += losses.total;
            batches += 1;
        }
        self.epoch += 1;
        Ok(total / batches as f64)
    }

    /// Metrics on the validation split for the current parameters.
    pub fn metrics(&self) -> Result<MetricsRow> {
        let eval = evaluate(&self.model, &self.data.val, &self.cfg)?;
        let k = self.cfg.effective_codebook_size();
        let w = self.model.quantizer.reported_basis(self.cfg.latent_dim);
        let (w_rank, w_fro) = metrics::basis_diagnostics(&w, self.cfg.rank_tol)?;
        Ok(MetricsRow {
            epoch: self.epoch,
            utilization: metrics::utilization(&eval.indices, k)?,
            perplexity: metrics::perplexity(&eval.indices, k)?,
            w_rank,
            w_fro,
            mse: eval.mse,
            psnr: metrics::psnr_from_mse(eval.mse, self.peak),
        })
    }
}

/// Trains for `cfg.epochs` epochs and returns one validation record per epoch.
pub fn run_training(cfg: &TrainConfig) -> Result<Vec<MetricsRow>> {
    let mut trainer = Trainer::new(cfg.clone())?;
    let mut rows = Vec::with_capacity(cfg.epochs);
    for _ in 0..cfg.epochs {
        trainer.run_epoch()?;
        rows.push(trainer.metrics()?);
    }
    Ok(rows)
}
