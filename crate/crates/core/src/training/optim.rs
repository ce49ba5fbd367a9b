use std::fmt;
use std::str::FromStr;

use crate::error::{Result, VqError};
use crate::numerics::Matrix;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum OptimizerKind {
    Sgd,
    Adam,
}

impl fmt::Display for OptimizerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            OptimizerKind::Sgd => "sgd",
            OptimizerKind::Adam => "adam",
        })
    }
}

impl FromStr for OptimizerKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "sgd" => Ok(OptimizerKind::Sgd),
            "adam" => Ok(OptimizerKind::Adam),
            other => Err(format!("unknown optimizer `{other}`")),
        }
    }
}

pub const ADAM_BETA1: f64 = 0.9;
pub const ADAM_BETA2: f64 = 0.999;
pub const ADAM_EPS: f64 = 1e-8;

/// Optimizer state. Parameters are addressed by a stable slot number; Adam
/// moment buffers are allocated on first use of a slot.
#[derive(Clone, Debug, PartialEq)]
pub struct OptimizerState {
    pub kind: OptimizerKind,
    pub lr: f64,
    pub step: u64,
    first: Vec<Option<Vec<f64>>>,
    second: Vec<Option<Vec<f64>>>,
}

impl OptimizerState {
    pub fn new(kind: OptimizerKind, lr: f64) -> Result<Self> {
        if !(lr >= 0.0) || !lr.is_finite() {
            return Err(VqError::InvalidArgument(format!(
                "learning rate must be finite and >= 0, got {lr}"
            )));
        }
        Ok(Self {
            kind,
            lr,
            step: 0,
            first: Vec::new(),
            second: Vec::new(),
        })
    }

    /// Starts a new optimizer step; call once before updating the slots.
    pub fn begin_step(&mut self) {
        self.step += 1;
    }

    /// Updates `param` in place from `grad`.
    pub fn update(&mut self, slot: usize, param: &mut Matrix, grad: &Matrix) -> Result<()> {
        if param.shape() != grad.shape() {
            return Err(VqError::dims(
                "optimizer update",
                format!("param {:?}, grad {:?}", param.shape(), grad.shape()),
            ));
        }
        match self.kind {
            OptimizerKind::Sgd => param.axpy(-self.lr, grad),
            OptimizerKind::Adam => {
                if self.step == 0 {
                    return Err(VqError::InvalidArgument(
                        "Adam update before begin_step".into(),
                    ));
                }
                if self.first.len() <= slot {
                    self.first.resize(slot + 1, None);
                    self.second.resize(slot + 1, None);
                }
                let m = self.first[slot].get_or_insert_with(|| vec![0.0; grad.len()]);
                let v = self.second[slot].get_or_insert_with(|| vec![0.0; grad.len()]);
                if m.len() != grad.len() {
                    return Err(VqError::dims(
                        "optimizer update",
                        format!(
                            "slot {slot} changed size from {} to {}",
                            m.len(),
                            grad.len()
                        ),
                    ));
                }
                let t = self.step as i32;
                let bias1 = 1.0 - ADAM_BETA1.powi(t);
                let bias2 = 1.0 - ADAM_BETA2.powi(t);
                for (((p, &g), m), v) in param
                    .as_mut_slice()
                    .iter_mut()
                    .zip(grad.as_slice())
                    .zip(m.iter_mut())
                    .zip(v.iter_mut())
                {
                    *m = ADAM_BETA1 * *m + (1.0 - ADAM_BETA1) * g;
                    *v = ADAM_BETA2 * *v + (1.0 - ADAM_BETA2) * g * g;
                    let m_hat = *m / bias1;
                    let v_hat = *v / bias2;
                    *p -= self.lr * m_hat / (v_hat.sqrt() + ADAM_EPS);
                }
                Ok(())
            }
        }
    }

    /// Moment buffer lengths per slot, for shape checks.
    pub fn moment_lengths(&self) -> Vec<Option<usize>> {
        self.first
            .iter()
            .map(|m| m.as_ref().map(Vec::len))
            .collect()
    }
}
