//! Synthetic datasets for desk-scale training.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use crate::error::{Result, VqError};
use crate::numerics::{gaussian_sample, Matrix, RngStream};

/// Isotropic Gaussian mixture: centers `N(0, center_scale^2 I)`, points
/// `N(center, spread^2 I)`.
#[derive(Clone, Debug, PartialEq)]
pub struct MixtureSpec {
    pub modes: usize,
    pub dim: usize,
    pub per_mode: usize,
    pub spread: f64,
    pub center_scale: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct MixtureDataset {
    /// `modes * per_mode` rows, grouped by mode.
    pub points: Matrix,
    pub centers: Matrix,
    pub labels: Vec<usize>,
}

pub fn make_mixture(spec: &MixtureSpec, seed: u64) -> Result<MixtureDataset> {
    if spec.modes == 0 || spec.per_mode == 0 || spec.dim == 0 {
        return Err(VqError::InvalidArgument(format!(
            "mixture needs modes, per_mode and dim >= 1, got {spec:?}"
        )));
    }
    if !(spec.spread >= 0.0) || !(spec.center_scale >= 0.0) {
        return Err(VqError::InvalidArgument(
            "mixture spread and center scale must be >= 0".into(),
        ));
    }
    let mut center_rng = RngStream::new(seed, "mixture-centers");
    let centers = gaussian_sample(
        &mut center_rng,
        spec.modes,
        spec.dim,
        0.0,
        spec.center_scale,
    )?;
    let mut noise_rng = RngStream::new(seed, "mixture-points");
    let noise = gaussian_sample(
        &mut noise_rng,
        spec.modes * spec.per_mode,
        spec.dim,
        0.0,
        spec.spread,
    )?;
    let mut points = Matrix::zeros(spec.modes * spec.per_mode, spec.dim);
    let mut labels = Vec::with_capacity(points.rows());
    for m in 0..spec.modes {
        for p in 0..spec.per_mode {
            let r = m * spec.per_mode + p;
            for (j, v) in points.row_mut(r).iter_mut().enumerate() {
                *v = centers[(m, j)] + noise[(r, j)];
            }
            labels.push(m);
        }
    }
    Ok(MixtureDataset {
        points,
        centers,
        labels,
    })
}

/// Gaussian-mixture points with unit center scale.
pub fn make_mixture_dataset(
    modes: usize,
    dim: usize,
    per_mode: usize,
    spread: f64,
    seed: u64,
) -> Result<Matrix> {
    let spec = MixtureSpec {
        modes,
        dim,
        per_mode,
        spread,
        center_scale: 1.0,
    };
    make_mixture(&spec, seed).map(|d| d.points)
}

/// `count` flattened `side x side` patches, each a sum of `waves` random
/// low-frequency cosine gratings (spatial frequency at most 2 cycles per
/// patch) plus `N(0, noise^2)` pixel noise.
pub fn make_patch_dataset(
    count: usize,
    side: usize,
    waves: usize,
    noise: f64,
    seed: u64,
) -> Result<Matrix> {
    if side == 0 || waves == 0 {
        return Err(VqError::InvalidArgument(
            "patch side and wave count must be >= 1".into(),
        ));
    }
    let mut rng = RngStream::new(seed, "patches");
    let pixel_noise = gaussian_sample(
        &mut RngStream::new(seed, "patch-noise"),
        count,
        side * side,
        0.0,
        noise,
    )?;
    let mut out = pixel_noise;
    for n in 0..count {
        for _ in 0..waves {
            let fx = rng.index(3) as f64;
            let fy = rng.index(3) as f64;
            let phase = rng.uniform(0.0, 2.0 * PI);
            let amp = rng.standard_normal() / waves as f64;
            let row = out.row_mut(n);
            for y in 0..side {
                for x in 0..side {
                    let t = 2.0 * PI * (fx * x as f64 + fy * y as f64) / side as f64 + phase;
                    row[y * side + x] += amp * t.cos();
                }
            }
        }
    }
    Ok(out)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DatasetKind {
    Mixture,
    Patches,
}

impl fmt::Display for DatasetKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            DatasetKind::Mixture => "mixture",
            DatasetKind::Patches => "patches",
        })
    }
}

impl FromStr for DatasetKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "mixture" => Ok(DatasetKind::Mixture),
            "patches" => Ok(DatasetKind::Patches),
            other => Err(format!("unknown dataset `{other}`")),
        }
    }
}

/// Dataset recipe for a training run.
///
/// For `Patches`, `dim` must be a perfect square (the flattened patch size),
/// `modes` is the number of gratings per patch and `spread` the pixel noise.
#[derive(Clone, Debug, PartialEq)]
pub struct DatasetSpec {
    pub kind: DatasetKind,
    pub dim: usize,
    pub modes: usize,
    pub spread: f64,
    pub center_scale: f64,
    pub train_points: usize,
    pub val_points: usize,
}

impl Default for DatasetSpec {
    fn default() -> Self {
        Self {
            kind: DatasetKind::Mixture,
            dim: 8,
            modes: 16,
            spread: 1.0,
            center_scale: 1.0,
            train_points: 8192,
            val_points: 2048,
        }
    }
}

/// Train and validation splits.
#[derive(Clone, Debug, PartialEq)]
pub struct Split {
    pub train: Matrix,
    pub val: Matrix,
}

impl DatasetSpec {
    pub fn validate(&self) -> Result<()> {
        if self.train_points == 0 || self.val_points == 0 {
            return Err(VqError::InvalidArgument(
                "train_points and val_points must be >= 1".into(),
            ));
        }
        if self.kind == DatasetKind::Patches {
            let side = (self.dim as f64).sqrt().round() as usize;
            if side * side != self.dim {
                return Err(VqError::InvalidArgument(format!(
                    "patch dataset needs a square dim, got {}",
                    self.dim
                )));
            }
        }
        Ok(())
    }

    /// Generates all points, shuffles them with the `data-split` stream and
    /// cuts the first `train_points` rows for training and the next
    /// `val_points` for validation.
    pub fn generate(&self, seed: u64) -> Result<Split> {
        self.validate()?;
        let total = self.train_points + self.val_points;
        let points = match self.kind {
            DatasetKind::Mixture => {
                let spec = MixtureSpec {
                    modes: self.modes,
                    dim: self.dim,
                    per_mode: total.div_ceil(self.modes.max(1)),
                    spread: self.spread,
                    center_scale: self.center_scale,
                };
                make_mixture(&spec, seed)?.points
            }
            DatasetKind::Patches => {
                let side = (self.dim as f64).sqrt().round() as usize;
                make_patch_dataset(total, side, self.modes, self.spread, seed)?
            }
        };
        let mut order: Vec<usize> = (0..points.rows()).collect();
        RngStream::new(seed, "data-split").shuffle(&mut order);
        Ok(Split {
            train: points.select_rows(&order[..self.train_points]),
            val: points.select_rows(&order[self.train_points..total]),
        })
    }
}
