//! Two-dimensional toy: ten learnable points chase two noisy targets.
//!
//! Three objectives are compared:
//!
//! * `Vanilla`: `||x - q||^2`, each point is its own parameter. Only the
//!   point nearest a target receives gradient.
//! * `BasisOnly`: `||x - q w||^2` with `q` frozen and `w` (2x2) learned. Every
//!   point `q_i w` moves with `w`.
//! * `Joint`: `||x - q w||^2` with both learned. The selected points absorb
//!   most of the fit and `w` barely moves.

use std::fmt;
use std::str::FromStr;

use crate::error::{Result, VqError};
use crate::numerics::{gaussian_sample, squared_distance, Matrix, RngStream};
use crate::quantizers::nearest_code;

pub const TOY_POINTS: usize = 10;
pub const TOY_TARGET_MEANS: [[f64; 2]; 2] = [[2.0, 2.0], [-2.0, -2.0]];

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ToyVariant {
    Vanilla,
    BasisOnly,
    Joint,
}

impl fmt::Display for ToyVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ToyVariant::Vanilla => "vanilla",
            ToyVariant::BasisOnly => "basis_only",
            ToyVariant::Joint => "joint",
        })
    }
}

impl FromStr for ToyVariant {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "vanilla" => Ok(ToyVariant::Vanilla),
            "basis_only" => Ok(ToyVariant::BasisOnly),
            "joint" => Ok(ToyVariant::Joint),
            other => Err(format!("unknown toy variant `{other}`")),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ToySpec {
    pub variant: ToyVariant,
    pub steps: usize,
    pub eta: f64,
    pub seed: u64,
    /// Standard deviation of the per-step target perturbation.
    pub noise_std: f64,
}

impl Default for ToySpec {
    fn default() -> Self {
        Self {
            variant: ToyVariant::Vanilla,
            steps: 2000,
            eta: 0.01,
            seed: 7,
            noise_std: 0.1,
        }
    }
}

impl ToySpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.noise_std >= 0.0) || !self.eta.is_finite() || self.eta < 0.0 {
            return Err(VqError::InvalidArgument(format!(
                "toy needs noise_std >= 0 and a finite eta >= 0, got {self:?}"
            )));
        }
        Ok(())
    }
}

/// Learnable state: points `q` (10x2) and basis `w` (2x2).
#[derive(Clone, Debug, PartialEq)]
pub struct ToyState {
    pub points: Matrix,
    pub basis: Matrix,
}

impl ToyState {
    /// Point positions as seen by the objective (`q` or `q w`).
    pub fn positions(&self, variant: ToyVariant) -> Matrix {
        match variant {
            ToyVariant::Vanilla => self.points.clone(),
            _ => self.points.matmul(&self.basis).expect("10x2 times 2x2"),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ToyGrads {
    pub d_points: Matrix,
    pub d_basis: Matrix,
    /// Index of the point assigned to each target.
    pub assignments: Vec<usize>,
    pub loss: f64,
}

/// Gradient of `sum_t ||x_t - p_{k_t}||^2`, each target assigned to its
/// nearest current position. Parameters the variant freezes get a zero
/// gradient.
pub fn toy_gradients(state: &ToyState, targets: &Matrix, variant: ToyVariant) -> ToyGrads {
    let pos = state.positions(variant);
    let mut d_points = Matrix::zeros(state.points.rows(), 2);
    let mut d_basis = Matrix::zeros(2, 2);
    let mut assignments = Vec::with_capacity(targets.rows());
    let mut loss = 0.0;
    for x in targets.row_iter() {
        let k = nearest_code(x, &pos);
        assignments.push(k);
        let p = pos.row(k);
        loss += squared_distance(x, p);
        // residual r = 2 (p - x), the gradient with respect to the position
        let r = [2.0 * (p[0] - x[0]), 2.0 * (p[1] - x[1])];
        match variant {
            ToyVariant::Vanilla => {
                d_points[(k, 0)] += r[0];
                d_points[(k, 1)] += r[1];
            }
            ToyVariant::BasisOnly | ToyVariant::Joint => {
                let q = state.points.row(k);
                for i in 0..2 {
                    for j in 0..2 {
                        d_basis[(i, j)] += q[i] * r[j];
                    }
                }
                if variant == ToyVariant::Joint {
                    // r w^T
                    for i in 0..2 {
                        d_points[(k, i)] += r[0] * state.basis[(i, 0)] + r[1] * state.basis[(i, 1)];
                    }
                }
            }
        }
    }
    ToyGrads {
        d_points,
        d_basis,
        assignments,
        loss,
    }
}

/// Loss against fixed targets, each assigned to its nearest position.
pub fn toy_loss(state: &ToyState, targets: &Matrix, variant: ToyVariant) -> f64 {
    let pos = state.positions(variant);
    targets
        .row_iter()
        .map(|x| squared_distance(x, pos.row(nearest_code(x, &pos))))
        .sum()
}

/// Initial targets and points drawn from the seeded streams.
pub fn toy_init(seed: u64) -> (Matrix, ToyState) {
    let mut target_rng = RngStream::new(seed, "toy-targets");
    let mut targets = gaussian_sample(&mut target_rng, 2, 2, 0.0, 1.0).expect("unit std");
    for (t, mean) in TOY_TARGET_MEANS.iter().enumerate() {
        for (v, m) in targets.row_mut(t).iter_mut().zip(mean) {
            *v += m;
        }
    }
    let mut point_rng = RngStream::new(seed, "toy-points");
    let points = gaussian_sample(&mut point_rng, TOY_POINTS, 2, 0.0, 1.0).expect("unit std");
    (
        targets,
        ToyState {
            points,
            basis: Matrix::identity(2),
        },
    )
}

#[derive(Clone, Debug, PartialEq)]
pub struct ToyTrace {
    pub variant: ToyVariant,
    /// Target means the noise is added to.
    pub targets: Matrix,
    /// `steps + 1` snapshots of the ten positions, initial state first.
    pub point_trajectories: Vec<Matrix>,
    /// Loss against the noise-free targets at every snapshot.
    pub loss_curve: Vec<f64>,
    /// `||w||_F` at every snapshot.
    pub w_norm_curve: Vec<f64>,
    pub w_initial: Matrix,
    pub w_final: Matrix,
    pub points_initial: Matrix,
    pub points_final: Matrix,
    /// Whether each point was assigned to a target at any step.
    pub ever_selected: Vec<bool>,
}

impl ToyTrace {
    /// Euclidean distance between each point's first and last position.
    pub fn displacements(&self) -> Vec<f64> {
        let first = &self.point_trajectories[0];
        let last = &self.point_trajectories[self.point_trajectories.len() - 1];
        first
            .row_iter()
            .zip(last.row_iter())
            .map(|(a, b)| squared_distance(a, b).sqrt())
            .collect()
    }

    pub fn initial_loss(&self) -> f64 {
        self.loss_curve[0]
    }

    pub fn final_loss(&self) -> f64 {
        self.loss_curve[self.loss_curve.len() - 1]
    }

    /// `||w_final - w_initial||_F`
    pub fn basis_drift(&self) -> f64 {
        self.w_final
            .sub(&self.w_initial)
            .expect("same shape")
            .frobenius_norm()
    }
}

/// Runs `spec.steps` gradient-descent steps. Each step perturbs the targets
/// with `N(0, noise_std^2)`, reassigns every target to its nearest point and
/// descends once on the variant's objective.
pub fn run_toy(spec: &ToySpec) -> Result<ToyTrace> {
    spec.validate()?;
    let (targets, mut state) = toy_init(spec.seed);
    let mut noise_rng = RngStream::new(spec.seed, "toy-noise");
    let variant = spec.variant;

    let mut point_trajectories = Vec::with_capacity(spec.steps + 1);
    let mut loss_curve = Vec::with_capacity(spec.steps + 1);
    let mut w_norm_curve = Vec::with_capacity(spec.steps + 1);
    let mut ever_selected = vec![false; TOY_POINTS];
    let w_initial = state.basis.clone();
    let points_initial = state.points.clone();

    let record =
        |state: &ToyState, traj: &mut Vec<Matrix>, losses: &mut Vec<f64>, norms: &mut Vec<f64>| {
            traj.push(state.positions(variant));
            losses.push(toy_loss(state, &targets, variant));
            norms.push(state.basis.frobenius_norm());
        };
    record(
        &state,
        &mut point_trajectories,
        &mut loss_curve,
        &mut w_norm_curve,
    );

    for _ in 0..spec.steps {
        let noise = gaussian_sample(&mut noise_rng, 2, 2, 0.0, spec.noise_std)?;
        let perturbed = targets.add(&noise)?;
        let g = toy_gradients(&state, &perturbed, variant);
        for &k in &g.assignments {
            ever_selected[k] = true;
        }
        match variant {
            ToyVariant::Vanilla => state.points.axpy(-spec.eta, &g.d_points)?,
            ToyVariant::BasisOnly => state.basis.axpy(-spec.eta, &g.d_basis)?,
            ToyVariant::Joint => {
                state.points.axpy(-spec.eta, &g.d_points)?;
                state.basis.axpy(-spec.eta, &g.d_basis)?;
            }
        }
        record(
            &state,
            &mut point_trajectories,
            &mut loss_curve,
            &mut w_norm_curve,
        );
    }

    Ok(ToyTrace {
        variant,
        targets,
        point_trajectories,
        loss_curve,
        w_norm_curve,
        w_initial,
        w_final: state.basis,
        points_initial,
        points_final: state.points,
        ever_selected,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct ToySummary {
    pub initial_loss: f64,
    pub final_loss: f64,
    pub basis_drift: f64,
}

impl From<&ToyTrace> for ToySummary {
    fn from(t: &ToyTrace) -> Self {
        Self {
            initial_loss: t.initial_loss(),
            final_loss: t.final_loss(),
            basis_drift: t.basis_drift(),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ToyComparison {
    pub basis_only: ToySummary,
    pub joint: ToySummary,
}

/// Runs `BasisOnly` and `Joint` from the same initialization and noise draws
/// (default noise level).
pub fn compare_joint_vs_basis(seed: u64, steps: usize, eta: f64) -> Result<ToyComparison> {
    let spec = |variant| ToySpec {
        variant,
        steps,
        eta,
        seed,
        ..ToySpec::default()
    };
    let basis_only = run_toy(&spec(ToyVariant::BasisOnly))?;
    let joint = run_toy(&spec(ToyVariant::Joint))?;
    Ok(ToyComparison {
        basis_only: (&basis_only).into(),
        joint: (&joint).into(),
    })
}
