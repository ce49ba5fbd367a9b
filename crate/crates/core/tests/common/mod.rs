//! Finite-difference oracles shared by the gradient tests and the
//! acceptance runner. Each suite draws random instances (d <= 16, K <= 64,
//! B <= 8) and returns the worst relative error it saw.

#![allow(dead_code)]

use vqlab::numerics::{finite_diff_grad, gaussian_sample, relative_error, Matrix, RngStream};
use vqlab::quantizers::{
    simvq_effective_codebook, simvq_w_grad, ste_quantize, vanilla_codebook_grad, Codebook,
    CodebookInit, LatentBasis,
};
use vqlab::training::{
    loss_and_grads, BasisInit, Dense, Mlp, Model, QuantizerKind, QuantizerState, TrainConfig,
};

pub const FD_STEP: f64 = 1e-5;
pub const FD_FLOOR: f64 = 1e-10;
pub const TOLERANCE: f64 = 1e-4;

#[derive(Clone, Copy, Debug, Default)]
pub struct OracleReport {
    pub instances: usize,
    pub worst: f64,
}

impl OracleReport {
    fn record(&mut self, err: f64) {
        self.worst = self.worst.max(err);
    }

    pub fn passed(&self) -> bool {
        self.worst < TOLERANCE
    }
}

fn dims(rng: &mut RngStream) -> (usize, usize, usize) {
    (1 + rng.index(8), 1 + rng.index(64), 1 + rng.index(16))
}

fn normal(rng: &mut RngStream, rows: usize, cols: usize) -> Matrix {
    gaussian_sample(rng, rows, cols, 0.0, 1.0).unwrap()
}

/// Gradient reaching `z_e` through the straight-through estimator, checked
/// against the surrogate `<g, z + sg(q - z)> + beta_enc * mean ||z - sg(q)||^2`
/// with the stop-gradient terms frozen at the base point.
pub fn ste_oracle(instances: usize, seed: u64) -> OracleReport {
    let mut rng = RngStream::new(seed, "oracle-ste");
    let mut report = OracleReport::default();
    for _ in 0..instances {
        let (b, k, d) = dims(&mut rng);
        let z_e = normal(&mut rng, b, d);
        let codebook = normal(&mut rng, k, d);
        let d_zq = normal(&mut rng, b, d);
        let beta_enc = rng.uniform(0.1, 2.0);
        let r = ste_quantize(&z_e, &codebook, beta_enc, 1.0).unwrap();
        assert_eq!(r.z_q, codebook.select_rows(&r.indices));
        let analytic = r.backward_z_e(&z_e, &d_zq).unwrap();
        let shift = r.z_q.sub(&z_e).unwrap();
        let numeric = finite_diff_grad(
            |z| {
                let forward = z.add(&shift).unwrap();
                let pull = z.sub(&r.z_q).unwrap().sum_squares() / b as f64;
                forward
                    .as_slice()
                    .iter()
                    .zip(d_zq.as_slice())
                    .map(|(a, g)| a * g)
                    .sum::<f64>()
                    + beta_enc * pull
            },
            &z_e,
            FD_STEP,
        );
        report.record(relative_error(&analytic, &numeric, FD_FLOOR));
        report.instances += 1;
    }
    report
}

/// Plain codebook gradient of `commit_codebook`, differentiated with
/// nearest-code search redone at every probe.
pub fn vanilla_oracle(instances: usize, seed: u64) -> OracleReport {
    let mut rng = RngStream::new(seed, "oracle-vanilla");
    let mut report = OracleReport::default();
    for _ in 0..instances {
        let (b, k, d) = dims(&mut rng);
        let z_e = normal(&mut rng, b, d);
        let codebook =
            Codebook::new(normal(&mut rng, k, d), false, CodebookInit::Gaussian).unwrap();
        let r = ste_quantize(&z_e, &codebook.coeffs, 1.0, 1.0).unwrap();
        let analytic = vanilla_codebook_grad(&r, &z_e, &codebook)
            .unwrap()
            .d_coeffs
            .unwrap();
        let numeric = finite_diff_grad(
            |c| ste_quantize(&z_e, c, 1.0, 1.0).unwrap().commit_codebook,
            &codebook.coeffs,
            FD_STEP,
        );
        report.record(relative_error(&analytic, &numeric, FD_FLOOR));
        report.instances += 1;
    }
    report
}

/// Basis gradient (and coefficient gradient when trainable) of
/// `commit_codebook` for the reparameterized codebook `C W`.
pub fn simvq_oracle(instances: usize, seed: u64) -> OracleReport {
    let mut rng = RngStream::new(seed, "oracle-simvq");
    let mut report = OracleReport::default();
    for i in 0..instances {
        let (b, k, d) = dims(&mut rng);
        let z_e = normal(&mut rng, b, d);
        let trainable = i % 2 == 1;
        let codebook =
            Codebook::new(normal(&mut rng, k, d), !trainable, CodebookInit::Gaussian).unwrap();
        let basis = LatentBasis::new(normal(&mut rng, d, d)).unwrap();
        let eff = simvq_effective_codebook(&codebook, &basis).unwrap();
        let r = ste_quantize(&z_e, &eff, 1.0, 1.0).unwrap();
        let g = simvq_w_grad(&r, &z_e, &codebook, &basis).unwrap();
        let commit = |c: &Matrix, w: &Matrix| {
            ste_quantize(&z_e, &c.matmul(w).unwrap(), 1.0, 1.0)
                .unwrap()
                .commit_codebook
        };
        let numeric = finite_diff_grad(|w| commit(&codebook.coeffs, w), &basis.basis, FD_STEP);
        let mut err = relative_error(g.d_basis.as_ref().unwrap(), &numeric, FD_FLOOR);
        match (&g.d_coeffs, trainable) {
            (Some(dc), true) => {
                let numeric =
                    finite_diff_grad(|c| commit(c, &basis.basis), &codebook.coeffs, FD_STEP);
                err = err.max(relative_error(dc, &numeric, FD_FLOOR));
            }
            (None, false) => {}
            _ => err = f64::INFINITY,
        }
        report.record(err);
        report.instances += 1;
    }
    report
}

fn random_mlp(rng: &mut RngStream) -> Mlp {
    let depth = 1 + rng.index(3);
    let widths: Vec<usize> = (0..=depth).map(|_| 1 + rng.index(16)).collect();
    let layers = widths
        .windows(2)
        .map(|w| Dense {
            weight: normal(rng, w[0], w[1]),
            bias: normal(rng, 1, w[1]),
        })
        .collect();
    Mlp::from_layers(layers).unwrap()
}

fn weighted_sum(a: &Matrix, g: &Matrix) -> f64 {
    a.as_slice()
        .iter()
        .zip(g.as_slice())
        .map(|(x, y)| x * y)
        .sum()
}

/// Backward pass of the tanh MLP for `sum(G * mlp(x))`, all parameters
/// and the input.
pub fn mlp_oracle(instances: usize, seed: u64) -> OracleReport {
    let mut rng = RngStream::new(seed, "oracle-mlp");
    let mut report = OracleReport::default();
    for _ in 0..instances {
        let mlp = random_mlp(&mut rng);
        let b = 1 + rng.index(8);
        let x = normal(&mut rng, b, mlp.input_width());
        let g_out = normal(&mut rng, b, mlp.output_width());
        let (_, cache) = mlp.forward(&x).unwrap();
        let (grads, d_x) = mlp.backward(&cache, &g_out).unwrap();
        let mut err = relative_error(
            &d_x,
            &finite_diff_grad(
                |x| weighted_sum(&mlp.apply(x).unwrap(), &g_out),
                &x,
                FD_STEP,
            ),
            FD_FLOOR,
        );
        for (t, analytic) in grads.tensors().enumerate() {
            let base = mlp.clone();
            let param = base.clone().params_mut().nth(t).unwrap().clone();
            let numeric = finite_diff_grad(
                |p| {
                    let mut m = base.clone();
                    *m.params_mut().nth(t).unwrap() = p.clone();
                    weighted_sum(&m.apply(&x).unwrap(), &g_out)
                },
                &param,
                FD_STEP,
            );
            err = err.max(relative_error(analytic, &numeric, FD_FLOOR));
        }
        report.record(err);
        report.instances += 1;
    }
    report
}

fn effective_codebook(model: &Model) -> Matrix {
    match &model.quantizer {
        QuantizerState::Vanilla { codebook } => codebook.coeffs.clone(),
        QuantizerState::SimVq { codebook, basis } => {
            simvq_effective_codebook(codebook, basis).unwrap()
        }
        other => panic!("no search codebook for {other:?}"),
    }
}

/// Which tensor of a model a finite-difference probe perturbs.
#[derive(Clone, Copy, Debug)]
enum Slot {
    Encoder(usize),
    Decoder(usize),
    Coeffs,
    Basis,
}

fn slot_mut(model: &mut Model, slot: Slot) -> &mut Matrix {
    match (slot, &mut model.quantizer) {
        (Slot::Encoder(t), _) => model.params.encoder.params_mut().nth(t).unwrap(),
        (Slot::Decoder(t), _) => model.params.decoder.params_mut().nth(t).unwrap(),
        (Slot::Coeffs, QuantizerState::Vanilla { codebook })
        | (Slot::Coeffs, QuantizerState::SimVq { codebook, .. }) => &mut codebook.coeffs,
        (Slot::Basis, QuantizerState::SimVq { basis, .. }) => &mut basis.basis,
        (slot, q) => panic!("{slot:?} not present in {q:?}"),
    }
}

/// Config for one random end-to-end instance.
pub fn random_train_config(rng: &mut RngStream, variant: usize) -> TrainConfig {
    let (_, k, d) = dims(rng);
    let mut cfg = TrainConfig {
        codebook_size: k,
        latent_dim: d,
        hidden_width: 1 + rng.index(16),
        beta_enc: rng.uniform(0.25, 2.0),
        beta_code: rng.uniform(0.25, 2.0),
        seed: rng.index(1 << 30) as u64,
        basis_init: BasisInit::Linear,
        ..TrainConfig::default()
    };
    cfg.dataset.dim = 1 + rng.index(16);
    match variant % 3 {
        0 => {
            cfg.quantizer = QuantizerKind::Vanilla;
            cfg.codebook_frozen = false;
        }
        1 => {
            cfg.quantizer = QuantizerKind::SimVq;
            cfg.codebook_frozen = true;
        }
        _ => {
            cfg.quantizer = QuantizerKind::SimVq;
            cfg.codebook_frozen = false;
        }
    }
    cfg
}

/// Every gradient produced by one full training step, checked against the
/// straight-through surrogate
///
/// `MSE(x, dec(z_e + sg(q - z_e))) + beta_enc mean ||z_e - sg(q)||^2
///  + beta_code mean ||sg(z_e) - q||^2`
///
/// with `sg(.)` terms and code assignments frozen at the base point.
pub fn train_step_oracle(instances: usize, seed: u64) -> OracleReport {
    let mut rng = RngStream::new(seed, "oracle-train-step");
    let mut report = OracleReport::default();
    for i in 0..instances {
        let cfg = random_train_config(&mut rng, i);
        let model = Model::init(&cfg).unwrap();
        let b = 1 + rng.index(8);
        let x = normal(&mut rng, b, cfg.dataset.dim);
        let out = loss_and_grads(&model, &x, &cfg).unwrap();
        let z0 = out.z_e.clone();
        let q0 = effective_codebook(&model).select_rows(&out.indices);
        let shift = q0.sub(&z0).unwrap();
        let n = b as f64;

        let surrogate = |m: &Model| {
            let z = m.params.encoder.apply(&x).unwrap();
            let x_hat = m.params.decoder.apply(&z.add(&shift).unwrap()).unwrap();
            let rec = x_hat.sub(&x).unwrap().sum_squares() / x.len() as f64;
            let enc = z.sub(&q0).unwrap().sum_squares() / n;
            let q = effective_codebook(m).select_rows(&out.indices);
            let code = z0.sub(&q).unwrap().sum_squares() / n;
            rec + cfg.beta_enc * enc + cfg.beta_code * code
        };
        assert!((surrogate(&model) - out.losses.total).abs() <= 1e-12 * out.losses.total.max(1.0));

        let mut checks: Vec<(Slot, &Matrix)> = Vec::new();
        for (t, g) in out.grads.encoder.tensors().enumerate() {
            checks.push((Slot::Encoder(t), g));
        }
        for (t, g) in out.grads.decoder.tensors().enumerate() {
            checks.push((Slot::Decoder(t), g));
        }
        if let Some(g) = &out.grads.coeffs {
            checks.push((Slot::Coeffs, g));
        }
        if let Some(g) = &out.grads.basis {
            checks.push((Slot::Basis, g));
        }
        let expect_coeffs = !cfg.codebook_frozen;
        let expect_basis = cfg.quantizer == QuantizerKind::SimVq;
        let mut err: f64 = if out.grads.coeffs.is_some() == expect_coeffs
            && out.grads.basis.is_some() == expect_basis
        {
            0.0
        } else {
            f64::INFINITY
        };
        for (slot, analytic) in checks {
            let mut probe = model.clone();
            let param = slot_mut(&mut probe, slot).clone();
            let numeric = finite_diff_grad(
                |p| {
                    let mut m = model.clone();
                    *slot_mut(&mut m, slot) = p.clone();
                    surrogate(&m)
                },
                &param,
                FD_STEP,
            );
            err = err.max(relative_error(analytic, &numeric, FD_FLOOR));
        }
        report.record(err);
        report.instances += 1;
    }
    report
}
