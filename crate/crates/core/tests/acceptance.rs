//! Acceptance runner: one PASS/FAIL line per criterion.
//!
//! Runs without the libtest harness so every line is printed even when an
//! earlier criterion fails. Exits non-zero if any criterion fails.

mod common;

use std::collections::BTreeMap;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use vqlab::cli::{metrics_csv, toy_csv};
use vqlab::dynamics::{compare_joint_vs_basis, run_basis_limit, run_toy, ToySpec, ToyVariant};
use vqlab::metrics::MetricsRow;
use vqlab::numerics::{gaussian_sample, Matrix, RngStream};
use vqlab::quantizers::{
    simvq_effective_codebook, simvq_w_grad, ste_quantize, vanilla_codebook_grad, Codebook,
    CodebookInit, LatentBasis,
};
use vqlab::training::{
    loss_and_grads, run_training, train_step, Model, OptimizerState, QuantizerState, TrainConfig,
};

const SEEDS: [u64; 3] = [1, 2, 3];
const UTIL_MIN: f64 = 0.90;

struct Outcome {
    id: u8,
    name: &'static str,
    checks: Vec<(String, bool)>,
    elapsed: Duration,
}

impl Outcome {
    fn new(id: u8, name: &'static str) -> Self {
        Self {
            id,
            name,
            checks: Vec::new(),
            elapsed: Duration::ZERO,
        }
    }

    fn check(&mut self, ok: bool, detail: impl Into<String>) {
        self.checks.push((detail.into(), ok));
    }

    fn passed(&self) -> bool {
        !self.checks.is_empty() && self.checks.iter().all(|(_, ok)| *ok)
    }

    fn line(&self) -> String {
        let parts: Vec<String> = self
            .checks
            .iter()
            .map(|(d, ok)| format!("{}{d}", if *ok { "" } else { "FAILED " }))
            .collect();
        format!(
            "criterion {:>2} {}: {} [{:.1}s] {}",
            self.id,
            if self.passed() { "PASS" } else { "FAIL" },
            self.name,
            self.elapsed.as_secs_f64(),
            parts.join("; ")
        )
    }
}

/// Benchmark variants on the collapse benchmark.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
enum Variant {
    Vanilla,
    GaussianFrozen,
    UniformFrozen,
    GaussianTrainable,
}

fn bench_config(variant: Variant, k: usize, seed: u64) -> TrainConfig {
    let mut cfg = match variant {
        Variant::Vanilla => TrainConfig::vanilla(),
        Variant::GaussianFrozen => TrainConfig::simvq(),
        Variant::UniformFrozen => TrainConfig {
            codebook_init: CodebookInit::Uniform,
            ..TrainConfig::simvq()
        },
        Variant::GaussianTrainable => TrainConfig {
            codebook_frozen: false,
            ..TrainConfig::simvq()
        },
    };
    cfg.codebook_size = k;
    cfg.seed = seed;
    cfg
}

/// Memoized benchmark runs with their wall time.
#[derive(Default)]
struct Bench {
    runs: BTreeMap<(Variant, usize, u64), (Vec<MetricsRow>, Duration)>,
}

impl Bench {
    fn get(&mut self, variant: Variant, k: usize, seed: u64) -> (MetricsRow, Duration) {
        let (rows, time) = self.runs.entry((variant, k, seed)).or_insert_with(|| {
            let start = Instant::now();
            let rows = run_training(&bench_config(variant, k, seed)).expect("benchmark run");
            (rows, start.elapsed())
        });
        (rows.last().expect("at least one epoch").clone(), *time)
    }
}

fn criterion_1() -> Outcome {
    let mut o = Outcome::new(
        1,
        "gradient oracles vs central differences (rel err < 1e-4)",
    );
    let start = Instant::now();
    let n = 24;
    for (name, report) in [
        ("ste", common::ste_oracle(n, 101)),
        ("vanilla", common::vanilla_oracle(n, 102)),
        ("simvq", common::simvq_oracle(n, 103)),
        ("mlp", common::mlp_oracle(n, 104)),
        ("train_step", common::train_step_oracle(n, 105)),
    ] {
        o.check(
            report.passed() && report.instances >= 20,
            format!("{name} {:.1e} over {}", report.worst, report.instances),
        );
    }
    o.elapsed = start.elapsed();
    o.check(o.elapsed < Duration::from_secs(60), "under 1 min");
    o
}

/// 500 vanilla steps with codes 2.. parked far from the data.
fn disjoint_run() -> (Matrix, Matrix, Vec<bool>) {
    let cfg = TrainConfig::vanilla();
    let data = cfg.dataset.generate(cfg.seed).expect("dataset");
    let mut model = Model::init(&cfg).expect("model");
    if let QuantizerState::Vanilla { codebook } = &mut model.quantizer {
        for j in 2..codebook.size() {
            for v in codebook.coeffs.row_mut(j) {
                *v += 100.0;
            }
        }
    }
    let initial = model.quantizer.codebook().unwrap().coeffs.clone();
    let mut opt = OptimizerState::new(cfg.optimizer, cfg.eta).unwrap();
    let mut selected = vec![false; cfg.codebook_size];
    let n = data.train.rows();
    for step in 0..500 {
        let rows: Vec<usize> = (0..cfg.batch_size)
            .map(|i| (step * cfg.batch_size + i) % n)
            .collect();
        let batch = data.train.select_rows(&rows);
        let out = loss_and_grads(&model, &batch, &cfg).unwrap();
        for &k in &out.indices {
            selected[k] = true;
        }
        train_step(&mut model, &mut opt, &batch, &cfg).unwrap();
    }
    let last = model.quantizer.codebook().unwrap().coeffs.clone();
    (initial, last, selected)
}

fn criterion_2() -> (Outcome, (Matrix, Matrix, Vec<bool>)) {
    let mut o = Outcome::new(2, "unselected vanilla codes bit-identical after 500 steps");
    let start = Instant::now();
    let run = disjoint_run();
    o.elapsed = start.elapsed();
    let (initial, last, selected) = &run;
    let ever: Vec<usize> = (0..selected.len()).filter(|&j| selected[j]).collect();
    o.check(ever == [0, 1], format!("selected codes {ever:?}"));
    let frozen = (2..initial.rows()).all(|j| initial.row(j) == last.row(j));
    o.check(frozen, format!("codes 2..{} unchanged", initial.rows() - 1));
    o.check(
        initial.row(0) != last.row(0) && initial.row(1) != last.row(1),
        "codes 0, 1 moved",
    );
    o.check(o.elapsed < Duration::from_secs(1), "under 1 s");
    (o, run)
}

fn toy_spec(variant: ToyVariant) -> ToySpec {
    ToySpec {
        variant,
        seed: 7,
        steps: 2000,
        eta: 0.01,
        ..ToySpec::default()
    }
}

fn criterion_3() -> Outcome {
    let mut o = Outcome::new(
        3,
        "toy: only selected points move (vanilla), all move (basis-only)",
    );
    let start = Instant::now();
    let t0 = Instant::now();
    let vanilla = run_toy(&toy_spec(ToyVariant::Vanilla)).unwrap();
    let vanilla_time = t0.elapsed();
    let disp = vanilla.displacements();
    let exact = disp
        .iter()
        .zip(&vanilla.ever_selected)
        .all(|(&d, &sel)| if sel { d > 1e-6 } else { d == 0.0 });
    let moved = disp.iter().filter(|&&d| d > 0.0).count();
    let sel = vanilla.ever_selected.iter().filter(|&&s| s).count();
    o.check(exact, format!("vanilla moved {moved}, selected {sel}"));

    let t0 = Instant::now();
    let basis = run_toy(&toy_spec(ToyVariant::BasisOnly)).unwrap();
    let basis_time = t0.elapsed();
    let min_disp = basis
        .displacements()
        .into_iter()
        .fold(f64::INFINITY, f64::min);
    o.check(
        min_disp > 1e-3,
        format!("basis-only min displacement {min_disp:.3}"),
    );
    o.check(
        basis.final_loss() < 0.1 * basis.initial_loss(),
        format!(
            "basis-only loss {:.3} -> {:.2e}",
            basis.initial_loss(),
            basis.final_loss()
        ),
    );
    o.elapsed = start.elapsed();
    o.check(
        vanilla_time < Duration::from_secs(1) && basis_time < Duration::from_secs(1),
        "under 1 s each",
    );
    o
}

fn criterion_4() -> Outcome {
    let mut o = Outcome::new(
        4,
        "toy: joint keeps w nearly fixed and fits at least as well",
    );
    let start = Instant::now();
    let cmp = compare_joint_vs_basis(7, 2000, 0.01).unwrap();
    o.elapsed = start.elapsed();
    o.check(
        cmp.joint.basis_drift < 0.5 * cmp.basis_only.basis_drift,
        format!(
            "drift joint {:.4} < 0.5 x basis-only {:.4}",
            cmp.joint.basis_drift, cmp.basis_only.basis_drift
        ),
    );
    o.check(
        cmp.joint.final_loss <= cmp.basis_only.final_loss,
        format!(
            "final loss joint {:.3e} <= basis-only {:.3e}",
            cmp.joint.final_loss, cmp.basis_only.final_loss
        ),
    );
    o.check(o.elapsed < Duration::from_secs(1), "under 1 s");
    o
}

fn criterion_5(bench: &mut Bench) -> Outcome {
    let mut o = Outcome::new(
        5,
        "collapse benchmark K=1024: vanilla collapses, SimVQ does not",
    );
    let mut total = Duration::ZERO;
    for seed in SEEDS {
        let (v, tv) = bench.get(Variant::Vanilla, 1024, seed);
        let (s, ts) = bench.get(Variant::GaussianFrozen, 1024, seed);
        total += tv + ts;
        o.check(
            v.utilization < 0.15,
            format!("seed {seed} vanilla util {:.4} < 0.15", v.utilization),
        );
        o.check(
            s.utilization > UTIL_MIN,
            format!("seed {seed} simvq util {:.4} > 0.90", s.utilization),
        );
        o.check(
            s.mse <= v.mse,
            format!("seed {seed} mse simvq {:.4} <= vanilla {:.4}", s.mse, v.mse),
        );
    }
    o.elapsed = total;
    o.check(total < Duration::from_secs(300), "under 5 min");
    o
}

fn criterion_6(bench: &mut Bench) -> Outcome {
    let mut o = Outcome::new(
        6,
        "SimVQ mse non-increasing in K (5% band), util > 0.90 at every K",
    );
    let sizes = [64, 256, 1024];
    let mut total = Duration::ZERO;
    for seed in SEEDS {
        let mut rows = Vec::new();
        for k in sizes {
            let (r, t) = bench.get(Variant::GaussianFrozen, k, seed);
            total += t;
            rows.push(r);
        }
        let mono = rows.windows(2).all(|w| w[1].mse <= 1.05 * w[0].mse);
        o.check(
            mono,
            format!(
                "seed {seed} mse {:.4}/{:.4}/{:.4}",
                rows[0].mse, rows[1].mse, rows[2].mse
            ),
        );
        for (k, r) in sizes.iter().zip(&rows) {
            o.check(
                r.utilization > UTIL_MIN,
                format!("seed {seed} K={k} util {:.4}", r.utilization),
            );
        }
    }
    o.elapsed = total;
    o.check(total < Duration::from_secs(600), "under 10 min");
    o
}

/// Single code, single latent, plain gradient descent on `W` at eta 0.1.
fn limit_instance() -> (Codebook, Matrix) {
    let d = TrainConfig::default().latent_dim;
    let codebook = Codebook::sample(
        &mut RngStream::new(1, "codebook-init"),
        1,
        d,
        CodebookInit::Gaussian,
        true,
    )
    .unwrap();
    let z_e = gaussian_sample(&mut RngStream::new(1, "latent"), 1, d, 0.0, 1.0).unwrap();
    (codebook, z_e)
}

fn limit_residuals() -> Result<Vec<f64>, String> {
    let (codebook, z_e) = limit_instance();
    let d = codebook.dim();
    run_basis_limit(&codebook, LatentBasis::identity(d), &z_e, 0.1, 10_000, 1e-6)
        .map(|t| t.residuals)
        .map_err(|e| e.to_string())
}

fn criterion_7() -> Outcome {
    let mut o = Outcome::new(
        7,
        "K=1 basis descent reaches the latent (|q W - z| < 1e-6 in 1e4 steps)",
    );
    let start = Instant::now();
    let (codebook, _) = limit_instance();
    let gain = 0.1 * codebook.coeffs.sum_squares();
    let result = limit_residuals();
    o.elapsed = start.elapsed();
    match result {
        Ok(res) => {
            let last = res[res.len() - 1];
            o.check(
                last < 1e-6,
                format!(
                    "residual {last:.2e} after {} steps (eta |c|^2 = {gain:.3})",
                    res.len() - 1
                ),
            );
        }
        Err(e) => o.check(
            false,
            format!("{e} (eta |c|^2 = {gain:.3}, step unstable above 1)"),
        ),
    }
    o.check(o.elapsed < Duration::from_secs(1), "under 1 s");
    o
}

fn criterion_8(bench: &mut Bench) -> Outcome {
    let mut o = Outcome::new(
        8,
        "initialization ablation: uniform/gaussian frozen, gaussian trainable",
    );
    let mut total = Duration::ZERO;
    for seed in SEEDS {
        let (g, tg) = bench.get(Variant::GaussianFrozen, 1024, seed);
        let (u, tu) = bench.get(Variant::UniformFrozen, 1024, seed);
        let (t, tt) = bench.get(Variant::GaussianTrainable, 1024, seed);
        total += tg + tu + tt;
        o.check(
            g.utilization > UTIL_MIN && u.utilization > UTIL_MIN,
            format!(
                "seed {seed} util gaussian {:.4} uniform {:.4}",
                g.utilization, u.utilization
            ),
        );
        let rel = (u.mse - g.mse).abs() / g.mse;
        o.check(
            rel <= 0.10,
            format!("seed {seed} mse gap {:.1}%", 100.0 * rel),
        );
        o.check(
            t.utilization > UTIL_MIN,
            format!("seed {seed} trainable util {:.4}", t.utilization),
        );
    }
    o.elapsed = total;
    o
}

fn criterion_9() -> Outcome {
    let mut o = Outcome::new(
        9,
        "codebook-path gradient buffers: d^2 (SimVQ) vs K*d (vanilla)",
    );
    let start = Instant::now();
    let (k, d, b) = (1024, 8, 32);
    let z_e = gaussian_sample(&mut RngStream::new(9, "z"), b, d, 0.0, 1.0).unwrap();
    let frozen = Codebook::sample(
        &mut RngStream::new(9, "c"),
        k,
        d,
        CodebookInit::Gaussian,
        true,
    )
    .unwrap();
    let basis =
        LatentBasis::new(gaussian_sample(&mut RngStream::new(9, "w"), d, d, 0.0, 0.3).unwrap())
            .unwrap();
    let eff = simvq_effective_codebook(&frozen, &basis).unwrap();
    let r = ste_quantize(&z_e, &eff, 1.0, 1.0).unwrap();
    let g = simvq_w_grad(&r, &z_e, &frozen, &basis).unwrap();
    o.check(
        g.trainable_entries() == d * d && g.d_coeffs.is_none(),
        format!("simvq {} entries", g.trainable_entries()),
    );
    let trainable = Codebook {
        frozen: false,
        ..frozen
    };
    let r = ste_quantize(&z_e, &trainable.coeffs, 1.0, 1.0).unwrap();
    let g = vanilla_codebook_grad(&r, &z_e, &trainable).unwrap();
    o.check(
        g.trainable_entries() == k * d && g.d_basis.is_none(),
        format!("vanilla {} entries", g.trainable_entries()),
    );

    // the same through a full training step, including optimizer state
    for (cfg, want) in [
        (TrainConfig::simvq(), d * d),
        (TrainConfig::vanilla(), k * d),
    ] {
        let model = Model::init(&cfg).unwrap();
        let x = gaussian_sample(&mut RngStream::new(9, "x"), b, cfg.dataset.dim, 0.0, 1.0).unwrap();
        let out = loss_and_grads(&model, &x, &cfg).unwrap();
        let path = out.grads.coeffs.as_ref().map_or(0, Matrix::len)
            + out.grads.basis.as_ref().map_or(0, Matrix::len);
        let mut model = model;
        let mut opt = OptimizerState::new(cfg.optimizer, cfg.eta).unwrap();
        train_step(&mut model, &mut opt, &x, &cfg).unwrap();
        let mlp_slots = 2 * (model.params.encoder.layers.len() + model.params.decoder.layers.len());
        let moments: usize = opt.moment_lengths()[mlp_slots..].iter().flatten().sum();
        o.check(
            path == want && moments == want,
            format!(
                "{} step grads {path}, moments {moments}",
                cfg.quantizer.name()
            ),
        );
    }
    o.elapsed = start.elapsed();
    o
}

fn criterion_10(bench: &Bench, disjoint: &(Matrix, Matrix, Vec<bool>)) -> Outcome {
    let mut o = Outcome::new(10, "reruns produce byte-identical CSV");
    let start = Instant::now();
    let mut same = 0;
    let mut differ = Vec::new();
    for (&(variant, k, seed), (rows, _)) in &bench.runs {
        let again = run_training(&bench_config(variant, k, seed)).unwrap();
        if metrics_csv(rows) == metrics_csv(&again) {
            same += 1;
        } else {
            differ.push(format!("{variant:?} K={k} seed {seed}"));
        }
    }
    o.check(
        differ.is_empty(),
        format!(
            "{same}/{} benchmark runs{}",
            bench.runs.len(),
            if differ.is_empty() {
                String::new()
            } else {
                format!(" differ: {differ:?}")
            }
        ),
    );
    let toys = [
        ToyVariant::Vanilla,
        ToyVariant::BasisOnly,
        ToyVariant::Joint,
    ];
    let toy_same = toys.iter().all(|&v| {
        let a = toy_csv(&run_toy(&toy_spec(v)).unwrap());
        let b = toy_csv(&run_toy(&toy_spec(v)).unwrap());
        a == b
    });
    o.check(toy_same, "3/3 toy traces");
    o.check(disjoint_run() == *disjoint, "disjoint-update run");
    let residual_text = |r: Result<Vec<f64>, String>| match r {
        Ok(v) => v
            .iter()
            .map(|x| vqlab::cli::format_float(*x))
            .collect::<Vec<_>>()
            .join("\n"),
        Err(e) => e,
    };
    o.check(
        residual_text(limit_residuals()) == residual_text(limit_residuals()),
        "basis-limit trace",
    );
    o.elapsed = start.elapsed();
    o
}

fn main() -> ExitCode {
    let mut outcomes = Vec::new();
    let mut emit = |o: Outcome| {
        println!("{}", o.line());
        outcomes.push(o.passed());
    };
    emit(criterion_1());
    let (c2, disjoint) = criterion_2();
    emit(c2);
    emit(criterion_3());
    emit(criterion_4());
    let mut bench = Bench::default();
    emit(criterion_5(&mut bench));
    emit(criterion_6(&mut bench));
    emit(criterion_7());
    emit(criterion_8(&mut bench));
    emit(criterion_9());
    emit(criterion_10(&bench, &disjoint));
    let passed = outcomes.iter().filter(|&&p| p).count();
    println!("acceptance: {passed}/{} criteria passed", outcomes.len());
    if passed == outcomes.len() {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
