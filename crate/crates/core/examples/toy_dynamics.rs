//! Ten points in the plane chase two noisy targets under three objectives.
//!
//! ```text
//! cargo run --release --example toy_dynamics -- [seed] [out_dir]
//! ```
//!
//! With an output directory, each trace is written as
//! `step,point_id,x,y,loss,w_fro` CSV.

use std::path::PathBuf;

use vqlab::cli::emit_toy_csv;
use vqlab::dynamics::{compare_joint_vs_basis, run_toy, ToySpec, ToyVariant};

fn main() -> vqlab::Result<()> {
    let mut args = std::env::args().skip(1);
    let seed: u64 = args.next().map_or(7, |s| s.parse().expect("seed"));
    let out: Option<PathBuf> = args.next().map(PathBuf::from);

    for variant in [
        ToyVariant::Vanilla,
        ToyVariant::BasisOnly,
        ToyVariant::Joint,
    ] {
        let spec = ToySpec {
            variant,
            seed,
            ..ToySpec::default()
        };
        let trace = run_toy(&spec)?;
        let moved = trace.displacements().iter().filter(|&&d| d > 0.0).count();
        let selected = trace.ever_selected.iter().filter(|&&s| s).count();
        println!(
            "{variant:<10}  loss {:.4} -> {:.2e}  points moved {moved}/10 (selected {selected})  |w - w0|_F {:.4}",
            trace.initial_loss(),
            trace.final_loss(),
            trace.basis_drift()
        );
        if let Some(dir) = &out {
            emit_toy_csv(&trace, &dir.join(format!("toy_{variant}.csv")))?;
        }
    }

    let s = ToySpec::default();
    let cmp = compare_joint_vs_basis(seed, s.steps, s.eta)?;
    println!(
        "basis drift: joint {:.4} vs basis-only {:.4}",
        cmp.joint.basis_drift, cmp.basis_only.basis_drift
    );
    Ok(())
}
