//! Plain VQ against the reparameterized codebook on the 16-mode mixture.
//!
//! ```text
//! cargo run --release --example collapse_benchmark -- [codebook_size] [epochs] [seed]
//! ```
//!
//! Plain VQ strands most of its codes; the reparameterized codebook keeps
//! nearly all of them in use.

use vqlab::training::{TrainConfig, Trainer};

fn main() -> vqlab::Result<()> {
    let mut args = std::env::args().skip(1);
    let k: usize = args
        .next()
        .map_or(1024, |s| s.parse().expect("codebook size"));
    let epochs: usize = args.next().map_or(50, |s| s.parse().expect("epochs"));
    let seed: u64 = args.next().map_or(1, |s| s.parse().expect("seed"));

    for (name, mut cfg) in [
        ("vanilla", TrainConfig::vanilla()),
        ("simvq", TrainConfig::simvq()),
    ] {
        cfg.codebook_size = k;
        cfg.epochs = epochs;
        cfg.seed = seed;
        let mut trainer = Trainer::new(cfg)?;
        println!("{name}  K={k}");
        println!("  epoch  util    perplexity  rank  |W|_F    mse");
        for _ in 0..epochs {
            trainer.run_epoch()?;
            let m = trainer.metrics()?;
            if m.epoch % 10 == 0 || m.epoch == 1 || m.epoch == epochs {
                println!(
                    "  {:>5}  {:.4}  {:>10.2}  {:>4}  {:>7.4}  {:.5}",
                    m.epoch, m.utilization, m.perplexity, m.w_rank, m.w_fro, m.mse
                );
            }
        }
    }
    Ok(())
}
