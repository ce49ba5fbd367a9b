//! EMA, FSQ, LFQ and the low-dimensional normalized ("FC") quantizer on the
//! same benchmark.
//!
//! ```text
//! cargo run --release --example baselines -- [epochs]
//! ```

use vqlab::quantizers::FsqLevels;
use vqlab::training::{run_training, QuantizerKind, TrainConfig};

fn main() -> vqlab::Result<()> {
    let epochs: usize = std::env::args()
        .nth(1)
        .map_or(20, |s| s.parse().expect("epochs"));
    let quantizers = [
        QuantizerKind::Ema { decay: 0.99 },
        QuantizerKind::Fsq {
            levels: FsqLevels::new(vec![4, 4, 2, 2, 2, 2, 2, 2])?,
        },
        QuantizerKind::Lfq,
        QuantizerKind::Fc { dim: 8 },
    ];
    println!("quantizer  codes  util    perplexity  mse");
    for quantizer in quantizers {
        let cfg = TrainConfig {
            quantizer,
            epochs,
            ..TrainConfig::default()
        };
        let last = run_training(&cfg)?.pop().expect("at least one epoch");
        println!(
            "{:<9}  {:>5}  {:.4}  {:>10.2}  {:.5}",
            cfg.quantizer.name(),
            cfg.effective_codebook_size(),
            last.utilization,
            last.perplexity,
            last.mse
        );
    }
    Ok(())
}
