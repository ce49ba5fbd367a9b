//! Trains the reparameterized codebook at several sizes in parallel.
//!
//! ```text
//! VQLAB_THREADS=3 cargo run --release --example codebook_size_sweep -- [sizes...]
//! ```

use rayon::prelude::*;

use vqlab::training::{run_training, TrainConfig};

fn main() -> vqlab::Result<()> {
    let mut sizes: Vec<usize> = std::env::args()
        .skip(1)
        .map(|s| s.parse().expect("codebook size"))
        .collect();
    if sizes.is_empty() {
        sizes = vec![64, 256, 1024];
    }
    let threads = vqlab::cli::sweep_threads()?.unwrap_or(0);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .expect("thread pool");
    let results: Vec<_> = pool.install(|| {
        sizes
            .par_iter()
            .map(|&k| {
                let cfg = TrainConfig {
                    codebook_size: k,
                    ..TrainConfig::simvq()
                };
                run_training(&cfg).map(|rows| (k, rows))
            })
            .collect()
    });
    println!("     K    util    perplexity  rank  mse");
    for r in results {
        let (k, rows) = r?;
        let last = rows.last().expect("at least one epoch");
        println!(
            "{k:>6}  {:.4}  {:>10.2}  {:>4}  {:.5}",
            last.utilization, last.perplexity, last.w_rank, last.mse
        );
    }
    Ok(())
}
