//! With one frozen code and one fixed latent, gradient descent on the basis
//! alone drives the code onto the latent.
//!
//! ```text
//! cargo run --release --example convergence_limit -- [dim] [seed]
//! ```

use vqlab::dynamics::run_basis_limit;
use vqlab::numerics::{gaussian_sample, RngStream};
use vqlab::quantizers::{Codebook, CodebookInit, LatentBasis};
use vqlab::VqError;

fn main() -> vqlab::Result<()> {
    let mut args = std::env::args().skip(1);
    let dim: usize = args.next().map_or(8, |s| s.parse().expect("dim"));
    let seed: u64 = args.next().map_or(1, |s| s.parse().expect("seed"));
    let eta = 0.1;

    let codebook = Codebook::sample(
        &mut RngStream::new(seed, "codebook-init"),
        1,
        dim,
        CodebookInit::Gaussian,
        true,
    )?;
    let z_e = gaussian_sample(&mut RngStream::new(seed, "latent"), 1, dim, 0.0, 1.0)?;
    let c_sq: f64 = codebook.coeffs.sum_squares();
    println!(
        "|c|^2 = {c_sq:.4}, contraction factor |1 - 2 eta |c|^2| = {:.4}",
        (1.0 - 2.0 * eta * c_sq).abs()
    );

    if eta * c_sq >= 1.0 {
        println!("eta |c|^2 >= 1: plain gradient descent diverges at this step size");
    }
    let trace = match run_basis_limit(
        &codebook,
        LatentBasis::identity(dim),
        &z_e,
        eta,
        10_000,
        1e-6,
    ) {
        Ok(t) => t,
        Err(VqError::NonFinite { step, .. }) => {
            println!("residual overflowed after {step} steps");
            return Ok(());
        }
        Err(e) => return Err(e),
    };
    for (step, r) in trace.residuals.iter().enumerate().take(10) {
        println!("step {step:>3}  |c W - z| = {r:.3e}");
    }
    match trace.steps_to_tol {
        Some(n) => println!("below 1e-6 after {n} steps"),
        None => println!(
            "not converged, final residual {:.3e}",
            trace.final_residual()
        ),
    }
    Ok(())
}
