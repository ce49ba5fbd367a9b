//! Checks the analytic codebook and basis gradients against central finite
//! differences on a random instance.
//!
//! ```text
//! cargo run --release --example gradient_check -- [seed]
//! ```

use vqlab::numerics::{finite_diff_grad, gaussian_sample, relative_error, RngStream};
use vqlab::quantizers::{
    simvq_effective_codebook, simvq_w_grad, ste_quantize, vanilla_codebook_grad, Codebook,
    CodebookInit, LatentBasis,
};

fn main() -> vqlab::Result<()> {
    let seed: u64 = std::env::args()
        .nth(1)
        .map_or(1, |s| s.parse().expect("seed"));
    let (b, k, d) = (6, 16, 4);
    let z_e = gaussian_sample(&mut RngStream::new(seed, "z"), b, d, 0.0, 1.0)?;
    let codebook = Codebook::sample(
        &mut RngStream::new(seed, "c"),
        k,
        d,
        CodebookInit::Gaussian,
        false,
    )?;
    let basis = LatentBasis::new(gaussian_sample(
        &mut RngStream::new(seed, "w"),
        d,
        d,
        0.0,
        0.5,
    )?)?;

    // plain codebook: commit_codebook as a function of C, assignments held fixed
    let r = ste_quantize(&z_e, &codebook.coeffs, 1.0, 1.0)?;
    let analytic = vanilla_codebook_grad(&r, &z_e, &codebook)?
        .d_coeffs
        .expect("trainable");
    let numeric = finite_diff_grad(
        |c| {
            let q = c.select_rows(&r.indices);
            q.sub(&z_e).unwrap().sum_squares() / b as f64
        },
        &codebook.coeffs,
        1e-5,
    );
    println!(
        "codebook grad  rel err {:.2e}",
        relative_error(&analytic, &numeric, 1e-12)
    );

    // reparameterized codebook: gradient with respect to W
    let eff = simvq_effective_codebook(&codebook, &basis)?;
    let r = ste_quantize(&z_e, &eff, 1.0, 1.0)?;
    let analytic = simvq_w_grad(&r, &z_e, &codebook, &basis)?
        .d_basis
        .expect("basis");
    let c_sel = codebook.coeffs.select_rows(&r.indices);
    let numeric = finite_diff_grad(
        |w| c_sel.matmul(w).unwrap().sub(&z_e).unwrap().sum_squares() / b as f64,
        &basis.basis,
        1e-5,
    );
    println!(
        "basis grad     rel err {:.2e}",
        relative_error(&analytic, &numeric, 1e-12)
    );
    println!(
        "nonzero basis-grad entries: {}/{}",
        analytic.as_slice().iter().filter(|&&g| g != 0.0).count(),
        analytic.len()
    );
    Ok(())
}
