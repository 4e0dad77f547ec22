//! Reproducing identities of the projection kernel on exact product rules.

use spheredpp::kernel::{kernel_residuals, KernelSpec};

fn main() -> spheredpp::error::Result<()> {
    for d in [2, 3] {
        for n in [2, 5, 10] {
            let spec = KernelSpec::new(d, n)?;
            let r = kernel_residuals(&spec, n + 4, 10, 1)?;
            println!(
                "d = {d}, n = {n:2}, k_n = {:4}: HS {:.1e}, reproducing {:.1e}, orthogonality {:.1e}",
                spec.k_n, r.hilbert_schmidt, r.reproducing, r.orthogonality
            );
        }
    }
    Ok(())
}
