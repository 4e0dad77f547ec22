//! Asymptotic mean and variance predictions in both regimes.

use spheredpp::chaos::{spectrum, SpectralMethod, SpectrumOptions};
use spheredpp::kernel::KernelSpec;
use spheredpp::sphere::{product_quadrature, SpherePoint};
use spheredpp::stats::TestFunction;
use spheredpp::theory::{chaos_profile, is_degenerate, predicted_mean, predicted_variance_chaos, predicted_variance_clt};

fn main() -> spheredpp::error::Result<()> {
    let quad = product_quadrature(2, 32)?;
    let cap = TestFunction::cap_indicator(SpherePoint::north_pole(2), 1.0)?;
    let pair = TestFunction::pair_indicator(2, 0.8)?;
    let g = chaos_profile(&pair, &quad)?;
    let z = spectrum(&g, SpectralMethod::FunkHecke, &SpectrumOptions::default())?;
    println!("cap degenerate: {}, pair degenerate: {}", is_degenerate(&cap, &quad)?, is_degenerate(&pair, &quad)?);
    for n in [8, 16, 32] {
        let spec = KernelSpec::new(2, n)?;
        println!(
            "n = {n:2}: cap mean {:8.3} var {:7.3} | pair mean {:9.3} var {:9.3}",
            predicted_mean(&cap, &spec, &quad)?,
            predicted_variance_clt(&cap, &spec, &quad)?,
            predicted_mean(&pair, &spec, &quad)?,
            predicted_variance_chaos(&pair, &spec, &z, &quad)?
        );
    }
    Ok(())
}
