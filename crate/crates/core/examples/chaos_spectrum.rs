//! Eigenvalues of the h-hat operator by Funk-Hecke and by Nystrom.

use spheredpp::chaos::{hs_reference, spectrum, SpectralMethod, SpectrumOptions};
use spheredpp::stats::ZonalProfile;

fn main() -> spheredpp::error::Result<()> {
    let g = ZonalProfile::indicator(2, 0.8);
    let opts = SpectrumOptions::default();
    let fh = spectrum(&g, SpectralMethod::FunkHecke, &opts)?;
    let ny = spectrum(&g, SpectralMethod::Nystrom, &opts)?;
    println!("{:>3} {:>16} {:>16}", "j", "funk-hecke", "nystrom");
    for (j, (a, b)) in fh.top(10).iter().zip(ny.top(10)).enumerate() {
        println!("{j:3} {a:16.10} {b:16.10}");
    }
    println!("sum z^2 = {:.8}, int int h^2 = {:.8}", fh.hs_norm_sq, hs_reference(&g));
    Ok(())
}
