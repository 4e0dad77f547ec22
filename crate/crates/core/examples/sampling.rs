//! Exact draws from the projection DPP and their rejection cost.

use spheredpp::kernel::KernelSpec;
use spheredpp::sampler::{sample_many, SamplerOptions};

fn main() -> spheredpp::error::Result<()> {
    let spec = KernelSpec::new(2, 6)?;
    let draws = sample_many(&spec, 42, 1000, &SamplerOptions::default())?;
    let rejections: u64 = draws.iter().map(|c| c.rejection_count).sum();
    println!("{} draws of {} points, {:.2} rejections per draw", draws.len(), spec.k_n, rejections as f64 / draws.len() as f64);
    let mut closest = f64::INFINITY;
    for c in &draws {
        for (i, x) in c.points.iter().enumerate() {
            for y in &c.points[i + 1..] {
                closest = closest.min(x.distance(y));
            }
        }
    }
    println!("smallest pair distance over all draws: {closest:.4}");
    draws[0].write_to(std::io::stdout())?;
    Ok(())
}
