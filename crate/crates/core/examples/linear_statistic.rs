//! Monte Carlo moments of cap, pair and triangle statistics.

use spheredpp::harness::empirical_cumulants;
use spheredpp::kernel::KernelSpec;
use spheredpp::sampler::{map_replicates, SamplerOptions};
use spheredpp::sphere::SpherePoint;
use spheredpp::stats::{evaluate_config, TestFunction};

fn main() -> spheredpp::error::Result<()> {
    let spec = KernelSpec::new(2, 8)?;
    let functions = [
        ("cap", TestFunction::cap_indicator(SpherePoint::north_pole(2), 1.0)?),
        ("pair", TestFunction::pair_indicator(2, 0.8)?),
        ("triangle", TestFunction::triangle_indicator(2, 1.0)?),
    ];
    for (name, f) in &functions {
        let values = map_replicates(&spec, 7, 2000, &SamplerOptions::default(), |c| evaluate_config(c, f))?
            .into_iter()
            .collect::<spheredpp::error::Result<Vec<f64>>>()?;
        let q = empirical_cumulants(&values, 3)?;
        println!(
            "{name:8} mean {:9.3} +- {:.3}  var {:9.3} +- {:.3}  Q3 {:9.3} +- {:.3}",
            q[0].value, q[0].se, q[1].value, q[1].se, q[2].value, q[2].se
        );
    }
    Ok(())
}
