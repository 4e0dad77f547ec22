//! Exact cumulants from the graph expansion next to the trace formula.

use spheredpp::cumulants::{cumulant_via_graphs, univariate_cumulant, GraphOracle};
use spheredpp::kernel::KernelSpec;
use spheredpp::sphere::{product_quadrature, SpherePoint};
use spheredpp::stats::TestFunction;

fn main() -> spheredpp::error::Result<()> {
    let spec = KernelSpec::new(2, 4)?;
    let quad = product_quadrature(2, 16)?;
    let cap = TestFunction::cap_indicator(SpherePoint::north_pole(2), 0.9)?;
    for m in 1..=4 {
        let graphs = cumulant_via_graphs(&cap, m, &spec, &quad)?;
        let traces = univariate_cumulant(&cap, m, &spec, &quad)?;
        println!("cap  Q_{m} = {graphs:+.12} (traces {traces:+.12})");
    }
    let pair = TestFunction::pair_indicator(2, 0.8)?;
    let oracle = GraphOracle::new(&pair, &spec, &quad)?;
    for m in 1..=2 {
        let c = oracle.cumulant(m)?;
        println!("pair Q_{m} = {:+.10} over {} graphs", c.value, c.terms);
    }
    Ok(())
}
