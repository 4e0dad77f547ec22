//! A small configured sweep, printed as CSV.

use spheredpp::harness::{parse_config, run_experiment};

const CONFIG: &str = r#"
[run.demo]
d = 2
n = [4, 6, 8]
function = "cap"
delta = 1.0
replicates = 1000
seed = 11
mode = "clt"
oracle = true
"#;

fn main() -> spheredpp::error::Result<()> {
    for (name, cfg) in parse_config(CONFIG)? {
        let report = run_experiment(&name, &cfg)?;
        report.write_csv(std::io::stdout())?;
        for row in &report.rows {
            println!("n = {}: graph Q2 {:.4}, sampled {:.4} +- {:.4}", row.n, row.oracle_q2.unwrap_or(f64::NAN), row.q2, row.q2_se);
        }
        if let Some(fit) = report.variance_fit {
            println!("variance exponent {:.3} (expected {})", fit.exponent, fit.expected);
        }
    }
    Ok(())
}
