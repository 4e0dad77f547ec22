//! Census of connected (T, sigma)-graphs and the inequality sweep.

use spheredpp::graphs::{census_tsv, inequality_sweep};

fn main() -> spheredpp::error::Result<()> {
    print!("{}", census_tsv(2, 2)?.lines().take(12).collect::<Vec<_>>().join("\n"));
    println!();
    for m in 1..=3 {
        for k in 1..=3 {
            let r = inequality_sweep(m, k)?;
            println!(
                "m = {m}, k = {k}: {:5} classes, {:6} pairs, {:5} circle-like, clean = {}",
                r.classes,
                r.pairs_examined,
                r.circle_like,
                r.clean()
            );
        }
    }
    Ok(())
}
