//! Accuracy of the cosine asymptotics of P_n away from the poles.

use spheredpp::special::{certify_hilb_bound, hilb_error_envelope, hilb_exponent_at};

fn main() -> spheredpp::error::Result<()> {
    let ns = [16, 32, 64, 128, 256];
    for theta in [0.5, 1.0, 2.0] {
        let errs: Vec<String> = ns.iter().map(|&n| format!("{:.2e}", hilb_error_envelope(2, n, theta))).collect();
        println!("theta = {theta}: {} -> exponent {:.3}", errs.join(" "), hilb_exponent_at(2, &ns, theta));
    }
    let fit = certify_hilb_bound(2, &ns, &[0.3, 0.7, 1.2, 1.9, 2.6], 1.0)?;
    println!("{fit:?}");
    Ok(())
}
