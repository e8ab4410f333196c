//! Sizes of the model families on n spins, from independent models up to all
//! MCMs, next to the number of pairwise models.
//!
//!     cargo run --example count_models -- 12

use mcm::enumeration::count_row;

fn main() {
    let max: usize = std::env::args()
        .nth(1)
        .and_then(|a| a.parse().ok())
        .unwrap_or(10);
    println!(
        "{:>3} {:>12} {:>12} {:>12} {:>12} {:>12}",
        "n", "IM", "ICC", "MCM", "MCM*", "pairwise"
    );
    for n in 0..=max {
        let r = count_row(n);
        println!(
            "{n:>3} {:>12} {:>12} {:>12} {:>12} {:>12}",
            sci(&r.im.to_string()),
            sci(&r.icc.to_string()),
            sci(&r.mcm.to_string()),
            sci(&r.mcm_star.to_string()),
            sci(&r.pairwise.to_string())
        );
    }
}

// Short scientific rendering of an exact integer.
fn sci(digits: &str) -> String {
    if digits.len() <= 9 {
        return digits.to_string();
    }
    format!("{}.{}e{}", &digits[..1], &digits[1..3], digits.len() - 1)
}
