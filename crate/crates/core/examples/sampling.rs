//! Fits the best MCM to a dataset, draws a synthetic dataset from it and
//! compares low-order statistics.
//!
//!     cargo run --release --example sampling

use mcm::{best_im_exhaustive, best_mcm_exhaustive, Dataset, FittedMcm, Operator};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn main() -> mcm::Result<()> {
    let n = 6;
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    // s1 = s2 s3 most of the time, s4..s6 copy s1 with noise.
    let rows = (0..20_000)
        .map(|_| {
            let a: u128 = rng.random_range(0..2);
            let b: u128 = rng.random_range(0..2);
            let mut x = (a ^ b) | a << 1 | b << 2;
            for i in 3..6 {
                x |= ((x & 1) ^ rng.random_bool(0.1) as u128) << i;
            }
            x
        })
        .collect();
    let d = Dataset::from_rows(n, rows)?;
    let basis = best_im_exhaustive(&d)?;
    let (m, _) = best_mcm_exhaustive(&d, &basis)?;
    let fitted = FittedMcm::fit(&d, &basis, &m)?;
    let synthetic = Dataset::from_rows(n, fitted.sample(5, 20_000))?;

    println!("{:>10} {:>9} {:>9}", "operator", "data", "model");
    for mask in [
        0b000001u128,
        0b000110,
        0b000111,
        0b001001,
        0b011000,
        0b110000,
    ] {
        let op = Operator::new(mask, n)?;
        println!(
            "{:>10} {:>9.4} {:>9.4}",
            op.to_string(),
            d.operator_bias(&op)?,
            synthetic.operator_bias(&op)?
        );
    }
    Ok(())
}
