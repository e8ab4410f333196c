//! For many spins the best basis is searched among products of a few current
//! basis operators, round after round, instead of among all 2^n operators.
//!
//!     cargo run --release --example heuristic_basis

use mcm::{best_im_heuristic, Basis, Dataset, HeuristicOptions};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn main() -> mcm::Result<()> {
    let n = 30;
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    // Chains of strongly coupled spins: s_{i+1} follows s_i with probability 0.9.
    let rows = (0..5_000)
        .map(|_| {
            let mut x: u128 = rng.random_range(0..2);
            for i in 1..n {
                let prev = x >> (i - 1) & 1;
                let flip = (i % 5 == 0 || rng.random_bool(0.1)) as u128;
                let bit = if i % 5 == 0 {
                    rng.random_range(0..2)
                } else {
                    prev ^ flip
                };
                x |= bit << i;
            }
            x
        })
        .collect();
    let d = Dataset::from_rows(n, rows)?;

    let identity = Basis::identity(&d)?;
    println!(
        "identity basis  IM log-likelihood {:.2}",
        identity.im_log_likelihood(d.len())
    );
    for k in 1..=3 {
        let out = best_im_heuristic(&d, HeuristicOptions::new(k, 20))?;
        println!(
            "k = {k}: {} rounds, converged {}, IM log-likelihood {:.2}",
            out.rounds,
            out.converged,
            out.basis.im_log_likelihood(d.len())
        );
    }
    Ok(())
}
