//! The evidence of an MCM does not change when states and operators are
//! mapped through the same invertible mod-2 transformation.
//!
//!     cargo run --example gauge_invariance

use mcm::{mcm_log_evidence, Basis, Block, Dataset, GaugeTransform, McmStructure, Operator};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn main() -> mcm::Result<()> {
    let n = 5;
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let rows = (0..400)
        .map(|_| rng.random_range(0..32u128) & rng.random_range(0..32u128))
        .collect();
    let d = Dataset::from_rows(n, rows)?;
    let basis = Basis::identity(&d)?;
    let m = McmStructure::new(
        n,
        n,
        vec![Block::modeled(vec![0, 2]), Block::modeled(vec![1, 3, 4])],
    )?;

    let t = loop {
        let cols = (0..n)
            .map(|_| Operator::new(rng.random_range(1..32), n))
            .collect::<mcm::Result<Vec<_>>>()?;
        if let Ok(t) = GaugeTransform::new(cols) {
            break t;
        }
    };
    let moved = d.transform(&t)?;
    let moved_ops = basis
        .operators()
        .iter()
        .map(|op| t.transform_operator(op))
        .collect::<mcm::Result<Vec<_>>>()?;
    let moved_basis = Basis::new(&moved, moved_ops)?;

    let before = mcm_log_evidence(&d, &basis, &m)?.total_log_evidence;
    let after = mcm_log_evidence(&moved, &moved_basis, &m)?.total_log_evidence;
    println!("original basis    log E = {before:.12}");
    println!("transformed basis log E = {after:.12}");
    println!("difference {:.2e}", (before - after).abs());
    Ok(())
}
