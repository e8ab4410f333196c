//! Data drawn from three fixed states of 9 spins is described exactly by an
//! MCM with one rank-2 component and seven deterministic operators.
//!
//!     cargo run --release --example three_states

use mcm::{best_im_exhaustive, best_mcm_exhaustive, generate_synthetic, FittedMcm, Operator};

fn main() -> mcm::Result<()> {
    let states =
        ["110011001", "001111010", "000000000"].map(|s| Operator::parse_bits(s).unwrap().mask());
    let d = generate_synthetic(9, &states, &[0.2, 0.3, 0.5], 100_000, 7)?;

    let basis = best_im_exhaustive(&d)?;
    println!("best basis:");
    for (op, m) in basis.operators().iter().zip(basis.biases()) {
        println!("  {:>12}  bias {m:+.4}", op.to_string());
    }

    let (m, report) = best_mcm_exhaustive(&d, &basis)?;
    let fitted = FittedMcm::fit(&d, &basis, &m)?;
    println!(
        "\n{} ICCs, log-evidence {:.3}",
        m.modeled_blocks(),
        report.total_log_evidence
    );
    for (b, q) in m
        .blocks()
        .iter()
        .filter(|b| b.modeled)
        .zip(fitted.q_tables())
    {
        let ops: Vec<String> = b
            .members
            .iter()
            .map(|&j| basis.operators()[j].to_string())
            .collect();
        let q: Vec<String> = q.iter().map(|p| format!("{p:.3}")).collect();
        println!("  [{}]  q = ({})", ops.join(", "), q.join(", "));
    }
    Ok(())
}
