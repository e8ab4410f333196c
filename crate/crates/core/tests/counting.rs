//! Closed-form counts against explicit enumeration of small models.

use std::collections::HashSet;

use mcm::enumeration::{count_icc, count_im, count_im_total, count_mcm_star, count_mcm_total};
use mcm::{enumerate_partitions, Block, McmStructure};
use num_bigint::BigUint;

fn rank(masks: &[u32]) -> usize {
    let mut basis: Vec<u32> = Vec::new();
    for &m in masks {
        let mut v = m;
        for &b in &basis {
            v = v.min(v ^ b);
        }
        if v != 0 {
            basis.push(v);
            basis.sort_unstable_by(|a, b| b.cmp(a));
        }
    }
    basis.len()
}

fn span(masks: &[u32]) -> HashSet<u32> {
    let mut out = HashSet::from([0]);
    for &m in masks {
        let more: Vec<u32> = out.iter().map(|&v| v ^ m).collect();
        out.extend(more);
    }
    out
}

/// Classifies an operator set: `Some(components)` when it is an MCM, with
/// the rank of each component.
fn mcm_components(ops: &[u32]) -> Option<Vec<usize>> {
    let set: HashSet<u32> = ops.iter().copied().collect();
    let mut seen = HashSet::new();
    let mut ranks = Vec::new();
    for &start in ops {
        if seen.contains(&start) {
            continue;
        }
        // Operators linked when their product is in the model.
        let mut comp = vec![start];
        seen.insert(start);
        let mut i = 0;
        while i < comp.len() {
            for &o in ops {
                if !seen.contains(&o) && set.contains(&(o ^ comp[i])) {
                    seen.insert(o);
                    comp.push(o);
                }
            }
            i += 1;
        }
        let sp = span(&comp);
        if sp.len() != comp.len() + 1 {
            return None;
        }
        ranks.push(rank(&comp));
    }
    (ranks.iter().sum::<usize>() == rank(ops)).then_some(ranks)
}

#[test]
fn brute_force_model_counts() {
    for n in 1..=4usize {
        let ops: Vec<u32> = (1..1u32 << n).collect();
        let (mut mcm, mut im, mut icc) = (0u64, vec![0u64; n + 1], vec![0u64; n + 1]);
        for subset in 0u64..1 << ops.len() {
            let chosen: Vec<u32> = (0..ops.len())
                .filter(|i| subset >> i & 1 == 1)
                .map(|i| ops[i])
                .collect();
            if let Some(ranks) = mcm_components(&chosen) {
                mcm += 1;
                if ranks.iter().all(|&r| r == 1) {
                    im[ranks.len()] += 1;
                }
                if ranks.len() <= 1 {
                    icc[ranks.first().copied().unwrap_or(0)] += 1;
                }
            }
        }
        assert_eq!(count_mcm_total(n), BigUint::from(mcm), "n = {n}");
        for r in 0..=n {
            assert_eq!(
                count_im(n, r).unwrap(),
                BigUint::from(im[r]),
                "IM n = {n}, r = {r}"
            );
            assert_eq!(
                count_icc(n, r).unwrap(),
                BigUint::from(icc[r]),
                "ICC n = {n}, r = {r}"
            );
        }
        assert_eq!(count_im_total(n), BigUint::from(im.iter().sum::<u64>()));
    }
}

#[test]
fn models_sharing_a_basis() {
    for n in 0..=8usize {
        let mut models = HashSet::new();
        for rgs in enumerate_partitions(n) {
            let blocks = rgs.iter().max().map_or(0, |m| m + 1);
            for flags in 0u32..1 << blocks {
                let bs = (0..blocks)
                    .map(|b| {
                        let members = (0..n).filter(|&i| rgs[i] == b).collect();
                        if flags >> b & 1 == 1 {
                            Block::modeled(members)
                        } else {
                            Block::unmodeled(members)
                        }
                    })
                    .collect();
                models.insert(format!(
                    "{:?}",
                    McmStructure::new(n.max(1), n, bs)
                        .unwrap()
                        .canonical_model()
                ));
            }
        }
        assert_eq!(BigUint::from(models.len()), count_mcm_star(n), "n = {n}");
    }
}
