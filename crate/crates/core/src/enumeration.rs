//! Exact counts of spin-model families on `n` spins.

use std::collections::BTreeMap;

use num_bigint::BigUint;
use num_traits::{One, Zero};

use crate::error::{Error, Result};

/// Exact nonnegative integer count.
pub type BigCount = BigUint;

fn pow2(k: usize) -> BigUint {
    BigUint::one() << k
}

/// `Π_{i<r} (2^n - 2^i)`: ordered choices of `r` independent operators.
fn ordered_independent(n: usize, r: usize) -> BigUint {
    (0..r).fold(BigUint::one(), |acc, i| acc * (pow2(n) - pow2(i)))
}

fn factorial(k: usize) -> BigUint {
    (1..=k).fold(BigUint::one(), |acc, i| acc * BigUint::from(i))
}

fn exact_div(num: BigUint, den: &BigUint) -> BigUint {
    let q = &num / den;
    debug_assert!((&q * den) == num, "count is not integral");
    q
}

fn check_rank(n: usize, r: usize) -> Result<()> {
    if r > n {
        return Err(Error::InvalidStructure(format!(
            "rank {r} exceeds {n} spins"
        )));
    }
    Ok(())
}

/// Number of independent models of rank `r`: `Π_{i<r}(2^n - 2^i) / r!`.
pub fn count_im(n: usize, r: usize) -> Result<BigCount> {
    check_rank(n, r)?;
    Ok(exact_div(ordered_independent(n, r), &factorial(r)))
}

/// Number of independent complete components of rank `r`.
pub fn count_icc(n: usize, r: usize) -> Result<BigCount> {
    check_rank(n, r)?;
    Ok(exact_div(
        ordered_independent(n, r),
        &ordered_independent(r, r),
    ))
}

/// Number of MCMs on `n` spins with `multiplicities[r_a]` components of
/// rank `r_a`.
pub fn count_mcm_class(n: usize, multiplicities: &BTreeMap<usize, usize>) -> Result<BigCount> {
    let rank: usize = multiplicities.iter().map(|(&ra, &m)| ra * m).sum();
    if multiplicities.contains_key(&0) {
        return Err(Error::InvalidStructure(
            "component rank must be at least 1".into(),
        ));
    }
    check_rank(n, rank)?;
    let mut den = BigUint::one();
    for (&ra, &m) in multiplicities {
        den *= factorial(m) * num_traits::pow(ordered_independent(ra, ra), m);
    }
    Ok(exact_div(ordered_independent(n, rank), &den))
}

/// Bell numbers `B_0..=B_n` from the Bell triangle.
pub fn bell_numbers(n: usize) -> Vec<BigCount> {
    let mut out = vec![BigUint::one()];
    let mut row = vec![BigUint::one()];
    for _ in 0..n {
        let mut next = Vec::with_capacity(row.len() + 1);
        next.push(row.last().cloned().unwrap_or_else(BigUint::one));
        for v in &row {
            let x = next.last().unwrap() + v;
            next.push(x);
        }
        out.push(next[0].clone());
        row = next;
    }
    out
}

/// Number of set partitions of `n` elements.
pub fn bell(n: usize) -> BigCount {
    bell_numbers(n).pop().unwrap()
}

fn binomial(n: usize, k: usize) -> BigUint {
    (0..k).fold(BigUint::one(), |acc, i| {
        acc * BigUint::from(n - i) / BigUint::from(i + 1)
    })
}

/// Number of MCMs sharing one preferred basis, any rank: `Σ_r C(n, r) B_r`.
pub fn count_mcm_star(n: usize) -> BigCount {
    bell_numbers(n)
        .into_iter()
        .enumerate()
        .map(|(r, b)| binomial(n, r) * b)
        .sum()
}

/// Integer partitions of `r` as `part -> multiplicity` maps, largest parts first.
pub fn integer_partitions(r: usize) -> Vec<BTreeMap<usize, usize>> {
    fn recurse(
        left: usize,
        max: usize,
        acc: &mut Vec<usize>,
        out: &mut Vec<BTreeMap<usize, usize>>,
    ) {
        if left == 0 {
            let mut m = BTreeMap::new();
            for &p in acc.iter() {
                *m.entry(p).or_insert(0) += 1;
            }
            out.push(m);
            return;
        }
        for p in (1..=max.min(left)).rev() {
            acc.push(p);
            recurse(left - p, p, acc, out);
            acc.pop();
        }
    }
    let mut out = Vec::new();
    recurse(r, r, &mut Vec::new(), &mut out);
    out
}

/// All independent models of any rank.
pub fn count_im_total(n: usize) -> BigCount {
    (0..=n).map(|r| count_im(n, r).unwrap()).sum()
}

/// All single-component models of any rank.
pub fn count_icc_total(n: usize) -> BigCount {
    (0..=n).map(|r| count_icc(n, r).unwrap()).sum()
}

/// Number of ways to split a space of dimension `r` into a direct sum of
/// nonzero subspaces, for `r = 0..=max`.
///
/// Removing the component that contains a marked basis direction gives
/// `r D(r) = Σ_a a C_2(r, a) 2^{a(r-a)} D(r-a)`, `C_2` the Gaussian binomial.
pub fn decomposition_counts(max: usize) -> Vec<BigCount> {
    let mut d = vec![BigUint::one()];
    for r in 1..=max {
        let mut acc = BigUint::zero();
        for a in 1..=r {
            acc += BigUint::from(a) * count_icc(r, a).unwrap() * pow2(a * (r - a)) * &d[r - a];
        }
        d.push(exact_div(acc, &BigUint::from(r)));
    }
    d
}

/// All MCMs of any rank, including the empty model.
pub fn count_mcm_total(n: usize) -> BigCount {
    decomposition_counts(n)
        .iter()
        .enumerate()
        .map(|(r, d)| count_icc(n, r).unwrap() * d)
        .sum()
}

/// Pairwise models on the original variables, `2^{n(n+1)/2}`.
pub fn count_pairwise(n: usize) -> BigCount {
    pow2(n * (n + 1) / 2)
}

/// Model-family counts for one value of `n`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CountRow {
    pub n: usize,
    pub im: BigCount,
    pub icc: BigCount,
    pub mcm: BigCount,
    pub mcm_star: BigCount,
    pub bell: BigCount,
    pub pairwise: BigCount,
}

pub fn count_row(n: usize) -> CountRow {
    CountRow {
        n,
        im: count_im_total(n),
        icc: count_icc_total(n),
        mcm: count_mcm_total(n),
        mcm_star: count_mcm_star(n),
        bell: bell(n),
        pairwise: count_pairwise(n),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn big(v: u64) -> BigUint {
        BigUint::from(v)
    }

    #[test]
    fn im_counts() {
        for n in 0..6 {
            assert_eq!(count_im(n, 0).unwrap(), big(1));
        }
        assert_eq!(count_im(2, 2).unwrap(), big(3));
        assert_eq!(count_im(3, 1).unwrap(), big(7));
        assert!(count_im(2, 3).is_err());
    }

    #[test]
    fn icc_counts() {
        for n in 1..8 {
            assert_eq!(count_icc(n, n).unwrap(), big(1));
            assert_eq!(count_icc(n, 1).unwrap(), big((1 << n) - 1));
        }
        assert_eq!(count_icc(3, 2).unwrap(), big(7));
    }

    #[test]
    fn class_reductions() {
        for n in 1..7 {
            for r in 1..=n {
                let single = BTreeMap::from([(r, 1)]);
                assert_eq!(
                    count_mcm_class(n, &single).unwrap(),
                    count_icc(n, r).unwrap()
                );
            }
        }
        let ones = BTreeMap::from([(1, 4)]);
        assert_eq!(count_mcm_class(4, &ones).unwrap(), count_im(4, 4).unwrap());
        assert!(count_mcm_class(3, &BTreeMap::from([(2, 2)])).is_err());
    }

    #[test]
    fn total_matches_class_sum() {
        for n in 0..=12 {
            let by_class: BigUint = (0..=n)
                .flat_map(|r| {
                    integer_partitions(r)
                        .into_iter()
                        .map(move |c| count_mcm_class(n, &c).unwrap())
                })
                .sum();
            assert_eq!(count_mcm_total(n), by_class, "n = {n}");
        }
    }

    #[test]
    fn rank_eight_has_22_classes() {
        assert_eq!(integer_partitions(8).len(), 22);
        assert_eq!(integer_partitions(0).len(), 1);
    }

    #[test]
    fn bell_and_star() {
        let b: Vec<u64> = bell_numbers(9)
            .iter()
            .map(|v| v.try_into().unwrap())
            .collect();
        assert_eq!(b, vec![1, 1, 2, 5, 15, 52, 203, 877, 4140, 21147]);
        assert_eq!(count_mcm_star(9), big(115_975));
        assert_eq!(count_mcm_star(0), big(1));
        assert_eq!(count_mcm_star(1), big(2));
    }

    #[test]
    fn zero_row_is_all_ones() {
        let row = count_row(0);
        for v in [
            row.im,
            row.icc,
            row.mcm,
            row.mcm_star,
            row.bell,
            row.pairwise,
        ] {
            assert_eq!(v, big(1));
        }
    }
}
