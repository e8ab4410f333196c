//! Independent oracles and generators shared by the integration tests.
#![allow(dead_code)]

use std::f64::consts::PI;

use mcm::{Block, Dataset, FittedMcm, GaugeTransform, McmStructure, Operator};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Gauss-Legendre nodes and weights on [a, b], by Newton iteration on P_m.
pub fn gauss_legendre(m: usize, a: f64, b: f64) -> Vec<(f64, f64)> {
    let mut out = Vec::with_capacity(m);
    for i in 0..m {
        let mut x = (PI * (i as f64 + 0.75) / (m as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=m {
                let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            dp = m as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-15 {
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        out.push((0.5 * (b - a) * x + 0.5 * (b + a), 0.5 * (b - a) * w));
    }
    out
}

/// Evidence of a sequence with pattern counts `k` (2 or 4 cells) under the
/// Dirichlet(1/2) prior, by quadrature over the positive orthant of the
/// sphere (`p_i = z_i^2` makes that prior uniform there).
pub fn quadrature_evidence(k: &[u64]) -> f64 {
    let nodes = gauss_legendre(40, 0.0, PI / 2.0);
    let pw = |z: f64, k: u64| z.powi(2 * k as i32);
    match k.len() {
        2 => {
            let s: f64 = nodes
                .iter()
                .map(|&(t, w)| w * pw(t.cos(), k[0]) * pw(t.sin(), k[1]))
                .sum();
            2.0 / PI * s
        }
        4 => {
            let mut s = 0.0;
            for &(a, wa) in &nodes {
                let (ca, sa) = (a.cos(), a.sin());
                let fa = wa * pw(ca, k[0]) * sa * sa;
                for &(b, wb) in &nodes {
                    let (cb, sb) = (b.cos(), b.sin());
                    let fb = fa * wb * pw(sa * cb, k[1]) * sb;
                    for &(c, wc) in &nodes {
                        s += fb * wc * pw(sa * sb * c.cos(), k[2]) * pw(sa * sb * c.sin(), k[3]);
                    }
                }
            }
            8.0 / (PI * PI) * s
        }
        _ => panic!("only 2 or 4 cells"),
    }
}

/// All count vectors of `cells` nonnegative entries summing to `total`.
pub fn compositions(total: u64, cells: usize) -> Vec<Vec<u64>> {
    if cells == 1 {
        return vec![vec![total]];
    }
    let mut out = Vec::new();
    for first in 0..=total {
        for mut rest in compositions(total - first, cells - 1) {
            rest.insert(0, first);
            out.push(rest);
        }
    }
    out
}

fn parity(x: u128) -> bool {
    x.count_ones() % 2 == 1
}

/// Bias of operator `mask` by direct evaluation over the rows.
pub fn direct_bias(rows: &[u128], mask: u128) -> f64 {
    let s: i64 = rows
        .iter()
        .map(|&x| if parity(x & mask) { -1 } else { 1 })
        .sum();
    s as f64 / rows.len() as f64
}

fn entropy(m: f64) -> f64 {
    let h = |p: f64| if p > 0.0 { -p * p.ln() } else { 0.0 };
    h((1.0 + m) / 2.0) + h((1.0 - m) / 2.0)
}

fn rank(masks: &[u128]) -> usize {
    let mut rows = masks.to_vec();
    let mut r = 0;
    for bit in 0..128 {
        if let Some(p) = (r..rows.len()).find(|&i| rows[i] >> bit & 1 == 1) {
            rows.swap(r, p);
            for i in 0..rows.len() {
                if i != r && rows[i] >> bit & 1 == 1 {
                    rows[i] ^= rows[r];
                }
            }
            r += 1;
        }
    }
    r
}

/// Largest IM log-likelihood over every full-rank set of `n` operators.
pub fn brute_force_best_im(rows: &[u128], n: usize) -> f64 {
    let all: Vec<u128> = (1..1u128 << n).collect();
    let ll: Vec<f64> = all
        .iter()
        .map(|&m| -(rows.len() as f64) * entropy(direct_bias(rows, m)))
        .collect();
    let mut best = f64::NEG_INFINITY;
    let mut pick = Vec::new();
    fn rec(
        start: usize,
        all: &[u128],
        ll: &[f64],
        n: usize,
        pick: &mut Vec<usize>,
        best: &mut f64,
    ) {
        if pick.len() == n {
            let masks: Vec<u128> = pick.iter().map(|&i| all[i]).collect();
            if rank(&masks) == n {
                *best = best.max(pick.iter().map(|&i| ll[i]).sum());
            }
            return;
        }
        for i in start..all.len() {
            pick.push(i);
            rec(i + 1, all, ll, n, pick, best);
            pick.pop();
        }
    }
    rec(0, &all, &ll, n, &mut pick, &mut best);
    best
}

/// Uniformly random invertible transformation on `n` spins.
pub fn random_transform(r: &mut impl Rng, n: usize) -> GaugeTransform {
    loop {
        let cols = (0..n)
            .map(|_| Operator::new(r.random_range(1..1u128 << n), n).unwrap())
            .collect();
        if let Ok(t) = GaugeTransform::new(cols) {
            return t;
        }
    }
}

/// Random partition of `0..size` into blocks, each modeled with probability 3/4.
pub fn random_structure(r: &mut impl Rng, n: usize, size: usize) -> McmStructure {
    let mut label = Vec::with_capacity(size);
    let mut blocks = 0;
    for _ in 0..size {
        let b = r.random_range(0..=blocks);
        if b == blocks {
            blocks += 1;
        }
        label.push(b);
    }
    let blocks = (0..blocks)
        .map(|b| {
            let members = (0..size).filter(|&i| label[i] == b).collect();
            if r.random_bool(0.75) {
                Block::modeled(members)
            } else {
                Block::unmodeled(members)
            }
        })
        .collect();
    McmStructure::new(n, size, blocks).unwrap()
}

/// Random probability table of `len` cells, bounded away from zero.
pub fn random_table(r: &mut impl Rng, len: usize) -> Vec<f64> {
    let w: Vec<f64> = (0..len)
        .map(|_| r.random_range(0.05..1.0f64).powi(3))
        .collect();
    let s: f64 = w.iter().sum();
    w.into_iter().map(|x| x / s).collect()
}

/// A random MCM over a random basis and `count` observations drawn from it.
pub fn planted(r: &mut impl Rng, n: usize, count: usize) -> (FittedMcm, Dataset) {
    let t = random_transform(r, n);
    let structure = random_structure(r, n, n);
    let structure = McmStructure::new(
        n,
        n,
        structure
            .blocks()
            .iter()
            .map(|b| Block::modeled(b.members.clone()))
            .collect(),
    )
    .unwrap();
    let tables = structure
        .blocks()
        .iter()
        .map(|b| random_table(r, 1 << b.rank()))
        .collect();
    let model = FittedMcm::from_tables(n, t.columns().to_vec(), structure, tables).unwrap();
    let d = Dataset::from_rows(n, model.sample(r.random(), count)).unwrap();
    (model, d)
}

pub fn random_rows(r: &mut impl Rng, n: usize, count: usize) -> Vec<u128> {
    (0..count).map(|_| r.random_range(0..1u128 << n)).collect()
}
