//! Bases of independent operators and the search for the best independent
//! model (IM).
//!
//! The maximum log-likelihood of an IM over `n` independent operators is
//! `-N Σ_a H[m_a]`, with `m_a` the bias of operator `a` and `H` the binary
//! entropy of `(1 ± m)/2`. It only depends on `|m_a|`, and independent sets
//! form a matroid, so taking operators greedily by decreasing `|m|` while
//! skipping those already in the span yields the optimum.

use std::cmp::Reverse;
use std::fs;
use std::path::Path;

use rayon::prelude::*;

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::gf2::{self, GaugeTransform, Gf2Span, Operator};

/// Default cap on `n` for the exhaustive operator scan (`2^n - 1` operators).
pub const DEFAULT_EXHAUSTIVE_CAP: usize = 25;

/// Default cap on the number of candidate operators per heuristic round.
pub const DEFAULT_MAX_CANDIDATES: usize = 4_000_000;

/// An ordered set of independent operators with their biases on a dataset.
#[derive(Clone, Debug, PartialEq)]
pub struct Basis {
    operators: Vec<Operator>,
    biases: Vec<f64>,
    transform: GaugeTransform,
}

/// Binary entropy (nats) of an operator with bias `m`.
pub fn bias_entropy(m: f64) -> f64 {
    let h = |p: f64| if p > 0.0 { -p * p.ln() } else { 0.0 };
    h((1.0 + m) / 2.0) + h((1.0 - m) / 2.0)
}

/// Ordering used to rank operators: larger `|sum|` first, then lower
/// interaction order, then smaller mask.
fn rank_key(sum: i64, mask: u128) -> (Reverse<u64>, u32, u128) {
    (Reverse(sum.unsigned_abs()), mask.count_ones(), mask)
}

impl Basis {
    /// Wraps independent operators, keeping their order.
    pub fn new(d: &Dataset, operators: Vec<Operator>) -> Result<Self> {
        if operators.len() > d.n() {
            return Err(Error::DependentOperators);
        }
        let transform = gf2::complete_basis(&operators, d.n())?;
        let biases = operators
            .iter()
            .map(|o| d.operator_bias(o))
            .collect::<Result<Vec<_>>>()?;
        Ok(Basis {
            operators,
            biases,
            transform,
        })
    }

    /// Sorts independent operators by decreasing `|bias|` before wrapping them.
    pub fn sorted(d: &Dataset, mut operators: Vec<Operator>) -> Result<Self> {
        operators.sort_by_cached_key(|o| rank_key(d.operator_sum(o.mask()), o.mask()));
        Basis::new(d, operators)
    }

    /// The original spin variables `s_1..s_n`, in index order.
    pub fn identity(d: &Dataset) -> Result<Self> {
        let ops = (0..d.n())
            .map(|i| Operator::spin(i, d.n()))
            .collect::<Result<Vec<_>>>()?;
        Basis::new(d, ops)
    }

    pub fn operators(&self) -> &[Operator] {
        &self.operators
    }

    pub fn biases(&self) -> &[f64] {
        &self.biases
    }

    pub fn len(&self) -> usize {
        self.operators.len()
    }

    pub fn is_empty(&self) -> bool {
        self.operators.is_empty()
    }

    /// Number of spin variables.
    pub fn n(&self) -> usize {
        self.transform.n()
    }

    /// The gauge transform whose first columns are this basis, completed with
    /// single spins to full rank.
    pub fn transform(&self) -> &GaugeTransform {
        &self.transform
    }

    /// `-N Σ H[m_a]`, the maximum log-likelihood of the independent model.
    pub fn im_log_likelihood(&self, n_obs: usize) -> f64 {
        let uniform = (self.n() - self.len()) as f64 * std::f64::consts::LN_2;
        -(n_obs as f64) * (self.biases.iter().map(|&m| bias_entropy(m)).sum::<f64>() + uniform)
    }

    /// Text form: one operator per line, mask then bias.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (o, m) in self.operators.iter().zip(&self.biases) {
            out.push_str(&format!("{} {:.12}\n", o.to_bits_string(), m));
        }
        out
    }

    /// Reads operators from the basis text format. Biases in the file are
    /// ignored; they are recomputed against the dataset the basis is used with.
    pub fn load_operators(path: &Path, n: usize) -> Result<Vec<Operator>> {
        let text = fs::read_to_string(path)?;
        let mut ops = Vec::new();
        for (idx, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let mask = line.split_whitespace().next().unwrap_or_default();
            let op = Operator::parse_bits(mask).map_err(|e| Error::Parse {
                path: path.to_path_buf(),
                line: idx + 1,
                message: e.to_string(),
            })?;
            if op.n() != n {
                return Err(Error::Parse {
                    path: path.to_path_buf(),
                    line: idx + 1,
                    message: format!("expected {n} characters, found {}", op.n()),
                });
            }
            ops.push(op);
        }
        Ok(ops)
    }
}

/// Picks up to `limit` independent masks from candidates already sorted by
/// preference.
fn greedy_independent(sorted: impl Iterator<Item = u128>, limit: usize) -> Vec<u128> {
    let mut span = Gf2Span::new();
    let mut chosen = Vec::with_capacity(limit);
    for mask in sorted {
        if chosen.len() == limit {
            break;
        }
        if mask != 0 && span.insert(mask) {
            chosen.push(mask);
        }
    }
    chosen
}

/// Best independent model by scanning all `2^n - 1` operators.
///
/// Operator sums over the data come from a Walsh–Hadamard transform of the
/// state histogram; operators are then ranked and accepted greedily.
pub fn best_im_exhaustive(d: &Dataset) -> Result<Basis> {
    best_im_exhaustive_capped(d, DEFAULT_EXHAUSTIVE_CAP)
}

pub fn best_im_exhaustive_capped(d: &Dataset, cap: usize) -> Result<Basis> {
    let n = d.n();
    if n > cap {
        return Err(Error::CapExceeded {
            what: "variable count for exhaustive basis search",
            value: n,
            cap,
        });
    }
    if d.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let size = 1usize << n;
    let mut w = vec![0i64; size];
    for &(x, c) in d.counts() {
        w[x as usize] += c as i64;
    }
    let mut h = 1;
    while h < size {
        for start in (0..size).step_by(2 * h) {
            for i in start..start + h {
                let (a, b) = (w[i], w[i + h]);
                w[i] = a + b;
                w[i + h] = a - b;
            }
        }
        h *= 2;
    }
    let mut order: Vec<u32> = (1..size as u32).collect();
    order.par_sort_unstable_by_key(|&m| rank_key(w[m as usize], m as u128));
    let chosen = greedy_independent(order.iter().map(|&m| m as u128), n);
    let ops = chosen
        .into_iter()
        .map(|m| Operator::new(m, n))
        .collect::<Result<Vec<_>>>()?;
    Basis::new(d, ops)
}

/// Settings of the iterative order-`k` basis search.
#[derive(Clone, Copy, Debug)]
pub struct HeuristicOptions {
    /// Largest number of current basis operators multiplied into a candidate.
    pub k: usize,
    pub max_rounds: usize,
    /// Upper bound on candidates generated in one round.
    pub max_candidates: usize,
}

impl HeuristicOptions {
    pub fn new(k: usize, max_rounds: usize) -> Self {
        HeuristicOptions {
            k,
            max_rounds,
            max_candidates: DEFAULT_MAX_CANDIDATES,
        }
    }
}

/// Result of the heuristic basis search.
#[derive(Clone, Debug)]
pub struct HeuristicOutcome {
    pub basis: Basis,
    /// Rounds performed, including the final one that found no change.
    pub rounds: usize,
    pub converged: bool,
    /// IM log-likelihood after each round.
    pub log_likelihoods: Vec<f64>,
}

fn binomial(n: usize, k: usize) -> usize {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    (0..k).fold(1usize, |acc, i| acc.saturating_mul(n - i) / (i + 1))
}

/// All products of between 1 and `k` of the given independent masks.
///
/// Products of distinct subsets of an independent set are distinct, so no
/// deduplication is needed.
fn products_up_to(masks: &[u128], k: usize) -> Vec<u128> {
    fn recurse(masks: &[u128], start: usize, left: usize, acc: u128, out: &mut Vec<u128>) {
        for i in start..masks.len() {
            let p = acc ^ masks[i];
            out.push(p);
            if left > 1 {
                recurse(masks, i + 1, left - 1, p, out);
            }
        }
    }
    let mut out = Vec::new();
    recurse(masks, 0, k, 0, &mut out);
    out
}

/// Iterative basis search: starting from the original spins, repeatedly
/// replace the basis by the `n` most biased independent operators among all
/// products of at most `k` current basis operators, until the basis stops
/// changing or `max_rounds` is reached.
pub fn best_im_heuristic(d: &Dataset, opts: HeuristicOptions) -> Result<HeuristicOutcome> {
    if opts.k == 0 {
        return Err(Error::InvalidStructure(
            "heuristic order k must be at least 1".into(),
        ));
    }
    if d.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let n = d.n();
    let k = opts.k.min(n);
    let expected: usize = (1..=k)
        .map(|j| binomial(n, j))
        .fold(0, usize::saturating_add);
    if expected > opts.max_candidates {
        return Err(Error::CapExceeded {
            what: "heuristic candidate count",
            value: expected,
            cap: opts.max_candidates,
        });
    }
    let mut current = Basis::sorted(d, Basis::identity(d)?.operators().to_vec())?;
    let mut log_likelihoods = vec![current.im_log_likelihood(d.len())];
    let mut rounds = 0;
    let mut converged = false;
    while rounds < opts.max_rounds {
        rounds += 1;
        let masks: Vec<u128> = current.operators().iter().map(|o| o.mask()).collect();
        let mut scored: Vec<(i64, u128)> = products_up_to(&masks, k)
            .into_par_iter()
            .map(|m| (d.operator_sum(m), m))
            .collect();
        scored.par_sort_unstable_by_key(|&(s, m)| rank_key(s, m));
        let chosen = greedy_independent(scored.iter().map(|&(_, m)| m), n);
        let mut new_set = chosen.clone();
        new_set.sort_unstable();
        let mut old_set = masks;
        old_set.sort_unstable();
        let ops = chosen
            .into_iter()
            .map(|m| Operator::new(m, n))
            .collect::<Result<Vec<_>>>()?;
        current = Basis::new(d, ops)?;
        log_likelihoods.push(current.im_log_likelihood(d.len()));
        if new_set == old_set {
            converged = true;
            break;
        }
    }
    Ok(HeuristicOutcome {
        basis: current,
        rounds,
        converged,
        log_likelihoods,
    })
}
