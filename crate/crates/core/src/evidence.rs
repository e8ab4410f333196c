//! Closed-form evidence and maximum likelihood of minimally complex models.
//!
//! An MCM over a basis `b_1..b_r` is a partition of the basis indices into
//! independent complete components (ICCs). With Jeffreys' prior every ICC of
//! rank `r_a` has evidence
//!
//! ```text
//! Γ(2^{r_a-1}) / Γ(N + 2^{r_a-1}) · Π_patterns Γ(k + 1/2) / √π
//! ```
//!
//! where `k` counts how often the block takes each value pattern. Each basis
//! direction not covered by a modeled block contributes a factor `2^{-N}`.
//! Everything here is computed in natural-log space.

use std::f64::consts::{LN_2, PI};

use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use crate::basis::Basis;
use crate::dataset::{BlockCounts, Dataset};
use crate::error::{Error, Result};
use crate::gf2::{self, Operator};

/// One ICC of a structure: a set of basis indices, either modeled or left
/// uniform.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Block {
    pub members: Vec<usize>,
    pub modeled: bool,
}

impl Block {
    pub fn modeled(members: Vec<usize>) -> Self {
        Block {
            members,
            modeled: true,
        }
    }

    pub fn unmodeled(members: Vec<usize>) -> Self {
        Block {
            members,
            modeled: false,
        }
    }

    pub fn rank(&self) -> usize {
        self.members.len()
    }

    /// Members as a bit mask over basis indices.
    pub fn mask(&self) -> u128 {
        self.members.iter().fold(0, |m, &i| m | 1u128 << i)
    }
}

/// Partition of basis indices `0..basis_size` into ICC blocks.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "RawStructure")]
pub struct McmStructure {
    n: usize,
    basis_size: usize,
    blocks: Vec<Block>,
}

#[derive(Deserialize)]
struct RawStructure {
    n: usize,
    basis_size: usize,
    blocks: Vec<Block>,
}

impl TryFrom<RawStructure> for McmStructure {
    type Error = Error;

    fn try_from(raw: RawStructure) -> Result<Self> {
        McmStructure::new(raw.n, raw.basis_size, raw.blocks)
    }
}

impl McmStructure {
    /// Validates that `blocks` is a partition of `0..basis_size` into
    /// nonempty blocks, with `basis_size <= n`.
    pub fn new(n: usize, basis_size: usize, blocks: Vec<Block>) -> Result<Self> {
        gf2::check_width(n)?;
        if basis_size > n {
            return Err(Error::InvalidStructure(format!(
                "basis size {basis_size} exceeds {n} variables"
            )));
        }
        let mut seen = vec![false; basis_size];
        for b in &blocks {
            if b.members.is_empty() {
                return Err(Error::InvalidStructure("empty block".into()));
            }
            for &i in &b.members {
                if i >= basis_size {
                    return Err(Error::InvalidStructure(format!(
                        "block member {i} outside basis of size {basis_size}"
                    )));
                }
                if seen[i] {
                    return Err(Error::InvalidStructure(format!(
                        "basis index {i} in two blocks"
                    )));
                }
                seen[i] = true;
            }
        }
        if let Some(i) = seen.iter().position(|s| !s) {
            return Err(Error::InvalidStructure(format!(
                "basis index {i} not covered"
            )));
        }
        Ok(McmStructure {
            n,
            basis_size,
            blocks,
        })
    }

    /// The independent model: every basis operator its own modeled block.
    pub fn singletons(n: usize, basis_size: usize) -> Result<Self> {
        let blocks = (0..basis_size).map(|i| Block::modeled(vec![i])).collect();
        McmStructure::new(n, basis_size, blocks)
    }

    /// A single modeled block covering the whole basis.
    pub fn complete(n: usize, basis_size: usize) -> Result<Self> {
        McmStructure::new(
            n,
            basis_size,
            vec![Block::modeled((0..basis_size).collect())],
        )
    }

    /// The uniform model: nothing modeled.
    pub fn uniform(n: usize, basis_size: usize) -> Result<Self> {
        let blocks = if basis_size == 0 {
            vec![]
        } else {
            vec![Block::unmodeled((0..basis_size).collect())]
        };
        McmStructure::new(n, basis_size, blocks)
    }

    /// Builds modeled blocks from a restricted-growth string.
    pub fn from_rgs(n: usize, rgs: &[usize]) -> Result<Self> {
        let count = rgs.iter().max().map_or(0, |m| m + 1);
        let mut blocks = vec![Vec::new(); count];
        for (i, &b) in rgs.iter().enumerate() {
            blocks[b].push(i);
        }
        McmStructure::new(
            n,
            rgs.len(),
            blocks.into_iter().map(Block::modeled).collect(),
        )
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn basis_size(&self) -> usize {
        self.basis_size
    }

    pub fn blocks(&self) -> &[Block] {
        &self.blocks
    }

    /// Rank of the model: total size of the modeled blocks.
    pub fn modeled_rank(&self) -> usize {
        self.blocks
            .iter()
            .filter(|b| b.modeled)
            .map(Block::rank)
            .sum()
    }

    /// Number of operators `K = Σ (2^{r_a} - 1)` over modeled blocks.
    pub fn operator_count(&self) -> u64 {
        self.blocks
            .iter()
            .filter(|b| b.modeled)
            .map(|b| {
                1u64.checked_shl(b.rank() as u32)
                    .map_or(u64::MAX, |v| v - 1)
            })
            .fold(0u64, u64::saturating_add)
    }

    /// Number of modeled blocks.
    pub fn modeled_blocks(&self) -> usize {
        self.blocks.iter().filter(|b| b.modeled).count()
    }

    /// Sorted members, blocks ordered by smallest member.
    pub fn canonical(&self) -> McmStructure {
        let mut blocks = self.blocks.clone();
        for b in &mut blocks {
            b.members.sort_unstable();
        }
        blocks.sort_by_key(|b| b.members[0]);
        McmStructure {
            n: self.n,
            basis_size: self.basis_size,
            blocks,
        }
    }

    /// Canonical form of the model itself: unmodeled blocks are merged into
    /// one, since how uniform directions are grouped does not change the model.
    pub fn canonical_model(&self) -> McmStructure {
        let mut unmodeled: Vec<usize> = Vec::new();
        let mut blocks = Vec::new();
        for b in &self.blocks {
            if b.modeled {
                blocks.push(b.clone());
            } else {
                unmodeled.extend(&b.members);
            }
        }
        if !unmodeled.is_empty() {
            blocks.push(Block::unmodeled(unmodeled));
        }
        McmStructure {
            n: self.n,
            basis_size: self.basis_size,
            blocks,
        }
        .canonical()
    }
}

/// Log-evidence and likelihood of one modeled block.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BlockEvidence {
    /// Index of the block in the structure.
    pub block: usize,
    pub rank: usize,
    pub log_evidence: f64,
    pub max_log_likelihood: f64,
}

/// Evidence of an MCM, in nats.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvidenceReport {
    pub n_obs: u64,
    pub n: usize,
    pub modeled_rank: usize,
    /// One entry per modeled block.
    pub per_block: Vec<BlockEvidence>,
    /// `-N (n - r) log 2`, the uniform factor of all directions not modeled.
    pub unmodeled_term: f64,
    pub total_log_evidence: f64,
    pub max_log_likelihood: f64,
    /// `K`, the number of operators in the model.
    pub operator_count: u64,
    /// `K/2 log(N / 2π)`, for reference only.
    pub first_order_complexity: f64,
}

/// Memoized `ln Γ(k + 1/2) - ln Γ(1/2)` for `k = 0..=N`.
#[derive(Clone, Debug)]
pub(crate) struct HalfGammaTable {
    values: Vec<f64>,
}

impl HalfGammaTable {
    pub(crate) fn new(n_obs: u64) -> Self {
        let base = ln_gamma(0.5);
        let values = (0..=n_obs)
            .map(|k| ln_gamma(k as f64 + 0.5) - base)
            .collect();
        HalfGammaTable { values }
    }

    #[inline]
    fn get(&self, k: u64) -> f64 {
        match self.values.get(k as usize) {
            Some(&v) => v,
            None => ln_gamma(k as f64 + 0.5) - ln_gamma(0.5),
        }
    }
}

/// Log-evidence of a rank-`rank` ICC from its nonzero pattern counts.
///
/// Empty cells contribute `ln Γ(1/2) - ln √π = 0` and may be omitted.
pub(crate) fn log_evidence_from_counts(
    rank: usize,
    n_obs: u64,
    nonzero: impl Iterator<Item = u64>,
    table: Option<&HalfGammaTable>,
) -> f64 {
    let half_cells = 2f64.powi(rank as i32 - 1);
    let mut acc = ln_gamma(half_cells) - ln_gamma(n_obs as f64 + half_cells);
    for k in nonzero {
        acc += match table {
            Some(t) => t.get(k),
            None => ln_gamma(k as f64 + 0.5) - ln_gamma(0.5),
        };
    }
    acc
}

/// `Σ k log(k/N)` with `0 log 0 = 0`.
pub(crate) fn log_likelihood_from_counts(n_obs: u64, counts: impl Iterator<Item = u64>) -> f64 {
    let n = n_obs as f64;
    counts
        .filter(|&k| k > 0)
        .map(|k| {
            let k = k as f64;
            k * (k / n).ln()
        })
        .sum()
}

/// Log-evidence (nats) of a single ICC from its pattern counts.
pub fn icc_log_evidence(counts: &BlockCounts, n_obs: u64) -> Result<f64> {
    let total = counts.total();
    if total != n_obs {
        return Err(Error::CountMismatch {
            expected: n_obs,
            found: total,
        });
    }
    if n_obs == 0 {
        return Err(Error::EmptyDataset);
    }
    Ok(log_evidence_from_counts(
        counts.rank(),
        n_obs,
        counts.counts().iter().copied().filter(|&k| k > 0),
        None,
    ))
}

/// Maximum-likelihood pattern probabilities `k / N`.
pub fn fit_q(counts: &BlockCounts) -> Vec<f64> {
    let n = counts.total() as f64;
    counts.counts().iter().map(|&k| k as f64 / n).collect()
}

/// Couplings `g^μ` of an ICC from its pattern probabilities.
///
/// `q[p]` is the probability of pattern `p` of the block operators (bit `j`
/// of `p` set when operator `j` is `-1`). Returns the `2^r - 1` operators
/// generated by the block with their couplings, ordered by subset index.
pub fn q_to_g(q: &[f64], block: &[Operator]) -> Result<Vec<(Operator, f64)>> {
    let r = block.len();
    if r == 0 || q.len() != 1usize << r {
        return Err(Error::InvalidProbabilities(format!(
            "{} probabilities for a block of rank {r}",
            q.len()
        )));
    }
    if !gf2::are_independent(block) {
        return Err(Error::DependentOperators);
    }
    if let Some(p) = q.iter().position(|&v| v <= 0.0) {
        return Err(Error::BoundaryModel { pattern: p });
    }
    let logs: Vec<f64> = q.iter().map(|v| v.ln()).collect();
    let scale = 1.0 / q.len() as f64;
    let mut out = Vec::with_capacity(q.len() - 1);
    for subset in 1..q.len() {
        let mut op = Operator::identity(block[0].n())?;
        for (j, b) in block.iter().enumerate() {
            if subset >> j & 1 == 1 {
                op = op.product(b)?;
            }
        }
        let g: f64 = logs
            .iter()
            .enumerate()
            .map(|(p, l)| {
                if (subset & p).count_ones() & 1 == 1 {
                    -l
                } else {
                    *l
                }
            })
            .sum();
        out.push((op, g * scale));
    }
    Ok(out)
}

/// First-order MDL complexity `K/2 log(N / 2π)`.
pub fn first_order_complexity(operator_count: u64, n_obs: u64) -> f64 {
    operator_count as f64 / 2.0 * (n_obs as f64 / (2.0 * PI)).ln()
}

/// The dataset expressed in basis coordinates: distinct values of
/// `y_j = b_j(x)` with multiplicities.
#[derive(Clone, Debug)]
pub(crate) struct Projection {
    n: usize,
    basis_size: usize,
    n_obs: u64,
    patterns: Vec<(u128, u64)>,
    half_gamma: HalfGammaTable,
}

/// Scratch space for dense pattern counting.
pub(crate) struct Scratch {
    cells: Vec<u64>,
    touched: Vec<usize>,
}

/// Largest block rank counted with a dense scratch table.
const DENSE_RANK: usize = 20;

impl Projection {
    pub(crate) fn new(d: &Dataset, basis: &[Operator]) -> Result<Self> {
        if d.is_empty() {
            return Err(Error::EmptyDataset);
        }
        for op in basis {
            if op.n() != d.n() {
                return Err(Error::DimensionMismatch {
                    expected: d.n(),
                    found: op.n(),
                });
            }
        }
        if !gf2::are_independent(basis) {
            return Err(Error::DependentOperators);
        }
        let mut patterns: Vec<(u128, u64)> = d
            .counts()
            .iter()
            .map(|&(x, c)| {
                let y = basis
                    .iter()
                    .enumerate()
                    .fold(0u128, |y, (j, o)| y | (o.bit(x) as u128) << j);
                (y, c)
            })
            .collect();
        patterns.sort_unstable();
        patterns.dedup_by(|b, a| {
            if a.0 == b.0 {
                a.1 += b.1;
                true
            } else {
                false
            }
        });
        let n_obs = d.len() as u64;
        Ok(Projection {
            n: d.n(),
            basis_size: basis.len(),
            n_obs,
            patterns,
            half_gamma: HalfGammaTable::new(n_obs),
        })
    }

    pub(crate) fn n(&self) -> usize {
        self.n
    }

    pub(crate) fn basis_size(&self) -> usize {
        self.basis_size
    }

    pub(crate) fn scratch(&self) -> Scratch {
        let size = if self.basis_size <= DENSE_RANK {
            1usize << self.basis_size
        } else {
            0
        };
        Scratch {
            cells: vec![0; size],
            touched: Vec::new(),
        }
    }

    /// Nonzero pattern counts of the block given by `mask` over basis indices.
    fn block_counts(&self, mask: u128, scratch: &mut Scratch, out: &mut Vec<u64>) {
        out.clear();
        if !scratch.cells.is_empty() {
            for &(y, c) in &self.patterns {
                let key = (y & mask) as usize;
                if scratch.cells[key] == 0 {
                    scratch.touched.push(key);
                }
                scratch.cells[key] += c;
            }
            for &key in &scratch.touched {
                out.push(scratch.cells[key]);
                scratch.cells[key] = 0;
            }
            scratch.touched.clear();
        } else {
            let mut keys: Vec<(u128, u64)> =
                self.patterns.iter().map(|&(y, c)| (y & mask, c)).collect();
            keys.sort_unstable_by_key(|k| k.0);
            let mut i = 0;
            while i < keys.len() {
                let mut total = 0;
                let key = keys[i].0;
                while i < keys.len() && keys[i].0 == key {
                    total += keys[i].1;
                    i += 1;
                }
                out.push(total);
            }
        }
    }

    /// `(log-evidence, max log-likelihood)` of the block as a modeled ICC.
    pub(crate) fn block_terms(&self, mask: u128, scratch: &mut Scratch) -> (f64, f64) {
        let mut counts = Vec::new();
        self.block_counts(mask, scratch, &mut counts);
        let rank = mask.count_ones() as usize;
        let ev = log_evidence_from_counts(
            rank,
            self.n_obs,
            counts.iter().copied(),
            Some(&self.half_gamma),
        );
        let ll = log_likelihood_from_counts(self.n_obs, counts.iter().copied());
        (ev, ll)
    }

    /// Log-evidence of leaving `rank` directions uniform.
    pub(crate) fn uniform_term(&self, rank: usize) -> f64 {
        -(self.n_obs as f64) * rank as f64 * LN_2
    }

    /// Evidence report of a structure over this projection.
    pub(crate) fn report(&self, m: &McmStructure) -> Result<EvidenceReport> {
        if m.n() != self.n {
            return Err(Error::DimensionMismatch {
                expected: self.n,
                found: m.n(),
            });
        }
        if m.basis_size() != self.basis_size {
            return Err(Error::InvalidStructure(format!(
                "structure over {} basis operators, basis has {}",
                m.basis_size(),
                self.basis_size
            )));
        }
        let mut scratch = self.scratch();
        let mut per_block = Vec::new();
        for (i, b) in m.blocks().iter().enumerate() {
            if !b.modeled {
                continue;
            }
            let (ev, ll) = self.block_terms(b.mask(), &mut scratch);
            per_block.push(BlockEvidence {
                block: i,
                rank: b.rank(),
                log_evidence: ev,
                max_log_likelihood: ll,
            });
        }
        let modeled_rank = m.modeled_rank();
        let unmodeled_term = self.uniform_term(self.n - modeled_rank);
        let total_log_evidence =
            per_block.iter().map(|b| b.log_evidence).sum::<f64>() + unmodeled_term;
        let max_log_likelihood =
            per_block.iter().map(|b| b.max_log_likelihood).sum::<f64>() + unmodeled_term;
        let operator_count = m.operator_count();
        Ok(EvidenceReport {
            n_obs: self.n_obs,
            n: self.n,
            modeled_rank,
            per_block,
            unmodeled_term,
            total_log_evidence,
            max_log_likelihood,
            operator_count,
            first_order_complexity: first_order_complexity(operator_count, self.n_obs),
        })
    }
}

/// Log-evidence report of the MCM `m` over `basis` for dataset `d`.
pub fn mcm_log_evidence(d: &Dataset, basis: &Basis, m: &McmStructure) -> Result<EvidenceReport> {
    Projection::new(d, basis.operators())?.report(m)
}

/// Maximum log-likelihood of the MCM `m` over `basis`.
pub fn mcm_max_log_likelihood(d: &Dataset, basis: &Basis, m: &McmStructure) -> Result<f64> {
    Ok(mcm_log_evidence(d, basis, m)?.max_log_likelihood)
}
