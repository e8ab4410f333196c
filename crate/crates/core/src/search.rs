//! Selection of the best MCM over a fixed basis.
//!
//! Each block of a candidate partition is scored as the better of modeling it
//! as an ICC or leaving it uniform, which covers every MCM of rank `r <= n`
//! that admits the basis as a preferred basis.

use std::collections::HashMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::basis::Basis;
use crate::dataset::{Dataset, DEFAULT_TABLE_CAP};
use crate::error::{Error, Result};
use crate::evidence::{Block, EvidenceReport, McmStructure, Projection};
use crate::partition::PartitionIterator;

/// Default cap on the basis size for the exhaustive partition scan.
pub const DEFAULT_PARTITION_CAP: usize = 15;

const BATCH: usize = 1 << 15;

/// Size caps for the MCM searches.
#[derive(Clone, Copy, Debug)]
pub struct SearchOptions {
    /// Largest basis size scanned exhaustively.
    pub max_exhaustive: usize,
    /// Largest block rank the greedy merge may create.
    pub table_cap: usize,
}

impl Default for SearchOptions {
    fn default() -> Self {
        SearchOptions {
            max_exhaustive: DEFAULT_PARTITION_CAP,
            table_cap: DEFAULT_TABLE_CAP,
        }
    }
}

/// Score of one block: modeled log-evidence, and whether modeling beats
/// leaving it uniform.
#[derive(Clone, Copy, Debug)]
struct BlockScore {
    evidence: f64,
    modeled: bool,
}

fn score(p: &Projection, mask: u128, scratch: &mut crate::evidence::Scratch) -> BlockScore {
    let (ev, _) = p.block_terms(mask, scratch);
    let uniform = p.uniform_term(mask.count_ones() as usize);
    BlockScore {
        evidence: ev,
        modeled: ev > uniform,
    }
}

/// Total log-evidence of blocks given by masks, summed in the given order.
///
/// Uses the same arithmetic as the evidence report: modeled blocks summed in
/// order, then one uniform term for every unmodeled direction.
fn total_of(p: &Projection, blocks: impl Iterator<Item = (u128, BlockScore)>) -> (f64, usize) {
    let mut acc = 0.0;
    let mut modeled_rank = 0;
    let mut count = 0;
    let mut any_uniform = false;
    for (mask, s) in blocks {
        if s.modeled {
            acc += s.evidence;
            modeled_rank += mask.count_ones() as usize;
            count += 1;
        } else {
            any_uniform = true;
        }
    }
    (
        acc + p.uniform_term(p.n() - modeled_rank),
        count + any_uniform as usize,
    )
}

fn structure_from_masks(p: &Projection, blocks: &[(u128, BlockScore)]) -> Result<McmStructure> {
    let blocks = blocks
        .iter()
        .map(|&(mask, s)| Block {
            members: (0..128).filter(|&i| mask >> i & 1 == 1).collect(),
            modeled: s.modeled,
        })
        .collect();
    McmStructure::new(p.n(), p.basis_size(), blocks)
}

fn rgs_masks(rgs: &[usize], out: &mut Vec<u128>) {
    out.clear();
    for (i, &b) in rgs.iter().enumerate() {
        if b == out.len() {
            out.push(0);
        }
        out[b] |= 1u128 << i;
    }
}

#[derive(Clone, Copy, Debug)]
struct Candidate {
    total: f64,
    blocks: usize,
    index: u64,
}

impl Candidate {
    fn better_than(&self, other: &Candidate) -> bool {
        if self.total != other.total {
            return self.total > other.total;
        }
        if self.blocks != other.blocks {
            return self.blocks < other.blocks;
        }
        self.index < other.index
    }
}

/// Best MCM over `basis` by scanning every set partition of the basis.
pub fn best_mcm_exhaustive(d: &Dataset, basis: &Basis) -> Result<(McmStructure, EvidenceReport)> {
    best_mcm_exhaustive_with(d, basis, SearchOptions::default())
}

pub fn best_mcm_exhaustive_with(
    d: &Dataset,
    basis: &Basis,
    opts: SearchOptions,
) -> Result<(McmStructure, EvidenceReport)> {
    let r = basis.len();
    if r > opts.max_exhaustive {
        return Err(Error::CapExceeded {
            what: "basis size for exhaustive MCM search",
            value: r,
            cap: opts.max_exhaustive,
        });
    }
    let p = Projection::new(d, basis.operators())?;
    let scores: Vec<BlockScore> = (0..1u128 << r)
        .into_par_iter()
        .map_init(
            || p.scratch(),
            |scratch, mask| {
                if mask == 0 {
                    BlockScore {
                        evidence: 0.0,
                        modeled: false,
                    }
                } else {
                    score(&p, mask, scratch)
                }
            },
        )
        .collect();

    let mut iter = PartitionIterator::new(r);
    let mut best: Option<(Candidate, Vec<usize>)> = None;
    let mut batch: Vec<Vec<usize>> = Vec::with_capacity(BATCH);
    let mut index = 0u64;
    loop {
        batch.clear();
        while batch.len() < BATCH {
            match iter.advance() {
                Some(rgs) => batch.push(rgs.to_vec()),
                None => break,
            }
        }
        if batch.is_empty() {
            break;
        }
        let base = index;
        index += batch.len() as u64;
        let local = batch
            .par_iter()
            .enumerate()
            .map_init(Vec::new, |masks, (i, rgs)| {
                rgs_masks(rgs, masks);
                let (total, blocks) = total_of(&p, masks.iter().map(|&m| (m, scores[m as usize])));
                Candidate {
                    total,
                    blocks,
                    index: base + i as u64,
                }
            })
            .reduce_with(|a, b| if b.better_than(&a) { b } else { a });
        if let Some(c) = local {
            if best.as_ref().is_none_or(|(b, _)| c.better_than(b)) {
                best = Some((c, batch[(c.index - base) as usize].clone()));
            }
        }
    }
    let (_, rgs) = best.expect("at least one partition exists");
    let mut masks = Vec::new();
    rgs_masks(&rgs, &mut masks);
    let blocks: Vec<(u128, BlockScore)> = masks.iter().map(|&m| (m, scores[m as usize])).collect();
    let structure = structure_from_masks(&p, &blocks)?.canonical_model();
    let report = p.report(&structure)?;
    Ok((structure, report))
}

/// One state of the hierarchical merge.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MergeStep {
    /// Indices, in the previous step's structure, of the two merged blocks.
    pub merged: Option<(usize, usize)>,
    pub structure: McmStructure,
    pub total_log_evidence: f64,
}

/// Path of the hierarchical merge from singletons towards a single block.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MergeTrace {
    pub steps: Vec<MergeStep>,
    best: usize,
}

impl MergeTrace {
    pub fn best_index(&self) -> usize {
        self.best
    }

    /// The step of highest evidence along the path.
    pub fn best(&self) -> &MergeStep {
        &self.steps[self.best]
    }
}

/// Hierarchical merging starting from the independent model.
pub fn best_mcm_greedy(d: &Dataset, basis: &Basis) -> Result<MergeTrace> {
    best_mcm_greedy_with(d, basis, SearchOptions::default())
}

pub fn best_mcm_greedy_with(d: &Dataset, basis: &Basis, opts: SearchOptions) -> Result<MergeTrace> {
    let p = Projection::new(d, basis.operators())?;
    let r = basis.len();
    let mut memo: HashMap<u128, BlockScore> = HashMap::new();
    let fill = |memo: &mut HashMap<u128, BlockScore>, masks: Vec<u128>| {
        let missing: Vec<u128> = masks
            .into_iter()
            .filter(|m| !memo.contains_key(m))
            .collect();
        let scored: Vec<(u128, BlockScore)> = missing
            .into_par_iter()
            .map_init(|| p.scratch(), |s, m| (m, score(&p, m, s)))
            .collect();
        memo.extend(scored);
    };

    let mut blocks: Vec<u128> = (0..r).map(|i| 1u128 << i).collect();
    fill(&mut memo, blocks.clone());
    let snapshot =
        |blocks: &[u128], memo: &HashMap<u128, BlockScore>| -> Result<(McmStructure, f64, usize)> {
            let scored: Vec<(u128, BlockScore)> = blocks.iter().map(|&m| (m, memo[&m])).collect();
            let (total, count) = total_of(&p, scored.iter().copied());
            Ok((structure_from_masks(&p, &scored)?, total, count))
        };

    let (structure, total, count) = snapshot(&blocks, &memo)?;
    let mut steps = vec![MergeStep {
        merged: None,
        structure,
        total_log_evidence: total,
    }];
    let mut best = (0usize, total, count);

    while blocks.len() > 1 {
        let mut pairs = Vec::new();
        for i in 0..blocks.len() {
            for j in i + 1..blocks.len() {
                let rank = (blocks[i] | blocks[j]).count_ones() as usize;
                if rank <= opts.table_cap {
                    pairs.push((i, j));
                }
            }
        }
        if pairs.is_empty() {
            break;
        }
        fill(
            &mut memo,
            pairs.iter().map(|&(i, j)| blocks[i] | blocks[j]).collect(),
        );
        let value = |m: u128| {
            let s = memo[&m];
            if s.modeled {
                s.evidence
            } else {
                p.uniform_term(m.count_ones() as usize)
            }
        };
        let mut choice = pairs[0];
        let mut best_delta = f64::NEG_INFINITY;
        for &(i, j) in &pairs {
            let delta = value(blocks[i] | blocks[j]) - value(blocks[i]) - value(blocks[j]);
            if delta > best_delta {
                best_delta = delta;
                choice = (i, j);
            }
        }
        let (i, j) = choice;
        let merged = blocks[i] | blocks[j];
        blocks.remove(j);
        blocks[i] = merged;
        blocks.sort_by_key(|m| m.trailing_zeros());
        let (structure, total, count) = snapshot(&blocks, &memo)?;
        steps.push(MergeStep {
            merged: Some(choice),
            structure,
            total_log_evidence: total,
        });
        if total > best.1 || (total == best.1 && count < best.2) {
            best = (steps.len() - 1, total, count);
        }
    }
    Ok(MergeTrace {
        steps,
        best: best.0,
    })
}
