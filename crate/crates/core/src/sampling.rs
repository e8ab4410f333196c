//! Fitting an MCM and drawing states from its maximum-likelihood distribution.
//!
//! For each modeled block a value pattern of its basis operators is drawn
//! (by evaluating the block on a uniformly chosen data row, or from the fitted
//! table), uniform directions get fair coin flips, and the assembled basis
//! values `y` are mapped back to spins with `x = y·T^{-1} (mod 2)`.

use std::sync::Arc;

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::basis::Basis;
use crate::dataset::{Dataset, DEFAULT_TABLE_CAP};
use crate::error::{Error, Result};
use crate::evidence::{fit_q, McmStructure};
use crate::gf2::{self, GaugeTransform, Operator, State};

/// An MCM with its maximum-likelihood pattern probabilities.
#[derive(Clone, Debug)]
pub struct FittedMcm {
    structure: McmStructure,
    operators: Vec<Operator>,
    /// One table per modeled block, in block order.
    q_tables: Vec<Vec<f64>>,
    transform: GaugeTransform,
    inverse: GaugeTransform,
    source: Option<Arc<Dataset>>,
}

fn pattern_of(y: State, members: &[usize]) -> usize {
    members
        .iter()
        .enumerate()
        .fold(0usize, |p, (t, &j)| p | ((y >> j & 1) as usize) << t)
}

fn scatter(p: usize, members: &[usize]) -> State {
    members
        .iter()
        .enumerate()
        .fold(0, |y, (t, &j)| y | ((p >> t & 1) as u128) << j)
}

impl FittedMcm {
    /// Fits `m` over `basis` to `d`; keeps `d` for row resampling.
    pub fn fit(d: &Dataset, basis: &Basis, m: &McmStructure) -> Result<Self> {
        Self::fit_capped(d, basis, m, DEFAULT_TABLE_CAP)
    }

    pub fn fit_capped(d: &Dataset, basis: &Basis, m: &McmStructure, cap: usize) -> Result<Self> {
        check_structure(d.n(), basis.operators(), m)?;
        let mut q_tables = Vec::new();
        for b in m.blocks().iter().filter(|b| b.modeled) {
            let ops: Vec<Operator> = b.members.iter().map(|&j| basis.operators()[j]).collect();
            q_tables.push(fit_q(&d.project_counts_capped(&ops, cap)?));
        }
        let transform = basis.transform().clone();
        let inverse = transform.invert()?;
        Ok(FittedMcm {
            structure: m.clone(),
            operators: basis.operators().to_vec(),
            q_tables,
            transform,
            inverse,
            source: Some(Arc::new(d.clone())),
        })
    }

    /// Builds a model from explicit probability tables, without source data.
    pub fn from_tables(
        n: usize,
        operators: Vec<Operator>,
        structure: McmStructure,
        q_tables: Vec<Vec<f64>>,
    ) -> Result<Self> {
        check_structure(n, &operators, &structure)?;
        let modeled: Vec<_> = structure.blocks().iter().filter(|b| b.modeled).collect();
        if modeled.len() != q_tables.len() {
            return Err(Error::InvalidProbabilities(format!(
                "{} tables for {} modeled blocks",
                q_tables.len(),
                modeled.len()
            )));
        }
        for (b, q) in modeled.iter().zip(&q_tables) {
            if q.len() != 1usize << b.rank() {
                return Err(Error::InvalidProbabilities(format!(
                    "block of rank {} needs {} probabilities, got {}",
                    b.rank(),
                    1usize << b.rank(),
                    q.len()
                )));
            }
            check_probabilities(q)?;
        }
        let transform = gf2::complete_basis(&operators, n)?;
        let inverse = transform.invert()?;
        Ok(FittedMcm {
            structure,
            operators,
            q_tables,
            transform,
            inverse,
            source: None,
        })
    }

    pub fn structure(&self) -> &McmStructure {
        &self.structure
    }

    pub fn operators(&self) -> &[Operator] {
        &self.operators
    }

    /// Fitted tables, one per modeled block in block order.
    pub fn q_tables(&self) -> &[Vec<f64>] {
        &self.q_tables
    }

    pub fn transform(&self) -> &GaugeTransform {
        &self.transform
    }

    pub fn n(&self) -> usize {
        self.transform.n()
    }

    /// Mask over basis coordinates of the directions drawn as fair coins.
    fn coin_mask(&self) -> u128 {
        let mut mask = gf2::width_mask(self.n()) & !gf2::width_mask(self.operators.len());
        for b in self.structure.blocks().iter().filter(|b| !b.modeled) {
            mask |= b.mask();
        }
        mask
    }

    fn streams(&self, seed: u64) -> (ChaCha8Rng, Vec<ChaCha8Rng>) {
        let base = ChaCha8Rng::seed_from_u64(seed);
        let mut coins = base.clone();
        coins.set_stream(0);
        let blocks = (0..self.q_tables.len())
            .map(|a| {
                let mut r = base.clone();
                r.set_stream(a as u64 + 1);
                r
            })
            .collect();
        (coins, blocks)
    }

    /// Draws `count` states. Uses row resampling when the model was fitted to
    /// data and table sampling otherwise. Deterministic in `seed`.
    pub fn sample(&self, seed: u64, count: usize) -> Vec<State> {
        match &self.source {
            Some(d) => self.sample_rows(d, seed, count),
            None => self.sample_from_tables(seed, count),
        }
    }

    fn sample_rows(&self, d: &Dataset, seed: u64, count: usize) -> Vec<State> {
        let (mut coins, mut streams) = self.streams(seed);
        let coin_mask = self.coin_mask();
        let modeled: Vec<&[usize]> = self
            .structure
            .blocks()
            .iter()
            .filter(|b| b.modeled)
            .map(|b| b.members.as_slice())
            .collect();
        let rows = d.rows();
        (0..count)
            .map(|_| {
                let mut y = coins.random::<u128>() & coin_mask;
                for (members, rng) in modeled.iter().zip(streams.iter_mut()) {
                    let row = rows[rng.random_range(0..rows.len())];
                    for &j in *members {
                        y |= (self.operators[j].bit(row) as u128) << j;
                    }
                }
                self.inverse.apply_unchecked(y)
            })
            .collect()
    }

    /// Draws patterns from the fitted tables by inverse CDF.
    pub fn sample_from_tables(&self, seed: u64, count: usize) -> Vec<State> {
        let (mut coins, mut streams) = self.streams(seed);
        let coin_mask = self.coin_mask();
        let blocks: Vec<(&[usize], WeightedIndex<f64>)> = self
            .structure
            .blocks()
            .iter()
            .filter(|b| b.modeled)
            .zip(&self.q_tables)
            .map(|(b, q)| {
                let dist = WeightedIndex::new(q).expect("tables are validated probabilities");
                (b.members.as_slice(), dist)
            })
            .collect();
        (0..count)
            .map(|_| {
                let mut y = coins.random::<u128>() & coin_mask;
                for ((members, dist), rng) in blocks.iter().zip(streams.iter_mut()) {
                    y |= scatter(dist.sample(rng), members);
                }
                self.inverse.apply_unchecked(y)
            })
            .collect()
    }

    /// Log-probability of a state under the fitted model.
    pub fn log_prob(&self, x: State) -> f64 {
        let y = self.transform.apply_unchecked(x);
        let uniform = (self.n() - self.structure.modeled_rank()) as f64 * std::f64::consts::LN_2;
        self.structure
            .blocks()
            .iter()
            .filter(|b| b.modeled)
            .zip(&self.q_tables)
            .map(|(b, q)| q[pattern_of(y, &b.members)].ln())
            .sum::<f64>()
            - uniform
    }

    /// Pattern index of each modeled block for the state `x`.
    pub fn block_patterns(&self, x: State) -> Vec<usize> {
        let y = self.transform.apply_unchecked(x);
        self.structure
            .blocks()
            .iter()
            .filter(|b| b.modeled)
            .map(|b| pattern_of(y, &b.members))
            .collect()
    }
}

fn check_structure(n: usize, operators: &[Operator], m: &McmStructure) -> Result<()> {
    if m.n() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: m.n(),
        });
    }
    if m.basis_size() != operators.len() {
        return Err(Error::InvalidStructure(format!(
            "structure over {} basis operators, basis has {}",
            m.basis_size(),
            operators.len()
        )));
    }
    Ok(())
}

fn check_probabilities(p: &[f64]) -> Result<()> {
    if p.iter().any(|&v| !(0.0..=1.0).contains(&v)) {
        return Err(Error::InvalidProbabilities(
            "values must lie in [0, 1]".into(),
        ));
    }
    let sum: f64 = p.iter().sum();
    if (sum - 1.0).abs() > 1e-12 {
        return Err(Error::InvalidProbabilities(format!(
            "sum is {sum}, expected 1"
        )));
    }
    Ok(())
}

/// Draws `count` i.i.d. observations among `states` with probabilities `probs`.
pub fn generate_synthetic(
    n: usize,
    states: &[State],
    probs: &[f64],
    count: usize,
    seed: u64,
) -> Result<Dataset> {
    if states.len() != probs.len() || states.is_empty() {
        return Err(Error::InvalidProbabilities(format!(
            "{} states with {} probabilities",
            states.len(),
            probs.len()
        )));
    }
    check_probabilities(probs)?;
    let mut distinct = states.to_vec();
    distinct.sort_unstable();
    distinct.dedup();
    if distinct.len() != states.len() {
        return Err(Error::InvalidProbabilities(
            "states must be distinct".into(),
        ));
    }
    let dist = WeightedIndex::new(probs).map_err(|e| Error::InvalidProbabilities(e.to_string()))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let rows = (0..count).map(|_| states[dist.sample(&mut rng)]).collect();
    Dataset::from_rows(n, rows)
}
