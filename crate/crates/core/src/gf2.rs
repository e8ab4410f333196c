//! Spin operators as bit masks and the GF(2) linear algebra built on them.
//!
//! A configuration of `n` spins is stored as an `n`-bit word `x` with the
//! convention `s_i = (-1)^{x_i}`: bit `i` set means spin `i` is `-1`. An
//! operator is the product of the spins selected by its mask, so its value on
//! a state is `(-1)^{parity(mask & x)}`. Products of operators are XORs of
//! masks, and independence of a set of operators is linear independence of
//! the masks over GF(2).

use std::fmt;
use std::sync::OnceLock;

use crate::error::{Error, Result};

/// Largest supported number of spin variables.
pub const MAX_VARIABLES: usize = 128;

/// An `n`-bit spin configuration, bit `i` set meaning `s_i = -1`.
pub type State = u128;

/// Mask with the low `n` bits set.
pub fn width_mask(n: usize) -> u128 {
    if n >= 128 {
        u128::MAX
    } else {
        (1u128 << n) - 1
    }
}

pub(crate) fn check_width(n: usize) -> Result<()> {
    if n == 0 || n > MAX_VARIABLES {
        return Err(Error::UnsupportedWidth(n));
    }
    Ok(())
}

#[inline]
pub(crate) fn parity(x: u128) -> bool {
    x.count_ones() & 1 == 1
}

/// A spin operator: the product of the spins whose bits are set in `mask`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Operator {
    mask: u128,
    n: usize,
}

impl Operator {
    pub fn new(mask: u128, n: usize) -> Result<Self> {
        check_width(n)?;
        if mask & !width_mask(n) != 0 {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: 128 - mask.leading_zeros() as usize,
            });
        }
        Ok(Operator { mask, n })
    }

    /// The identity operator, equal to `+1` on every state.
    pub fn identity(n: usize) -> Result<Self> {
        Operator::new(0, n)
    }

    /// The single-spin operator `s_i` (zero-based index).
    pub fn spin(i: usize, n: usize) -> Result<Self> {
        if i >= n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: i + 1,
            });
        }
        Operator::new(1u128 << i, n)
    }

    /// The product of the listed spins (zero-based indices).
    pub fn from_spins(spins: &[usize], n: usize) -> Result<Self> {
        let mut mask = 0u128;
        for &i in spins {
            if i >= n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    found: i + 1,
                });
            }
            mask ^= 1u128 << i;
        }
        Operator::new(mask, n)
    }

    /// Parses a string of `n` characters `0`/`1`, character `i` selecting spin `i`.
    pub fn parse_bits(s: &str) -> Result<Self> {
        let n = s.chars().count();
        check_width(n)?;
        let mut mask = 0u128;
        for (i, c) in s.chars().enumerate() {
            match c {
                '0' => {}
                '1' => mask |= 1u128 << i,
                _ => {
                    return Err(Error::InvalidStructure(format!(
                        "invalid character {c:?} in operator mask"
                    )))
                }
            }
        }
        Operator::new(mask, n)
    }

    pub fn mask(&self) -> u128 {
        self.mask
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Interaction order: the number of spins in the operator.
    pub fn order(&self) -> u32 {
        self.mask.count_ones()
    }

    pub fn is_identity(&self) -> bool {
        self.mask == 0
    }

    /// Indices of the spins involved, in increasing order.
    pub fn spins(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.n).filter(move |&i| self.mask >> i & 1 == 1)
    }

    /// Product of two operators (XOR of masks).
    pub fn product(&self, other: &Operator) -> Result<Operator> {
        if self.n != other.n {
            return Err(Error::DimensionMismatch {
                expected: self.n,
                found: other.n,
            });
        }
        Ok(Operator {
            mask: self.mask ^ other.mask,
            n: self.n,
        })
    }

    /// Value of the operator on `state`, `+1` or `-1`.
    pub fn evaluate(&self, state: State) -> Result<i8> {
        if state & !width_mask(self.n) != 0 {
            return Err(Error::DimensionMismatch {
                expected: self.n,
                found: 128 - state.leading_zeros() as usize,
            });
        }
        Ok(self.sign(state))
    }

    /// Bit value `y` of the operator on a state (`1` when it evaluates to `-1`).
    #[inline]
    pub fn bit(&self, state: State) -> bool {
        parity(self.mask & state)
    }

    #[inline]
    pub(crate) fn sign(&self, state: State) -> i8 {
        if self.bit(state) {
            -1
        } else {
            1
        }
    }

    /// The mask as `n` characters, character `i` for spin `i`.
    pub fn to_bits_string(&self) -> String {
        (0..self.n)
            .map(|i| if self.mask >> i & 1 == 1 { '1' } else { '0' })
            .collect()
    }
}

impl fmt::Display for Operator {
    /// Human-readable product form such as `s1 s3` (one-based), or `1` for the identity.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_identity() {
            return write!(f, "1");
        }
        let names: Vec<String> = self.spins().map(|i| format!("s{}", i + 1)).collect();
        write!(f, "{}", names.join(" "))
    }
}

/// Incrementally maintained GF(2) span of a set of masks.
///
/// Each stored vector is reduced so that its highest set bit is a pivot no
/// other stored vector has as pivot.
#[derive(Clone, Debug)]
pub struct Gf2Span {
    pivots: Vec<u128>,
    rank: usize,
}

impl Default for Gf2Span {
    fn default() -> Self {
        Gf2Span {
            pivots: vec![0; 128],
            rank: 0,
        }
    }
}

impl Gf2Span {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    /// Reduces `v` against the span; zero means `v` lies in the span.
    pub fn reduce(&self, mut v: u128) -> u128 {
        while v != 0 {
            let top = 127 - v.leading_zeros() as usize;
            let p = self.pivots[top];
            if p == 0 {
                return v;
            }
            v ^= p;
        }
        0
    }

    pub fn contains(&self, v: u128) -> bool {
        self.reduce(v) == 0
    }

    /// Adds `v` to the span. Returns `false` (and leaves the span unchanged)
    /// when `v` is already in it.
    pub fn insert(&mut self, v: u128) -> bool {
        let r = self.reduce(v);
        if r == 0 {
            return false;
        }
        let top = 127 - r.leading_zeros() as usize;
        self.pivots[top] = r;
        self.rank += 1;
        true
    }
}

fn check_same_width(ops: &[Operator]) -> Result<usize> {
    let n = ops.first().map(|o| o.n).unwrap_or(0);
    for o in ops {
        if o.n != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: o.n,
            });
        }
    }
    Ok(n)
}

/// Rank over GF(2) of a set of operators.
pub fn gf2_rank(ops: &[Operator]) -> usize {
    let mut span = Gf2Span::new();
    ops.iter().filter(|o| span.insert(o.mask)).count()
}

/// True if no operator in `ops` is a product of the others.
pub fn are_independent(ops: &[Operator]) -> bool {
    gf2_rank(ops) == ops.len()
}

/// Inverts the square matrix whose rows are `rows` (bit `j` of row `i` is
/// entry `(i, j)`), returning the rows of the inverse.
fn invert_rows(rows: &[u128]) -> Option<Vec<u128>> {
    let n = rows.len();
    let mut a = rows.to_vec();
    let mut inv: Vec<u128> = (0..n).map(|i| 1u128 << i).collect();
    for col in 0..n {
        let pivot = (col..n).find(|&r| a[r] >> col & 1 == 1)?;
        a.swap(col, pivot);
        inv.swap(col, pivot);
        for r in 0..n {
            if r != col && a[r] >> col & 1 == 1 {
                a[r] ^= a[col];
                inv[r] ^= inv[col];
            }
        }
    }
    Some(inv)
}

/// An invertible change of spin variables `x -> y = x·T (mod 2)`.
///
/// Column `j` of `T` is the mask of the `j`-th new variable `b_j`, so
/// `y_j = parity(b_j & x)`. The inverse is computed on first use.
#[derive(Debug)]
pub struct GaugeTransform {
    columns: Vec<Operator>,
    inverse_columns: OnceLock<Vec<u128>>,
}

impl Clone for GaugeTransform {
    fn clone(&self) -> Self {
        let inverse_columns = OnceLock::new();
        if let Some(inv) = self.inverse_columns.get() {
            let _ = inverse_columns.set(inv.clone());
        }
        GaugeTransform {
            columns: self.columns.clone(),
            inverse_columns,
        }
    }
}

impl PartialEq for GaugeTransform {
    fn eq(&self, other: &Self) -> bool {
        self.columns == other.columns
    }
}

impl GaugeTransform {
    /// Builds a transform from `n` independent operators over `n` spins.
    pub fn new(columns: Vec<Operator>) -> Result<Self> {
        let n = check_same_width(&columns)?;
        if columns.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: columns.len(),
            });
        }
        let masks: Vec<u128> = columns.iter().map(|c| c.mask).collect();
        let inv = invert_rows(&masks).ok_or(Error::SingularMatrix)?;
        let inverse_columns = OnceLock::new();
        let _ = inverse_columns.set(inv);
        Ok(GaugeTransform {
            columns,
            inverse_columns,
        })
    }

    /// The identity transform on `n` spins.
    pub fn identity(n: usize) -> Result<Self> {
        let cols = (0..n)
            .map(|i| Operator::spin(i, n))
            .collect::<Result<Vec<_>>>()?;
        GaugeTransform::new(cols)
    }

    pub fn n(&self) -> usize {
        self.columns.len()
    }

    pub fn columns(&self) -> &[Operator] {
        &self.columns
    }

    fn inverse_masks(&self) -> &[u128] {
        self.inverse_columns.get_or_init(|| {
            let masks: Vec<u128> = self.columns.iter().map(|c| c.mask).collect();
            invert_rows(&masks).expect("columns were checked invertible on construction")
        })
    }

    /// The inverse transform, `y -> x`.
    ///
    /// Rows of `T^T` are the column masks, and `(T^T)^{-1} = (T^{-1})^T`, so
    /// inverting the column masks as rows yields the inverse's columns.
    pub fn invert(&self) -> Result<GaugeTransform> {
        let n = self.n();
        let cols = self
            .inverse_masks()
            .iter()
            .map(|&m| Operator::new(m, n))
            .collect::<Result<Vec<_>>>()?;
        GaugeTransform::new(cols)
    }

    /// Maps a state to the new variables: `y_j = parity(b_j & x)`.
    pub fn apply(&self, state: State) -> Result<State> {
        self.check_state(state)?;
        Ok(self.apply_unchecked(state))
    }

    /// Maps new-variable values back to the original state.
    pub fn apply_inverse(&self, y: State) -> Result<State> {
        self.check_state(y)?;
        Ok(self.apply_inverse_unchecked(y))
    }

    #[inline]
    pub(crate) fn apply_unchecked(&self, state: State) -> State {
        self.columns
            .iter()
            .enumerate()
            .fold(0, |y, (j, c)| y | (c.bit(state) as u128) << j)
    }

    #[inline]
    pub(crate) fn apply_inverse_unchecked(&self, y: State) -> State {
        self.inverse_masks()
            .iter()
            .enumerate()
            .fold(0, |x, (j, &u)| x | (parity(u & y) as u128) << j)
    }

    /// Expresses an operator on the original spins in the new variables.
    ///
    /// The result `μ'` satisfies `φ^{μ'}(T(x)) = φ^μ(x)` for every state,
    /// i.e. it lists which new variables multiply together to give `φ^μ`.
    pub fn transform_operator(&self, op: &Operator) -> Result<Operator> {
        if op.n != self.n() {
            return Err(Error::DimensionMismatch {
                expected: self.n(),
                found: op.n,
            });
        }
        let inv = self.inverse_masks();
        let mask = op.spins().fold(0u128, |m, i| m ^ inv[i]);
        Operator::new(mask, self.n())
    }

    fn check_state(&self, state: State) -> Result<()> {
        if state & !width_mask(self.n()) != 0 {
            return Err(Error::DimensionMismatch {
                expected: self.n(),
                found: 128 - state.leading_zeros() as usize,
            });
        }
        Ok(())
    }
}

/// Inverse of a gauge transform mod 2.
pub fn invert_mod2(t: &GaugeTransform) -> Result<GaugeTransform> {
    t.invert()
}

/// Extends `r` independent operators to a full basis of `n` operators.
///
/// The given operators become the first `r` columns; the remaining columns are
/// single-spin operators taken in increasing spin index, skipping any that
/// are already in the span.
pub fn complete_basis(ops: &[Operator], n: usize) -> Result<GaugeTransform> {
    check_width(n)?;
    for o in ops {
        if o.n != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: o.n,
            });
        }
    }
    let mut span = Gf2Span::new();
    for o in ops {
        if !span.insert(o.mask) {
            return Err(Error::DependentOperators);
        }
    }
    let mut cols = ops.to_vec();
    for i in 0..n {
        if cols.len() == n {
            break;
        }
        if span.insert(1u128 << i) {
            cols.push(Operator {
                mask: 1u128 << i,
                n,
            });
        }
    }
    GaugeTransform::new(cols)
}
