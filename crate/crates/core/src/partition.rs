//! Enumeration of set partitions as restricted-growth strings.
//!
//! A restricted-growth string `a` of length `n` has `a[0] = 0` and
//! `a[i] <= 1 + max(a[..i])`; element `i` belongs to block `a[i]`. Every set
//! partition of `0..n` has exactly one such string, and the strings are
//! produced here in lexicographic order.

/// Iterator over all set partitions of `0..n`.
#[derive(Clone, Debug)]
pub struct PartitionIterator {
    rgs: Vec<usize>,
    maxes: Vec<usize>,
    started: bool,
    done: bool,
}

/// All partitions of `0..n` in lexicographic restricted-growth order.
pub fn enumerate_partitions(n: usize) -> PartitionIterator {
    PartitionIterator::new(n)
}

impl PartitionIterator {
    pub fn new(n: usize) -> Self {
        PartitionIterator {
            rgs: vec![0; n],
            maxes: vec![0; n],
            started: false,
            done: false,
        }
    }

    pub fn len_elements(&self) -> usize {
        self.rgs.len()
    }

    /// Advances to the next partition without allocating.
    pub fn advance(&mut self) -> Option<&[usize]> {
        if self.done {
            return None;
        }
        if !self.started {
            self.started = true;
            return Some(&self.rgs);
        }
        let n = self.rgs.len();
        let Some(i) = (1..n).rev().find(|&i| self.rgs[i] <= self.maxes[i - 1]) else {
            self.done = true;
            return None;
        };
        self.rgs[i] += 1;
        self.maxes[i] = self.maxes[i - 1].max(self.rgs[i]);
        for j in i + 1..n {
            self.rgs[j] = 0;
            self.maxes[j] = self.maxes[i];
        }
        Some(&self.rgs)
    }
}

impl Iterator for PartitionIterator {
    type Item = Vec<usize>;

    fn next(&mut self) -> Option<Vec<usize>> {
        self.advance().map(<[usize]>::to_vec)
    }
}
