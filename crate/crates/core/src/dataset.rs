//! Binary datasets: loading, writing, operator statistics and projection of
//! the observations onto a block of basis operators.
//!
//! File format: one observation per line, exactly `n` characters `0`/`1`.
//! Character `i` is the bit `x_i` of spin `i`, so `1` means `s_i = -1`.
//! Blank lines and lines starting with `#` are ignored.

use std::fs;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::gf2::{self, GaugeTransform, Gf2Span, Operator, State};

/// Default cap on the rank of a dense block count table (`2^20` cells).
pub const DEFAULT_TABLE_CAP: usize = 20;

/// `N` observations of `n` binary variables.
///
/// Keeps both the rows in file order and a compressed table of distinct
/// states with multiplicities, sorted by state.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Dataset {
    n: usize,
    rows: Vec<State>,
    counts: Vec<(State, u64)>,
}

/// Counts of the `2^r` value patterns of a block of `r` independent operators.
///
/// Bit `j` of a pattern index is `1` when operator `j` of the block evaluates
/// to `-1`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BlockCounts {
    rank: usize,
    counts: Vec<u64>,
}

impl BlockCounts {
    pub fn new(rank: usize, counts: Vec<u64>) -> Result<Self> {
        if rank == 0 || counts.len() != 1usize << rank {
            return Err(Error::InvalidStructure(format!(
                "a rank-{rank} table needs 2^{rank} cells, got {}",
                counts.len()
            )));
        }
        Ok(BlockCounts { rank, counts })
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }
}

/// Variable relabeling applied at load time: output variable `i` takes input
/// column `source[i]`, inverted when `flip[i]` is set.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Relabel {
    source: Vec<usize>,
    flip: Vec<bool>,
}

impl Relabel {
    pub fn new(source: Vec<usize>, flip: Vec<bool>) -> Result<Self> {
        let n = source.len();
        if flip.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: flip.len(),
            });
        }
        let mut seen = vec![false; n];
        for &s in &source {
            if s >= n || seen[s] {
                return Err(Error::InvalidStructure(
                    "relabel sources must be a permutation of 0..n".into(),
                ));
            }
            seen[s] = true;
        }
        Ok(Relabel { source, flip })
    }

    /// Reads a relabel file: one line per output variable, `<source> [<flip>]`
    /// with a zero-based source column and `flip` equal to `0` or `1`.
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)?;
        let mut source = Vec::new();
        let mut flip = Vec::new();
        for (idx, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let err = |message: String| Error::Parse {
                path: path.to_path_buf(),
                line: idx + 1,
                message,
            };
            let mut fields = line.split_whitespace();
            let s: usize = fields
                .next()
                .unwrap_or_default()
                .parse()
                .map_err(|_| err(format!("bad source index in {line:?}")))?;
            let f = match fields.next() {
                None | Some("0") => false,
                Some("1") => true,
                Some(other) => return Err(err(format!("bad flip flag {other:?}"))),
            };
            source.push(s);
            flip.push(f);
        }
        Relabel::new(source, flip)
    }

    pub fn n(&self) -> usize {
        self.source.len()
    }

    pub fn apply(&self, x: State) -> State {
        self.source
            .iter()
            .zip(&self.flip)
            .enumerate()
            .fold(0, |y, (i, (&s, &f))| {
                y | (((x >> s & 1 == 1) ^ f) as u128) << i
            })
    }
}

impl Dataset {
    /// Builds a dataset from rows of width `n`.
    pub fn from_rows(n: usize, rows: Vec<State>) -> Result<Self> {
        gf2::check_width(n)?;
        let limit = gf2::width_mask(n);
        if let Some(bad) = rows.iter().find(|&&r| r & !limit != 0) {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: 128 - bad.leading_zeros() as usize,
            });
        }
        let mut sorted = rows.clone();
        sorted.sort_unstable();
        let mut counts: Vec<(State, u64)> = Vec::new();
        for s in sorted {
            match counts.last_mut() {
                Some((last, c)) if *last == s => *c += 1,
                _ => counts.push((s, 1)),
            }
        }
        Ok(Dataset { n, rows, counts })
    }

    /// Loads a dataset file with `n` variables per line.
    pub fn load(path: &Path, n: usize) -> Result<Self> {
        Self::load_with(path, n, None)
    }

    /// Loads a dataset, optionally relabeling variables.
    pub fn load_with(path: &Path, n: usize, relabel: Option<&Relabel>) -> Result<Self> {
        let file = fs::File::open(path)?;
        Self::parse(BufReader::new(file), n, path, relabel)
    }

    /// Parses the dataset text format. `origin` is used in error messages.
    pub fn parse<R: Read>(
        reader: BufReader<R>,
        n: usize,
        origin: &Path,
        relabel: Option<&Relabel>,
    ) -> Result<Self> {
        gf2::check_width(n)?;
        if let Some(r) = relabel {
            if r.n() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    found: r.n(),
                });
            }
        }
        let mut rows = Vec::new();
        for (idx, line) in reader.lines().enumerate() {
            let line = line?;
            let line = line.trim_end_matches(['\r', '\n']);
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let err = |message: String| Error::Parse {
                path: PathBuf::from(origin),
                line: idx + 1,
                message,
            };
            if line.len() != n {
                return Err(err(format!(
                    "expected {n} characters, found {}",
                    line.len()
                )));
            }
            let mut x: State = 0;
            for (i, c) in line.bytes().enumerate() {
                match c {
                    b'0' => {}
                    b'1' => x |= 1u128 << i,
                    _ => return Err(err(format!("invalid character {:?}", c as char))),
                }
            }
            rows.push(relabel.map_or(x, |r| r.apply(x)));
        }
        if rows.is_empty() {
            return Err(Error::EmptyDataset);
        }
        Self::from_rows(n, rows)
    }

    /// Writes the rows in the dataset text format, preceded by `header`
    /// lines as `#` comments.
    pub fn write_rows<W: Write>(
        out: &mut W,
        n: usize,
        rows: &[State],
        header: &[String],
    ) -> Result<()> {
        for h in header {
            writeln!(out, "# {h}")?;
        }
        let mut line = String::with_capacity(n + 1);
        for &x in rows {
            line.clear();
            line.extend((0..n).map(|i| if x >> i & 1 == 1 { '1' } else { '0' }));
            line.push('\n');
            out.write_all(line.as_bytes())?;
        }
        Ok(())
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let mut f = std::io::BufWriter::new(fs::File::create(path)?);
        Self::write_rows(&mut f, self.n, &self.rows, &[])?;
        f.flush()?;
        Ok(())
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Number of observations `N`.
    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn rows(&self) -> &[State] {
        &self.rows
    }

    /// Distinct states with their multiplicities, sorted by state.
    pub fn counts(&self) -> &[(State, u64)] {
        &self.counts
    }

    fn check_op(&self, op: &Operator) -> Result<()> {
        if op.n() != self.n {
            return Err(Error::DimensionMismatch {
                expected: self.n,
                found: op.n(),
            });
        }
        Ok(())
    }

    /// Sum of an operator's values over all observations.
    pub(crate) fn operator_sum(&self, mask: u128) -> i64 {
        self.counts
            .iter()
            .map(|&(x, c)| {
                if gf2::parity(mask & x) {
                    -(c as i64)
                } else {
                    c as i64
                }
            })
            .sum()
    }

    /// Empirical mean of an operator over the observations.
    pub fn operator_bias(&self, op: &Operator) -> Result<f64> {
        self.check_op(op)?;
        if self.rows.is_empty() {
            return Err(Error::EmptyDataset);
        }
        Ok(self.operator_sum(op.mask()) as f64 / self.len() as f64)
    }

    /// Tallies the value patterns of a block of independent operators.
    pub fn project_counts(&self, block: &[Operator]) -> Result<BlockCounts> {
        self.project_counts_capped(block, DEFAULT_TABLE_CAP)
    }

    pub fn project_counts_capped(&self, block: &[Operator], cap: usize) -> Result<BlockCounts> {
        for op in block {
            self.check_op(op)?;
        }
        let r = block.len();
        if r == 0 {
            return Err(Error::InvalidStructure("empty block".into()));
        }
        if r > cap {
            return Err(Error::CapExceeded {
                what: "block rank",
                value: r,
                cap,
            });
        }
        let mut span = Gf2Span::new();
        if !block.iter().all(|o| span.insert(o.mask())) {
            return Err(Error::DependentOperators);
        }
        let mut counts = vec![0u64; 1 << r];
        for &(x, c) in &self.counts {
            let p = block
                .iter()
                .enumerate()
                .fold(0usize, |p, (j, o)| p | (o.bit(x) as usize) << j);
            counts[p] += c;
        }
        BlockCounts::new(r, counts)
    }

    /// Applies a gauge transform to every observation.
    pub fn transform(&self, t: &GaugeTransform) -> Result<Dataset> {
        if t.n() != self.n {
            return Err(Error::DimensionMismatch {
                expected: self.n,
                found: t.n(),
            });
        }
        let rows = self.rows.iter().map(|&x| t.apply_unchecked(x)).collect();
        Dataset::from_rows(self.n, rows)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Cursor;

    fn parse(text: &str, n: usize) -> Result<Dataset> {
        Dataset::parse(
            BufReader::new(Cursor::new(text.to_string())),
            n,
            Path::new("mem"),
            None,
        )
    }

    #[test]
    fn load_examples() {
        let d = parse("000\n000\n", 3).unwrap();
        assert_eq!(d.len(), 2);
        assert_eq!(d.counts(), &[(0, 2)]);

        let d = parse("# comment\n100\n\n011\n", 3).unwrap();
        assert_eq!(d.rows(), &[0b001, 0b110]);

        match parse("000\n0000\n", 3) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("expected parse error, got {other:?}"),
        }
        assert!(matches!(
            parse("0x0\n", 3),
            Err(Error::Parse { line: 1, .. })
        ));
        assert!(matches!(parse("", 3), Err(Error::EmptyDataset)));
        assert!(matches!(parse("# only\n", 3), Err(Error::EmptyDataset)));
    }

    #[test]
    fn relabel_permutes_and_flips() {
        let r = Relabel::new(vec![2, 0, 1], vec![false, true, false]).unwrap();
        let d = Dataset::parse(
            BufReader::new(Cursor::new("100\n".to_string())),
            3,
            Path::new("mem"),
            Some(&r),
        )
        .unwrap();
        // new0 = old2 = 0, new1 = !old0 = 0, new2 = old1 = 0
        assert_eq!(d.rows(), &[0]);
        assert!(Relabel::new(vec![0, 0], vec![false, false]).is_err());
    }

    #[test]
    fn bias_examples() {
        let d = Dataset::from_rows(3, vec![0, 0b011, 0b011]).unwrap();
        let s1s2 = Operator::from_spins(&[0, 1], 3).unwrap();
        assert_eq!(d.operator_bias(&s1s2).unwrap(), 1.0);

        // (+,+) and (+,-) once each
        let d = Dataset::from_rows(2, vec![0b00, 0b10]).unwrap();
        let s1s2 = Operator::from_spins(&[0, 1], 2).unwrap();
        assert_eq!(d.operator_bias(&s1s2).unwrap(), 0.0);
    }

    #[test]
    fn projection_examples() {
        let d = Dataset::from_rows(2, vec![0, 0, 0b10, 1]).unwrap();
        let c = d.project_counts(&[Operator::spin(0, 2).unwrap()]).unwrap();
        assert_eq!(c.counts(), &[3, 1]);

        let d = Dataset::from_rows(3, vec![0b101; 7]).unwrap();
        let all: Vec<_> = (0..3).map(|i| Operator::spin(i, 3).unwrap()).collect();
        let c = d.project_counts(&all).unwrap();
        assert_eq!(c.counts()[0b101], 7);
        assert_eq!(c.total(), 7);

        let s1 = Operator::spin(0, 3).unwrap();
        assert!(matches!(
            d.project_counts(&[s1, s1]),
            Err(Error::DependentOperators)
        ));
        assert!(matches!(
            d.project_counts_capped(&all, 2),
            Err(Error::CapExceeded { .. })
        ));
    }

    #[test]
    fn transform_round_trip() {
        let d = Dataset::from_rows(3, vec![0, 1, 2, 5, 7, 7]).unwrap();
        let id = GaugeTransform::identity(3).unwrap();
        assert_eq!(d.transform(&id).unwrap(), d);
        let t = gf2::complete_basis(&[Operator::parse_bits("110").unwrap()], 3).unwrap();
        let back = d
            .transform(&t)
            .unwrap()
            .transform(&t.invert().unwrap())
            .unwrap();
        assert_eq!(back, d);
    }
}
