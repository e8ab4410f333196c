//! Fit reports, factor-graph export and number formatting.

use std::fmt::Write as _;
use std::fs;
use std::io::Read;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::evidence::{EvidenceReport, McmStructure};
use crate::gf2::Operator;
use crate::search::MergeTrace;

/// Identifies the report format.
pub const REPORT_FORMAT: &str = "mcm-fit-report/1";

/// One basis operator as stored in a report.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BasisEntry {
    /// Character `i` is `1` when spin `i` is in the operator.
    pub operator: String,
    pub spins: Vec<usize>,
    pub bias: f64,
}

impl BasisEntry {
    pub fn new(op: &Operator, bias: f64) -> Self {
        BasisEntry {
            operator: op.to_bits_string(),
            spins: op.spins().collect(),
            bias,
        }
    }

    pub fn parse(&self, n: usize) -> Result<Operator> {
        let op = Operator::parse_bits(&self.operator)?;
        if op.n() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: op.n(),
            });
        }
        Ok(op)
    }
}

/// Where the data came from.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub input: String,
    pub sha256: String,
    pub n_obs: u64,
    pub seed: u64,
    pub version: String,
}

/// Progress of the heuristic basis search.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HeuristicSummary {
    pub rounds: usize,
    pub converged: bool,
    pub log_likelihoods: Vec<f64>,
}

/// Evidence expressed in a non-natural log base.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScaledEvidence {
    pub base: f64,
    pub total_log_evidence: f64,
    pub max_log_likelihood: f64,
}

/// Everything produced by one fit. `C` is the resolved run configuration.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitReport<C> {
    pub format: String,
    pub config: C,
    pub provenance: Provenance,
    pub basis: Vec<BasisEntry>,
    pub structure: McmStructure,
    /// Number of ICCs, i.e. modeled blocks.
    pub icc_count: usize,
    /// Natural-log evidence.
    pub evidence: EvidenceReport,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scaled: Option<ScaledEvidence>,
    /// Maximum-likelihood pattern probabilities of each modeled block.
    pub q_tables: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub greedy_trace: Option<MergeTrace>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub heuristic: Option<HeuristicSummary>,
    pub factor_graph: String,
}

impl<C: Serialize + for<'de> Deserialize<'de>> FitReport<C> {
    pub fn operators(&self) -> Result<Vec<Operator>> {
        self.basis
            .iter()
            .map(|b| b.parse(self.structure.n()))
            .collect()
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)? + "\n")
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_json()?)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)?;
        let report: Self = serde_json::from_str(&text)?;
        if report.format != REPORT_FORMAT {
            return Err(Error::InvalidReport(format!(
                "unknown format {:?}",
                report.format
            )));
        }
        if report.basis.len() != report.structure.basis_size() {
            return Err(Error::InvalidReport(format!(
                "{} basis entries for a structure over {} operators",
                report.basis.len(),
                report.structure.basis_size()
            )));
        }
        Ok(report)
    }
}

/// Hex SHA-256 of a file's contents.
pub fn sha256_file(path: &Path) -> Result<String> {
    let mut file = fs::File::open(path)?;
    let mut hasher = Sha256::new();
    let mut buf = [0u8; 1 << 16];
    loop {
        let k = file.read(&mut buf)?;
        if k == 0 {
            break;
        }
        hasher.update(&buf[..k]);
    }
    Ok(hasher
        .finalize()
        .iter()
        .fold(String::with_capacity(64), |mut s, b| {
            let _ = write!(s, "{b:02x}");
            s
        }))
}

/// Formats `x` with 12 significant digits.
pub fn fmt_sig(x: f64) -> String {
    const DIGITS: i32 = 12;
    if x == 0.0 || !x.is_finite() {
        return format!("{x}");
    }
    let exp = x.abs().log10().floor() as i32;
    let decimals = DIGITS - 1 - exp;
    if (0..=17).contains(&decimals) {
        let s = format!("{x:.*}", decimals as usize);
        if s.contains('.') {
            s.trim_end_matches('0').trim_end_matches('.').to_string()
        } else {
            s
        }
    } else if decimals < 0 && exp < 15 {
        let scale = 10f64.powi(-decimals);
        format!("{:.0}", (x / scale).round() * scale)
    } else {
        format!("{x:.*e}", (DIGITS - 1) as usize)
    }
}

/// Factor graph in DOT: spins, basis operators and ICCs, top to bottom.
///
/// Basis operators of unmodeled blocks hang off a single `uniform` node.
pub fn factor_graph_dot(n: usize, operators: &[Operator], structure: &McmStructure) -> String {
    let mut s = String::new();
    s.push_str("graph mcm {\n  rankdir=TB;\n");
    s.push_str("  subgraph variables {\n    rank=same;\n");
    for i in 0..n {
        let _ = writeln!(s, "    s{} [shape=circle, label=\"s{}\"];", i + 1, i + 1);
    }
    s.push_str("  }\n  subgraph basis {\n    rank=same;\n");
    for (j, op) in operators.iter().enumerate() {
        let _ = writeln!(s, "    phi{} [shape=box, label=\"{}\"];", j + 1, op);
    }
    s.push_str("  }\n  subgraph components {\n    rank=same;\n");
    let mut icc = 0;
    let mut has_uniform = false;
    for b in structure.blocks() {
        if b.modeled {
            icc += 1;
            let _ = writeln!(
                s,
                "    icc{icc} [shape=diamond, label=\"ICC {icc} (r={})\"];",
                b.rank()
            );
        } else {
            has_uniform = true;
        }
    }
    if has_uniform {
        s.push_str("    uniform [shape=diamond, style=dashed, label=\"uniform\"];\n");
    }
    s.push_str("  }\n");
    for (j, op) in operators.iter().enumerate() {
        for i in op.spins() {
            let _ = writeln!(s, "  s{} -- phi{};", i + 1, j + 1);
        }
    }
    let mut icc = 0;
    for b in structure.blocks() {
        let target = if b.modeled {
            icc += 1;
            format!("icc{icc}")
        } else {
            "uniform".to_string()
        };
        for &j in &b.members {
            let _ = writeln!(s, "  phi{} -- {target};", j + 1);
        }
    }
    s.push_str("}\n");
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn twelve_digits() {
        assert_eq!(fmt_sig(0.0), "0");
        assert_eq!(fmt_sig(1.0), "1");
        assert_eq!(fmt_sig(-3327.123456789), "-3327.12345679");
        assert_eq!(fmt_sig(0.1 + 0.2), "0.3");
        assert_eq!(fmt_sig(123456789012345.0), "123456789012000");
        assert_eq!(fmt_sig(1.5e-20), "1.50000000000e-20");
    }

    #[test]
    fn dot_has_three_layers() {
        let ops = vec![
            Operator::parse_bits("110").unwrap(),
            Operator::parse_bits("010").unwrap(),
            Operator::parse_bits("001").unwrap(),
        ];
        let m = McmStructure::new(
            3,
            3,
            vec![
                crate::evidence::Block::modeled(vec![0, 1]),
                crate::evidence::Block::unmodeled(vec![2]),
            ],
        )
        .unwrap();
        let dot = factor_graph_dot(3, &ops, &m);
        assert!(dot.contains("s1 -- phi1;"));
        assert!(dot.contains("s2 -- phi1;"));
        assert!(dot.contains("phi2 -- icc1;"));
        assert!(dot.contains("phi3 -- uniform;"));
        assert_eq!(dot.matches("shape=diamond").count(), 2);
    }

    #[test]
    fn checksum_of_known_text() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("x");
        fs::write(&p, "abc").unwrap();
        assert_eq!(
            sha256_file(&p).unwrap(),
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"
        );
    }
}
