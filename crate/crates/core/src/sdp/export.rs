//! SDPA sparse format (`.dat-s`) for cross-checking with external solvers.
//!
//! The standard form `min ⟨C,X⟩ s.t. ⟨A_i,X⟩ = b_i` is the SDPA dual with
//! `F0 = −C`, `F_i = A_i` and `c = b`, so the optimum of the program here is
//! minus the optimum an SDPA solver reports.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use super::standard::StandardForm;
use super::{Result, SdpError, SdpProblem};

/// Parsed SDPA data. Entries are `(matrix, block, row, col, value)`, all
/// indices zero-based, `row ≤ col`.
#[derive(Debug, Clone, PartialEq)]
pub struct SdpaProblem {
    pub block_sizes: Vec<usize>,
    pub c: Vec<f64>,
    pub entries: Vec<(usize, usize, usize, usize, f64)>,
}

impl SdpaProblem {
    pub fn from_problem(p: &SdpProblem) -> Self {
        let full = StandardForm::from_problem(p);
        let sf = match full.independent_rows() {
            Ok(keep) => full.restrict_rows(&keep),
            Err(_) => full,
        };
        let mut entries = Vec::new();
        for (b, c) in sf.c.iter().enumerate() {
            for q in 0..c.ncols() {
                for r in 0..=q {
                    if c[(r, q)] != 0.0 {
                        entries.push((0, b, r, q, -c[(r, q)]));
                    }
                }
            }
        }
        for (i, row) in sf.rows.iter().enumerate() {
            let mut acc: BTreeMap<(usize, usize, usize), f64> = BTreeMap::new();
            for &(b, r, q, v) in &row.entries {
                if r <= q {
                    *acc.entry((b, r, q)).or_insert(0.0) += v;
                }
            }
            for ((b, r, q), v) in acc {
                if v != 0.0 {
                    entries.push((i + 1, b, r, q, v));
                }
            }
        }
        Self {
            block_sizes: sf.dims.clone(),
            c: sf.b.iter().copied().collect(),
            entries,
        }
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "{}", self.c.len());
        let _ = writeln!(s, "{}", self.block_sizes.len());
        let sizes: Vec<String> = self.block_sizes.iter().map(|d| d.to_string()).collect();
        let _ = writeln!(s, "{}", sizes.join(" "));
        // `+ 0.0` turns −0 into 0
        let cs: Vec<String> = self.c.iter().map(|v| format!("{:.16e}", v + 0.0)).collect();
        let _ = writeln!(s, "{}", cs.join(" "));
        for &(m, b, r, q, v) in &self.entries {
            let _ = writeln!(s, "{} {} {} {} {:.16e}", m, b + 1, r + 1, q + 1, v + 0.0);
        }
        s
    }
}

/// Standard form of `p` as SDPA sparse text.
pub fn write_sdpa(p: &SdpProblem) -> String {
    SdpaProblem::from_problem(p).to_text()
}

fn strip(line: &str) -> &str {
    let cut = line.find(['"', '*']).unwrap_or(line.len());
    line[..cut].trim()
}

fn numbers(line: &str) -> impl Iterator<Item = &str> {
    line.split(|c: char| c.is_whitespace() || matches!(c, ',' | '{' | '}' | '(' | ')'))
        .filter(|t| !t.is_empty())
}

fn bad(msg: impl Into<String>) -> SdpError {
    SdpError::Parse(msg.into())
}

pub fn parse_sdpa(text: &str) -> Result<SdpaProblem> {
    let mut lines = text.lines().map(strip).filter(|l| !l.is_empty());
    let mut next = |what: &str| lines.next().ok_or_else(|| bad(format!("missing {what}")));

    let m: usize = numbers(next("constraint count")?)
        .next()
        .and_then(|t| t.parse().ok())
        .ok_or_else(|| bad("constraint count"))?;
    let nblocks: usize = numbers(next("block count")?)
        .next()
        .and_then(|t| t.parse().ok())
        .ok_or_else(|| bad("block count"))?;
    let block_sizes: Vec<usize> = numbers(next("block sizes")?)
        .map(|t| {
            t.parse::<i64>()
                .map(|v| v.unsigned_abs() as usize)
                .map_err(|_| bad(format!("block size {t:?}")))
        })
        .collect::<Result<_>>()?;
    if block_sizes.len() != nblocks {
        return Err(bad(format!(
            "expected {nblocks} block sizes, found {}",
            block_sizes.len()
        )));
    }
    let c: Vec<f64> = numbers(next("objective vector")?)
        .map(|t| t.parse().map_err(|_| bad(format!("number {t:?}"))))
        .collect::<Result<_>>()?;
    if c.len() != m {
        return Err(bad(format!("expected {m} objective entries, found {}", c.len())));
    }

    let mut entries = Vec::new();
    for line in lines {
        let toks: Vec<&str> = numbers(line).collect();
        if toks.len() != 5 {
            return Err(bad(format!("entry line {line:?}")));
        }
        let idx = |t: &str| t.parse::<usize>().map_err(|_| bad(format!("index {t:?}")));
        let (mat, blk, r, q) = (idx(toks[0])?, idx(toks[1])?, idx(toks[2])?, idx(toks[3])?);
        let v: f64 = toks[4].parse().map_err(|_| bad(format!("number {:?}", toks[4])))?;
        if mat > m || blk == 0 || blk > nblocks {
            return Err(bad(format!("entry out of range: {line:?}")));
        }
        let d = block_sizes[blk - 1];
        if r == 0 || q == 0 || r > d || q > d {
            return Err(bad(format!("entry out of range: {line:?}")));
        }
        let (r, q) = if r <= q { (r, q) } else { (q, r) };
        entries.push((mat, blk - 1, r - 1, q - 1, v));
    }
    Ok(SdpaProblem {
        block_sizes,
        c,
        entries,
    })
}
