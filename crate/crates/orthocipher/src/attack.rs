//! Ciphertext-only cryptanalysis: search small-integer linear combinations
//! of a block's components for values matching pure table terms `a·g(b)`.
//!
//! Encryption leaves each block a linear mixture of terms
//! `coefficient · g(code)`. With `±1` combinations of the components an
//! attacker can often isolate single terms, read the exponent code out of
//! the decode table, and recover symbols without any key material. That is
//! the point: the scheme leaks. Later blocks are mixed by higher key
//! powers, so a fixed combination set may or may not resolve them; the
//! report marks unresolved blocks instead of guessing.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::cipher::{CiphertextBlock, CiphertextMessage};
use crate::encoding::{Alphabet, Codec, DecodeTable};
use crate::error::{Error, Result};

/// Abort threshold for the combination scan.
pub const COMBINATION_LIMIT: u64 = 10_000_000;

/// One matched pure term: the combination `Σ kᵢ yᵢ` landed within
/// tolerance of the table cell `coefficient · g(exponent)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttackFinding {
    pub combo: Vec<i64>,
    pub coefficient: u32,
    pub exponent: u32,
    pub matched_value: f64,
    pub relative_error: f64,
}

/// Findings for one block, plus the symbol each exponent code spells.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlockReport {
    pub block: u64,
    /// True when the findings supply at least one symbol hypothesis per
    /// block position.
    pub resolved: bool,
    pub findings: Vec<AttackFinding>,
    /// Symbol hypotheses in finding order; `None` for exponents outside
    /// the alphabet.
    pub symbols: Vec<Option<char>>,
}

/// Whole-message attack output; serializable as the CLI report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttackReport {
    pub version: u32,
    pub dim: usize,
    pub codec: Codec,
    pub coeff_bound: i64,
    pub rel_tol: f64,
    pub blocks: Vec<BlockReport>,
}

impl AttackReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_json())?;
        Ok(())
    }
}

/// Scans every nonzero coefficient vector in `[-coeff_bound, coeff_bound]^dim`,
/// looks each positive combination value up in the table, and returns the
/// matches deduplicated by `(coefficient, exponent)`, keeping the
/// lowest-error combination, sorted by ascending relative error.
pub fn attack_block(
    y: &CiphertextBlock,
    table: &DecodeTable,
    coeff_bound: i64,
    rel_tol: f64,
) -> Result<Vec<AttackFinding>> {
    assert!(coeff_bound >= 1, "coefficient bound must be at least 1");
    assert!(rel_tol > 0.0, "tolerance must be positive");
    let dim = y.values().len();
    let base = (2 * coeff_bound + 1) as u128;
    let combinations = base.saturating_pow(dim as u32).saturating_sub(1);
    if combinations > COMBINATION_LIMIT as u128 {
        return Err(Error::CombinationSpaceTooLarge {
            combinations,
            limit: COMBINATION_LIMIT,
        });
    }

    let mut best: BTreeMap<(u32, u32), AttackFinding> = BTreeMap::new();
    let mut combo = vec![-coeff_bound; dim];
    'outer: loop {
        if combo.iter().any(|&k| k != 0) {
            let value: f64 = combo
                .iter()
                .zip(y.values())
                .map(|(&k, &v)| k as f64 * v)
                .sum();
            if value > 0.0 {
                for hit in table.lookup(value, rel_tol) {
                    let key = (hit.f, hit.c);
                    let better = best
                        .get(&key)
                        .is_none_or(|old| hit.relative_error < old.relative_error);
                    if better {
                        best.insert(
                            key,
                            AttackFinding {
                                combo: combo.clone(),
                                coefficient: hit.f,
                                exponent: hit.c,
                                matched_value: value,
                                relative_error: hit.relative_error,
                            },
                        );
                    }
                }
            }
        }
        for i in (0..dim).rev() {
            combo[i] += 1;
            if combo[i] <= coeff_bound {
                continue 'outer;
            }
            combo[i] = -coeff_bound;
        }
        break;
    }

    let mut findings: Vec<AttackFinding> = best.into_values().collect();
    findings.sort_by(|a, b| {
        a.relative_error
            .total_cmp(&b.relative_error)
            .then(a.coefficient.cmp(&b.coefficient))
            .then(a.exponent.cmp(&b.exponent))
    });
    Ok(findings)
}

/// Runs [`attack_block`] over every block of a message and attaches symbol
/// hypotheses. Blocks are attacked in parallel when the `parallel` feature
/// is enabled.
pub fn attack_report(
    message: &CiphertextMessage,
    table: &DecodeTable,
    coeff_bound: i64,
    rel_tol: f64,
) -> Result<AttackReport> {
    let dim = message.dim();

    #[cfg(feature = "parallel")]
    let per_block: Vec<Result<Vec<AttackFinding>>> = {
        use rayon::prelude::*;
        message
            .blocks()
            .par_iter()
            .map(|block| attack_block(block, table, coeff_bound, rel_tol))
            .collect()
    };
    #[cfg(not(feature = "parallel"))]
    let per_block: Vec<Result<Vec<AttackFinding>>> = message
        .blocks()
        .iter()
        .map(|block| attack_block(block, table, coeff_bound, rel_tol))
        .collect();

    let mut blocks = Vec::with_capacity(per_block.len());
    for (i, findings) in per_block.into_iter().enumerate() {
        let findings = findings?;
        let symbols: Vec<Option<char>> = findings
            .iter()
            .map(|f| {
                u8::try_from(f.exponent)
                    .ok()
                    .and_then(|c| Alphabet.symbol_of(c))
            })
            .collect();
        blocks.push(BlockReport {
            block: i as u64 + 1,
            resolved: findings.len() >= dim,
            findings,
            symbols,
        });
    }
    Ok(AttackReport {
        version: 1,
        dim,
        codec: message.codec(),
        coeff_bound,
        rel_tol,
        blocks,
    })
}
