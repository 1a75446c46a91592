//! Block selection inside one function: 0/1 knapsack over blocks with a
//! preserved set that is always kept.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::chunker::{Chunk, LanguageProfile, LineSpan};
use crate::error::{Error, Result};
use crate::placeholder::{indentation_of, render, Segment};
use crate::scorer::{ami, min_max_normalize, AmiScore, ScorerBackend};
use crate::segment::{chunk_lines, Block};
use crate::text::{LineTokens, TokenCount};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KnapsackItem {
    pub block_id: usize,
    pub weight: TokenCount,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionResult {
    pub kept_block_ids: BTreeSet<usize>,
    /// Weight of every kept block, preserved ones included.
    pub total_weight: TokenCount,
    pub total_value: f64,
    pub preserved_weight: TokenCount,
    /// Capacity left for non-preserved blocks.
    pub remaining_budget: TokenCount,
    /// Optimal value of the knapsack part alone.
    pub knapsack_value: f64,
}

impl SelectionResult {
    /// Preserved blocks alone exceed the budget they were given.
    pub fn preserved_overflow(&self, budget: TokenCount) -> bool {
        self.preserved_weight > budget
    }
}

/// Which blocks of a function are exempt from pruning.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PreserveMode {
    None,
    #[default]
    FirstBlock,
    /// Only the definition line, split off the first block.
    SignatureLine,
}

impl FromStr for PreserveMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "none" => Ok(PreserveMode::None),
            "first-block" => Ok(PreserveMode::FirstBlock),
            "signature-line" => Ok(PreserveMode::SignatureLine),
            _ => Err(Error::ConfigInvalid(format!("unknown preserve mode `{s}`"))),
        }
    }
}

impl fmt::Display for PreserveMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PreserveMode::None => "none",
            PreserveMode::FirstBlock => "first-block",
            PreserveMode::SignatureLine => "signature-line",
        })
    }
}

/// Marks the preserved blocks for `mode`. Signature-line mode splits the first
/// block after the definition line when it holds more than that.
pub fn apply_preserve_mode(
    mut blocks: Vec<Block>,
    mode: PreserveMode,
    chunk: &Chunk,
    tokens: &LineTokens,
) -> Vec<Block> {
    match mode {
        PreserveMode::None => {
            for b in &mut blocks {
                b.preserved = false;
            }
        }
        PreserveMode::FirstBlock => {
            for b in &mut blocks {
                b.preserved = b.id == 0;
            }
        }
        PreserveMode::SignatureLine => {
            let sig_end = chunk.header_offset;
            let first = &blocks[0];
            if first.line_span.end > sig_end {
                let lines = chunk_lines(chunk);
                let base = chunk.line_span.start;
                let rest_span = LineSpan::new(sig_end + 1, first.line_span.end);
                let head = Block {
                    id: 0,
                    line_span: LineSpan::new(0, sig_end),
                    text: lines[..=sig_end].join("\n"),
                    token_count: tokens.span(base..base + sig_end + 1),
                    ami_norm: first.ami_norm,
                    preserved: true,
                };
                let rest = Block {
                    id: 1,
                    line_span: rest_span,
                    text: lines[rest_span.range()].join("\n"),
                    token_count: tokens.span(base + rest_span.start..base + rest_span.end + 1),
                    ami_norm: first.ami_norm,
                    preserved: false,
                };
                let tail = blocks.drain(1..).collect::<Vec<_>>();
                blocks = vec![head, rest];
                blocks.extend(tail);
                for (i, b) in blocks.iter_mut().enumerate() {
                    b.id = i;
                }
            }
            for b in &mut blocks {
                b.preserved = b.id == 0;
            }
        }
    }
    blocks
}

/// AMI of every block, min-max normalized within the function.
pub fn score_blocks(blocks: &mut [Block], instruction: &str, backend: &dyn ScorerBackend) -> Result<Vec<AmiScore>> {
    let mut raw = Vec::with_capacity(blocks.len());
    for b in blocks.iter() {
        raw.push(if b.token_count == TokenCount::ZERO {
            AmiScore(0.0)
        } else {
            ami(&b.text, instruction, backend)?
        });
    }
    let norm = min_max_normalize(&raw)?;
    for (b, n) in blocks.iter_mut().zip(norm) {
        b.ami_norm = n;
    }
    Ok(raw)
}

pub fn knapsack_items(blocks: &[Block]) -> Vec<KnapsackItem> {
    blocks
        .iter()
        .map(|b| KnapsackItem {
            block_id: b.id,
            weight: b.token_count,
            value: b.ami_norm,
        })
        .collect()
}

/// Optimal block subset under `budget`.
///
/// Preserved items are always kept and their weight comes off the budget
/// first; if nothing is left, only they are returned. When every block fits,
/// every block is kept. Otherwise, among optimal subsets the lighter one wins,
/// and after that the one containing the lowest differing id.
pub fn knapsack_select(items: &[KnapsackItem], budget: TokenCount, preserved: &BTreeSet<usize>) -> SelectionResult {
    let preserved_items: Vec<&KnapsackItem> = items.iter().filter(|i| preserved.contains(&i.block_id)).collect();
    let preserved_weight: TokenCount = preserved_items.iter().map(|i| i.weight).sum();
    let preserved_value: f64 = preserved_items.iter().map(|i| i.value).sum();
    let remaining = budget.saturating_sub(preserved_weight);
    let mut kept: BTreeSet<usize> = preserved_items.iter().map(|i| i.block_id).collect();

    let mut candidates: Vec<&KnapsackItem> = items.iter().filter(|i| !preserved.contains(&i.block_id)).collect();
    candidates.sort_by_key(|i| i.block_id);

    let candidate_weight: TokenCount = candidates.iter().map(|i| i.weight).sum();
    let (chosen, knapsack_value) = if remaining == TokenCount::ZERO {
        (Vec::new(), 0.0)
    } else if candidate_weight <= remaining {
        let all: Vec<usize> = (0..candidates.len()).collect();
        let v = candidates.iter().rev().fold(0.0, |acc, i| i.value + acc);
        (all, v)
    } else {
        solve(&candidates, remaining.get())
    };
    let mut total_weight = preserved_weight;
    for idx in chosen {
        kept.insert(candidates[idx].block_id);
        total_weight += candidates[idx].weight;
    }
    SelectionResult {
        kept_block_ids: kept,
        total_weight,
        total_value: preserved_value + knapsack_value,
        preserved_weight,
        remaining_budget: remaining,
        knapsack_value,
    }
}

/// The bare 0/1 knapsack over `items` (in the given order) with `capacity`,
/// without preserved items or early return. Returns kept block ids and the value.
pub fn knapsack_dp(items: &[KnapsackItem], capacity: TokenCount) -> (BTreeSet<usize>, f64) {
    let refs: Vec<&KnapsackItem> = items.iter().collect();
    let (chosen, value) = solve(&refs, capacity.get());
    (chosen.into_iter().map(|i| items[i].block_id).collect(), value)
}

/// Suffix DP: `best[i][c]` is the best `(value, weight)` using items `i..`
/// within capacity `c`. Values accumulate right to left, so a subset's value is
/// `v_a + (v_b + (... + 0.0))` over its ids in ascending order.
fn solve(items: &[&KnapsackItem], budget: usize) -> (Vec<usize>, f64) {
    let m = items.len();
    let total: usize = items.iter().map(|i| i.weight.get()).sum();
    let cap = budget.min(total);
    let width = cap + 1;
    let mut value = vec![0.0f64; (m + 1) * width];
    let mut weight = vec![0usize; (m + 1) * width];
    let mut take = vec![false; m * width];
    for i in (0..m).rev() {
        let w = items[i].weight.get();
        let v = items[i].value;
        for c in 0..=cap {
            let (ev, ew) = (value[(i + 1) * width + c], weight[(i + 1) * width + c]);
            let mut best = (ev, ew);
            if w <= c {
                let iv = v + value[(i + 1) * width + c - w];
                let iw = w + weight[(i + 1) * width + c - w];
                if iv > ev || (iv == ev && iw <= ew) {
                    best = (iv, iw);
                    take[i * width + c] = true;
                }
            }
            value[i * width + c] = best.0;
            weight[i * width + c] = best.1;
        }
    }
    let mut chosen = Vec::new();
    let mut c = cap;
    for i in 0..m {
        if take[i * width + c] {
            chosen.push(i);
            c -= items[i].weight.get();
        }
    }
    (chosen, value[cap])
}

/// Per-block segments in line order, with absolute line numbers for dropped blocks.
pub fn function_segments(chunk: &Chunk, blocks: &[Block], result: &SelectionResult) -> Vec<Segment> {
    let base = chunk.line_span.start;
    blocks
        .iter()
        .map(|b| {
            if result.kept_block_ids.contains(&b.id) {
                Segment::Kept(b.text.clone())
            } else {
                Segment::Omitted {
                    lines: LineSpan::new(base + b.line_span.start, base + b.line_span.end),
                    name: None,
                    indent: indentation_of(&b.text),
                }
            }
        })
        .collect()
}

/// Kept blocks in line order, each dropped run replaced by one placeholder.
pub fn assemble_function(
    chunk: &Chunk,
    blocks: &[Block],
    result: &SelectionResult,
    profile: LanguageProfile,
    placeholders: bool,
) -> String {
    render(&function_segments(chunk, blocks, result), profile, placeholders)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chunker::ChunkKind;
    use crate::text::{split_lines, MockTokenizer};

    fn items(spec: &[(usize, f64)]) -> Vec<KnapsackItem> {
        spec.iter()
            .enumerate()
            .map(|(i, &(w, v))| KnapsackItem {
                block_id: i,
                weight: TokenCount(w),
                value: v,
            })
            .collect()
    }

    fn ids(r: &SelectionResult) -> Vec<usize> {
        r.kept_block_ids.iter().copied().collect()
    }

    #[test]
    fn classic_instance() {
        // Enumerating all 8 subsets of weights (2,3,4) under capacity 5:
        // {0,1} is worth 7 at weight 5, every other feasible subset is worth less.
        let r = knapsack_select(&items(&[(2, 3.0), (3, 4.0), (4, 5.0)]), TokenCount(5), &BTreeSet::new());
        assert_eq!(ids(&r), [0, 1]);
        assert_eq!(r.total_value, 7.0);
        assert_eq!(r.total_weight, TokenCount(5));
    }

    #[test]
    fn preserved_overflow_returns_preserved_only() {
        let its = items(&[(10, 0.1), (1, 1.0), (0, 1.0)]);
        let r = knapsack_select(&its, TokenCount(8), &BTreeSet::from([0]));
        assert_eq!(ids(&r), [0]);
        assert!(r.preserved_overflow(TokenCount(8)));
        assert_eq!(r.remaining_budget, TokenCount(0));
    }

    #[test]
    fn ample_budget_keeps_all() {
        let its = items(&[(3, 0.2), (4, 0.0), (5, 1.0)]);
        let r = knapsack_select(&its, TokenCount(100), &BTreeSet::new());
        assert_eq!(ids(&r), [0, 1, 2]);
    }

    #[test]
    fn ties_prefer_lighter_then_lower_id() {
        // {0} and {1,2} both worth 1.0; {0} is lighter.
        let r = knapsack_select(&items(&[(2, 1.0), (2, 0.5), (1, 0.5)]), TokenCount(3), &BTreeSet::new());
        assert_eq!(ids(&r), [0, 2]);
        // Equal value, equal weight: the set holding id 0 wins.
        let r = knapsack_select(&items(&[(2, 0.5), (2, 0.5)]), TokenCount(2), &BTreeSet::new());
        assert_eq!(ids(&r), [0]);
        let r2 = knapsack_select(&items(&[(2, 0.5), (2, 0.5)]), TokenCount(2), &BTreeSet::new());
        assert_eq!(r, r2);
    }

    #[test]
    fn zero_budget_keeps_preserved() {
        let r = knapsack_select(&items(&[(1, 1.0)]), TokenCount(0), &BTreeSet::new());
        assert!(r.kept_block_ids.is_empty());
    }

    fn sample_chunk() -> (Chunk, LineTokens, Vec<Block>) {
        let text = "def f(x):\n    a = 1\n    b = 2\n    c = 3\n    return a";
        let src = split_lines(text);
        let tokens = LineTokens::build(&src, &MockTokenizer).unwrap();
        let chunk = Chunk {
            id: 0,
            kind: ChunkKind::Function,
            line_span: LineSpan::new(0, 4),
            text: text.to_string(),
            token_count: tokens.total(),
            name: Some("f".into()),
            header_offset: 0,
        };
        let blocks = crate::segment::build_blocks(&chunk, &[2, 4], &tokens);
        (chunk, tokens, blocks)
    }

    fn result_keeping(kept: &[usize]) -> SelectionResult {
        SelectionResult {
            kept_block_ids: kept.iter().copied().collect(),
            total_weight: TokenCount(0),
            total_value: 0.0,
            preserved_weight: TokenCount(0),
            remaining_budget: TokenCount(0),
            knapsack_value: 0.0,
        }
    }

    #[test]
    fn assembly() {
        let (chunk, _, blocks) = sample_chunk();
        let py = LanguageProfile::Indentation;
        assert_eq!(
            assemble_function(&chunk, &blocks, &result_keeping(&[0, 1, 2]), py, true),
            chunk.text
        );
        assert_eq!(
            assemble_function(&chunk, &blocks, &result_keeping(&[0, 2]), py, true),
            "def f(x):\n    a = 1\n    # ... lines 3-4 omitted\n    return a"
        );
        assert_eq!(
            assemble_function(&chunk, &blocks, &result_keeping(&[0]), py, true),
            "def f(x):\n    a = 1\n    # ... lines 3-5 omitted"
        );
        assert_eq!(
            assemble_function(&chunk, &blocks, &result_keeping(&[0]), py, false),
            "def f(x):\n    a = 1"
        );
    }

    #[test]
    fn signature_line_split() {
        let (chunk, tokens, blocks) = sample_chunk();
        let out = apply_preserve_mode(blocks, PreserveMode::SignatureLine, &chunk, &tokens);
        assert_eq!(out.len(), 4);
        assert_eq!(out[0].text, "def f(x):");
        assert_eq!(out[0].token_count, TokenCount(6));
        assert!(out[0].preserved);
        assert_eq!(out[1].text, "    a = 1");
        assert!(out.iter().skip(1).all(|b| !b.preserved));
        let none = apply_preserve_mode(out, PreserveMode::None, &chunk, &tokens);
        assert!(none.iter().all(|b| !b.preserved));
    }

    #[test]
    fn block_scores_normalize() {
        let (chunk, _, mut blocks) = sample_chunk();
        let _ = chunk;
        let raw = score_blocks(&mut blocks, "c return", &crate::scorer::MockBackend::new()).unwrap();
        assert_eq!(raw.len(), 3);
        let norms: Vec<f64> = blocks.iter().map(|b| b.ami_norm).collect();
        assert!(norms.iter().all(|n| (0.0..=1.0).contains(n)));
        assert_eq!(norms[0], 0.0);
        let mut single = vec![blocks[0].clone()];
        score_blocks(&mut single, "c", &crate::scorer::MockBackend::new()).unwrap();
        assert_eq!(single[0].ami_norm, 0.5);
    }

    #[test]
    fn preserve_mode_names() {
        for m in [
            PreserveMode::None,
            PreserveMode::FirstBlock,
            PreserveMode::SignatureLine,
        ] {
            assert_eq!(m.to_string().parse::<PreserveMode>().unwrap(), m);
        }
        assert!("all".parse::<PreserveMode>().is_err());
    }
}
