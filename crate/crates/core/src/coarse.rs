//! Function-level selection: rank chunks by AMI against the instruction and
//! keep the best ones that fit the coarse budget.

use serde::{Deserialize, Serialize};

use crate::chunker::{Chunk, LanguageProfile};
use crate::error::{Error, Result};
use crate::placeholder::{render, Segment};
use crate::scorer::{ami, AmiScore, ScorerBackend};
use crate::text::TokenCount;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankedChunk {
    pub chunk: Chunk,
    pub ami: AmiScore,
    /// 0 is the most relevant chunk.
    pub rank: usize,
    pub selected: bool,
}

/// Token budget for the coarse stage, `floor(B / R_fine)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CoarseBudget(pub TokenCount);

impl CoarseBudget {
    pub fn from_final(budget: TokenCount, fine_ratio: f64) -> Result<Self> {
        if !(fine_ratio > 0.0 && fine_ratio <= 1.0) {
            return Err(Error::ConfigInvalid(format!(
                "fine ratio must be in (0, 1], got {fine_ratio}"
            )));
        }
        // The epsilon keeps 2000 / 0.8 from flooring to 2499.
        let value = (budget.get() as f64 / fine_ratio + 1e-9).floor() as usize;
        Ok(CoarseBudget(TokenCount(value)))
    }
}

/// Assigns ranks by descending AMI, ties broken by ascending chunk id.
/// The result is sorted by rank.
pub fn rank_scored(scored: Vec<(Chunk, AmiScore)>) -> Vec<RankedChunk> {
    let mut ranked: Vec<RankedChunk> = scored
        .into_iter()
        .map(|(chunk, ami)| RankedChunk {
            chunk,
            ami,
            rank: 0,
            selected: false,
        })
        .collect();
    ranked.sort_by(|a, b| b.ami.0.total_cmp(&a.ami.0).then(a.chunk.id.cmp(&b.chunk.id)));
    for (rank, rc) in ranked.iter_mut().enumerate() {
        rc.rank = rank;
    }
    ranked
}

pub fn rank_chunks(chunks: Vec<Chunk>, instruction: &str, backend: &dyn ScorerBackend) -> Result<Vec<RankedChunk>> {
    if instruction.trim().is_empty() {
        return Err(Error::EmptyTarget);
    }
    let mut scored = Vec::with_capacity(chunks.len());
    for chunk in chunks {
        let score = if chunk.token_count == TokenCount::ZERO {
            AmiScore(0.0)
        } else {
            ami(&chunk.text, instruction, backend)?
        };
        scored.push((chunk, score));
    }
    Ok(rank_scored(scored))
}

/// Skip-and-continue greedy over ranks: a chunk is kept whenever it still fits.
pub fn select_coarse(mut ranked: Vec<RankedChunk>, budget: CoarseBudget) -> Vec<RankedChunk> {
    ranked.sort_by_key(|r| r.rank);
    let mut used = TokenCount::ZERO;
    for rc in &mut ranked {
        rc.selected = used + rc.chunk.token_count <= budget.0;
        if rc.selected {
            used += rc.chunk.token_count;
        }
    }
    ranked
}

pub fn selected_tokens(ranked: &[RankedChunk]) -> TokenCount {
    ranked.iter().filter(|r| r.selected).map(|r| r.chunk.token_count).sum()
}

/// Document-order segments: selected chunks verbatim, the rest omitted.
pub fn coarse_segments(ranked: &[RankedChunk]) -> Vec<Segment> {
    let mut by_id: Vec<&RankedChunk> = ranked.iter().collect();
    by_id.sort_by_key(|r| r.chunk.id);
    by_id
        .into_iter()
        .map(|r| {
            if r.selected {
                Segment::Kept(r.chunk.text.clone())
            } else {
                Segment::Omitted {
                    lines: r.chunk.line_span,
                    name: r.chunk.name.clone(),
                    indent: String::new(),
                }
            }
        })
        .collect()
}

/// Coarse-only output: unselected chunks become placeholders (or disappear).
pub fn apply_placeholders(ranked: &[RankedChunk], profile: LanguageProfile, enabled: bool) -> String {
    render(&coarse_segments(ranked), profile, enabled)
}
