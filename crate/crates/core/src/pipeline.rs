//! The coarse-to-fine compression flow and its result metadata.

use std::collections::BTreeMap;

use serde::{Deserialize, Deserializer, Serialize};
use sha2::{Digest, Sha256};

use crate::allocate::{allocate, partition_small_large, AllocationFlag, FunctionInfo};
use crate::chunker::{chunk_source, resolve_profile, Chunk, ChunkKind, LanguageProfile, LanguageSpec, LineSpan};
use crate::coarse::{rank_chunks, select_coarse, CoarseBudget, RankedChunk};
use crate::error::{Error, Result};
use crate::placeholder::{render, Segment};
use crate::pool::ordered_map;
use crate::scorer::{min_max_normalize, AmiScore, ScorerBackend};
use crate::segment::{build_blocks, detect_boundaries, line_perplexities, Block, LinePerplexity};
use crate::select::{
    apply_preserve_mode, function_segments, knapsack_items, knapsack_select, score_blocks, PreserveMode,
};
use crate::text::{count_tokens, split_lines, LineTokens, SourceText, TokenCount};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CompressionConfig {
    /// Final token budget `B` for the context (the instruction is not counted).
    pub budget: TokenCount,
    /// Fraction of coarse-selected tokens the fine stage keeps; `B_coarse = B / fine_ratio`.
    pub fine_ratio: f64,
    pub beta: f64,
    /// Boundary threshold in standard deviations.
    pub alpha: f64,
    /// Functions with fewer non-blank lines are kept whole.
    pub small_lines: usize,
    pub language: LanguageSpec,
    pub placeholders: bool,
    pub preserve: PreserveMode,
}

impl Default for CompressionConfig {
    fn default() -> Self {
        CompressionConfig {
            budget: TokenCount(2000),
            fine_ratio: 0.8,
            beta: 0.5,
            alpha: 1.0,
            small_lines: 5,
            language: LanguageSpec::Auto,
            placeholders: true,
            preserve: PreserveMode::FirstBlock,
        }
    }
}

impl CompressionConfig {
    pub fn validate(&self) -> Result<()> {
        if self.budget == TokenCount::ZERO {
            return Err(Error::ConfigInvalid("budget must be positive".into()));
        }
        if !(self.fine_ratio > 0.0 && self.fine_ratio <= 1.0) {
            return Err(Error::ConfigInvalid(format!(
                "fine ratio must be in (0, 1], got {}",
                self.fine_ratio
            )));
        }
        if !self.beta.is_finite() {
            return Err(Error::ConfigInvalid(format!("beta must be finite, got {}", self.beta)));
        }
        if !(self.alpha > 0.0 && self.alpha.is_finite()) {
            return Err(Error::ConfigInvalid(format!(
                "alpha must be positive, got {}",
                self.alpha
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlockRecord {
    pub id: usize,
    /// Absolute, 0-based, inclusive.
    pub lines: LineSpan,
    pub tokens: TokenCount,
    pub ami: f64,
    pub ami_norm: f64,
    pub preserved: bool,
    pub kept: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChunkRecord {
    pub id: usize,
    pub kind: ChunkKind,
    pub name: Option<String>,
    pub lines: LineSpan,
    pub tokens: TokenCount,
    pub ami: f64,
    pub rank: usize,
    /// Survived the coarse stage.
    pub selected: bool,
    /// Kept whole by the small-function rule.
    pub small: bool,
    pub retention: Option<f64>,
    pub fine_budget: Option<TokenCount>,
    pub kept_tokens: TokenCount,
    pub blocks: Vec<BlockRecord>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Warning {
    /// Preserved blocks of a function exceeded its fine budget and were kept anyway.
    PreservedOverflow {
        chunk: usize,
        preserved: TokenCount,
        budget: TokenCount,
    },
    NoBudget,
    DegenerateWeights,
    SmallOverflow {
        dropped: Vec<usize>,
    },
    /// Nothing survived and placeholders are off.
    EmptyOutput,
}

impl From<AllocationFlag> for Warning {
    fn from(flag: AllocationFlag) -> Self {
        match flag {
            AllocationFlag::NoBudget => Warning::NoBudget,
            AllocationFlag::DegenerateWeights => Warning::DegenerateWeights,
            AllocationFlag::SmallOverflow { dropped } => Warning::SmallOverflow { dropped },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompressionResult {
    pub compressed_text: String,
    pub original_tokens: TokenCount,
    /// Tokens of original code kept, placeholders excluded.
    pub retained_tokens: TokenCount,
    /// Tokens of `compressed_text`, placeholders included.
    pub emitted_tokens: TokenCount,
    /// `original_tokens / emitted_tokens`; absent when nothing was emitted.
    pub ratio: Option<f64>,
    pub fast_path: bool,
    pub budget: TokenCount,
    pub coarse_budget: TokenCount,
    pub chunks: Vec<ChunkRecord>,
    pub warnings: Vec<Warning>,
}

impl CompressionResult {
    pub fn has_preserved_overflow(&self) -> bool {
        self.warnings
            .iter()
            .any(|w| matches!(w, Warning::PreservedOverflow { .. }))
    }

    /// Metadata as JSON, without the compressed text.
    pub fn metadata(&self) -> serde_json::Value {
        let mut v = serde_json::to_value(self).expect("result serializes");
        if let Some(obj) = v.as_object_mut() {
            obj.remove("compressed_text");
        }
        v
    }

    pub fn text_digest(&self) -> String {
        sha256_hex(self.compressed_text.as_bytes())
    }

    pub fn metadata_digest(&self) -> String {
        sha256_hex(self.metadata().to_string().as_bytes())
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Compresses `source` so that at most `config.budget` tokens of it remain.
pub fn compress(
    source: &str,
    instruction: &str,
    config: &CompressionConfig,
    backend: &dyn ScorerBackend,
) -> Result<CompressionResult> {
    config.validate()?;
    if source.trim().is_empty() {
        return Err(Error::InvalidInput("source is empty".into()));
    }
    if instruction.trim().is_empty() {
        return Err(Error::InvalidInput("instruction is empty".into()));
    }
    let src = split_lines(source);
    let tokens = LineTokens::build(&src, backend)?;
    let original_tokens = tokens.total();
    let coarse_budget = CoarseBudget::from_final(config.budget, config.fine_ratio)?;
    if original_tokens <= config.budget {
        return Ok(CompressionResult {
            compressed_text: source.to_string(),
            original_tokens,
            retained_tokens: original_tokens,
            emitted_tokens: original_tokens,
            ratio: Some(1.0),
            fast_path: true,
            budget: config.budget,
            coarse_budget: coarse_budget.0,
            chunks: Vec::new(),
            warnings: Vec::new(),
        });
    }

    let profile = resolve_profile(&src, config.language);
    let chunks = chunk_source(&src, profile, &tokens);
    let ranked = select_coarse(rank_chunks(chunks, instruction, backend)?, coarse_budget);
    let mut by_id: Vec<RankedChunk> = ranked;
    by_id.sort_by_key(|r| r.chunk.id);

    let funcs: Vec<FunctionInfo> = by_id
        .iter()
        .filter(|r| r.selected)
        .map(|r| FunctionInfo {
            id: r.chunk.id,
            tokens: r.chunk.token_count,
            lines: r.chunk.non_blank_lines(),
            ami: r.ami.0,
        })
        .collect();
    let (small, large) = partition_small_large(&funcs, config.small_lines);
    let large_amis: Vec<AmiScore> = large.iter().map(|f| AmiScore(f.ami)).collect();
    let ami_norm: BTreeMap<usize, f64> = if large.is_empty() {
        BTreeMap::new()
    } else {
        large
            .iter()
            .map(|f| f.id)
            .zip(min_max_normalize(&large_amis)?)
            .collect()
    };
    let plan = allocate(&small, &large, &ami_norm, config.budget, config.beta)?;
    let mut warnings: Vec<Warning> = plan.flags.iter().cloned().map(Warning::from).collect();

    let mut segments: Vec<Segment> = Vec::new();
    let mut records = Vec::with_capacity(by_id.len());
    let mut retained = TokenCount::ZERO;
    for rc in &by_id {
        let chunk = &rc.chunk;
        let mut record = ChunkRecord {
            id: chunk.id,
            kind: chunk.kind,
            name: chunk.name.clone(),
            lines: chunk.line_span,
            tokens: chunk.token_count,
            ami: rc.ami.0,
            rank: rc.rank,
            selected: rc.selected,
            small: false,
            retention: None,
            fine_budget: None,
            kept_tokens: TokenCount::ZERO,
            blocks: Vec::new(),
        };
        if plan.small_set.contains(&chunk.id) {
            record.small = true;
            record.kept_tokens = chunk.token_count;
            segments.push(Segment::Kept(chunk.text.clone()));
        } else if let Some(&budget) = plan.per_chunk_budget.get(&chunk.id) {
            record.retention = plan.retention.get(&chunk.id).copied();
            record.fine_budget = Some(budget);
            let fine = fine_stage(chunk, instruction, budget, config, backend, &tokens)?;
            if fine.preserved_overflow {
                warnings.push(Warning::PreservedOverflow {
                    chunk: chunk.id,
                    preserved: fine.preserved_weight,
                    budget,
                });
            }
            record.kept_tokens = fine.kept_tokens;
            record.blocks = fine.records;
            segments.extend(fine.segments);
        } else {
            record.small = plan.dropped_small.contains(&chunk.id);
            segments.push(Segment::Omitted {
                lines: chunk.line_span,
                name: chunk.name.clone(),
                indent: String::new(),
            });
        }
        retained += record.kept_tokens;
        records.push(record);
    }

    let compressed_text = finish_text(&src, &segments, profile, config.placeholders);
    let emitted_tokens = count_tokens(&compressed_text, backend)?;
    let ratio = if emitted_tokens == TokenCount::ZERO {
        warnings.push(Warning::EmptyOutput);
        None
    } else {
        Some(original_tokens.get() as f64 / emitted_tokens.get() as f64)
    };
    Ok(CompressionResult {
        compressed_text,
        original_tokens,
        retained_tokens: retained,
        emitted_tokens,
        ratio,
        fast_path: false,
        budget: config.budget,
        coarse_budget: coarse_budget.0,
        chunks: records,
        warnings,
    })
}

struct FineOutcome {
    segments: Vec<Segment>,
    records: Vec<BlockRecord>,
    kept_tokens: TokenCount,
    preserved_weight: TokenCount,
    preserved_overflow: bool,
}

fn fine_stage(
    chunk: &Chunk,
    instruction: &str,
    budget: TokenCount,
    config: &CompressionConfig,
    backend: &dyn ScorerBackend,
    tokens: &LineTokens,
) -> Result<FineOutcome> {
    let blocks = segment_chunk(chunk, config, backend, tokens)?.1;
    let mut blocks = apply_preserve_mode(blocks, config.preserve, chunk, tokens);
    let raw = score_blocks(&mut blocks, instruction, backend)?;
    let preserved = blocks.iter().filter(|b| b.preserved).map(|b| b.id).collect();
    let result = knapsack_select(&knapsack_items(&blocks), budget, &preserved);
    let base = chunk.line_span.start;
    let records = blocks
        .iter()
        .zip(&raw)
        .map(|(b, a)| BlockRecord {
            id: b.id,
            lines: LineSpan::new(base + b.line_span.start, base + b.line_span.end),
            tokens: b.token_count,
            ami: a.0,
            ami_norm: b.ami_norm,
            preserved: b.preserved,
            kept: result.kept_block_ids.contains(&b.id),
        })
        .collect();
    Ok(FineOutcome {
        segments: function_segments(chunk, &blocks, &result),
        records,
        kept_tokens: result.total_weight,
        preserved_weight: result.preserved_weight,
        preserved_overflow: result.preserved_overflow(budget),
    })
}

/// Line perplexities and the resulting blocks of one chunk.
pub fn segment_chunk(
    chunk: &Chunk,
    config: &CompressionConfig,
    backend: &dyn ScorerBackend,
    tokens: &LineTokens,
) -> Result<(Vec<LinePerplexity>, Vec<Block>, Vec<usize>)> {
    let ppls = line_perplexities(chunk, backend)?;
    let boundaries = detect_boundaries(&ppls, config.alpha)?;
    let blocks = build_blocks(chunk, &boundaries, tokens);
    Ok((ppls, blocks, boundaries))
}

fn finish_text(src: &SourceText, segments: &[Segment], profile: LanguageProfile, placeholders: bool) -> String {
    let mut text = render(segments, profile, placeholders);
    if src.trailing_newline && !text.is_empty() {
        text.push('\n');
    }
    src.restore_terminators(&text)
}

/// One input of a batch run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompressionRecord {
    #[serde(deserialize_with = "string_or_number")]
    pub id: String,
    pub context: String,
    pub instruction: String,
}

pub(crate) fn string_or_number<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<String, D::Error> {
    match serde_json::Value::deserialize(d)? {
        serde_json::Value::String(s) => Ok(s),
        serde_json::Value::Number(n) => Ok(n.to_string()),
        other => Err(serde::de::Error::custom(format!(
            "id must be a string or number, got {other}"
        ))),
    }
}

#[derive(Debug)]
pub struct RecordOutcome {
    pub id: String,
    pub result: Result<CompressionResult>,
}

/// Compresses records one at a time, in order; a failing record does not stop the stream.
pub fn compress_stream<'a, I>(
    records: I,
    config: &'a CompressionConfig,
    backend: &'a dyn ScorerBackend,
) -> impl Iterator<Item = RecordOutcome> + 'a
where
    I: IntoIterator<Item = CompressionRecord>,
    I::IntoIter: 'a,
{
    records.into_iter().map(move |r| RecordOutcome {
        result: compress(&r.context, &r.instruction, config, backend),
        id: r.id,
    })
}

/// Like [`compress_stream`] but over `jobs` worker threads; output keeps input order.
pub fn compress_batch(
    records: Vec<CompressionRecord>,
    config: &CompressionConfig,
    backend: &dyn ScorerBackend,
    jobs: usize,
) -> Vec<RecordOutcome> {
    ordered_map(records, jobs, |r| RecordOutcome {
        result: compress(&r.context, &r.instruction, config, backend),
        id: r.id,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InspectLine {
    pub line: usize,
    pub ppl: f64,
    pub scored: bool,
    pub boundary: bool,
    pub text: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InspectChunk {
    pub id: usize,
    pub kind: ChunkKind,
    pub name: Option<String>,
    pub lines: LineSpan,
    pub tokens: TokenCount,
    pub ami: Option<f64>,
    pub rank: Option<usize>,
    pub boundaries: Vec<usize>,
    pub line_ppl: Vec<InspectLine>,
}

/// Chunk table with per-line perplexities and boundaries; nothing is compressed.
pub fn inspect(
    source: &str,
    instruction: Option<&str>,
    config: &CompressionConfig,
    backend: &dyn ScorerBackend,
) -> Result<Vec<InspectChunk>> {
    config.validate()?;
    let src = split_lines(source);
    if src.lines.iter().all(|l| l.is_blank()) {
        return Ok(Vec::new());
    }
    let tokens = LineTokens::build(&src, backend)?;
    let profile = resolve_profile(&src, config.language);
    let chunks = chunk_source(&src, profile, &tokens);
    let ranks: BTreeMap<usize, (f64, usize)> = match instruction {
        Some(q) if !q.trim().is_empty() => rank_chunks(chunks.clone(), q, backend)?
            .into_iter()
            .map(|r| (r.chunk.id, (r.ami.0, r.rank)))
            .collect(),
        _ => BTreeMap::new(),
    };
    let mut out = Vec::with_capacity(chunks.len());
    for chunk in &chunks {
        let (ppls, _, boundaries) = segment_chunk(chunk, config, backend, &tokens)?;
        let lines = crate::segment::chunk_lines(chunk);
        let base = chunk.line_span.start;
        out.push(InspectChunk {
            id: chunk.id,
            kind: chunk.kind,
            name: chunk.name.clone(),
            lines: chunk.line_span,
            tokens: chunk.token_count,
            ami: ranks.get(&chunk.id).map(|r| r.0),
            rank: ranks.get(&chunk.id).map(|r| r.1),
            boundaries: boundaries.iter().map(|b| base + b).collect(),
            line_ppl: ppls
                .iter()
                .map(|p| InspectLine {
                    line: base + p.line_index,
                    ppl: p.ppl.0,
                    scored: p.scored,
                    boundary: boundaries.contains(&p.line_index),
                    text: lines[p.line_index].to_string(),
                })
                .collect(),
        });
    }
    Ok(out)
}
