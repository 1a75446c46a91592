//! Intra-function block segmentation on per-line perplexity.
//!
//! Each line is scored given the lines above it in the same chunk. A line
//! whose perplexity rises above both neighbours by at least `alpha` standard
//! deviations (population, over every line of the chunk) starts a new block.

use serde::{Deserialize, Serialize};

use crate::chunker::{Chunk, LineSpan};
use crate::error::{Error, Result};
use crate::scorer::{conditional_perplexity, Perplexity, ScorerBackend};
use crate::text::{LineTokens, TokenCount};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinePerplexity {
    /// Line index relative to the chunk start.
    pub line_index: usize,
    pub ppl: Perplexity,
    /// False for token-less lines, which carry the previous line's value.
    pub scored: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Block {
    pub id: usize,
    /// Line span relative to the chunk start.
    pub line_span: LineSpan,
    pub text: String,
    pub token_count: TokenCount,
    pub ami_norm: f64,
    pub preserved: bool,
}

pub fn chunk_lines(chunk: &Chunk) -> Vec<&str> {
    chunk.text.split('\n').collect()
}

pub fn line_perplexities(chunk: &Chunk, backend: &dyn ScorerBackend) -> Result<Vec<LinePerplexity>> {
    let lines = chunk_lines(chunk);
    let mut out: Vec<LinePerplexity> = Vec::with_capacity(lines.len());
    let mut context = String::new();
    for (i, line) in lines.iter().enumerate() {
        let scored = if line.trim().is_empty() {
            None
        } else {
            match conditional_perplexity(&context, line, backend) {
                Ok(p) => Some(p),
                Err(Error::EmptyTarget) => None,
                Err(e) => return Err(e),
            }
        };
        out.push(match scored {
            Some(ppl) => LinePerplexity {
                line_index: i,
                ppl,
                scored: true,
            },
            None => LinePerplexity {
                line_index: i,
                ppl: out.last().map_or(Perplexity(f64::NAN), |p| p.ppl),
                scored: false,
            },
        });
        if i > 0 {
            context.push('\n');
        }
        context.push_str(line);
    }
    // Leading unscored lines take the first scored value.
    let first = out.iter().find(|p| p.scored).map_or(Perplexity(1.0), |p| p.ppl);
    for p in out.iter_mut().take_while(|p| !p.scored) {
        p.ppl = first;
    }
    Ok(out)
}

pub fn population_std(values: &[f64]) -> f64 {
    if values.is_empty() {
        return 0.0;
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n).sqrt()
}

/// Line indices that start a new block.
///
/// Neighbours are the nearest scored lines on either side; the last scored
/// line is tested against its predecessor only. Chunks with fewer than three
/// scored lines yield no boundaries.
pub fn detect_boundaries(ppls: &[LinePerplexity], alpha: f64) -> Result<Vec<usize>> {
    if alpha.is_nan() || alpha <= 0.0 {
        return Err(Error::ConfigInvalid(format!("alpha must be positive, got {alpha}")));
    }
    let scored: Vec<usize> = (0..ppls.len()).filter(|&i| ppls[i].scored).collect();
    if scored.len() < 3 {
        return Ok(Vec::new());
    }
    let values: Vec<f64> = ppls.iter().map(|p| p.ppl.0).collect();
    let threshold = alpha * population_std(&values);
    let mut boundaries = Vec::new();
    for k in 1..scored.len() {
        let here = values[scored[k]];
        let prev = values[scored[k - 1]];
        if !(here > prev && here - prev >= threshold) {
            continue;
        }
        let next_ok = scored.get(k + 1).is_none_or(|&n| here - values[n] >= threshold);
        if next_ok && scored[k] > 0 {
            boundaries.push(scored[k]);
        }
    }
    Ok(boundaries)
}

/// Partitions the chunk's lines at `boundaries`. Block 0 starts out preserved.
pub fn build_blocks(chunk: &Chunk, boundaries: &[usize], tokens: &LineTokens) -> Vec<Block> {
    let lines = chunk_lines(chunk);
    let n = lines.len();
    let mut starts: Vec<usize> = std::iter::once(0)
        .chain(boundaries.iter().copied().filter(|&b| b > 0 && b < n))
        .collect();
    starts.dedup();
    let base = chunk.line_span.start;
    starts
        .iter()
        .enumerate()
        .map(|(id, &start)| {
            let end = starts.get(id + 1).map_or(n - 1, |&s| s - 1);
            Block {
                id,
                line_span: LineSpan::new(start, end),
                text: lines[start..=end].join("\n"),
                token_count: tokens.span(base + start..base + end + 1),
                ami_norm: 0.5,
                preserved: id == 0,
            }
        })
        .collect()
}
