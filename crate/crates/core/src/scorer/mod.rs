//! Conditional perplexity and approximated mutual information.
//!
//! A [`ScorerBackend`] turns `(context, target)` into per-token natural-log
//! probabilities of `target` given `context`. Perplexity is the exponential of
//! the mean negative log-probability, and the AMI of a context is how much it
//! lowers the perplexity of the instruction:
//! `ami(c, q) = ppl(q) - ppl(q | c)`.

mod cache;
mod http;
mod mock;

pub use cache::CachedScorer;
pub use http::{HttpBackend, HttpConfig};
pub use mock::MockBackend;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::text::Tokenizer;

/// Log-probabilities of each target token.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreReport {
    pub target_tokens: Vec<String>,
    pub logprobs: Vec<f64>,
}

impl ScoreReport {
    pub fn len(&self) -> usize {
        self.logprobs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.logprobs.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Perplexity(pub f64);

/// `ppl(q) - ppl(q | c)`. Positive when the context helps predict the target.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct AmiScore(pub f64);

pub trait ScorerBackend: Tokenizer {
    /// Stable identifier used to key score caches.
    fn id(&self) -> String;

    fn score(&self, context: &str, target: &str) -> Result<ScoreReport>;

    /// Free-running completion of `prompt`. Only remote backends generate.
    fn complete(&self, _prompt: &str, _max_tokens: usize) -> Result<String> {
        Err(Error::ConfigInvalid(format!(
            "backend `{}` cannot generate completions",
            self.id()
        )))
    }
}

/// Scores `target` conditioned on `context`.
pub fn score(context: &str, target: &str, backend: &dyn ScorerBackend) -> Result<ScoreReport> {
    let report = backend.score(context, target)?;
    if report.is_empty() {
        return Err(Error::EmptyTarget);
    }
    debug_assert_eq!(report.target_tokens.len(), report.logprobs.len());
    Ok(report)
}

pub fn perplexity(report: &ScoreReport) -> Result<Perplexity> {
    if report.is_empty() {
        return Err(Error::EmptyTarget);
    }
    let mean = report.logprobs.iter().sum::<f64>() / report.len() as f64;
    Ok(Perplexity((-mean).exp()))
}

pub fn conditional_perplexity(context: &str, target: &str, backend: &dyn ScorerBackend) -> Result<Perplexity> {
    perplexity(&score(context, target, backend)?)
}

pub fn ami(context: &str, instruction: &str, backend: &dyn ScorerBackend) -> Result<AmiScore> {
    let unconditional = conditional_perplexity("", instruction, backend)?;
    if context.is_empty() {
        return Ok(AmiScore(0.0));
    }
    let conditional = conditional_perplexity(context, instruction, backend)?;
    Ok(AmiScore(unconditional.0 - conditional.0))
}

/// Min-max normalization into `[0, 1]`. Equal scores all map to `0.5`.
pub fn min_max_normalize(scores: &[AmiScore]) -> Result<Vec<f64>> {
    let first = scores.first().ok_or(Error::EmptyList)?.0;
    let (lo, hi) = scores
        .iter()
        .fold((first, first), |(lo, hi), s| (lo.min(s.0), hi.max(s.0)));
    let span = hi - lo;
    if span <= 0.0 {
        return Ok(vec![0.5; scores.len()]);
    }
    Ok(scores.iter().map(|s| ((s.0 - lo) / span).clamp(0.0, 1.0)).collect())
}
