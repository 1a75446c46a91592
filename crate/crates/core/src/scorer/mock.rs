use std::collections::HashSet;

use super::{ScoreReport, ScorerBackend};
use crate::error::Result;
use crate::text::{MockTokenizer, TokenSpan, Tokenizer};

/// Log-probability of a target token already seen in the context or earlier in the target.
pub const SEEN_LOGPROB: f64 = -1.0;
/// Log-probability of a token seen nowhere before.
pub const NOVEL_LOGPROB: f64 = -4.0;

/// Model-free backend: a token is likely exactly when it has been seen before.
#[derive(Debug, Clone, Copy, Default)]
pub struct MockBackend;

impl MockBackend {
    pub fn new() -> Self {
        MockBackend
    }
}

impl Tokenizer for MockBackend {
    fn tokenize(&self, text: &str) -> Result<Vec<TokenSpan>> {
        MockTokenizer.tokenize(text)
    }
}

impl ScorerBackend for MockBackend {
    fn id(&self) -> String {
        "mock".to_string()
    }

    fn score(&self, context: &str, target: &str) -> Result<ScoreReport> {
        let ctx = MockTokenizer::spans(context);
        let tokens = MockTokenizer::spans(target);
        let mut seen: HashSet<&str> = ctx.iter().map(|t| t.text.as_str()).collect();
        let mut logprobs = Vec::with_capacity(tokens.len());
        for tok in &tokens {
            logprobs.push(if seen.contains(tok.text.as_str()) {
                SEEN_LOGPROB
            } else {
                NOVEL_LOGPROB
            });
            seen.insert(tok.text.as_str());
        }
        Ok(ScoreReport {
            target_tokens: tokens.iter().map(|t| t.text.clone()).collect(),
            logprobs,
        })
    }
}
