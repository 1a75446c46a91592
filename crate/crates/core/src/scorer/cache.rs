use std::collections::HashMap;
use std::sync::Mutex;

use sha2::{Digest, Sha256};

use super::{ScoreReport, ScorerBackend};
use crate::error::Result;
use crate::text::{TokenSpan, Tokenizer};

type Key = (String, [u8; 32], [u8; 32]);

fn digest(text: &str) -> [u8; 32] {
    Sha256::digest(text.as_bytes()).into()
}

/// Memoizes scores and tokenizations of an inner backend, keyed by
/// `(backend id, sha256(context), sha256(target))`.
pub struct CachedScorer<B> {
    inner: B,
    scores: Mutex<HashMap<Key, ScoreReport>>,
    tokens: Mutex<HashMap<[u8; 32], Vec<TokenSpan>>>,
}

impl<B: ScorerBackend> CachedScorer<B> {
    pub fn new(inner: B) -> Self {
        Self {
            inner,
            scores: Mutex::new(HashMap::new()),
            tokens: Mutex::new(HashMap::new()),
        }
    }

    pub fn inner(&self) -> &B {
        &self.inner
    }

    pub fn cached_scores(&self) -> usize {
        self.scores.lock().unwrap().len()
    }
}

impl<B: ScorerBackend> Tokenizer for CachedScorer<B> {
    fn tokenize(&self, text: &str) -> Result<Vec<TokenSpan>> {
        let key = digest(text);
        if let Some(hit) = self.tokens.lock().unwrap().get(&key) {
            return Ok(hit.clone());
        }
        let spans = self.inner.tokenize(text)?;
        self.tokens.lock().unwrap().insert(key, spans.clone());
        Ok(spans)
    }
}

impl<B: ScorerBackend> ScorerBackend for CachedScorer<B> {
    fn id(&self) -> String {
        self.inner.id()
    }

    fn score(&self, context: &str, target: &str) -> Result<ScoreReport> {
        let key = (self.inner.id(), digest(context), digest(target));
        if let Some(hit) = self.scores.lock().unwrap().get(&key) {
            return Ok(hit.clone());
        }
        // The lock is not held across the backend call so concurrent misses proceed in parallel.
        let report = self.inner.score(context, target)?;
        self.scores.lock().unwrap().insert(key, report.clone());
        Ok(report)
    }

    fn complete(&self, prompt: &str, max_tokens: usize) -> Result<String> {
        self.inner.complete(prompt, max_tokens)
    }
}
