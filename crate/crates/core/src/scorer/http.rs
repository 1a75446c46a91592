//! Client for an OpenAI-compatible `/v1/completions` endpoint.
//!
//! Scoring sends the prompt with `echo: true` and `max_tokens: 0` and reads
//! back `choices[0].logprobs.token_logprobs` and `text_offset`.

use std::time::Duration;

use serde::Deserialize;
use serde_json::json;

use super::{ScoreReport, ScorerBackend};
use crate::error::{Error, Result};
use crate::text::{TokenSpan, Tokenizer};

#[derive(Debug, Clone, PartialEq)]
pub struct HttpConfig {
    pub endpoint: String,
    pub model: String,
    /// Bearer token sent in the `Authorization` header.
    pub api_key: Option<String>,
    pub timeout: Duration,
}

pub struct HttpBackend {
    config: HttpConfig,
    agent: ureq::Agent,
}

#[derive(Debug, Deserialize)]
struct CompletionResponse {
    choices: Vec<Choice>,
}

#[derive(Debug, Deserialize)]
struct Choice {
    #[serde(default)]
    text: String,
    logprobs: Option<Logprobs>,
}

#[derive(Debug, Deserialize)]
struct Logprobs {
    token_logprobs: Vec<Option<f64>>,
    text_offset: Vec<usize>,
}

/// One echoed prompt token, with byte offsets into the prompt.
#[derive(Debug, Clone, PartialEq)]
struct EchoToken {
    start: usize,
    end: usize,
    logprob: Option<f64>,
}

impl HttpBackend {
    pub fn new(config: HttpConfig) -> Self {
        let agent = ureq::Agent::config_builder()
            .timeout_global(Some(config.timeout))
            .http_status_as_error(false)
            .build()
            .into();
        Self { config, agent }
    }

    pub fn config(&self) -> &HttpConfig {
        &self.config
    }

    fn post(&self, body: serde_json::Value) -> Result<CompletionResponse> {
        let mut req = self.agent.post(&self.config.endpoint);
        if let Some(key) = &self.config.api_key {
            req = req.header("Authorization", &format!("Bearer {key}"));
        }
        let mut resp = req.send_json(&body).map_err(|e| Error::BackendUnavailable {
            status: None,
            cause: e.to_string(),
        })?;
        let status = resp.status().as_u16();
        let text = resp
            .body_mut()
            .read_to_string()
            .map_err(|e| Error::BackendUnavailable {
                status: Some(status),
                cause: e.to_string(),
            })?;
        if !(200..300).contains(&status) {
            let snippet: String = text.chars().take(200).collect();
            return Err(Error::BackendUnavailable {
                status: Some(status),
                cause: format!("HTTP {status}: {snippet}"),
            });
        }
        serde_json::from_str(&text).map_err(|e| Error::BadResponse(e.to_string()))
    }

    /// Echoes `prompt` back with per-token log-probabilities.
    fn echo(&self, prompt: &str) -> Result<Vec<EchoToken>> {
        let body = json!({
            "model": self.config.model,
            "prompt": prompt,
            "max_tokens": 0,
            "echo": true,
            "logprobs": 0,
        });
        let resp = self.post(body)?;
        let logprobs = resp
            .choices
            .into_iter()
            .next()
            .and_then(|c| c.logprobs)
            .ok_or_else(|| Error::BadResponse("missing choices[0].logprobs".into()))?;
        echo_tokens(prompt, &logprobs.token_logprobs, &logprobs.text_offset)
    }
}

/// Pairs log-probabilities with prompt byte ranges. `text_offset` counts
/// characters; a token ends where the next one starts.
fn echo_tokens(prompt: &str, token_logprobs: &[Option<f64>], text_offset: &[usize]) -> Result<Vec<EchoToken>> {
    if token_logprobs.len() != text_offset.len() {
        return Err(Error::BadResponse(format!(
            "{} logprobs but {} offsets",
            token_logprobs.len(),
            text_offset.len()
        )));
    }
    let char_to_byte: Vec<usize> = prompt
        .char_indices()
        .map(|(b, _)| b)
        .chain(std::iter::once(prompt.len()))
        .collect();
    let mut starts = Vec::with_capacity(text_offset.len());
    for &off in text_offset {
        let byte = *char_to_byte
            .get(off)
            .ok_or_else(|| Error::BadResponse(format!("text offset {off} beyond prompt")))?;
        starts.push(byte);
    }
    let mut out = Vec::with_capacity(starts.len());
    for (i, &start) in starts.iter().enumerate() {
        let end = starts.get(i + 1).copied().unwrap_or(prompt.len()).max(start);
        out.push(EchoToken {
            start,
            end,
            logprob: token_logprobs[i].map(|lp| lp.min(0.0)),
        });
    }
    Ok(out)
}

/// Joins context and target the way the prompt is sent; returns the prompt and
/// the byte offset where the target begins.
fn join_prompt(context: &str, target: &str) -> (String, usize) {
    let mut prompt = String::with_capacity(context.len() + target.len() + 1);
    prompt.push_str(context);
    if !context.is_empty() && !context.ends_with('\n') {
        prompt.push('\n');
    }
    let boundary = prompt.len();
    prompt.push_str(target);
    (prompt, boundary)
}

/// Target tokens are those whose span reaches past `boundary`. Null logprobs
/// are dropped from the report.
fn slice_target(prompt: &str, tokens: &[EchoToken], boundary: usize) -> ScoreReport {
    let mut report = ScoreReport {
        target_tokens: Vec::new(),
        logprobs: Vec::new(),
    };
    for tok in tokens {
        if tok.end <= boundary || tok.start == tok.end {
            continue;
        }
        if let Some(lp) = tok.logprob {
            report.target_tokens.push(prompt[tok.start..tok.end].to_string());
            report.logprobs.push(lp);
        }
    }
    report
}

impl Tokenizer for HttpBackend {
    fn tokenize(&self, text: &str) -> Result<Vec<TokenSpan>> {
        if text.is_empty() {
            return Ok(Vec::new());
        }
        Ok(self
            .echo(text)?
            .into_iter()
            .filter(|t| t.start < t.end)
            .map(|t| TokenSpan {
                text: text[t.start..t.end].to_string(),
                start: t.start,
                end: t.end,
            })
            .collect())
    }
}

impl ScorerBackend for HttpBackend {
    fn id(&self) -> String {
        format!("http:{}:{}", self.config.endpoint, self.config.model)
    }

    fn score(&self, context: &str, target: &str) -> Result<ScoreReport> {
        if target.trim().is_empty() {
            return Err(Error::EmptyTarget);
        }
        let (prompt, boundary) = join_prompt(context, target);
        let tokens = self.echo(&prompt)?;
        Ok(slice_target(&prompt, &tokens, boundary))
    }

    fn complete(&self, prompt: &str, max_tokens: usize) -> Result<String> {
        let body = json!({
            "model": self.config.model,
            "prompt": prompt,
            "max_tokens": max_tokens,
            "temperature": 0.0,
        });
        let resp = self.post(body)?;
        resp.choices
            .into_iter()
            .next()
            .map(|c| c.text)
            .ok_or_else(|| Error::BadResponse("missing choices[0]".into()))
    }
}
