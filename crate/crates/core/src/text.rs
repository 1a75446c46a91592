//! Line and token accounting for source text.
//!
//! Every budget and ratio in the crate is expressed in [`TokenCount`]s produced
//! by the tokenizer of the active scorer backend.

use std::fmt;
use std::iter::Sum;
use std::ops::{Add, AddAssign, Range};

use serde::{Deserialize, Serialize};

use crate::error::Result;

/// A non-negative number of scorer tokens.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct TokenCount(pub usize);

impl TokenCount {
    pub const ZERO: TokenCount = TokenCount(0);

    pub fn get(self) -> usize {
        self.0
    }

    pub fn saturating_sub(self, other: TokenCount) -> TokenCount {
        TokenCount(self.0.saturating_sub(other.0))
    }
}

impl Add for TokenCount {
    type Output = TokenCount;
    fn add(self, rhs: TokenCount) -> TokenCount {
        TokenCount(self.0 + rhs.0)
    }
}

impl AddAssign for TokenCount {
    fn add_assign(&mut self, rhs: TokenCount) {
        self.0 += rhs.0;
    }
}

impl Sum for TokenCount {
    fn sum<I: Iterator<Item = TokenCount>>(iter: I) -> TokenCount {
        TokenCount(iter.map(|t| t.0).sum())
    }
}

impl fmt::Display for TokenCount {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

/// One line of source, without its terminator.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Line {
    pub index: usize,
    pub content: String,
    /// Byte range of `content` inside the original raw text.
    pub byte_span: Range<usize>,
}

impl Line {
    pub fn is_blank(&self) -> bool {
        self.content.trim().is_empty()
    }
}

/// Source text split into lines, normalized to LF internally.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SourceText {
    pub raw: String,
    pub lines: Vec<Line>,
    /// The original used CRLF terminators.
    pub crlf: bool,
    pub trailing_newline: bool,
}

/// Splits `text` into lines. Both LF and CRLF terminators are accepted.
pub fn split_lines(text: &str) -> SourceText {
    let mut lines = Vec::new();
    let mut crlf = None;
    let mut start = 0;
    let bytes = text.as_bytes();
    let mut trailing_newline = false;
    for (pos, _) in text.match_indices('\n') {
        let end = if pos > start && bytes[pos - 1] == b'\r' {
            crlf.get_or_insert(true);
            pos - 1
        } else {
            crlf.get_or_insert(false);
            pos
        };
        lines.push(Line {
            index: lines.len(),
            content: text[start..end].to_string(),
            byte_span: start..end,
        });
        start = pos + 1;
        trailing_newline = start == text.len();
    }
    if start < text.len() {
        lines.push(Line {
            index: lines.len(),
            content: text[start..].to_string(),
            byte_span: start..text.len(),
        });
        trailing_newline = false;
    }
    SourceText {
        raw: text.to_string(),
        lines,
        crlf: crlf.unwrap_or(false),
        trailing_newline,
    }
}

impl SourceText {
    pub fn len(&self) -> usize {
        self.lines.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lines.is_empty()
    }

    /// Lines `range` joined by LF, without a trailing terminator.
    pub fn join(&self, range: Range<usize>) -> String {
        let mut out = String::new();
        for (i, line) in self.lines[range].iter().enumerate() {
            if i > 0 {
                out.push('\n');
            }
            out.push_str(&line.content);
        }
        out
    }

    /// The LF-normalized text, keeping the trailing newline if the original had one.
    pub fn normalized(&self) -> String {
        let mut out = self.join(0..self.lines.len());
        if self.trailing_newline {
            out.push('\n');
        }
        out
    }

    /// Converts LF-normalized `text` back to the original terminator style.
    pub fn restore_terminators(&self, text: &str) -> String {
        if self.crlf {
            text.replace('\n', "\r\n")
        } else {
            text.to_string()
        }
    }
}

/// A token with its byte range in the tokenized text.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TokenSpan {
    pub text: String,
    pub start: usize,
    pub end: usize,
}

pub trait Tokenizer: Send + Sync {
    fn tokenize(&self, text: &str) -> Result<Vec<TokenSpan>>;

    fn count(&self, text: &str) -> Result<TokenCount> {
        Ok(TokenCount(self.tokenize(text)?.len()))
    }
}

/// Deterministic tokenizer: maximal runs of `[A-Za-z0-9_]` are one token, every
/// other non-whitespace character is a token of its own, whitespace is dropped.
#[derive(Debug, Clone, Copy, Default)]
pub struct MockTokenizer;

impl MockTokenizer {
    pub fn spans(text: &str) -> Vec<TokenSpan> {
        let mut out = Vec::new();
        let mut word_start: Option<usize> = None;
        for (i, ch) in text.char_indices() {
            let is_word = ch.is_ascii_alphanumeric() || ch == '_';
            if is_word {
                word_start.get_or_insert(i);
                continue;
            }
            if let Some(s) = word_start.take() {
                out.push(TokenSpan {
                    text: text[s..i].to_string(),
                    start: s,
                    end: i,
                });
            }
            if !ch.is_whitespace() {
                let end = i + ch.len_utf8();
                out.push(TokenSpan {
                    text: text[i..end].to_string(),
                    start: i,
                    end,
                });
            }
        }
        if let Some(s) = word_start {
            out.push(TokenSpan {
                text: text[s..].to_string(),
                start: s,
                end: text.len(),
            });
        }
        out
    }
}

impl Tokenizer for MockTokenizer {
    fn tokenize(&self, text: &str) -> Result<Vec<TokenSpan>> {
        Ok(Self::spans(text))
    }
}

pub fn count_tokens(text: &str, tokenizer: &dyn Tokenizer) -> Result<TokenCount> {
    tokenizer.count(text)
}

/// Token counts per line of a document, all drawn from one tokenization of the
/// whole text so that span counts are additive.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LineTokens {
    counts: Vec<TokenCount>,
}

impl LineTokens {
    /// Tokenizes the LF-normalized document once and attributes each token to the
    /// line holding its first byte. A token starting on a line terminator counts
    /// for the line that terminator ends.
    pub fn build(src: &SourceText, tokenizer: &dyn Tokenizer) -> Result<Self> {
        let mut counts = vec![TokenCount::ZERO; src.len()];
        if src.is_empty() {
            return Ok(Self { counts });
        }
        let text = src.join(0..src.len());
        // Start offset of each line in `text`.
        let mut starts = Vec::with_capacity(src.len());
        let mut offset = 0;
        for line in &src.lines {
            starts.push(offset);
            offset += line.content.len() + 1;
        }
        for token in tokenizer.tokenize(&text)? {
            if token.start == token.end {
                continue;
            }
            let line = match starts.binary_search(&token.start) {
                Ok(i) => i,
                Err(i) => i - 1,
            };
            counts[line] += TokenCount(1);
        }
        Ok(Self { counts })
    }

    pub fn from_counts(counts: Vec<TokenCount>) -> Self {
        Self { counts }
    }

    pub fn line(&self, index: usize) -> TokenCount {
        self.counts[index]
    }

    pub fn span(&self, range: Range<usize>) -> TokenCount {
        self.counts[range].iter().copied().sum()
    }

    pub fn total(&self) -> TokenCount {
        self.span(0..self.counts.len())
    }

    pub fn len(&self) -> usize {
        self.counts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn contents(src: &SourceText) -> Vec<&str> {
        src.lines.iter().map(|l| l.content.as_str()).collect()
    }

    #[test]
    fn splits_lf() {
        let src = split_lines("a\nb\n");
        assert_eq!(contents(&src), ["a", "b"]);
        assert!(src.trailing_newline);
        assert!(!src.crlf);
        assert_eq!(src.lines[1].index, 1);
        assert_eq!(src.lines[1].byte_span, 2..3);
    }

    #[test]
    fn empty_input_has_no_lines() {
        let src = split_lines("");
        assert!(src.is_empty());
        assert_eq!(src.normalized(), "");
    }

    #[test]
    fn crlf_is_normalized_and_recorded() {
        let src = split_lines("a\r\nb");
        assert_eq!(contents(&src), ["a", "b"]);
        assert!(src.crlf);
        assert!(!src.trailing_newline);
        assert_eq!(src.restore_terminators(&src.normalized()), "a\r\nb");
    }

    #[test]
    fn blank_lines_survive() {
        let src = split_lines("\n\nx\n\n");
        assert_eq!(contents(&src), ["", "", "x", ""]);
        assert_eq!(src.normalized(), "\n\nx\n\n");
    }

    #[test]
    fn mock_token_counts() {
        let t = MockTokenizer;
        let toks: Vec<String> = MockTokenizer::spans("def foo():").into_iter().map(|s| s.text).collect();
        assert_eq!(toks, ["def", "foo", "(", ")", ":"]);
        assert_eq!(count_tokens("def foo():", &t).unwrap(), TokenCount(5));
        assert_eq!(count_tokens("", &t).unwrap(), TokenCount(0));
        assert_eq!(count_tokens("a+b", &t).unwrap(), TokenCount(3));
        assert_eq!(count_tokens("  x_1 \t→y", &t).unwrap(), TokenCount(3));
    }

    #[test]
    fn line_tokens_attribute_by_start() {
        let src = split_lines("def f(x):\n\n    return x\n");
        let idx = LineTokens::build(&src, &MockTokenizer).unwrap();
        assert_eq!(idx.line(0), TokenCount(6));
        assert_eq!(idx.line(1), TokenCount(0));
        assert_eq!(idx.line(2), TokenCount(2));
        assert_eq!(idx.total(), TokenCount(8));
    }

    proptest! {
        #[test]
        fn lf_round_trip(lines in proptest::collection::vec("[a-z (){};=+ ]{0,12}", 0..12)) {
            let text: String = lines.iter().map(|l| format!("{l}\n")).collect();
            let src = split_lines(&text);
            prop_assert_eq!(src.normalized(), text);
            for (i, line) in src.lines.iter().enumerate() {
                prop_assert_eq!(line.index, i);
                prop_assert_eq!(&src.raw[line.byte_span.clone()], line.content.as_str());
            }
        }

        #[test]
        fn token_counts_are_additive(a in "[a-z0-9_ (){}+*;.,]{0,30}", b in "[a-z0-9_ (){}+*;.,]{0,30}") {
            let t = MockTokenizer;
            let joined = format!("{a}\n{b}");
            let sum = count_tokens(&a, &t).unwrap() + count_tokens(&b, &t).unwrap();
            prop_assert_eq!(count_tokens(&joined, &t).unwrap(), sum);
            let src = split_lines(&joined);
            prop_assert_eq!(LineTokens::build(&src, &t).unwrap().total(), sum);
        }
    }
}
