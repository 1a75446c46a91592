//! Top-level function and class chunking.
//!
//! Source is cut along top-level definitions. Everything between definitions
//! (imports, constants, statements) becomes an interstitial chunk. Chunks are
//! ordered, disjoint, and cover every line: decorators and comment lines
//! directly above a definition belong to it, and blank lines belong to the
//! chunk they follow.

mod brace;
mod indent;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::text::{LineTokens, SourceText, TokenCount};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Language {
    Python,
    Cpp,
    Java,
    JavaScript,
    TypeScript,
    Rust,
    Go,
}

impl Language {
    pub const ALL: [Language; 7] = [
        Language::Python,
        Language::Cpp,
        Language::Java,
        Language::JavaScript,
        Language::TypeScript,
        Language::Rust,
        Language::Go,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Language::Python => "python",
            Language::Cpp => "cpp",
            Language::Java => "java",
            Language::JavaScript => "javascript",
            Language::TypeScript => "typescript",
            Language::Rust => "rust",
            Language::Go => "go",
        }
    }
}

impl FromStr for Language {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        Ok(match s.to_ascii_lowercase().as_str() {
            "python" | "py" => Language::Python,
            "cpp" | "c++" | "c" | "cc" => Language::Cpp,
            "java" => Language::Java,
            "javascript" | "js" => Language::JavaScript,
            "typescript" | "ts" => Language::TypeScript,
            "rust" | "rs" => Language::Rust,
            "go" | "golang" => Language::Go,
            _ => return Err(Error::UnknownProfile(s.to_string())),
        })
    }
}

/// A language choice that may be left to detection.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum LanguageSpec {
    #[default]
    Auto,
    Fixed(Language),
}

impl FromStr for LanguageSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        if s.eq_ignore_ascii_case("auto") {
            Ok(LanguageSpec::Auto)
        } else {
            s.parse().map(LanguageSpec::Fixed)
        }
    }
}

impl fmt::Display for LanguageSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LanguageSpec::Auto => f.write_str("auto"),
            LanguageSpec::Fixed(l) => f.write_str(l.name()),
        }
    }
}

impl Serialize for LanguageSpec {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for LanguageSpec {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Lexical rules for brace-delimited languages.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BraceFlavor {
    /// Unknown C-like language: `'...'` is a string when it closes on the same line.
    Generic,
    C,
    Java,
    Script,
    Rust,
    Go,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "style", content = "flavor", rename_all = "lowercase")]
pub enum LanguageProfile {
    Indentation,
    Brace(BraceFlavor),
}

impl LanguageProfile {
    pub fn for_language(lang: Language) -> Self {
        match lang {
            Language::Python => LanguageProfile::Indentation,
            Language::Cpp => LanguageProfile::Brace(BraceFlavor::C),
            Language::Java => LanguageProfile::Brace(BraceFlavor::Java),
            Language::JavaScript | Language::TypeScript => LanguageProfile::Brace(BraceFlavor::Script),
            Language::Rust => LanguageProfile::Brace(BraceFlavor::Rust),
            Language::Go => LanguageProfile::Brace(BraceFlavor::Go),
        }
    }

    /// Line-comment leader used for placeholders.
    pub fn comment_token(self) -> &'static str {
        match self {
            LanguageProfile::Indentation => "#",
            LanguageProfile::Brace(_) => "//",
        }
    }
}

/// Picks the profile for `hint`, or guesses one from the text: any column-0
/// `def ` or `class ` line (without a brace) means indentation-based.
pub fn detect_profile(src: &SourceText, hint: Option<Language>) -> LanguageProfile {
    if let Some(lang) = hint {
        return LanguageProfile::for_language(lang);
    }
    let pythonic = src.lines.iter().any(|l| {
        let c = l.content.as_str();
        c.starts_with("def ") || (c.starts_with("class ") && !c.contains('{'))
    });
    if pythonic {
        LanguageProfile::Indentation
    } else {
        LanguageProfile::Brace(BraceFlavor::Generic)
    }
}

pub fn resolve_profile(src: &SourceText, spec: LanguageSpec) -> LanguageProfile {
    match spec {
        LanguageSpec::Auto => detect_profile(src, None),
        LanguageSpec::Fixed(l) => detect_profile(src, Some(l)),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ChunkKind {
    Function,
    Class,
    Interstitial,
}

/// Inclusive line range.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LineSpan {
    pub start: usize,
    pub end: usize,
}

impl LineSpan {
    pub fn new(start: usize, end: usize) -> Self {
        debug_assert!(start <= end);
        Self { start, end }
    }

    pub fn len(&self) -> usize {
        self.end - self.start + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn range(&self) -> std::ops::Range<usize> {
        self.start..self.end + 1
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Chunk {
    pub id: usize,
    pub kind: ChunkKind,
    pub line_span: LineSpan,
    pub text: String,
    pub token_count: TokenCount,
    pub name: Option<String>,
    /// Offset of the definition line from `line_span.start` (past any
    /// decorators or comments). Zero for interstitial chunks.
    pub header_offset: usize,
}

impl Chunk {
    /// Lines holding something other than whitespace.
    pub fn non_blank_lines(&self) -> usize {
        self.text.lines().filter(|l| !l.trim().is_empty()).count()
    }
}

/// Kind of a top-level unit discovered by a scanner.
#[derive(Debug, Clone, PartialEq)]
pub(crate) enum UnitKind {
    Def { kind: ChunkKind, name: Option<String> },
    Comment,
    Decorator,
    Other,
}

/// A top-level unit: `start..=end` are its first and last non-blank lines.
#[derive(Debug, Clone, PartialEq)]
pub(crate) struct Unit {
    pub start: usize,
    pub end: usize,
    pub kind: UnitKind,
}

pub fn chunk_source(src: &SourceText, profile: LanguageProfile, tokens: &LineTokens) -> Vec<Chunk> {
    let units = match profile {
        LanguageProfile::Indentation => indent::scan(src),
        LanguageProfile::Brace(flavor) => brace::scan(src, flavor),
    };
    assemble(src, units, tokens)
}

struct Pending {
    start: usize,
    end: usize,
    header: usize,
    kind: UnitKind,
}

fn assemble(src: &SourceText, units: Vec<Unit>, tokens: &LineTokens) -> Vec<Chunk> {
    let n = src.len();
    if n == 0 {
        return Vec::new();
    }
    // Attach contiguous comments/decorators to the definition below them.
    let mut grouped: Vec<Pending> = Vec::with_capacity(units.len());
    for unit in units {
        if let UnitKind::Def { .. } = unit.kind {
            let mut start = unit.start;
            while let Some(prev) = grouped.last() {
                let attachable = matches!(prev.kind, UnitKind::Comment | UnitKind::Decorator);
                if attachable && prev.end + 1 == start {
                    start = prev.start;
                    grouped.pop();
                } else {
                    break;
                }
            }
            grouped.push(Pending {
                start,
                end: unit.end,
                header: unit.start,
                kind: unit.kind,
            });
        } else {
            grouped.push(Pending {
                start: unit.start,
                end: unit.end,
                header: unit.start,
                kind: unit.kind,
            });
        }
    }
    // Merge runs of non-definition units.
    let mut merged: Vec<Pending> = Vec::with_capacity(grouped.len());
    for mut p in grouped {
        if !matches!(p.kind, UnitKind::Def { .. }) {
            p.kind = UnitKind::Other;
        }
        if let (Some(last), UnitKind::Other) = (merged.last_mut(), &p.kind) {
            if last.kind == UnitKind::Other {
                last.end = p.end;
                continue;
            }
        }
        merged.push(p);
    }
    if merged.is_empty() {
        merged.push(Pending {
            start: 0,
            end: n - 1,
            header: 0,
            kind: UnitKind::Other,
        });
    }
    // Blank lines go to the preceding chunk; leading blanks to the first.
    merged[0].start = 0;
    let count = merged.len();
    for i in 0..count {
        merged[i].end = if i + 1 < count { merged[i + 1].start - 1 } else { n - 1 };
    }
    merged
        .into_iter()
        .enumerate()
        .map(|(id, p)| {
            let span = LineSpan::new(p.start, p.end);
            let (kind, name) = match p.kind {
                UnitKind::Def { kind, name } => (kind, name),
                _ => (ChunkKind::Interstitial, None),
            };
            let header_offset = if kind == ChunkKind::Interstitial {
                0
            } else {
                p.header - p.start
            };
            Chunk {
                id,
                kind,
                line_span: span,
                text: src.join(span.range()),
                token_count: tokens.span(span.range()),
                name,
                header_offset,
            }
        })
        .collect()
}

pub(crate) fn leading_ident(s: &str) -> Option<String> {
    let ident: String = s
        .trim_start()
        .chars()
        .take_while(|c| c.is_alphanumeric() || *c == '_' || *c == '$')
        .collect();
    (!ident.is_empty()).then_some(ident)
}
