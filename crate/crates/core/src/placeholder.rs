//! Rendering of kept text interleaved with comment placeholders for omitted spans.

use crate::chunker::{LanguageProfile, LineSpan};

/// A piece of output: kept source lines, or an omitted span of the original.
#[derive(Debug, Clone, PartialEq)]
pub enum Segment {
    Kept(String),
    Omitted {
        /// Absolute line span in the original source.
        lines: LineSpan,
        name: Option<String>,
        indent: String,
    },
}

/// `"# ... foo omitted"` or `"// ... lines 3-9 omitted"` (1-based, inclusive).
pub fn placeholder_line(profile: LanguageProfile, indent: &str, name: Option<&str>, lines: LineSpan) -> String {
    let label = match name {
        Some(n) => n.to_string(),
        None => format!("lines {}-{}", lines.start + 1, lines.end + 1),
    };
    format!("{indent}{} ... {label} omitted", profile.comment_token())
}

/// Joins segments with LF. Adjacent omitted segments collapse into a single
/// placeholder; with `placeholders` off they vanish entirely.
pub fn render(segments: &[Segment], profile: LanguageProfile, placeholders: bool) -> String {
    let mut lines: Vec<String> = Vec::new();
    let mut pending: Option<(LineSpan, Option<String>, String, usize)> = None;
    let flush = |pending: &mut Option<(LineSpan, Option<String>, String, usize)>, lines: &mut Vec<String>| {
        if let Some((span, name, indent, count)) = pending.take() {
            if placeholders {
                let name = if count == 1 { name } else { None };
                lines.push(placeholder_line(profile, &indent, name.as_deref(), span));
            }
        }
    };
    for seg in segments {
        match seg {
            Segment::Kept(text) => {
                flush(&mut pending, &mut lines);
                lines.push(text.clone());
            }
            Segment::Omitted {
                lines: span,
                name,
                indent,
            } => match &mut pending {
                Some((acc, _, _, count)) => {
                    acc.start = acc.start.min(span.start);
                    acc.end = acc.end.max(span.end);
                    *count += 1;
                }
                None => pending = Some((*span, name.clone(), indent.clone(), 1)),
            },
        }
    }
    flush(&mut pending, &mut lines);
    lines.join("\n")
}

pub(crate) fn indentation_of(text: &str) -> String {
    text.lines()
        .find(|l| !l.trim().is_empty())
        .map(|l| l.chars().take_while(|c| c.is_whitespace()).collect())
        .unwrap_or_default()
}
