//! Brace-depth scanner for C-like languages.
//!
//! Tracks `{([` depth outside strings, character literals and comments. A
//! top-level group starts at depth 0 and runs until a block it opened closes,
//! or until a statement ends at depth 0 with no continuation.

use super::{BraceFlavor, ChunkKind, Unit, UnitKind};
use crate::text::SourceText;

const TYPE_KEYWORDS: &[&str] = &[
    "class",
    "struct",
    "interface",
    "enum",
    "impl",
    "trait",
    "namespace",
    "mod",
    "union",
    "object",
    "record",
];

/// Words that can directly precede `(` without naming a function.
const NON_NAMES: &[&str] = &[
    "func", "function", "fn", "async", "if", "for", "while", "switch", "return", "catch", "sizeof", "typeof", "new",
    "await", "match",
];

#[derive(Debug, Default, Clone)]
struct LineInfo {
    depth_end: i32,
    /// Code with comments removed and string bodies elided.
    code: String,
    comment_only: bool,
}

struct Scanner {
    flavor: BraceFlavor,
    depth: i32,
    in_block_comment: bool,
    /// Open multi-line string delimiter (template or raw strings).
    in_multiline: Option<char>,
}

impl Scanner {
    fn new(flavor: BraceFlavor) -> Self {
        Self {
            flavor,
            depth: 0,
            in_block_comment: false,
            in_multiline: None,
        }
    }

    fn backtick_strings(&self) -> bool {
        matches!(
            self.flavor,
            BraceFlavor::Script | BraceFlavor::Go | BraceFlavor::Generic
        )
    }

    fn feed(&mut self, line: &str) -> LineInfo {
        let chars: Vec<char> = line.chars().collect();
        let mut code = String::new();
        let mut i = 0;
        while i < chars.len() {
            let c = chars[i];
            let next = chars.get(i + 1).copied();
            if self.in_block_comment {
                if c == '*' && next == Some('/') {
                    self.in_block_comment = false;
                    i += 2;
                } else {
                    i += 1;
                }
                continue;
            }
            if let Some(q) = self.in_multiline {
                if c == '\\' && self.flavor == BraceFlavor::Script {
                    i += 2;
                    continue;
                }
                if c == q {
                    self.in_multiline = None;
                    code.push(q);
                }
                i += 1;
                continue;
            }
            match c {
                '/' if next == Some('/') => {
                    break;
                }
                '/' if next == Some('*') => {
                    self.in_block_comment = true;
                    i += 2;
                    continue;
                }
                '"' => {
                    code.push('"');
                    i = skip_quoted(&chars, i + 1, '"');
                    if i > chars.len() {
                        break;
                    }
                    code.push('"');
                    continue;
                }
                '`' if self.backtick_strings() => {
                    code.push('`');
                    self.in_multiline = Some('`');
                    i += 1;
                    continue;
                }
                '\'' => {
                    if let Some(after) = char_literal(&chars, i) {
                        code.push_str("''");
                        i = after;
                        continue;
                    }
                    let quoted = matches!(self.flavor, BraceFlavor::Script | BraceFlavor::Generic)
                        && chars[i + 1..].contains(&'\'');
                    if quoted {
                        code.push_str("''");
                        i = skip_quoted(&chars, i + 1, '\'');
                        continue;
                    }
                    code.push('\'');
                }
                '{' | '(' | '[' => {
                    self.depth += 1;
                    code.push(c);
                }
                '}' | ')' | ']' => {
                    self.depth = (self.depth - 1).max(0);
                    code.push(c);
                }
                _ => code.push(c),
            }
            i += 1;
        }
        let blank_code = code.trim().is_empty();
        LineInfo {
            depth_end: self.depth,
            comment_only: blank_code && !line.trim().is_empty(),
            code,
        }
    }
}

/// Index just past the closing `q`, or past the end when unterminated.
fn skip_quoted(chars: &[char], mut i: usize, q: char) -> usize {
    while i < chars.len() {
        match chars[i] {
            '\\' => i += 2,
            c if c == q => return i + 1,
            _ => i += 1,
        }
    }
    chars.len() + 1
}

/// `'x'` or `'\n'`-style literal starting at `i`; returns the index after it.
fn char_literal(chars: &[char], i: usize) -> Option<usize> {
    match chars.get(i + 1)? {
        '\\' => {
            let close = chars[i + 2..].iter().position(|&c| c == '\'')?;
            Some(i + 2 + close + 1)
        }
        _ if chars.get(i + 2) == Some(&'\'') => Some(i + 3),
        _ => None,
    }
}

fn indentation(s: &str) -> usize {
    s.chars().take_while(|c| c.is_whitespace()).count()
}

fn is_attribute(code: &str) -> bool {
    let t = code.trim();
    (t.starts_with('@') && !t.contains('{')) || (t.starts_with("#[") && t.ends_with(']'))
}

fn is_preprocessor(code: &str) -> bool {
    let t = code.trim_start();
    t.strip_prefix('#')
        .is_some_and(|r| r.trim_start().starts_with(|c: char| c.is_ascii_alphabetic()))
}

fn ends_with_continuation(code: &str) -> bool {
    let t = code.trim_end();
    [",", "=", "->", "=>", "&&", "||", "+", "::", ":"]
        .iter()
        .any(|s| t.ends_with(s))
        || t.ends_with('\\')
}

fn words(s: &str) -> impl Iterator<Item = &str> {
    s.split(|c: char| !(c.is_alphanumeric() || c == '_' || c == '$'))
        .filter(|w| !w.is_empty())
}

/// Identifier right before a `(` that is not a keyword; generics are skipped.
fn function_name(header: &str) -> Option<String> {
    let chars: Vec<char> = header.chars().collect();
    for (pos, &c) in chars.iter().enumerate() {
        if c != '(' {
            continue;
        }
        let mut j = pos;
        while j > 0 && chars[j - 1].is_whitespace() {
            j -= 1;
        }
        if j > 0 && chars[j - 1] == '>' {
            let mut depth = 0;
            while j > 0 {
                j -= 1;
                match chars[j] {
                    '>' => depth += 1,
                    '<' => {
                        depth -= 1;
                        if depth == 0 {
                            break;
                        }
                    }
                    _ => {}
                }
            }
        }
        let end = j;
        while j > 0 && (chars[j - 1].is_alphanumeric() || chars[j - 1] == '_' || chars[j - 1] == '$') {
            j -= 1;
        }
        let ident: String = chars[j..end].iter().collect();
        if !ident.is_empty() && !NON_NAMES.contains(&ident.as_str()) && !ident.starts_with(|c: char| c.is_ascii_digit())
        {
            return Some(ident);
        }
    }
    // `const f = () => {` style bindings.
    let mut it = words(header);
    while let Some(w) = it.next() {
        if matches!(w, "const" | "let" | "var") {
            return it.next().map(str::to_string);
        }
    }
    None
}

/// Drops `<...>` generic argument lists.
fn strip_generics(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    let mut depth = 0usize;
    let mut prev = ' ';
    for c in s.chars() {
        match c {
            '<' => depth += 1,
            '>' if prev != '-' && depth > 0 => depth -= 1,
            _ if depth == 0 => out.push(c),
            _ => {}
        }
        prev = c;
    }
    out
}

fn classify(header: &str) -> UnitKind {
    let before_paren = strip_generics(header.split('(').next().unwrap_or(""));
    let ws: Vec<&str> = words(&before_paren).collect();
    if let Some(k) = ws.iter().position(|w| TYPE_KEYWORDS.contains(w)) {
        let name = ws[k + 1..]
            .iter()
            .find(|w| !TYPE_KEYWORDS.contains(w))
            .map(|w| w.to_string());
        return UnitKind::Def {
            kind: ChunkKind::Class,
            name,
        };
    }
    if header.contains('(') {
        return UnitKind::Def {
            kind: ChunkKind::Function,
            name: function_name(header),
        };
    }
    UnitKind::Other
}

pub(super) fn scan(src: &SourceText, flavor: BraceFlavor) -> Vec<Unit> {
    let mut scanner = Scanner::new(flavor);
    let infos: Vec<LineInfo> = src.lines.iter().map(|l| scanner.feed(&l.content)).collect();
    let n = infos.len();
    let blank = |i: usize| src.lines[i].is_blank();
    let next_non_blank = |from: usize| (from..n).find(|&j| !blank(j));

    let mut units = Vec::new();
    let mut i = 0;
    while i < n {
        if blank(i) {
            i += 1;
            continue;
        }
        if infos[i].comment_only {
            let start = i;
            while i + 1 < n && infos[i + 1].comment_only && !blank(i + 1) {
                i += 1;
            }
            units.push(Unit {
                start,
                end: i,
                kind: UnitKind::Comment,
            });
            i += 1;
            continue;
        }
        let start = i;
        let base_indent = indentation(&src.lines[start].content);
        let mut header = String::new();
        let mut opened = false;
        let mut j = i;
        loop {
            let info = &infos[j];
            if !opened && !is_attribute(&info.code) {
                if let Some(p) = info.code.find('{') {
                    header.push_str(&info.code[..p]);
                    opened = true;
                } else {
                    header.push_str(&info.code);
                    header.push(' ');
                }
            }
            if info.depth_end > 0 {
                if j + 1 >= n {
                    break;
                }
                j += 1;
                continue;
            }
            if opened || info.comment_only && j > start {
                break;
            }
            let code = &info.code;
            let preprocessor = is_preprocessor(code);
            let mut cont = if preprocessor {
                code.trim_end().ends_with('\\')
            } else {
                is_attribute(code) || ends_with_continuation(code)
            };
            if !cont && !preprocessor && !code.trim_end().ends_with(';') {
                if let Some(k) = next_non_blank(j + 1) {
                    let next = &src.lines[k].content;
                    let next_t = next.trim_start();
                    cont = next_t.starts_with('{')
                        || next_t.starts_with("where")
                        || (indentation(next) > base_indent && !infos[k].comment_only);
                }
            }
            match next_non_blank(j + 1) {
                Some(k) if cont => j = k,
                _ => break,
            }
        }
        let kind = if opened { classify(&header) } else { UnitKind::Other };
        units.push(Unit { start, end: j, kind });
        i = j + 1;
    }
    units
}
