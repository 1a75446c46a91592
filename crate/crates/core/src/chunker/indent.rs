//! Indentation-based scanner (Python style).

use super::{leading_ident, ChunkKind, Unit, UnitKind};
use crate::text::SourceText;

#[derive(Default)]
struct State {
    depth: i32,
    /// Open triple-quote delimiter.
    triple: Option<char>,
    backslash: bool,
}

impl State {
    fn continuing(&self) -> bool {
        self.depth > 0 || self.triple.is_some() || self.backslash
    }

    fn feed(&mut self, line: &str) {
        let chars: Vec<char> = line.chars().collect();
        let mut i = 0;
        let mut single: Option<char> = None;
        self.backslash = false;
        while i < chars.len() {
            let c = chars[i];
            if let Some(q) = self.triple {
                if c == '\\' {
                    i += 2;
                    continue;
                }
                if c == q && chars.get(i + 1) == Some(&q) && chars.get(i + 2) == Some(&q) {
                    self.triple = None;
                    i += 3;
                    continue;
                }
                i += 1;
                continue;
            }
            if let Some(q) = single {
                if c == '\\' {
                    i += 2;
                    continue;
                }
                if c == q {
                    single = None;
                }
                i += 1;
                continue;
            }
            match c {
                '#' => break,
                '"' | '\'' => {
                    if chars.get(i + 1) == Some(&c) && chars.get(i + 2) == Some(&c) {
                        self.triple = Some(c);
                        i += 3;
                        continue;
                    }
                    single = Some(c);
                }
                '(' | '[' | '{' => self.depth += 1,
                ')' | ']' | '}' => self.depth = (self.depth - 1).max(0),
                '\\' if i + 1 == chars.len() => self.backslash = true,
                _ => {}
            }
            i += 1;
        }
    }
}

fn classify(line: &str) -> UnitKind {
    let def = line.strip_prefix("async def ").or_else(|| line.strip_prefix("def "));
    if let Some(rest) = def {
        return UnitKind::Def {
            kind: ChunkKind::Function,
            name: leading_ident(rest),
        };
    }
    if let Some(rest) = line.strip_prefix("class ") {
        return UnitKind::Def {
            kind: ChunkKind::Class,
            name: leading_ident(rest),
        };
    }
    if line.starts_with('@') {
        return UnitKind::Decorator;
    }
    if line.starts_with('#') {
        return UnitKind::Comment;
    }
    UnitKind::Other
}

pub(super) fn scan(src: &SourceText) -> Vec<Unit> {
    let n = src.len();
    // A line is top-level when it starts at column 0 outside any open
    // string, bracket or explicit continuation.
    let mut top = vec![false; n];
    let mut state = State::default();
    for (i, line) in src.lines.iter().enumerate() {
        let c = &line.content;
        top[i] = !state.continuing() && !line.is_blank() && !c.starts_with(|ch: char| ch.is_whitespace());
        state.feed(c);
    }
    // Column-0 comments only count when code after them is also top-level.
    for i in (0..n).rev() {
        if top[i] && src.lines[i].content.starts_with('#') {
            let next_code = (i + 1..n).find(|&j| {
                let l = &src.lines[j];
                !l.is_blank() && !(top[j] && l.content.starts_with('#'))
            });
            top[i] = next_code.is_none_or(|j| top[j]);
        }
    }
    let starts: Vec<usize> = (0..n).filter(|&i| top[i]).collect();
    let mut units = Vec::with_capacity(starts.len());
    for (k, &start) in starts.iter().enumerate() {
        let limit = starts.get(k + 1).copied().unwrap_or(n);
        let end = (start..limit)
            .rev()
            .find(|&j| !src.lines[j].is_blank())
            .unwrap_or(start);
        units.push(Unit {
            start,
            end,
            kind: classify(&src.lines[start].content),
        });
    }
    units
}
