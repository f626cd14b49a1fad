//! Tokenizer. Whitespace and comments are skipped but every token keeps the
//! exact byte range it came from, so the source can be rebuilt from the
//! token texts plus the gaps between them.

use std::sync::Arc;

use crate::diagnostics::{Diagnostic, Span};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum TokenKind {
    Ident,
    /// `'a`
    TyVar,
    Int,
    Float,
    Str,
    Keyword,
    Op,
    /// Everything between a pair of `#` delimiters.
    Inline,
    Punct,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Token {
    pub kind: TokenKind,
    /// Verbatim lexeme, including delimiters for strings and inline blobs.
    pub text: String,
    pub span: Span,
}

impl Token {
    pub fn is(&self, text: &str) -> bool {
        matches!(self.kind, TokenKind::Keyword | TokenKind::Op | TokenKind::Punct) && self.text == text
    }

    /// Body of an inline-code token without the surrounding `#`s.
    pub fn inline_body(&self) -> Option<&str> {
        (self.kind == TokenKind::Inline).then(|| &self.text[1..self.text.len() - 1])
    }
}

pub const KEYWORDS: &[&str] = &[
    "and", "array", "case", "do", "downto", "elif", "else", "end", "export", "false", "fn", "for", "fun", "if", "in",
    "include", "let", "mod", "module", "mutable", "not", "null", "of", "open", "or", "ref", "set", "then", "to",
    "true", "type", "while",
];

const OPS3: &[&str] = &["&&&", "|||", "<<<", ">>>", "~~~"];
const OPS2: &[&str] = &["==", "!=", ">=", "<=", "->", "=>"];
const OPS1: &[char] = &['+', '-', '*', '/', '>', '<', '!', '='];
const PUNCT: &[char] = &['(', ')', '{', '}', '[', ']', ',', ';', ':', '.', '|'];

pub fn is_keyword(s: &str) -> bool {
    KEYWORDS.contains(&s)
}

struct Cursor<'a> {
    src: &'a str,
    file: Arc<str>,
    pos: usize,
    line: u32,
    col: u32,
}

impl<'a> Cursor<'a> {
    fn peek(&self) -> Option<char> {
        self.src[self.pos..].chars().next()
    }

    fn peek_at(&self, n: usize) -> Option<char> {
        self.src[self.pos..].chars().nth(n)
    }

    fn rest(&self) -> &'a str {
        &self.src[self.pos..]
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.peek()?;
        self.pos += c.len_utf8();
        if c == '\n' {
            self.line += 1;
            self.col = 1;
        } else {
            self.col += 1;
        }
        Some(c)
    }

    fn bump_n(&mut self, n: usize) {
        for _ in 0..n {
            self.bump();
        }
    }

    fn span_from(&self, start: (usize, u32, u32)) -> Span {
        Span::new(self.file.clone(), start.0, self.pos - start.0, start.1, start.2)
    }

    fn mark(&self) -> (usize, u32, u32) {
        (self.pos, self.line, self.col)
    }
}

/// Splits `source` into tokens. Stops at the first lexical error.
pub fn tokenize(source: &str, file_name: &str) -> Result<Vec<Token>, Diagnostic> {
    let mut cur = Cursor { src: source, file: Arc::from(file_name), pos: 0, line: 1, col: 1 };
    let mut tokens = Vec::new();

    while let Some(c) = cur.peek() {
        let start = cur.mark();
        if c.is_whitespace() {
            cur.bump();
            continue;
        }
        if cur.rest().starts_with("//") {
            while let Some(c) = cur.peek() {
                if c == '\n' {
                    break;
                }
                cur.bump();
            }
            continue;
        }
        if cur.rest().starts_with("(*") {
            cur.bump_n(2);
            loop {
                if cur.rest().starts_with("*)") {
                    cur.bump_n(2);
                    break;
                }
                if cur.bump().is_none() {
                    return Err(Diagnostic::error(cur.span_from(start), "unterminated block comment"));
                }
            }
            continue;
        }

        let kind = if c.is_ascii_alphabetic() || c == '_' {
            while cur.peek().is_some_and(|c| c.is_ascii_alphanumeric() || c == '_') {
                cur.bump();
            }
            let text = &source[start.0..cur.pos];
            if text == "_" {
                TokenKind::Punct
            } else if is_keyword(text) {
                TokenKind::Keyword
            } else {
                TokenKind::Ident
            }
        } else if c == '\'' {
            cur.bump();
            if !cur.peek().is_some_and(|c| c.is_ascii_alphabetic() || c == '_') {
                return Err(Diagnostic::error(cur.span_from(start), "expected a type variable name after `'`"));
            }
            while cur.peek().is_some_and(|c| c.is_ascii_alphanumeric() || c == '_') {
                cur.bump();
            }
            TokenKind::TyVar
        } else if c.is_ascii_digit() {
            lex_number(&mut cur)
        } else if c == '"' {
            cur.bump();
            loop {
                match cur.bump() {
                    Some('"') => break,
                    Some('\\') => {
                        cur.bump();
                    }
                    Some(_) => {}
                    None => return Err(Diagnostic::error(cur.span_from(start), "unterminated string literal")),
                }
            }
            TokenKind::Str
        } else if c == '#' {
            cur.bump();
            loop {
                match cur.bump() {
                    Some('#') => break,
                    Some(_) => {}
                    None => {
                        return Err(Diagnostic::error(cur.span_from(start), "unterminated inline code block")
                            .with_hint("inline C++ must be closed by a second `#`"))
                    }
                }
            }
            TokenKind::Inline
        } else if let Some(op) = OPS3.iter().chain(OPS2).find(|op| cur.rest().starts_with(**op)) {
            cur.bump_n(op.len());
            TokenKind::Op
        } else if OPS1.contains(&c) {
            cur.bump();
            TokenKind::Op
        } else if PUNCT.contains(&c) {
            cur.bump();
            TokenKind::Punct
        } else {
            cur.bump();
            return Err(Diagnostic::error(cur.span_from(start), format!("illegal character `{c}`")));
        };

        tokens.push(Token { kind, text: source[start.0..cur.pos].to_string(), span: cur.span_from(start) });
    }
    Ok(tokens)
}

fn lex_number(cur: &mut Cursor<'_>) -> TokenKind {
    if cur.rest().starts_with("0x") && cur.peek_at(2).is_some_and(|c| c.is_ascii_hexdigit()) {
        cur.bump_n(2);
        while cur.peek().is_some_and(|c| c.is_ascii_hexdigit()) {
            cur.bump();
        }
        return TokenKind::Int;
    }
    let mut kind = TokenKind::Int;
    while cur.peek().is_some_and(|c| c.is_ascii_digit()) {
        cur.bump();
    }
    if cur.peek() == Some('.') && cur.peek_at(1).is_some_and(|c| c.is_ascii_digit()) {
        kind = TokenKind::Float;
        cur.bump();
        while cur.peek().is_some_and(|c| c.is_ascii_digit()) {
            cur.bump();
        }
    }
    if matches!(cur.peek(), Some('e' | 'E')) {
        let signed = matches!(cur.peek_at(1), Some('+' | '-'));
        let digit_at = if signed { 2 } else { 1 };
        if cur.peek_at(digit_at).is_some_and(|c| c.is_ascii_digit()) {
            kind = TokenKind::Float;
            cur.bump_n(digit_at);
            while cur.peek().is_some_and(|c| c.is_ascii_digit()) {
                cur.bump();
            }
        }
    }
    kind
}

/// Rebuilds the source from tokens, copying the skipped gaps (whitespace and
/// comments) verbatim from `source`.
pub fn reconstruct(source: &str, tokens: &[Token]) -> String {
    let mut out = String::with_capacity(source.len());
    let mut pos = 0;
    for t in tokens {
        out.push_str(&source[pos..t.span.offset]);
        out.push_str(&t.text);
        pos = t.span.offset + t.span.len;
    }
    out.push_str(&source[pos..]);
    out
}

/// True when `gap` holds nothing but whitespace and comments.
pub fn is_trivia(gap: &str) -> bool {
    let mut rest = gap.trim_start();
    while !rest.is_empty() {
        if let Some(r) = rest.strip_prefix("//") {
            rest = r.split_once('\n').map_or("", |(_, tail)| tail);
        } else if let Some(r) = rest.strip_prefix("(*") {
            match r.split_once("*)") {
                Some((_, tail)) => rest = tail,
                None => return false,
            }
        } else {
            return false;
        }
        rest = rest.trim_start();
    }
    true
}
