//! Source positions and compiler diagnostics.

use std::fmt;
use std::sync::Arc;

/// A region of a source file. Lines and columns are 1-based; `offset` and
/// `len` are byte counts.
///
/// Spans never take part in AST equality, see [`crate::frontend::ast`].
#[derive(Clone, Debug, Default, Hash, PartialEq, Eq)]
pub struct Span {
    pub file: Arc<str>,
    pub offset: usize,
    pub len: usize,
    pub line: u32,
    pub col: u32,
}

impl Span {
    pub fn new(file: Arc<str>, offset: usize, len: usize, line: u32, col: u32) -> Self {
        Span { file, offset, len, line, col }
    }

    /// Smallest span covering both `self` and `other` (same file assumed).
    pub fn to(&self, other: &Span) -> Span {
        if other.offset < self.offset {
            return other.to(self);
        }
        let end = (other.offset + other.len).max(self.offset + self.len);
        Span { len: end - self.offset, ..self.clone() }
    }
}

impl fmt::Display for Span {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}:{}", self.file, self.line, self.col)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Severity {
    Warning,
    Error,
}

impl fmt::Display for Severity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Severity::Warning => "warning",
            Severity::Error => "error",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Diagnostic {
    pub severity: Severity,
    pub span: Span,
    pub message: String,
    /// Optional fix-it suggestion shown after the message.
    pub hint: Option<String>,
}

impl Diagnostic {
    pub fn error(span: Span, message: impl Into<String>) -> Self {
        Diagnostic { severity: Severity::Error, span, message: message.into(), hint: None }
    }

    pub fn warning(span: Span, message: impl Into<String>) -> Self {
        Diagnostic { severity: Severity::Warning, span, message: message.into(), hint: None }
    }

    pub fn with_hint(mut self, hint: impl Into<String>) -> Self {
        self.hint = Some(hint.into());
        self
    }

    pub fn is_error(&self) -> bool {
        self.severity == Severity::Error
    }

    /// Single-line rendering: `file:line:col: severity: message`.
    pub fn render_line(&self) -> String {
        let mut out = format!("{}: {}: {}", self.span, self.severity, one_line(&self.message));
        if let Some(hint) = &self.hint {
            out.push_str(" [hint: ");
            out.push_str(&one_line(hint));
            out.push(']');
        }
        out
    }

    /// Human rendering: the header line, followed by the offending source line
    /// with a caret marker when `source` is available.
    pub fn render_human(&self, source: Option<&str>) -> String {
        let mut out = format!("{}: {}: {}", self.span, self.severity, self.message);
        if let Some(text) = source.and_then(|s| s.lines().nth(self.span.line.saturating_sub(1) as usize)) {
            let gutter = self.span.line.to_string();
            let pad = " ".repeat(gutter.len());
            let col = self.span.col.saturating_sub(1) as usize;
            let width = self.span.len.clamp(1, text.len().saturating_sub(col).max(1));
            out.push_str(&format!("\n{pad} |\n{gutter} | {text}\n{pad} | {}{}", " ".repeat(col), "^".repeat(width)));
        }
        if let Some(hint) = &self.hint {
            out.push_str(&format!("\n  = hint: {hint}"));
        }
        out
    }
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.render_line())
    }
}

fn one_line(s: &str) -> String {
    s.replace('\n', " ")
}

/// True when any diagnostic has error severity.
pub fn has_errors(diags: &[Diagnostic]) -> bool {
    diags.iter().any(Diagnostic::is_error)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn span() -> Span {
        Span::new(Arc::from("Blink.jun"), 4, 3, 2, 5)
    }

    #[test]
    fn line_format_has_position_prefix() {
        let d = Diagnostic::error(span(), "type mismatch");
        assert_eq!(d.render_line(), "Blink.jun:2:5: error: type mismatch");
    }

    #[test]
    fn human_format_points_at_column() {
        let d = Diagnostic::warning(span(), "unused").with_hint("remove it");
        let text = d.render_human(Some("module M\nlet abc : int32 = 1\n"));
        assert!(text.contains("2 | let abc : int32 = 1"));
        assert!(text.contains("|     ^^^"));
        assert!(text.ends_with("= hint: remove it"));
    }

    #[test]
    fn span_join_orders_operands() {
        let a = Span::new(Arc::from("f"), 10, 2, 1, 11);
        let b = Span::new(Arc::from("f"), 2, 3, 1, 3);
        let j = a.to(&b);
        assert_eq!((j.offset, j.len), (2, 10));
    }
}
