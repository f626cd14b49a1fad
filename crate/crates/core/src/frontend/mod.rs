//! Lexing, parsing and printing of `.jun` sources.

pub mod ast;
pub mod coverage;
pub mod lexer;
pub mod parser;
pub mod pretty;

use std::collections::HashMap;

use crate::diagnostics::Diagnostic;

pub use ast::SourceModule;
pub use lexer::{tokenize, Token, TokenKind};
pub use parser::parse_module;
pub use pretty::pretty_print;

/// Tokenizes and parses one file.
pub fn parse_source(source: &str, file_name: &str) -> Result<SourceModule, Vec<Diagnostic>> {
    let tokens = tokenize(source, file_name).map_err(|d| vec![d])?;
    parse_module(tokens, file_name)
}

/// Tokenizes and parses a standalone expression.
pub fn parse_expr_source(source: &str, file_name: &str) -> Result<ast::Expr, Diagnostic> {
    parser::parse_expr(tokenize(source, file_name)?, file_name)
}

/// Parses every file, one module per file, keeping the given order.
pub fn parse_program<S: AsRef<str>>(files: &[(S, S)]) -> Result<Vec<SourceModule>, Vec<Diagnostic>> {
    let mut modules = Vec::with_capacity(files.len());
    let mut diags = Vec::new();
    let mut seen: HashMap<String, usize> = HashMap::new();
    for (name, text) in files {
        match parse_source(text.as_ref(), name.as_ref()) {
            Ok(m) => {
                if let Some(&first) = seen.get(&m.name.name) {
                    let first: &SourceModule = &modules[first];
                    diags.push(Diagnostic::error(
                        m.name.span.clone(),
                        format!("duplicate module `{}` (first declared at {})", m.name.name, first.name.span),
                    ));
                } else {
                    seen.insert(m.name.name.clone(), modules.len());
                }
                modules.push(m);
            }
            Err(ds) => diags.extend(ds),
        }
    }
    if diags.is_empty() {
        Ok(modules)
    } else {
        Err(diags)
    }
}
