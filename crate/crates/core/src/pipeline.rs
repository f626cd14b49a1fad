//! The stages wired together: stdlib prepending, parsing, checking,
//! emission and interpretation.

use std::collections::BTreeSet;

use crate::codegen::{emit_program, EmitUnit};
use crate::diagnostics::{has_errors, Diagnostic};
use crate::frontend::parse_program;
use crate::interp::{run_main, HostHooks, RuntimeFault};
use crate::semantics::{check_program, TypedProgram};
use crate::stdlib;

#[derive(Clone, Copy, Debug)]
pub struct Options {
    /// Prepend the bundled stdlib modules to the user's files.
    pub stdlib: bool,
}

impl Default for Options {
    fn default() -> Self {
        Options { stdlib: true }
    }
}

/// A program that checked without errors.
#[derive(Clone, Debug)]
pub struct Checked {
    pub program: TypedProgram,
    /// Warnings only.
    pub diagnostics: Vec<Diagnostic>,
    /// Modules that came from the user's files, in input order.
    pub user_modules: Vec<String>,
}

#[derive(Clone, Debug, thiserror::Error)]
#[error("compilation failed with {} diagnostic(s)", diagnostics.len())]
pub struct Failed {
    /// Errors and warnings, in the order they were found.
    pub diagnostics: Vec<Diagnostic>,
}

/// Parses and checks `(file name, text)` pairs.
pub fn check(files: &[(String, String)], opts: Options) -> Result<Checked, Failed> {
    let mut all = if opts.stdlib { stdlib::sources() } else { Vec::new() };
    let first_user = all.len();
    all.extend(files.iter().cloned());
    let modules = parse_program(&all).map_err(|diagnostics| Failed { diagnostics })?;
    let user_modules = modules[first_user..].iter().map(|m| m.name.name.clone()).collect();
    let out = check_program(&modules);
    if has_errors(&out.diagnostics) {
        return Err(Failed { diagnostics: out.diagnostics });
    }
    Ok(Checked { program: out.program, diagnostics: out.diagnostics, user_modules })
}

/// Emits the user's modules and everything they depend on. Without user
/// modules the whole program is emitted.
pub fn emit(c: &Checked) -> EmitUnit {
    emit_program(&prune(&c.program, &c.user_modules))
}

/// Runs the program's `main` against `host`.
pub fn run(c: &Checked, host: &mut dyn HostHooks) -> Result<(), RuntimeFault> {
    run_main(&c.program, None, host)
}

/// Keeps `roots` and their transitive dependencies, in program order.
pub fn prune(p: &TypedProgram, roots: &[String]) -> TypedProgram {
    if roots.is_empty() {
        return p.clone();
    }
    let mut keep: BTreeSet<&str> = BTreeSet::new();
    let mut work: Vec<&str> = roots.iter().map(String::as_str).collect();
    while let Some(m) = work.pop() {
        if keep.insert(m) {
            if let Some(tm) = p.module(m) {
                work.extend(tm.deps.iter().map(String::as_str));
            }
        }
    }
    TypedProgram { modules: p.modules.iter().filter(|m| keep.contains(m.name.as_str())).cloned().collect() }
}
