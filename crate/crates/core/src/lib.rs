//! Compiler toolchain for Juniper, a small ML-family functional reactive
//! language for microcontrollers.
//!
//! The pipeline is [`frontend`] (lexing and parsing), [`semantics`] (name
//! resolution and checking against explicit annotations), then either
//! [`codegen`] (a single C++ translation unit) or [`interp`] (a reference
//! evaluator driven by a simulated clock and pin schedule). The bundled
//! signal library lives in [`stdlib`]; [`pipeline`] wires the stages together.

pub mod codegen;
pub mod diagnostics;
pub mod frontend;
pub mod interp;
pub mod pipeline;
pub mod semantics;
pub mod stdlib;

pub use diagnostics::{Diagnostic, Severity, Span};

/// Runs a step of a recursive walk, growing the stack first when it runs
/// low, so deeply nested sources cannot overflow it.
pub(crate) fn deep<R>(f: impl FnOnce() -> R) -> R {
    stacker::maybe_grow(128 * 1024, 4 * 1024 * 1024, f)
}
