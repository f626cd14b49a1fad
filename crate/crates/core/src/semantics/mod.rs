//! Name resolution and checking against explicit annotations.
//!
//! [`resolve_program`] builds per-module environments in dependency order;
//! [`check_program`] checks every declaration and produces a
//! [`TypedProgram`].

pub mod capacity;
pub mod check;
pub mod env;
pub mod exhaustive;
pub mod typed;
pub mod types;

pub use capacity::{check_capacity, Cap, CapEquality};
pub use check::{check_expr, check_program, instantiate, CheckOutput};
pub use env::{resolve_program, ModuleEnv, ProgramEnv};
pub use typed::*;
pub use types::{IntTy, QualName, Scheme, Subst, Type};
