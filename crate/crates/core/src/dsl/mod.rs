//! The reward expression language.
//!
//! A reward program is a sequence of `let` bindings followed by a single
//! `return` expression over the observation variables of an environment and
//! the two booleans `success` and `failure`:
//!
//! ```text
//! let upright = 1.0 - abs(pole_angle) / 0.2095;
//! return if failure then -10.0 else upright;
//! ```
//!
//! Source text goes through [`parse`], [`typecheck`] and then
//! [`TypedProgram::evaluate`]. Every stage reports problems as
//! [`Diagnostic`]s, which are precise enough to be fed back to a code
//! generator verbatim.

mod ast;
mod diagnostic;
mod eval;
mod extract;
mod lexer;
mod parser;
mod pretty;
mod typeck;

pub use ast::{BinaryOp, Binding, Builtin, Expr, ExprKind, RewardProgram, Type, UnaryOp, VarRef};
pub use diagnostic::{Diagnostic, DiagnosticCode, Severity, SourceSpan};
pub use eval::{Evaluation, DEFAULT_R_MAX};
pub use extract::extract_program;
pub use parser::parse;
pub use pretty::pretty_print;
pub use typeck::{typecheck, TypedProgram};

/// Words that cannot be used as binding or observation names.
pub const RESERVED_WORDS: &[&str] = &[
    "let", "return", "if", "then", "else", "and", "or", "not", "true", "false", "success",
    "failure",
];

/// Parses, then type-checks against `spec`. Convenience for callers that do
/// not need the intermediate untyped program.
pub fn compile(source: &str, spec: &crate::ObservationSpec) -> Result<TypedProgram, alloc::vec::Vec<Diagnostic>> {
    let program = parse(source)?;
    typecheck(&program, spec)
}

/// True for names usable as observation variables or bindings.
pub fn is_valid_identifier(name: &str) -> bool {
    let mut chars = name.chars();
    let head_ok = matches!(chars.next(), Some(c) if c.is_ascii_alphabetic() || c == '_');
    head_ok
        && chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
        && !RESERVED_WORDS.contains(&name)
        && Builtin::from_name(name).is_none()
}
