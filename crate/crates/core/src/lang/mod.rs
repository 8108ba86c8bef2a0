//! A small textual language for hybrid probabilistic programs.
//!
//! Programs are a list of bindings, observations and constant-bound loops
//! followed by one `return` query. See `crates/cli/examples/*.hb` and the
//! grammar in the README.

pub mod ast;
mod check;
mod eval;
mod lexer;
pub mod output;
mod parser;

use std::fmt;

pub use check::check;
pub use eval::{evaluate, EvalConfig};
pub use output::{QueryOutput, Stats};
pub use parser::parse;

use crate::error::{Error, Result};

/// A source position (1-based line and column).
///
/// Positions never take part in tree comparisons, so a re-printed program
/// compares equal to the original.
#[derive(Debug, Clone, Copy, Default, Eq)]
pub struct Span {
    pub line: usize,
    pub col: usize,
}

impl PartialEq for Span {
    fn eq(&self, _: &Self) -> bool {
        true
    }
}

/// A located error in a program.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Diagnostic {
    pub kind: DiagnosticKind,
    pub line: usize,
    pub col: usize,
    pub message: String,
}

impl Diagnostic {
    pub(crate) fn at(kind: DiagnosticKind, span: Span, message: impl Into<String>) -> Self {
        Diagnostic {
            kind,
            line: span.line,
            col: span.col,
            message: message.into(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DiagnosticKind {
    Syntax,
    Scope,
    Type,
    Eval,
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let kind = match self.kind {
            DiagnosticKind::Syntax => "syntax error",
            DiagnosticKind::Scope => "scope error",
            DiagnosticKind::Type => "type error",
            DiagnosticKind::Eval => "error",
        };
        write!(f, "{kind} at {}:{}: {}", self.line, self.col, self.message)
    }
}

impl std::error::Error for Diagnostic {}

/// Parses, checks and evaluates a program.
pub fn run(src: &str, config: &EvalConfig) -> Result<QueryOutput> {
    let prog = parse(src)?;
    check(&prog)?;
    evaluate(&prog, config)
}

/// Parses and checks without evaluating.
pub fn validate(src: &str) -> Result<ast::Program> {
    let prog = parse(src)?;
    check(&prog).map_err(Error::from)?;
    Ok(prog)
}
