//! `.qoc`: a small language for linear-optical circuits with photon counting
//! and classical feed-forward.
//!
//! ```text
//! modes 2
//! param f = 0.5
//! vacuum 1
//! bs 0 2 arcsin(sqrt(f))
//! detect 2 -> k
//! if k > 0 {
//!   ps 1 pi / (k + 1)
//! }
//! ```
//!
//! The grammar is documented in `docs/qoc-grammar.md`.

mod ast;
mod interp;
mod parser;

use std::collections::BTreeMap;
use std::fmt;

pub use ast::{BinOp, Chi, CmpOp, Condition, Expr, Func, ParamDecl, Program, Statement};
pub use interp::{interpret, Branch, InterpretMode};
pub use parser::{parse, MAX_NESTING};

/// Position in source text. `line` and `column` are 1-based; `column` counts
/// characters.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Span {
    pub offset: usize,
    pub line: usize,
    pub column: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ParseErrorKind {
    Syntax,
    /// Well-formed text that breaks a program invariant.
    Validation,
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub struct ParseError {
    pub kind: ParseErrorKind,
    pub span: Span,
    pub message: String,
    /// What the parser would have accepted at `span` (syntax errors only).
    pub expected: Vec<String>,
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let kind = match self.kind {
            ParseErrorKind::Syntax => "syntax error",
            ParseErrorKind::Validation => "validation error",
        };
        write!(
            f,
            "{kind} at line {}, column {}: {}",
            self.span.line, self.span.column, self.message
        )?;
        if !self.expected.is_empty() {
            write!(f, " (expected {})", self.expected.join(", "))?;
        }
        Ok(())
    }
}

impl ParseError {
    /// The message followed by the offending source line and a caret.
    pub fn render(&self, source: &str) -> String {
        let line = source.lines().nth(self.span.line - 1).unwrap_or("");
        format!(
            "{self}\n{:>4} | {line}\n     | {}^",
            self.span.line,
            " ".repeat(self.span.column.saturating_sub(1))
        )
    }
}

/// Failure while executing a program on a concrete state.
#[derive(Clone, Debug, PartialEq, thiserror::Error)]
#[error("{message} (registers: {})", format_registers(.registers))]
pub struct RuntimeError {
    pub message: String,
    /// Register values on the branch that failed.
    pub registers: BTreeMap<String, u32>,
}

fn format_registers(registers: &BTreeMap<String, u32>) -> String {
    if registers.is_empty() {
        return "none".to_string();
    }
    registers
        .iter()
        .map(|(k, v)| format!("{k}={v}"))
        .collect::<Vec<_>>()
        .join(", ")
}

/// Programs shipped with the library, by file name.
pub const BUNDLED: [(&str, &str); 4] = [
    ("circuit1.qoc", include_str!("../../assets/circuit1.qoc")),
    ("circuit2.qoc", include_str!("../../assets/circuit2.qoc")),
    ("circuit3.qoc", include_str!("../../assets/circuit3.qoc")),
    ("pipeline.qoc", include_str!("../../assets/pipeline.qoc")),
];

pub fn bundled(name: &str) -> Option<&'static str> {
    BUNDLED.iter().find(|(n, _)| *n == name).map(|(_, src)| *src)
}
