//! The script language: statements declaring roots, bundles, theories and
//! expressions, followed by queries.
//!
//! ```text
//! root x
//! vb l = line(x)
//! theory F = fr(1)
//! E = sphere(l, n=1)
//! query tau(F, E)
//! ```

mod lexer;
mod parser;
mod printer;
mod run;

use std::fmt;

use thiserror::Error;

use crate::bundles::TrivialSpec;
use crate::chern::GradedClass;
use crate::scalars::Scalar;

pub use parser::parse;
pub use run::{run, run_into, Interpreter};

/// A 1-based source position.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Span {
    pub line: usize,
    pub col: usize,
}

impl fmt::Display for Span {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.col)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("parse error at {span}: expected {}, found {found}", expected.join(" or "))]
pub struct ParseError {
    pub span: Span,
    pub expected: Vec<String>,
    pub found: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("error at {span}: {message}\n  in: {statement}")]
pub struct SemanticError {
    pub span: Span,
    pub statement: String,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("evaluation error at {span}: {message}\n  in: {statement}")]
pub struct EvalError {
    pub span: Span,
    pub statement: String,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CliError {
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error(transparent)]
    Semantic(#[from] SemanticError),
    #[error(transparent)]
    Eval(#[from] EvalError),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Parse(_) | CliError::Semantic(_) => 1,
            CliError::Eval(_) => 2,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Script {
    pub statements: Vec<Statement>,
}

/// A statement with its position. Equality ignores the position.
#[derive(Debug, Clone)]
pub struct Statement {
    pub kind: StatementKind,
    pub span: Span,
}

impl PartialEq for Statement {
    fn eq(&self, other: &Self) -> bool {
        self.kind == other.kind
    }
}

impl Eq for Statement {}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum StatementKind {
    Root(Vec<String>),
    Bundle { name: String, value: BundleExpr },
    Theory { name: String, value: TheoryExpr },
    Expr { name: String, value: Expr },
    Query(Query),
}

/// A sum of bundle terms.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BundleExpr {
    pub terms: Vec<BundleTerm>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum BundleTerm {
    Line(String),
    Trivial(i64),
    Complement(Box<BundleExpr>, i64),
    Name(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TheoryExpr {
    Fr(u32),
    Mmm(u32),
    Custom(u32, Scalar, Scalar),
    Name(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HandleExpr {
    pub index: i64,
    pub xi: BundleExpr,
    pub eta: BundleExpr,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Expr {
    Name(String),
    Trivial(TrivialSpec),
    Sphere(BundleExpr, i64),
    Disk(BundleExpr),
    RelDisk(BundleExpr),
    Double(Box<Expr>),
    Dv(Box<Expr>),
    Union(Box<Expr>, Box<Expr>),
    Glue(Box<Expr>, Box<Expr>),
    Prod(Box<Expr>, Box<Expr>),
    Morse { base: Option<Box<Expr>>, handles: Vec<HandleExpr> },
    Hatcher(BundleExpr, i64, i64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TauKind {
    Tau,
    Even,
    Odd,
    Delta,
}

impl TauKind {
    pub fn keyword(self) -> &'static str {
        match self {
            TauKind::Tau => "tau",
            TauKind::Even => "tau_even",
            TauKind::Odd => "tau_odd",
            TauKind::Delta => "tdelta",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Query {
    Tau { kind: TauKind, theory: TheoryExpr, expr: Expr },
    M2k { expr: Expr, k: u32 },
    Chi(Expr),
    /// Transfer of a class pulled back from the base.
    Transfer { expr: Expr, class: GradedClass },
}

/// Words that cannot be used as names.
pub const KEYWORDS: &[&str] = &[
    "root", "vb", "theory", "query", "line", "trivial", "complement", "fr", "mmm", "custom", "sphere", "disk",
    "reldisk", "double", "dv", "union", "glue", "prod", "morse", "hatcher", "base", "handles", "tau", "tau_even",
    "tau_odd", "tdelta", "m2k", "chi", "transfer",
];
