//! Syntax tree and its canonical printer.

use std::fmt::{self, Write};

use super::Span;

#[derive(Debug, Clone, PartialEq)]
pub struct Program {
    pub stmts: Vec<Stmt>,
    pub query: Query,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Stmt {
    Assign {
        name: String,
        index: Option<Expr>,
        value: Expr,
        span: Span,
    },
    Observe {
        target: Expr,
        value: Option<Expr>,
        span: Span,
    },
    For {
        var: String,
        iter: Iter,
        body: Vec<Stmt>,
        span: Span,
    },
}

/// What a `for` loop ranges over.
#[derive(Debug, Clone, PartialEq)]
pub enum Iter {
    /// Inclusive integer range `lo:hi`.
    Range(i64, i64),
    Over(Expr),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QueryKind {
    Pr,
    Expectation,
    Variance,
}

impl QueryKind {
    pub fn name(self) -> &'static str {
        match self {
            QueryKind::Pr => "pr",
            QueryKind::Expectation => "expectation",
            QueryKind::Variance => "variance",
        }
    }

    /// Accepts the lowercase and capitalized spellings.
    pub fn from_name(name: &str) -> Option<Self> {
        match name {
            "pr" | "Pr" => Some(QueryKind::Pr),
            "expectation" | "Expectation" => Some(QueryKind::Expectation),
            "variance" | "Variance" => Some(QueryKind::Variance),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Query {
    pub kind: QueryKind,
    pub target: Expr,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Expr {
    pub kind: ExprKind,
    pub span: Span,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UnOp {
    Not,
    Neg,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinOp {
    Or,
    And,
    Lt,
    Le,
    Gt,
    Ge,
    Eq,
    Ne,
    Add,
    Sub,
    Mul,
    Div,
}

impl BinOp {
    pub fn symbol(self) -> &'static str {
        match self {
            BinOp::Or => "|",
            BinOp::And => "&",
            BinOp::Lt => "<",
            BinOp::Le => "<=",
            BinOp::Gt => ">",
            BinOp::Ge => ">=",
            BinOp::Eq => "==",
            BinOp::Ne => "!=",
            BinOp::Add => "+",
            BinOp::Sub => "-",
            BinOp::Mul => "*",
            BinOp::Div => "/",
        }
    }

    /// Binding strength; larger binds tighter.
    pub fn precedence(self) -> u8 {
        match self {
            BinOp::Or => 1,
            BinOp::And => 2,
            BinOp::Lt | BinOp::Le | BinOp::Gt | BinOp::Ge | BinOp::Eq | BinOp::Ne => 3,
            BinOp::Add | BinOp::Sub => 4,
            BinOp::Mul | BinOp::Div => 5,
        }
    }

    pub fn is_comparison(self) -> bool {
        self.precedence() == 3
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ExprKind {
    Num(f64),
    Bool(bool),
    Var(String),
    Index(Box<Expr>, Box<Expr>),
    Array(Vec<Expr>),
    Call(String, Vec<Expr>),
    /// `reduce(|, xs)` or `reduce(&, xs)`.
    Reduce(BinOp, Box<Expr>),
    If(Box<Expr>, Box<Expr>, Box<Expr>),
    Unary(UnOp, Box<Expr>),
    Binary(BinOp, Box<Expr>, Box<Expr>),
}

const INDENT: &str = "  ";

impl fmt::Display for Program {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut out = String::new();
        for s in &self.stmts {
            print_stmt(&mut out, s, 0);
        }
        let _ = writeln!(
            out,
            "return {}({})",
            self.query.kind.name(),
            self.query.target
        );
        f.write_str(&out)
    }
}

fn print_stmt(out: &mut String, stmt: &Stmt, depth: usize) {
    let pad = INDENT.repeat(depth);
    match stmt {
        Stmt::Assign {
            name, index, value, ..
        } => match index {
            Some(i) => {
                let _ = writeln!(out, "{pad}{name}[{i}] = {value}");
            }
            None => {
                let _ = writeln!(out, "{pad}{name} = {value}");
            }
        },
        Stmt::Observe { target, value, .. } => match value {
            Some(v) => {
                let _ = writeln!(out, "{pad}observe({target}, {v})");
            }
            None => {
                let _ = writeln!(out, "{pad}observe({target})");
            }
        },
        Stmt::For {
            var, iter, body, ..
        } => {
            match iter {
                Iter::Range(lo, hi) => {
                    let _ = writeln!(out, "{pad}for {var} in {lo}:{hi}");
                }
                Iter::Over(e) => {
                    let _ = writeln!(out, "{pad}for {var} in {e}");
                }
            }
            for s in body {
                print_stmt(out, s, depth + 1);
            }
            let _ = writeln!(out, "{pad}end");
        }
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.kind {
            ExprKind::Num(v) => write!(f, "{v}"),
            ExprKind::Bool(b) => write!(f, "{b}"),
            ExprKind::Var(name) => f.write_str(name),
            ExprKind::Index(a, i) => {
                write_operand(f, a, 7)?;
                write!(f, "[{i}]")
            }
            ExprKind::Array(items) => {
                f.write_str("[")?;
                write_list(f, items)?;
                f.write_str("]")
            }
            ExprKind::Call(name, args) => {
                write!(f, "{name}(")?;
                write_list(f, args)?;
                f.write_str(")")
            }
            ExprKind::Reduce(op, xs) => write!(f, "reduce({}, {xs})", op.symbol()),
            ExprKind::If(c, t, e) => write!(f, "if {c} then {t} else {e} end"),
            ExprKind::Unary(op, a) => {
                f.write_str(match op {
                    UnOp::Not => "!",
                    UnOp::Neg => "-",
                })?;
                write_operand(f, a, 6)
            }
            ExprKind::Binary(op, a, b) => {
                let p = op.precedence();
                // Left-associative; comparisons do not chain.
                let left_min = if op.is_comparison() { p + 1 } else { p };
                write_operand(f, a, left_min)?;
                write!(f, " {} ", op.symbol())?;
                write_operand(f, b, p + 1)
            }
        }
    }
}

fn strength(e: &Expr) -> u8 {
    match &e.kind {
        ExprKind::Binary(op, ..) => op.precedence(),
        ExprKind::Unary(..) => 6,
        _ => 7,
    }
}

fn write_operand(f: &mut fmt::Formatter<'_>, e: &Expr, min: u8) -> fmt::Result {
    if strength(e) < min {
        write!(f, "({e})")
    } else {
        write!(f, "{e}")
    }
}

fn write_list(f: &mut fmt::Formatter<'_>, items: &[Expr]) -> fmt::Result {
    for (i, e) in items.iter().enumerate() {
        if i > 0 {
            f.write_str(", ")?;
        }
        write!(f, "{e}")?;
    }
    Ok(())
}
