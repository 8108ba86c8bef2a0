//! Scope and type checking.

use std::collections::HashMap;

use super::ast::{BinOp, Expr, ExprKind, Iter, Program, QueryKind, Stmt, UnOp};
use super::{Diagnostic, DiagnosticKind, Span};

#[derive(Debug, Clone, PartialEq)]
enum Ty {
    Bool,
    /// `random` is false for values known before any flip is drawn.
    Num {
        random: bool,
    },
    Array(Box<Ty>),
}

impl Ty {
    fn name(&self) -> String {
        match self {
            Ty::Bool => "bool".into(),
            Ty::Num { random: false } => "constant".into(),
            Ty::Num { random: true } => "number".into(),
            Ty::Array(t) => format!("array of {}", t.name()),
        }
    }

    /// Least upper bound, when the shapes agree.
    fn merge(&self, other: &Ty) -> Option<Ty> {
        match (self, other) {
            (Ty::Bool, Ty::Bool) => Some(Ty::Bool),
            (Ty::Num { random: a }, Ty::Num { random: b }) => Some(Ty::Num { random: *a || *b }),
            (Ty::Array(a), Ty::Array(b)) => a.merge(b).map(|t| Ty::Array(Box::new(t))),
            _ => None,
        }
    }
}

const RANDOM_NUM: Ty = Ty::Num { random: true };
const CONST_NUM: Ty = Ty::Num { random: false };

/// Distribution literals: accepted arities, and whether the first argument
/// may be random (a Gaussian mean).
pub(crate) fn distribution_signature(name: &str) -> Option<(&'static [usize], bool)> {
    Some(match name {
        "uniform" | "beta" => (&[2], false),
        "gaussian" | "normal" => (&[2, 4], true),
        "gaussian_around" => (&[2, 4], true),
        "exponential" | "student_t" | "chi_squared" => (&[1, 3], false),
        "gamma" | "laplace" => (&[2, 4], false),
        "general_gamma" => (&[4], false),
        "polynomial" => (&[3], false),
        _ => return None,
    })
}

pub fn check(prog: &Program) -> Result<(), Diagnostic> {
    let mut c = Checker {
        env: HashMap::new(),
    };
    for s in &prog.stmts {
        c.stmt(s)?;
    }
    let q = &prog.query;
    let t = c.expr(&q.target)?;
    match (q.kind, &t) {
        (_, Ty::Bool) | (_, Ty::Num { .. }) => Ok(()),
        (kind, other) => Err(type_error(
            q.target.span,
            format!("cannot ask `{}` of a {}", kind.name(), other.name()),
        )),
    }
}

struct Checker {
    env: HashMap<String, Ty>,
}

fn type_error(span: Span, msg: impl Into<String>) -> Diagnostic {
    Diagnostic::at(DiagnosticKind::Type, span, msg)
}

fn scope_error(span: Span, msg: impl Into<String>) -> Diagnostic {
    Diagnostic::at(DiagnosticKind::Scope, span, msg)
}

impl Checker {
    fn stmt(&mut self, s: &Stmt) -> Result<(), Diagnostic> {
        match s {
            Stmt::Assign {
                name,
                index,
                value,
                span,
            } => {
                let t = self.expr(value)?;
                match index {
                    None => {
                        self.env.insert(name.clone(), t);
                    }
                    Some(i) => {
                        self.constant_index(i)?;
                        if matches!(t, Ty::Array(_)) {
                            return Err(type_error(value.span, "array elements cannot be arrays"));
                        }
                        let merged = match self.env.get(name) {
                            None => t,
                            Some(Ty::Array(old)) => old.merge(&t).ok_or_else(|| {
                                type_error(
                                    value.span,
                                    format!(
                                        "`{name}` holds {} elements, not {}",
                                        old.name(),
                                        t.name()
                                    ),
                                )
                            })?,
                            Some(other) => {
                                return Err(type_error(
                                    *span,
                                    format!("`{name}` is a {}, not an array", other.name()),
                                ))
                            }
                        };
                        self.env.insert(name.clone(), Ty::Array(Box::new(merged)));
                    }
                }
                Ok(())
            }
            Stmt::Observe { target, value, .. } => {
                let t = self.expr(target)?;
                match value {
                    None => {
                        if t != Ty::Bool {
                            return Err(type_error(
                                target.span,
                                format!(
                                    "observe needs a bool or a value to compare with, got a {}",
                                    t.name()
                                ),
                            ));
                        }
                    }
                    Some(v) => {
                        if !matches!(t, Ty::Num { .. }) {
                            return Err(type_error(
                                target.span,
                                format!("observed expression is a {}, not a number", t.name()),
                            ));
                        }
                        self.constant(v, "observed value")?;
                    }
                }
                Ok(())
            }
            Stmt::For {
                var, iter, body, ..
            } => {
                let var_ty = match iter {
                    Iter::Range(..) => CONST_NUM,
                    Iter::Over(e) => match self.expr(e)? {
                        Ty::Array(t) => *t,
                        other => {
                            return Err(type_error(
                                e.span,
                                format!("cannot loop over a {}", other.name()),
                            ))
                        }
                    },
                };
                let saved = self.env.insert(var.clone(), var_ty);
                for s in body {
                    self.stmt(s)?;
                }
                match saved {
                    Some(t) => self.env.insert(var.clone(), t),
                    None => self.env.remove(var),
                };
                Ok(())
            }
        }
    }

    fn constant(&mut self, e: &Expr, what: &str) -> Result<(), Diagnostic> {
        match self.expr(e)? {
            Ty::Num { random: false } => Ok(()),
            other => Err(type_error(
                e.span,
                format!("{what} must be a constant number, got a {}", other.name()),
            )),
        }
    }

    fn constant_index(&mut self, e: &Expr) -> Result<(), Diagnostic> {
        self.constant(e, "array index")
    }

    fn num(&mut self, e: &Expr) -> Result<bool, Diagnostic> {
        match self.expr(e)? {
            Ty::Num { random } => Ok(random),
            other => Err(type_error(
                e.span,
                format!("expected a number, got a {}", other.name()),
            )),
        }
    }

    fn boolean(&mut self, e: &Expr) -> Result<(), Diagnostic> {
        match self.expr(e)? {
            Ty::Bool => Ok(()),
            other => Err(type_error(
                e.span,
                format!("expected a bool, got a {}", other.name()),
            )),
        }
    }

    fn expr(&mut self, e: &Expr) -> Result<Ty, Diagnostic> {
        match &e.kind {
            ExprKind::Num(_) => Ok(CONST_NUM),
            ExprKind::Bool(_) => Ok(Ty::Bool),
            ExprKind::Var(name) => self
                .env
                .get(name)
                .cloned()
                .ok_or_else(|| scope_error(e.span, format!("unbound identifier `{name}`"))),
            ExprKind::Index(a, i) => {
                let t = self.expr(a)?;
                self.constant_index(i)?;
                match t {
                    Ty::Array(elem) => Ok(*elem),
                    other => Err(type_error(
                        a.span,
                        format!("cannot index into a {}", other.name()),
                    )),
                }
            }
            ExprKind::Array(items) => {
                let mut acc: Option<Ty> = None;
                for item in items {
                    let t = self.expr(item)?;
                    if matches!(t, Ty::Array(_)) {
                        return Err(type_error(item.span, "nested arrays are not supported"));
                    }
                    acc = Some(match acc {
                        None => t,
                        Some(prev) => prev.merge(&t).ok_or_else(|| {
                            type_error(
                                item.span,
                                format!("array mixes {} and {} elements", prev.name(), t.name()),
                            )
                        })?,
                    });
                }
                acc.map(|t| Ty::Array(Box::new(t)))
                    .ok_or_else(|| type_error(e.span, "empty array literal"))
            }
            ExprKind::Call(name, args) => self.call(e.span, name, args),
            ExprKind::Reduce(_, xs) => match self.expr(xs)? {
                Ty::Array(t) if *t == Ty::Bool => Ok(Ty::Bool),
                other => Err(type_error(
                    xs.span,
                    format!("reduce needs an array of bools, got a {}", other.name()),
                )),
            },
            ExprKind::If(c, t, f) => {
                self.boolean(c)?;
                let (tt, ft) = (self.expr(t)?, self.expr(f)?);
                match tt.merge(&ft) {
                    Some(Ty::Array(_)) => Err(type_error(e.span, "branches cannot be arrays")),
                    Some(Ty::Num { .. }) => Ok(RANDOM_NUM),
                    Some(t) => Ok(t),
                    None => Err(type_error(
                        e.span,
                        format!("branches differ: {} and {}", tt.name(), ft.name()),
                    )),
                }
            }
            ExprKind::Unary(UnOp::Not, a) => {
                self.boolean(a)?;
                Ok(Ty::Bool)
            }
            ExprKind::Unary(UnOp::Neg, a) => Ok(Ty::Num {
                random: self.num(a)?,
            }),
            ExprKind::Binary(op, a, b) => match op {
                BinOp::Or | BinOp::And => {
                    self.boolean(a)?;
                    self.boolean(b)?;
                    Ok(Ty::Bool)
                }
                BinOp::Eq | BinOp::Ne => {
                    let (ta, tb) = (self.expr(a)?, self.expr(b)?);
                    match ta.merge(&tb) {
                        Some(Ty::Bool) | Some(Ty::Num { .. }) => Ok(Ty::Bool),
                        _ => Err(type_error(
                            e.span,
                            format!("cannot compare a {} with a {}", ta.name(), tb.name()),
                        )),
                    }
                }
                BinOp::Lt | BinOp::Le | BinOp::Gt | BinOp::Ge => {
                    self.num(a)?;
                    self.num(b)?;
                    Ok(Ty::Bool)
                }
                BinOp::Add | BinOp::Sub => {
                    let ra = self.num(a)?;
                    let rb = self.num(b)?;
                    Ok(Ty::Num { random: ra || rb })
                }
                BinOp::Mul | BinOp::Div => {
                    if self.num(a)? || self.num(b)? {
                        return Err(type_error(
                            e.span,
                            format!("`{}` is only defined on constants", op.symbol()),
                        ));
                    }
                    Ok(CONST_NUM)
                }
            },
        }
    }

    fn call(&mut self, span: Span, name: &str, args: &[Expr]) -> Result<Ty, Diagnostic> {
        if QueryKind::from_name(name).is_some() {
            return Err(type_error(
                span,
                format!("`{name}` may only appear in the return clause"),
            ));
        }
        if name == "flip" {
            if args.len() != 1 {
                return Err(type_error(span, "flip takes one argument"));
            }
            self.num(&args[0])?;
            return Ok(Ty::Bool);
        }
        if name == "bitblast" {
            let inner = match args {
                [inner] => inner,
                _ => return Err(type_error(span, "bitblast takes one distribution")),
            };
            return match &inner.kind {
                ExprKind::Call(n, a)
                    if distribution_signature(n).is_some() && n != "gaussian_around" =>
                {
                    for arg in a {
                        self.constant(arg, "bitblast parameter")?;
                    }
                    self.call(inner.span, n, a)
                }
                _ => Err(type_error(
                    inner.span,
                    "bitblast takes a distribution literal with constant parameters",
                )),
            };
        }
        let (arities, random_first) = distribution_signature(name)
            .ok_or_else(|| scope_error(span, format!("unknown function `{name}`")))?;
        if !arities.contains(&args.len()) {
            let want: Vec<String> = arities.iter().map(|a| a.to_string()).collect();
            return Err(type_error(
                span,
                format!(
                    "`{name}` takes {} arguments, got {}",
                    want.join(" or "),
                    args.len()
                ),
            ));
        }
        for (i, a) in args.iter().enumerate() {
            if i == 0 && random_first {
                self.num(a)?;
            } else {
                self.constant(a, &format!("parameter {} of `{name}`", i + 1))?;
            }
        }
        Ok(RANDOM_NUM)
    }
}

#[cfg(test)]
mod tests {
    use super::super::parse;
    use super::*;

    fn err(src: &str) -> Diagnostic {
        check(&parse(src).unwrap()).unwrap_err()
    }

    fn ok(src: &str) {
        check(&parse(src).unwrap()).unwrap();
    }

    #[test]
    fn example_programs_check() {
        ok("mu = normal(0, 1)\nobserve(normal(mu, 1), 8)\nobserve(normal(mu, 1), 9)\nreturn mu");
        ok("for i in 1:3\n o[i] = beta(1, 1)\n g[i] = flip(o[i])\nend\nd = reduce(|, g)\n\
            s = if d normal(80, 2) else normal(135, 2) end\nobserve(s, 79)\nreturn Expectation(o[1])");
        ok("m = uniform(-16, 16)\nfor x in [5, -5]\n y = if flip(2/3) normal(m, 1) else normal(m, 1) end\n observe(y, x)\nend\nreturn m");
    }

    #[test]
    fn unbound_identifier_is_named() {
        let e = err("x = flip(0.5)\nreturn pr(y)");
        assert_eq!(e.kind, DiagnosticKind::Scope);
        assert!(e.message.contains("`y`"));
        assert_eq!((e.line, e.col), (2, 11));
    }

    #[test]
    fn loop_variable_goes_out_of_scope() {
        assert_eq!(
            err("for i in 1:2 x = i end\nreturn i").kind,
            DiagnosticKind::Scope
        );
    }

    #[test]
    fn type_errors() {
        assert_eq!(
            err("x = flip(0.5) + 1\nreturn x").kind,
            DiagnosticKind::Type
        );
        assert_eq!(
            err("x = uniform(0, 1)\nobserve(x)\nreturn x").kind,
            DiagnosticKind::Type
        );
        assert_eq!(
            err("x = uniform(0, 1)\ny = x * 2\nreturn y").kind,
            DiagnosticKind::Type
        );
        assert_eq!(
            err("x = uniform(0, 1)\ny = uniform(x, 2)\nreturn y").kind,
            DiagnosticKind::Type
        );
        assert_eq!(
            err("x = if flip(0.5) 1 else true end\nreturn x").kind,
            DiagnosticKind::Type
        );
        assert_eq!(err("x = [1, 2]\nreturn x").kind, DiagnosticKind::Type);
        assert_eq!(
            err("x = uniform(0, 1)\nobserve(x, x)\nreturn x").kind,
            DiagnosticKind::Type
        );
    }

    #[test]
    fn unknown_function_is_a_scope_error() {
        assert_eq!(
            err("x = cauchy(0, 1)\nreturn x").kind,
            DiagnosticKind::Scope
        );
    }

    #[test]
    fn arity_is_checked() {
        let e = err("x = gaussian(0, 1, 2)\nreturn x");
        assert!(e.message.contains("2 or 4"));
    }

    #[test]
    fn query_names_only_in_return() {
        assert_eq!(
            err("x = pr(flip(0.5))\nreturn x").kind,
            DiagnosticKind::Type
        );
    }
}
