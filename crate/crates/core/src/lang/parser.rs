//! Recursive-descent parser.

use super::ast::{BinOp, Expr, ExprKind, Iter, Program, Query, QueryKind, Stmt, UnOp};
use super::lexer::{tokenize, Tok};
use super::{Diagnostic, DiagnosticKind, Span};

pub fn parse(src: &str) -> Result<Program, Diagnostic> {
    let toks = tokenize(src)?;
    let mut p = Parser { toks, pos: 0 };
    p.program()
}

struct Parser {
    toks: Vec<(Tok, Span)>,
    pos: usize,
}

type PResult<T> = Result<T, Diagnostic>;

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].0
    }

    fn peek_at(&self, k: usize) -> &Tok {
        let i = (self.pos + k).min(self.toks.len() - 1);
        &self.toks[i].0
    }

    fn span(&self) -> Span {
        self.toks[self.pos].1
    }

    fn bump(&mut self) -> (Tok, Span) {
        let t = self.toks[self.pos].clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn error<T>(&self, message: String) -> PResult<T> {
        let span = self.span();
        Err(Diagnostic {
            kind: DiagnosticKind::Syntax,
            line: span.line,
            col: span.col,
            message,
        })
    }

    fn expect(&mut self, tok: Tok) -> PResult<Span> {
        if *self.peek() == tok {
            Ok(self.bump().1)
        } else {
            self.error(format!(
                "expected {}, found {}",
                tok.describe(),
                self.peek().describe()
            ))
        }
    }

    fn eat(&mut self, tok: &Tok) -> bool {
        if self.peek() == tok {
            self.bump();
            true
        } else {
            false
        }
    }

    fn ident(&mut self) -> PResult<(String, Span)> {
        match self.peek().clone() {
            Tok::Ident(name) => {
                let span = self.bump().1;
                Ok((name, span))
            }
            other => self.error(format!(
                "expected an identifier, found {}",
                other.describe()
            )),
        }
    }

    fn skip_separators(&mut self) {
        while self.eat(&Tok::Semi) {}
    }

    fn program(&mut self) -> PResult<Program> {
        let mut stmts = Vec::new();
        loop {
            self.skip_separators();
            match self.peek() {
                Tok::Return => break,
                Tok::Eof => return self.error("program must end with a `return` query".into()),
                _ => stmts.push(self.stmt()?),
            }
        }
        let span = self.expect(Tok::Return)?;
        let query = self.query(span)?;
        self.skip_separators();
        if *self.peek() != Tok::Eof {
            return self.error(format!(
                "unexpected {} after the return query",
                self.peek().describe()
            ));
        }
        Ok(Program { stmts, query })
    }

    fn query(&mut self, span: Span) -> PResult<Query> {
        if let Tok::Ident(name) = self.peek() {
            if let Some(kind) = QueryKind::from_name(name) {
                if *self.peek_at(1) == Tok::LParen {
                    self.bump();
                    self.bump();
                    let target = self.expr()?;
                    self.expect(Tok::RParen)?;
                    return Ok(Query { kind, target, span });
                }
            }
        }
        let target = self.expr()?;
        Ok(Query {
            kind: QueryKind::Pr,
            target,
            span,
        })
    }

    fn stmt(&mut self) -> PResult<Stmt> {
        let span = self.span();
        match self.peek().clone() {
            Tok::Observe => {
                self.bump();
                self.expect(Tok::LParen)?;
                let target = self.expr()?;
                let value = if self.eat(&Tok::Comma) {
                    Some(self.expr()?)
                } else {
                    None
                };
                self.expect(Tok::RParen)?;
                Ok(Stmt::Observe {
                    target,
                    value,
                    span,
                })
            }
            Tok::For => {
                self.bump();
                let (var, _) = self.ident()?;
                self.expect(Tok::In)?;
                let iter = self.iter()?;
                let mut body = Vec::new();
                loop {
                    self.skip_separators();
                    match self.peek() {
                        Tok::End => break,
                        Tok::Eof | Tok::Return => {
                            return self.error(format!(
                                "`for` loop opened at {}:{} is never closed with `end`",
                                span.line, span.col
                            ))
                        }
                        _ => body.push(self.stmt()?),
                    }
                }
                self.expect(Tok::End)?;
                Ok(Stmt::For {
                    var,
                    iter,
                    body,
                    span,
                })
            }
            Tok::Ident(_) => {
                let (name, _) = self.ident()?;
                let index = if self.eat(&Tok::LBracket) {
                    let i = self.expr()?;
                    self.expect(Tok::RBracket)?;
                    Some(i)
                } else {
                    None
                };
                self.expect(Tok::Assign)?;
                let value = self.expr()?;
                Ok(Stmt::Assign {
                    name,
                    index,
                    value,
                    span,
                })
            }
            other => self.error(format!("expected a statement, found {}", other.describe())),
        }
    }

    fn int_literal(&mut self) -> PResult<Option<i64>> {
        let negative = *self.peek() == Tok::Minus;
        let k = usize::from(negative);
        match (self.peek_at(k).clone(), self.peek_at(k + 1)) {
            (Tok::Num(v), Tok::Colon) => {
                if v.fract() != 0.0 || v.abs() > 1e15 {
                    return self.error(format!("loop bound {v} is not an integer"));
                }
                for _ in 0..=k {
                    self.bump();
                }
                Ok(Some(if negative { -(v as i64) } else { v as i64 }))
            }
            _ => Ok(None),
        }
    }

    fn iter(&mut self) -> PResult<Iter> {
        if let Some(lo) = self.int_literal()? {
            self.expect(Tok::Colon)?;
            let negative = self.eat(&Tok::Minus);
            return match self.peek().clone() {
                Tok::Num(v) if v.fract() == 0.0 && v.abs() <= 1e15 => {
                    self.bump();
                    let hi = if negative { -(v as i64) } else { v as i64 };
                    Ok(Iter::Range(lo, hi))
                }
                other => self.error(format!(
                    "loop bounds must be integer literals, found {}",
                    other.describe()
                )),
            };
        }
        Ok(Iter::Over(self.expr()?))
    }

    pub fn expr(&mut self) -> PResult<Expr> {
        self.binary(1)
    }

    fn binop(&self) -> Option<BinOp> {
        Some(match self.peek() {
            Tok::Pipe => BinOp::Or,
            Tok::Amp => BinOp::And,
            Tok::Lt => BinOp::Lt,
            Tok::Le => BinOp::Le,
            Tok::Gt => BinOp::Gt,
            Tok::Ge => BinOp::Ge,
            Tok::EqEq => BinOp::Eq,
            Tok::NotEq => BinOp::Ne,
            Tok::Plus => BinOp::Add,
            Tok::Minus => BinOp::Sub,
            Tok::Star => BinOp::Mul,
            Tok::Slash => BinOp::Div,
            _ => return None,
        })
    }

    fn binary(&mut self, min: u8) -> PResult<Expr> {
        let mut lhs = self.unary()?;
        while let Some(op) = self.binop() {
            let p = op.precedence();
            if p < min {
                break;
            }
            let span = self.bump().1;
            let rhs = self.binary(p + 1)?;
            lhs = Expr {
                kind: ExprKind::Binary(op, Box::new(lhs), Box::new(rhs)),
                span,
            };
            if op.is_comparison() && self.binop().is_some_and(|o| o.is_comparison()) {
                return self.error("comparisons do not chain; add parentheses".into());
            }
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> PResult<Expr> {
        let span = self.span();
        let op = match self.peek() {
            Tok::Bang => UnOp::Not,
            Tok::Minus => UnOp::Neg,
            _ => return self.postfix(),
        };
        self.bump();
        let operand = self.unary()?;
        Ok(Expr {
            kind: ExprKind::Unary(op, Box::new(operand)),
            span,
        })
    }

    fn postfix(&mut self) -> PResult<Expr> {
        let mut e = self.primary()?;
        while *self.peek() == Tok::LBracket {
            let span = self.bump().1;
            let i = self.expr()?;
            self.expect(Tok::RBracket)?;
            e = Expr {
                kind: ExprKind::Index(Box::new(e), Box::new(i)),
                span,
            };
        }
        Ok(e)
    }

    fn list(&mut self, close: Tok) -> PResult<Vec<Expr>> {
        let mut items = Vec::new();
        if self.eat(&close) {
            return Ok(items);
        }
        loop {
            items.push(self.expr()?);
            if self.eat(&Tok::Comma) {
                continue;
            }
            self.expect(close)?;
            return Ok(items);
        }
    }

    fn primary(&mut self) -> PResult<Expr> {
        let (tok, span) = self.bump();
        let kind = match tok {
            Tok::Num(v) => ExprKind::Num(v),
            Tok::True => ExprKind::Bool(true),
            Tok::False => ExprKind::Bool(false),
            Tok::LParen => {
                let e = self.expr()?;
                self.expect(Tok::RParen)?;
                return Ok(e);
            }
            Tok::LBracket => ExprKind::Array(self.list(Tok::RBracket)?),
            Tok::If => {
                let c = self.expr()?;
                self.eat(&Tok::Then);
                let t = self.expr()?;
                self.expect(Tok::Else)?;
                let e = self.expr()?;
                self.expect(Tok::End)?;
                ExprKind::If(Box::new(c), Box::new(t), Box::new(e))
            }
            Tok::Reduce => {
                self.expect(Tok::LParen)?;
                let op = match self.peek() {
                    Tok::Pipe => BinOp::Or,
                    Tok::Amp => BinOp::And,
                    other => {
                        return self.error(format!(
                            "reduce takes `|` or `&`, found {}",
                            other.describe()
                        ))
                    }
                };
                self.bump();
                self.expect(Tok::Comma)?;
                let xs = self.expr()?;
                self.expect(Tok::RParen)?;
                ExprKind::Reduce(op, Box::new(xs))
            }
            Tok::Ident(name) => {
                if self.eat(&Tok::LParen) {
                    ExprKind::Call(name, self.list(Tok::RParen)?)
                } else {
                    ExprKind::Var(name)
                }
            }
            other => {
                self.pos -= 1;
                return self.error(format!(
                    "expected an expression, found {}",
                    other.describe()
                ));
            }
        };
        Ok(Expr { kind, span })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn shape(src: &str) -> String {
        parse(src).unwrap().to_string()
    }

    #[test]
    fn single_binding_and_query() {
        let p = parse("x = flip(0.5)\nreturn pr(x)").unwrap();
        assert_eq!(p.stmts.len(), 1);
        assert_eq!(p.query.kind, QueryKind::Pr);
    }

    #[test]
    fn bare_return_is_pr() {
        let p = parse("mu = uniform(0, 1) return mu").unwrap();
        assert_eq!(p.query.kind, QueryKind::Pr);
    }

    #[test]
    fn capitalized_query_name() {
        let p = parse("x = uniform(0, 1)\nreturn Expectation(x)").unwrap();
        assert_eq!(p.query.kind, QueryKind::Expectation);
    }

    #[test]
    fn precedence() {
        assert_eq!(shape("return a | b & !c"), "return pr(a | b & !c)\n");
        assert_eq!(shape("return (a | b) & c"), "return pr((a | b) & c)\n");
        assert_eq!(
            shape("return a - (b - c) < d"),
            "return pr(a - (b - c) < d)\n"
        );
        assert_eq!(shape("return -x + 2 * 3"), "return pr(-x + 2 * 3)\n");
    }

    #[test]
    fn if_without_then() {
        let p = parse("y = if flip(2/3) normal(m, 1) else normal(n, 1) end\nreturn y").unwrap();
        match &p.stmts[0] {
            Stmt::Assign { value, .. } => assert!(matches!(value.kind, ExprKind::If(..))),
            _ => panic!("expected an assignment"),
        }
    }

    #[test]
    fn loops() {
        let src = "for i in 1:3\n g[i] = flip(0.5)\nend\nfor d in [5, -5] observe(g[1]) end\nreturn reduce(|, g)";
        let p = parse(src).unwrap();
        assert!(matches!(
            &p.stmts[0],
            Stmt::For {
                iter: Iter::Range(1, 3),
                ..
            }
        ));
        assert!(matches!(
            &p.stmts[1],
            Stmt::For {
                iter: Iter::Over(_),
                ..
            }
        ));
    }

    #[test]
    fn chained_comparison_is_rejected() {
        let err = parse("return a < b < c").unwrap_err();
        assert_eq!(err.kind, DiagnosticKind::Syntax);
    }

    #[test]
    fn missing_return() {
        let err = parse("x = flip(0.5)\n").unwrap_err();
        assert!(err.message.contains("return"));
        assert_eq!(err.line, 2);
    }

    #[test]
    fn unclosed_loop_is_located() {
        let err = parse("x = 1\nfor i in 1:2\n y = 2\nreturn x").unwrap_err();
        assert!(err.message.contains("2:1"), "{}", err.message);
    }

    #[test]
    fn non_literal_bound() {
        let err = parse("for i in 1:n x = 1 end return x").unwrap_err();
        assert!(err.message.contains("integer literals"));
    }

    #[test]
    fn print_parse_fixpoint() {
        let src = "mu = gaussian(0, 1, -16, 16) # prior\nobserve(gaussian_around(mu, 1, -16, 16), 8)\nfor i in -1:2 a[i] = if mu < 0 then 1 else 2 end end\nreturn variance(mu)";
        let p = parse(src).unwrap();
        let printed = p.to_string();
        assert_eq!(parse(&printed).unwrap(), p);
        assert_eq!(parse(&printed).unwrap().to_string(), printed);
    }
}
