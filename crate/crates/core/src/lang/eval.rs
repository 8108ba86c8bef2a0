//! Evaluation: unrolls the program into one inference context and answers
//! the query.
//!
//! Numbers are kept symbolic (sums, differences and guarded choices over
//! compiled distributions) until something needs their bits. That lets an
//! observation `a + b == c` become `b == c − a`, which keeps the evidence
//! diagram close to the size of `a`'s diagram instead of the sum's.

use std::collections::{BTreeMap, HashMap};

use crate::bdd::{Bdd, LevelHint, NodeRef, VarLabel};
use crate::compiler::log2_exact;
use crate::context::InferenceContext;
use crate::error::{Error, Result};
use crate::fixedpoint::{self, BitVectorDist, FixedPointFormat, OverflowPolicy};
use crate::library::{self, DensityFn, PieceKind, PieceSpec};
use crate::query;

use super::ast::{BinOp, Expr, ExprKind, Iter, Program, QueryKind, Stmt, UnOp};
use super::output::{ConfigEcho, PosteriorEntry, QueryOutput, Stats};
use super::{Diagnostic, DiagnosticKind, Span};

/// Compilation settings shared by every literal in a program.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvalConfig {
    pub bits: u32,
    pub pieces: u32,
    pub piece_kind: PieceKind,
}

impl Default for EvalConfig {
    fn default() -> Self {
        EvalConfig {
            bits: 8,
            pieces: 16,
            piece_kind: PieceKind::Exponential,
        }
    }
}

impl EvalConfig {
    pub fn validate(&self) -> Result<()> {
        if self.bits == 0 || self.bits > 60 {
            return Err(Error::InvalidParameter(format!(
                "bits must be in 1..=60, got {}",
                self.bits
            )));
        }
        if !self.pieces.is_power_of_two() {
            return Err(Error::InvalidParameter(format!(
                "pieces must be a power of two, got {}",
                self.pieces
            )));
        }
        Ok(())
    }

    fn spec(&self, bits: u32) -> PieceSpec {
        PieceSpec::new(self.pieces, self.piece_kind).clamped(bits)
    }
}

#[derive(Debug, Clone)]
enum Num {
    Const(f64),
    Dist(BitVectorDist),
    Add(Box<Num>, Box<Num>),
    Sub(Box<Num>, Box<Num>),
    Mux(NodeRef, Box<Num>, Box<Num>),
}

#[derive(Debug, Clone)]
enum Value {
    Bool(NodeRef),
    Num(Num),
    Array(BTreeMap<i64, Value>),
}

pub fn evaluate(prog: &Program, config: &EvalConfig) -> Result<QueryOutput> {
    config.validate()?;
    let elapsed = stopwatch();
    let mut ev = Evaluator {
        ctx: InferenceContext::new(),
        config: *config,
        env: HashMap::new(),
    };
    for s in &prog.stmts {
        ev.stmt(s)?;
    }
    let q = &prog.query;
    let target = ev.expr(&q.target)?;
    let span = q.target.span;
    let mut out = QueryOutput {
        query: q.kind.name().to_string(),
        config: ConfigEcho {
            bits: config.bits,
            pieces: config.pieces,
            piece_kind: config.piece_kind,
        },
        posterior: None,
        expectation: None,
        variance: None,
        stats: None,
    };
    let formula_nodes = match target {
        Value::Bool(node) => {
            let p = ev.ctx.probability(ev.ctx.wrap(node))?;
            match q.kind {
                QueryKind::Pr => {
                    out.posterior = Some(vec![
                        PosteriorEntry {
                            value: 0.0,
                            prob: 1.0 - p,
                        },
                        PosteriorEntry {
                            value: 1.0,
                            prob: p,
                        },
                    ])
                }
                QueryKind::Expectation => out.expectation = Some(p),
                QueryKind::Variance => out.variance = Some(p * (1.0 - p)),
            }
            ev.ctx.bdd().node_count(&[node])
        }
        Value::Num(n) => {
            let x = ev.materialize(&n).map_err(|e| locate(e, span))?;
            match q.kind {
                QueryKind::Pr => {
                    let table = query::pr(&mut ev.ctx, &x)?;
                    out.posterior = Some(
                        table
                            .entries()
                            .iter()
                            .map(|&(value, prob)| PosteriorEntry { value, prob })
                            .collect(),
                    );
                }
                QueryKind::Expectation => {
                    out.expectation = Some(query::expectation(&mut ev.ctx, &x)?)
                }
                QueryKind::Variance => out.variance = Some(query::variance(&mut ev.ctx, &x)?),
            }
            ev.ctx.bdd().node_count(x.bits())
        }
        Value::Array(_) => {
            return Err(Diagnostic::at(DiagnosticKind::Type, span, "cannot query an array").into())
        }
    };
    out.stats = Some(Stats {
        flips: ev.ctx.flip_count(),
        nodes_formula: formula_nodes,
        nodes_evidence: ev.ctx.evidence_node_count(),
        evidence_wmc: ev.ctx.evidence_wmc()?,
        millis: elapsed(),
    });
    Ok(out)
}

/// Milliseconds since the call; always zero where no clock is available.
#[cfg(not(target_arch = "wasm32"))]
fn stopwatch() -> impl Fn() -> u64 {
    let start = std::time::Instant::now();
    move || start.elapsed().as_millis() as u64
}

#[cfg(target_arch = "wasm32")]
fn stopwatch() -> impl Fn() -> u64 {
    || 0
}

/// Attaches a source position to library errors. Zero evidence keeps its
/// own variant so callers can tell it apart.
fn locate(e: Error, span: Span) -> Error {
    match e {
        Error::ZeroEvidence | Error::Program(_) => e,
        other => Diagnostic::at(DiagnosticKind::Eval, span, other.to_string()).into(),
    }
}

fn eval_error(span: Span, msg: impl Into<String>) -> Error {
    Diagnostic::at(DiagnosticKind::Eval, span, msg).into()
}

/// Coarsest format holding `c` exactly.
fn const_format(c: f64) -> Result<FixedPointFormat> {
    if !c.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "{c} is not a finite number"
        )));
    }
    for frac in 0..=60u32 {
        if (c * (frac as f64).exp2()).fract() == 0.0 {
            return FixedPointFormat::covering(c, c, frac);
        }
    }
    Err(Error::Unrepresentable {
        value: c,
        reason: "not a dyadic rational with at most 60 fractional bits".into(),
    })
}

/// Format wide enough for both operands and their exact sum or difference.
fn arith_format(
    a: &FixedPointFormat,
    b: &FixedPointFormat,
    subtract: bool,
) -> Result<FixedPointFormat> {
    let frac = a.frac_bits.max(b.frac_bits);
    let (lo, hi) = if subtract {
        (a.min_value() - b.max_value(), a.max_value() - b.min_value())
    } else {
        (a.min_value() + b.min_value(), a.max_value() + b.max_value())
    };
    let lo = lo.min(a.min_value()).min(b.min_value());
    let hi = hi.max(a.max_value()).max(b.max_value());
    FixedPointFormat::covering(lo, hi, frac)
}

/// Smallest power of two not below `x`.
fn pow2_at_least(x: f64) -> f64 {
    x.max(f64::MIN_POSITIVE).log2().ceil().exp2()
}

/// A power-of-two window covering `[center − half, center + half]` whose
/// lower end sits on a multiple of half its width.
fn centered_range(center: f64, half: f64) -> (f64, f64) {
    let mut width = pow2_at_least(2.0 * half);
    loop {
        let h = width / 2.0;
        let lo = ((center - half) / h).floor() * h;
        if lo + width >= center + half {
            return (lo, lo + width);
        }
        width *= 2.0;
    }
}

struct Evaluator {
    ctx: InferenceContext,
    config: EvalConfig,
    env: HashMap<String, Value>,
}

impl Evaluator {
    fn stmt(&mut self, s: &Stmt) -> Result<()> {
        match s {
            Stmt::Assign {
                name,
                index,
                value,
                span,
            } => {
                let v = self.expr(value)?;
                match index {
                    None => {
                        self.env.insert(name.clone(), v);
                    }
                    Some(i) => {
                        let k = self.index(i)?;
                        let slot = self
                            .env
                            .entry(name.clone())
                            .or_insert_with(|| Value::Array(BTreeMap::new()));
                        match slot {
                            Value::Array(items) => {
                                items.insert(k, v);
                            }
                            _ => {
                                return Err(eval_error(*span, format!("`{name}` is not an array")))
                            }
                        }
                    }
                }
                Ok(())
            }
            Stmt::Observe {
                target,
                value,
                span,
            } => {
                let t = self.expr(target)?;
                let cond = match (t, value) {
                    (Value::Bool(node), None) => node,
                    (Value::Num(n), Some(v)) => {
                        let v = self.constant(v)?;
                        self.observe_value(&n, v).map_err(|e| locate(e, *span))?
                    }
                    _ => return Err(eval_error(*span, "observe on an array")),
                };
                self.ctx.observe(self.ctx.wrap(cond))
            }
            Stmt::For {
                var, iter, body, ..
            } => {
                let values: Vec<Value> = match iter {
                    Iter::Range(lo, hi) => (*lo..=*hi)
                        .map(|k| Value::Num(Num::Const(k as f64)))
                        .collect(),
                    Iter::Over(e) => match self.expr(e)? {
                        Value::Array(items) => items.into_values().collect(),
                        _ => return Err(eval_error(e.span, "loop over a non-array")),
                    },
                };
                let saved = self.env.remove(var);
                for v in values {
                    self.env.insert(var.clone(), v);
                    for s in body {
                        self.stmt(s)?;
                    }
                }
                self.env.remove(var);
                if let Some(v) = saved {
                    self.env.insert(var.clone(), v);
                }
                Ok(())
            }
        }
    }

    /// Conditions on the grid cell of `n` that contains `v`.
    fn observe_value(&mut self, n: &Num, v: f64) -> Result<NodeRef> {
        let f = self.format_of(n)?;
        let step = f.step();
        let snapped = (v / step).floor() * step;
        if !v.is_finite() || snapped < f.min_value() || snapped > f.max_value() {
            let nearest = v.clamp(f.min_value(), f.max_value());
            return Err(Error::Unrepresentable {
                value: v,
                reason: format!(
                    "outside the grid [{}, {}] of the observed expression; nearest grid value {} is {} away",
                    f.min_value(),
                    f.max_value(),
                    nearest,
                    (v - nearest).abs()
                ),
            });
        }
        self.eq_const(n, snapped)
    }

    fn constant(&mut self, e: &Expr) -> Result<f64> {
        match self.expr(e)? {
            Value::Num(Num::Const(c)) => Ok(c),
            _ => Err(eval_error(e.span, "expected a constant")),
        }
    }

    fn index(&mut self, e: &Expr) -> Result<i64> {
        let c = self.constant(e)?;
        if c.fract() != 0.0 || c.abs() > 1e15 {
            return Err(eval_error(
                e.span,
                format!("array index {c} is not an integer"),
            ));
        }
        Ok(c as i64)
    }

    fn expr(&mut self, e: &Expr) -> Result<Value> {
        match &e.kind {
            ExprKind::Num(v) => Ok(Value::Num(Num::Const(*v))),
            ExprKind::Bool(b) => Ok(Value::Bool(Bdd::constant(*b))),
            ExprKind::Var(name) => self.env.get(name).cloned().ok_or_else(|| {
                Diagnostic::at(
                    DiagnosticKind::Scope,
                    e.span,
                    format!("unbound identifier `{name}`"),
                )
                .into()
            }),
            ExprKind::Index(a, i) => {
                let arr = self.expr(a)?;
                let k = self.index(i)?;
                match arr {
                    Value::Array(items) => items
                        .get(&k)
                        .cloned()
                        .ok_or_else(|| eval_error(i.span, format!("index {k} is not set"))),
                    _ => Err(eval_error(a.span, "indexing a non-array")),
                }
            }
            ExprKind::Array(items) => {
                let mut out = BTreeMap::new();
                for (k, item) in items.iter().enumerate() {
                    out.insert(k as i64 + 1, self.expr(item)?);
                }
                Ok(Value::Array(out))
            }
            ExprKind::Call(name, args) => self.call(e.span, name, args),
            ExprKind::Reduce(op, xs) => {
                let items = match self.expr(xs)? {
                    Value::Array(items) => items,
                    _ => return Err(eval_error(xs.span, "reduce over a non-array")),
                };
                let mut nodes = Vec::with_capacity(items.len());
                for v in items.into_values() {
                    match v {
                        Value::Bool(n) => nodes.push(n),
                        _ => return Err(eval_error(xs.span, "reduce over non-bool elements")),
                    }
                }
                let bdd = self.ctx.bdd_mut();
                Ok(Value::Bool(match op {
                    BinOp::And => bdd.and_all(&nodes),
                    _ => bdd.or_all(&nodes),
                }))
            }
            ExprKind::If(c, t, f) => {
                let g = self.boolean(c)?;
                let (tv, fv) = (self.expr(t)?, self.expr(f)?);
                match (tv, fv) {
                    (Value::Bool(a), Value::Bool(b)) => {
                        Ok(Value::Bool(self.ctx.bdd_mut().ite(g, a, b)))
                    }
                    (Value::Num(a), Value::Num(b)) => Ok(Value::Num(if g.is_true() {
                        a
                    } else if g.is_false() {
                        b
                    } else {
                        Num::Mux(g, Box::new(a), Box::new(b))
                    })),
                    _ => Err(eval_error(e.span, "branches of different types")),
                }
            }
            ExprKind::Unary(UnOp::Not, a) => {
                let n = self.boolean(a)?;
                Ok(Value::Bool(self.ctx.bdd_mut().not(n)))
            }
            ExprKind::Unary(UnOp::Neg, a) => {
                let n = self.num(a)?;
                Ok(Value::Num(match n {
                    Num::Const(c) => Num::Const(-c),
                    other => Num::Sub(Box::new(Num::Const(0.0)), Box::new(other)),
                }))
            }
            ExprKind::Binary(op, a, b) => self.binary(e.span, *op, a, b),
        }
    }

    fn boolean(&mut self, e: &Expr) -> Result<NodeRef> {
        match self.expr(e)? {
            Value::Bool(n) => Ok(n),
            _ => Err(eval_error(e.span, "expected a bool")),
        }
    }

    fn num(&mut self, e: &Expr) -> Result<Num> {
        match self.expr(e)? {
            Value::Num(n) => Ok(n),
            _ => Err(eval_error(e.span, "expected a number")),
        }
    }

    fn binary(&mut self, span: Span, op: BinOp, a: &Expr, b: &Expr) -> Result<Value> {
        match op {
            BinOp::And | BinOp::Or => {
                let (x, y) = (self.boolean(a)?, self.boolean(b)?);
                let bdd = self.ctx.bdd_mut();
                Ok(Value::Bool(if op == BinOp::And {
                    bdd.and(x, y)
                } else {
                    bdd.or(x, y)
                }))
            }
            BinOp::Eq | BinOp::Ne => {
                let node = match (self.expr(a)?, self.expr(b)?) {
                    (Value::Bool(x), Value::Bool(y)) => self.ctx.bdd_mut().iff(x, y),
                    (Value::Num(x), Value::Num(y)) => {
                        self.eq_nums(&x, &y).map_err(|e| locate(e, span))?
                    }
                    _ => return Err(eval_error(span, "comparison of different types")),
                };
                Ok(Value::Bool(if op == BinOp::Ne {
                    self.ctx.bdd_mut().not(node)
                } else {
                    node
                }))
            }
            BinOp::Lt | BinOp::Le | BinOp::Gt | BinOp::Ge => {
                let (x, y) = (self.num(a)?, self.num(b)?);
                let (lhs, rhs, strict) = match op {
                    BinOp::Lt => (&x, &y, true),
                    BinOp::Le => (&x, &y, false),
                    BinOp::Gt => (&y, &x, true),
                    _ => (&y, &x, false),
                };
                let node = self.less(lhs, rhs, strict).map_err(|e| locate(e, span))?;
                Ok(Value::Bool(node))
            }
            BinOp::Add | BinOp::Sub | BinOp::Mul | BinOp::Div => {
                let (x, y) = (self.num(a)?, self.num(b)?);
                Ok(Value::Num(match (op, x, y) {
                    (BinOp::Add, Num::Const(p), Num::Const(q)) => Num::Const(p + q),
                    (BinOp::Sub, Num::Const(p), Num::Const(q)) => Num::Const(p - q),
                    (BinOp::Mul, Num::Const(p), Num::Const(q)) => Num::Const(p * q),
                    (BinOp::Div, Num::Const(p), Num::Const(q)) => {
                        if q == 0.0 {
                            return Err(eval_error(span, "division by zero"));
                        }
                        Num::Const(p / q)
                    }
                    (BinOp::Add, x, y) => Num::Add(Box::new(x), Box::new(y)),
                    (BinOp::Sub, x, y) => Num::Sub(Box::new(x), Box::new(y)),
                    _ => {
                        return Err(eval_error(
                            span,
                            format!("`{}` needs constant operands", op.symbol()),
                        ))
                    }
                }))
            }
        }
    }

    fn format_of(&self, n: &Num) -> Result<FixedPointFormat> {
        match n {
            Num::Const(c) => const_format(*c),
            Num::Dist(d) => Ok(d.format()),
            Num::Add(a, b) => arith_format(&self.format_of(a)?, &self.format_of(b)?, false),
            Num::Sub(a, b) => arith_format(&self.format_of(a)?, &self.format_of(b)?, true),
            Num::Mux(_, a, b) => FixedPointFormat::join(&self.format_of(a)?, &self.format_of(b)?),
        }
    }

    /// `n` encoded in `f`, which must hold every value of `n`.
    fn materialize_in(&mut self, n: &Num, f: FixedPointFormat) -> Result<BitVectorDist> {
        match n {
            Num::Const(c) => fixedpoint::constant(&self.ctx, *c, f),
            _ => {
                let x = self.materialize(n)?;
                fixedpoint::convert(&mut self.ctx, &x, f)
            }
        }
    }

    fn materialize(&mut self, n: &Num) -> Result<BitVectorDist> {
        match n {
            Num::Const(c) => fixedpoint::constant(&self.ctx, *c, const_format(*c)?),
            Num::Dist(d) => Ok(d.clone()),
            Num::Add(a, b) | Num::Sub(a, b) => {
                let f = self.format_of(n)?;
                let x = self.materialize_in(a, f)?;
                let y = self.materialize_in(b, f)?;
                // The format holds the exact result, so nothing can wrap.
                if matches!(n, Num::Add(..)) {
                    fixedpoint::add(&mut self.ctx, &x, &y, OverflowPolicy::Wraparound)
                } else {
                    fixedpoint::sub(&mut self.ctx, &x, &y, OverflowPolicy::Wraparound)
                }
            }
            Num::Mux(g, a, b) => {
                let f = self.format_of(n)?;
                let x = self.materialize_in(a, f)?;
                let y = self.materialize_in(b, f)?;
                let g = self.ctx.wrap(*g);
                fixedpoint::mux(&mut self.ctx, g, &x, &y)
            }
        }
    }

    /// `n == c` for an exact constant `c`.
    fn eq_const(&mut self, n: &Num, c: f64) -> Result<NodeRef> {
        match n {
            Num::Const(k) => Ok(Bdd::constant(*k == c)),
            Num::Dist(d) => {
                if d.format().raw_of(c).is_err() {
                    return Ok(NodeRef::FALSE);
                }
                let k = fixedpoint::constant(&self.ctx, c, d.format())?;
                Ok(fixedpoint::equals(&mut self.ctx, d, &k)?.node())
            }
            Num::Mux(g, a, b) => {
                let x = self.eq_const(a, c)?;
                let y = self.eq_const(b, c)?;
                Ok(self.ctx.bdd_mut().ite(*g, x, y))
            }
            Num::Add(a, b) => match (a.as_ref(), b.as_ref()) {
                (_, Num::Const(k)) => self.eq_const(a, c - k),
                (Num::Const(k), _) => self.eq_const(b, c - k),
                _ => {
                    let rest = Num::Sub(Box::new(Num::Const(c)), a.clone());
                    let w = self.materialize(&rest)?;
                    self.eq_dist(b, &w)
                }
            },
            Num::Sub(a, b) => match (a.as_ref(), b.as_ref()) {
                (_, Num::Const(k)) => self.eq_const(a, c + k),
                (Num::Const(k), _) => self.eq_const(b, k - c),
                _ => {
                    let rest = Num::Add(Box::new(Num::Const(c)), b.clone());
                    let w = self.materialize(&rest)?;
                    self.eq_dist(a, &w)
                }
            },
        }
    }

    /// `n == w`, pushing the comparison through guarded choices.
    fn eq_dist(&mut self, n: &Num, w: &BitVectorDist) -> Result<NodeRef> {
        match n {
            Num::Const(k) => self.eq_const(&Num::Dist(w.clone()), *k),
            Num::Mux(g, a, b) => {
                let x = self.eq_dist(a, w)?;
                let y = self.eq_dist(b, w)?;
                Ok(self.ctx.bdd_mut().ite(*g, x, y))
            }
            _ => {
                let x = self.materialize(n)?;
                let f = FixedPointFormat::join(&x.format(), &w.format())?;
                let x = fixedpoint::convert(&mut self.ctx, &x, f)?;
                let y = fixedpoint::convert(&mut self.ctx, w, f)?;
                Ok(fixedpoint::equals(&mut self.ctx, &x, &y)?.node())
            }
        }
    }

    fn eq_nums(&mut self, x: &Num, y: &Num) -> Result<NodeRef> {
        match (x, y) {
            (_, Num::Const(k)) => self.eq_const(x, *k),
            (Num::Const(k), _) => self.eq_const(y, *k),
            _ => {
                let w = self.materialize(y)?;
                self.eq_dist(x, &w)
            }
        }
    }

    fn less(&mut self, x: &Num, y: &Num, strict: bool) -> Result<NodeRef> {
        let f = FixedPointFormat::join(&self.format_of(x)?, &self.format_of(y)?)?;
        let a = self.materialize_in(x, f)?;
        let b = self.materialize_in(y, f)?;
        let r = if strict {
            fixedpoint::less_than(&mut self.ctx, &a, &b)?
        } else {
            fixedpoint::less_eq(&mut self.ctx, &a, &b)?
        };
        Ok(r.node())
    }

    /// `flip(x)` for a random `x`: `u < x` with a fresh uniform `u` on the
    /// grid of `x`, each bit of `u` placed right after the variables that
    /// decide the matching bit of `x`.
    fn random_flip(&mut self, x: &Num) -> Result<NodeRef> {
        let x = self.materialize(x)?;
        let xf = x.format();
        let frac = xf.frac_bits;
        if frac == 0 {
            let zero = Num::Const(0.0);
            return self.less(&zero, &Num::Dist(x), true);
        }
        let int_bits = xf.total_bits - frac;
        let mut anchor: Option<(u64, VarLabel)> = None;
        let mut seen = 0usize;
        let mut u_bits = Vec::with_capacity(frac as usize);
        for j in 0..frac as usize {
            let upto = int_bits as usize + j;
            for &b in &x.bits()[seen..=upto] {
                for v in self.ctx.bdd().support(b) {
                    let lv = self.ctx.bdd().level(v)?;
                    if anchor.is_none_or(|(l, _)| lv > l) {
                        anchor = Some((lv, v));
                    }
                }
            }
            seen = upto + 1;
            let hint = anchor.map_or(LevelHint::Append, |(_, v)| LevelHint::After(v));
            let u = self.ctx.flip_var(0.5, hint)?;
            anchor = Some((self.ctx.bdd().level(u)?, u));
            u_bits.push(self.ctx.bdd_mut().var(u));
        }
        let uf = FixedPointFormat::new(frac, frac, false)?;
        let u = Num::Dist(self.ctx.dist(u_bits, uf));
        self.less(&u, &Num::Dist(x), true)
    }

    fn call(&mut self, span: Span, name: &str, args: &[Expr]) -> Result<Value> {
        if name == "flip" {
            let node = match self.num(&args[0])? {
                Num::Const(theta) => self.ctx.flip(theta).map_err(|e| locate(e, span))?.node(),
                x => self.random_flip(&x).map_err(|e| locate(e, span))?,
            };
            return Ok(Value::Bool(node));
        }
        if name == "bitblast" {
            let (inner, inner_args) = match &args[0].kind {
                ExprKind::Call(n, a) => (n.as_str(), a),
                _ => {
                    return Err(eval_error(
                        args[0].span,
                        "bitblast takes a distribution literal",
                    ))
                }
            };
            let params = self.constants(inner_args)?;
            let bits = self.config.bits;
            let density = density_of(inner, &params).map_err(|e| locate(e, span))?;
            let spec = self.config.spec(bits);
            let d = library::bitblast(&mut self.ctx, bits, &density, spec)
                .map_err(|e| locate(e, span))?;
            return Ok(Value::Num(Num::Dist(d)));
        }
        if matches!(name, "gaussian" | "normal" | "gaussian_around") {
            let mean = self.num(&args[0])?;
            let rest = self.constants(&args[1..])?;
            let v = self
                .gaussian(name, mean, &rest)
                .map_err(|e| locate(e, span))?;
            return Ok(Value::Num(v));
        }
        let params = self.constants(args)?;
        let d = self.literal(name, &params).map_err(|e| locate(e, span))?;
        Ok(Value::Num(Num::Dist(d)))
    }

    fn constants(&mut self, args: &[Expr]) -> Result<Vec<f64>> {
        args.iter().map(|a| self.constant(a)).collect()
    }

    fn gaussian(&mut self, name: &str, mean: Num, rest: &[f64]) -> Result<Num> {
        let sigma = rest[0];
        let range = (rest.len() == 3).then(|| (rest[1], rest[2]));
        let bits = self.config.bits;
        match (name, &mean) {
            ("gaussian" | "normal", Num::Const(mu)) => {
                let (ll, ul) = match range {
                    Some(r) => r,
                    None => library::gaussian_range(*mu, sigma)?,
                };
                let spec = self.config.spec(bits);
                let d = library::gaussian_with(&mut self.ctx, bits, *mu, sigma, ll, ul, spec)?;
                Ok(Num::Dist(d))
            }
            _ => {
                // A zero-mean kernel on the mean's grid, shifted by the mean.
                let (ll, ul) = match range {
                    Some(r) => r,
                    None => library::gaussian_range(0.0, sigma)?,
                };
                let log_w = log2_exact(ul - ll)?;
                let noise_bits = match mean {
                    Num::Const(_) => bits as i64,
                    _ => self.format_of(&mean)?.frac_bits as i64 + log_w as i64,
                };
                if !(1..=60).contains(&noise_bits) {
                    return Err(Error::InvalidParameter(format!(
                        "noise range [{ll}, {ul}) on the mean's grid needs {noise_bits} bits"
                    )));
                }
                let nb = noise_bits as u32;
                let spec = self.config.spec(nb);
                let noise = library::gaussian_with(&mut self.ctx, nb, 0.0, sigma, ll, ul, spec)?;
                Ok(Num::Add(Box::new(mean), Box::new(Num::Dist(noise))))
            }
        }
    }

    fn literal(&mut self, name: &str, p: &[f64]) -> Result<BitVectorDist> {
        let bits = self.config.bits;
        let ctx = &mut self.ctx;
        let spec = self.config.spec(bits);
        match name {
            "uniform" => library::uniform(ctx, bits, p[0], p[1]),
            "polynomial" => library::polynomial(ctx, bits, nonneg_int(p[0], "degree")?, p[1], p[2]),
            "general_gamma" => {
                library::general_gamma(ctx, bits, nonneg_int(p[0], "alpha")?, p[1], p[2], p[3])
            }
            "exponential" => {
                let (ll, ul) = range_or(p, 1, || (0.0, pow2_at_least(16.0 / p[0])));
                library::exponential(ctx, bits, p[0], ll, ul)
            }
            "gamma" | "chi_squared" => {
                let (shape, rate, at) = if name == "gamma" {
                    (p[0], p[1], 2)
                } else {
                    (p[0] / 2.0, 0.5, 1)
                };
                let (ll, ul) = range_or(p, at, || {
                    (0.0, pow2_at_least((shape + 8.0 * shape.sqrt()) / rate))
                });
                if ll == 0.0 && shape.fract() == 0.0 && (1.0..=64.0).contains(&shape) {
                    library::gamma(ctx, bits, shape, rate, ll, ul)
                } else {
                    let density = library::gamma_density(shape, rate, ll, ul)?;
                    library::bitblast(ctx, bits, &density, spec)
                }
            }
            "laplace" => {
                let (mu, scale) = (p[0], p[1]);
                let (ll, ul) = range_or(p, 2, || centered_range(mu, 16.0 * scale));
                if laplace_is_exact(mu, ll, ul, bits) {
                    library::laplace(ctx, bits, mu, scale, ll, ul)
                } else {
                    let density = library::laplace_density(mu, scale, ll, ul)?;
                    library::bitblast(ctx, bits, &density, spec)
                }
            }
            "student_t" => {
                let (ll, ul) = range_or(p, 1, || centered_range(0.0, 32.0));
                let density = library::student_t_density(p[0], ll, ul)?;
                library::bitblast(ctx, bits, &density, spec)
            }
            "beta" => {
                let (a, b) = (p[0], p[1]);
                if a == 1.0 && b == 1.0 {
                    library::uniform(ctx, bits, 0.0, 1.0)
                } else if b == 1.0 && a.fract() == 0.0 && a >= 1.0 {
                    library::polynomial(ctx, bits, a as u32 - 1, 0.0, 1.0)
                } else if a == 1.0 && b.fract() == 0.0 && b >= 1.0 {
                    let x = library::polynomial(ctx, bits, b as u32 - 1, 0.0, 1.0)?;
                    fixedpoint::bitwise_not(ctx, &x)
                } else {
                    let density = library::beta_density(a, b)?;
                    library::bitblast(ctx, bits, &density, spec)
                }
            }
            other => Err(Error::InvalidParameter(format!(
                "unknown distribution `{other}`"
            ))),
        }
    }
}

fn nonneg_int(v: f64, what: &str) -> Result<u32> {
    if v.fract() == 0.0 && (0.0..=64.0).contains(&v) {
        Ok(v as u32)
    } else {
        Err(Error::InvalidParameter(format!(
            "{what} must be an integer in 0..=64, got {v}"
        )))
    }
}

fn range_or(p: &[f64], at: usize, default: impl FnOnce() -> (f64, f64)) -> (f64, f64) {
    if p.len() >= at + 2 {
        (p[at], p[at + 1])
    } else {
        default()
    }
}

/// True when the Laplace peak falls on a dyadic split of the range that
/// the grid can resolve, so every piece is an exact exponential.
fn laplace_is_exact(mu: f64, ll: f64, ul: f64, bits: u32) -> bool {
    if mu <= ll || mu >= ul {
        return true;
    }
    let width = ul - ll;
    (0..=bits).any(|k| ((mu - ll) / width * (k as f64).exp2()).fract() == 0.0)
}

/// The unnormalized density behind a distribution literal.
fn density_of(name: &str, p: &[f64]) -> Result<DensityFn> {
    let need = |n: usize| -> Result<()> {
        if p.len() >= n {
            Ok(())
        } else {
            Err(Error::InvalidParameter(format!(
                "`{name}` needs {n} parameters"
            )))
        }
    };
    match name {
        "uniform" => {
            need(2)?;
            DensityFn::new(|_| 1.0, p[0], p[1])
        }
        "gaussian" | "normal" => {
            need(2)?;
            let (ll, ul) = range_or(p, 2, || {
                library::gaussian_range(p[0], p[1]).unwrap_or((0.0, 0.0))
            });
            library::gaussian_density(p[0], p[1], ll, ul)
        }
        "exponential" => {
            need(1)?;
            let lambda = p[0];
            let (ll, ul) = range_or(p, 1, || (0.0, pow2_at_least(16.0 / lambda)));
            DensityFn::new(move |x| (-lambda * x).exp(), ll, ul)
        }
        "gamma" | "chi_squared" => {
            let (shape, rate, at) = if name == "gamma" {
                need(2)?;
                (p[0], p[1], 2)
            } else {
                need(1)?;
                (p[0] / 2.0, 0.5, 1)
            };
            let (ll, ul) = range_or(p, at, || {
                (0.0, pow2_at_least((shape + 8.0 * shape.sqrt()) / rate))
            });
            library::gamma_density(shape, rate, ll, ul)
        }
        "laplace" => {
            need(2)?;
            let (ll, ul) = range_or(p, 2, || centered_range(p[0], 16.0 * p[1]));
            library::laplace_density(p[0], p[1], ll, ul)
        }
        "student_t" => {
            need(1)?;
            let (ll, ul) = range_or(p, 1, || centered_range(0.0, 32.0));
            library::student_t_density(p[0], ll, ul)
        }
        "beta" => {
            need(2)?;
            library::beta_density(p[0], p[1])
        }
        "general_gamma" => {
            need(4)?;
            let (alpha, beta, ll, ul) = (nonneg_int(p[0], "alpha")? as i32, p[1], p[2], p[3]);
            DensityFn::new(
                move |x| ((x - ll) / (ul - ll)).powi(alpha) * (beta * x).exp(),
                ll,
                ul,
            )
        }
        "polynomial" => {
            need(3)?;
            let (n, ll) = (nonneg_int(p[0], "degree")? as i32, p[1]);
            DensityFn::new(move |x| (x - ll).powi(n), ll, p[2])
        }
        other => Err(Error::InvalidParameter(format!("`{other}` has no density"))),
    }
}
