//! Discrete probabilistic closures: weighted flips, a global evidence
//! formula, and conditional probability queries.

use std::sync::atomic::{AtomicU64, Ordering};

use crate::bdd::{Bdd, LevelHint, NodeRef, VarLabel, WeightMap};
use crate::error::{Error, Result};

static CONTEXT_IDS: AtomicU64 = AtomicU64::new(1);

/// A Boolean random variable: a formula over the flips of one context.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct BoolRv {
    pub(crate) node: NodeRef,
    pub(crate) ctx: u64,
}

impl BoolRv {
    pub fn node(&self) -> NodeRef {
        self.node
    }
}

/// Store, flip weights, evidence and bookkeeping for one program.
#[derive(Debug)]
pub struct InferenceContext {
    id: u64,
    bdd: Bdd,
    weights: WeightMap,
    flip_count: usize,
    evidence: NodeRef,
    pending: Vec<NodeRef>,
    overflow_unchecked: Vec<NodeRef>,
    queries: u64,
}

impl Default for InferenceContext {
    fn default() -> Self {
        Self::new()
    }
}

impl InferenceContext {
    pub fn new() -> Self {
        InferenceContext {
            id: CONTEXT_IDS.fetch_add(1, Ordering::Relaxed),
            bdd: Bdd::new(),
            weights: WeightMap::new(),
            flip_count: 0,
            evidence: NodeRef::TRUE,
            pending: Vec::new(),
            overflow_unchecked: Vec::new(),
            queries: 0,
        }
    }

    pub fn bdd(&self) -> &Bdd {
        &self.bdd
    }

    pub fn bdd_mut(&mut self) -> &mut Bdd {
        &mut self.bdd
    }

    pub fn weights(&self) -> &WeightMap {
        &self.weights
    }

    /// Number of flips created so far.
    pub fn flip_count(&self) -> usize {
        self.flip_count
    }

    /// Number of event probability queries answered so far.
    pub fn query_count(&self) -> u64 {
        self.queries
    }

    pub fn reset_query_count(&mut self) {
        self.queries = 0;
    }

    pub(crate) fn id(&self) -> u64 {
        self.id
    }

    pub(crate) fn wrap(&self, node: NodeRef) -> BoolRv {
        BoolRv { node, ctx: self.id }
    }

    pub(crate) fn check(&self, rv: BoolRv) -> Result<NodeRef> {
        if rv.ctx == self.id {
            Ok(rv.node)
        } else {
            Err(Error::ContextMismatch)
        }
    }

    pub fn constant(&self, value: bool) -> BoolRv {
        self.wrap(Bdd::constant(value))
    }

    /// A fresh Bernoulli variable that is true with probability `theta`.
    pub fn flip(&mut self, theta: f64) -> Result<BoolRv> {
        self.flip_at(theta, LevelHint::Append)
    }

    pub fn flip_at(&mut self, theta: f64, hint: LevelHint) -> Result<BoolRv> {
        let var = self.flip_var(theta, hint)?;
        let node = self.bdd.var(var);
        Ok(self.wrap(node))
    }

    /// Like [`flip_at`](Self::flip_at) but returns the variable itself.
    pub fn flip_var(&mut self, theta: f64, hint: LevelHint) -> Result<VarLabel> {
        if !(0.0..=1.0).contains(&theta) {
            return Err(Error::InvalidProbability(theta));
        }
        let var = self.bdd.fresh_var(hint)?;
        self.weights.set(var, theta)?;
        self.flip_count += 1;
        Ok(var)
    }

    pub fn not(&mut self, a: BoolRv) -> Result<BoolRv> {
        let a = self.check(a)?;
        let n = self.bdd.not(a);
        Ok(self.wrap(n))
    }

    pub fn and(&mut self, a: BoolRv, b: BoolRv) -> Result<BoolRv> {
        let (a, b) = (self.check(a)?, self.check(b)?);
        let n = self.bdd.and(a, b);
        Ok(self.wrap(n))
    }

    pub fn or(&mut self, a: BoolRv, b: BoolRv) -> Result<BoolRv> {
        let (a, b) = (self.check(a)?, self.check(b)?);
        let n = self.bdd.or(a, b);
        Ok(self.wrap(n))
    }

    pub fn xor(&mut self, a: BoolRv, b: BoolRv) -> Result<BoolRv> {
        let (a, b) = (self.check(a)?, self.check(b)?);
        let n = self.bdd.xor(a, b);
        Ok(self.wrap(n))
    }

    /// `if guard then t else e`.
    pub fn ite_bool(&mut self, guard: BoolRv, t: BoolRv, e: BoolRv) -> Result<BoolRv> {
        let (g, t, e) = (self.check(guard)?, self.check(t)?, self.check(e)?);
        let n = self.bdd.ite(g, t, e);
        Ok(self.wrap(n))
    }

    /// Conditions the program on `cond`. Contradictions surface at query time.
    pub fn observe(&mut self, cond: BoolRv) -> Result<()> {
        let node = self.check(cond)?;
        if !node.is_true() {
            self.pending.push(node);
        }
        Ok(())
    }

    /// Registers a formula that must have probability zero under the evidence.
    pub(crate) fn require_no_overflow(&mut self, formula: NodeRef) {
        if !formula.is_false() {
            self.overflow_unchecked.push(formula);
        }
    }

    /// The evidence formula with every observation so far conjoined.
    pub fn evidence(&mut self) -> BoolRv {
        let node = self.evidence_node();
        self.wrap(node)
    }

    pub(crate) fn evidence_node(&mut self) -> NodeRef {
        if !self.pending.is_empty() {
            // Later observations mention later (deeper) variables; folding from
            // the back keeps intermediate diagrams small.
            let pending = std::mem::take(&mut self.pending);
            let mut acc = NodeRef::TRUE;
            for cond in pending.into_iter().rev() {
                acc = self.bdd.and(cond, acc);
                if acc.is_false() {
                    break;
                }
            }
            self.evidence = self.bdd.and(self.evidence, acc);
        }
        self.evidence
    }

    /// Weighted count of the evidence; zero means contradictory observations.
    pub fn evidence_wmc(&mut self) -> Result<f64> {
        let ev = self.evidence_node();
        self.bdd.wmc(ev, &self.weights)
    }

    /// Evidence weight after validating it is nonzero and no registered
    /// overflow is reachable.
    pub(crate) fn checked_evidence(&mut self) -> Result<(NodeRef, f64)> {
        let ev = self.evidence_node();
        let z = self.bdd.wmc(ev, &self.weights)?;
        if z == 0.0 {
            return Err(Error::ZeroEvidence);
        }
        // Evidence only ever shrinks, so a formula verified once stays verified.
        while let Some(&ovf) = self.overflow_unchecked.last() {
            if self.bdd.wmc_and(ovf, ev, &self.weights)? > 0.0 {
                return Err(Error::Overflow);
            }
            self.overflow_unchecked.pop();
        }
        Ok((ev, z))
    }

    /// Conditional probability of `event` given the evidence.
    pub fn probability(&mut self, event: BoolRv) -> Result<f64> {
        let node = self.check(event)?;
        self.probability_node(node)
    }

    pub(crate) fn probability_node(&mut self, node: NodeRef) -> Result<f64> {
        let (ev, z) = self.checked_evidence()?;
        self.queries += 1;
        let p = self.bdd.wmc_and(node, ev, &self.weights)? / z;
        Ok(p.clamp(0.0, 1.0))
    }

    /// Unconditioned probability of a formula (ignores evidence).
    pub fn prior_probability(&self, event: BoolRv) -> Result<f64> {
        let node = self.check(event)?;
        self.bdd.wmc(node, &self.weights)
    }

    /// Internal node count of the evidence formula.
    pub fn evidence_node_count(&mut self) -> usize {
        let ev = self.evidence_node();
        self.bdd.node_count(&[ev])
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64) -> bool {
        (a - b).abs() < 1e-12
    }

    #[test]
    fn flip_probabilities() {
        let mut ctx = InferenceContext::new();
        let f = ctx.flip(0.5).unwrap();
        assert!(close(ctx.probability(f).unwrap(), 0.5));
        let z = ctx.flip(0.0).unwrap();
        assert_eq!(ctx.probability(z).unwrap(), 0.0);
        let a = ctx.flip(0.3).unwrap();
        let b = ctx.flip(0.3).unwrap();
        let both = ctx.and(a, b).unwrap();
        assert!(close(ctx.probability(both).unwrap(), 0.09));
        assert_eq!(ctx.flip_count(), 4);
    }

    #[test]
    fn invalid_theta_is_rejected() {
        let mut ctx = InferenceContext::new();
        assert_eq!(ctx.flip(1.5), Err(Error::InvalidProbability(1.5)));
        assert_eq!(ctx.flip_count(), 0);
    }

    #[test]
    fn observe_true_is_noop() {
        let mut ctx = InferenceContext::new();
        let f = ctx.flip(0.7).unwrap();
        let t = ctx.constant(true);
        ctx.observe(t).unwrap();
        assert!(close(ctx.probability(f).unwrap(), 0.7));
    }

    #[test]
    fn observing_itself_gives_certainty() {
        let mut ctx = InferenceContext::new();
        let f = ctx.flip(0.25).unwrap();
        ctx.observe(f).unwrap();
        assert!(close(ctx.probability(f).unwrap(), 1.0));
    }

    #[test]
    fn disjunctive_evidence() {
        let mut ctx = InferenceContext::new();
        let f1 = ctx.flip(0.5).unwrap();
        let f2 = ctx.flip(0.5).unwrap();
        let either = ctx.or(f1, f2).unwrap();
        ctx.observe(either).unwrap();
        assert!(close(ctx.probability(f1).unwrap(), 2.0 / 3.0));
    }

    #[test]
    fn contradiction_is_zero_evidence() {
        let mut ctx = InferenceContext::new();
        let f = ctx.flip(0.5).unwrap();
        let nf = ctx.not(f).unwrap();
        ctx.observe(f).unwrap();
        ctx.observe(nf).unwrap();
        let err = ctx.probability(f).unwrap_err();
        assert_eq!(err, Error::ZeroEvidence);
        assert!(err.to_string().contains("zero evidence"));
    }

    #[test]
    fn ite_cases() {
        let mut ctx = InferenceContext::new();
        let g = ctx.flip(0.2).unwrap();
        let x = ctx.flip(0.6).unwrap();
        let t = ctx.constant(true);
        let f = ctx.constant(false);
        assert_eq!(ctx.ite_bool(t, x, g).unwrap(), x);
        let sel = ctx.ite_bool(g, t, f).unwrap();
        assert!(close(ctx.probability(sel).unwrap(), 0.2));
        assert_eq!(ctx.ite_bool(g, x, x).unwrap(), x);
    }

    #[test]
    fn foreign_rv_is_rejected() {
        let mut a = InferenceContext::new();
        let mut b = InferenceContext::new();
        let f = a.flip(0.5).unwrap();
        assert_eq!(b.probability(f), Err(Error::ContextMismatch));
    }

    #[test]
    fn query_counter_counts_event_queries() {
        let mut ctx = InferenceContext::new();
        let f = ctx.flip(0.5).unwrap();
        for _ in 0..3 {
            ctx.probability(f).unwrap();
        }
        assert_eq!(ctx.query_count(), 3);
    }
}
