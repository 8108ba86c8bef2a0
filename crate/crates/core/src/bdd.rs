//! Reduced ordered binary decision diagrams.
//!
//! All diagrams live in one [`Bdd`] store. Nodes are hash-consed, so two
//! handles denote the same Boolean function iff they are equal. Variables
//! carry a *level* (a gap-indexed `u64`) that fixes the order; a new variable
//! can be inserted between two existing ones without touching any diagram,
//! because nodes refer to variables by id and only the relative order of
//! levels matters.

use std::cell::RefCell;
use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::sync::atomic::{AtomicU64, Ordering};

use rustc_hash::{FxHashMap, FxHashSet};

use crate::error::{Error, Result};

const LEVEL_GAP: u64 = 1 << 20;
const TERMINAL_VAR: u32 = u32::MAX;
/// Apply caches are dropped between top-level calls once they grow past this.
const CACHE_LIMIT: usize = 1 << 22;

/// A Boolean variable of the store.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct VarLabel(pub(crate) u32);

impl VarLabel {
    pub fn id(self) -> u32 {
        self.0
    }
}

/// Handle to a node of a [`Bdd`] store.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct NodeRef(pub(crate) u32);

impl NodeRef {
    pub const FALSE: NodeRef = NodeRef(0);
    pub const TRUE: NodeRef = NodeRef(1);

    pub fn is_terminal(self) -> bool {
        self.0 < 2
    }

    pub fn is_true(self) -> bool {
        self == Self::TRUE
    }

    pub fn is_false(self) -> bool {
        self == Self::FALSE
    }

    pub fn index(self) -> u32 {
        self.0
    }
}

/// Where to put a new variable in the order.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LevelHint {
    /// Below every existing variable.
    Append,
    /// Directly after the given variable, before its current successor.
    After(VarLabel),
    /// Directly before the given variable, after its current predecessor.
    Before(VarLabel),
    /// At an explicit level; fails if that level is taken.
    At(u64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
struct Node {
    var: u32,
    lo: u32,
    hi: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
enum BinOp {
    And,
    Or,
    Xor,
}

static WEIGHT_MAP_IDS: AtomicU64 = AtomicU64::new(1);

/// Per-variable probability of being true.
#[derive(Debug, Clone)]
pub struct WeightMap {
    theta: Vec<Option<f64>>,
    id: u64,
    epoch: u64,
}

impl Default for WeightMap {
    fn default() -> Self {
        Self::new()
    }
}

impl WeightMap {
    pub fn new() -> Self {
        WeightMap {
            theta: Vec::new(),
            id: WEIGHT_MAP_IDS.fetch_add(1, Ordering::Relaxed),
            epoch: 0,
        }
    }

    pub fn set(&mut self, var: VarLabel, theta: f64) -> Result<()> {
        if !(0.0..=1.0).contains(&theta) {
            return Err(Error::InvalidProbability(theta));
        }
        let i = var.0 as usize;
        if self.theta.len() <= i {
            self.theta.resize(i + 1, None);
        }
        if self.theta[i] != Some(theta) {
            self.theta[i] = Some(theta);
            self.epoch += 1;
        }
        Ok(())
    }

    pub fn get(&self, var: VarLabel) -> Option<f64> {
        self.theta.get(var.0 as usize).copied().flatten()
    }

    fn stamp(&self) -> (u64, u64) {
        (self.id, self.epoch)
    }
}

#[derive(Default)]
struct WmcCache {
    stamp: (u64, u64),
    values: FxHashMap<u32, f64>,
}

/// Shared node store.
///
/// Single-threaded: a store and every handle into it stay on one thread.
pub struct Bdd {
    nodes: Vec<Node>,
    unique: FxHashMap<Node, u32>,
    var_level: Vec<u64>,
    order: BTreeMap<u64, u32>,
    bin_cache: FxHashMap<(BinOp, u32, u32), u32>,
    not_cache: FxHashMap<u32, u32>,
    ite_cache: FxHashMap<(u32, u32, u32), u32>,
    wmc_cache: RefCell<WmcCache>,
}

impl Default for Bdd {
    fn default() -> Self {
        Self::new()
    }
}

impl std::fmt::Debug for Bdd {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Bdd")
            .field("nodes", &self.nodes.len())
            .field("vars", &self.var_level.len())
            .finish()
    }
}

impl Bdd {
    pub fn new() -> Self {
        let terminal = |lo| Node {
            var: TERMINAL_VAR,
            lo,
            hi: lo,
        };
        Bdd {
            nodes: vec![terminal(0), terminal(1)],
            unique: FxHashMap::default(),
            var_level: Vec::new(),
            order: BTreeMap::new(),
            bin_cache: FxHashMap::default(),
            not_cache: FxHashMap::default(),
            ite_cache: FxHashMap::default(),
            wmc_cache: RefCell::new(WmcCache::default()),
        }
    }

    pub fn num_vars(&self) -> usize {
        self.var_level.len()
    }

    /// Total number of nodes ever allocated, terminals included.
    pub fn allocated_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn level(&self, var: VarLabel) -> Result<u64> {
        self.var_level
            .get(var.0 as usize)
            .copied()
            .ok_or(Error::UnknownVar(var))
    }

    /// Variables sorted by level, top first.
    pub fn var_order(&self) -> Vec<VarLabel> {
        self.order.values().map(|&v| VarLabel(v)).collect()
    }

    pub fn fresh_var(&mut self, hint: LevelHint) -> Result<VarLabel> {
        let level = match hint {
            LevelHint::Append => match self.order.keys().next_back() {
                None => 0,
                Some(&last) => {
                    if last > u64::MAX - LEVEL_GAP {
                        self.renumber();
                    }
                    self.order.keys().next_back().unwrap() + LEVEL_GAP
                }
            },
            LevelHint::At(level) => {
                if self.order.contains_key(&level) {
                    return Err(Error::LevelCollision(level));
                }
                level
            }
            LevelHint::After(v) => {
                self.level(v)?;
                self.level_after(v)
            }
            LevelHint::Before(v) => {
                self.level(v)?;
                self.level_before(v)
            }
        };
        let id = self.var_level.len() as u32;
        self.var_level.push(level);
        self.order.insert(level, id);
        Ok(VarLabel(id))
    }

    fn level_after(&mut self, v: VarLabel) -> u64 {
        for _ in 0..2 {
            let lv = self.var_level[v.0 as usize];
            match self.order.range(lv + 1..).next() {
                None => {
                    if lv <= u64::MAX - LEVEL_GAP {
                        return lv + LEVEL_GAP;
                    }
                }
                Some((&next, _)) => {
                    if next - lv >= 2 {
                        return lv + (next - lv) / 2;
                    }
                }
            }
            self.renumber();
        }
        unreachable!("renumbering always opens a gap")
    }

    fn level_before(&mut self, v: VarLabel) -> u64 {
        for _ in 0..2 {
            let lv = self.var_level[v.0 as usize];
            match self.order.range(..lv).next_back() {
                None => {
                    if lv >= 1 {
                        return lv / 2;
                    }
                }
                Some((&prev, _)) => {
                    if lv - prev >= 2 {
                        return prev + (lv - prev) / 2;
                    }
                }
            }
            self.renumber();
        }
        unreachable!("renumbering always opens a gap")
    }

    /// Respaces all levels evenly, keeping their relative order.
    fn renumber(&mut self) {
        let vars: Vec<u32> = self.order.values().copied().collect();
        self.order.clear();
        for (i, v) in vars.into_iter().enumerate() {
            let level = (i as u64 + 1) * LEVEL_GAP;
            self.var_level[v as usize] = level;
            self.order.insert(level, v);
        }
    }

    #[inline]
    fn node_level(&self, n: u32) -> u64 {
        let var = self.nodes[n as usize].var;
        if var == TERMINAL_VAR {
            u64::MAX
        } else {
            self.var_level[var as usize]
        }
    }

    fn mk(&mut self, var: u32, lo: u32, hi: u32) -> u32 {
        if lo == hi {
            return lo;
        }
        let node = Node { var, lo, hi };
        if let Some(&id) = self.unique.get(&node) {
            return id;
        }
        let id = self.nodes.len() as u32;
        self.nodes.push(node);
        self.unique.insert(node, id);
        id
    }

    pub fn literal(&mut self, var: VarLabel, positive: bool) -> NodeRef {
        if positive {
            NodeRef(self.mk(var.0, 0, 1))
        } else {
            NodeRef(self.mk(var.0, 1, 0))
        }
    }

    pub fn var(&mut self, var: VarLabel) -> NodeRef {
        self.literal(var, true)
    }

    pub fn constant(value: bool) -> NodeRef {
        if value {
            NodeRef::TRUE
        } else {
            NodeRef::FALSE
        }
    }

    /// Top variable of a non-terminal node.
    pub fn top_var(&self, n: NodeRef) -> Option<VarLabel> {
        let var = self.nodes[n.0 as usize].var;
        (var != TERMINAL_VAR).then_some(VarLabel(var))
    }

    pub fn high(&self, n: NodeRef) -> NodeRef {
        NodeRef(self.nodes[n.0 as usize].hi)
    }

    pub fn low(&self, n: NodeRef) -> NodeRef {
        NodeRef(self.nodes[n.0 as usize].lo)
    }

    fn housekeeping(&mut self) {
        if self.bin_cache.len() > CACHE_LIMIT {
            self.bin_cache = FxHashMap::default();
        }
        if self.ite_cache.len() > CACHE_LIMIT {
            self.ite_cache = FxHashMap::default();
        }
        if self.not_cache.len() > CACHE_LIMIT {
            self.not_cache = FxHashMap::default();
        }
    }

    /// Drops every memo table. Diagrams are unaffected.
    pub fn clear_caches(&mut self) {
        self.bin_cache = FxHashMap::default();
        self.ite_cache = FxHashMap::default();
        self.not_cache = FxHashMap::default();
        *self.wmc_cache.borrow_mut() = WmcCache::default();
    }

    pub fn not(&mut self, a: NodeRef) -> NodeRef {
        self.housekeeping();
        NodeRef(self.not_rec(a.0))
    }

    fn not_rec(&mut self, a: u32) -> u32 {
        if a < 2 {
            return 1 - a;
        }
        if let Some(&r) = self.not_cache.get(&a) {
            return r;
        }
        let Node { var, lo, hi } = self.nodes[a as usize];
        let lo = self.not_rec(lo);
        let hi = self.not_rec(hi);
        let r = self.mk(var, lo, hi);
        self.not_cache.insert(a, r);
        r
    }

    pub fn and(&mut self, a: NodeRef, b: NodeRef) -> NodeRef {
        self.housekeeping();
        NodeRef(self.bin_rec(BinOp::And, a.0, b.0))
    }

    pub fn or(&mut self, a: NodeRef, b: NodeRef) -> NodeRef {
        self.housekeeping();
        NodeRef(self.bin_rec(BinOp::Or, a.0, b.0))
    }

    pub fn xor(&mut self, a: NodeRef, b: NodeRef) -> NodeRef {
        self.housekeeping();
        NodeRef(self.bin_rec(BinOp::Xor, a.0, b.0))
    }

    pub fn iff(&mut self, a: NodeRef, b: NodeRef) -> NodeRef {
        let x = self.xor(a, b);
        self.not(x)
    }

    pub fn implies(&mut self, a: NodeRef, b: NodeRef) -> NodeRef {
        let na = self.not(a);
        self.or(na, b)
    }

    fn bin_rec(&mut self, op: BinOp, a: u32, b: u32) -> u32 {
        match op {
            BinOp::And => {
                if a == 0 || b == 0 {
                    return 0;
                }
                if a == 1 {
                    return b;
                }
                if b == 1 || a == b {
                    return a;
                }
            }
            BinOp::Or => {
                if a == 1 || b == 1 {
                    return 1;
                }
                if a == 0 {
                    return b;
                }
                if b == 0 || a == b {
                    return a;
                }
            }
            BinOp::Xor => {
                if a == b {
                    return 0;
                }
                if a == 0 {
                    return b;
                }
                if b == 0 {
                    return a;
                }
                if a == 1 {
                    return self.not_rec(b);
                }
                if b == 1 {
                    return self.not_rec(a);
                }
            }
        }
        let (a, b) = if a <= b { (a, b) } else { (b, a) };
        let key = (op, a, b);
        if let Some(&r) = self.bin_cache.get(&key) {
            return r;
        }
        let la = self.node_level(a);
        let lb = self.node_level(b);
        let na = self.nodes[a as usize];
        let nb = self.nodes[b as usize];
        let (var, a0, a1, b0, b1) = if la == lb {
            (na.var, na.lo, na.hi, nb.lo, nb.hi)
        } else if la < lb {
            (na.var, na.lo, na.hi, b, b)
        } else {
            (nb.var, a, a, nb.lo, nb.hi)
        };
        let lo = self.bin_rec(op, a0, b0);
        let hi = self.bin_rec(op, a1, b1);
        let r = self.mk(var, lo, hi);
        self.bin_cache.insert(key, r);
        r
    }

    /// If-then-else: `(f ∧ g) ∨ (¬f ∧ h)`.
    pub fn ite(&mut self, f: NodeRef, g: NodeRef, h: NodeRef) -> NodeRef {
        self.housekeeping();
        NodeRef(self.ite_rec(f.0, g.0, h.0))
    }

    fn ite_rec(&mut self, f: u32, g: u32, h: u32) -> u32 {
        if f == 1 {
            return g;
        }
        if f == 0 {
            return h;
        }
        if g == h {
            return g;
        }
        if g == 1 && h == 0 {
            return f;
        }
        if g == 0 && h == 1 {
            return self.not_rec(f);
        }
        if g == 1 {
            return self.bin_rec(BinOp::Or, f, h);
        }
        if h == 0 {
            return self.bin_rec(BinOp::And, f, g);
        }
        let key = (f, g, h);
        if let Some(&r) = self.ite_cache.get(&key) {
            return r;
        }
        let top = self
            .node_level(f)
            .min(self.node_level(g))
            .min(self.node_level(h));
        let split = |bdd: &Self, n: u32| -> (u32, u32) {
            if bdd.node_level(n) == top {
                let node = bdd.nodes[n as usize];
                (node.lo, node.hi)
            } else {
                (n, n)
            }
        };
        let (f0, f1) = split(self, f);
        let (g0, g1) = split(self, g);
        let (h0, h1) = split(self, h);
        let var = self.order[&top];
        let lo = self.ite_rec(f0, g0, h0);
        let hi = self.ite_rec(f1, g1, h1);
        let r = self.mk(var, lo, hi);
        self.ite_cache.insert(key, r);
        r
    }

    /// Conjunction of many operands, combined as a balanced tree.
    pub fn and_all(&mut self, items: &[NodeRef]) -> NodeRef {
        match items.len() {
            0 => NodeRef::TRUE,
            1 => items[0],
            n => {
                let (l, r) = items.split_at(n / 2);
                let l = self.and_all(l);
                if l.is_false() {
                    return l;
                }
                let r = self.and_all(r);
                self.and(l, r)
            }
        }
    }

    pub fn or_all(&mut self, items: &[NodeRef]) -> NodeRef {
        match items.len() {
            0 => NodeRef::FALSE,
            1 => items[0],
            n => {
                let (l, r) = items.split_at(n / 2);
                let l = self.or_all(l);
                if l.is_true() {
                    return l;
                }
                let r = self.or_all(r);
                self.or(l, r)
            }
        }
    }

    /// Evaluates the function under a total assignment (indexed by var id).
    pub fn eval(&self, n: NodeRef, assignment: &[bool]) -> bool {
        let mut cur = n.0;
        while cur >= 2 {
            let node = self.nodes[cur as usize];
            cur = if assignment[node.var as usize] {
                node.hi
            } else {
                node.lo
            };
        }
        cur == 1
    }

    /// Variables appearing in the diagram.
    pub fn support(&self, n: NodeRef) -> Vec<VarLabel> {
        let mut seen = FxHashSet::default();
        let mut vars = FxHashSet::default();
        let mut stack = vec![n.0];
        while let Some(cur) = stack.pop() {
            if cur < 2 || !seen.insert(cur) {
                continue;
            }
            let node = self.nodes[cur as usize];
            vars.insert(node.var);
            stack.push(node.lo);
            stack.push(node.hi);
        }
        let mut out: Vec<VarLabel> = vars.into_iter().map(VarLabel).collect();
        out.sort_by_key(|v| self.var_level[v.0 as usize]);
        out
    }

    /// Number of distinct internal nodes reachable from any root.
    pub fn node_count(&self, roots: &[NodeRef]) -> usize {
        let mut seen = FxHashSet::default();
        let mut stack: Vec<u32> = roots.iter().map(|r| r.0).collect();
        while let Some(cur) = stack.pop() {
            if cur < 2 || !seen.insert(cur) {
                continue;
            }
            let node = self.nodes[cur as usize];
            stack.push(node.lo);
            stack.push(node.hi);
        }
        seen.len()
    }

    /// Weighted model count: the probability that the function is true when
    /// every variable is an independent coin with the given bias.
    pub fn wmc(&self, n: NodeRef, weights: &WeightMap) -> Result<f64> {
        let mut cache = self.wmc_cache.borrow_mut();
        if cache.stamp != weights.stamp() {
            cache.stamp = weights.stamp();
            cache.values.clear();
        }
        self.wmc_rec(n.0, weights, &mut cache.values)
    }

    fn wmc_rec(&self, n: u32, weights: &WeightMap, memo: &mut FxHashMap<u32, f64>) -> Result<f64> {
        if n < 2 {
            return Ok(n as f64);
        }
        if let Some(&v) = memo.get(&n) {
            return Ok(v);
        }
        let node = self.nodes[n as usize];
        let var = VarLabel(node.var);
        let theta = weights.get(var).ok_or(Error::MissingWeight(var))?;
        let lo = self.wmc_rec(node.lo, weights, memo)?;
        let hi = self.wmc_rec(node.hi, weights, memo)?;
        let v = theta * hi + (1.0 - theta) * lo;
        memo.insert(n, v);
        Ok(v)
    }

    /// Weighted count of `f ∧ g` without building the conjunction.
    pub fn wmc_and(&self, f: NodeRef, g: NodeRef, weights: &WeightMap) -> Result<f64> {
        let mut cache = self.wmc_cache.borrow_mut();
        if cache.stamp != weights.stamp() {
            cache.stamp = weights.stamp();
            cache.values.clear();
        }
        let mut pairs = FxHashMap::default();
        self.wmc_and_rec(f.0, g.0, weights, &mut cache.values, &mut pairs)
    }

    fn wmc_and_rec(
        &self,
        a: u32,
        b: u32,
        weights: &WeightMap,
        single: &mut FxHashMap<u32, f64>,
        pairs: &mut FxHashMap<(u32, u32), f64>,
    ) -> Result<f64> {
        if a == 0 || b == 0 {
            return Ok(0.0);
        }
        if a == 1 || a == b {
            return self.wmc_rec(b, weights, single);
        }
        if b == 1 {
            return self.wmc_rec(a, weights, single);
        }
        let key = if a <= b { (a, b) } else { (b, a) };
        if let Some(&v) = pairs.get(&key) {
            return Ok(v);
        }
        let (la, lb) = (self.node_level(a), self.node_level(b));
        let (na, nb) = (self.nodes[a as usize], self.nodes[b as usize]);
        let (var, a0, a1, b0, b1) = if la == lb {
            (na.var, na.lo, na.hi, nb.lo, nb.hi)
        } else if la < lb {
            (na.var, na.lo, na.hi, b, b)
        } else {
            (nb.var, a, a, nb.lo, nb.hi)
        };
        let var = VarLabel(var);
        let theta = weights.get(var).ok_or(Error::MissingWeight(var))?;
        let lo = self.wmc_and_rec(a0, b0, weights, single, pairs)?;
        let hi = self.wmc_and_rec(a1, b1, weights, single, pairs)?;
        let v = theta * hi + (1.0 - theta) * lo;
        pairs.insert(key, v);
        Ok(v)
    }

    /// Graphviz rendering of the diagrams under `roots`.
    pub fn to_dot(&self, roots: &[(String, NodeRef)]) -> String {
        let mut out = String::from("digraph bdd {\n");
        out.push_str("  n0 [shape=box,label=\"0\"];\n  n1 [shape=box,label=\"1\"];\n");
        let mut seen = FxHashSet::default();
        let mut stack: Vec<u32> = roots.iter().map(|(_, r)| r.0).collect();
        let mut internal = Vec::new();
        while let Some(cur) = stack.pop() {
            if cur < 2 || !seen.insert(cur) {
                continue;
            }
            internal.push(cur);
            let node = self.nodes[cur as usize];
            stack.push(node.lo);
            stack.push(node.hi);
        }
        internal.sort_unstable();
        for cur in internal {
            let node = self.nodes[cur as usize];
            let _ = writeln!(out, "  n{cur} [shape=circle,label=\"x{}\"];", node.var);
            let _ = writeln!(out, "  n{cur} -> n{} [style=solid];", node.hi);
            let _ = writeln!(out, "  n{cur} -> n{} [style=dashed];", node.lo);
        }
        for (name, root) in roots {
            let _ = writeln!(out, "  \"{name}\" [shape=plaintext];");
            let _ = writeln!(out, "  \"{name}\" -> n{};", root.0);
        }
        out.push_str("}\n");
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn vars(bdd: &mut Bdd, n: usize) -> Vec<VarLabel> {
        (0..n)
            .map(|_| bdd.fresh_var(LevelHint::Append).unwrap())
            .collect()
    }

    #[test]
    fn fused_conjunction_count_matches_built_conjunction() {
        let mut bdd = Bdd::new();
        let vs = vars(&mut bdd, 4);
        let mut w = WeightMap::new();
        for (i, &v) in vs.iter().enumerate() {
            w.set(v, 0.1 + 0.2 * i as f64).unwrap();
        }
        let x: Vec<NodeRef> = vs.iter().map(|&v| bdd.var(v)).collect();
        let f = bdd.or(x[0], x[2]);
        let g0 = bdd.xor(x[1], x[3]);
        let g = bdd.or(g0, x[0]);
        let both = bdd.and(f, g);
        let expect = bdd.wmc(both, &w).unwrap();
        assert!((bdd.wmc_and(f, g, &w).unwrap() - expect).abs() < 1e-15);
        assert_eq!(bdd.wmc_and(f, NodeRef::FALSE, &w).unwrap(), 0.0);
    }

    #[test]
    fn first_var_is_at_level_zero() {
        let mut bdd = Bdd::new();
        let v = bdd.fresh_var(LevelHint::Append).unwrap();
        assert_eq!(bdd.level(v).unwrap(), 0);
    }

    #[test]
    fn sequential_vars_have_increasing_levels() {
        let mut bdd = Bdd::new();
        let vs = vars(&mut bdd, 3);
        let levels: Vec<u64> = vs.iter().map(|&v| bdd.level(v).unwrap()).collect();
        assert!(levels.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn insertion_between_existing_levels() {
        let mut bdd = Bdd::new();
        let vs = vars(&mut bdd, 2);
        let mid = bdd.fresh_var(LevelHint::After(vs[0])).unwrap();
        let (l0, lm, l1) = (
            bdd.level(vs[0]).unwrap(),
            bdd.level(mid).unwrap(),
            bdd.level(vs[1]).unwrap(),
        );
        assert!(l0 < lm && lm < l1);
        let top = bdd.fresh_var(LevelHint::Before(vs[0])).unwrap();
        assert_eq!(bdd.var_order(), vec![top, vs[0], mid, vs[1]]);
    }

    #[test]
    fn explicit_level_collision_is_rejected() {
        let mut bdd = Bdd::new();
        let v = bdd.fresh_var(LevelHint::Append).unwrap();
        let lv = bdd.level(v).unwrap();
        assert_eq!(
            bdd.fresh_var(LevelHint::At(lv)),
            Err(Error::LevelCollision(lv))
        );
        assert!(bdd.fresh_var(LevelHint::At(lv + 7)).is_ok());
    }

    #[test]
    fn gap_exhaustion_renumbers_without_breaking_diagrams() {
        let mut bdd = Bdd::new();
        let vs = vars(&mut bdd, 2);
        let a = bdd.var(vs[0]);
        let b = bdd.var(vs[1]);
        let f = bdd.and(a, b);
        let mut after = vs[0];
        for _ in 0..80 {
            after = bdd.fresh_var(LevelHint::After(after)).unwrap();
        }
        let order = bdd.var_order();
        assert_eq!(order.first(), Some(&vs[0]));
        assert_eq!(order.last(), Some(&vs[1]));
        let c = bdd.var(after);
        let g = bdd.and(f, c);
        let mut w = WeightMap::new();
        for v in bdd.var_order() {
            w.set(v, 0.5).unwrap();
        }
        assert!((bdd.wmc(g, &w).unwrap() - 0.125).abs() < 1e-15);
    }

    #[test]
    fn identities() {
        let mut bdd = Bdd::new();
        let v = vars(&mut bdd, 2);
        let x = bdd.var(v[0]);
        let y = bdd.var(v[1]);
        let n = bdd.xor(x, y);
        assert_eq!(bdd.and(NodeRef::TRUE, n), n);
        let nn = bdd.not(n);
        assert_eq!(bdd.not(nn), n);
        assert_eq!(bdd.ite(x, NodeRef::TRUE, NodeRef::FALSE), x);
        assert_eq!(bdd.node_count(&[x]), 1);
        assert_eq!(bdd.node_count(&[NodeRef::TRUE]), 0);
    }

    #[test]
    fn wmc_examples() {
        let mut bdd = Bdd::new();
        let v = vars(&mut bdd, 2);
        let mut w = WeightMap::new();
        w.set(v[0], 0.5).unwrap();
        w.set(v[1], 0.25).unwrap();
        assert_eq!(bdd.wmc(NodeRef::TRUE, &w).unwrap(), 1.0);
        let x = bdd.var(v[0]);
        let y = bdd.var(v[1]);
        let both = bdd.and(x, y);
        assert!((bdd.wmc(both, &w).unwrap() - 0.125).abs() < 1e-15);
        let mut w2 = WeightMap::new();
        w2.set(v[0], 0.3).unwrap();
        assert!((bdd.wmc(x, &w2).unwrap() - 0.3).abs() < 1e-15);
    }

    #[test]
    fn wmc_missing_weight_names_variable() {
        let mut bdd = Bdd::new();
        let v = vars(&mut bdd, 2);
        let x = bdd.var(v[0]);
        let y = bdd.var(v[1]);
        let f = bdd.or(x, y);
        let mut w = WeightMap::new();
        w.set(v[0], 0.5).unwrap();
        assert_eq!(bdd.wmc(f, &w), Err(Error::MissingWeight(v[1])));
    }

    #[test]
    fn weight_changes_invalidate_wmc_cache() {
        let mut bdd = Bdd::new();
        let v = vars(&mut bdd, 1);
        let x = bdd.var(v[0]);
        let mut w = WeightMap::new();
        w.set(v[0], 0.2).unwrap();
        assert!((bdd.wmc(x, &w).unwrap() - 0.2).abs() < 1e-15);
        w.set(v[0], 0.9).unwrap();
        assert!((bdd.wmc(x, &w).unwrap() - 0.9).abs() < 1e-15);
    }

    #[test]
    fn dot_export_mentions_every_node() {
        let mut bdd = Bdd::new();
        let v = vars(&mut bdd, 2);
        let x = bdd.var(v[0]);
        let y = bdd.var(v[1]);
        let f = bdd.and(x, y);
        let dot = bdd.to_dot(&[("f".into(), f)]);
        assert!(dot.contains("x0") && dot.contains("x1") && dot.contains("\"f\""));
    }
}
