//! Posterior queries over fixed-point distributions.
//!
//! Moments come from per-bit probabilities: by linearity,
//! `E[X] = Σ_i w_i Pr(b_i)` and `Var[X] = Σ_{k,l} w_k w_l (Pr(b_k ∧ b_l) − Pr(b_k)Pr(b_l))`
//! where `w_i` is the numeric weight of bit `i` (negative for a sign bit).
//! That costs `n` and `O(n²)` event queries instead of `2^n`.

use serde::Serialize;

use rustc_hash::FxHashMap;

use crate::bdd::{Bdd, NodeRef, WeightMap};
use crate::context::InferenceContext;
use crate::error::{Error, Result};
use crate::fixedpoint::BitVectorDist;

/// Posterior probabilities of every grid value with nonzero mass.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PosteriorTable {
    entries: Vec<(f64, f64)>,
    normalization: f64,
}

impl PosteriorTable {
    /// `(value, probability)` pairs with strictly increasing values.
    pub fn entries(&self) -> &[(f64, f64)] {
        &self.entries
    }

    /// Weighted count of the evidence the table was conditioned on.
    pub fn normalization(&self) -> f64 {
        self.normalization
    }

    pub fn prob(&self, value: f64) -> f64 {
        self.entries
            .binary_search_by(|(v, _)| v.total_cmp(&value))
            .map_or(0.0, |i| self.entries[i].1)
    }

    pub fn total(&self) -> f64 {
        self.entries.iter().map(|(_, p)| p).sum()
    }

    pub fn mean(&self) -> f64 {
        self.entries.iter().map(|(v, p)| v * p).sum()
    }

    pub fn variance(&self) -> f64 {
        let m = self.mean();
        self.entries
            .iter()
            .map(|(v, p)| (v - m) * (v - m) * p)
            .sum()
    }

    /// Mass on values in `[lo, hi]`.
    pub fn mass_between(&self, lo: f64, hi: f64) -> f64 {
        self.entries
            .iter()
            .filter(|(v, _)| *v >= lo && *v <= hi)
            .map(|(_, p)| p)
            .sum()
    }
}

/// Full posterior of `x`.
///
/// Walks the variable order top down, keeping a frontier of partial
/// evaluations: the current node of the evidence and of every bit of `x`,
/// with the probability of reaching them. A state is dropped as soon as its
/// evidence node is FALSE or its weight is exactly zero, and closed as soon
/// as every bit is decided, at which point the rest of the evidence is
/// counted in one pass.
pub fn pr(ctx: &mut InferenceContext, x: &BitVectorDist) -> Result<PosteriorTable> {
    ctx.check_dist(x)?;
    let (ev, z) = ctx.checked_evidence()?;
    let bdd = ctx.bdd();
    let weights = ctx.weights();
    let mut mass: FxHashMap<Vec<bool>, f64> = FxHashMap::default();
    let mut frontier: FxHashMap<Box<[NodeRef]>, f64> = FxHashMap::default();
    let start: Box<[NodeRef]> = std::iter::once(ev)
        .chain(x.bits().iter().copied())
        .collect();
    settle(bdd, weights, start, 1.0, &mut frontier, &mut mass)?;
    for var in bdd.var_order() {
        if frontier.is_empty() {
            break;
        }
        if !frontier
            .keys()
            .any(|s| s.iter().any(|&n| bdd.top_var(n) == Some(var)))
        {
            continue;
        }
        let theta = weights.get(var).ok_or(Error::MissingWeight(var))?;
        let mut next = FxHashMap::default();
        for (state, w) in frontier.drain() {
            if !state.iter().any(|&n| bdd.top_var(n) == Some(var)) {
                *next.entry(state).or_insert(0.0) += w;
                continue;
            }
            for (high, p) in [(true, theta), (false, 1.0 - theta)] {
                if p == 0.0 {
                    continue;
                }
                let moved: Box<[NodeRef]> = state
                    .iter()
                    .map(|&n| match bdd.top_var(n) {
                        Some(v) if v == var => {
                            if high {
                                bdd.high(n)
                            } else {
                                bdd.low(n)
                            }
                        }
                        _ => n,
                    })
                    .collect();
                settle(bdd, weights, moved, w * p, &mut next, &mut mass)?;
            }
        }
        frontier = next;
    }
    let fmt = x.format();
    let mut entries: Vec<(f64, f64)> = mass
        .into_iter()
        .filter(|&(_, m)| m > 0.0)
        .map(|(pattern, m)| (fmt.value_of_bits(&pattern), m / z))
        .collect();
    entries.sort_by(|a, b| a.0.total_cmp(&b.0));
    Ok(PosteriorTable {
        entries,
        normalization: z,
    })
}

/// Files a state into the frontier, or closes it once all bits are constant.
fn settle(
    bdd: &Bdd,
    weights: &WeightMap,
    state: Box<[NodeRef]>,
    w: f64,
    frontier: &mut FxHashMap<Box<[NodeRef]>, f64>,
    mass: &mut FxHashMap<Vec<bool>, f64>,
) -> Result<()> {
    if w == 0.0 || state[0].is_false() {
        return Ok(());
    }
    if state[1..].iter().all(|n| n.is_terminal()) {
        let rest = bdd.wmc(state[0], weights)?;
        if rest > 0.0 {
            let pattern = state[1..].iter().map(|n| n.is_true()).collect();
            *mass.entry(pattern).or_insert(0.0) += w * rest;
        }
    } else {
        *frontier.entry(state).or_insert(0.0) += w;
    }
    Ok(())
}

/// `E[x]` with exactly one event query per bit.
pub fn expectation(ctx: &mut InferenceContext, x: &BitVectorDist) -> Result<f64> {
    ctx.check_dist(x)?;
    let fmt = x.format();
    let mut e = 0.0;
    for (i, &bit) in x.bits().iter().enumerate() {
        e += fmt.bit_weight(i) * ctx.probability_node(bit)?;
    }
    Ok(e)
}

/// `Var[x]` from single and pairwise bit probabilities.
pub fn variance(ctx: &mut InferenceContext, x: &BitVectorDist) -> Result<f64> {
    ctx.check_dist(x)?;
    let fmt = x.format();
    let n = x.len();
    let single = x
        .bits()
        .iter()
        .map(|&b| ctx.probability_node(b))
        .collect::<Result<Vec<_>>>()?;
    let mut var = 0.0;
    for k in 0..n {
        let wk = fmt.bit_weight(k);
        var += wk * wk * (single[k] - single[k] * single[k]);
        for l in k + 1..n {
            let both = ctx.bdd_mut().and(x.bits()[k], x.bits()[l]);
            let pkl = ctx.probability_node(both)?;
            var += 2.0 * wk * fmt.bit_weight(l) * (pkl - single[k] * single[l]);
        }
    }
    Ok(var.max(0.0))
}
