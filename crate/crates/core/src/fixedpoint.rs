//! Fixed-point numbers whose bits are Boolean formulas.
//!
//! A [`BitVectorDist`] is a tuple of formulas read most-significant first.
//! Under any assignment to the context's flips it denotes one representable
//! number, so the flip weights induce a distribution over the grid.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::bdd::{Bdd, NodeRef};
use crate::context::{BoolRv, InferenceContext};
use crate::error::{Error, Result};

/// Widest supported bit-vector; raw values are carried in `i128`.
pub const MAX_BITS: u32 = 120;

/// Width, binary point and signedness of a fixed-point number.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct FixedPointFormat {
    pub total_bits: u32,
    pub frac_bits: u32,
    pub signed: bool,
}

impl fmt::Display for FixedPointFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let kind = if self.signed { "signed" } else { "unsigned" };
        write!(f, "{kind}<{}.{}>", self.total_bits, self.frac_bits)
    }
}

impl FixedPointFormat {
    pub fn new(total_bits: u32, frac_bits: u32, signed: bool) -> Result<Self> {
        if total_bits == 0 || total_bits > MAX_BITS {
            return Err(Error::InvalidFormat(format!(
                "total_bits must be in 1..={MAX_BITS}, got {total_bits}"
            )));
        }
        if frac_bits > total_bits {
            return Err(Error::InvalidFormat(format!(
                "frac_bits {frac_bits} exceeds total_bits {total_bits}"
            )));
        }
        Ok(FixedPointFormat {
            total_bits,
            frac_bits,
            signed,
        })
    }

    /// `b` fractional bits over `[0, 1)`.
    pub fn unit(bits: u32) -> Result<Self> {
        Self::new(bits, bits, false)
    }

    /// Bits left of the binary point, sign bit included.
    pub fn int_bits(&self) -> u32 {
        self.total_bits - self.frac_bits
    }

    pub fn step(&self) -> f64 {
        (-(self.frac_bits as f64)).exp2()
    }

    pub fn min_raw(&self) -> i128 {
        if self.signed {
            -(1i128 << (self.total_bits - 1))
        } else {
            0
        }
    }

    pub fn max_raw(&self) -> i128 {
        if self.signed {
            (1i128 << (self.total_bits - 1)) - 1
        } else {
            (1i128 << self.total_bits) - 1
        }
    }

    pub fn min_value(&self) -> f64 {
        self.value_of_raw(self.min_raw())
    }

    pub fn max_value(&self) -> f64 {
        self.value_of_raw(self.max_raw())
    }

    pub fn value_of_raw(&self, raw: i128) -> f64 {
        raw as f64 * self.step()
    }

    /// Raw integer of an exactly representable value.
    pub fn raw_of(&self, value: f64) -> Result<i128> {
        let scaled = value * (self.frac_bits as f64).exp2();
        if !scaled.is_finite() || scaled.fract() != 0.0 {
            return Err(Error::Unrepresentable {
                value,
                reason: format!("not a multiple of the grid step {} of {self}", self.step()),
            });
        }
        let raw = scaled as i128;
        if raw < self.min_raw() || raw > self.max_raw() {
            return Err(Error::Unrepresentable {
                value,
                reason: format!(
                    "outside the range [{}, {}] of {self}",
                    self.min_value(),
                    self.max_value()
                ),
            });
        }
        Ok(raw)
    }

    /// Numeric weight of bit `i` (0 = most significant); negative for a sign bit.
    pub fn bit_weight(&self, i: usize) -> f64 {
        let exp = self.total_bits as i32 - 1 - i as i32 - self.frac_bits as i32;
        let w = (exp as f64).exp2();
        if self.signed && i == 0 {
            -w
        } else {
            w
        }
    }

    /// Value denoted by a concrete bit pattern (most significant first).
    pub fn value_of_bits(&self, bits: &[bool]) -> f64 {
        self.value_of_raw(self.raw_of_bits(bits))
    }

    pub fn raw_of_bits(&self, bits: &[bool]) -> i128 {
        let mut raw: i128 = 0;
        for &b in bits {
            raw = (raw << 1) | b as i128;
        }
        if self.signed && bits.first() == Some(&true) {
            raw -= 1i128 << bits.len();
        }
        raw
    }

    /// Bit pattern of a raw value, most significant first.
    pub fn bits_of_raw(&self, raw: i128) -> Vec<bool> {
        let n = self.total_bits;
        (0..n).rev().map(|i| (raw >> i) & 1 == 1).collect()
    }

    /// Smallest format with `frac_bits` fractional bits covering `[lo, hi]`.
    pub fn covering(lo: f64, hi: f64, frac_bits: u32) -> Result<Self> {
        let scale = (frac_bits as f64).exp2();
        let (rlo, rhi) = ((lo * scale).floor(), (hi * scale).ceil());
        if !rlo.is_finite() || !rhi.is_finite() {
            return Err(Error::InvalidFormat(format!(
                "range [{lo}, {hi}] is not finite"
            )));
        }
        let (rlo, rhi) = (rlo as i128, rhi as i128);
        let signed = rlo < 0;
        let mut total = frac_bits.max(1);
        loop {
            let f = FixedPointFormat {
                total_bits: total,
                frac_bits,
                signed,
            };
            if total >= frac_bits && f.min_raw() <= rlo && f.max_raw() >= rhi {
                return Self::new(total, frac_bits, signed);
            }
            total += 1;
            if total > MAX_BITS {
                return Err(Error::InvalidFormat(format!(
                    "range [{lo}, {hi}] needs more than {MAX_BITS} bits"
                )));
            }
        }
    }

    /// Smallest format that represents every value of both inputs exactly.
    pub fn join(a: &Self, b: &Self) -> Result<Self> {
        let frac = a.frac_bits.max(b.frac_bits);
        let lo = a.min_value().min(b.min_value());
        let hi = a.max_value().max(b.max_value());
        Self::covering(lo, hi, frac)
    }
}

/// Binary expansion `(v1, ..., vb)` of `r = Σ v_i 2^-i`.
pub fn binarize(r: f64, b: u32) -> Result<Vec<bool>> {
    let fmt = FixedPointFormat::unit(b)?;
    let raw = fmt.raw_of(r)?;
    Ok(fmt.bits_of_raw(raw))
}

/// What happens to the carry out of the top bit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OverflowPolicy {
    /// Any overflow with nonzero posterior probability fails the next query.
    #[default]
    Checked,
    /// The carry is discarded (arithmetic modulo the range).
    Wraparound,
}

/// A distribution over fixed-point numbers.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct BitVectorDist {
    pub(crate) bits: Vec<NodeRef>,
    pub(crate) format: FixedPointFormat,
    pub(crate) ctx: u64,
}

impl BitVectorDist {
    pub fn format(&self) -> FixedPointFormat {
        self.format
    }

    /// Bit formulas, most significant first.
    pub fn bits(&self) -> &[NodeRef] {
        &self.bits
    }

    pub fn bit(&self, i: usize) -> BoolRv {
        BoolRv {
            node: self.bits[i],
            ctx: self.ctx,
        }
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    /// The constant value, when every bit is a constant formula.
    pub fn as_constant(&self) -> Option<f64> {
        let mut pattern = Vec::with_capacity(self.bits.len());
        for b in &self.bits {
            if b.is_terminal() {
                pattern.push(b.is_true());
            } else {
                return None;
            }
        }
        Some(self.format.value_of_bits(&pattern))
    }

    /// Same bits reinterpreted with another format of identical width.
    pub fn reinterpret(&self, format: FixedPointFormat) -> Result<Self> {
        if format.total_bits as usize != self.bits.len() {
            return Err(Error::FormatMismatch(
                self.format.to_string(),
                format.to_string(),
            ));
        }
        Ok(BitVectorDist {
            bits: self.bits.clone(),
            format,
            ctx: self.ctx,
        })
    }

    /// Builds a vector from raw formulas (most significant first).
    pub fn from_bits(
        ctx: &InferenceContext,
        bits: Vec<BoolRv>,
        format: FixedPointFormat,
    ) -> Result<Self> {
        if bits.len() != format.total_bits as usize {
            return Err(Error::InvalidFormat(format!(
                "{} bits supplied for {format}",
                bits.len()
            )));
        }
        let bits = bits
            .into_iter()
            .map(|b| ctx.check(b))
            .collect::<Result<Vec<_>>>()?;
        Ok(BitVectorDist {
            bits,
            format,
            ctx: ctx.id(),
        })
    }
}

impl InferenceContext {
    pub(crate) fn check_dist(&self, x: &BitVectorDist) -> Result<()> {
        if x.ctx == self.id() {
            Ok(())
        } else {
            Err(Error::ContextMismatch)
        }
    }

    pub(crate) fn dist(&self, bits: Vec<NodeRef>, format: FixedPointFormat) -> BitVectorDist {
        debug_assert_eq!(bits.len(), format.total_bits as usize);
        BitVectorDist {
            bits,
            format,
            ctx: self.id(),
        }
    }
}

fn same_format(x: &BitVectorDist, y: &BitVectorDist) -> Result<()> {
    if x.format == y.format {
        Ok(())
    } else {
        Err(Error::FormatMismatch(
            x.format.to_string(),
            y.format.to_string(),
        ))
    }
}

/// A point mass at `value`.
pub fn constant(
    ctx: &InferenceContext,
    value: f64,
    format: FixedPointFormat,
) -> Result<BitVectorDist> {
    let raw = format.raw_of(value)?;
    let bits = format
        .bits_of_raw(raw)
        .into_iter()
        .map(|b| if b { NodeRef::TRUE } else { NodeRef::FALSE })
        .collect();
    Ok(ctx.dist(bits, format))
}

fn sign_flipped(x: &BitVectorDist, ctx: &mut InferenceContext) -> Vec<NodeRef> {
    let mut bits = x.bits.clone();
    if x.format.signed {
        bits[0] = ctx.bdd_mut().not(bits[0]);
    }
    bits
}

/// `value(x) < value(y)`.
pub fn less_than(
    ctx: &mut InferenceContext,
    x: &BitVectorDist,
    y: &BitVectorDist,
) -> Result<BoolRv> {
    ctx.check_dist(x)?;
    ctx.check_dist(y)?;
    same_format(x, y)?;
    let xs = sign_flipped(x, ctx);
    let ys = sign_flipped(y, ctx);
    let bdd = ctx.bdd_mut();
    let mut lt = NodeRef::FALSE;
    for (&xi, &yi) in xs.iter().zip(&ys).rev() {
        // lt := (¬x_i ∧ y_i) ∨ ((x_i ↔ y_i) ∧ lt)
        let same = bdd.iff(xi, yi);
        let nx = bdd.not(xi);
        let below = bdd.and(nx, yi);
        let keep = bdd.and(same, lt);
        lt = bdd.or(below, keep);
    }
    Ok(ctx.wrap(lt))
}

/// `value(x) <= value(y)`.
pub fn less_eq(ctx: &mut InferenceContext, x: &BitVectorDist, y: &BitVectorDist) -> Result<BoolRv> {
    let gt = less_than(ctx, y, x)?;
    ctx.not(gt)
}

/// `value(x) == value(y)`.
pub fn equals(ctx: &mut InferenceContext, x: &BitVectorDist, y: &BitVectorDist) -> Result<BoolRv> {
    ctx.check_dist(x)?;
    ctx.check_dist(y)?;
    same_format(x, y)?;
    let bdd = ctx.bdd_mut();
    let mut eq = NodeRef::TRUE;
    for (&xi, &yi) in x.bits.iter().zip(&y.bits).rev() {
        let same = bdd.iff(xi, yi);
        eq = bdd.and(same, eq);
        if eq.is_false() {
            break;
        }
    }
    Ok(ctx.wrap(eq))
}

/// Sum and overflow formula of a ripple-carry adder (`x + y + carry_in`,
/// with `y` complemented when `subtract`).
fn ripple(
    ctx: &mut InferenceContext,
    x: &BitVectorDist,
    y: &BitVectorDist,
    subtract: bool,
) -> (Vec<NodeRef>, NodeRef) {
    let n = x.bits.len();
    let bdd = ctx.bdd_mut();
    let ys: Vec<NodeRef> = if subtract {
        y.bits.iter().map(|&b| bdd.not(b)).collect()
    } else {
        y.bits.clone()
    };
    let mut carry = Bdd::constant(subtract);
    let mut out = vec![NodeRef::FALSE; n];
    for i in (0..n).rev() {
        let (a, b) = (x.bits[i], ys[i]);
        let axb = bdd.xor(a, b);
        out[i] = bdd.xor(axb, carry);
        let both = bdd.and(a, b);
        let prop = bdd.and(axb, carry);
        carry = bdd.or(both, prop);
    }
    let ovf = if x.format.signed {
        // Operands of equal sign whose result sign differs.
        let (sa, sb) = (x.bits[0], ys[0]);
        let same = bdd.iff(sa, sb);
        let flipped = bdd.xor(out[0], sa);
        bdd.and(same, flipped)
    } else if subtract {
        bdd.not(carry)
    } else {
        carry
    };
    (out, ovf)
}

/// Sum together with its overflow formula; no policy is applied.
pub fn add_with_overflow(
    ctx: &mut InferenceContext,
    x: &BitVectorDist,
    y: &BitVectorDist,
) -> Result<(BitVectorDist, BoolRv)> {
    ctx.check_dist(x)?;
    ctx.check_dist(y)?;
    same_format(x, y)?;
    let (bits, ovf) = ripple(ctx, x, y, false);
    Ok((ctx.dist(bits, x.format), ctx.wrap(ovf)))
}

/// Difference together with its overflow formula; no policy is applied.
pub fn sub_with_overflow(
    ctx: &mut InferenceContext,
    x: &BitVectorDist,
    y: &BitVectorDist,
) -> Result<(BitVectorDist, BoolRv)> {
    ctx.check_dist(x)?;
    ctx.check_dist(y)?;
    same_format(x, y)?;
    let (bits, ovf) = ripple(ctx, x, y, true);
    Ok((ctx.dist(bits, x.format), ctx.wrap(ovf)))
}

pub fn add(
    ctx: &mut InferenceContext,
    x: &BitVectorDist,
    y: &BitVectorDist,
    policy: OverflowPolicy,
) -> Result<BitVectorDist> {
    let (sum, ovf) = add_with_overflow(ctx, x, y)?;
    if policy == OverflowPolicy::Checked {
        ctx.require_no_overflow(ovf.node);
    }
    Ok(sum)
}

pub fn sub(
    ctx: &mut InferenceContext,
    x: &BitVectorDist,
    y: &BitVectorDist,
    policy: OverflowPolicy,
) -> Result<BitVectorDist> {
    let (diff, ovf) = sub_with_overflow(ctx, x, y)?;
    if policy == OverflowPolicy::Checked {
        ctx.require_no_overflow(ovf.node);
    }
    Ok(diff)
}

/// Bitwise `if guard then t else e`.
pub fn mux(
    ctx: &mut InferenceContext,
    guard: BoolRv,
    t: &BitVectorDist,
    e: &BitVectorDist,
) -> Result<BitVectorDist> {
    let g = ctx.check(guard)?;
    ctx.check_dist(t)?;
    ctx.check_dist(e)?;
    same_format(t, e)?;
    let bdd = ctx.bdd_mut();
    let bits = t
        .bits
        .iter()
        .zip(&e.bits)
        .map(|(&a, &b)| bdd.ite(g, a, b))
        .collect();
    Ok(ctx.dist(bits, t.format))
}

/// Complements every bit. On an unsigned vector this maps `v` to
/// `max_value − v`, reflecting the distribution.
pub fn bitwise_not(ctx: &mut InferenceContext, x: &BitVectorDist) -> Result<BitVectorDist> {
    ctx.check_dist(x)?;
    let bdd = ctx.bdd_mut();
    let bits = x.bits.iter().map(|&b| bdd.not(b)).collect();
    Ok(ctx.dist(bits, x.format))
}

/// Re-encodes `x` in `format` without changing any value.
///
/// Fails with `RangeOverflow` unless every assignment's value is exactly
/// representable in `format`; the check is structural, so bits that are
/// constant after simplification are what count.
pub fn convert(
    ctx: &mut InferenceContext,
    x: &BitVectorDist,
    format: FixedPointFormat,
) -> Result<BitVectorDist> {
    ctx.check_dist(x)?;
    if x.format == format {
        return Ok(x.clone());
    }
    let src = x.format;
    // Least significant first, aligned to the target binary point.
    let mut lsb: Vec<NodeRef> = x.bits.iter().rev().copied().collect();
    if format.frac_bits >= src.frac_bits {
        let pad = (format.frac_bits - src.frac_bits) as usize;
        lsb.splice(0..0, std::iter::repeat_n(NodeRef::FALSE, pad));
    } else {
        let drop = (src.frac_bits - format.frac_bits) as usize;
        if lsb[..drop].iter().any(|b| !b.is_false()) {
            return Err(Error::RangeOverflow(format!(
                "{src} has fractional bits that {format} cannot hold"
            )));
        }
        lsb.drain(0..drop);
    }
    let ext = if src.signed {
        *lsb.last().unwrap()
    } else {
        NodeRef::FALSE
    };
    let at = |p: usize| if p < lsb.len() { lsb[p] } else { ext };
    let n = format.total_bits as usize;
    let out: Vec<NodeRef> = (0..n).map(at).collect();
    let target = if format.signed {
        out[n - 1]
    } else {
        NodeRef::FALSE
    };
    let bdd = ctx.bdd_mut();
    let mut bad = NodeRef::FALSE;
    for p in n..=lsb.len() {
        let diff = bdd.xor(at(p), target);
        bad = bdd.or(bad, diff);
    }
    if !bad.is_false() {
        return Err(Error::RangeOverflow(format!(
            "values of {src} do not all fit in {format}"
        )));
    }
    Ok(ctx.dist(out.into_iter().rev().collect(), format))
}

/// `2^k · value(x) + offset`, re-encoded in `out`.
///
/// The binary point moves by `k` (no bits change), then the constant is
/// added in a format wide enough never to overflow, and the result is
/// narrowed to `out`.
pub fn shift_scale(
    ctx: &mut InferenceContext,
    x: &BitVectorDist,
    k: i32,
    offset: f64,
    out: FixedPointFormat,
) -> Result<BitVectorDist> {
    ctx.check_dist(x)?;
    let src = x.format;
    let frac = src.frac_bits as i64 - k as i64;
    // Moving the point left past bit zero appends zero bits at the bottom.
    let (moved, frac) = if frac < 0 {
        let mut bits = x.bits.clone();
        bits.extend(std::iter::repeat_n(NodeRef::FALSE, (-frac) as usize));
        let f = FixedPointFormat::new(bits.len() as u32, 0, src.signed)?;
        (ctx.dist(bits, f), 0u32)
    } else if frac as u32 > src.total_bits {
        // Moving the point right past the top: widen first.
        let f = FixedPointFormat::new(frac as u32 + 1, src.frac_bits, src.signed)?;
        let wide = convert(ctx, x, f)?;
        let g = FixedPointFormat::new(wide.bits.len() as u32, frac as u32, src.signed)?;
        (wide.reinterpret(g)?, frac as u32)
    } else {
        let f = FixedPointFormat::new(src.total_bits, frac as u32, src.signed)?;
        (x.reinterpret(f)?, frac as u32)
    };
    if offset == 0.0 {
        return convert(ctx, &moved, out);
    }
    let work_frac = frac.max(out.frac_bits);
    let probe = FixedPointFormat::new(MAX_BITS, work_frac.min(MAX_BITS - 2), true)?;
    probe.raw_of(offset)?;
    let lo = moved
        .format
        .min_value()
        .min(offset)
        .min(moved.format.min_value() + offset);
    let hi = moved
        .format
        .max_value()
        .max(offset)
        .max(moved.format.max_value() + offset);
    let mut work = FixedPointFormat::covering(lo, hi, work_frac)?;
    work = FixedPointFormat::new((work.total_bits + 1).min(MAX_BITS), work_frac, true)?;
    let wide = convert(ctx, &moved, work)?;
    let c = constant(ctx, offset, work)?;
    let (sum, ovf) = add_with_overflow(ctx, &wide, &c)?;
    if !ovf.node.is_false() {
        return Err(Error::RangeOverflow(format!(
            "adding {offset} overflows {work}"
        )));
    }
    convert(ctx, &sum, out)
}

/// Widens `x` by `extra_int` integer bits (sign or zero extension).
pub fn widen(
    ctx: &mut InferenceContext,
    x: &BitVectorDist,
    extra_int: u32,
    signed: bool,
) -> Result<BitVectorDist> {
    let f = x.format;
    let total = f.total_bits + extra_int + u32::from(signed && !f.signed);
    let out = FixedPointFormat::new(total, f.frac_bits, signed || f.signed)?;
    convert(ctx, x, out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fmt(t: u32, f: u32, s: bool) -> FixedPointFormat {
        FixedPointFormat::new(t, f, s).unwrap()
    }

    fn uniform(ctx: &mut InferenceContext, f: FixedPointFormat) -> BitVectorDist {
        let bits = (0..f.total_bits).map(|_| ctx.flip(0.5).unwrap()).collect();
        BitVectorDist::from_bits(ctx, bits, f).unwrap()
    }

    #[test]
    fn binarize_examples() {
        assert_eq!(binarize(0.625, 3).unwrap(), vec![true, false, true]);
        assert_eq!(binarize(0.0, 4).unwrap(), vec![false; 4]);
        assert!(matches!(
            binarize(0.3, 3),
            Err(Error::Unrepresentable { .. })
        ));
    }

    #[test]
    fn format_ranges() {
        let s = fmt(5, 1, true);
        assert_eq!(s.min_value(), -8.0);
        assert_eq!(s.max_value(), 7.5);
        let u = fmt(3, 3, false);
        assert_eq!(u.max_value(), 0.875);
        assert_eq!(s.bit_weight(0), -8.0);
        assert_eq!(s.bit_weight(4), 0.5);
        assert!(FixedPointFormat::new(0, 0, false).is_err());
        assert!(FixedPointFormat::new(3, 4, false).is_err());
    }

    #[test]
    fn covering_formats() {
        assert_eq!(
            FixedPointFormat::covering(-8.0, 7.5, 1).unwrap(),
            fmt(5, 1, true)
        );
        assert_eq!(
            FixedPointFormat::covering(0.0, 7.0, 0).unwrap(),
            fmt(3, 0, false)
        );
        assert_eq!(
            FixedPointFormat::covering(4.0, 11.5, 1).unwrap(),
            fmt(5, 1, false)
        );
    }

    #[test]
    fn comparisons_of_constants() {
        let mut ctx = InferenceContext::new();
        let f = fmt(2, 0, false);
        let two = constant(&ctx, 2.0, f).unwrap();
        let three = constant(&ctx, 3.0, f).unwrap();
        assert!(less_than(&mut ctx, &two, &three).unwrap().node().is_true());
        assert!(less_than(&mut ctx, &two, &two).unwrap().node().is_false());
        assert!(equals(&mut ctx, &two, &three).unwrap().node().is_false());
        assert!(equals(&mut ctx, &two, &two).unwrap().node().is_true());
    }

    #[test]
    fn uniform_comparison_probabilities() {
        let mut ctx = InferenceContext::new();
        let f = fmt(2, 0, false);
        let x = uniform(&mut ctx, f);
        let y = uniform(&mut ctx, f);
        let lt = less_than(&mut ctx, &x, &y).unwrap();
        assert!((ctx.probability(lt).unwrap() - 6.0 / 16.0).abs() < 1e-12);
        let xx = less_than(&mut ctx, &x, &x).unwrap();
        assert!(xx.node().is_false());
        let g = fmt(1, 0, false);
        let a = uniform(&mut ctx, g);
        let b = uniform(&mut ctx, g);
        let eq = equals(&mut ctx, &a, &b).unwrap();
        assert!((ctx.probability(eq).unwrap() - 0.5).abs() < 1e-12);
    }

    #[test]
    fn add_examples() {
        let mut ctx = InferenceContext::new();
        let f = fmt(3, 3, false);
        let a = constant(&ctx, 0.25, f).unwrap();
        let b = constant(&ctx, 0.5, f).unwrap();
        let s = add(&mut ctx, &a, &b, OverflowPolicy::Checked).unwrap();
        assert_eq!(s.as_constant(), Some(0.75));
        let x = uniform(&mut ctx, f);
        let z = constant(&ctx, 0.0, f).unwrap();
        assert_eq!(add(&mut ctx, &x, &z, OverflowPolicy::Checked).unwrap(), x);

        let w = fmt(2, 2, false);
        let a = constant(&ctx, 0.75, w).unwrap();
        let b = constant(&ctx, 0.5, w).unwrap();
        let s = add(&mut ctx, &a, &b, OverflowPolicy::Wraparound).unwrap();
        assert_eq!(s.as_constant(), Some(0.25));
    }

    #[test]
    fn checked_overflow_fails_at_query_time() {
        let mut ctx = InferenceContext::new();
        let f = fmt(2, 0, false);
        let x = uniform(&mut ctx, f);
        let one = constant(&ctx, 1.0, f).unwrap();
        let s = add(&mut ctx, &x, &one, OverflowPolicy::Checked).unwrap();
        let e = s.bit(0);
        assert_eq!(ctx.probability(e), Err(Error::Overflow));
    }

    #[test]
    fn checked_overflow_excluded_by_evidence_is_fine() {
        let mut ctx = InferenceContext::new();
        let f = fmt(2, 0, false);
        let x = uniform(&mut ctx, f);
        let one = constant(&ctx, 1.0, f).unwrap();
        let three = constant(&ctx, 3.0, f).unwrap();
        let small = less_than(&mut ctx, &x, &three).unwrap();
        ctx.observe(small).unwrap();
        let s = add(&mut ctx, &x, &one, OverflowPolicy::Checked).unwrap();
        let e = s.bit(0);
        assert!((ctx.probability(e).unwrap() - 2.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn signed_arithmetic_and_compare() {
        let mut ctx = InferenceContext::new();
        let f = fmt(4, 1, true);
        let a = constant(&ctx, -1.5, f).unwrap();
        let b = constant(&ctx, 2.0, f).unwrap();
        let s = add(&mut ctx, &a, &b, OverflowPolicy::Checked).unwrap();
        assert_eq!(s.as_constant(), Some(0.5));
        let d = sub(&mut ctx, &a, &b, OverflowPolicy::Checked).unwrap();
        assert_eq!(d.as_constant(), Some(-3.5));
        assert!(less_than(&mut ctx, &a, &b).unwrap().node().is_true());
        assert!(less_than(&mut ctx, &b, &a).unwrap().node().is_false());
    }

    #[test]
    fn mux_examples() {
        let mut ctx = InferenceContext::new();
        let f = fmt(1, 0, false);
        let one = constant(&ctx, 1.0, f).unwrap();
        let zero = constant(&ctx, 0.0, f).unwrap();
        let t = ctx.constant(true);
        assert_eq!(mux(&mut ctx, t, &one, &zero).unwrap(), one);
        let g = ctx.flip(0.3).unwrap();
        let m = mux(&mut ctx, g, &one, &zero).unwrap();
        assert!((ctx.probability(m.bit(0)).unwrap() - 0.3).abs() < 1e-12);
    }

    #[test]
    fn shift_scale_examples() {
        let mut ctx = InferenceContext::new();
        let x = uniform(&mut ctx, fmt(3, 3, false));
        let same = shift_scale(&mut ctx, &x, 0, 0.0, x.format()).unwrap();
        assert_eq!(same, x);
        let ints = shift_scale(&mut ctx, &x, 3, 0.0, fmt(3, 0, false)).unwrap();
        assert_eq!(ints.bits(), x.bits());
        let shifted = shift_scale(&mut ctx, &x, 1, -1.0, fmt(4, 2, true)).unwrap();
        assert_eq!(shifted.format().min_value(), -2.0);
        assert!(shift_scale(&mut ctx, &x, 0, 0.1, x.format()).is_err());
        assert!(matches!(
            shift_scale(&mut ctx, &x, 3, 4.0, fmt(3, 0, false)),
            Err(Error::RangeOverflow(_))
        ));
    }

    #[test]
    fn convert_round_trip() {
        let mut ctx = InferenceContext::new();
        let x = uniform(&mut ctx, fmt(3, 1, true));
        let wide = convert(&mut ctx, &x, fmt(6, 2, true)).unwrap();
        let back = convert(&mut ctx, &wide, x.format()).unwrap();
        assert_eq!(back, x);
        assert!(convert(&mut ctx, &x, fmt(3, 1, false)).is_err());
    }
}
