//! Compilation of generalized-gamma and mixed-gamma densities into
//! fixed-point distributions over `O(b)` flips.
//!
//! `π_{α,β}(x) ∝ x^α e^{βx}` on `[0, 1)`. The exponential case needs one
//! independent flip per bit. Each increment of `α` multiplies by `x`, which is
//! realized by conditioning on a fresh uniform being below the value (a
//! discrete linear factor) and mixing in a correction term that restores the
//! exact per-interval mass.

use serde::{Deserialize, Serialize};

use crate::bdd::{LevelHint, NodeRef, VarLabel};
use crate::context::{BoolRv, InferenceContext};
use crate::error::{Error, Result};
use crate::fixedpoint::{self, BitVectorDist, FixedPointFormat, MAX_BITS};
use crate::numeric::{binomial, compensated_sum, logistic, moment_integral};

/// `π_{α,β}`: density proportional to `x^α e^{βx}` on `[0, 1)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GeneralizedGamma {
    pub alpha: u32,
    pub beta: f64,
}

impl GeneralizedGamma {
    pub fn new(alpha: u32, beta: f64) -> Self {
        GeneralizedGamma { alpha, beta }
    }

    pub fn exponential(beta: f64) -> Self {
        Self::new(0, beta)
    }
}

/// Convex combination `Σ a_i π_{α_i,β_i}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MixedGamma {
    components: Vec<GeneralizedGamma>,
    weights: Vec<f64>,
}

impl MixedGamma {
    pub fn new(components: Vec<GeneralizedGamma>, weights: Vec<f64>) -> Result<Self> {
        if components.is_empty() || components.len() != weights.len() {
            return Err(Error::InvalidParameter(format!(
                "{} components with {} weights",
                components.len(),
                weights.len()
            )));
        }
        let sum: f64 = weights.iter().sum();
        if weights.iter().any(|w| !(0.0..=1.0).contains(w)) || (sum - 1.0).abs() > 1e-12 {
            return Err(Error::WeightSum(sum));
        }
        Ok(MixedGamma {
            components,
            weights,
        })
    }

    pub fn single(component: GeneralizedGamma) -> Self {
        MixedGamma {
            components: vec![component],
            weights: vec![1.0],
        }
    }

    pub fn components(&self) -> &[GeneralizedGamma] {
        &self.components
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// The same mixture with every `β` multiplied by `factor`.
    pub fn rescaled(&self, factor: f64) -> Self {
        MixedGamma {
            components: self
                .components
                .iter()
                .map(|c| GeneralizedGamma::new(c.alpha, c.beta * factor))
                .collect(),
            weights: self.weights.clone(),
        }
    }
}

/// Bias of bit `i` (1-based, most significant first) of `π_{0,β}`:
/// `e^{β/2^i} / (1 + e^{β/2^i})`.
pub fn flip_param(beta: f64, i: u32) -> f64 {
    logistic(beta / (i as f64).exp2())
}

/// Probability of taking the correction branch when compiling `π_{1,β}`:
///
/// `θ = (e^{βδ}(βδ − 1) + 1)(1 − e^β) / ((1 − e^{βδ})(e^β(β − 1) + 1))`
/// with `δ = 2^-b`, evaluated as `I_1(δ)·expm1(β) / (expm1(βδ)·I_1(1))`.
pub fn expo1_theta(beta: f64, b: u32) -> f64 {
    let delta = (-(b as f64)).exp2();
    if beta == 0.0 {
        return delta;
    }
    let num = moment_integral(1, delta, beta);
    let den = moment_integral(1, 1.0, beta);
    if beta > 300.0 {
        // expm1(β) and I_1(1, β) both carry a factor e^β.
        let log = num.ln() + beta + (-(-beta).exp()).ln_1p()
            - (beta * delta).exp_m1().ln()
            - (beta + ((beta - 1.0) / (beta * beta) + (-beta).exp() / (beta * beta)).ln());
        return log.exp();
    }
    num * beta.exp_m1() / ((beta * delta).exp_m1() * den)
}

/// Mixture weights and branch probability of the correction term used to
/// compile `π_{α,β}` from `π_{α−1,β}`.
///
/// Conditioning `π_{α−1,β}` on a uniform below it multiplies the mass of
/// grid point `x` by `x`, which misses `∫_0^δ s f(x+s) ds` per interval with
/// `f(t) = t^{α−1}e^{βt}`. Expanding `(x+s)^{α−1}` gives
/// `Σ_k d_k x^k e^{βx}` with `d_k = C(α−1,k) I_{α−k}(δ) ≥ 0`, a mixture of
/// the grid-point families `ψ_k(x) ∝ x^k e^{βx}`. Returns the weights of
/// `ψ_0..ψ_{α−1}` and the probability of the correction branch.
pub fn correction_weights(alpha: u32, beta: f64, b: u32) -> Result<(Vec<f64>, f64)> {
    if alpha == 0 {
        return Err(Error::InvalidParameter(
            "correction needs alpha >= 1".into(),
        ));
    }
    let delta = (-(b as f64)).exp2();
    let small: Vec<f64> = (0..=alpha)
        .map(|m| moment_integral(m, delta, beta))
        .collect();
    let sums = grid_power_sums(alpha - 1, beta, b, &small);
    let mass: Vec<f64> = (0..alpha)
        .map(|k| binomial(alpha - 1, k) * small[(alpha - k) as usize] * sums[k as usize])
        .collect();
    let total: f64 = mass.iter().sum();
    let theta = total / moment_integral(alpha, 1.0, beta);
    if !(theta.is_finite() && total > 0.0 && theta <= 1.0 + 1e-12) {
        return Err(Error::InvalidParameter(format!(
            "correction probability {theta} out of range for alpha={alpha}, beta={beta}, b={b}"
        )));
    }
    Ok((mass.iter().map(|m| m / total).collect(), theta.min(1.0)))
}

/// `S_k = Σ_r x_r^k e^{βx_r}` over the `2^b` grid points, `k = 0..=max_k`.
fn grid_power_sums(max_k: u32, beta: f64, b: u32, small: &[f64]) -> Vec<f64> {
    if b <= 16 {
        let n = 1usize << b;
        let delta = 1.0 / n as f64;
        return (0..=max_k)
            .map(|k| {
                compensated_sum((0..n).map(|r| {
                    let x = r as f64 * delta;
                    x.powi(k as i32) * (beta * x).exp()
                }))
            })
            .collect();
    }
    // Interval integrals of t^k e^{βt} sum to Z_k and expand over the S_j:
    // Z_k = Σ_j C(k,j) I_{k−j}(δ) S_j. Well conditioned for small δ.
    let mut s: Vec<f64> = Vec::with_capacity(max_k as usize + 1);
    for k in 0..=max_k {
        let mut rhs = moment_integral(k, 1.0, beta);
        for (j, sj) in s.iter().enumerate() {
            rhs -= binomial(k, j as u32) * small[(k - j as u32) as usize] * sj;
        }
        s.push(rhs / small[0]);
    }
    s
}

/// Closed-form flip count of compiling `π_{α,β}` at `b` bits.
pub fn gamma_flip_count(alpha: u32, b: u32) -> u64 {
    let b = b as u64;
    let mut f = b;
    for a in 1..=alpha as u64 {
        // previous level, its uniform, the components ψ_k ((k+1)·b flips each),
        // the mixture guards and the branch flip
        let comps: u64 = (0..a).map(|k| (k + 1) * b).sum();
        f = f + b + comps + (a - 1) + 1;
    }
    f
}

/// Variable placement for one compilation: band `i` collects every flip
/// that speaks about bit `i`, and guard flips sit above all bands.
#[derive(Debug, Clone, Default)]
pub(crate) struct BitBands {
    bands: Vec<Option<(VarLabel, VarLabel)>>,
}

impl BitBands {
    pub(crate) fn new(b: u32) -> Self {
        BitBands {
            bands: vec![None; b as usize],
        }
    }

    fn bit_flip(&mut self, ctx: &mut InferenceContext, i: usize, theta: f64) -> Result<NodeRef> {
        let hint = match self.bands[i] {
            Some((_, last)) => LevelHint::After(last),
            None => LevelHint::Append,
        };
        let var = ctx.flip_var(theta, hint)?;
        let band = &mut self.bands[i];
        *band = Some(match *band {
            Some((first, _)) => (first, var),
            None => (var, var),
        });
        Ok(ctx.bdd_mut().var(var))
    }

    fn guard_flip(&mut self, ctx: &mut InferenceContext, theta: f64) -> Result<BoolRv> {
        let hint = match self.bands.first().copied().flatten() {
            Some((first, _)) => LevelHint::Before(first),
            None => LevelHint::Append,
        };
        ctx.flip_at(theta, hint)
    }
}

fn check_bits(b: u32) -> Result<()> {
    if b == 0 || b > MAX_BITS {
        return Err(Error::InvalidParameter(format!(
            "bit width must be in 1..={MAX_BITS}, got {b}"
        )));
    }
    Ok(())
}

pub(crate) fn expo0(
    ctx: &mut InferenceContext,
    bands: &mut BitBands,
    beta: f64,
    b: u32,
) -> Result<BitVectorDist> {
    if beta.is_nan() {
        return Err(Error::InvalidParameter("beta is NaN".into()));
    }
    let bits = (1..=b)
        .map(|i| bands.bit_flip(ctx, i as usize - 1, flip_param(beta, i)))
        .collect::<Result<Vec<_>>>()?;
    Ok(ctx.dist(bits, FixedPointFormat::unit(b)?))
}

fn uniform_below(
    ctx: &mut InferenceContext,
    bands: &mut BitBands,
    x: &BitVectorDist,
    b: u32,
) -> Result<()> {
    let bits = (0..b as usize)
        .map(|i| bands.bit_flip(ctx, i, 0.5))
        .collect::<Result<Vec<_>>>()?;
    let u = ctx.dist(bits, x.format());
    let lt = fixedpoint::less_than(ctx, &u, x)?;
    ctx.observe(lt)
}

fn gamma1(
    ctx: &mut InferenceContext,
    bands: &mut BitBands,
    beta: f64,
    b: u32,
) -> Result<BitVectorDist> {
    let y1 = expo0(ctx, bands, beta, b)?;
    uniform_below(ctx, bands, &y1, b)?;
    let y2 = expo0(ctx, bands, beta, b)?;
    let g = bands.guard_flip(ctx, expo1_theta(beta, b))?;
    fixedpoint::mux(ctx, g, &y2, &y1)
}

/// Compiles `π_{α,β}` into `bands`.
///
/// `consumed` marks a result that a later comparison reads bit by bit; its
/// correction components must then share the bands. Otherwise each
/// component gets its own block, so the comparisons inside different
/// components do not interleave and the evidence stays small.
pub(crate) fn general(
    ctx: &mut InferenceContext,
    bands: &mut BitBands,
    alpha: u32,
    beta: f64,
    b: u32,
    consumed: bool,
) -> Result<BitVectorDist> {
    match alpha {
        0 => expo0(ctx, bands, beta, b),
        1 => gamma1(ctx, bands, beta, b),
        _ => {
            let (weights, theta) = correction_weights(alpha, beta, b)?;
            let x = general(ctx, bands, alpha - 1, beta, b, true)?;
            uniform_below(ctx, bands, &x, b)?;
            let c = fold_mixture(ctx, bands, &weights, consumed, &mut |ctx, bands, k| {
                let y = expo0(ctx, bands, beta, b)?;
                for _ in 0..k {
                    uniform_below(ctx, bands, &y, b)?;
                }
                Ok(y)
            })?;
            let g = bands.guard_flip(ctx, theta)?;
            fixedpoint::mux(ctx, g, &c, &x)
        }
    }
}

type ComponentFn<'a> =
    dyn FnMut(&mut InferenceContext, &mut BitBands, usize) -> Result<BitVectorDist> + 'a;

/// Right fold of the two-way mixture rule: the last component is selected
/// by a flip with its weight, the rest is a renormalized mixture.
///
/// With `shared` every component is compiled into `bands`; otherwise each
/// gets a fresh block.
fn fold_mixture(
    ctx: &mut InferenceContext,
    bands: &mut BitBands,
    weights: &[f64],
    shared: bool,
    component: &mut ComponentFn<'_>,
) -> Result<BitVectorDist> {
    let b = bands.bands.len() as u32;
    let mut compile = |ctx: &mut InferenceContext, bands: &mut BitBands, i: usize| {
        if shared {
            component(ctx, bands, i)
        } else {
            component(ctx, &mut BitBands::new(b), i)
        }
    };
    let n = weights.len();
    if n == 1 {
        return compile(ctx, bands, 0);
    }
    let last = weights[n - 1];
    let g = bands.guard_flip(ctx, last)?;
    let tail = compile(ctx, bands, n - 1)?;
    let rest = 1.0 - last;
    let prefix: Vec<f64> = if rest > 0.0 {
        weights[..n - 1]
            .iter()
            .map(|w| (w / rest).min(1.0))
            .collect()
    } else {
        vec![1.0 / (n - 1) as f64; n - 1]
    };
    let head = fold_mixture(ctx, bands, &prefix, shared, component)?;
    fixedpoint::mux(ctx, g, &tail, &head)
}

pub(crate) fn mixture(
    ctx: &mut InferenceContext,
    bands: &mut BitBands,
    mg: &MixedGamma,
    b: u32,
) -> Result<BitVectorDist> {
    let components = mg.components.clone();
    fold_mixture(ctx, bands, &mg.weights, false, &mut |ctx, bands, i| {
        let c = components[i];
        general(ctx, bands, c.alpha, c.beta, b, false)
    })
}

/// `b` independent flips with biases `flip_param(β, i)`: exactly `π_{0,β}`.
pub fn compile_exponential(ctx: &mut InferenceContext, beta: f64, b: u32) -> Result<BitVectorDist> {
    check_bits(b)?;
    expo0(ctx, &mut BitBands::new(b), beta, b)
}

/// Conditions on a fresh `b`-bit uniform being below `x`, reweighting each
/// grid point by the number of grid points beneath it.
///
/// Each uniform bit is placed right after the deepest variable that the
/// matching bit of `x` depends on, which keeps the comparison linear.
pub fn unif_obs(ctx: &mut InferenceContext, x: &BitVectorDist, b: u32) -> Result<()> {
    check_bits(b)?;
    ctx.check_dist(x)?;
    let unit = FixedPointFormat::unit(b)?;
    if x.format() != unit {
        return Err(Error::FormatMismatch(
            x.format().to_string(),
            unit.to_string(),
        ));
    }
    let mut prev: Option<VarLabel> = None;
    let mut bits = Vec::with_capacity(b as usize);
    for &bit in x.bits() {
        let mut anchor = prev;
        for v in ctx.bdd().support(bit) {
            let deeper = match anchor {
                None => true,
                Some(a) => ctx.bdd().level(v)? > ctx.bdd().level(a)?,
            };
            if deeper {
                anchor = Some(v);
            }
        }
        let hint = anchor.map_or(LevelHint::Append, LevelHint::After);
        let var = ctx.flip_var(0.5, hint)?;
        prev = Some(var);
        bits.push(ctx.bdd_mut().var(var));
    }
    let u = ctx.dist(bits, unit);
    let lt = fixedpoint::less_than(ctx, &u, x)?;
    ctx.observe(lt)
}

/// `π_{1,β}` with `3b + 1` flips.
pub fn compile_gamma1(ctx: &mut InferenceContext, beta: f64, b: u32) -> Result<BitVectorDist> {
    check_bits(b)?;
    gamma1(ctx, &mut BitBands::new(b), beta, b)
}

pub fn compile_general_gamma(
    ctx: &mut InferenceContext,
    alpha: u32,
    beta: f64,
    b: u32,
) -> Result<BitVectorDist> {
    check_bits(b)?;
    general(ctx, &mut BitBands::new(b), alpha, beta, b, false)
}

pub fn compile_mixture(
    ctx: &mut InferenceContext,
    mg: &MixedGamma,
    b: u32,
) -> Result<BitVectorDist> {
    check_bits(b)?;
    mixture(ctx, &mut BitBands::new(b), mg, b)
}

/// `log2(width)` when `width` is a power of two.
pub(crate) fn log2_exact(width: f64) -> Result<i32> {
    if !(width.is_finite() && width > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "width {width} is not positive"
        )));
    }
    let k = width.log2().round() as i32;
    if (k as f64).exp2() != width {
        return Err(Error::InvalidParameter(format!(
            "width {width} is not a power of two"
        )));
    }
    Ok(k)
}

/// Format of `b` bits spread over `[lo, lo + width)`.
pub(crate) fn interval_format(b: u32, lo: f64, width: f64) -> Result<FixedPointFormat> {
    let k = log2_exact(width)?;
    let frac = b as i64 - k as i64;
    if frac < 0 {
        return Err(Error::InvalidParameter(format!(
            "{b} bits cannot cover width {width} with an integer grid"
        )));
    }
    let frac = frac as u32;
    let step = (-(frac as f64)).exp2();
    let out = FixedPointFormat::covering(lo, lo + width - step, frac)?;
    out.raw_of(lo)?;
    Ok(out)
}

/// Places a unit-interval distribution onto `[lo, lo + width)`.
pub(crate) fn place_on_interval(
    ctx: &mut InferenceContext,
    unit: &BitVectorDist,
    lo: f64,
    width: f64,
) -> Result<BitVectorDist> {
    let b = unit.format().total_bits;
    let out = interval_format(b, lo, width)?;
    fixedpoint::shift_scale(ctx, unit, log2_exact(width)?, lo, out)
}

/// Compiles the density `Σ a_i ((x − lo)/width)^{α_i} e^{β_i x}` on
/// `[lo, lo + width)`. Each `β` is per unit of `x`.
pub fn compile_on_interval(
    ctx: &mut InferenceContext,
    mg: &MixedGamma,
    b: u32,
    lo: f64,
    width: f64,
) -> Result<BitVectorDist> {
    check_bits(b)?;
    interval_format(b, lo, width)?;
    let unit = compile_mixture(ctx, &mg.rescaled(width), b)?;
    place_on_interval(ctx, &unit, lo, width)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numeric::gamma_interval_integral;
    use crate::query::pr;

    fn masses(ctx: &mut InferenceContext, x: &BitVectorDist) -> Vec<f64> {
        let n = 1usize << x.format().total_bits;
        let table = pr(ctx, x).unwrap();
        let mut out = vec![0.0; n];
        for (v, p) in table.entries() {
            let raw = x.format().raw_of(*v).unwrap() - x.format().min_raw();
            out[raw as usize] = *p;
        }
        out
    }

    fn oracle(alpha: u32, beta: f64, b: u32) -> Vec<f64> {
        let n = 1usize << b;
        let d = 1.0 / n as f64;
        let z = gamma_interval_integral(alpha, beta, 0.0, 1.0);
        (0..n)
            .map(|k| gamma_interval_integral(alpha, beta, k as f64 * d, (k + 1) as f64 * d) / z)
            .collect()
    }

    #[test]
    fn flip_param_values() {
        assert_eq!(flip_param(0.0, 3), 0.5);
        assert!((flip_param(-3.0, 1) - 0.182_425_523_806_356_2).abs() < 1e-15);
        assert!((flip_param(-24.0, 1) - 6.144_174_602_214_718e-6).abs() < 1e-18);
    }

    #[test]
    fn expo1_theta_values() {
        assert!((expo1_theta(1.0, 1) - 0.465_22).abs() < 1e-5);
        assert_eq!(expo1_theta(0.0, 3), 0.125);
        for beta in [1e-8, -1e-8] {
            assert!((expo1_theta(beta, 3) - 0.125).abs() < 1e-8);
        }
    }

    #[test]
    fn closed_form_theta_matches_general_correction() {
        for beta in [-5.0, -1.0, 0.3, 3.0] {
            for b in 1..8 {
                let (weights, theta) = correction_weights(1, beta, b).unwrap();
                assert_eq!(weights, vec![1.0]);
                assert!((theta - expo1_theta(beta, b)).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn exponential_masses() {
        let mut ctx = InferenceContext::new();
        let x = compile_exponential(&mut ctx, 0.0, 2).unwrap();
        assert!(masses(&mut ctx, &x)
            .iter()
            .all(|&m| (m - 0.25).abs() < 1e-15));
        let x = compile_exponential(&mut ctx, -3.0, 3).unwrap();
        for (got, want) in masses(&mut ctx, &x).iter().zip(oracle(0, -3.0, 3)) {
            assert!((got - want).abs() < 1e-12);
        }
        assert_eq!(ctx.flip_count(), 5);
    }

    #[test]
    fn unif_obs_reweights_linearly() {
        let mut ctx = InferenceContext::new();
        let x = compile_exponential(&mut ctx, 0.0, 2).unwrap();
        unif_obs(&mut ctx, &x, 2).unwrap();
        let m = masses(&mut ctx, &x);
        for (k, got) in m.iter().enumerate() {
            assert!((got - k as f64 / 6.0).abs() < 1e-15);
        }
        assert!((ctx.evidence_wmc().unwrap() - 3.0 / 8.0).abs() < 1e-15);
    }

    #[test]
    fn gamma1_flip_count_and_masses() {
        let mut ctx = InferenceContext::new();
        let x = compile_gamma1(&mut ctx, -4.0, 4).unwrap();
        assert_eq!(ctx.flip_count(), 13);
        for (got, want) in masses(&mut ctx, &x).iter().zip(oracle(1, -4.0, 4)) {
            assert!((got - want).abs() < 1e-10);
        }
    }

    #[test]
    fn quadratic_masses() {
        let mut ctx = InferenceContext::new();
        let x = compile_general_gamma(&mut ctx, 2, 0.0, 2).unwrap();
        let want = [1.0, 7.0, 19.0, 37.0].map(|v| v / 64.0);
        for (got, want) in masses(&mut ctx, &x).iter().zip(want) {
            assert!((got - want).abs() < 1e-12);
        }
        assert_eq!(ctx.flip_count() as u64, gamma_flip_count(2, 2));
    }

    #[test]
    fn flip_count_recurrence() {
        assert_eq!(gamma_flip_count(0, 5), 5);
        assert_eq!(gamma_flip_count(1, 5), 16);
        assert_eq!(gamma_flip_count(2, 5), 38);
        assert_eq!(gamma_flip_count(3, 5), 76);
    }

    #[test]
    fn mixture_masses_and_guards() {
        let mut ctx = InferenceContext::new();
        let mg = MixedGamma::new(
            vec![
                GeneralizedGamma::new(0, 2.0),
                GeneralizedGamma::new(1, -1.0),
            ],
            vec![0.25, 0.75],
        )
        .unwrap();
        let x = compile_mixture(&mut ctx, &mg, 3).unwrap();
        assert_eq!(ctx.flip_count(), 3 + 10 + 1);
        let a = oracle(0, 2.0, 3);
        let c = oracle(1, -1.0, 3);
        for (k, got) in masses(&mut ctx, &x).iter().enumerate() {
            assert!((got - (0.25 * a[k] + 0.75 * c[k])).abs() < 1e-10);
        }
    }

    #[test]
    fn mixture_weight_validation() {
        let g = GeneralizedGamma::new(0, 0.0);
        assert!(matches!(
            MixedGamma::new(vec![g, g], vec![0.5, 0.6]),
            Err(Error::WeightSum(_))
        ));
    }

    #[test]
    fn interval_placement_matches_shifted_weights() {
        let mut ctx = InferenceContext::new();
        let mg = MixedGamma::single(GeneralizedGamma::exponential(-3.0));
        let x = compile_on_interval(&mut ctx, &mg, 3, 0.0, 8.0).unwrap();
        assert_eq!(x.format(), FixedPointFormat::new(3, 0, false).unwrap());
        let w: Vec<f64> = (0..3)
            .map(|i| ctx.prior_probability(x.bit(i)).unwrap())
            .collect();
        assert!((w[0] - 6.14e-6).abs() < 5e-9);
        assert!((w[1] - 0.0025).abs() < 5e-5);
        assert!((w[2] - 0.047).abs() < 5e-4);
        assert_eq!(ctx.bdd().node_count(x.bits()), 3);
    }

    #[test]
    fn interval_rejects_bad_width() {
        let mut ctx = InferenceContext::new();
        let mg = MixedGamma::single(GeneralizedGamma::exponential(0.0));
        assert!(compile_on_interval(&mut ctx, &mg, 3, 0.0, 3.0).is_err());
        assert!(compile_on_interval(&mut ctx, &mg, 2, 0.0, 8.0).is_err());
    }
}
