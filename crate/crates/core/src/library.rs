//! User-facing constructors: sound compilation of the gamma family on an
//! interval, piecewise approximation of arbitrary densities, and named
//! distributions built on top of both.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::bdd::{Bdd, NodeRef};
use crate::compiler::{
    compile_exponential, compile_mixture, compile_on_interval, interval_format, log2_exact,
    place_on_interval, GeneralizedGamma, MixedGamma,
};
use crate::context::InferenceContext;
use crate::error::{Error, Result};
use crate::fixedpoint::{BitVectorDist, FixedPointFormat};
use crate::numeric::compensated_sum;
use crate::quadrature;

type Eval = Arc<dyn Fn(f64) -> f64 + Send + Sync>;
type IntervalMass = Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>;

/// A nonnegative density on `[lo, hi)`, possibly unnormalized.
#[derive(Clone)]
pub struct DensityFn {
    eval: Eval,
    mass: Option<IntervalMass>,
    lo: f64,
    hi: f64,
}

impl fmt::Debug for DensityFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("DensityFn")
            .field("lo", &self.lo)
            .field("hi", &self.hi)
            .field("closed_form_mass", &self.mass.is_some())
            .finish()
    }
}

impl DensityFn {
    /// Fails unless the density integrates to a finite positive mass.
    pub fn new<F>(eval: F, lo: f64, hi: f64) -> Result<Self>
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        if !(lo.is_finite() && hi.is_finite() && lo < hi) {
            return Err(Error::InvalidParameter(format!(
                "support [{lo}, {hi}) is empty"
            )));
        }
        let d = DensityFn {
            eval: Arc::new(eval),
            mass: None,
            lo,
            hi,
        };
        let total = d.mass(lo, hi)?;
        if !(total > 0.0 && total.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "density mass on [{lo}, {hi}) is {total}"
            )));
        }
        Ok(d)
    }

    /// Uses `mass(a, b)` instead of quadrature for interval masses.
    pub fn with_mass<M>(mut self, mass: M) -> Self
    where
        M: Fn(f64, f64) -> f64 + Send + Sync + 'static,
    {
        self.mass = Some(Arc::new(mass));
        self
    }

    pub fn eval(&self, x: f64) -> f64 {
        (self.eval)(x)
    }

    pub fn support(&self) -> (f64, f64) {
        (self.lo, self.hi)
    }

    /// Unnormalized mass of `[a, b)`.
    pub fn mass(&self, a: f64, b: f64) -> Result<f64> {
        match &self.mass {
            Some(m) => {
                let v = m(a, b);
                if v.is_finite() && v >= 0.0 {
                    Ok(v)
                } else {
                    Err(Error::InvalidParameter(format!("mass {v} on [{a}, {b})")))
                }
            }
            None => quadrature::integrate(&*self.eval, a, b),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PieceKind {
    Linear,
    Exponential,
}

impl std::str::FromStr for PieceKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "linear" => Ok(PieceKind::Linear),
            "exponential" => Ok(PieceKind::Exponential),
            _ => Err(Error::InvalidParameter(format!("unknown piece kind `{s}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PieceSpec {
    pub num_pieces: u32,
    pub kind: PieceKind,
}

impl Default for PieceSpec {
    fn default() -> Self {
        PieceSpec {
            num_pieces: 16,
            kind: PieceKind::Exponential,
        }
    }
}

impl PieceSpec {
    pub fn new(num_pieces: u32, kind: PieceKind) -> Self {
        PieceSpec { num_pieces, kind }
    }

    /// Caps the piece count at one piece per grid point.
    pub fn clamped(self, bits: u32) -> Self {
        let cap = 1u64 << bits.min(63);
        PieceSpec {
            num_pieces: (self.num_pieces as u64).min(cap) as u32,
            ..self
        }
    }
}

/// Shape of one piece over its own `m` grid intervals.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum PieceShape {
    /// `π_{0,β}` with `β` per unit of the piece.
    Exponential { beta: f64 },
    /// `(1 − s)·uniform + s·π_{1,0}`, mirrored when decreasing.
    Linear { slope_weight: f64, increasing: bool },
    /// All mass on grid interval `offset` of the piece.
    Point { offset: u64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PieceFit {
    pub lo: f64,
    pub width: f64,
    pub weight: f64,
    pub shape: PieceShape,
}

impl PieceFit {
    /// Normalized masses of the piece's `m` grid intervals.
    pub fn grid_masses(&self, m: u64) -> Vec<f64> {
        let mf = m as f64;
        let raw: Vec<f64> = match self.shape {
            PieceShape::Exponential { beta } => (0..m)
                .map(|r| (beta * (r as f64 - (m - 1) as f64 / 2.0) / mf).exp())
                .collect(),
            PieceShape::Linear {
                slope_weight,
                increasing,
            } => (0..m)
                .map(|r| {
                    let r = if increasing { r } else { m - 1 - r };
                    (1.0 - slope_weight) / mf + slope_weight * (2 * r + 1) as f64 / (mf * mf)
                })
                .collect(),
            PieceShape::Point { offset } => (0..m).map(|r| (r == offset) as u8 as f64).collect(),
        };
        let z = compensated_sum(raw.iter().copied());
        raw.iter().map(|v| v / z).collect()
    }
}

/// Splits `density`'s support into equal pieces and fits each one.
///
/// Each piece keeps its exact mass, and its shape is chosen so that the
/// ratio between the masses of its last and first grid intervals matches
/// the naive discretization.
pub fn fit_pieces(density: &DensityFn, bits: u32, spec: PieceSpec) -> Result<Vec<PieceFit>> {
    let (lo, hi) = density.support();
    let width = hi - lo;
    interval_format(bits, lo, width)?;
    let t = spec.num_pieces;
    if t == 0 || !t.is_power_of_two() || t.trailing_zeros() > bits {
        return Err(Error::InvalidParameter(format!(
            "piece count {t} must be a power of two no larger than 2^{bits}"
        )));
    }
    let m = 1u64 << (bits - t.trailing_zeros());
    let piece_w = width / t as f64;
    let step = piece_w / m as f64;
    let masses = (0..t)
        .map(|j| {
            let a = lo + j as f64 * piece_w;
            density.mass(a, a + piece_w)
        })
        .collect::<Result<Vec<_>>>()?;
    let total = compensated_sum(masses.iter().copied());
    if total.is_nan() || total <= 0.0 {
        return Err(Error::InvalidParameter("density has zero mass".into()));
    }
    masses
        .iter()
        .enumerate()
        .map(|(j, &mass)| {
            let a = lo + j as f64 * piece_w;
            let weight = mass / total;
            let shape = if mass == 0.0 || m == 1 {
                PieceShape::Point { offset: 0 }
            } else {
                let first = density.mass(a, a + step)?;
                let last = density.mass(a + piece_w - step, a + piece_w)?;
                fit_shape(spec.kind, first, last, m)
            };
            Ok(PieceFit {
                lo: a,
                width: piece_w,
                weight,
                shape,
            })
        })
        .collect()
}

fn fit_shape(kind: PieceKind, first: f64, last: f64, m: u64) -> PieceShape {
    if first == 0.0 && last == 0.0 {
        return match kind {
            PieceKind::Exponential => PieceShape::Exponential { beta: 0.0 },
            PieceKind::Linear => PieceShape::Linear {
                slope_weight: 0.0,
                increasing: true,
            },
        };
    }
    let mf = m as f64;
    match kind {
        PieceKind::Exponential => {
            if first == 0.0 {
                PieceShape::Point { offset: m - 1 }
            } else if last == 0.0 {
                PieceShape::Point { offset: 0 }
            } else {
                // masses ∝ e^{βr/m}, so last/first = e^{β(m−1)/m}
                PieceShape::Exponential {
                    beta: (last / first).ln() * mf / (mf - 1.0),
                }
            }
        }
        PieceKind::Linear => {
            let increasing = last >= first;
            let (small, big) = if increasing {
                (first, last)
            } else {
                (last, first)
            };
            // (1−s)/m + s(2r+1)/m² has last/first = ρ when
            // s/(1−s) = m(ρ−1)/((2m−1)−ρ); steeper ratios saturate at s = 1.
            let steepest = 2.0 * mf - 1.0;
            let slope_weight = if small == 0.0 || big / small >= steepest {
                1.0
            } else {
                let rho = big / small;
                let odds = mf * (rho - 1.0) / (steepest - rho);
                odds / (1.0 + odds)
            };
            PieceShape::Linear {
                slope_weight,
                increasing,
            }
        }
    }
}

/// Piecewise approximation of `density` on its support.
pub fn bitblast(
    ctx: &mut InferenceContext,
    bits: u32,
    density: &DensityFn,
    spec: PieceSpec,
) -> Result<BitVectorDist> {
    let fits = fit_pieces(density, bits, spec)?;
    let (lo, hi) = density.support();
    assemble(ctx, bits, lo, hi - lo, &fits)
}

/// Compiles fitted pieces: a balanced tree of guard flips picks the piece,
/// which fixes the high-order bits; the low-order bits come from the
/// selected piece.
pub fn assemble(
    ctx: &mut InferenceContext,
    bits: u32,
    lo: f64,
    width: f64,
    fits: &[PieceFit],
) -> Result<BitVectorDist> {
    let t = fits.len();
    if t == 0 || !t.is_power_of_two() || t.trailing_zeros() > bits {
        return Err(Error::InvalidParameter(format!(
            "{t} pieces cannot be placed on {bits} bits"
        )));
    }
    let local_bits = bits - t.trailing_zeros();
    let weights: Vec<f64> = fits.iter().map(|f| f.weight).collect();
    let mut guards = Vec::with_capacity(t - 1);
    create_guards(ctx, &weights, &mut guards)?;
    let locals = fits
        .iter()
        .map(|f| compile_piece(ctx, f, local_bits))
        .collect::<Result<Vec<_>>>()?;
    let mut next_guard = guards.into_iter();
    let (index, local) = select(ctx, &mut next_guard, &locals);
    let mut all = index;
    all.extend(local);
    let unit = ctx.dist(all, FixedPointFormat::unit(bits)?);
    place_on_interval(ctx, &unit, lo, width)
}

/// Guard flips in pre-order; each picks the upper half of its range.
fn create_guards(
    ctx: &mut InferenceContext,
    weights: &[f64],
    out: &mut Vec<NodeRef>,
) -> Result<()> {
    if weights.len() == 1 {
        return Ok(());
    }
    let mid = weights.len() / 2;
    let total = compensated_sum(weights.iter().copied());
    let upper = compensated_sum(weights[mid..].iter().copied());
    let p = if total > 0.0 {
        (upper / total).clamp(0.0, 1.0)
    } else {
        0.0
    };
    out.push(ctx.flip(p)?.node());
    create_guards(ctx, &weights[..mid], out)?;
    create_guards(ctx, &weights[mid..], out)
}

fn select(
    ctx: &mut InferenceContext,
    guards: &mut impl Iterator<Item = NodeRef>,
    locals: &[Vec<NodeRef>],
) -> (Vec<NodeRef>, Vec<NodeRef>) {
    if locals.len() == 1 {
        return (Vec::new(), locals[0].clone());
    }
    let g = guards.next().expect("one guard per internal node");
    let mid = locals.len() / 2;
    let (li, ll) = select(ctx, guards, &locals[..mid]);
    let (ui, ul) = select(ctx, guards, &locals[mid..]);
    let bdd = ctx.bdd_mut();
    let mut index = vec![g];
    index.extend(li.iter().zip(&ui).map(|(&l, &u)| bdd.ite(g, u, l)));
    let local = ll
        .iter()
        .zip(&ul)
        .map(|(&l, &u)| bdd.ite(g, u, l))
        .collect();
    (index, local)
}

fn compile_piece(ctx: &mut InferenceContext, fit: &PieceFit, bits: u32) -> Result<Vec<NodeRef>> {
    if bits == 0 {
        return Ok(Vec::new());
    }
    let x = match fit.shape {
        PieceShape::Point { offset } => {
            return Ok((0..bits)
                .map(|i| Bdd::constant((offset >> (bits - 1 - i)) & 1 == 1))
                .collect())
        }
        PieceShape::Exponential { beta } => compile_exponential(ctx, beta, bits)?,
        PieceShape::Linear {
            slope_weight,
            increasing,
        } => {
            let flat = GeneralizedGamma::new(0, 0.0);
            let ramp = GeneralizedGamma::new(1, 0.0);
            let mg = if slope_weight <= 0.0 {
                MixedGamma::single(flat)
            } else if slope_weight >= 1.0 {
                MixedGamma::single(ramp)
            } else {
                MixedGamma::new(vec![flat, ramp], vec![1.0 - slope_weight, slope_weight])?
            };
            let x = compile_mixture(ctx, &mg, bits)?;
            if increasing {
                x
            } else {
                crate::fixedpoint::bitwise_not(ctx, &x)?
            }
        }
    };
    Ok(x.bits().to_vec())
}

/// Sound compilation of `((x − ll)/(ul − ll))^α e^{βx}` on `[ll, ul)`.
pub fn general_gamma(
    ctx: &mut InferenceContext,
    bits: u32,
    alpha: u32,
    beta: f64,
    ll: f64,
    ul: f64,
) -> Result<BitVectorDist> {
    mixed_gamma(
        ctx,
        bits,
        &MixedGamma::single(GeneralizedGamma::new(alpha, beta)),
        ll,
        ul,
    )
}

pub fn mixed_gamma(
    ctx: &mut InferenceContext,
    bits: u32,
    mg: &MixedGamma,
    ll: f64,
    ul: f64,
) -> Result<BitVectorDist> {
    compile_on_interval(ctx, mg, bits, ll, ul - ll)
}

pub fn uniform(ctx: &mut InferenceContext, bits: u32, ll: f64, ul: f64) -> Result<BitVectorDist> {
    general_gamma(ctx, bits, 0, 0.0, ll, ul)
}

/// Exponential with rate `lambda`, truncated to `[ll, ul)`.
pub fn exponential(
    ctx: &mut InferenceContext,
    bits: u32,
    lambda: f64,
    ll: f64,
    ul: f64,
) -> Result<BitVectorDist> {
    positive("rate", lambda)?;
    general_gamma(ctx, bits, 0, -lambda, ll, ul)
}

/// Density `(x − ll)^n` on `[ll, ul)`.
pub fn polynomial(
    ctx: &mut InferenceContext,
    bits: u32,
    n: u32,
    ll: f64,
    ul: f64,
) -> Result<BitVectorDist> {
    general_gamma(ctx, bits, n, 0.0, ll, ul)
}

/// Gamma with the given shape and rate. Integer shapes on `[0, ul)` compile
/// soundly; anything else is approximated with the default pieces.
pub fn gamma(
    ctx: &mut InferenceContext,
    bits: u32,
    shape: f64,
    rate: f64,
    ll: f64,
    ul: f64,
) -> Result<BitVectorDist> {
    positive("shape", shape)?;
    positive("rate", rate)?;
    if ll == 0.0 && shape.fract() == 0.0 && shape <= 64.0 {
        return general_gamma(ctx, bits, shape as u32 - 1, -rate, ll, ul);
    }
    let density = gamma_density(shape, rate, ll, ul)?;
    bitblast(ctx, bits, &density, PieceSpec::default().clamped(bits))
}

/// Unnormalized gamma density `x^{k−1} e^{−λx}` on `[ll, ul)`.
pub fn gamma_density(shape: f64, rate: f64, ll: f64, ul: f64) -> Result<DensityFn> {
    positive("shape", shape)?;
    positive("rate", rate)?;
    DensityFn::new(
        move |x| {
            if x <= 0.0 {
                0.0
            } else {
                ((shape - 1.0) * x.ln() - rate * x).exp()
            }
        },
        ll,
        ul,
    )
}

/// Unnormalized beta density on `[0, 1)`.
pub fn beta_density(a: f64, b: f64) -> Result<DensityFn> {
    positive("first shape", a)?;
    positive("second shape", b)?;
    DensityFn::new(
        move |x| {
            if x <= 0.0 || x >= 1.0 {
                return 0.0;
            }
            ((a - 1.0) * x.ln() + (b - 1.0) * (-x).ln_1p()).exp()
        },
        0.0,
        1.0,
    )
}

pub fn chi_squared(
    ctx: &mut InferenceContext,
    bits: u32,
    k: f64,
    ll: f64,
    ul: f64,
) -> Result<BitVectorDist> {
    positive("degrees of freedom", k)?;
    gamma(ctx, bits, k / 2.0, 0.5, ll, ul)
}

/// Laplace with location `mu`. When `mu` falls on a dyadic split of the
/// interval every piece is an exact exponential, so the result is sound;
/// at the midpoint it uses `2(bits − 1) + 1` flips.
pub fn laplace(
    ctx: &mut InferenceContext,
    bits: u32,
    mu: f64,
    scale: f64,
    ll: f64,
    ul: f64,
) -> Result<BitVectorDist> {
    positive("scale", scale)?;
    let width = ul - ll;
    log2_exact(width)?;
    let density = laplace_density(mu, scale, ll, ul)?;
    let mut pieces = 1u32;
    while pieces.trailing_zeros() <= bits {
        let w = width / pieces as f64;
        let k = (mu - ll) / w;
        if mu <= ll || mu >= ul || k.fract() == 0.0 {
            let fits = fit_pieces(
                &density,
                bits,
                PieceSpec::new(pieces, PieceKind::Exponential),
            )?;
            let exact: Vec<PieceFit> = fits
                .into_iter()
                .map(|f| {
                    let shape = match f.shape {
                        PieceShape::Exponential { .. } => {
                            let side = if f.lo >= mu { -1.0 } else { 1.0 };
                            PieceShape::Exponential {
                                beta: side * f.width / scale,
                            }
                        }
                        s => s,
                    };
                    PieceFit { shape, ..f }
                })
                .collect();
            return assemble(ctx, bits, ll, width, &exact);
        }
        pieces *= 2;
    }
    bitblast(ctx, bits, &density, PieceSpec::default().clamped(bits))
}

pub fn laplace_density(mu: f64, scale: f64, ll: f64, ul: f64) -> Result<DensityFn> {
    positive("scale", scale)?;
    Ok(
        DensityFn::new(move |x| (-(x - mu).abs() / scale).exp(), ll, ul)?
            .with_mass(move |a, b| laplace_mass(mu, scale, a, b)),
    )
}

/// `∫_a^b e^{−|x−μ|/s} dx` without cancellation.
fn laplace_mass(mu: f64, s: f64, a: f64, b: f64) -> f64 {
    let side = |a: f64, b: f64| {
        // both endpoints at or above mu
        let (da, db) = ((a - mu) / s, (b - mu) / s);
        s * (-da).exp() * -(-(db - da)).exp_m1()
    };
    if a >= mu {
        side(a, b)
    } else if b <= mu {
        side(2.0 * mu - b, 2.0 * mu - a)
    } else {
        side(mu, b) + side(mu, 2.0 * mu - a)
    }
}

/// The default range for a Gaussian: `[μ − 8σ, μ + 8σ)` widened to a
/// power-of-two width whose lower end sits on a multiple of half the width.
pub fn gaussian_range(mu: f64, sigma: f64) -> Result<(f64, f64)> {
    positive("standard deviation", sigma)?;
    if !mu.is_finite() {
        return Err(Error::InvalidParameter(format!("mean {mu} is not finite")));
    }
    let (want_lo, want_hi) = (mu - 8.0 * sigma, mu + 8.0 * sigma);
    let mut width = (16.0 * sigma).log2().ceil().exp2();
    loop {
        let half = width / 2.0;
        let lo = (want_lo / half).floor() * half;
        if lo + width >= want_hi {
            return Ok((lo, lo + width));
        }
        width *= 2.0;
    }
}

pub fn gaussian_density(mu: f64, sigma: f64, ll: f64, ul: f64) -> Result<DensityFn> {
    positive("standard deviation", sigma)?;
    DensityFn::new(
        move |x| {
            let z = (x - mu) / sigma;
            (-0.5 * z * z).exp()
        },
        ll,
        ul,
    )
}

/// Gaussian approximated with the default 16 exponential pieces.
pub fn gaussian(
    ctx: &mut InferenceContext,
    bits: u32,
    mu: f64,
    sigma: f64,
    ll: f64,
    ul: f64,
) -> Result<BitVectorDist> {
    gaussian_with(
        ctx,
        bits,
        mu,
        sigma,
        ll,
        ul,
        PieceSpec::default().clamped(bits),
    )
}

pub fn gaussian_with(
    ctx: &mut InferenceContext,
    bits: u32,
    mu: f64,
    sigma: f64,
    ll: f64,
    ul: f64,
    spec: PieceSpec,
) -> Result<BitVectorDist> {
    let density = gaussian_density(mu, sigma, ll, ul)?;
    bitblast(ctx, bits, &density, spec)
}

/// Student-t with `nu` degrees of freedom, approximated piecewise.
pub fn student_t(
    ctx: &mut InferenceContext,
    bits: u32,
    nu: f64,
    ll: f64,
    ul: f64,
) -> Result<BitVectorDist> {
    let density = student_t_density(nu, ll, ul)?;
    bitblast(ctx, bits, &density, PieceSpec::default().clamped(bits))
}

pub fn student_t_density(nu: f64, ll: f64, ul: f64) -> Result<DensityFn> {
    positive("degrees of freedom", nu)?;
    DensityFn::new(
        move |x| (-(nu + 1.0) / 2.0 * (x * x / nu).ln_1p()).exp(),
        ll,
        ul,
    )
}

fn positive(what: &str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!(
            "{what} must be positive, got {v}"
        )))
    }
}

/// Flip count of [`laplace`] at the midpoint split.
pub fn laplace_flip_count(bits: u32) -> u64 {
    2 * (bits as u64 - 1) + 1
}
