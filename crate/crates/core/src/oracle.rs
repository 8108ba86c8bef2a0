//! Ground truth for tests: explicit discretizations, the naive closure that
//! spends one flip per grid point, and closed-form posteriors.
//!
//! Nothing here calls into the compiler's numerics; the gamma integrals use
//! their own antiderivative and series.

use std::fmt::Write as _;

use crate::bdd::{Bdd, NodeRef};
use crate::compiler::{interval_format, log2_exact, place_on_interval};
use crate::context::InferenceContext;
use crate::error::{Error, Result};
use crate::fixedpoint::{BitVectorDist, FixedPointFormat};
use crate::library::DensityFn;
use crate::numeric::compensated_sum;

const MAX_DISCRETIZE_BITS: u32 = 24;
const MAX_CLOSURE_BITS: u32 = 12;

/// Exact per-interval masses of a density on `[lo, lo + width)`.
#[derive(Debug, Clone, PartialEq)]
pub struct NaiveDiscretization {
    masses: Vec<f64>,
    lo: f64,
    width: f64,
}

impl NaiveDiscretization {
    pub fn new(masses: Vec<f64>, lo: f64, width: f64) -> Result<Self> {
        if masses.is_empty() || !masses.len().is_power_of_two() {
            return Err(Error::InvalidParameter(format!(
                "{} masses is not a power of two",
                masses.len()
            )));
        }
        if masses.iter().any(|m| !(m.is_finite() && *m >= 0.0)) {
            return Err(Error::InvalidParameter(
                "masses must be finite and nonnegative".into(),
            ));
        }
        let total = compensated_sum(masses.iter().copied());
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::WeightSum(total));
        }
        log2_exact(width)?;
        Ok(NaiveDiscretization { masses, lo, width })
    }

    pub fn masses(&self) -> &[f64] {
        &self.masses
    }

    pub fn bits(&self) -> u32 {
        self.masses.len().trailing_zeros()
    }

    pub fn lo(&self) -> f64 {
        self.lo
    }

    pub fn width(&self) -> f64 {
        self.width
    }

    pub fn step(&self) -> f64 {
        self.width / self.masses.len() as f64
    }

    /// Left end of grid interval `k`.
    pub fn point(&self, k: usize) -> f64 {
        self.lo + k as f64 * self.step()
    }

    pub fn mean(&self) -> f64 {
        compensated_sum(
            self.masses
                .iter()
                .enumerate()
                .map(|(k, m)| m * self.point(k)),
        )
    }

    pub fn variance(&self) -> f64 {
        let mu = self.mean();
        compensated_sum(
            self.masses
                .iter()
                .enumerate()
                .map(|(k, m)| m * (self.point(k) - mu).powi(2)),
        )
    }

    /// Total-variation distance to another mass vector on the same grid.
    pub fn total_variation(&self, other: &[f64]) -> Result<f64> {
        if other.len() != self.masses.len() {
            return Err(Error::InvalidParameter(format!(
                "grid sizes differ: {} vs {}",
                self.masses.len(),
                other.len()
            )));
        }
        Ok(0.5 * compensated_sum(self.masses.iter().zip(other).map(|(a, b)| (a - b).abs())))
    }

    /// Sums adjacent intervals down to `bits` bits.
    pub fn coarsen(&self, bits: u32) -> Result<Self> {
        if bits > self.bits() {
            return Err(Error::InvalidParameter(format!(
                "cannot refine {} bits to {bits}",
                self.bits()
            )));
        }
        let group = 1usize << (self.bits() - bits);
        let masses = self
            .masses
            .chunks(group)
            .map(|c| compensated_sum(c.iter().copied()))
            .collect();
        Ok(NaiveDiscretization {
            masses,
            lo: self.lo,
            width: self.width,
        })
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("value,probability\n");
        for (k, m) in self.masses.iter().enumerate() {
            let _ = writeln!(out, "{},{}", self.point(k), m);
        }
        out
    }
}

fn check_bits(b: u32, max: u32) -> Result<()> {
    if b > max {
        return Err(Error::ResourceLimit(format!(
            "2^{b} grid points exceeds 2^{max}"
        )));
    }
    Ok(())
}

fn normalized(raw: Vec<f64>, lo: f64, width: f64) -> Result<NaiveDiscretization> {
    let total = compensated_sum(raw.iter().copied());
    if !(total > 0.0 && total.is_finite()) {
        return Err(Error::InvalidParameter(format!("total mass is {total}")));
    }
    NaiveDiscretization::new(raw.iter().map(|m| m / total).collect(), lo, width)
}

/// Discretizes `density` over its support into `2^b` intervals.
pub fn naive_discretize(density: &DensityFn, b: u32) -> Result<NaiveDiscretization> {
    check_bits(b, MAX_DISCRETIZE_BITS)?;
    let (lo, hi) = density.support();
    let width = hi - lo;
    let n = 1usize << b;
    let step = width / n as f64;
    let raw = (0..n)
        .map(|k| {
            let a = lo + k as f64 * step;
            density.mass(a, a + step)
        })
        .collect::<Result<Vec<_>>>()?;
    normalized(raw, lo, width)
}

/// Discretizes `((x − ll)/(ul − ll))^α e^{βx}` on `[ll, ul)` with exact
/// interval integrals.
pub fn naive_discretize_gamma(
    alpha: u32,
    beta: f64,
    b: u32,
    ll: f64,
    ul: f64,
) -> Result<NaiveDiscretization> {
    check_bits(b, MAX_DISCRETIZE_BITS)?;
    if alpha > 8 {
        return Err(Error::InvalidParameter(format!("alpha {alpha} exceeds 8")));
    }
    let width = ul - ll;
    log2_exact(width)?;
    // On the unit interval the density is t^α e^{β·width·t}.
    let beta = beta * width;
    let n = 1usize << b;
    let raw = (0..n)
        .map(|k| power_exp_integral(alpha, beta, k as f64 / n as f64, (k + 1) as f64 / n as f64))
        .collect();
    normalized(raw, ll, width)
}

/// `∫_a^b t^k e^{βt} dt` for `0 ≤ a ≤ b ≤ 1`.
pub fn power_exp_integral(k: u32, beta: f64, a: f64, b: f64) -> f64 {
    if beta.abs() <= 1.0 {
        // Σ_n β^n/n! ∫ t^{k+n}
        let mut sum = 0.0;
        let mut coef = 1.0;
        for n in 0..60u32 {
            let p = (k + n + 1) as i32;
            let term = coef * (b.powi(p) - a.powi(p)) / p as f64;
            sum += term;
            if term.abs() <= 1e-18 * sum.abs() && n > 2 {
                break;
            }
            coef *= beta / (n + 1) as f64;
        }
        return sum;
    }
    // Repeated integration by parts:
    // ∫ t^k e^{βt} = e^{βt} Σ_j (−1)^j k!/(k−j)! t^{k−j} / β^{j+1}
    let anti = |t: f64| {
        let mut s = 0.0;
        let mut fall = 1.0;
        for j in 0..=k {
            let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
            s += sign * fall * t.powi((k - j) as i32) / beta.powi(j as i32 + 1);
            fall *= (k - j) as f64;
        }
        s
    };
    // Factor out the larger exponential to keep both terms in range.
    let m = (beta * a).max(beta * b);
    ((beta * b - m).exp() * anti(b) - (beta * a - m).exp() * anti(a)) * m.exp()
}

/// The naive closure: `2^b − 1` flips chosen so that value `i` comes out
/// with probability `masses[i]`.
pub fn naive_closure(
    ctx: &mut InferenceContext,
    disc: &NaiveDiscretization,
) -> Result<BitVectorDist> {
    let b = disc.bits();
    check_bits(b, MAX_CLOSURE_BITS)?;
    if b == 0 {
        return Err(Error::InvalidParameter(
            "closure needs at least one bit".into(),
        ));
    }
    interval_format(b, disc.lo(), disc.width())?;
    let n = disc.masses().len();
    let params = closure_params(disc.masses());
    let flips = params
        .iter()
        .map(|&p| ctx.flip(p).map(|f| f.node()))
        .collect::<Result<Vec<_>>>()?;
    let bits = (0..b)
        .map(|j| {
            let bit_of = |i: usize| Bdd::constant((i >> (b - 1 - j)) & 1 == 1);
            let mut acc: NodeRef = bit_of(n - 1);
            for i in (0..n - 1).rev() {
                acc = ctx.bdd_mut().ite(flips[i], bit_of(i), acc);
            }
            acc
        })
        .collect();
    let unit = ctx.dist(bits, FixedPointFormat::unit(b)?);
    place_on_interval(ctx, &unit, disc.lo(), disc.width())
}

/// `mass_i / (1 − Σ_{j<i} mass_j)` for each value but the last.
pub fn closure_params(masses: &[f64]) -> Vec<f64> {
    let n = masses.len();
    let mut params = Vec::with_capacity(n.saturating_sub(1));
    let mut below = 0.0;
    let mut comp = 0.0;
    for &m in &masses[..n.saturating_sub(1)] {
        let rest = 1.0 - (below + comp);
        params.push(if rest > 0.0 {
            (m / rest).clamp(0.0, 1.0)
        } else {
            0.0
        });
        // Neumaier update of the running prefix sum
        let t = below + m;
        comp += if below.abs() >= m.abs() {
            (below - t) + m
        } else {
            (m - t) + below
        };
        below = t;
    }
    params
}

/// Posterior mean and variance of a Gaussian mean with a Gaussian prior
/// and known observation noise.
pub fn conjugate_gaussian(
    mu0: f64,
    sigma0: f64,
    obs_sigma: f64,
    observations: &[f64],
) -> (f64, f64) {
    let prior_prec = 1.0 / (sigma0 * sigma0);
    let obs_prec = 1.0 / (obs_sigma * obs_sigma);
    let prec = prior_prec + obs_prec * observations.len() as f64;
    let mean = (prior_prec * mu0 + obs_prec * observations.iter().sum::<f64>()) / prec;
    (mean, 1.0 / prec)
}

/// Marginal of `mu1` in the two-mean mixture model: `mu1, mu2` uniform on
/// `[lo, hi)`, and each datum drawn from `N(mu1, σ)` with probability `w`
/// or `N(mu2, σ)` otherwise. Enumerates a `2^b_ref × 2^b_ref` grid at cell
/// midpoints.
pub fn two_mean_mixture_reference(
    data: &[f64],
    w: f64,
    sigma: f64,
    lo: f64,
    hi: f64,
    b_ref: u32,
) -> Result<NaiveDiscretization> {
    check_bits(b_ref, 14)?;
    let n = 1usize << b_ref;
    let step = (hi - lo) / n as f64;
    let mids: Vec<f64> = (0..n).map(|k| lo + (k as f64 + 0.5) * step).collect();
    let lik = |m: f64, d: f64| {
        let z = (d - m) / sigma;
        (-0.5 * z * z).exp()
    };
    let first: Vec<Vec<f64>> = data
        .iter()
        .map(|&d| mids.iter().map(|&m| w * lik(m, d)).collect())
        .collect();
    let second: Vec<Vec<f64>> = data
        .iter()
        .map(|&d| mids.iter().map(|&m| (1.0 - w) * lik(m, d)).collect())
        .collect();
    let raw: Vec<f64> = (0..n)
        .map(|i| {
            compensated_sum((0..n).map(|j| {
                first
                    .iter()
                    .zip(&second)
                    .map(|(f, s)| f[i] + s[j])
                    .product::<f64>()
            }))
        })
        .collect();
    normalized(raw, lo, hi - lo)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::query::pr;

    #[test]
    fn uniform_two_bits() {
        let d = naive_discretize_gamma(0, 0.0, 2, 0.0, 1.0).unwrap();
        assert_eq!(d.masses(), &[0.25; 4]);
    }

    #[test]
    fn linear_two_bits() {
        let d = naive_discretize_gamma(1, 0.0, 2, 0.0, 1.0).unwrap();
        for (m, want) in d.masses().iter().zip([1.0, 3.0, 5.0, 7.0]) {
            assert!((m - want / 16.0).abs() < 1e-15);
        }
    }

    #[test]
    fn exponential_one_bit() {
        let d = naive_discretize_gamma(0, 1.0, 1, 0.0, 1.0).unwrap();
        let e = std::f64::consts::E;
        assert!((d.masses()[0] - (e.sqrt() - 1.0) / (e - 1.0)).abs() < 1e-15);
        assert!((d.masses()[1] - (e - e.sqrt()) / (e - 1.0)).abs() < 1e-15);
    }

    #[test]
    fn exact_and_quadrature_paths_agree() {
        for alpha in 0..=3u32 {
            for beta in [-5.0, -1.3, -0.2, 0.0, 0.7, 5.0] {
                for b in [1u32, 4, 10] {
                    let exact = naive_discretize_gamma(alpha, beta, b, 0.0, 1.0).unwrap();
                    let density = DensityFn::new(
                        move |x: f64| x.powi(alpha as i32) * (beta * x).exp(),
                        0.0,
                        1.0,
                    )
                    .unwrap();
                    let quad = naive_discretize(&density, b).unwrap();
                    for (e, q) in exact.masses().iter().zip(quad.masses()) {
                        assert!(
                            (e - q).abs() < 1e-12,
                            "a={alpha} beta={beta} b={b}: {e} vs {q}"
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn series_and_antiderivative_meet() {
        for k in 0..=4 {
            let inside = power_exp_integral(k, 1.0, 0.2, 0.9);
            let outside = power_exp_integral(k, 1.0 + 1e-12, 0.2, 0.9);
            assert!((inside - outside).abs() < 1e-11);
        }
    }

    #[test]
    fn closure_parameters() {
        let p = closure_params(&[0.25; 4]);
        let want = [0.25, 1.0 / 3.0, 0.5];
        for (a, b) in p.iter().zip(want) {
            assert!((a - b).abs() < 1e-15);
        }
        assert_eq!(closure_params(&[1.0, 0.0, 0.0, 0.0])[0], 1.0);
    }

    #[test]
    fn closure_reproduces_masses() {
        let raw = [0.05, 0.2, 0.0, 0.1, 0.3, 0.15, 0.12, 0.08];
        let disc = NaiveDiscretization::new(raw.to_vec(), -4.0, 8.0).unwrap();
        let mut ctx = InferenceContext::new();
        let x = naive_closure(&mut ctx, &disc).unwrap();
        assert_eq!(ctx.flip_count(), 7);
        let table = pr(&mut ctx, &x).unwrap();
        for (k, want) in raw.iter().enumerate() {
            assert!((table.prob(disc.point(k)) - want).abs() < 1e-12);
        }
    }

    #[test]
    fn conjugate_update() {
        let (m, v) = conjugate_gaussian(0.0, 1.0, 1.0, &[8.0, 9.0]);
        assert!((m - 17.0 / 3.0).abs() < 1e-15);
        assert!((v - 1.0 / 3.0).abs() < 1e-15);
        assert_eq!(conjugate_gaussian(1.5, 2.0, 1.0, &[]), (1.5, 4.0));
        assert_eq!(conjugate_gaussian(1.5, 2.0, 1.0, &[1.5]).0, 1.5);
    }

    #[test]
    fn guards() {
        assert!(matches!(
            naive_discretize_gamma(0, 0.0, 25, 0.0, 1.0),
            Err(Error::ResourceLimit(_))
        ));
        let disc = naive_discretize_gamma(0, 0.0, 13, 0.0, 1.0).unwrap();
        let mut ctx = InferenceContext::new();
        assert!(matches!(
            naive_closure(&mut ctx, &disc),
            Err(Error::ResourceLimit(_))
        ));
    }

    #[test]
    fn mixture_reference_is_bimodal() {
        let data = [5.0, 5.0, 5.0, 5.0, 5.0, 5.0, -5.0, -5.0, -5.0];
        let r = two_mean_mixture_reference(&data, 2.0 / 3.0, 1.0, -16.0, 16.0, 9).unwrap();
        let near = |c: f64| {
            (0..r.masses().len())
                .filter(|&k| (r.point(k) + r.step() / 2.0 - c).abs() <= 1.0)
                .map(|k| r.masses()[k])
                .sum::<f64>()
        };
        assert!(near(5.0) > near(-5.0));
        assert!(near(-5.0) > 0.05);
    }

    #[test]
    fn csv_and_coarsen() {
        let d = naive_discretize_gamma(1, 0.0, 3, 0.0, 1.0).unwrap();
        assert!(d.to_csv().starts_with("value,probability\n0,"));
        let c = d.coarsen(1).unwrap();
        assert!((c.masses()[0] - 0.25).abs() < 1e-15);
        assert!(d.coarsen(4).is_err());
        assert!(d.total_variation(c.masses()).is_err());
    }
}
