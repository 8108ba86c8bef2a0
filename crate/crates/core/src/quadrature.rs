//! Adaptive Simpson quadrature.

use crate::error::{Error, Result};

/// Relative tolerance used for piece and interval masses.
pub const REL_TOL: f64 = 1e-12;
/// Maximum bisection depth.
pub const MAX_DEPTH: u32 = 60;
const INITIAL_PANELS: usize = 16;
const MAX_EVALS: usize = 20_000_000;

/// `∫_a^b f` to relative tolerance [`REL_TOL`].
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64) -> Result<f64> {
    integrate_tol(f, a, b, REL_TOL)
}

pub fn integrate_tol<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, rel_tol: f64) -> Result<f64> {
    if !(a.is_finite() && b.is_finite()) {
        return Err(Error::Quadrature(format!(
            "bounds [{a}, {b}] are not finite"
        )));
    }
    if a == b {
        return Ok(0.0);
    }
    let mut evals = 0usize;
    let mut eval = |x: f64| -> Result<f64> {
        evals += 1;
        if evals > MAX_EVALS {
            return Err(Error::Quadrature("evaluation budget exhausted".into()));
        }
        let y = f(x);
        if !y.is_finite() || y < 0.0 {
            return Err(Error::Quadrature(format!("density is {y} at {x}")));
        }
        Ok(y)
    };
    // A coarse first pass sets the absolute target for the refinement.
    let h = (b - a) / INITIAL_PANELS as f64;
    let mut panels = Vec::with_capacity(INITIAL_PANELS);
    let mut coarse = 0.0;
    for i in 0..INITIAL_PANELS {
        let lo = a + h * i as f64;
        let hi = if i + 1 == INITIAL_PANELS { b } else { lo + h };
        let mid = 0.5 * (lo + hi);
        let (fl, fm, fh) = (eval(lo)?, eval(mid)?, eval(hi)?);
        let s = (hi - lo) / 6.0 * (fl + 4.0 * fm + fh);
        coarse += s;
        panels.push((lo, hi, fl, fm, fh, s));
    }
    let tol = (rel_tol * coarse.abs()).max(f64::MIN_POSITIVE);
    let mut total = 0.0;
    for (lo, hi, fl, fm, fh, s) in panels {
        total += refine(
            &mut eval,
            lo,
            hi,
            fl,
            fm,
            fh,
            s,
            tol / INITIAL_PANELS as f64,
            MAX_DEPTH,
        )?;
    }
    Ok(total)
}

#[allow(clippy::too_many_arguments)]
fn refine<E: FnMut(f64) -> Result<f64>>(
    eval: &mut E,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> Result<f64> {
    let m = 0.5 * (a + b);
    let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
    let (flm, frm) = (eval(lm)?, eval(rm)?);
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * tol || m <= a || m >= b {
        return Ok(left + right + delta / 15.0);
    }
    Ok(refine(eval, a, m, fa, flm, fm, left, tol / 2.0, depth - 1)?
        + refine(eval, m, b, fm, frm, fb, right, tol / 2.0, depth - 1)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomial_is_exact() {
        let v = integrate(|x| x * x * x, 0.0, 2.0).unwrap();
        assert!((v - 4.0).abs() < 1e-13);
    }

    #[test]
    fn exponential_to_tolerance() {
        let v = integrate(|x: f64| (-3.0 * x).exp(), 0.0, 1.0).unwrap();
        let exact = (1.0 - f64::exp(-3.0)) / 3.0;
        assert!((v - exact).abs() < 1e-13 * exact);
    }

    #[test]
    fn gaussian_mass() {
        let pdf = |x: f64| (-0.5 * x * x).exp() / (2.0 * std::f64::consts::PI).sqrt();
        let v = integrate(pdf, -8.0, 8.0).unwrap();
        assert!((v - 1.0).abs() < 1e-12);
    }

    #[test]
    fn negative_density_is_rejected() {
        assert!(integrate(|x| x - 0.5, 0.0, 1.0).is_err());
    }
}
