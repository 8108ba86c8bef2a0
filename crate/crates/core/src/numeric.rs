//! Small numerical kernels shared by the compiler and the oracles.

/// `e^x / (1 + e^x)` without overflow; `±∞` map to `1` and `0`.
pub fn logistic(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// `I_m(δ, β) = ∫_0^δ s^m e^{βs} ds`.
///
/// Uses the power series for small `|βδ|` and the integration-by-parts
/// recurrence otherwise.
pub fn moment_integral(m: u32, delta: f64, beta: f64) -> f64 {
    let z = beta * delta;
    if z.abs() <= 4.0 {
        // Σ_n β^n δ^{m+n+1} / (n! (m+n+1)) = δ^{m+1} Σ_n z^n / (n! (m+n+1))
        let mut term = 1.0;
        let mut sum = 0.0;
        for n in 0..200u32 {
            let add = term / (m + n + 1) as f64;
            sum += add;
            if add.abs() <= 1e-18 * sum.abs() && n > 4 {
                break;
            }
            term *= z / (n + 1) as f64;
        }
        return delta.powi(m as i32 + 1) * sum;
    }
    let e = z.exp();
    let mut acc = z.exp_m1() / beta;
    for k in 1..=m {
        acc = (delta.powi(k as i32) * e - k as f64 * acc) / beta;
    }
    acc
}

/// `∫_lo^hi t^m e^{βt} dt` via the shift `t = lo + s` and binomial expansion.
pub fn gamma_interval_integral(m: u32, beta: f64, lo: f64, hi: f64) -> f64 {
    let delta = hi - lo;
    let scale = (beta * lo).exp();
    let mut sum = 0.0;
    for j in 0..=m {
        let c = binomial(m, j) * lo.powi(j as i32);
        if c != 0.0 {
            sum += c * moment_integral(m - j, delta, beta);
        }
    }
    scale * sum
}

pub fn binomial(n: u32, k: u32) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    let mut r = 1.0;
    for i in 0..k {
        r = r * (n - i) as f64 / (i + 1) as f64;
    }
    r.round()
}

/// Neumaier-compensated sum.
pub fn compensated_sum<I: IntoIterator<Item = f64>>(values: I) -> f64 {
    let mut sum = 0.0f64;
    let mut comp = 0.0f64;
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            comp += (sum - t) + v;
        } else {
            comp += (v - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn logistic_is_stable() {
        assert_eq!(logistic(0.0), 0.5);
        assert_eq!(logistic(f64::INFINITY), 1.0);
        assert_eq!(logistic(f64::NEG_INFINITY), 0.0);
        assert!((logistic(-1000.0)).abs() < 1e-300);
        assert!((logistic(3.0) + logistic(-3.0) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn moment_integral_closed_forms() {
        // ∫_0^1 e^{βs} = (e^β − 1)/β
        for beta in [-7.0, -2.0, 0.5, 3.0, 9.0] {
            let exact = (f64::exp(beta) - 1.0) / beta;
            assert!((moment_integral(0, 1.0, beta) - exact).abs() < 1e-13 * exact.abs());
            // ∫_0^1 s e^{βs} = (e^β(β − 1) + 1)/β²
            let exact = (f64::exp(beta) * (beta - 1.0) + 1.0) / (beta * beta);
            let got = moment_integral(1, 1.0, beta);
            assert!(
                (got - exact).abs() < 1e-12 * exact.abs(),
                "{beta}: {got} vs {exact}"
            );
        }
        assert!((moment_integral(2, 0.5, 0.0) - 0.125 / 3.0).abs() < 1e-16);
    }

    #[test]
    fn series_and_recurrence_agree_at_switch() {
        for m in 0..6 {
            for beta in [-4.0, 4.0] {
                let a = moment_integral(m, 1.0, beta);
                let b = moment_integral(m, 1.0, beta * (1.0 + 1e-12));
                assert!((a - b).abs() < 1e-10 * a.abs());
            }
        }
    }

    #[test]
    fn interval_integral_polynomial() {
        // ∫_{0.25}^{0.5} t² dt = (0.125 − 0.015625)/3
        let exact = (0.125 - 0.015625) / 3.0;
        assert!((gamma_interval_integral(2, 0.0, 0.25, 0.5) - exact).abs() < 1e-16);
    }

    #[test]
    fn binomials() {
        assert_eq!(binomial(5, 2), 10.0);
        assert_eq!(binomial(3, 0), 1.0);
        assert_eq!(binomial(2, 3), 0.0);
    }

    #[test]
    fn compensated_sum_recovers_small_terms() {
        let v = [1e16, 1.0, -1e16];
        assert_eq!(compensated_sum(v), 1.0);
    }
}
