//! Log-space numerics shared by every module.
//!
//! Transcendental functions are routed through `libm` so the crate behaves
//! identically with and without `std`.

/// Natural log of the Gamma function.
#[inline]
pub fn ln_gamma(x: f64) -> f64 {
    libm::lgamma(x)
}

#[inline]
pub fn exp(x: f64) -> f64 {
    libm::exp(x)
}

#[inline]
pub fn ln(x: f64) -> f64 {
    libm::log(x)
}

#[inline]
pub fn ln_1p(x: f64) -> f64 {
    libm::log1p(x)
}

#[inline]
pub fn sqrt(x: f64) -> f64 {
    libm::sqrt(x)
}

#[inline]
pub fn powf(x: f64, y: f64) -> f64 {
    libm::pow(x, y)
}

/// log(exp(a) + exp(b)) without leaving log space.
#[inline]
pub fn log_add_exp(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY && b == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    if a > b {
        a + ln_1p(exp(b - a))
    } else {
        b + ln_1p(exp(a - b))
    }
}

/// log Σ exp(x_i), stabilised by the running maximum.
pub fn log_sum_exp(values: &[f64]) -> f64 {
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    let sum: f64 = values.iter().map(|&v| exp(v - max)).sum();
    max + ln(sum)
}

/// Shifts `log_weights` in place so that Σ exp(w_i) = 1.
///
/// Returns the log normalising constant that was subtracted.
pub fn normalize_log_weights(log_weights: &mut [f64]) -> f64 {
    let z = log_sum_exp(log_weights);
    if z.is_finite() {
        for w in log_weights.iter_mut() {
            *w -= z;
        }
    }
    z
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn log_add_exp_matches_direct() {
        let got = log_add_exp(ln(0.25), ln(0.5));
        assert!((got - ln(0.75)).abs() < 1e-14);
    }

    #[test]
    fn log_add_exp_handles_extremes() {
        assert_eq!(
            log_add_exp(f64::NEG_INFINITY, f64::NEG_INFINITY),
            f64::NEG_INFINITY
        );
        assert!((log_add_exp(f64::NEG_INFINITY, 2.0) - 2.0).abs() < 1e-15);
        // Far apart in magnitude: the small term must not underflow the big one.
        let got = log_add_exp(1000.0, 990.0);
        assert!((got - (1000.0 + ln_1p(exp(-10.0)))).abs() < 1e-12);
    }

    #[test]
    fn log_sum_exp_stability() {
        let vals = vec![-1200.0, -1200.5, -1199.0];
        let got = log_sum_exp(&vals);
        let expected = -1199.0 + ln(exp(-1.0) + exp(-1.5) + 1.0);
        assert!((got - expected).abs() < 1e-12);
    }

    #[test]
    fn normalize_sums_to_one() {
        let mut w = vec![-500.0, -501.0, -502.3];
        normalize_log_weights(&mut w);
        let total: f64 = w.iter().map(|&x| exp(x)).sum();
        assert!((total - 1.0).abs() < 1e-12);
    }

    #[test]
    fn ln_gamma_integers() {
        // Γ(n) = (n-1)!
        assert!((ln_gamma(1.0)).abs() < 1e-14);
        assert!((ln_gamma(2.0)).abs() < 1e-14);
        assert!((ln_gamma(3.0) - ln(2.0)).abs() < 1e-13);
        assert!((ln_gamma(5.0) - ln(24.0)).abs() < 1e-12);
    }
}
