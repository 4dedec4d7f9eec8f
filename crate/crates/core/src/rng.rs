//! Sampling helpers on top of any [`RngCore`].
//!
//! The generators and samplers only consume raw uniform bits, so results are
//! reproducible for a fixed RNG stream regardless of platform.

use rand_core::RngCore;

use crate::numeric;

/// Uniform draw from [0, 1) with 53 bits of precision.
#[inline]
pub fn uniform_f64<R: RngCore + ?Sized>(rng: &mut R) -> f64 {
    (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// Uniform draw from (0, 1]; safe as a logarithm argument.
#[inline]
pub fn uniform_open_f64<R: RngCore + ?Sized>(rng: &mut R) -> f64 {
    1.0 - uniform_f64(rng)
}

/// Uniform integer in `[0, n)`. Uses rejection to avoid modulo bias.
pub fn uniform_usize<R: RngCore + ?Sized>(rng: &mut R, n: usize) -> usize {
    assert!(n > 0, "uniform_usize over empty range");
    let n = n as u64;
    let zone = u64::MAX - (u64::MAX % n);
    loop {
        let v = rng.next_u64();
        if v < zone {
            return (v % n) as usize;
        }
    }
}

/// Standard normal via Box-Muller.
pub fn standard_normal<R: RngCore + ?Sized>(rng: &mut R) -> f64 {
    let u1 = uniform_open_f64(rng);
    let u2 = uniform_f64(rng);
    numeric::sqrt(-2.0 * numeric::ln(u1)) * libm::cos(2.0 * core::f64::consts::PI * u2)
}

/// Gamma(shape, rate) via Marsaglia-Tsang, with the shape<1 boost.
pub fn gamma<R: RngCore + ?Sized>(rng: &mut R, shape: f64, rate: f64) -> f64 {
    assert!(
        shape > 0.0 && rate > 0.0,
        "gamma parameters must be positive"
    );
    if shape < 1.0 {
        // Boost: Gamma(a) = Gamma(a+1) * U^{1/a}
        let u = uniform_open_f64(rng);
        return gamma(rng, shape + 1.0, rate) * numeric::powf(u, 1.0 / shape);
    }
    let d = shape - 1.0 / 3.0;
    let c = 1.0 / numeric::sqrt(9.0 * d);
    loop {
        let x = standard_normal(rng);
        let v = 1.0 + c * x;
        if v <= 0.0 {
            continue;
        }
        let v = v * v * v;
        let u = uniform_open_f64(rng);
        if numeric::ln(u) < 0.5 * x * x + d - d * v + d * numeric::ln(v) {
            return d * v / rate;
        }
    }
}

/// Beta(1, alpha) by inverse CDF: F(v) = 1 - (1-v)^alpha.
pub fn beta_one<R: RngCore + ?Sized>(rng: &mut R, alpha: f64) -> f64 {
    assert!(alpha > 0.0);
    1.0 - numeric::powf(uniform_open_f64(rng), 1.0 / alpha)
}

/// Samples an index proportional to `exp(log_weights[i])`.
///
/// Weights need not be normalised.
pub fn categorical_from_log_weights<R: RngCore + ?Sized>(
    rng: &mut R,
    log_weights: &[f64],
) -> usize {
    assert!(!log_weights.is_empty());
    let z = numeric::log_sum_exp(log_weights);
    assert!(z.is_finite(), "categorical over all-zero weights");
    let target = uniform_f64(rng);
    let mut acc = 0.0;
    for (i, &lw) in log_weights.iter().enumerate() {
        acc += numeric::exp(lw - z);
        if target < acc {
            return i;
        }
    }
    log_weights.len() - 1
}

/// Fisher-Yates shuffle.
pub fn shuffle<R: RngCore + ?Sized, T>(rng: &mut R, items: &mut [T]) {
    for i in (1..items.len()).rev() {
        let j = uniform_usize(rng, i + 1);
        items.swap(i, j);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;
    use alloc::vec::Vec;
    use rand_core::SeedableRng;
    use rand_pcg::Pcg64Mcg;

    #[test]
    fn uniform_in_range() {
        let mut rng = Pcg64Mcg::seed_from_u64(1);
        for _ in 0..1000 {
            let u = uniform_f64(&mut rng);
            assert!((0.0..1.0).contains(&u));
        }
    }

    #[test]
    fn normal_moments() {
        let mut rng = Pcg64Mcg::seed_from_u64(2);
        let n = 200_000;
        let draws: Vec<f64> = (0..n).map(|_| standard_normal(&mut rng)).collect();
        let mean = draws.iter().sum::<f64>() / n as f64;
        let var = draws.iter().map(|x| x * x).sum::<f64>() / n as f64 - mean * mean;
        assert!(mean.abs() < 0.01, "mean {mean}");
        assert!((var - 1.0).abs() < 0.02, "var {var}");
    }

    #[test]
    fn gamma_moments() {
        let mut rng = Pcg64Mcg::seed_from_u64(3);
        let (shape, rate) = (2.0, 0.5);
        let n = 200_000;
        let draws: Vec<f64> = (0..n).map(|_| gamma(&mut rng, shape, rate)).collect();
        let mean = draws.iter().sum::<f64>() / n as f64;
        let var = draws.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n as f64;
        // Gamma(2, rate 0.5): mean 4, variance 8.
        assert!((mean - 4.0).abs() < 0.05, "mean {mean}");
        assert!((var - 8.0).abs() < 0.3, "var {var}");
    }

    #[test]
    fn gamma_small_shape() {
        let mut rng = Pcg64Mcg::seed_from_u64(4);
        let n = 100_000;
        let mean = (0..n).map(|_| gamma(&mut rng, 0.5, 1.0)).sum::<f64>() / n as f64;
        assert!((mean - 0.5).abs() < 0.02, "mean {mean}");
    }

    #[test]
    fn beta_one_mean() {
        let mut rng = Pcg64Mcg::seed_from_u64(5);
        let alpha = 20.0;
        let n = 100_000;
        let mean = (0..n).map(|_| beta_one(&mut rng, alpha)).sum::<f64>() / n as f64;
        // Beta(1, 20) has mean 1/21.
        assert!((mean - 1.0 / 21.0).abs() < 0.002, "mean {mean}");
    }

    #[test]
    fn categorical_frequencies() {
        let mut rng = Pcg64Mcg::seed_from_u64(6);
        let lw = vec![numeric::ln(0.7), numeric::ln(0.2), numeric::ln(0.1)];
        let mut counts = [0usize; 3];
        let n = 100_000;
        for _ in 0..n {
            counts[categorical_from_log_weights(&mut rng, &lw)] += 1;
        }
        assert!((counts[0] as f64 / n as f64 - 0.7).abs() < 0.01);
        assert!((counts[1] as f64 / n as f64 - 0.2).abs() < 0.01);
    }

    #[test]
    fn shuffle_is_seed_deterministic() {
        let mut a: Vec<u32> = (0..50).collect();
        let mut b: Vec<u32> = (0..50).collect();
        shuffle(&mut Pcg64Mcg::seed_from_u64(9), &mut a);
        shuffle(&mut Pcg64Mcg::seed_from_u64(9), &mut b);
        assert_eq!(a, b);
        let mut c: Vec<u32> = (0..50).collect();
        shuffle(&mut Pcg64Mcg::seed_from_u64(10), &mut c);
        assert_ne!(a, c);
    }
}
