//! Poisson probabilities.
//!
//! `π_{≥t}(λ) = Pr(Po(λ) ≥ t)` is evaluated by summing point probabilities
//! away from the bulk: the upper tail directly when `t > λ`, otherwise the
//! complement of the lower head. Point probabilities use Loader's saddle-point
//! form `exp(-stirlerr(i) - bd0(i, λ)) / √(2πi)`, which keeps full relative
//! precision for `λ` and `i` in the tens of thousands where the naive
//! `e^{-λ} λ^i / i!` loses it.

use crate::{Error, Result};

const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_8;

/// `ln(n!) - (n + 1/2) ln n + n - ln √(2π)` for n = 1..=15.
const STIRLERR: [f64; 15] = [
    0.081_061_466_795_327_258,
    0.041_340_695_955_409_294,
    0.027_677_925_684_998_339,
    0.020_790_672_103_765_093,
    0.016_644_691_189_821_192,
    0.013_876_128_823_070_748,
    0.011_896_709_945_891_770,
    0.010_411_265_261_972_096,
    0.009_255_462_182_712_733,
    0.008_330_563_433_362_871,
    0.007_573_675_487_951_841,
    0.006_942_840_107_209_530,
    0.006_408_994_188_004_207,
    0.005_951_370_112_758_848,
    0.005_554_733_551_962_801,
];

/// Relative size at which a summed term no longer changes the total.
const SERIES_EPS: f64 = 1e-18;

fn stirlerr(n: u64) -> f64 {
    const S0: f64 = 1.0 / 12.0;
    const S1: f64 = 1.0 / 360.0;
    const S2: f64 = 1.0 / 1260.0;
    const S3: f64 = 1.0 / 1680.0;
    const S4: f64 = 1.0 / 1188.0;
    if n <= 15 {
        return STIRLERR[n as usize - 1];
    }
    let n = n as f64;
    let nn = n * n;
    if n > 500.0 {
        (S0 - S1 / nn) / n
    } else if n > 80.0 {
        (S0 - (S1 - S2 / nn) / nn) / n
    } else if n > 35.0 {
        (S0 - (S1 - (S2 - S3 / nn) / nn) / nn) / n
    } else {
        (S0 - (S1 - (S2 - (S3 - S4 / nn) / nn) / nn) / nn) / n
    }
}

/// Deviance term `x ln(x/m) + m - x`, accurate when `x ≈ m`.
fn bd0(x: f64, m: f64) -> f64 {
    if (x - m).abs() < 0.1 * (x + m) {
        let mut v = (x - m) / (x + m);
        let mut s = (x - m) * v;
        let mut ej = 2.0 * x * v;
        v *= v;
        for j in 1..1000 {
            ej *= v;
            let s1 = s + ej / (2 * j + 1) as f64;
            if s1 == s {
                return s1;
            }
            s = s1;
        }
        s
    } else {
        x * (x / m).ln() + m - x
    }
}

fn check_lambda(lambda: f64) -> Result<()> {
    if lambda.is_finite() && lambda >= 0.0 {
        Ok(())
    } else {
        Err(Error::domain(format!("Poisson mean must be finite and nonnegative, got {lambda}")))
    }
}

/// `Pr(Po(λ) = i)` without validation; `λ` must be finite and nonnegative.
pub(crate) fn pmf_unchecked(i: u64, lambda: f64) -> f64 {
    if lambda == 0.0 {
        return if i == 0 { 1.0 } else { 0.0 };
    }
    if i == 0 {
        return (-lambda).exp();
    }
    let x = i as f64;
    (-stirlerr(i) - bd0(x, lambda) - LN_SQRT_2PI - 0.5 * x.ln()).exp()
}

/// Sum of `pmf(i)` for `i ≥ t`, assuming `t > λ` so terms decrease.
fn upper_sum(t: u64, lambda: f64) -> f64 {
    let mut term = pmf_unchecked(t, lambda);
    let mut sum = term;
    let mut i = t;
    while term > SERIES_EPS * sum {
        i += 1;
        term *= lambda / i as f64;
        sum += term;
    }
    sum
}

/// Sum of `pmf(i)` for `i < t`, assuming `1 ≤ t ≤ λ + 1` so terms decrease
/// going downward from `t - 1`.
fn lower_sum(t: u64, lambda: f64) -> f64 {
    let mut i = t - 1;
    let mut term = pmf_unchecked(i, lambda);
    let mut sum = term;
    while i > 0 && term > SERIES_EPS * sum {
        term *= i as f64 / lambda;
        i -= 1;
        sum += term;
    }
    sum
}

/// `Pr(Po(λ) ≥ t)` without validation.
#[inline]
pub(crate) fn tail_unchecked(t: u64, lambda: f64) -> f64 {
    if t == 0 {
        return 1.0;
    }
    if lambda == 0.0 {
        return 0.0;
    }
    if t as f64 > lambda {
        upper_sum(t, lambda).min(1.0)
    } else {
        (1.0 - lower_sum(t, lambda)).max(0.0)
    }
}

/// `Pr(Po(λ) < t)` without validation; the complement of [`tail_unchecked`]
/// computed without cancellation on either side.
#[inline]
pub(crate) fn head_unchecked(t: u64, lambda: f64) -> f64 {
    if t == 0 {
        return 0.0;
    }
    if lambda == 0.0 {
        return 1.0;
    }
    if t as f64 > lambda {
        (1.0 - upper_sum(t, lambda)).max(0.0)
    } else {
        lower_sum(t, lambda).min(1.0)
    }
}

/// Poisson upper tail `π_{≥t}(λ) = Pr(Po(λ) ≥ t)`.
///
/// Absolute error is below `1e-14` for `λ` and `t` up to `1e4`.
pub fn poisson_tail(t: u64, lambda: f64) -> Result<f64> {
    check_lambda(lambda)?;
    Ok(tail_unchecked(t, lambda))
}

/// Poisson lower head `Pr(Po(λ) < t) = 1 - π_{≥t}(λ)`.
pub fn poisson_head(t: u64, lambda: f64) -> Result<f64> {
    check_lambda(lambda)?;
    Ok(head_unchecked(t, lambda))
}

/// Poisson point probability `Pr(Po(λ) = i)`.
pub fn poisson_pmf(i: u64, lambda: f64) -> Result<f64> {
    check_lambda(lambda)?;
    Ok(pmf_unchecked(i, lambda))
}

/// Inversion sampler for a fixed Poisson mean.
///
/// Holds the cumulative distribution up to the point where the remaining tail
/// is below `1e-17`; a uniform variate is mapped to the first index whose
/// cumulative probability exceeds it. Used in the Monte-Carlo inner loops
/// where each draw must be a pure function of a per-particle key.
#[derive(Debug, Clone)]
pub struct PoissonSampler {
    mean: f64,
    cdf: Vec<f64>,
}

impl PoissonSampler {
    pub fn new(mean: f64) -> Result<Self> {
        check_lambda(mean)?;
        let mut cdf = Vec::new();
        let mut acc = 0.0;
        let mut i = 0u64;
        loop {
            acc += pmf_unchecked(i, mean);
            cdf.push(acc);
            if i as f64 > mean && tail_unchecked(i + 1, mean) < 1e-17 {
                break;
            }
            i += 1;
        }
        Ok(Self { mean, cdf })
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    /// Maps `u ∈ [0, 1)` to a Poisson variate.
    #[inline]
    pub fn sample_from_unit(&self, u: f64) -> u64 {
        // Small means dominate; a short linear scan beats binary search there.
        if self.cdf.len() <= 32 {
            for (i, &c) in self.cdf.iter().enumerate() {
                if u < c {
                    return i as u64;
                }
            }
            return self.cdf.len() as u64;
        }
        self.cdf.partition_point(|&c| c <= u) as u64
    }

    pub fn sample<R: rand::Rng + ?Sized>(&self, rng: &mut R) -> u64 {
        self.sample_from_unit(rng.random::<f64>())
    }
}
