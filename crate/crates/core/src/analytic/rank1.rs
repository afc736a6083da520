//! The rank-1 power-law kernel `κ(x, y) = c/√(xy)` on `(0, 1]`.
//!
//! The survival profile has the form `β_x = π_{k-1}(A/√x)` where the scalar
//! `A = A_k(c)` is the largest solution of `A = c f_k(A)` with
//!
//! ```text
//! f_k(B) = ∫₀¹ π_{k-1}(B/√y) y^{-1/2} dy = 2B g_k(B),
//! g_k(B) = ∫_B^∞ π_{k-1}(x) x^{-2} dx.
//! ```
//!
//! The core fraction is `β⁺ = h_k(A)` with
//! `h_k(B) = ∫₀¹ π_k(B/√x) dx = 2B² ∫_B^∞ π_k(y) y^{-3} dy`.
//!
//! For `k ≥ 3` both `g_k` and `h_k` have closed forms in Poisson tails:
//! `g_3(B) = (1 - e^{-B})/B`, `h_3(B) = π_2(B)` and, stepping `k` up by one,
//!
//! ```text
//! g_{k+1}(B) = g_k(B) - Pr(Po(B) < k-2) / ((k-1)(k-2))
//! h_{k+1}(B) = h_k(B) - 2B² Pr(Po(B) < k-2) / (k(k-1)(k-2))
//! ```
//!
//! Each step removes `∫_B^∞ x^{k-3} e^{-x} dx / (k-1)!` (resp. `/ k!` with the
//! extra `x^{-1}`), an upper incomplete gamma of integer order. For `k = 2`
//! the same integrals involve the exponential integral and are evaluated by
//! quadrature instead.

use serde::{Deserialize, Serialize};

use super::finite_type::FiniteTypeKernel;
use super::poisson::{head_unchecked, tail_unchecked};
use super::quad::{integrate, Tolerance};
use super::solver::{iterate_down, CoreOrder, FixedPointConfig, SolveResult, NEAR_CRITICAL_RATE};
use crate::{Error, Result};

pub const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

/// Lower end of the log-substituted integrals when `B = 0`; the integrands
/// vanish like `e^{(k-2)s}` there.
const LOG_FLOOR: f64 = -60.0;

fn quad_tol() -> Tolerance {
    Tolerance {
        abs: 1e-17,
        rel: 1e-13,
        max_intervals: 4000,
    }
}

/// `κ(x, y) = c/√(xy)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rank1PowerLawKernel {
    c: f64,
}

impl Rank1PowerLawKernel {
    pub fn new(c: f64) -> Result<Self> {
        if !(c.is_finite() && c > 0.0) {
            return Err(Error::Kernel(format!("density parameter c must be positive, got {c}")));
        }
        Ok(Self { c })
    }

    pub fn c(&self) -> f64 {
        self.c
    }

    pub fn eval(&self, x: f64, y: f64) -> f64 {
        self.c / (x * y).sqrt()
    }
}

fn check_b(b: f64) -> Result<()> {
    if b.is_finite() && b >= 0.0 {
        Ok(())
    } else {
        Err(Error::domain(format!("B must be finite and nonnegative, got {b}")))
    }
}

fn g_closed(k: u64, b: f64) -> f64 {
    let mut g = if b == 0.0 { 1.0 } else { -(-b).exp_m1() / b };
    for j in 3..k {
        let jf = j as f64;
        g -= head_unchecked(j - 2, b) / ((jf - 1.0) * (jf - 2.0));
    }
    g
}

fn h_closed(k: u64, b: f64) -> f64 {
    let mut h = tail_unchecked(2, b);
    let b2 = 2.0 * b * b;
    for j in 3..k {
        let jf = j as f64;
        h -= b2 * head_unchecked(j - 2, b) / (jf * (jf - 1.0) * (jf - 2.0));
    }
    h.max(0.0)
}

/// `g_k(B) = ∫_B^∞ π_{k-1}(x) x^{-2} dx` in closed form, `k ≥ 3`.
///
/// `g_k(0) = 1/(k-2)`; `k = 2` is rejected since `g_2(0)` diverges.
pub fn g_k(k: CoreOrder, b: f64) -> Result<f64> {
    let k = k.require_at_least_3()?;
    check_b(b)?;
    Ok(g_closed(k.as_u64(), b))
}

/// `g_k` by adaptive quadrature; valid for `k ≥ 3`, and for `k = 2` when
/// `B > 0`.
pub fn g_k_quadrature(k: CoreOrder, b: f64) -> Result<f64> {
    check_b(b)?;
    if k.get() == 2 && b == 0.0 {
        return Err(Error::domain("g_2 diverges at B = 0"));
    }
    Ok(g_quad(k.as_u64() - 1, b))
}

/// `∫_B^∞ π_t(x) x^{-2} dx`, split at `x = 1`: `x = e^s` below, `x = 1/u` above.
fn g_quad(t: u64, b: f64) -> f64 {
    let mut total = 0.0;
    if b < 1.0 {
        let lo = if b == 0.0 { LOG_FLOOR } else { b.ln() };
        total += integrate(|s: f64| tail_unchecked(t, s.exp()) * (-s).exp(), lo, 0.0, quad_tol()).value;
    }
    let top = if b < 1.0 { 1.0 } else { 1.0 / b };
    total += integrate(|u: f64| tail_unchecked(t, 1.0 / u), 0.0, top, quad_tol()).value;
    total
}

/// `f_k(B) = 2B g_k(B)`: closed form for `k ≥ 3`, quadrature for `k = 2`.
pub fn f_k(k: CoreOrder, b: f64) -> Result<f64> {
    check_b(b)?;
    Ok(f_unchecked(k.as_u64(), b))
}

fn f_unchecked(k: u64, b: f64) -> f64 {
    if b == 0.0 {
        return 0.0;
    }
    if k >= 3 {
        2.0 * b * g_closed(k, b)
    } else {
        2.0 * b * g_quad(k - 1, b)
    }
}

/// `f_k` straight from its defining integral `∫₀¹ π_{k-1}(B/√y) y^{-1/2} dy`,
/// written as `2∫₀¹ π_{k-1}(B/u) du` after `y = u²`.
pub fn f_k_quadrature(k: CoreOrder, b: f64) -> Result<f64> {
    check_b(b)?;
    if b == 0.0 {
        return Ok(0.0);
    }
    let t = k.as_u64() - 1;
    let f = |u: f64| tail_unchecked(t, b / u);
    let split = b.min(1.0);
    let v = integrate(f, 0.0, split, quad_tol()).value + integrate(f, split, 1.0, quad_tol()).value;
    Ok(2.0 * v)
}

/// `h_k(B) = ∫₀¹ π_k(B/√x) dx` in closed form, `k ≥ 3`.
pub fn h_k(k: CoreOrder, b: f64) -> Result<f64> {
    let k = k.require_at_least_3()?;
    check_b(b)?;
    Ok(h_closed(k.as_u64(), b))
}

/// `h_k(B) = 2B² ∫_B^∞ π_k(y) y^{-3} dy` by adaptive quadrature, any `k ≥ 2`.
pub fn h_k_quadrature(k: CoreOrder, b: f64) -> Result<f64> {
    check_b(b)?;
    Ok(h_quad(k.as_u64(), b))
}

fn h_quad(k: u64, b: f64) -> f64 {
    if b == 0.0 {
        return 0.0;
    }
    let mut total = 0.0;
    if b < 1.0 {
        total += integrate(
            |s: f64| tail_unchecked(k, s.exp()) * (-2.0 * s).exp(),
            b.ln(),
            0.0,
            quad_tol(),
        )
        .value;
    }
    let top = if b < 1.0 { 1.0 } else { 1.0 / b };
    total += integrate(|u: f64| tail_unchecked(k, 1.0 / u) * u, 0.0, top, quad_tol()).value;
    2.0 * b * b * total
}

fn h_unchecked(k: u64, b: f64) -> f64 {
    if k >= 3 {
        h_closed(k, b)
    } else {
        h_quad(k, b)
    }
}

/// Illinois false position on a bracket with `psi(lo) > 0 > psi(hi)`.
fn refine_root<F: Fn(f64) -> f64>(psi: F, mut lo: f64, mut hi: f64) -> f64 {
    let mut flo = psi(lo);
    let mut fhi = psi(hi);
    let mut side = 0i8;
    for _ in 0..200 {
        if hi - lo <= 4.0 * f64::EPSILON * hi {
            break;
        }
        let mut x = (lo * fhi - hi * flo) / (fhi - flo);
        if !(x > lo && x < hi) {
            x = 0.5 * (lo + hi);
        }
        let fx = psi(x);
        if fx == 0.0 {
            return x;
        }
        if fx > 0.0 {
            lo = x;
            flo = fx;
            if side == 1 {
                fhi *= 0.5;
            }
            side = 1;
        } else {
            hi = x;
            fhi = fx;
            if side == -1 {
                flo *= 0.5;
            }
            side = -1;
        }
    }
    if flo.abs() < fhi.abs() {
        lo
    } else {
        hi
    }
}

/// `A_k(c)`: the largest fixed point of `B ↦ c f_k(B)`.
///
/// Iterates downward from `2c` (an upper bound since `f_k ≤ 2`), then
/// tightens the limit with a bracketed root search: `f_k(B)/B` is
/// decreasing, so the positive root is unique and the iterate together with
/// the positivity cutoff brackets it. For `k ≥ 3` the zero answer is
/// returned when `c f_k(B) ≤ B` already at the cutoff, which is exactly
/// `c ≤ (k-2)/2` up to rounding.
pub fn a_rank1(
    kernel: &Rank1PowerLawKernel,
    k: CoreOrder,
    cfg: &FixedPointConfig,
) -> Result<SolveResult> {
    cfg.validate()?;
    let c = kernel.c();
    let kk = k.as_u64();
    let map = |b: f64| c * f_unchecked(kk, b);
    let cutoff = cfg.positivity_cutoff;
    if map(cutoff) <= cutoff {
        let slope = if kk >= 3 { 2.0 * c / (kk as f64 - 2.0) } else { f64::INFINITY };
        return Ok(SolveResult {
            value: 0.0,
            residual: 0.0,
            iterations: 0,
            converged: true,
            near_critical: (slope - 1.0).abs() < 1.0 - NEAR_CRITICAL_RATE,
        });
    }
    let iterated = iterate_down(map, 2.0 * c, cfg);
    let hi = iterated.value;
    let psi = |b: f64| map(b) - b;
    let value = if psi(hi) < 0.0 {
        refine_root(psi, cutoff, hi)
    } else {
        hi
    };
    let residual = (value - map(value)).abs();
    Ok(SolveResult {
        value,
        residual,
        iterations: iterated.iterations,
        converged: residual <= cfg.tolerance,
        near_critical: iterated.near_critical,
    })
}

/// Survival profile `β_x = π_{k-1}(A/√x)` for a solved `A`.
pub fn beta_profile(k: CoreOrder, a: f64, x: f64) -> Result<f64> {
    check_b(a)?;
    if !(x > 0.0 && x <= 1.0) {
        return Err(Error::domain(format!("type x must lie in (0, 1], got {x}")));
    }
    Ok(tail_unchecked(k.as_u64() - 1, a / x.sqrt()))
}

/// Core fraction `β⁺(cκ₀) = h_k(A_k(c))`, with the solve statistics of `A`.
pub fn beta_plus_rank1(
    kernel: &Rank1PowerLawKernel,
    k: CoreOrder,
    cfg: &FixedPointConfig,
) -> Result<SolveResult> {
    let a = a_rank1(kernel, k, cfg)?;
    let kk = k.as_u64();
    Ok(a.map(|a| if a == 0.0 { 0.0 } else { h_unchecked(kk, a) }))
}

/// Leading-order `β⁺_k((1+ε)(k-2)/2 · κ₀) ≈ (k-1)!^{2/(k-2)} ε^{2/(k-2)} / ((k-1)(k-2))`.
pub fn asymptotic_beta_plus(k: CoreOrder, eps: f64) -> Result<f64> {
    let k = k.require_at_least_3()?.get() as f64;
    if !(eps > 0.0) {
        return Err(Error::domain("ε must be positive"));
    }
    let fact = factorial(k - 1.0);
    let e = 2.0 / (k - 2.0);
    Ok(fact.powf(e) / ((k - 1.0) * (k - 2.0)) * eps.powf(e))
}

/// Leading-order `A_k((1+ε)(k-2)/2) ≈ ((k-1)! ε)^{1/(k-2)}`.
pub fn asymptotic_a(k: CoreOrder, eps: f64) -> Result<f64> {
    let k = k.require_at_least_3()?.get() as f64;
    if !(eps > 0.0) {
        return Err(Error::domain("ε must be positive"));
    }
    Ok((factorial(k - 1.0) * eps).powf(1.0 / (k - 2.0)))
}

/// Small-`c` law for the 2-core: `β⁺_2(cκ₀) ≈ e^{2-2γ} e^{-1/c} / (2c)`.
pub fn asymptotic_beta_plus_k2(c: f64) -> Result<f64> {
    if !(c > 0.0) {
        return Err(Error::domain("c must be positive"));
    }
    Ok((2.0 - 2.0 * EULER_GAMMA).exp() * (-1.0 / c).exp() / (2.0 * c))
}

/// Small-`c` law `A_2(c) ≈ e^{1-γ} e^{-1/(2c)}`.
pub fn asymptotic_a_k2(c: f64) -> Result<f64> {
    if !(c > 0.0) {
        return Err(Error::domain("c must be positive"));
    }
    Ok((1.0 - EULER_GAMMA).exp() * (-0.5 / c).exp())
}

fn factorial(n: f64) -> f64 {
    (1..=n as u64).map(|i| i as f64).product()
}

/// Step-function lower bound of `c/√(xy)` truncated to `[ε, 1]²`.
///
/// `[ε, 1]` is cut into `m` equal cells; on a pair of cells the kernel takes
/// its infimum, attained at the right endpoints. The last type (weight `ε`)
/// stands for `(0, ε)` and has no edges.
pub fn kernel_discretize(kernel: &Rank1PowerLawKernel, m: usize, eps: f64) -> Result<FiniteTypeKernel> {
    if m == 0 {
        return Err(Error::domain("resolution m must be at least 1"));
    }
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::domain(format!("truncation ε must lie in (0, 1), got {eps}")));
    }
    let width = (1.0 - eps) / m as f64;
    let right: Vec<f64> = (1..=m)
        .map(|i| if i == m { 1.0 } else { eps + i as f64 * width })
        .collect();
    let r = m + 1;
    let mut kappa = vec![vec![0.0; r]; r];
    for i in 0..m {
        for j in 0..m {
            kappa[i][j] = kernel.c() / (right[i] * right[j]).sqrt();
        }
    }
    let mut mu = vec![width; m];
    mu.push(eps);
    FiniteTypeKernel::new(kappa, mu)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn k(v: u32) -> CoreOrder {
        CoreOrder::new(v).unwrap()
    }

    #[test]
    fn g3_closed_form_values() {
        assert_eq!(g_k(k(3), 0.0).unwrap(), 1.0);
        let e1 = (-1.0f64).exp();
        assert!((g_k(k(3), 1.0).unwrap() - (1.0 - e1)).abs() < 1e-15);
    }

    #[test]
    fn k2_rejected_where_divergent() {
        assert!(g_k(k(2), 1.0).is_err());
        assert!(g_k_quadrature(k(2), 0.0).is_err());
        assert!(h_k(k(2), 1.0).is_err());
        assert!(asymptotic_beta_plus(k(2), 0.1).is_err());
    }

    #[test]
    fn negative_b_rejected() {
        assert!(f_k(k(3), -0.1).is_err());
        assert!(g_k(k(4), f64::NAN).is_err());
    }

    #[test]
    fn f_at_zero() {
        for kk in 2..8 {
            assert_eq!(f_k(k(kk), 0.0).unwrap(), 0.0);
        }
    }

    #[test]
    fn h3_is_poisson_tail() {
        for &b in &[0.01, 0.5, 2.0, 9.0] {
            let q = h_k_quadrature(k(3), b).unwrap();
            assert!((h_k(k(3), b).unwrap() - q).abs() < 1e-12);
        }
    }

    #[test]
    fn below_threshold_is_zero() {
        let cfg = FixedPointConfig::default();
        let r = a_rank1(&Rank1PowerLawKernel::new(0.49).unwrap(), k(3), &cfg).unwrap();
        assert_eq!(r.value, 0.0);
        assert!(r.converged);
        let r = beta_plus_rank1(&Rank1PowerLawKernel::new(0.5).unwrap(), k(3), &cfg).unwrap();
        assert_eq!(r.value, 0.0);
    }

    #[test]
    fn kernel_rejects_bad_c() {
        assert!(Rank1PowerLawKernel::new(0.0).is_err());
        assert!(Rank1PowerLawKernel::new(-1.0).is_err());
        assert!(Rank1PowerLawKernel::new(f64::INFINITY).is_err());
    }

    #[test]
    fn single_cell_discretization() {
        let kern = Rank1PowerLawKernel::new(1.7).unwrap();
        let d = kernel_discretize(&kern, 1, 0.1).unwrap();
        assert_eq!(d.types(), 2);
        assert_eq!(d.kappa(0, 0), 1.7);
        assert_eq!(d.kappa(0, 1), 0.0);
        assert_eq!(d.kappa(1, 1), 0.0);
        assert!((d.mu(0) - 0.9).abs() < 1e-15);
        assert_eq!(d.mu(1), 0.1);
        assert!(kernel_discretize(&kern, 0, 0.1).is_err());
        assert!(kernel_discretize(&kern, 4, 1.0).is_err());
    }

    #[test]
    fn profile_domain() {
        assert!(beta_profile(k(3), 1.0, 0.0).is_err());
        assert!(beta_profile(k(3), 1.0, 1.5).is_err());
        let v = beta_profile(k(3), 1.0, 1.0).unwrap();
        assert!((v - tail_unchecked(2, 1.0)).abs() < 1e-16);
    }
}
