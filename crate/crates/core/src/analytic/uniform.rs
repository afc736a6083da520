//! The homogeneous case: `G(n, λ/n)` and the Poisson(λ) Galton–Watson tree.
//!
//! `β(λ)` is the probability that the tree contains an infinite rooted
//! `(k-1)`-ary subtree. The depth-`d` version `Pr(B_d)` obeys
//! `Pr(B_{d+1}) = π_{k-1}(λ Pr(B_d))` with `Pr(B_0) = 1`, so `β` is the largest
//! fixed point of `p ↦ π_{k-1}(λp)` and is reached by iterating from 1.
//! `β⁺(λ) = π_k(λβ(λ))` is the limiting fraction of vertices in the k-core.

use super::poisson::{pmf_unchecked, tail_unchecked};
use super::solver::{iterate_down, CoreOrder, FixedPointConfig, SolveResult};
use crate::{Error, Result};

fn check_lambda(lambda: f64) -> Result<()> {
    if lambda.is_finite() && lambda >= 0.0 {
        Ok(())
    } else {
        Err(Error::domain(format!("λ must be finite and nonnegative, got {lambda}")))
    }
}

/// `Pr(B_0), Pr(B_1), …, Pr(B_depth)` for the Poisson(λ) tree.
pub fn b_d_iterates(k: CoreOrder, lambda: f64, depth: usize) -> Result<Vec<f64>> {
    check_lambda(lambda)?;
    let t = k.as_u64() - 1;
    let mut out = Vec::with_capacity(depth + 1);
    let mut p = 1.0;
    out.push(p);
    for _ in 0..depth {
        p = tail_unchecked(t, lambda * p);
        out.push(p);
    }
    Ok(out)
}

/// `Pr(B⁺_d) = π_k(λ Pr(B_{d-1}))`, the depth-`d` proxy for `β⁺`.
pub fn b_plus_d(k: CoreOrder, lambda: f64, depth: usize) -> Result<f64> {
    if depth == 0 {
        return Err(Error::domain("B⁺_d needs depth at least 1"));
    }
    let it = b_d_iterates(k, lambda, depth - 1)?;
    Ok(tail_unchecked(k.as_u64(), lambda * it[depth - 1]))
}

/// `β(λ)`: the largest solution of `p = π_{k-1}(λp)`.
pub fn beta_uniform(k: CoreOrder, lambda: f64, cfg: &FixedPointConfig) -> Result<SolveResult> {
    check_lambda(lambda)?;
    cfg.validate()?;
    let t = k.as_u64() - 1;
    if t == 1 && lambda <= 1.0 {
        // k = 2 is plain survival: the map 1 - e^{-λp} is concave, so a
        // positive root exists iff its slope λ at zero exceeds 1. At λ = 1 the
        // iterates decay like 2/d and would never reach the cutoff.
        return Ok(SolveResult {
            value: 0.0,
            residual: 0.0,
            iterations: 0,
            converged: true,
            near_critical: 1.0 - lambda < 1e-4,
        });
    }
    Ok(iterate_down(|p| tail_unchecked(t, lambda * p), 1.0, cfg))
}

/// `β⁺(λ) = π_k(λβ(λ))`.
pub fn beta_plus_uniform(
    k: CoreOrder,
    lambda: f64,
    cfg: &FixedPointConfig,
) -> Result<SolveResult> {
    let beta = beta_uniform(k, lambda, cfg)?;
    let kk = k.as_u64();
    Ok(beta.map(|b| {
        if b == 0.0 {
            0.0
        } else {
            tail_unchecked(kk, lambda * b)
        }
    }))
}

/// `λ_c(k) = inf{λ : β(λ) > 0}`.
///
/// For `k = 2` this is 1. For `k ≥ 3` a positive fixed point `p` of
/// `p = π_{k-1}(λp)` exists iff `λ ≥ μ/π_{k-1}(μ)` for some `μ > 0`, so
/// `λ_c = min_μ μ/π_{k-1}(μ)`. The minimizer is the unique root of
/// `π_{k-1}(μ) = μ·Pr(Po(μ) = k-2)`, found by bisection to machine precision.
/// Bisecting on the solver's zero/positive classification instead would be
/// limited by the slow convergence of the iteration at the threshold.
pub fn lambda_c(k: CoreOrder, cfg: &FixedPointConfig) -> Result<f64> {
    cfg.validate()?;
    if k.get() == 2 {
        return Ok(1.0);
    }
    let t = k.as_u64() - 1;
    let stationarity = |mu: f64| tail_unchecked(t, mu) - mu * pmf_unchecked(t - 1, mu);
    let mut lo = 1e-3;
    let mut hi = 4.0 * t as f64 + 10.0;
    while stationarity(hi) <= 0.0 {
        lo = hi;
        hi *= 2.0;
    }
    while hi - lo > 4.0 * f64::EPSILON * hi {
        let mid = 0.5 * (lo + hi);
        if stationarity(mid) > 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    let mu = 0.5 * (lo + hi);
    Ok(mu / tail_unchecked(t, mu))
}
