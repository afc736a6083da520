//! Finite-type kernels.
//!
//! With types `1..=r`, weights `μ_i` and a symmetric matrix `κ`, a particle of
//! type `i` has Poisson(`κ(i,j) μ_j`) children of type `j`, independently over
//! `j`. The survival probabilities solve the vector fixed point
//! `β_i = π_{k-1}(Σ_j κ(i,j) μ_j β_j)` and the core fraction is
//! `β⁺ = Σ_i μ_i π_k(Σ_j κ(i,j) μ_j β_j)`.

use serde::{Deserialize, Serialize};

use super::poisson::tail_unchecked;
use super::solver::{CoreOrder, FixedPointConfig, SolveResult, NEAR_CRITICAL_RATE};
use crate::{Error, Result};

const SYMMETRY_TOL: f64 = 1e-12;
const WEIGHT_SUM_TOL: f64 = 1e-9;

/// A validated finite-type kernel. Stored row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "KernelFile", into = "KernelFile")]
pub struct FiniteTypeKernel {
    r: usize,
    kappa: Vec<f64>,
    mu: Vec<f64>,
}

/// On-disk form: `{"kappa": [[...], ...], "mu": [...]}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct KernelFile {
    pub kappa: Vec<Vec<f64>>,
    pub mu: Vec<f64>,
}

impl TryFrom<KernelFile> for FiniteTypeKernel {
    type Error = Error;

    fn try_from(f: KernelFile) -> Result<Self> {
        FiniteTypeKernel::new(f.kappa, f.mu)
    }
}

impl From<FiniteTypeKernel> for KernelFile {
    fn from(k: FiniteTypeKernel) -> Self {
        KernelFile {
            kappa: k.kappa.chunks(k.r).map(|row| row.to_vec()).collect(),
            mu: k.mu,
        }
    }
}

impl FiniteTypeKernel {
    pub fn new(kappa: Vec<Vec<f64>>, mu: Vec<f64>) -> Result<Self> {
        let r = mu.len();
        if r == 0 {
            return Err(Error::Kernel("at least one type is required".into()));
        }
        if kappa.len() != r || kappa.iter().any(|row| row.len() != r) {
            return Err(Error::Kernel(format!("kappa must be {r}×{r} to match mu")));
        }
        let flat: Vec<f64> = kappa.into_iter().flatten().collect();
        Self::from_flat(r, flat, mu)
    }

    fn from_flat(r: usize, kappa: Vec<f64>, mu: Vec<f64>) -> Result<Self> {
        for (idx, &v) in kappa.iter().enumerate() {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::Kernel(format!(
                    "kappa[{}][{}] = {v} is not a finite nonnegative number",
                    idx / r,
                    idx % r
                )));
            }
        }
        for i in 0..r {
            for j in (i + 1)..r {
                let (a, b) = (kappa[i * r + j], kappa[j * r + i]);
                if (a - b).abs() > SYMMETRY_TOL * a.abs().max(b.abs()).max(1.0) {
                    return Err(Error::Kernel(format!(
                        "kappa is not symmetric at ({i}, {j}): {a} vs {b}"
                    )));
                }
            }
        }
        if let Some((i, &w)) = mu.iter().enumerate().find(|(_, w)| !(w.is_finite() && **w > 0.0)) {
            return Err(Error::Kernel(format!("mu[{i}] = {w} must be positive")));
        }
        let total: f64 = mu.iter().sum();
        if (total - 1.0).abs() > WEIGHT_SUM_TOL {
            return Err(Error::Kernel(format!("type weights sum to {total}, not 1")));
        }
        Ok(Self { r, kappa, mu })
    }

    /// The one-type kernel `κ ≡ λ`.
    pub fn constant(lambda: f64) -> Result<Self> {
        Self::new(vec![vec![lambda]], vec![1.0])
    }

    pub fn types(&self) -> usize {
        self.r
    }

    #[inline]
    pub fn kappa(&self, i: usize, j: usize) -> f64 {
        self.kappa[i * self.r + j]
    }

    #[inline]
    pub fn mu(&self, i: usize) -> f64 {
        self.mu[i]
    }

    pub fn weights(&self) -> &[f64] {
        &self.mu
    }

    /// The kernel `λκ`.
    pub fn scaled(&self, lambda: f64) -> Result<Self> {
        Self::from_flat(
            self.r,
            self.kappa.iter().map(|v| v * lambda).collect(),
            self.mu.clone(),
        )
    }

    /// Offspring means `κ(i,j) μ_j` as a row-major matrix.
    pub fn offspring_means(&self) -> Vec<f64> {
        let mut out = self.kappa.clone();
        for row in out.chunks_mut(self.r) {
            for (v, w) in row.iter_mut().zip(&self.mu) {
                *v *= w;
            }
        }
        out
    }

    /// `Σ_j κ(i,j) μ_j v_j` for every `i`.
    fn apply(&self, means: &[f64], v: &[f64], out: &mut [f64]) {
        for (o, row) in out.iter_mut().zip(means.chunks(self.r)) {
            *o = row.iter().zip(v).map(|(a, b)| a * b).sum();
        }
    }
}

struct TypeMap<'a> {
    kernel: &'a FiniteTypeKernel,
    means: Vec<f64>,
    t: u64,
}

impl TypeMap<'_> {
    fn eval(&self, v: &[f64], scratch: &mut [f64], out: &mut [f64]) {
        self.kernel.apply(&self.means, v, scratch);
        for (o, &m) in out.iter_mut().zip(scratch.iter()) {
            *o = tail_unchecked(self.t, m);
        }
    }

    fn residual(&self, v: &[f64], scratch: &mut [f64], out: &mut [f64]) -> f64 {
        self.eval(v, scratch, out);
        v.iter()
            .zip(out.iter())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

/// The largest solution `β(κ)` of the finite-type equation, iterated from the
/// all-ones vector.
///
/// Coordinates that end below the positivity cutoff are reported as zero when
/// doing so keeps the residual within tolerance; a type fed only weakly by a
/// positive neighbour keeps its small positive value instead.
pub fn beta_finite_type(
    kernel: &FiniteTypeKernel,
    k: CoreOrder,
    cfg: &FixedPointConfig,
) -> Result<SolveResult<Vec<f64>>> {
    cfg.validate()?;
    let map = TypeMap {
        kernel,
        means: kernel.offspring_means(),
        t: k.as_u64() - 1,
    };
    let r = kernel.types();
    let mut x = vec![1.0; r];
    let mut next = vec![0.0; r];
    let mut scratch = vec![0.0; r];
    let mut prev_step = f64::NAN;
    let mut rate = 0.0;
    let mut iterations = cfg.max_iterations;
    let mut finished = false;
    for it in 1..=cfg.max_iterations {
        map.eval(&x, &mut scratch, &mut next);
        let step = x
            .iter()
            .zip(&next)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        if step > 0.0 && prev_step > 0.0 {
            rate = step / prev_step;
        }
        prev_step = step;
        std::mem::swap(&mut x, &mut next);
        if x.iter().all(|&v| v < cfg.positivity_cutoff) {
            x.iter_mut().for_each(|v| *v = 0.0);
            iterations = it;
            finished = true;
            break;
        }
        if step <= cfg.tolerance {
            iterations = it;
            finished = true;
            break;
        }
    }

    if finished && x.iter().any(|&v| v > 0.0 && v < cfg.positivity_cutoff) {
        let snapped: Vec<f64> = x
            .iter()
            .map(|&v| if v < cfg.positivity_cutoff { 0.0 } else { v })
            .collect();
        if map.residual(&snapped, &mut scratch, &mut next) <= cfg.tolerance {
            x = snapped;
        }
    }
    let residual = map.residual(&x, &mut scratch, &mut next);
    Ok(SolveResult {
        value: x,
        residual,
        iterations,
        converged: finished && residual <= cfg.tolerance,
        near_critical: rate > NEAR_CRITICAL_RATE,
    })
}

/// `β⁺(κ) = Σ_i μ_i π_k(Σ_j κ(i,j) μ_j β_j)`.
pub fn beta_plus_finite_type(
    kernel: &FiniteTypeKernel,
    k: CoreOrder,
    cfg: &FixedPointConfig,
) -> Result<SolveResult<f64>> {
    let beta = beta_finite_type(kernel, k, cfg)?;
    Ok(beta.map(|b| beta_plus_from_beta(kernel, k, &b)))
}

/// Per-type `β⁺_i = π_k(Σ_j κ(i,j) μ_j β_j)` for a solved `β` vector.
pub fn beta_plus_by_type(kernel: &FiniteTypeKernel, k: CoreOrder, beta: &[f64]) -> Vec<f64> {
    let means = kernel.offspring_means();
    let mut lam = vec![0.0; kernel.types()];
    kernel.apply(&means, beta, &mut lam);
    lam.into_iter()
        .map(|m| tail_unchecked(k.as_u64(), m))
        .collect()
}

fn beta_plus_from_beta(kernel: &FiniteTypeKernel, k: CoreOrder, beta: &[f64]) -> f64 {
    beta_plus_by_type(kernel, k, beta)
        .iter()
        .zip(kernel.weights())
        .map(|(b, w)| b * w)
        .sum()
}

/// The depth-`d` iterates `Pr_i(B_d)` for every root type, starting from ones.
pub fn b_d_iterates_finite_type(
    kernel: &FiniteTypeKernel,
    k: CoreOrder,
    depth: usize,
) -> Vec<Vec<f64>> {
    let map = TypeMap {
        kernel,
        means: kernel.offspring_means(),
        t: k.as_u64() - 1,
    };
    let r = kernel.types();
    let mut scratch = vec![0.0; r];
    let mut out = vec![vec![1.0; r]];
    for d in 0..depth {
        let mut next = vec![0.0; r];
        map.eval(&out[d], &mut scratch, &mut next);
        out.push(next);
    }
    out
}
