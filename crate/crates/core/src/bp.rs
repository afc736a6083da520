//! Monte-Carlo estimates of branching-process events.
//!
//! `B_d` is the event that the root of a Poisson Galton–Watson tree has a
//! `(k-1)`-ary subtree of height `d`; `B⁺_d` asks for at least `k` children
//! with `B_{d-1}` at the root. Trees are never materialized. Each particle is
//! identified by a 64-bit key obtained by hashing its parent's key with its
//! child index, and its offspring count is a pure function of that key.
//! Evaluation is a depth-first search that stops as soon as the outcome at a
//! node is decided.
//!
//! Because a particle's offspring depend only on its key, runs with the same
//! seed explore the same tree at every depth, so estimates at depth `d + 1`
//! never exceed those at depth `d`.

use std::collections::BTreeMap;
use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analytic::poisson::{pmf_unchecked, tail_unchecked};
use crate::analytic::{beta_uniform, CoreOrder, FiniteTypeKernel, FixedPointConfig, PoissonSampler};
use crate::seed::{derive_seed, unit_from_key};
use crate::{Error, Result};

pub const DEFAULT_PARTICLE_CAP: u64 = 10_000_000;

/// Salt separating a particle's type draw from its offspring-count draw.
const TYPE_SALT: u64 = 0x5459_5045_5f4b_4559;
/// Trials run per parallel batch when collecting conditioned samples.
const BATCH: u64 = 1 << 14;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BPConfig {
    pub depth: usize,
    pub samples: u64,
    /// Particles whose offspring may be drawn in one trial before it aborts.
    #[serde(default = "default_particle_cap")]
    pub particle_cap: u64,
    pub seed: u64,
}

fn default_particle_cap() -> u64 {
    DEFAULT_PARTICLE_CAP
}

impl BPConfig {
    pub fn new(depth: usize, samples: u64, seed: u64) -> Self {
        Self {
            depth,
            samples,
            particle_cap: DEFAULT_PARTICLE_CAP,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.samples == 0 {
            return Err(Error::config("samples must be at least 1"));
        }
        if self.particle_cap == 0 {
            return Err(Error::config("particle_cap must be at least 1"));
        }
        Ok(())
    }
}

/// Result of a batch of trials. Aborted trials are excluded from `estimate`
/// and `stderr`; if every trial aborted both are NaN.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BPEstimate {
    pub successes: u64,
    pub trials: u64,
    pub aborts: u64,
    pub estimate: f64,
    pub stderr: f64,
}

impl BPEstimate {
    fn from_counts(successes: u64, trials: u64, aborts: u64) -> Self {
        let valid = trials - aborts;
        let (estimate, stderr) = if valid == 0 {
            (f64::NAN, f64::NAN)
        } else {
            let p = successes as f64 / valid as f64;
            (p, (p * (1.0 - p) / valid as f64).sqrt())
        };
        Self {
            successes,
            trials,
            aborts,
            estimate,
            stderr,
        }
    }

    pub fn abort_rate(&self) -> f64 {
        self.aborts as f64 / self.trials as f64
    }

    /// `|estimate - target|` in units of `max(stderr, √(target(1-target)/N))`.
    /// The second term keeps the score meaningful when every trial agreed.
    pub fn z_score(&self, target: f64) -> f64 {
        let valid = (self.trials - self.aborts) as f64;
        let null = (target * (1.0 - target) / valid).sqrt();
        let se = self.stderr.max(null);
        let diff = (self.estimate - target).abs();
        if diff == 0.0 {
            0.0
        } else {
            diff / se
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Outcome {
    Success,
    Failure,
    Abort,
}

struct Aborted;

/// One-type offspring law.
struct SingleType {
    sampler: PoissonSampler,
    need: u64,
}

struct Budget {
    used: u64,
    cap: u64,
}

impl Budget {
    #[inline]
    fn spend(&mut self) -> Result<(), Aborted> {
        self.used += 1;
        if self.used > self.cap {
            Err(Aborted)
        } else {
            Ok(())
        }
    }
}

impl SingleType {
    /// Whether the particle `key` has at least `need` children that satisfy
    /// `B_{depth-1}`.
    fn holds(&self, key: u64, depth: usize, need: u64, budget: &mut Budget) -> Result<bool, Aborted> {
        if depth == 0 {
            return Ok(true);
        }
        budget.spend()?;
        let children = self.sampler.sample_from_unit(unit_from_key(key));
        self.count_at_least(key, children, depth - 1, need, budget)
    }

    fn count_at_least(
        &self,
        key: u64,
        children: u64,
        child_depth: usize,
        need: u64,
        budget: &mut Budget,
    ) -> Result<bool, Aborted> {
        if children < need {
            return Ok(false);
        }
        let mut ok = 0;
        for i in 0..children {
            if ok + (children - i) < need {
                return Ok(false);
            }
            if self.holds(derive_seed(key, i), child_depth, self.need, budget)? {
                ok += 1;
                if ok >= need {
                    return Ok(true);
                }
            }
        }
        Ok(ok >= need)
    }

    /// Number of children of `key` satisfying `B_{child_depth}`, evaluated
    /// without stopping early.
    fn count_all(&self, key: u64, child_depth: usize, budget: &mut Budget) -> Result<u64, Aborted> {
        budget.spend()?;
        let children = self.sampler.sample_from_unit(unit_from_key(key));
        let mut ok = 0;
        for i in 0..children {
            if self.holds(derive_seed(key, i), child_depth, self.need, budget)? {
                ok += 1;
            }
        }
        Ok(ok)
    }
}

fn check_lambda(lambda: f64) -> Result<()> {
    if lambda.is_finite() && lambda >= 0.0 {
        Ok(())
    } else {
        Err(Error::domain(format!("λ must be finite and nonnegative, got {lambda}")))
    }
}

fn run_trials<F>(cfg: &BPConfig, trial: F) -> BPEstimate
where
    F: Fn(u64) -> Outcome + Sync,
{
    let (successes, aborts) = (0..cfg.samples)
        .into_par_iter()
        .map(|t| match trial(derive_seed(cfg.seed, t)) {
            Outcome::Success => (1u64, 0u64),
            Outcome::Failure => (0, 0),
            Outcome::Abort => (0, 1),
        })
        .reduce(|| (0, 0), |a, b| (a.0 + b.0, a.1 + b.1));
    BPEstimate::from_counts(successes, cfg.samples, aborts)
}

fn outcome(r: Result<bool, Aborted>) -> Outcome {
    match r {
        Ok(true) => Outcome::Success,
        Ok(false) => Outcome::Failure,
        Err(Aborted) => Outcome::Abort,
    }
}

fn estimate_single(k: CoreOrder, lambda: f64, cfg: &BPConfig, root_need: u64) -> Result<BPEstimate> {
    check_lambda(lambda)?;
    cfg.validate()?;
    let law = SingleType {
        sampler: PoissonSampler::new(lambda)?,
        need: k.get() as u64 - 1,
    };
    Ok(run_trials(cfg, |key| {
        let mut budget = Budget {
            used: 0,
            cap: cfg.particle_cap,
        };
        outcome(law.holds(key, cfg.depth, root_need, &mut budget))
    }))
}

/// Estimates `Pr(B_d)` for the Poisson(λ) tree.
pub fn estimate_b_d(k: CoreOrder, lambda: f64, cfg: &BPConfig) -> Result<BPEstimate> {
    estimate_single(k, lambda, cfg, k.get() as u64 - 1)
}

/// Estimates `Pr(B⁺_d)`: at least `k` root children with `B_{d-1}`.
pub fn estimate_bplus_d(k: CoreOrder, lambda: f64, cfg: &BPConfig) -> Result<BPEstimate> {
    if cfg.depth == 0 {
        return Err(Error::domain("B⁺_d needs depth at least 1"));
    }
    estimate_single(k, lambda, cfg, k.get() as u64)
}

/// Exact search cannot certify failure cheaply: a node at depth `d` fails
/// only once all of its children have been checked, so a near-critical or
/// subcritical tree costs about `λ^d` particles per trial. The pooled
/// estimators below replace each subtree below the root by an outcome drawn
/// from a simulated pool of `pool_size` depth-`(d-1)` indicators (see
/// [`RootDegreeMethod::Pooled`]). Cost is `O(d · pool_size · λ)`. Trials share
/// the pool, so `stderr` omits the pool's own sampling error, which is of
/// order `1/√pool_size`. No trial aborts.
fn estimate_pooled(
    k: CoreOrder,
    lambda: f64,
    cfg: &BPConfig,
    pool_size: usize,
    root_need: u64,
) -> Result<BPEstimate> {
    check_lambda(lambda)?;
    cfg.validate()?;
    if pool_size == 0 {
        return Err(Error::config("pool_size must be at least 1"));
    }
    if cfg.depth == 0 {
        return Ok(BPEstimate::from_counts(cfg.samples, cfg.samples, 0));
    }
    let law = SingleType {
        sampler: PoissonSampler::new(lambda)?,
        need: k.get() as u64 - 1,
    };
    let pool = build_pool(&law, cfg.depth - 1, pool_size, cfg.seed);
    let root_seed = derive_seed(cfg.seed, u64::MAX);
    Ok(run_trials(&BPConfig { seed: root_seed, ..*cfg }, |key| {
        if pooled_count(&law.sampler, &pool, key) >= root_need {
            Outcome::Success
        } else {
            Outcome::Failure
        }
    }))
}

/// Population-dynamics estimate of `Pr(B_d)`.
pub fn estimate_b_d_pooled(k: CoreOrder, lambda: f64, cfg: &BPConfig, pool_size: usize) -> Result<BPEstimate> {
    estimate_pooled(k, lambda, cfg, pool_size, k.get() as u64 - 1)
}

/// Population-dynamics estimate of `Pr(B⁺_d)`.
pub fn estimate_bplus_d_pooled(
    k: CoreOrder,
    lambda: f64,
    cfg: &BPConfig,
    pool_size: usize,
) -> Result<BPEstimate> {
    if cfg.depth == 0 {
        return Err(Error::domain("B⁺_d needs depth at least 1"));
    }
    estimate_pooled(k, lambda, cfg, pool_size, k.get() as u64)
}

/// Root of a multi-type tree.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RootType {
    /// A fixed type (0-based).
    Fixed(usize),
    /// Drawn from the type weights `μ`.
    Mixed,
}

/// Finite-type offspring law: a particle of type `i` has Poisson(`R_i`)
/// children, `R_i = Σ_j κ(i,j) μ_j`, each independently of type `j` with
/// probability `κ(i,j) μ_j / R_i`. This is the same as independent
/// Poisson(`κ(i,j) μ_j`) counts per type.
struct MultiType {
    samplers: Vec<PoissonSampler>,
    /// Row-major cumulative type probabilities.
    type_cdf: Vec<f64>,
    r: usize,
    need: u64,
}

impl MultiType {
    fn new(kernel: &FiniteTypeKernel, k: CoreOrder) -> Result<Self> {
        let r = kernel.types();
        let means = kernel.offspring_means();
        let mut samplers = Vec::with_capacity(r);
        let mut type_cdf = Vec::with_capacity(r * r);
        for row in means.chunks(r) {
            let total: f64 = row.iter().sum();
            samplers.push(PoissonSampler::new(total)?);
            let mut acc = 0.0;
            for &m in row {
                acc += if total > 0.0 { m / total } else { 0.0 };
                type_cdf.push(acc);
            }
        }
        Ok(Self {
            samplers,
            type_cdf,
            r,
            need: k.get() as u64 - 1,
        })
    }

    fn child_type(&self, parent: usize, key: u64) -> usize {
        let row = &self.type_cdf[parent * self.r..(parent + 1) * self.r];
        let u = unit_from_key(key ^ TYPE_SALT);
        row.partition_point(|&c| c <= u).min(self.r - 1)
    }

    fn holds(&self, key: u64, ty: usize, depth: usize, need: u64, budget: &mut Budget) -> Result<bool, Aborted> {
        if depth == 0 {
            return Ok(true);
        }
        budget.spend()?;
        let children = self.samplers[ty].sample_from_unit(unit_from_key(key));
        if children < need {
            return Ok(false);
        }
        let mut ok = 0;
        for i in 0..children {
            if ok + (children - i) < need {
                return Ok(false);
            }
            let child = derive_seed(key, i);
            let child_ty = self.child_type(ty, child);
            if self.holds(child, child_ty, depth - 1, self.need, budget)? {
                ok += 1;
                if ok >= need {
                    return Ok(true);
                }
            }
        }
        Ok(ok >= need)
    }
}

fn root_type_of(kernel: &FiniteTypeKernel, root: RootType, key: u64) -> usize {
    match root {
        RootType::Fixed(t) => t,
        RootType::Mixed => {
            let u = unit_from_key(key ^ TYPE_SALT);
            let mut acc = 0.0;
            for (t, &w) in kernel.weights().iter().enumerate() {
                acc += w;
                if u < acc {
                    return t;
                }
            }
            kernel.types() - 1
        }
    }
}

fn estimate_multi(
    kernel: &FiniteTypeKernel,
    k: CoreOrder,
    root: RootType,
    cfg: &BPConfig,
    root_need: u64,
) -> Result<BPEstimate> {
    cfg.validate()?;
    if let RootType::Fixed(t) = root {
        if t >= kernel.types() {
            return Err(Error::config(format!(
                "root type {t} out of range for {} types",
                kernel.types()
            )));
        }
    }
    let law = MultiType::new(kernel, k)?;
    Ok(run_trials(cfg, |key| {
        let mut budget = Budget {
            used: 0,
            cap: cfg.particle_cap,
        };
        let ty = root_type_of(kernel, root, key);
        outcome(law.holds(key, ty, cfg.depth, root_need, &mut budget))
    }))
}

/// Estimates `Pr(B_d)` in the multi-type tree of a finite-type kernel.
pub fn estimate_b_d_multitype(
    kernel: &FiniteTypeKernel,
    k: CoreOrder,
    root: RootType,
    cfg: &BPConfig,
) -> Result<BPEstimate> {
    estimate_multi(kernel, k, root, cfg, k.get() as u64 - 1)
}

/// Estimates `Pr(B⁺_d)` in the multi-type tree of a finite-type kernel.
pub fn estimate_bplus_d_multitype(
    kernel: &FiniteTypeKernel,
    k: CoreOrder,
    root: RootType,
    cfg: &BPConfig,
) -> Result<BPEstimate> {
    if cfg.depth == 0 {
        return Err(Error::domain("B⁺_d needs depth at least 1"));
    }
    estimate_multi(kernel, k, root, cfg, k.get() as u64)
}

/// How [`sample_core_root_degree`] obtains the `B_{d-1}` status of the
/// root's children.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "kebab-case")]
pub enum RootDegreeMethod {
    /// Explore each child's subtree exactly. Every success certifies a
    /// `(k-1)`-ary tree of height `d - 1`, so the cost grows like
    /// `(k-1)^d` per sample.
    Exact,
    /// Population dynamics: build a pool of `pool_size` independent
    /// depth-`j` indicators for `j = 0..d-1`, each particle at depth `j + 1`
    /// drawing its children's outcomes uniformly from the depth-`j` pool.
    /// Cost `O(d · pool_size · λ)`, independent of the tree size.
    Pooled { pool_size: usize },
}

/// Degree law of a root conditioned on `B⁺_d`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RootDegreeSample {
    /// Number of `B_{d-1}` children → count, over conditioned trials.
    pub histogram: BTreeMap<usize, u64>,
    /// Trials with at least `k` successful children.
    pub conditioned: u64,
    /// Trials with fewer than `k` successful children.
    pub rejected: u64,
    pub aborts: u64,
    pub trials: u64,
}

impl RootDegreeSample {
    pub fn distribution(&self) -> BTreeMap<usize, f64> {
        normalize(&self.histogram)
    }
}

/// Samples the number of root children with `B_{d-1}`, conditioned on there
/// being at least `k` of them, until `cfg.samples` conditioned samples are
/// collected. This is the depth-`d` approximation of the root degree in the
/// sub-process of particles lying in some k-regular tree through the root.
///
/// Gives up after `1000 · cfg.samples` trials, which only matters when the
/// conditioning event is (nearly) impossible.
pub fn sample_core_root_degree(
    k: CoreOrder,
    lambda: f64,
    cfg: &BPConfig,
    method: RootDegreeMethod,
) -> Result<RootDegreeSample> {
    check_lambda(lambda)?;
    cfg.validate()?;
    if cfg.depth < 2 {
        return Err(Error::domain("root degree sampling needs depth at least 2"));
    }
    let law = SingleType {
        sampler: PoissonSampler::new(lambda)?,
        need: k.get() as u64 - 1,
    };
    let kk = k.get() as u64;
    let child_depth = cfg.depth - 1;
    match method {
        RootDegreeMethod::Exact => collect_conditioned(cfg, kk, |key| {
            let mut budget = Budget {
                used: 0,
                cap: cfg.particle_cap,
            };
            law.count_all(key, child_depth, &mut budget).ok()
        }),
        RootDegreeMethod::Pooled { pool_size } => {
            if pool_size == 0 {
                return Err(Error::config("pool_size must be at least 1"));
            }
            let pool = build_pool(&law, child_depth, pool_size, cfg.seed);
            let root_seed = derive_seed(cfg.seed, u64::MAX);
            collect_conditioned(&BPConfig { seed: root_seed, ..*cfg }, kk, |key| {
                Some(pooled_count(&law.sampler, &pool, key))
            })
        }
    }
}

/// Children of `key` whose outcome, drawn uniformly from `pool`, is a success.
#[inline]
fn pooled_count(sampler: &PoissonSampler, pool: &[bool], key: u64) -> u64 {
    let children = sampler.sample_from_unit(unit_from_key(key));
    let size = pool.len() as f64;
    (0..children)
        .filter(|&i| {
            let pick = (unit_from_key(derive_seed(key, i)) * size) as usize;
            pool[pick.min(pool.len() - 1)]
        })
        .count() as u64
}

/// Pool of independent `B_depth` indicators.
fn build_pool(law: &SingleType, depth: usize, pool_size: usize, seed: u64) -> Vec<bool> {
    let mut pool = vec![true; pool_size];
    for level in 1..=depth {
        let level_seed = derive_seed(seed, level as u64);
        pool = (0..pool_size)
            .into_par_iter()
            .map(|idx| pooled_count(&law.sampler, &pool, derive_seed(level_seed, idx as u64)) >= law.need)
            .collect();
    }
    pool
}

fn collect_conditioned<F>(cfg: &BPConfig, k: u64, trial: F) -> Result<RootDegreeSample>
where
    F: Fn(u64) -> Option<u64> + Sync,
{
    let max_trials = cfg.samples.saturating_mul(1000);
    let mut out = RootDegreeSample {
        histogram: BTreeMap::new(),
        conditioned: 0,
        rejected: 0,
        aborts: 0,
        trials: 0,
    };
    let mut next = 0u64;
    while out.conditioned < cfg.samples && next < max_trials {
        let end = (next + BATCH).min(max_trials);
        let results: Vec<Option<u64>> = (next..end)
            .into_par_iter()
            .map(|t| trial(derive_seed(cfg.seed, t)))
            .collect();
        for r in results {
            if out.conditioned == cfg.samples {
                break;
            }
            out.trials += 1;
            match r {
                None => out.aborts += 1,
                Some(c) if c >= k => {
                    out.conditioned += 1;
                    *out.histogram.entry(c as usize).or_insert(0) += 1;
                }
                Some(_) => out.rejected += 1,
            }
        }
        next = end;
    }
    Ok(out)
}

/// Poisson(`λβ(λ)`) conditioned on being at least `k`: the limiting law of
/// the number of root children with property `B`, given `B⁺`. Truncated
/// where the remaining mass falls below `1e-15`. Empty when `β = 0`.
pub fn analytic_root_degree_law(
    k: CoreOrder,
    lambda: f64,
    cfg: &FixedPointConfig,
) -> Result<BTreeMap<usize, f64>> {
    let beta = beta_uniform(k, lambda, cfg)?.value;
    let mean = lambda * beta;
    let kk = k.get() as u64;
    let mut law = BTreeMap::new();
    if beta == 0.0 {
        return Ok(law);
    }
    let norm = tail_unchecked(kk, mean);
    let mut j = kk;
    loop {
        law.insert(j as usize, pmf_unchecked(j, mean) / norm);
        if j as f64 > mean && tail_unchecked(j + 1, mean) / norm < 1e-15 {
            break;
        }
        j += 1;
    }
    Ok(law)
}

/// Histogram counts usable by [`normalize`].
pub trait Count: Copy {
    fn as_f64(self) -> f64;
}

impl Count for u64 {
    fn as_f64(self) -> f64 {
        self as f64
    }
}

impl Count for usize {
    fn as_f64(self) -> f64 {
        self as f64
    }
}

impl Count for f64 {
    fn as_f64(self) -> f64 {
        self
    }
}

/// Counts scaled to sum to one.
pub fn normalize<V: Count>(hist: &BTreeMap<usize, V>) -> BTreeMap<usize, f64> {
    let total: f64 = hist.values().map(|&v| v.as_f64()).sum();
    hist.iter()
        .map(|(&d, &v)| (d, if total > 0.0 { v.as_f64() / total } else { 0.0 }))
        .collect()
}

/// `½ Σ |p(x) - q(x)|` over the union of supports.
pub fn total_variation(p: &BTreeMap<usize, f64>, q: &BTreeMap<usize, f64>) -> f64 {
    let mut keys: Vec<usize> = p.keys().chain(q.keys()).copied().collect();
    keys.sort_unstable();
    keys.dedup();
    0.5 * keys
        .iter()
        .map(|x| (p.get(x).copied().unwrap_or(0.0) - q.get(x).copied().unwrap_or(0.0)).abs())
        .sum::<f64>()
}

/// Total-variation gap between the root degree laws sampled at depths `d`
/// and `d + 5`, as a convergence diagnostic for the depth knob.
pub fn root_degree_depth_gap(
    k: CoreOrder,
    lambda: f64,
    cfg: &BPConfig,
    method: RootDegreeMethod,
) -> Result<f64> {
    let shallow = sample_core_root_degree(k, lambda, cfg, method)?;
    let deep = sample_core_root_degree(
        k,
        lambda,
        &BPConfig {
            depth: cfg.depth + 5,
            ..*cfg
        },
        method,
    )?;
    Ok(total_variation(&shallow.distribution(), &deep.distribution()))
}

/// One CSV row of Monte-Carlo output.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EstimateRow {
    pub k: u32,
    /// `λ`, or a kernel identifier for multi-type runs.
    pub lambda: String,
    pub d: usize,
    pub samples: u64,
    pub estimate: f64,
    pub stderr: f64,
    pub aborts: u64,
}

impl EstimateRow {
    pub fn new(k: CoreOrder, lambda: impl ToString, d: usize, est: &BPEstimate) -> Self {
        Self {
            k: k.get(),
            lambda: lambda.to_string(),
            d,
            samples: est.trials,
            estimate: est.estimate,
            stderr: est.stderr,
            aborts: est.aborts,
        }
    }
}

/// Writes rows with header `k,lambda,d,samples,estimate,stderr,aborts`.
pub fn write_estimates_csv<W: Write>(rows: &[EstimateRow], w: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    for row in rows {
        out.serialize(row)?;
    }
    if rows.is_empty() {
        out.write_record(["k", "lambda", "d", "samples", "estimate", "stderr", "aborts"])?;
    }
    out.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn k(v: u32) -> CoreOrder {
        CoreOrder::new(v).unwrap()
    }

    #[test]
    fn depth_zero_always_succeeds() {
        for kk in 2..6 {
            let e = estimate_b_d(k(kk), 0.7, &BPConfig::new(0, 500, 1)).unwrap();
            assert_eq!(e.estimate, 1.0);
            assert_eq!(e.successes, 500);
            assert_eq!(e.aborts, 0);
        }
    }

    #[test]
    fn bplus_depth_zero_rejected() {
        assert!(estimate_bplus_d(k(3), 4.0, &BPConfig::new(0, 10, 1)).is_err());
        assert!(estimate_b_d(k(3), 4.0, &BPConfig::new(1, 0, 1)).is_err());
    }

    #[test]
    fn tiny_cap_aborts_everything() {
        let cfg = BPConfig {
            particle_cap: 1,
            ..BPConfig::new(5, 200, 3)
        };
        let e = estimate_b_d(k(3), 6.0, &cfg).unwrap();
        assert!(e.aborts > 0);
        assert!(e.successes + e.aborts <= e.trials);
    }

    #[test]
    fn deterministic() {
        let cfg = BPConfig::new(6, 2000, 99);
        let a = estimate_b_d(k(3), 4.0, &cfg).unwrap();
        let b = estimate_b_d(k(3), 4.0, &cfg).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn monotone_in_depth() {
        let mut last = 1.0;
        for d in 0..12 {
            let e = estimate_b_d(k(3), 4.0, &BPConfig::new(d, 3000, 5)).unwrap();
            assert!(e.estimate <= last, "depth {d}: {} > {last}", e.estimate);
            last = e.estimate;
        }
    }

    #[test]
    fn analytic_law_sums_to_one() {
        let law = analytic_root_degree_law(k(3), 4.0, &FixedPointConfig::default()).unwrap();
        assert_eq!(*law.keys().next().unwrap(), 3);
        let total: f64 = law.values().sum();
        assert!((total - 1.0).abs() < 1e-12);
        assert!(analytic_root_degree_law(k(3), 3.0, &FixedPointConfig::default())
            .unwrap()
            .is_empty());
    }

    #[test]
    fn total_variation_basics() {
        let p = BTreeMap::from([(1, 0.5), (2, 0.5)]);
        let q = BTreeMap::from([(2, 0.5), (3, 0.5)]);
        assert!((total_variation(&p, &q) - 0.5).abs() < 1e-15);
        assert_eq!(total_variation(&p, &p), 0.0);
    }

    #[test]
    fn root_degrees_respect_conditioning() {
        let cfg = BPConfig::new(4, 500, 8);
        for method in [RootDegreeMethod::Exact, RootDegreeMethod::Pooled { pool_size: 5000 }] {
            let s = sample_core_root_degree(k(3), 4.0, &cfg, method).unwrap();
            assert_eq!(s.conditioned, 500);
            assert!(s.histogram.keys().all(|&d| d >= 3));
            assert_eq!(s.conditioned + s.rejected + s.aborts, s.trials);
        }
    }

    #[test]
    fn csv_header() {
        let e = BPEstimate::from_counts(3, 10, 0);
        let mut buf = Vec::new();
        write_estimates_csv(&[EstimateRow::new(k(3), 4.0, 2, &e)], &mut buf).unwrap();
        let s = String::from_utf8(buf).unwrap();
        assert!(s.starts_with("k,lambda,d,samples,estimate,stderr,aborts\n3,4,2,10,0.3,"));
    }
}
