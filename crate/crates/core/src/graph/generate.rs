use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{Graph, VertexId};
use crate::analytic::FiniteTypeKernel;
use crate::seed::derive_seed;
use crate::{Error, Result};

pub const DEFAULT_EDGE_LIMIT: u64 = 1 << 31;

/// Rows handled by one parallel task. Output does not depend on it.
const ROWS_PER_TASK: usize = 1 << 12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case")]
pub enum Model {
    /// `G(n, λ/n)`.
    ErdosRenyi { lambda: f64 },
    /// Vertices split into contiguous type blocks, `κ(i, j)` between types.
    FiniteType { kernel: FiniteTypeKernel },
    /// Vertex `i` (1-based) has type `i/n`; kernel `c/√(xy)`.
    Rank1PowerLaw { c: f64 },
}

impl Model {
    pub fn validate(&self) -> Result<()> {
        match self {
            Model::ErdosRenyi { lambda } if !(lambda.is_finite() && *lambda > 0.0) => Err(
                Error::config(format!("Erdős–Rényi λ must be positive, got {lambda}")),
            ),
            Model::Rank1PowerLaw { c } if !(c.is_finite() && *c > 0.0) => Err(Error::config(
                format!("rank-1 density c must be positive, got {c}"),
            )),
            _ => Ok(()),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Model::ErdosRenyi { .. } => "erdos-renyi",
            Model::FiniteType { .. } => "finite-type",
            Model::Rank1PowerLaw { .. } => "rank1",
        }
    }
}

/// How a kernel value `κ` between two vertices becomes an edge probability.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EdgeRule {
    /// `min{κ/n, 1}`.
    #[default]
    Capped,
    /// `κ/(n + κ)`.
    Odds,
}

impl EdgeRule {
    #[inline]
    fn apply(self, kappa: f64, n: f64) -> f64 {
        match self {
            EdgeRule::Capped => (kappa / n).min(1.0),
            EdgeRule::Odds => kappa / (n + kappa),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenSpec {
    pub model: Model,
    #[serde(default)]
    pub edge_rule: EdgeRule,
    pub seed: u64,
    /// Generation fails rather than truncating once this many edges exist.
    #[serde(default = "default_edge_limit")]
    pub edge_limit: u64,
}

fn default_edge_limit() -> u64 {
    DEFAULT_EDGE_LIMIT
}

impl GenSpec {
    pub fn new(model: Model, seed: u64) -> Self {
        Self {
            model,
            edge_rule: EdgeRule::Capped,
            seed,
            edge_limit: DEFAULT_EDGE_LIMIT,
        }
    }

    pub fn with_edge_rule(mut self, rule: EdgeRule) -> Self {
        self.edge_rule = rule;
        self
    }

    pub fn with_edge_limit(mut self, limit: u64) -> Self {
        self.edge_limit = limit;
        self
    }

    /// Probability that vertices `i` and `j` (0-based, distinct) are joined
    /// in a graph on `n` vertices.
    pub fn edge_probability(&self, n: usize, i: usize, j: usize) -> f64 {
        let types = type_assignment(&self.model, n);
        self.pair_probability(&types, n, i, j)
    }

    fn pair_probability(&self, types: &TypeAssignment, n: usize, i: usize, j: usize) -> f64 {
        let nf = n as f64;
        match &self.model {
            Model::ErdosRenyi { lambda } => self.edge_rule.apply(*lambda, nf),
            Model::FiniteType { kernel } => {
                self.edge_rule
                    .apply(kernel.kappa(types.type_of(i), types.type_of(j)), nf)
            }
            Model::Rank1PowerLaw { c } => rank1_probability(*c, self.edge_rule, i + 1, j + 1),
        }
    }
}

/// `p` for 1-based vertices `a`, `b` under `κ = c n/√(ab)`; the factor `n`
/// cancels in both rules.
#[inline]
fn rank1_probability(c: f64, rule: EdgeRule, a: usize, b: usize) -> f64 {
    let root = ((a as f64) * (b as f64)).sqrt();
    match rule {
        EdgeRule::Capped => (c / root).min(1.0),
        EdgeRule::Odds => c / (root + c),
    }
}

/// Deterministic vertex types.
#[derive(Debug, Clone, PartialEq)]
pub enum TypeAssignment {
    /// Every vertex has the same type.
    Single,
    /// Type `t` occupies `bounds[t]..bounds[t + 1]`. Block sizes are
    /// `⌊μ_t n⌋`, with the rounding remainder added to the last type.
    Blocks(Vec<usize>),
    /// Vertex `i` (0-based) has type `(i + 1)/n ∈ (0, 1]`.
    Positions { n: usize },
}

impl TypeAssignment {
    pub fn type_of(&self, v: usize) -> usize {
        match self {
            TypeAssignment::Single | TypeAssignment::Positions { .. } => 0,
            TypeAssignment::Blocks(bounds) => bounds.partition_point(|&b| b <= v) - 1,
        }
    }

    pub fn position(&self, v: usize) -> Option<f64> {
        match self {
            TypeAssignment::Positions { n } => Some((v + 1) as f64 / *n as f64),
            _ => None,
        }
    }
}

pub fn type_assignment(model: &Model, n: usize) -> TypeAssignment {
    match model {
        Model::ErdosRenyi { .. } => TypeAssignment::Single,
        Model::FiniteType { kernel } => {
            let r = kernel.types();
            let mut bounds = Vec::with_capacity(r + 1);
            bounds.push(0);
            for t in 0..r - 1 {
                let size = (kernel.mu(t) * n as f64).floor() as usize;
                let next = (bounds[t] + size).min(n);
                bounds.push(next);
            }
            bounds.push(n);
            TypeAssignment::Blocks(bounds)
        }
        Model::Rank1PowerLaw { .. } => TypeAssignment::Positions { n },
    }
}

/// Number of failures before the first success of a Bernoulli(`p`) sequence.
#[inline]
fn geometric_skip<R: Rng>(rng: &mut R, ln_q: f64) -> f64 {
    let u: f64 = rng.random();
    ((1.0 - u).ln() / ln_q).floor()
}

/// Appends each `j ∈ [lo, hi)` independently with probability `p`.
fn sample_block<R: Rng>(rng: &mut R, lo: usize, hi: usize, p: f64, out: &mut Vec<usize>) {
    if p <= 0.0 || lo >= hi {
        return;
    }
    if p >= 1.0 {
        out.extend(lo..hi);
        return;
    }
    let ln_q = (-p).ln_1p();
    let mut j = lo as f64;
    let end = hi as f64;
    loop {
        j += geometric_skip(rng, ln_q);
        if j >= end {
            break;
        }
        out.push(j as usize);
        j += 1.0;
    }
}

/// Row `i` of the rank-1 model: pairs that are certain under the cap are
/// emitted first, then the decreasing probabilities are sampled by
/// proposal-and-thin skipping, using the last evaluated probability as the
/// proposal rate for the gap that follows.
fn sample_rank1_row<R: Rng>(rng: &mut R, c: f64, rule: EdgeRule, i: usize, n: usize, out: &mut Vec<usize>) {
    let a = i + 1;
    let mut j = i + 1;
    while j < n && rank1_probability(c, rule, a, j + 1) >= 1.0 {
        out.push(j);
        j += 1;
    }
    if j >= n {
        return;
    }
    let mut q = rank1_probability(c, rule, a, j + 1);
    let end = n as f64;
    let mut jf = j as f64;
    loop {
        if q <= 0.0 {
            break;
        }
        jf += geometric_skip(rng, (-q).ln_1p());
        if jf >= end {
            break;
        }
        let j = jf as usize;
        let p = rank1_probability(c, rule, a, j + 1);
        if rng.random::<f64>() * q < p {
            out.push(j);
        }
        q = p;
        jf += 1.0;
    }
}

fn sample_row(
    spec: &GenSpec,
    types: &TypeAssignment,
    n: usize,
    i: usize,
    out: &mut Vec<usize>,
) {
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(spec.seed, i as u64));
    let nf = n as f64;
    match (&spec.model, types) {
        (Model::ErdosRenyi { lambda }, _) => {
            sample_block(&mut rng, i + 1, n, spec.edge_rule.apply(*lambda, nf), out)
        }
        (Model::FiniteType { kernel }, TypeAssignment::Blocks(bounds)) => {
            let ti = types.type_of(i);
            for t in ti..kernel.types() {
                let lo = bounds[t].max(i + 1);
                let p = spec.edge_rule.apply(kernel.kappa(ti, t), nf);
                sample_block(&mut rng, lo, bounds[t + 1], p, out);
            }
        }
        (Model::Rank1PowerLaw { c }, _) => sample_rank1_row(&mut rng, *c, spec.edge_rule, i, n, out),
        (Model::FiniteType { .. }, _) => unreachable!("finite-type models use block types"),
    }
}

/// Samples the graph: each pair `{i, j}` is present independently with
/// probability [`GenSpec::edge_probability`].
///
/// Row `i` (its pairs with larger `j`) draws from its own ChaCha8 stream
/// seeded with `derive_seed(seed, i)`, so the result is bit-identical for a
/// given spec and `n` regardless of how rows are scheduled across threads.
pub fn generate(spec: &GenSpec, n: usize) -> Result<Graph> {
    if n == 0 {
        return Err(Error::config("a graph needs at least one vertex"));
    }
    if n > VertexId::MAX as usize {
        return Err(Error::config(format!("n = {n} exceeds the u32 vertex index range")));
    }
    spec.model.validate()?;
    let types = type_assignment(&spec.model, n);
    let limit = spec.edge_limit;
    let tasks = n.div_ceil(ROWS_PER_TASK);
    let chunks: Vec<Result<Vec<(VertexId, VertexId)>>> = (0..tasks)
        .into_par_iter()
        .map(|task| {
            let mut edges = Vec::new();
            let mut row = Vec::new();
            let start = task * ROWS_PER_TASK;
            for i in start..(start + ROWS_PER_TASK).min(n) {
                row.clear();
                sample_row(spec, &types, n, i, &mut row);
                edges.extend(row.iter().map(|&j| (i as VertexId, j as VertexId)));
                if edges.len() as u64 > limit {
                    return Err(Error::EdgeLimit { limit });
                }
            }
            Ok(edges)
        })
        .collect();
    let mut edges = Vec::new();
    for chunk in chunks {
        edges.extend(chunk?);
        if edges.len() as u64 > limit {
            return Err(Error::EdgeLimit { limit });
        }
    }
    Graph::from_edges(n, &edges)
}

/// Exact `Σ_{i<j} p_ij`.
///
/// Closed form for block models; `O(n)` prefix sums for the capped rank-1
/// rule; a direct `O(n²)` sum for the rank-1 odds rule.
pub fn expected_edge_count(spec: &GenSpec, n: usize) -> Result<f64> {
    spec.model.validate()?;
    let nf = n as f64;
    let pairs = |s: usize| (s as f64) * (s as f64 - 1.0) / 2.0;
    Ok(match &spec.model {
        Model::ErdosRenyi { lambda } => pairs(n) * spec.edge_rule.apply(*lambda, nf),
        Model::FiniteType { kernel } => {
            let TypeAssignment::Blocks(bounds) = type_assignment(&spec.model, n) else {
                unreachable!()
            };
            let size = |t: usize| bounds[t + 1] - bounds[t];
            let mut total = 0.0;
            for a in 0..kernel.types() {
                total += pairs(size(a)) * spec.edge_rule.apply(kernel.kappa(a, a), nf);
                for b in (a + 1)..kernel.types() {
                    total += size(a) as f64
                        * size(b) as f64
                        * spec.edge_rule.apply(kernel.kappa(a, b), nf);
                }
            }
            total
        }
        Model::Rank1PowerLaw { c } => match spec.edge_rule {
            EdgeRule::Capped => rank1_capped_expected_edges(*c, n),
            EdgeRule::Odds => (1..=n)
                .into_par_iter()
                .map(|a| {
                    ((a + 1)..=n)
                        .map(|b| rank1_probability(*c, EdgeRule::Odds, a, b))
                        .sum::<f64>()
                })
                .collect::<Vec<f64>>()
                .iter()
                .sum(),
        },
    })
}

fn rank1_capped_expected_edges(c: f64, n: usize) -> f64 {
    // prefix[m] = Σ_{b ≤ m} b^{-1/2}, Kahan-compensated.
    let mut prefix = Vec::with_capacity(n + 1);
    prefix.push(0.0);
    let (mut sum, mut comp) = (0.0f64, 0.0f64);
    for b in 1..=n {
        let y = 1.0 / (b as f64).sqrt() - comp;
        let t = sum + y;
        comp = (t - sum) - y;
        sum = t;
        prefix.push(sum);
    }
    let mut total = 0.0;
    for a in 1..=n {
        // Certain pairs: b in (a, last_certain].
        let mut last_certain = a;
        let guess = ((c * c) / a as f64).floor() as usize;
        if guess > a {
            last_certain = guess.min(n);
            while last_certain > a && rank1_probability(c, EdgeRule::Capped, a, last_certain) < 1.0 {
                last_certain -= 1;
            }
            while last_certain < n && rank1_probability(c, EdgeRule::Capped, a, last_certain + 1) >= 1.0 {
                last_certain += 1;
            }
        }
        total += (last_certain - a) as f64;
        total += c / (a as f64).sqrt() * (prefix[n] - prefix[last_certain]);
    }
    total
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn block_sizes_take_floor_with_remainder_last() {
        let kernel = FiniteTypeKernel::new(
            vec![vec![1.0; 3]; 3],
            vec![0.3, 0.3, 0.4],
        )
        .unwrap();
        let types = type_assignment(&Model::FiniteType { kernel }, 11);
        assert_eq!(types, TypeAssignment::Blocks(vec![0, 3, 6, 11]));
        assert_eq!(types.type_of(0), 0);
        assert_eq!(types.type_of(3), 1);
        assert_eq!(types.type_of(10), 2);
    }

    #[test]
    fn rank1_positions() {
        let t = type_assignment(&Model::Rank1PowerLaw { c: 1.0 }, 4);
        assert_eq!(t.position(0), Some(0.25));
        assert_eq!(t.position(3), Some(1.0));
    }

    #[test]
    fn rank1_probabilities() {
        let spec = GenSpec::new(Model::Rank1PowerLaw { c: 2.0 }, 0);
        assert_eq!(spec.edge_probability(10, 0, 1), 1.0);
        assert!((spec.edge_probability(10, 0, 4) - 2.0 / 5f64.sqrt()).abs() < 1e-15);
        let odds = spec.clone().with_edge_rule(EdgeRule::Odds);
        assert!((odds.edge_probability(10, 1, 2) - 2.0 / (6f64.sqrt() + 2.0)).abs() < 1e-15);
    }

    #[test]
    fn rejects_zero_vertices_and_bad_params() {
        let spec = GenSpec::new(Model::ErdosRenyi { lambda: 2.0 }, 0);
        assert!(generate(&spec, 0).is_err());
        let spec = GenSpec::new(Model::ErdosRenyi { lambda: -2.0 }, 0);
        assert!(generate(&spec, 10).is_err());
    }

    #[test]
    fn edge_limit_is_an_error() {
        let spec = GenSpec::new(Model::ErdosRenyi { lambda: 10.0 }, 3).with_edge_limit(100);
        assert!(matches!(generate(&spec, 1000), Err(Error::EdgeLimit { limit: 100 })));
    }

    #[test]
    fn dense_cap_gives_complete_graph() {
        let spec = GenSpec::new(Model::ErdosRenyi { lambda: 50.0 }, 3);
        let g = generate(&spec, 20).unwrap();
        assert_eq!(g.m(), 190);
    }

    #[test]
    fn expected_counts_closed_forms() {
        let er = GenSpec::new(Model::ErdosRenyi { lambda: 4.0 }, 0);
        assert!((expected_edge_count(&er, 1000).unwrap() - 999.0 * 1000.0 / 2.0 * 4.0 / 1000.0).abs() < 1e-9);
        let odds = er.with_edge_rule(EdgeRule::Odds);
        let want = 999.0 * 1000.0 / 2.0 * 4.0 / 1004.0;
        assert!((expected_edge_count(&odds, 1000).unwrap() - want).abs() < 1e-9);
    }
}
