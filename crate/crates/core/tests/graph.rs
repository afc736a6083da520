//! Random graph generators against per-pair probabilities, naive sampling
//! and closed-form moments.

use kcore::analytic::{poisson_pmf, FiniteTypeKernel};
use kcore::graph::*;
use kcore::Error;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Edge probability written out from the model definitions, 0-based vertices.
fn oracle_probability(model: &Model, rule: EdgeRule, n: usize, i: usize, j: usize) -> f64 {
    let nf = n as f64;
    let apply = |kappa: f64| match rule {
        EdgeRule::Capped => (kappa / nf).min(1.0),
        EdgeRule::Odds => kappa / (nf + kappa),
    };
    match model {
        Model::ErdosRenyi { lambda } => apply(*lambda),
        Model::FiniteType { kernel } => {
            let type_of = |v: usize| {
                let mut start = 0;
                for t in 0..kernel.types() - 1 {
                    start += (kernel.mu(t) * nf).floor() as usize;
                    if v < start {
                        return t;
                    }
                }
                kernel.types() - 1
            };
            apply(kernel.kappa(type_of(i), type_of(j)))
        }
        Model::Rank1PowerLaw { c } => {
            let xi = (i + 1) as f64 / nf;
            let xj = (j + 1) as f64 / nf;
            apply(c / (xi * xj).sqrt())
        }
    }
}

fn two_type() -> FiniteTypeKernel {
    FiniteTypeKernel::new(vec![vec![9.0, 2.0], vec![2.0, 4.0]], vec![0.4, 0.6]).unwrap()
}

fn models() -> Vec<Model> {
    vec![
        Model::ErdosRenyi { lambda: 3.0 },
        Model::FiniteType { kernel: two_type() },
        Model::Rank1PowerLaw { c: 2.0 },
    ]
}

#[test]
fn small_n_pair_frequencies_match_probabilities() {
    let seeds = 100_000u64;
    for model in models() {
        for rule in [EdgeRule::Capped, EdgeRule::Odds] {
            let n = 11;
            let mut counts = vec![vec![0u64; n]; n];
            for seed in 0..seeds {
                let spec = GenSpec::new(model.clone(), seed).with_edge_rule(rule);
                let g = generate(&spec, n).unwrap();
                for (u, v) in g.edges() {
                    counts[u as usize][v as usize] += 1;
                }
            }
            for i in 0..n {
                for j in i + 1..n {
                    let p = oracle_probability(&model, rule, n, i, j);
                    let lib = GenSpec::new(model.clone(), 0)
                        .with_edge_rule(rule)
                        .edge_probability(n, i, j);
                    assert!((p - lib).abs() < 1e-15, "{} ({i},{j})", model.name());
                    let freq = counts[i][j] as f64 / seeds as f64;
                    let sigma = (p * (1.0 - p) / seeds as f64).sqrt();
                    assert!(
                        (freq - p).abs() <= 4.0 * sigma,
                        "{} {rule:?} ({i},{j}): {freq} vs {p}",
                        model.name()
                    );
                }
            }
        }
    }
}

/// Largest gap between the empirical CDFs of two samples.
fn ks_statistic(a: &mut [u64], b: &mut [u64]) -> f64 {
    a.sort_unstable();
    b.sort_unstable();
    let (mut i, mut j, mut d) = (0, 0, 0.0f64);
    while i < a.len() && j < b.len() {
        let x = a[i].min(b[j]);
        while i < a.len() && a[i] == x {
            i += 1;
        }
        while j < b.len() && b[j] == x {
            j += 1;
        }
        d = d.max((i as f64 / a.len() as f64 - j as f64 / b.len() as f64).abs());
    }
    d
}

#[test]
fn skip_sampler_matches_naive_edge_count_distribution() {
    let runs = 1000;
    // Two-sample critical value at significance 1e-3.
    let critical = (-(0.5e-3f64).ln() / 2.0).sqrt() * (2.0 / runs as f64).sqrt();
    for (n, c, rule) in [
        (1024, 1.0, EdgeRule::Capped),
        (1024, 2.5, EdgeRule::Odds),
        (200, 3.0, EdgeRule::Capped),
    ] {
        let model = Model::Rank1PowerLaw { c };
        let mut skip: Vec<u64> = (0..runs)
            .map(|s| {
                let spec = GenSpec::new(model.clone(), s).with_edge_rule(rule);
                generate(&spec, n).unwrap().m() as u64
            })
            .collect();
        let probs: Vec<Vec<f64>> = (0..n)
            .map(|i| (i + 1..n).map(|j| oracle_probability(&model, rule, n, i, j)).collect())
            .collect();
        let mut naive: Vec<u64> = (0..runs)
            .map(|s| {
                let mut rng = ChaCha8Rng::seed_from_u64(0xABCD_0000 + s);
                probs
                    .iter()
                    .flatten()
                    .filter(|&&p| rng.random::<f64>() < p)
                    .count() as u64
            })
            .collect();
        let d = ks_statistic(&mut skip, &mut naive);
        assert!(d <= critical, "n={n} c={c} {rule:?}: D = {d} > {critical}");
    }
}

#[test]
fn generation_is_deterministic_and_seed_sensitive() {
    for model in models() {
        let spec = GenSpec::new(model.clone(), 42);
        let a = generate(&spec, 5000).unwrap();
        let b = generate(&spec, 5000).unwrap();
        assert_eq!(a, b);
        let c = generate(&GenSpec::new(model, 43), 5000).unwrap();
        assert_ne!(a, c);
        a.validate().unwrap();
    }
}

#[test]
fn generation_is_independent_of_thread_count() {
    let run = |threads: usize, model: Model| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| generate(&GenSpec::new(model, 9), 20_000).unwrap())
    };
    for model in models() {
        assert_eq!(run(1, model.clone()), run(3, model));
    }
}

#[test]
fn erdos_renyi_edge_count_within_four_sigma() {
    let n = 100_000usize;
    let lambda = 4.0;
    let p = lambda / n as f64;
    let pairs = (n * (n - 1) / 2) as f64;
    let mean = pairs * p;
    let sigma = (pairs * p * (1.0 - p)).sqrt();
    for seed in 0..5 {
        let g = generate(&GenSpec::new(Model::ErdosRenyi { lambda }, seed), n).unwrap();
        assert!((g.m() as f64 - mean).abs() <= 4.0 * sigma, "seed {seed}: {}", g.m());
    }
    let spec = GenSpec::new(Model::ErdosRenyi { lambda }, 0);
    assert!((expected_edge_count(&spec, n).unwrap() - mean).abs() < 1e-6);
}

#[test]
fn erdos_renyi_degrees_are_poisson() {
    let n = 1_000_000usize;
    let g = generate(&GenSpec::new(Model::ErdosRenyi { lambda: 4.0 }, 2024), n).unwrap();
    let hist = degree_histogram(&g);
    assert_eq!(hist.values().sum::<usize>(), n);
    assert_eq!(hist.iter().map(|(d, c)| d * c).sum::<usize>(), 2 * g.m());
    for d in 0..=12usize {
        let p = poisson_pmf(d as u64, 4.0).unwrap();
        let freq = hist.get(&d).copied().unwrap_or(0) as f64 / n as f64;
        let sigma = (p * (1.0 - p) / n as f64).sqrt();
        assert!((freq - p).abs() <= 4.0 * sigma, "degree {d}: {freq} vs {p}");
    }
}

#[test]
fn single_type_kernel_reproduces_erdos_renyi() {
    for rule in [EdgeRule::Capped, EdgeRule::Odds] {
        let er = GenSpec::new(Model::ErdosRenyi { lambda: 3.5 }, 77).with_edge_rule(rule);
        let ft = GenSpec::new(
            Model::FiniteType {
                kernel: FiniteTypeKernel::constant(3.5).unwrap(),
            },
            77,
        )
        .with_edge_rule(rule);
        assert_eq!(generate(&er, 30_000).unwrap(), generate(&ft, 30_000).unwrap());
    }
}

#[test]
fn expected_edge_count_matches_pair_sum() {
    let n = 600;
    for model in models() {
        for rule in [EdgeRule::Capped, EdgeRule::Odds] {
            let spec = GenSpec::new(model.clone(), 0).with_edge_rule(rule);
            let mut oracle = 0.0;
            for i in 0..n {
                for j in i + 1..n {
                    oracle += oracle_probability(&model, rule, n, i, j);
                }
            }
            let got = expected_edge_count(&spec, n).unwrap();
            assert!((got - oracle).abs() <= 1e-9 * oracle, "{} {rule:?}: {got} vs {oracle}", model.name());
        }
    }
}

#[test]
fn rank1_capped_pairs_are_always_present() {
    let c = 3.0;
    let n = 400;
    for seed in 0..20 {
        let g = generate(&GenSpec::new(Model::Rank1PowerLaw { c }, seed), n).unwrap();
        for a in 1..=n {
            for b in a + 1..=n {
                if ((a * b) as f64) <= c * c {
                    assert!(g.has_edge(a - 1, b - 1), "({a},{b}) missing");
                }
            }
        }
    }
}

#[test]
fn edge_limit_is_an_error() {
    let spec = GenSpec::new(Model::ErdosRenyi { lambda: 10.0 }, 1).with_edge_limit(100);
    assert!(matches!(generate(&spec, 1000), Err(Error::EdgeLimit { limit: 100 })));
}

#[test]
fn type_blocks_follow_weights() {
    let model = Model::FiniteType { kernel: two_type() };
    let types = type_assignment(&model, 1001);
    assert_eq!((0..1001).filter(|&v| types.type_of(v) == 0).count(), 400);
    assert_eq!(types.type_of(1000), 1);
    let rank1 = type_assignment(&Model::Rank1PowerLaw { c: 1.0 }, 8);
    assert_eq!(rank1.position(0), Some(0.125));
    assert_eq!(rank1.position(7), Some(1.0));
}

#[test]
fn binary_and_edge_list_roundtrip() {
    let g = generate(&GenSpec::new(Model::Rank1PowerLaw { c: 1.5 }, 3), 3000).unwrap();
    let mut bin = Vec::new();
    write_binary(&g, &mut bin).unwrap();
    assert_eq!(read_binary(bin.as_slice()).unwrap(), g);
    let mut text = Vec::new();
    write_edge_list(&g, &mut text).unwrap();
    assert_eq!(read_edge_list(text.as_slice()).unwrap(), g);

    let mut truncated = bin.clone();
    truncated.pop();
    assert!(read_binary(truncated.as_slice()).is_err());
    bin.push(0);
    assert!(read_binary(bin.as_slice()).is_err());
}

#[test]
fn graph_files_on_disk() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("g.bin");
    let g = generate(&GenSpec::new(Model::ErdosRenyi { lambda: 2.0 }, 5), 500).unwrap();
    write_binary(&g, std::fs::File::create(&path).unwrap()).unwrap();
    let back = read_binary(std::fs::File::open(&path).unwrap()).unwrap();
    assert_eq!(back, g);
}
