//! Branching-process Monte Carlo against the analytic recursion.

use kcore::analytic::*;
use kcore::bp::*;

fn k(v: u32) -> CoreOrder {
    CoreOrder::new(v).unwrap()
}

fn within(est: &BPEstimate, target: f64, z: f64) -> bool {
    est.aborts == 0 && est.z_score(target) <= z
}

#[test]
fn depth_zero_is_certain() {
    for kk in 2..6 {
        let est = estimate_b_d(k(kk), 0.7, &BPConfig::new(0, 1000, 1)).unwrap();
        assert_eq!(est.estimate, 1.0);
        assert_eq!(est.successes, 1000);
    }
    assert!(estimate_bplus_d(k(3), 4.0, &BPConfig::new(0, 10, 1)).is_err());
}

#[test]
fn one_generation_is_a_poisson_tail() {
    let est = estimate_b_d(k(3), 4.0, &BPConfig::new(1, 200_000, 11)).unwrap();
    assert!(within(&est, poisson_tail(2, 4.0).unwrap(), 3.0), "{est:?}");
    for (i, lambda) in [2.0, 4.0, 7.5].into_iter().enumerate() {
        let est = estimate_bplus_d(k(3), lambda, &BPConfig::new(1, 200_000, 20 + i as u64)).unwrap();
        assert!(within(&est, poisson_tail(3, lambda).unwrap(), 3.0), "λ={lambda}: {est:?}");
    }
}

#[test]
fn depth_ten_matches_iterates() {
    let cfg = BPConfig::new(10, 100_000, 3);
    let it = b_d_iterates(k(3), 4.0, 10).unwrap();
    let est = estimate_b_d(k(3), 4.0, &cfg).unwrap();
    assert!(within(&est, it[10], 3.0), "{est:?} vs {}", it[10]);
    let plus = estimate_bplus_d(k(3), 4.0, &cfg).unwrap();
    let target = poisson_tail(3, 4.0 * it[9]).unwrap();
    assert!((b_plus_d(k(3), 4.0, 10).unwrap() - target).abs() < 1e-15);
    assert!(within(&plus, target, 3.0), "{plus:?} vs {target}");
}

#[test]
fn subcritical_dies_out() {
    // Exact search at d = 30 would need about 3^30 particles per trial.
    let cfg = BPConfig::new(30, 100_000, 4);
    let est = estimate_bplus_d_pooled(k(3), 3.0, &cfg, 200_000).unwrap();
    let null_se = 1.0 / est.trials as f64;
    assert!(est.estimate <= 3.0 * est.stderr.max(null_se), "{est:?}");
    assert!(b_plus_d(k(3), 3.0, 30).unwrap() < 1e-3);

    let exact = estimate_bplus_d(k(3), 3.0, &BPConfig::new(8, 20_000, 4)).unwrap();
    assert!(within(&exact, b_plus_d(k(3), 3.0, 8).unwrap(), 3.0), "{exact:?}");
}

#[test]
fn pooled_estimates_track_the_recursion() {
    for (kk, lambda, d) in [(3, 4.0, 10), (3, 4.0, 30), (2, 1.5, 20), (4, 6.0, 15)] {
        let cfg = BPConfig::new(d, 100_000, 40 + d as u64);
        let b = estimate_b_d_pooled(k(kk), lambda, &cfg, 400_000).unwrap();
        let it = b_d_iterates(k(kk), lambda, d).unwrap();
        assert!((b.estimate - it[d]).abs() <= 0.01, "k={kk} λ={lambda} d={d}: {b:?} vs {}", it[d]);
        let plus = estimate_bplus_d_pooled(k(kk), lambda, &cfg, 400_000).unwrap();
        let target = b_plus_d(k(kk), lambda, d).unwrap();
        assert!((plus.estimate - target).abs() <= 0.01, "{plus:?} vs {target}");
    }
    let cfg = BPConfig::new(0, 10, 1);
    assert_eq!(estimate_b_d_pooled(k(3), 4.0, &cfg, 10).unwrap().estimate, 1.0);
    assert!(estimate_bplus_d_pooled(k(3), 4.0, &cfg, 10).is_err());
    assert!(estimate_b_d_pooled(k(3), 4.0, &BPConfig::new(3, 10, 1), 0).is_err());
}

#[test]
fn repeated_runs_stay_within_three_standard_errors() {
    let mut hits = 0;
    let runs = 100;
    let target = b_d_iterates(k(3), 4.0, 4).unwrap()[4];
    for seed in 0..runs {
        let est = estimate_b_d(k(3), 4.0, &BPConfig::new(4, 2_000, 1000 + seed)).unwrap();
        if est.z_score(target) <= 3.0 {
            hits += 1;
        }
    }
    assert!(hits >= 99, "{hits}/{runs}");
}

#[test]
fn common_random_numbers_give_monotone_depth() {
    for lambda in [3.0, 4.0, 6.0] {
        let mut last = u64::MAX;
        for d in 0..12 {
            let est = estimate_b_d(k(3), lambda, &BPConfig::new(d, 5_000, 8)).unwrap();
            assert!(est.successes <= last, "λ={lambda} d={d}");
            last = est.successes;
        }
    }
}

#[test]
fn single_type_kernel_reduces_to_poisson_tree() {
    let kernel = FiniteTypeKernel::constant(4.0).unwrap();
    let cfg = BPConfig::new(6, 20_000, 12);
    let single = estimate_b_d(k(3), 4.0, &cfg).unwrap();
    let multi = estimate_b_d_multitype(&kernel, k(3), RootType::Fixed(0), &cfg).unwrap();
    let target = b_d_iterates(k(3), 4.0, 6).unwrap()[6];
    assert!(within(&single, target, 3.0));
    assert!(within(&multi, target, 3.0), "{multi:?}");
    let mixed = estimate_bplus_d_multitype(&kernel, k(3), RootType::Mixed, &cfg).unwrap();
    assert!(within(&mixed, b_plus_d(k(3), 4.0, 6).unwrap(), 3.0));
}

#[test]
fn block_diagonal_root_sees_only_its_block() {
    let kernel =
        FiniteTypeKernel::new(vec![vec![12.5, 0.0], vec![0.0, 5.0]], vec![0.4, 0.6]).unwrap();
    let cfg = BPConfig::new(8, 20_000, 13);
    let block = estimate_b_d_multitype(&kernel, k(3), RootType::Fixed(0), &cfg).unwrap();
    let target = b_d_iterates(k(3), 5.0, 8).unwrap()[8];
    assert!(within(&block, target, 3.0), "{block:?} vs {target}");
    let other = estimate_b_d_multitype(&kernel, k(3), RootType::Fixed(1), &cfg).unwrap();
    assert!(within(&other, b_d_iterates(k(3), 3.0, 8).unwrap()[8], 3.0));
}

#[test]
fn remark_kernel_second_type_between_jumps() {
    let base =
        FiniteTypeKernel::new(vec![vec![2000.0, 0.01], vec![0.01, 2.0]], vec![0.5, 0.5]).unwrap();
    let kernel = base.scaled(1.0).unwrap();
    let d = 20;
    let target = b_d_iterates_finite_type(&kernel, k(3), d)[d][1];
    let est = estimate_b_d_multitype(&kernel, k(3), RootType::Fixed(1), &BPConfig::new(d, 20_000, 14))
        .unwrap();
    assert!(within(&est, target, 3.0), "{est:?} vs {target}");
    assert!(target < 0.01);
}

#[test]
fn raising_the_particle_cap_changes_nothing() {
    let base = BPConfig::new(10, 20_000, 15);
    let low = estimate_b_d(k(3), 4.0, &BPConfig { particle_cap: 1_000_000, ..base }).unwrap();
    let high = estimate_b_d(k(3), 4.0, &BPConfig { particle_cap: 10_000_000, ..base }).unwrap();
    assert!((low.estimate - high.estimate).abs() < low.stderr.max(1e-12));
    assert_eq!(low.aborts, 0);
}

#[test]
fn aborts_are_counted_and_excluded() {
    let cfg = BPConfig {
        particle_cap: 200,
        ..BPConfig::new(10, 5_000, 16)
    };
    let est = estimate_b_d(k(3), 4.0, &cfg).unwrap();
    assert!(est.aborts > 0);
    assert!(est.successes + est.aborts <= est.trials);
    let valid = (est.trials - est.aborts) as f64;
    assert_eq!(est.estimate, est.successes as f64 / valid);
    assert!(est.abort_rate() > 0.0 && est.abort_rate() < 1.0);
}

#[test]
fn fixed_seed_is_deterministic() {
    let cfg = BPConfig::new(7, 10_000, 17);
    assert_eq!(
        estimate_b_d(k(4), 6.0, &cfg).unwrap(),
        estimate_b_d(k(4), 6.0, &cfg).unwrap()
    );
    let other = estimate_b_d(k(4), 6.0, &BPConfig { seed: 18, ..cfg }).unwrap();
    assert_ne!(other.successes, estimate_b_d(k(4), 6.0, &cfg).unwrap().successes);
}

#[test]
fn thread_count_does_not_change_results() {
    let run = |threads: usize| {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
        pool.install(|| {
            let cfg = BPConfig::new(8, 30_000, 19);
            let kernel = FiniteTypeKernel::new(vec![vec![8.0, 1.0], vec![1.0, 3.0]], vec![0.5, 0.5])
                .unwrap();
            (
                estimate_b_d(k(3), 4.0, &cfg).unwrap(),
                estimate_bplus_d_multitype(&kernel, k(3), RootType::Mixed, &cfg).unwrap(),
                sample_core_root_degree(k(3), 4.0, &cfg, RootDegreeMethod::Pooled { pool_size: 50_000 })
                    .unwrap(),
            )
        })
    };
    assert_eq!(run(1), run(3));
}

#[test]
fn root_degree_support_and_accounting() {
    let cfg = BPConfig::new(6, 20_000, 21);
    let sample = sample_core_root_degree(k(3), 4.0, &cfg, RootDegreeMethod::Exact).unwrap();
    assert!(sample.histogram.keys().all(|&d| d >= 3));
    assert_eq!(sample.histogram.values().sum::<u64>(), sample.conditioned);
    assert_eq!(sample.conditioned + sample.rejected + sample.aborts, sample.trials);
    assert!(sample.conditioned >= cfg.samples);
    assert!(sample_core_root_degree(k(3), 4.0, &BPConfig::new(1, 10, 1), RootDegreeMethod::Exact).is_err());
}

#[test]
fn pooled_and_exact_agree_at_moderate_depth() {
    let cfg = BPConfig::new(8, 50_000, 22);
    let exact = sample_core_root_degree(k(3), 4.0, &cfg, RootDegreeMethod::Exact).unwrap();
    let pooled =
        sample_core_root_degree(k(3), 4.0, &cfg, RootDegreeMethod::Pooled { pool_size: 200_000 }).unwrap();
    let tv = total_variation(&exact.distribution(), &pooled.distribution());
    assert!(tv <= 0.02, "tv = {tv}");
}

#[test]
fn deep_root_degree_matches_thinned_poisson() {
    let cfg = BPConfig::new(25, 100_000, 23);
    let sample =
        sample_core_root_degree(k(3), 4.0, &cfg, RootDegreeMethod::Pooled { pool_size: 200_000 }).unwrap();
    let law = analytic_root_degree_law(k(3), 4.0, &FixedPointConfig::default()).unwrap();
    let total: f64 = law.values().sum();
    assert!((total - 1.0).abs() < 1e-12);
    let tv = total_variation(&sample.distribution(), &law);
    assert!(tv <= 0.02, "tv = {tv}");
    assert!(analytic_root_degree_law(k(3), 3.0, &FixedPointConfig::default())
        .unwrap()
        .is_empty());
}

#[test]
fn estimate_rows_serialize() {
    let est = estimate_b_d(k(3), 4.0, &BPConfig::new(2, 100, 1)).unwrap();
    let rows = vec![EstimateRow::new(k(3), 4.0, 2, &est)];
    let mut out = Vec::new();
    write_estimates_csv(&rows, &mut out).unwrap();
    let text = String::from_utf8(out).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("k,lambda,d,samples,estimate,stderr,aborts"));
    assert!(lines.next().unwrap().starts_with("3,4,2,100,"));
}
