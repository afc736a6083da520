use rayon::prelude::*;

use super::{BpEvent, ExperimentRow, ModelSpec};
use crate::analytic::{
    b_d_iterates, b_d_iterates_finite_type, b_plus_d, beta_plus_by_type, beta_plus_uniform,
    CoreOrder, FixedPointConfig,
};
use crate::bp::{
    analytic_root_degree_law, estimate_b_d, estimate_b_d_multitype, estimate_bplus_d,
    estimate_bplus_d_multitype, normalize, root_degree_depth_gap, sample_core_root_degree,
    total_variation, BPConfig, BPEstimate, RootDegreeMethod, RootType,
};
use crate::graph::{generate, EdgeRule, GenSpec, Model};
use crate::peel::{core_degree_histogram_from, core_numbers};
use crate::seed::derive_seed;
use crate::Result;

fn error_row(mut row: ExperimentRow, err: impl std::fmt::Display) -> ExperimentRow {
    row.pass = Some(false);
    row.note = format!("error: {err}");
    row
}

/// `β⁺` for every `(k, p)`; rows ordered by `k`, then grid index.
pub fn solve_grid(
    name: &str,
    model: &ModelSpec,
    ks: &[CoreOrder],
    grid: &[f64],
    solver: &FixedPointConfig,
) -> Vec<ExperimentRow> {
    let jobs: Vec<(CoreOrder, f64)> = ks
        .iter()
        .flat_map(|&k| grid.iter().map(move |&p| (k, p)))
        .collect();
    jobs.par_iter()
        .map(|&(k, p)| {
            let mut row = ExperimentRow::new(name, model.label());
            row.k = Some(k.get());
            row.param = p.to_string();
            match model.beta_plus(k, p, solver) {
                Ok(r) => {
                    row.analytic = Some(r.value);
                    row.stderr = Some(r.residual);
                    row.tolerance = Some(solver.tolerance);
                    row.pass = Some(r.converged);
                    row.note = format!("iterations={}", r.iterations);
                    if r.near_critical {
                        row.note.push_str(";near-critical");
                    }
                    row
                }
                Err(e) => error_row(row, e),
            }
        })
        .collect()
}

/// Generates one graph per `(p, n, seed)` and compares `c_k/n` with `β⁺`.
///
/// Grid points run one after another: each graph already uses every thread,
/// and holding several large graphs at once would multiply peak memory.
#[allow(clippy::too_many_arguments)]
pub fn graph_vs_analytic(
    name: &str,
    model: &ModelSpec,
    k: CoreOrder,
    grid: &[f64],
    ns: &[usize],
    seeds: &[u64],
    edge_rule: EdgeRule,
    tolerance: f64,
    solver: &FixedPointConfig,
) -> Vec<ExperimentRow> {
    let mut rows = Vec::new();
    for &p in grid {
        let base = {
            let mut row = ExperimentRow::new(name, model.label());
            row.k = Some(k.get());
            row.param = p.to_string();
            row.tolerance = Some(tolerance);
            row
        };
        let analytic = model.beta_plus(k, p, solver);
        let graph_model = model.graph_model(p);
        for &n in ns {
            for &seed in seeds {
                let mut row = base.clone();
                row.n = Some(n);
                row.seed = Some(seed);
                let (beta, gm) = match (&analytic, &graph_model) {
                    (Ok(b), Ok(m)) => (b, m),
                    (Err(e), _) | (_, Err(e)) => {
                        rows.push(error_row(row, e));
                        continue;
                    }
                };
                row.analytic = Some(beta.value);
                let spec = GenSpec::new(gm.clone(), seed).with_edge_rule(edge_rule);
                match measure_core_fraction(&spec, n, k) {
                    Ok((frac, m)) => {
                        row.empirical = Some(frac);
                        row.note = format!("m={m}");
                        rows.push(row.judge());
                    }
                    Err(e) => rows.push(error_row(row, e)),
                }
            }
        }
    }
    rows
}

/// `(c_k/n, m)` for one generated graph.
pub(crate) fn measure_core_fraction(spec: &GenSpec, n: usize, k: CoreOrder) -> Result<(f64, usize)> {
    let g = generate(spec, n)?;
    let cores = core_numbers(&g);
    Ok((cores.core_size(k.get() as usize) as f64 / n as f64, g.m()))
}

/// Exact `Pr(B_d)` or `Pr(B⁺_d)` for the model at parameter `p`.
fn analytic_event(
    model: &ModelSpec,
    k: CoreOrder,
    p: f64,
    depth: usize,
    event: BpEvent,
    root: RootType,
) -> Result<f64> {
    match model {
        ModelSpec::FiniteType { .. } => {
            let kernel = model.kernel()?.scaled(p)?;
            let per_type = match event {
                BpEvent::B => b_d_iterates_finite_type(&kernel, k, depth).swap_remove(depth),
                BpEvent::BPlus => {
                    let it = b_d_iterates_finite_type(&kernel, k, depth - 1);
                    beta_plus_by_type(&kernel, k, &it[depth - 1])
                }
            };
            Ok(match root {
                RootType::Fixed(t) => per_type[t],
                RootType::Mixed => per_type.iter().zip(kernel.weights()).map(|(a, w)| a * w).sum(),
            })
        }
        _ => match event {
            BpEvent::B => Ok(b_d_iterates(k, p, depth)?[depth]),
            BpEvent::BPlus => b_plus_d(k, p, depth),
        },
    }
}

fn simulate_event(
    model: &ModelSpec,
    k: CoreOrder,
    p: f64,
    event: BpEvent,
    root: RootType,
    cfg: &BPConfig,
) -> Result<BPEstimate> {
    match model {
        ModelSpec::FiniteType { .. } => {
            let kernel = model.kernel()?.scaled(p)?;
            match event {
                BpEvent::B => estimate_b_d_multitype(&kernel, k, root, cfg),
                BpEvent::BPlus => estimate_bplus_d_multitype(&kernel, k, root, cfg),
            }
        }
        _ => match event {
            BpEvent::B => estimate_b_d(k, p, cfg),
            BpEvent::BPlus => estimate_bplus_d(k, p, cfg),
        },
    }
}

/// Monte-Carlo estimate against the exact finite-depth probability for every
/// `(k, p)`. Grid point `i` uses seed `derive_seed(seed, i)`. A row passes
/// when the estimate is within `z` standard errors, the error being the
/// larger of the empirical one and the one implied by the exact value.
#[allow(clippy::too_many_arguments)]
pub fn bp_vs_analytic(
    name: &str,
    model: &ModelSpec,
    ks: &[CoreOrder],
    grid: &[f64],
    event: BpEvent,
    root: RootType,
    cfg: &BPConfig,
    z: f64,
) -> Vec<ExperimentRow> {
    let mut rows = Vec::new();
    let mut index = 0u64;
    for &k in ks {
        for &p in grid {
            let point = BPConfig {
                seed: derive_seed(cfg.seed, index),
                ..*cfg
            };
            index += 1;
            let mut row = ExperimentRow::new(name, model.label());
            row.k = Some(k.get());
            row.param = p.to_string();
            row.seed = Some(point.seed);
            let result = analytic_event(model, k, p, cfg.depth, event, root)
                .and_then(|a| Ok((a, simulate_event(model, k, p, event, root, &point)?)));
            match result {
                Ok((analytic, est)) => {
                    let score = est.z_score(analytic);
                    row.analytic = Some(analytic);
                    row.empirical = Some(est.estimate);
                    row.stderr = Some(est.stderr);
                    row.tolerance = Some(if score > 0.0 {
                        z * (est.estimate - analytic).abs() / score
                    } else {
                        z * est.stderr
                    });
                    row.pass = Some(score <= z);
                    row.note = format!(
                        "d={};event={};trials={};aborts={}",
                        cfg.depth,
                        match event {
                            BpEvent::B => "B",
                            BpEvent::BPlus => "B+",
                        },
                        est.trials,
                        est.aborts
                    );
                    rows.push(row);
                }
                Err(e) => rows.push(error_row(row, e)),
            }
        }
    }
    rows
}

/// Compares three versions of the degree law of a k-core vertex in
/// `G(n, λ/n)`: the empirical histogram of a generated graph's k-core, the
/// simulated root degree of the core-coupled branching process at depth
/// `d`, and the limiting Poisson(`λβ`) law conditioned on `≥ k`.
///
/// One row per degree (analytic = limiting law, empirical = graph, the
/// simulated value in the note), then summary rows. Only the graph vs
/// simulation total-variation row is judged against `tolerance`.
#[allow(clippy::too_many_arguments)]
pub fn core_degree_law(
    name: &str,
    k: CoreOrder,
    lambda: f64,
    n: usize,
    bp: &BPConfig,
    method: RootDegreeMethod,
    tolerance: f64,
    depth_diagnostic: bool,
    solver: &FixedPointConfig,
) -> Result<Vec<ExperimentRow>> {
    let spec = GenSpec::new(Model::ErdosRenyi { lambda }, bp.seed);
    let g = generate(&spec, n)?;
    let cores = core_numbers(&g);
    let kk = k.get() as usize;
    let graph_law = normalize(&core_degree_histogram_from(&g, &cores, kk));
    let sim_cfg = BPConfig {
        seed: derive_seed(bp.seed, 1),
        ..*bp
    };
    let sample = sample_core_root_degree(k, lambda, &sim_cfg, method)?;
    let sim_law = sample.distribution();
    let limit_law = analytic_root_degree_law(k, lambda, solver)?;

    let base = {
        let mut row = ExperimentRow::new(name, "erdos-renyi");
        row.k = Some(k.get());
        row.n = Some(n);
        row.seed = Some(bp.seed);
        row
    };
    let mut degrees: Vec<usize> = graph_law
        .keys()
        .chain(sim_law.keys())
        .copied()
        .collect();
    degrees.sort_unstable();
    degrees.dedup();
    let mut rows = Vec::new();
    for d in degrees {
        let mut row = base.clone();
        row.param = format!("degree={d}");
        row.analytic = Some(limit_law.get(&d).copied().unwrap_or(0.0));
        row.empirical = Some(graph_law.get(&d).copied().unwrap_or(0.0));
        row.note = format!("simulated={}", sim_law.get(&d).copied().unwrap_or(0.0));
        rows.push(row);
    }

    let beta_plus = beta_plus_uniform(k, lambda, solver)?.value;
    let mut frac = base.clone();
    frac.param = "core-fraction".into();
    frac.analytic = Some(beta_plus);
    frac.empirical = Some(cores.core_size(kk) as f64 / n as f64);
    rows.push(frac);

    let mut tv = base.clone();
    tv.param = "tv(graph,simulated)".into();
    tv.analytic = Some(0.0);
    tv.empirical = Some(total_variation(&graph_law, &sim_law));
    tv.tolerance = Some(tolerance);
    tv.note = format!(
        "d={};conditioned={};rejected={};aborts={}",
        bp.depth, sample.conditioned, sample.rejected, sample.aborts
    );
    rows.push(tv.judge());

    for (label, law) in [("tv(graph,limit)", &graph_law), ("tv(simulated,limit)", &sim_law)] {
        let mut row = base.clone();
        row.param = label.into();
        row.analytic = Some(0.0);
        row.empirical = Some(total_variation(law, &limit_law));
        rows.push(row);
    }

    if depth_diagnostic {
        let mut row = base.clone();
        row.param = "tv(d,d+5)".into();
        row.empirical = Some(root_degree_depth_gap(k, lambda, &sim_cfg, method)?);
        row.note = format!("d={}", bp.depth);
        rows.push(row);
    }
    Ok(rows)
}
