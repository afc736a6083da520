//! Config-driven experiments comparing analytic predictions with empirical
//! measurements.
//!
//! An experiment is described by one JSON document (see [`ExperimentConfig`])
//! and produces a list of [`ExperimentRow`]s, written as CSV with the columns
//! in [`CSV_COLUMNS`]. Rows are ordered by grid index, then `n`, then seed,
//! so the same config always yields the same bytes.

mod fit;
mod k2;
mod sweep;
mod threshold;

use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

pub use fit::{fit_exponent, ExponentFit};
pub use k2::{k2_trend, K2Point, K2Trend, K2_C_FLOOR};
pub use sweep::{bp_vs_analytic, core_degree_law, graph_vs_analytic, solve_grid};
pub use threshold::{rank1_c_threshold, threshold_scan, Jump, ThresholdReport};

use crate::analytic::{
    beta_plus_finite_type, beta_plus_rank1, beta_plus_uniform, CoreOrder, FiniteTypeKernel,
    FixedPointConfig, Rank1PowerLawKernel, SolveResult,
};
use crate::bp::{RootDegreeMethod, RootType};
use crate::graph::{EdgeRule, Model};
use crate::{Error, Result};

/// Version of the CSV column set below.
pub const SCHEMA_VERSION: u32 = 1;

pub const CSV_COLUMNS: [&str; 12] = [
    "experiment",
    "model",
    "k",
    "param",
    "n",
    "seed",
    "analytic",
    "empirical",
    "stderr",
    "tolerance",
    "pass",
    "note",
];

/// Which random graph family an experiment sweeps. The swept parameter is
/// `λ` for Erdős–Rényi, the kernel scale for finite-type kernels and `c` for
/// the rank-1 kernel.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ModelSpec {
    ErdosRenyi {},
    FiniteType {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        kernel: Option<FiniteTypeKernel>,
        /// JSON kernel file, relative to the config file's directory.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        kernel_file: Option<PathBuf>,
    },
    Rank1 {},
}

impl ModelSpec {
    pub fn label(&self) -> &'static str {
        match self {
            ModelSpec::ErdosRenyi {} => "erdos-renyi",
            ModelSpec::FiniteType { .. } => "finite-type",
            ModelSpec::Rank1 {} => "rank1",
        }
    }

    /// Replaces a kernel file reference by the parsed kernel.
    fn resolve(&mut self, base: &Path) -> Result<()> {
        if let ModelSpec::FiniteType { kernel, kernel_file } = self {
            match (kernel.is_some(), kernel_file.take()) {
                (true, Some(_)) => {
                    return Err(Error::config("give either `kernel` or `kernel_file`, not both"))
                }
                (false, None) => {
                    return Err(Error::config("finite-type model needs `kernel` or `kernel_file`"))
                }
                (false, Some(path)) => *kernel = Some(load_kernel(&base.join(path))?),
                (true, None) => {}
            }
        }
        Ok(())
    }

    fn kernel(&self) -> Result<&FiniteTypeKernel> {
        match self {
            ModelSpec::FiniteType {
                kernel: Some(kernel),
                ..
            } => Ok(kernel),
            _ => Err(Error::config("kernel not resolved")),
        }
    }

    /// Generator model at parameter `p`.
    pub fn graph_model(&self, p: f64) -> Result<Model> {
        Ok(match self {
            ModelSpec::ErdosRenyi {} => Model::ErdosRenyi { lambda: p },
            ModelSpec::FiniteType { .. } => Model::FiniteType {
                kernel: self.kernel()?.scaled(p)?,
            },
            ModelSpec::Rank1 {} => Model::Rank1PowerLaw { c: p },
        })
    }

    /// Predicted k-core fraction `β⁺` at parameter `p`.
    pub fn beta_plus(&self, k: CoreOrder, p: f64, cfg: &FixedPointConfig) -> Result<SolveResult> {
        match self {
            ModelSpec::ErdosRenyi {} => beta_plus_uniform(k, p, cfg),
            ModelSpec::FiniteType { .. } => beta_plus_finite_type(&self.kernel()?.scaled(p)?, k, cfg),
            ModelSpec::Rank1 {} => beta_plus_rank1(&Rank1PowerLawKernel::new(p)?, k, cfg),
        }
    }
}

/// Reads a `{"kappa": [[...]], "mu": [...]}` kernel file.
pub fn load_kernel(path: &Path) -> Result<FiniteTypeKernel> {
    let text = std::fs::read_to_string(path).map_err(|source| Error::File {
        path: path.to_path_buf(),
        source,
    })?;
    Ok(serde_json::from_str(&text)?)
}

fn default_gap() -> f64 {
    0.01
}

fn default_graph_tolerance() -> f64 {
    0.01
}

fn default_z() -> f64 {
    3.0
}

fn default_slope_tolerance() -> f64 {
    0.05
}

fn default_coefficient_tolerance() -> f64 {
    0.10
}

fn default_tv_tolerance() -> f64 {
    0.02
}

fn default_threshold_precision() -> f64 {
    1e-6
}

/// Monte-Carlo event for `bp-vs-analytic`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BpEvent {
    #[default]
    B,
    BPlus,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Experiment {
    /// Analytic `β⁺` over a grid.
    Solve {
        model: ModelSpec,
        k: Vec<CoreOrder>,
        grid: Vec<f64>,
    },
    /// Jumps of `β⁺` along the grid; for rank-1 also the bisected
    /// `c`-threshold, for Erdős–Rényi also `λ_c`.
    Threshold {
        model: ModelSpec,
        k: CoreOrder,
        grid: Vec<f64>,
        #[serde(default = "default_gap")]
        gap: f64,
        #[serde(default = "default_threshold_precision")]
        precision: f64,
    },
    /// Empirical `c_k/n` of generated graphs against `β⁺`.
    GraphVsAnalytic {
        model: ModelSpec,
        k: CoreOrder,
        grid: Vec<f64>,
        n: Vec<usize>,
        seeds: Vec<u64>,
        #[serde(default)]
        edge_rule: EdgeRule,
        #[serde(default = "default_graph_tolerance")]
        tolerance: f64,
    },
    /// Monte-Carlo `Pr(B_d)` or `Pr(B⁺_d)` against the exact iterate.
    BpVsAnalytic {
        model: ModelSpec,
        k: Vec<CoreOrder>,
        grid: Vec<f64>,
        depth: usize,
        samples: u64,
        seed: u64,
        #[serde(default)]
        event: BpEvent,
        #[serde(default = "crate::harness::default_root")]
        root: RootType,
        #[serde(default = "crate::harness::default_cap")]
        particle_cap: u64,
        /// Allowed deviation in standard errors.
        #[serde(default = "default_z")]
        z: f64,
    },
    /// Power-law fit of rank-1 `β⁺` just above the threshold.
    ExponentFit {
        k: CoreOrder,
        eps: Vec<f64>,
        #[serde(default = "default_slope_tolerance")]
        slope_tolerance: f64,
        #[serde(default = "default_coefficient_tolerance")]
        coefficient_tolerance: f64,
    },
    /// Degree law inside the k-core of `G(n, λ/n)` against the simulated
    /// root degree law of the core-coupled branching process.
    CoreDegreeLaw {
        k: CoreOrder,
        lambda: f64,
        n: usize,
        seed: u64,
        depth: usize,
        samples: u64,
        method: RootDegreeMethod,
        #[serde(default = "default_tv_tolerance")]
        tolerance: f64,
        /// Also report the gap between depths `d` and `d + 5`.
        #[serde(default)]
        depth_diagnostic: bool,
    },
    /// Rank-1 2-core quantities against their small-`c` asymptotes.
    K2Trend { c: Vec<f64> },
}

pub(crate) fn default_root() -> RootType {
    RootType::Mixed
}

pub(crate) fn default_cap() -> u64 {
    crate::bp::DEFAULT_PARTICLE_CAP
}

impl Experiment {
    pub fn kind(&self) -> &'static str {
        match self {
            Experiment::Solve { .. } => "solve",
            Experiment::Threshold { .. } => "threshold",
            Experiment::GraphVsAnalytic { .. } => "graph-vs-analytic",
            Experiment::BpVsAnalytic { .. } => "bp-vs-analytic",
            Experiment::ExponentFit { .. } => "exponent-fit",
            Experiment::CoreDegreeLaw { .. } => "core-degree-law",
            Experiment::K2Trend { .. } => "k2-trend",
        }
    }
}

/// A complete experiment description.
///
/// ```json
/// {
///   "name": "er-k3",
///   "kind": "graph-vs-analytic",
///   "model": {"type": "erdos-renyi"},
///   "k": 3, "grid": [3.0, 4.0], "n": [100000], "seeds": [1, 2, 3],
///   "output": "er-k3.csv"
/// }
/// ```
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    /// Value of the `experiment` column; defaults to the kind.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    #[serde(flatten)]
    pub experiment: Experiment,
    #[serde(default)]
    pub solver: FixedPointConfig,
    /// CSV destination, relative to the config file's directory.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
}

impl ExperimentConfig {
    pub fn new(experiment: Experiment) -> Self {
        Self {
            name: None,
            experiment,
            solver: FixedPointConfig::default(),
            output: None,
        }
    }

    /// Parses and validates a config; kernel files and the output path are
    /// resolved against `base`.
    pub fn from_json(text: &str, base: &Path) -> Result<Self> {
        let mut cfg: Self = serde_json::from_str(text)?;
        cfg.resolve(base)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::File {
            path: path.to_path_buf(),
            source,
        })?;
        let base = path.parent().unwrap_or(Path::new("."));
        Self::from_json(&text, base)
    }

    fn resolve(&mut self, base: &Path) -> Result<()> {
        match &mut self.experiment {
            Experiment::Solve { model, .. }
            | Experiment::Threshold { model, .. }
            | Experiment::GraphVsAnalytic { model, .. }
            | Experiment::BpVsAnalytic { model, .. } => model.resolve(base)?,
            _ => {}
        }
        if let Some(out) = &self.output {
            self.output = Some(base.join(out));
        }
        Ok(())
    }

    pub fn name(&self) -> &str {
        self.name.as_deref().unwrap_or(self.experiment.kind())
    }

    pub fn validate(&self) -> Result<()> {
        self.solver.validate()?;
        let grid_ok = |grid: &[f64], what: &str| -> Result<()> {
            if grid.is_empty() {
                return Err(Error::config(format!("{what} grid is empty")));
            }
            if let Some(v) = grid.iter().find(|v| !(v.is_finite() && **v > 0.0)) {
                return Err(Error::config(format!("{what} grid value {v} must be positive")));
            }
            Ok(())
        };
        let nonempty = |len: usize, what: &str| -> Result<()> {
            if len == 0 {
                Err(Error::config(format!("{what} list is empty")))
            } else {
                Ok(())
            }
        };
        match &self.experiment {
            Experiment::Solve { model, k, grid } => {
                model.kernel_if_needed()?;
                nonempty(k.len(), "k")?;
                grid_ok(grid, "parameter")
            }
            Experiment::Threshold {
                model,
                grid,
                gap,
                precision,
                ..
            } => {
                model.kernel_if_needed()?;
                grid_ok(grid, "parameter")?;
                if !(*gap > 0.0) || !(*precision > 0.0) {
                    return Err(Error::config("gap and precision must be positive"));
                }
                Ok(())
            }
            Experiment::GraphVsAnalytic {
                model,
                grid,
                n,
                seeds,
                tolerance,
                ..
            } => {
                model.kernel_if_needed()?;
                grid_ok(grid, "parameter")?;
                nonempty(n.len(), "n")?;
                nonempty(seeds.len(), "seed")?;
                if n.contains(&0) {
                    return Err(Error::config("n values must be positive"));
                }
                if !(*tolerance >= 0.0) {
                    return Err(Error::config("tolerance must be nonnegative"));
                }
                Ok(())
            }
            Experiment::BpVsAnalytic {
                model,
                k,
                grid,
                samples,
                root,
                particle_cap,
                event,
                depth,
                ..
            } => {
                if matches!(model, ModelSpec::Rank1 {}) {
                    return Err(Error::config(
                        "bp-vs-analytic supports erdos-renyi and finite-type models",
                    ));
                }
                model.kernel_if_needed()?;
                nonempty(k.len(), "k")?;
                grid_ok(grid, "parameter")?;
                if *samples == 0 || *particle_cap == 0 {
                    return Err(Error::config("samples and particle_cap must be positive"));
                }
                if *event == BpEvent::BPlus && *depth == 0 {
                    return Err(Error::config("B⁺_d needs depth at least 1"));
                }
                if let (RootType::Fixed(t), ModelSpec::FiniteType { .. }) = (root, model) {
                    if *t >= model.kernel()?.types() {
                        return Err(Error::config(format!("root type {t} out of range")));
                    }
                }
                Ok(())
            }
            Experiment::ExponentFit { k, eps, .. } => {
                k.require_at_least_3()?;
                grid_ok(eps, "ε")
            }
            Experiment::CoreDegreeLaw {
                lambda,
                n,
                depth,
                samples,
                ..
            } => {
                grid_ok(&[*lambda], "λ")?;
                if *n == 0 || *samples == 0 {
                    return Err(Error::config("n and samples must be positive"));
                }
                if *depth < 2 {
                    return Err(Error::config("depth must be at least 2"));
                }
                Ok(())
            }
            Experiment::K2Trend { c } => grid_ok(c, "c"),
        }
    }
}

impl ModelSpec {
    fn kernel_if_needed(&self) -> Result<()> {
        if let ModelSpec::FiniteType { .. } = self {
            self.kernel()?;
        }
        Ok(())
    }
}

/// One line of experiment output. Parameter columns come first.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentRow {
    pub experiment: String,
    pub model: String,
    pub k: Option<u32>,
    /// Swept parameter value, or a label for summary rows.
    pub param: String,
    pub n: Option<usize>,
    pub seed: Option<u64>,
    pub analytic: Option<f64>,
    pub empirical: Option<f64>,
    /// Standard error for Monte-Carlo rows, solver residual for analytic rows.
    pub stderr: Option<f64>,
    pub tolerance: Option<f64>,
    /// `|empirical - analytic| ≤ tolerance` where both exist; for purely
    /// analytic rows, whether the solver converged. Empty when not judged.
    pub pass: Option<bool>,
    pub note: String,
}

impl ExperimentRow {
    pub(crate) fn new(experiment: &str, model: &str) -> Self {
        Self {
            experiment: experiment.to_string(),
            model: model.to_string(),
            k: None,
            param: String::new(),
            n: None,
            seed: None,
            analytic: None,
            empirical: None,
            stderr: None,
            tolerance: None,
            pass: None,
            note: String::new(),
        }
    }

    /// Sets `pass` from the values and tolerance.
    pub(crate) fn judge(mut self) -> Self {
        if let (Some(a), Some(e), Some(t)) = (self.analytic, self.empirical, self.tolerance) {
            self.pass = Some((e - a).abs() <= t);
        }
        self
    }

    pub fn failed(&self) -> bool {
        self.pass == Some(false)
    }
}

pub fn write_csv<W: Write>(rows: &[ExperimentRow], w: W) -> Result<()> {
    let mut out = csv::WriterBuilder::new().has_headers(false).from_writer(w);
    out.write_record(CSV_COLUMNS)?;
    for row in rows {
        out.serialize(row)?;
    }
    out.flush()?;
    Ok(())
}

/// Runs an experiment. Failures of individual grid points are recorded in
/// their rows and do not stop the run.
pub fn run(cfg: &ExperimentConfig) -> Result<Vec<ExperimentRow>> {
    cfg.validate()?;
    let name = cfg.name();
    let solver = &cfg.solver;
    match &cfg.experiment {
        Experiment::Solve { model, k, grid } => Ok(solve_grid(name, model, k, grid, solver)),
        Experiment::Threshold {
            model,
            k,
            grid,
            gap,
            precision,
        } => {
            let report = threshold_scan(model, *k, grid, *gap, *precision, solver)?;
            Ok(report.rows(name, model, *k))
        }
        Experiment::GraphVsAnalytic {
            model,
            k,
            grid,
            n,
            seeds,
            edge_rule,
            tolerance,
        } => Ok(graph_vs_analytic(
            name, model, *k, grid, n, seeds, *edge_rule, *tolerance, solver,
        )),
        Experiment::BpVsAnalytic {
            model,
            k,
            grid,
            depth,
            samples,
            seed,
            event,
            root,
            particle_cap,
            z,
        } => {
            let bp = crate::bp::BPConfig {
                depth: *depth,
                samples: *samples,
                particle_cap: *particle_cap,
                seed: *seed,
            };
            Ok(bp_vs_analytic(name, model, k, grid, *event, *root, &bp, *z))
        }
        Experiment::ExponentFit {
            k,
            eps,
            slope_tolerance,
            coefficient_tolerance,
        } => {
            let fit = fit_exponent(*k, eps, solver)?;
            Ok(fit.rows(name, *k, *slope_tolerance, *coefficient_tolerance))
        }
        Experiment::CoreDegreeLaw {
            k,
            lambda,
            n,
            seed,
            depth,
            samples,
            method,
            tolerance,
            depth_diagnostic,
        } => {
            let bp = crate::bp::BPConfig::new(*depth, *samples, *seed);
            core_degree_law(
                name,
                *k,
                *lambda,
                *n,
                &bp,
                *method,
                *tolerance,
                *depth_diagnostic,
                solver,
            )
        }
        Experiment::K2Trend { c } => Ok(k2_trend(c, solver)?.rows(name)),
    }
}

/// Runs an experiment and writes its CSV to the configured output, if any.
pub fn run_and_write(cfg: &ExperimentConfig) -> Result<Vec<ExperimentRow>> {
    let rows = run(cfg)?;
    if let Some(path) = &cfg.output {
        let file = std::fs::File::create(path).map_err(|source| Error::File {
            path: path.clone(),
            source,
        })?;
        write_csv(&rows, std::io::BufWriter::new(file))?;
    }
    Ok(rows)
}
