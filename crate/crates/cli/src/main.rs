//! `kcore`: analytic k-core sizes, graph generation, peeling and
//! branching-process estimates from the command line.
//!
//! Exit status is 0 on success, 1 on invalid input and 2 when an
//! `experiment` run completes but some row fails its tolerance.

use std::fs::File;
use std::io::{self, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use kcore::analytic::{
    a_rank1, beta_plus_finite_type, beta_plus_rank1, beta_plus_uniform, beta_uniform, lambda_c,
    CoreOrder, FixedPointConfig, Rank1PowerLawKernel,
};
use kcore::bp::{
    estimate_b_d, estimate_b_d_pooled, estimate_bplus_d, estimate_bplus_d_pooled,
    write_estimates_csv, BPConfig, EstimateRow,
};
use kcore::graph::{self, EdgeRule, GenSpec, Model};
use kcore::harness::{self, load_kernel, rank1_c_threshold, ExperimentConfig};
use kcore::peel::core_numbers;

#[derive(Parser)]
#[command(
    name = "kcore",
    version,
    about = "k-core sizes of sparse random graphs"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Analytic β and β⁺ (and A for the rank-1 kernel).
    Solve(SolveArgs),
    /// λ_c(k) for G(n, λ/n), or the rank-1 c-threshold with --c-threshold.
    Threshold(ThresholdArgs),
    /// Generate a random graph and write it to a file.
    Gen(GenArgs),
    /// Core decomposition of a graph file.
    Core(CoreArgs),
    /// Monte-Carlo estimate of Pr(B_d) or Pr(B⁺_d).
    Bp(BpArgs),
    /// Run a JSON-configured experiment.
    Experiment(ExperimentArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Clone, Copy, ValueEnum)]
enum GraphFormat {
    /// Flat little-endian binary.
    Binary,
    /// One `i j` edge per line.
    Edges,
}

#[derive(Clone, Copy, ValueEnum)]
enum RuleArg {
    Capped,
    Odds,
}

impl From<RuleArg> for EdgeRule {
    fn from(r: RuleArg) -> Self {
        match r {
            RuleArg::Capped => EdgeRule::Capped,
            RuleArg::Odds => EdgeRule::Odds,
        }
    }
}

/// Exactly one of --lambda, --c, --kernel selects the model.
#[derive(Args)]
struct ModelArgs {
    /// Erdős–Rényi mean degree.
    #[arg(long)]
    lambda: Option<f64>,
    /// Rank-1 power-law density c (kernel c/√(xy)).
    #[arg(long)]
    c: Option<f64>,
    /// Finite-type kernel JSON file; --scale multiplies it.
    #[arg(long)]
    kernel: Option<PathBuf>,
    #[arg(long, default_value_t = 1.0)]
    scale: f64,
}

enum Chosen {
    Uniform(f64),
    Rank1(f64),
    Finite(kcore::analytic::FiniteTypeKernel),
}

impl ModelArgs {
    fn choose(&self) -> kcore::Result<Chosen> {
        match (self.lambda, self.c, &self.kernel) {
            (Some(l), None, None) => Ok(Chosen::Uniform(l)),
            (None, Some(c), None) => Ok(Chosen::Rank1(c)),
            (None, None, Some(path)) => Ok(Chosen::Finite(load_kernel(path)?.scaled(self.scale)?)),
            _ => Err(kcore::Error::Config(
                "give exactly one of --lambda, --c, --kernel".into(),
            )),
        }
    }
}

#[derive(Args)]
struct SolveArgs {
    #[arg(long)]
    k: u32,
    #[command(flatten)]
    model: ModelArgs,
    #[arg(long, value_enum, default_value = "csv")]
    format: Format,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ThresholdArgs {
    #[arg(long)]
    k: u32,
    /// Bisect the rank-1 c-threshold instead of λ_c.
    #[arg(long)]
    c_threshold: bool,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct GenArgs {
    #[command(flatten)]
    model: ModelArgs,
    #[arg(long)]
    n: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_enum, default_value = "capped")]
    edge_rule: RuleArg,
    #[arg(long, default_value_t = graph::DEFAULT_EDGE_LIMIT)]
    edge_limit: u64,
    #[arg(long, value_enum, default_value = "binary")]
    graph_format: GraphFormat,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct CoreArgs {
    /// Graph file (binary, or edge list with --graph-format edges).
    #[arg(long)]
    input: PathBuf,
    #[arg(long, value_enum, default_value = "binary")]
    graph_format: GraphFormat,
    /// Only print c_k for this k.
    #[arg(long)]
    k: Option<usize>,
    /// Per-vertex core numbers (vertex,core_number); core sizes go to stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct BpArgs {
    #[arg(long)]
    k: u32,
    #[arg(long)]
    lambda: f64,
    #[arg(long, default_value_t = 10)]
    depth: usize,
    #[arg(long, default_value_t = 100_000)]
    samples: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = kcore::bp::DEFAULT_PARTICLE_CAP)]
    particle_cap: u64,
    /// Estimate B⁺_d instead of B_d.
    #[arg(long)]
    plus: bool,
    /// Use population dynamics with this pool size instead of exact search.
    #[arg(long)]
    pool_size: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ExperimentArgs {
    #[arg(long)]
    config: PathBuf,
    /// Overrides the config's output path.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn open_out(path: Option<&Path>) -> kcore::Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p).map_err(|source| {
            kcore::Error::File {
                path: p.to_path_buf(),
                source,
            }
        })?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn solve(args: &SolveArgs) -> kcore::Result<()> {
    let k = CoreOrder::new(args.k)?;
    let cfg = FixedPointConfig::default();
    let mut fields: Vec<(&str, String)> = vec![("k", args.k.to_string())];
    match args.model.choose()? {
        Chosen::Uniform(l) => {
            let beta = beta_uniform(k, l, &cfg)?;
            let plus = beta_plus_uniform(k, l, &cfg)?;
            fields.push(("lambda", l.to_string()));
            fields.push(("beta", beta.value.to_string()));
            fields.push(("beta_plus", plus.value.to_string()));
            fields.push(("residual", beta.residual.to_string()));
            fields.push(("converged", beta.converged.to_string()));
        }
        Chosen::Rank1(c) => {
            let kernel = Rank1PowerLawKernel::new(c)?;
            let a = a_rank1(&kernel, k, &cfg)?;
            let plus = beta_plus_rank1(&kernel, k, &cfg)?;
            fields.push(("c", c.to_string()));
            fields.push(("a", a.value.to_string()));
            fields.push(("beta_plus", plus.value.to_string()));
            fields.push(("residual", a.residual.to_string()));
            fields.push(("converged", a.converged.to_string()));
        }
        Chosen::Finite(kernel) => {
            let plus = beta_plus_finite_type(&kernel, k, &cfg)?;
            fields.push(("scale", args.model.scale.to_string()));
            fields.push(("beta_plus", plus.value.to_string()));
            fields.push(("residual", plus.residual.to_string()));
            fields.push(("converged", plus.converged.to_string()));
        }
    }
    let mut out = open_out(args.out.as_deref())?;
    match args.format {
        Format::Csv => {
            let names: Vec<&str> = fields.iter().map(|f| f.0).collect();
            let values: Vec<&str> = fields.iter().map(|f| f.1.as_str()).collect();
            writeln!(out, "{}\n{}", names.join(","), values.join(","))?;
        }
        Format::Json => {
            let map: serde_json::Map<String, serde_json::Value> = fields
                .into_iter()
                .map(|(k, v)| {
                    let value = serde_json::from_str(&v).unwrap_or(serde_json::Value::String(v));
                    (k.to_string(), value)
                })
                .collect();
            writeln!(out, "{}", serde_json::Value::Object(map))?;
        }
    }
    out.flush()?;
    Ok(())
}

fn threshold(args: &ThresholdArgs) -> kcore::Result<()> {
    let k = CoreOrder::new(args.k)?;
    let cfg = FixedPointConfig::default();
    let mut out = open_out(args.out.as_deref())?;
    if args.c_threshold {
        let c = rank1_c_threshold(k, 1e-6, &cfg)?;
        writeln!(out, "k,c_threshold\n{},{c}", args.k)?;
    } else {
        let l = lambda_c(k, &cfg)?;
        writeln!(out, "k,lambda_c\n{},{l}", args.k)?;
    }
    out.flush()?;
    Ok(())
}

fn gen(args: &GenArgs) -> kcore::Result<()> {
    let model = match args.model.choose()? {
        Chosen::Uniform(lambda) => Model::ErdosRenyi { lambda },
        Chosen::Rank1(c) => Model::Rank1PowerLaw { c },
        Chosen::Finite(kernel) => Model::FiniteType { kernel },
    };
    let spec = GenSpec::new(model, args.seed)
        .with_edge_rule(args.edge_rule.into())
        .with_edge_limit(args.edge_limit);
    let g = graph::generate(&spec, args.n)?;
    let out = open_out(Some(&args.out))?;
    match args.graph_format {
        GraphFormat::Binary => graph::write_binary(&g, out),
        GraphFormat::Edges => graph::write_edge_list(&g, out),
    }
}

fn core(args: &CoreArgs) -> kcore::Result<()> {
    let file = File::open(&args.input).map_err(|source| kcore::Error::File {
        path: args.input.clone(),
        source,
    })?;
    let reader = BufReader::new(file);
    let g = match args.graph_format {
        GraphFormat::Binary => graph::read_binary(reader)?,
        GraphFormat::Edges => graph::read_edge_list(reader)?,
    };
    let cores = core_numbers(&g);
    if let Some(path) = &args.out {
        cores.write_core_numbers_csv(open_out(Some(path))?)?;
    }
    let stdout = open_out(None)?;
    match args.k {
        Some(k) => {
            let mut w = stdout;
            writeln!(w, "k,c_k\n{k},{}", cores.core_size(k))?;
            w.flush()?;
            Ok(())
        }
        None => cores.write_core_sizes_csv(stdout),
    }
}

fn bp(args: &BpArgs) -> kcore::Result<()> {
    let k = CoreOrder::new(args.k)?;
    let cfg = BPConfig {
        depth: args.depth,
        samples: args.samples,
        particle_cap: args.particle_cap,
        seed: args.seed,
    };
    let est = match (args.plus, args.pool_size) {
        (true, None) => estimate_bplus_d(k, args.lambda, &cfg)?,
        (false, None) => estimate_b_d(k, args.lambda, &cfg)?,
        (true, Some(pool)) => estimate_bplus_d_pooled(k, args.lambda, &cfg, pool)?,
        (false, Some(pool)) => estimate_b_d_pooled(k, args.lambda, &cfg, pool)?,
    };
    let row = EstimateRow::new(k, args.lambda, args.depth, &est);
    write_estimates_csv(&[row], open_out(args.out.as_deref())?)
}

/// Returns whether every judged row passed.
fn experiment(args: &ExperimentArgs) -> kcore::Result<bool> {
    let mut cfg = ExperimentConfig::from_path(&args.config)?;
    if let Some(out) = &args.out {
        cfg.output = Some(out.clone());
    }
    let rows = match &cfg.output {
        Some(_) => harness::run_and_write(&cfg)?,
        None => {
            let rows = harness::run(&cfg)?;
            harness::write_csv(&rows, open_out(None)?)?;
            rows
        }
    };
    let failed = rows.iter().filter(|r| r.failed()).count();
    if failed > 0 {
        eprintln!("{failed} of {} rows outside tolerance", rows.len());
    }
    Ok(failed == 0)
}

fn main() -> ExitCode {
    // clap exits with 2 on usage errors; 2 is reserved for tolerance failures.
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    let result = match &cli.command {
        Command::Solve(a) => solve(a).map(|_| true),
        Command::Threshold(a) => threshold(a).map(|_| true),
        Command::Gen(a) => gen(a).map(|_| true),
        Command::Core(a) => core(a).map(|_| true),
        Command::Bp(a) => bp(a).map(|_| true),
        Command::Experiment(a) => experiment(a),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
