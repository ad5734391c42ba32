use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use csg_compress::cover::Mode;
use csg_compress::formats;
use csg_compress::geometry::{sample_surface, PrimitiveSet, SolidOracle};
use csg_compress::graph::{build_intersection_graph, canonical_sort};
use csg_compress::pipeline::{self, CliqueMethod, CoverSolver, OracleSource, PipelineConfig};
use csg_compress::products::enumerate_products;
use csg_compress::qubo::{self, ScheduleOverrides};
use csg_compress::{fixtures, Error, Result};
use serde_json::json;

/// Compress solids described by primitives and an inside/outside oracle into
/// small CSG trees.
#[derive(Parser)]
#[command(name = "csg-compress", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the full pipeline and write a report.
    Compress(CompressArgs),
    /// Maximal cliques of a graph.
    Cliques(CliquesArgs),
    /// Fundamental product table of a primitive set.
    Products(ProductsArgs),
    /// Smallest exact cover of a cover instance.
    Cover(CoverArgs),
    /// QUBO model export and solving.
    #[command(subcommand)]
    Qubo(QuboCommand),
    /// Agreement of a tree with an oracle.
    Eval(EvalArgs),
    /// Write bundled example inputs to a directory.
    Fixture(FixtureArgs),
}

#[derive(Args)]
struct Common {
    /// Master seed; every stage seed is derived from it.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output file (stdout when omitted).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct OracleArgs {
    /// Primitive-set JSON.
    #[arg(long)]
    primitives: PathBuf,
    /// Oriented point cloud (`x y z nx ny nz` per line).
    #[arg(long, conflicts_with = "truth")]
    cloud: Option<PathBuf>,
    /// Ground-truth tree JSON.
    #[arg(long)]
    truth: Option<PathBuf>,
}

#[derive(Args)]
struct SolverArgs {
    /// dlx, qubo_exact or qubo_sa.
    #[arg(long, default_value = "dlx")]
    solver: String,
    #[arg(long)]
    penalty_a: Option<f64>,
    #[arg(long)]
    penalty_b: Option<f64>,
    /// Permit A <= n B in the cover encoding.
    #[arg(long)]
    allow_weak_penalty: bool,
    /// Annealing overrides, e.g. `sweeps=2000,restarts=8,t_start=4,t_end=0.01`.
    #[arg(long, default_value = "")]
    schedule: String,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Json,
    Text,
}

#[derive(Args)]
struct CompressArgs {
    #[command(flatten)]
    common: Common,
    #[command(flatten)]
    solver: SolverArgs,
    /// Primitive-set JSON (geometric mode).
    #[arg(long, required_unless_present = "abstract_instance")]
    primitives: Option<PathBuf>,
    #[arg(long, conflicts_with = "truth")]
    cloud: Option<PathBuf>,
    #[arg(long)]
    truth: Option<PathBuf>,
    /// Abstract-instance JSON (graph plus labelled products) instead of geometry.
    #[arg(long = "abstract", conflicts_with_all = ["primitives", "cloud", "truth"])]
    abstract_instance: Option<PathBuf>,
    /// partitioned or global.
    #[arg(long, default_value = "partitioned")]
    mode: String,
    /// bk or qubo_sa_experimental.
    #[arg(long, default_value = "bk")]
    cliques: String,
    /// Samples per fundamental product region.
    #[arg(long)]
    samples: Option<usize>,
    /// Off-surface query points for the agreement estimate.
    #[arg(long)]
    agreement_samples: Option<usize>,
    /// Write the tree JSON here as well.
    #[arg(long)]
    tree_out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "json")]
    format: Format,
    /// Leave the timestamp out of the report.
    #[arg(long)]
    no_timestamp: bool,
}

#[derive(Args)]
struct CliquesArgs {
    #[command(flatten)]
    common: Common,
    /// Graph JSON.
    #[arg(long)]
    graph: PathBuf,
    /// bk or qubo_sa_experimental.
    #[arg(long, default_value = "bk")]
    method: String,
    #[arg(long, default_value = "")]
    schedule: String,
}

#[derive(Args)]
struct ProductsArgs {
    #[command(flatten)]
    common: Common,
    #[command(flatten)]
    oracle: OracleArgs,
    #[arg(long)]
    samples: Option<usize>,
    /// Also write the equivalent abstract instance here.
    #[arg(long)]
    abstract_out: Option<PathBuf>,
}

#[derive(Args)]
struct CoverArgs {
    #[command(flatten)]
    common: Common,
    #[command(flatten)]
    solver: SolverArgs,
    /// Cover-instance JSON.
    #[arg(long)]
    instance: PathBuf,
}

#[derive(Subcommand)]
enum QuboCommand {
    /// Write the QUBO for a cover instance or the max-clique QUBO for a graph.
    Export(QuboExportArgs),
    /// Minimise a QUBO file.
    Solve(QuboSolveArgs),
}

#[derive(Args)]
struct QuboExportArgs {
    #[arg(long, required_unless_present = "graph")]
    instance: Option<PathBuf>,
    #[arg(long, conflicts_with = "instance")]
    graph: Option<PathBuf>,
    #[arg(long)]
    penalty_a: Option<f64>,
    #[arg(long)]
    penalty_b: Option<f64>,
    #[arg(long)]
    allow_weak_penalty: bool,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct QuboSolveArgs {
    #[command(flatten)]
    common: Common,
    /// QUBO file in qbsolv format.
    #[arg(long)]
    model: PathBuf,
    /// exact or sa.
    #[arg(long, default_value = "sa")]
    solver: String,
    #[arg(long, default_value = "")]
    schedule: String,
}

#[derive(Args)]
struct EvalArgs {
    #[command(flatten)]
    common: Common,
    #[command(flatten)]
    oracle: OracleArgs,
    /// Tree JSON to evaluate.
    #[arg(long)]
    tree: PathBuf,
    #[arg(long, default_value_t = pipeline::DEFAULT_AGREEMENT_SAMPLES)]
    samples: usize,
}

#[derive(Args)]
struct FixtureArgs {
    /// Target directory.
    #[arg(long)]
    dir: PathBuf,
    /// Surface points in the generated cloud.
    #[arg(long, default_value_t = 20_000)]
    cloud_points: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::Input(format!("cannot read {}: {e}", path.display())))
}

fn emit(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(p) => fs::write(p, text).map_err(|e| Error::Input(format!("cannot write {}: {e}", p.display()))),
        None => {
            print!("{text}");
            if !text.ends_with('\n') {
                println!();
            }
            Ok(())
        }
    }
}

fn emit_json(out: Option<&Path>, value: &serde_json::Value) -> Result<()> {
    emit(out, &(serde_json::to_string_pretty(value)? + "\n"))
}

fn load_oracle(primitives: &Path, cloud: Option<&Path>, truth: Option<&Path>) -> Result<(PrimitiveSet, OracleSource)> {
    let set = formats::parse_primitives(&read(primitives)?)?;
    let source = match (cloud, truth) {
        (Some(c), None) => OracleSource::Cloud(formats::parse_point_cloud(&read(c)?)?),
        (None, Some(t)) => OracleSource::GroundTruth(formats::parse_tree(&read(t)?)?),
        _ => return Err(Error::Input("give exactly one of --cloud or --truth".into())),
    };
    Ok((set, source))
}

fn solid_oracle(set: &PrimitiveSet, source: &OracleSource) -> Result<SolidOracle> {
    match source {
        OracleSource::GroundTruth(t) => SolidOracle::ground_truth(t, set),
        OracleSource::Cloud(c) => SolidOracle::cloud(c),
    }
}

fn apply_solver(cfg: &mut PipelineConfig, args: &SolverArgs) -> Result<()> {
    cfg.cover_solver = args.solver.parse::<CoverSolver>()?;
    cfg.penalty_a = args.penalty_a;
    cfg.penalty_b = args.penalty_b;
    cfg.allow_weak_penalty = args.allow_weak_penalty;
    cfg.schedule = args.schedule.parse()?;
    Ok(())
}

fn compress(args: CompressArgs) -> Result<()> {
    let mut cfg = PipelineConfig::with_seed(args.common.seed);
    apply_solver(&mut cfg, &args.solver)?;
    cfg.mode = args.mode.parse::<Mode>()?;
    cfg.clique_method = args.cliques.parse::<CliqueMethod>()?;
    if let Some(s) = args.samples {
        cfg.products.samples_per_region = s;
    }
    if let Some(s) = args.agreement_samples {
        cfg.agreement_samples = s;
    }
    let mut report = match (&args.abstract_instance, &args.primitives) {
        (Some(path), _) => pipeline::compress_abstract(&formats::parse_abstract_instance(&read(path)?)?, &cfg)?,
        (None, Some(p)) => {
            let (set, source) = load_oracle(p, args.cloud.as_deref(), args.truth.as_deref())?;
            pipeline::compress(&set, &source, &cfg)?
        }
        (None, None) => return Err(Error::Input("give --primitives or --abstract".into())),
    };
    if !args.no_timestamp {
        report.stamp_now();
    }
    if let Some(path) = &args.tree_out {
        emit_json(Some(path), &formats::tree_to_value(&report.tree))?;
    }
    let text = match args.format {
        Format::Json => pipeline::report_json(&report) + "\n",
        Format::Text => pipeline::report_text(&report),
    };
    emit(args.common.out.as_deref(), &text)
}

fn cliques(args: CliquesArgs) -> Result<()> {
    let graph = formats::parse_graph(&read(&args.graph)?)?;
    let mut cfg = PipelineConfig::with_seed(args.common.seed);
    cfg.clique_method = args.method.parse()?;
    cfg.schedule = args.schedule.parse()?;
    let mut found = pipeline::find_cliques(&graph, &cfg)?;
    canonical_sort(&mut found, &graph);
    let mut value = formats::cliques_to_json(&found, &graph);
    value["method"] = json!(cfg.clique_method.as_str());
    emit_json(args.common.out.as_deref(), &value)
}

fn products(args: ProductsArgs) -> Result<()> {
    let (set, source) = load_oracle(&args.oracle.primitives, args.oracle.cloud.as_deref(), args.oracle.truth.as_deref())?;
    let mut cfg = PipelineConfig::with_seed(args.common.seed);
    if let Some(s) = args.samples {
        cfg.products.samples_per_region = s;
    }
    let oracle = solid_oracle(&set, &source)?;
    let graph = build_intersection_graph(&set, cfg.overlap);
    let table = enumerate_products(&set, &graph, &oracle, &cfg.products)?;
    if let Some(path) = &args.abstract_out {
        emit(Some(path), &serde_json::to_string_pretty(&formats::table_to_abstract(&table, &graph))?)?;
    }
    emit_json(args.common.out.as_deref(), &formats::product_table_to_json(&table))
}

fn cover(args: CoverArgs) -> Result<()> {
    let instance = formats::parse_cover_instance(&read(&args.instance)?)?;
    let mut cfg = PipelineConfig::with_seed(args.common.seed);
    apply_solver(&mut cfg, &args.solver)?;
    let (solution, info, warnings) = pipeline::solve_cover(&instance, &cfg)?;
    let mut value = formats::cover_solution_to_json(&solution, &instance);
    value["solver"] = json!(info.cover_solver);
    value["energy"] = json!(info.energy);
    value["warnings"] = json!(warnings);
    emit_json(args.common.out.as_deref(), &value)
}

fn qubo_export(args: QuboExportArgs) -> Result<()> {
    let model = match (&args.instance, &args.graph) {
        (Some(path), _) => {
            let instance = formats::parse_cover_instance(&read(path)?)?;
            let (da, db) = qubo::default_cover_penalties(instance.universe.len());
            let b = args.penalty_b.unwrap_or(db);
            let a = args.penalty_a.unwrap_or(if args.penalty_b.is_some() { instance.universe.len() as f64 * b + 1.0 } else { da });
            qubo::build_cover_qubo(&instance, a, b, args.allow_weak_penalty)?
        }
        (None, Some(path)) => {
            let graph = formats::parse_graph(&read(path)?)?;
            let (da, db) = qubo::DEFAULT_CLIQUE_PENALTIES;
            qubo::build_max_clique_qubo(&graph, args.penalty_a.unwrap_or(da), args.penalty_b.unwrap_or(db))?
        }
        (None, None) => return Err(Error::Input("give --instance or --graph".into())),
    };
    emit(args.out.as_deref(), &qubo::export_qubo(&model))
}

fn qubo_solve(args: QuboSolveArgs) -> Result<()> {
    let model = qubo::import_qubo(&read(&args.model)?)?;
    let result = match args.solver.as_str() {
        "exact" => qubo::solve_exact(&model)?,
        "sa" => {
            let overrides: ScheduleOverrides = args.schedule.parse()?;
            qubo::solve_sa(&model, &overrides.resolve(&model), args.common.seed)?
        }
        other => return Err(Error::Parameter(format!("unknown QUBO solver `{other}` (expected exact|sa)"))),
    };
    let value = json!({
        "solver": result.solver,
        "assignment": result.bitstring(),
        "selected": result.selected(),
        "energy": result.energy,
        "seed": result.seed,
        "sweeps": result.sweeps,
        "restarts": result.restarts,
    });
    emit_json(args.common.out.as_deref(), &value)
}

fn eval(args: EvalArgs) -> Result<()> {
    let (set, source) = load_oracle(&args.oracle.primitives, args.oracle.cloud.as_deref(), args.oracle.truth.as_deref())?;
    let tree = formats::parse_tree(&read(&args.tree)?)?;
    let oracle = solid_oracle(&set, &source)?;
    let cfg = PipelineConfig::with_seed(args.common.seed);
    let a = pipeline::estimate_agreement(&tree, &set, &oracle, args.samples, cfg.agreement_seed)?;
    let value = json!({
        "tree": tree.to_string(),
        "leaf_count": tree.leaf_count(),
        "oracle": a.oracle,
        "samples": a.samples,
        "agreeing": a.agreeing,
        "agreement": a.fraction,
    });
    emit_json(args.common.out.as_deref(), &value)
}

fn fixture(args: FixtureArgs) -> Result<()> {
    fs::create_dir_all(&args.dir)?;
    let write = |name: &str, text: String| emit(Some(&args.dir.join(name)), &text);
    let scene = fixtures::scene_primitives();
    write("scene_primitives.json", formats::primitives_to_json(&scene))?;
    write("scene_truth.json", serde_json::to_string_pretty(&formats::tree_to_value(&fixtures::minimal_tree()))?)?;
    write("scene_cloud.xyz", formats::point_cloud_to_text(&sample_surface(&fixtures::minimal_tree(), &scene, args.cloud_points, args.seed)?))?;
    write("scene_abstract.json", serde_json::to_string_pretty(&fixtures::scene_abstract())?)?;
    write("scene_graph.json", formats::graph_to_json(&fixtures::scene_abstract().graph()?))?;
    write("cover_example.json", serde_json::to_string_pretty(&formats::cover_instance_to_json(&fixtures::exact_cover_example()))?)?;
    write("chain_primitives.json", formats::primitives_to_json(&fixtures::chain_primitives()))?;
    write("chain_truth.json", serde_json::to_string_pretty(&formats::tree_to_value(&fixtures::chain_tree()))?)?;
    Ok(())
}

fn exit_code(e: &Error) -> u8 {
    match e.root() {
        Error::Infeasible(_) | Error::Unsatisfiable => 2,
        Error::Parameter(_) | Error::LengthMismatch { .. } | Error::InvalidSpin { .. } => 4,
        Error::InvalidPrimitive { .. }
        | Error::DuplicateId(_)
        | Error::UnresolvedId(_)
        | Error::MalformedTree(_)
        | Error::UnsupportedOracle(_)
        | Error::InvalidCloud(_)
        | Error::InvalidGraph(_)
        | Error::Parse { .. }
        | Error::Input(_)
        | Error::Json(_)
        | Error::Io(_) => 3,
        _ => 1,
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 4 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = match cli.command {
        Command::Compress(a) => compress(a),
        Command::Cliques(a) => cliques(a),
        Command::Products(a) => products(a),
        Command::Cover(a) => cover(a),
        Command::Qubo(QuboCommand::Export(a)) => qubo_export(a),
        Command::Qubo(QuboCommand::Solve(a)) => qubo_solve(a),
        Command::Eval(a) => eval(a),
        Command::Fixture(a) => fixture(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
