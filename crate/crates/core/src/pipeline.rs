//! End-to-end compression and report rendering.

use std::fmt::Write as _;
use std::str::FromStr;

use num_bigint::BigUint;
use serde::Serialize;

use crate::cover::{self, CoverInstance, CoverSolution, Mode};
use crate::error::{Error, Result, Stage};
use crate::formats::{tree_to_value, AbstractInstance};
use crate::geometry::{Aabb, CsgTree, PointCloud, PrimitiveSet, SolidOracle};
use crate::graph::{self, Clique, IntersectionGraph, OverlapSampling};
use crate::products::{self, ProductConfig, ProductTable};
use crate::qubo::{self, ScheduleOverrides};
use crate::seed;

pub const SCHEMA_VERSION: u32 = 1;
pub const DEFAULT_AGREEMENT_SAMPLES: usize = 10_000;
pub const DEFAULT_MIN_AGREEMENT: f64 = 0.999;
/// Nearest-normal classification is unreliable close to creases, so cloud
/// oracles get a looser default.
pub const DEFAULT_MIN_CLOUD_AGREEMENT: f64 = 0.99;
/// Query points closer than this fraction of the scene diagonal to a primitive
/// surface are skipped by the agreement estimate.
pub const SURFACE_BAND: f64 = 0.01;
/// Largest candidate pool for which the annealer result is compared with the
/// exhaustive optimum.
pub const SA_GAP_CHECK_LIMIT: usize = 22;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CoverSolver {
    #[default]
    Dlx,
    QuboExact,
    QuboSa,
}

impl CoverSolver {
    pub fn as_str(self) -> &'static str {
        match self {
            CoverSolver::Dlx => "dlx",
            CoverSolver::QuboExact => "qubo_exact",
            CoverSolver::QuboSa => "qubo_sa",
        }
    }
}

impl FromStr for CoverSolver {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "dlx" => Ok(CoverSolver::Dlx),
            "qubo_exact" => Ok(CoverSolver::QuboExact),
            "qubo_sa" => Ok(CoverSolver::QuboSa),
            _ => Err(Error::Parameter(format!("unknown solver `{s}` (expected dlx|qubo_exact|qubo_sa)"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum CliqueMethod {
    #[default]
    Bk,
    QuboSaExperimental,
}

impl CliqueMethod {
    pub fn as_str(self) -> &'static str {
        match self {
            CliqueMethod::Bk => "bk",
            CliqueMethod::QuboSaExperimental => "qubo_sa_experimental",
        }
    }
}

impl FromStr for CliqueMethod {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "bk" => Ok(CliqueMethod::Bk),
            "qubo_sa_experimental" => Ok(CliqueMethod::QuboSaExperimental),
            _ => Err(Error::Parameter(format!("unknown clique method `{s}` (expected bk|qubo_sa_experimental)"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    pub mode: Mode,
    pub cover_solver: CoverSolver,
    pub clique_method: CliqueMethod,
    pub overlap: OverlapSampling,
    pub products: ProductConfig,
    /// Exact-cover penalties; default `B = 1`, `A = n B + 1`.
    pub penalty_a: Option<f64>,
    pub penalty_b: Option<f64>,
    pub allow_weak_penalty: bool,
    pub schedule: ScheduleOverrides,
    pub solver_seed: u64,
    pub agreement_samples: usize,
    pub agreement_seed: u64,
    /// Defaults per oracle kind when unset.
    pub min_agreement: Option<f64>,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig::with_seed(0)
    }
}

impl PipelineConfig {
    /// Defaults with every stage seed derived from `master`.
    pub fn with_seed(master: u64) -> Self {
        PipelineConfig {
            mode: Mode::default(),
            cover_solver: CoverSolver::default(),
            clique_method: CliqueMethod::default(),
            overlap: OverlapSampling { seed: seed::derive(master, &[1]), ..Default::default() },
            products: ProductConfig { seed: seed::derive(master, &[2]), ..Default::default() },
            penalty_a: None,
            penalty_b: None,
            allow_weak_penalty: false,
            schedule: ScheduleOverrides::default(),
            solver_seed: seed::derive(master, &[3]),
            agreement_samples: DEFAULT_AGREEMENT_SAMPLES,
            agreement_seed: seed::derive(master, &[4]),
            min_agreement: None,
        }
    }
}

/// Where inside/outside labels come from.
#[derive(Debug, Clone)]
pub enum OracleSource {
    GroundTruth(CsgTree),
    Cloud(PointCloud),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SolverInfo {
    pub mode: &'static str,
    pub clique_method: &'static str,
    pub cover_solver: &'static str,
    pub selected: Vec<String>,
    pub subsets_used: usize,
    pub total_literals: usize,
    pub penalty_a: Option<f64>,
    pub penalty_b: Option<f64>,
    pub energy: Option<f64>,
    pub exact_energy: Option<f64>,
    pub seed: Option<u64>,
    pub sweeps: Option<usize>,
    pub restarts: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Agreement {
    pub oracle: &'static str,
    /// Off-surface query points evaluated (0 in abstract mode, where every
    /// product is checked exactly).
    pub samples: usize,
    pub agreeing: usize,
    pub fraction: f64,
}

fn big_to_string<S: serde::Serializer>(v: &BigUint, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_str(&v.to_string())
}

fn opt_big_to_string<S: serde::Serializer>(v: &Option<BigUint>, s: S) -> std::result::Result<S::Ok, S::Error> {
    match v {
        Some(v) => s.serialize_str(&v.to_string()),
        None => s.serialize_none(),
    }
}

fn tree_json<S: serde::Serializer>(t: &CsgTree, s: S) -> std::result::Result<S::Ok, S::Error> {
    tree_to_value(t).serialize(s)
}

/// Output of [`compress`]; serializes with a fixed field order.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CompressionReport {
    pub schema_version: u32,
    pub tree_expression: String,
    #[serde(serialize_with = "tree_json")]
    pub tree: CsgTree,
    pub leaf_count: usize,
    pub two_level_leaf_count: usize,
    pub reduction_pct: f64,
    pub primitive_count: usize,
    pub edge_count: usize,
    pub n_f: usize,
    pub universe_size: usize,
    pub cliques: Vec<Vec<String>>,
    #[serde(serialize_with = "big_to_string")]
    pub global_bound: BigUint,
    #[serde(serialize_with = "opt_big_to_string")]
    pub partitioned_bound: Option<BigUint>,
    pub per_clique_nf: Vec<usize>,
    pub candidate_count: usize,
    pub solver: SolverInfo,
    pub agreement: Agreement,
    pub warnings: Vec<String>,
    /// Seconds since the Unix epoch; left empty for reproducible output.
    pub timestamp: Option<u64>,
}

impl CompressionReport {
    pub fn stamp_now(&mut self) {
        self.timestamp = std::time::SystemTime::now().duration_since(std::time::UNIX_EPOCH).ok().map(|d| d.as_secs());
    }
}

/// Geometric mode: primitives plus a ground-truth tree or oriented cloud.
pub fn compress(set: &PrimitiveSet, source: &OracleSource, cfg: &PipelineConfig) -> Result<CompressionReport> {
    cfg.products.validate()?;
    let oracle = match source {
        OracleSource::GroundTruth(t) => SolidOracle::ground_truth(t, set)?,
        OracleSource::Cloud(c) => SolidOracle::cloud(c)?,
    };
    let graph = graph::build_intersection_graph(set, cfg.overlap);
    let cliques = find_cliques(&graph, cfg)?;
    let table = products::enumerate_products(set, &graph, &oracle, &cfg.products).map_err(|e| e.at(Stage::Products))?;
    let mut report = solve_table(&graph, &cliques, &table, cfg)?;
    report.agreement = estimate_agreement(&report.tree, set, &oracle, cfg.agreement_samples, cfg.agreement_seed)
        .map_err(|e| e.at(Stage::Verification))?;
    let min = cfg.min_agreement.unwrap_or(match source {
        OracleSource::GroundTruth(_) => DEFAULT_MIN_AGREEMENT,
        OracleSource::Cloud(_) => DEFAULT_MIN_CLOUD_AGREEMENT,
    });
    check_agreement(&report.agreement, min)?;
    Ok(report)
}

/// Abstract mode: graph and product labels given directly.
pub fn compress_abstract(instance: &AbstractInstance, cfg: &PipelineConfig) -> Result<CompressionReport> {
    let (graph, table) = instance.clone().into_parts()?;
    let cliques = find_cliques(&graph, cfg)?;
    let mut report = solve_table(&graph, &cliques, &table, cfg)?;
    let agreeing = (0..table.n_f()).filter(|&i| product_agrees(&report.tree, &table, i)).count();
    report.agreement = Agreement { oracle: "product-table", samples: 0, agreeing, fraction: agreeing as f64 / table.n_f().max(1) as f64 };
    check_agreement(&report.agreement, 1.0)?;
    Ok(report)
}

fn check_agreement(a: &Agreement, min: f64) -> Result<()> {
    if a.fraction < min {
        return Err(Error::Verification(format!("tree agrees with the {} on {:.4} of queries, below {min}", a.oracle, a.fraction))
            .at(Stage::Verification));
    }
    Ok(())
}

fn product_agrees(tree: &CsgTree, table: &ProductTable, i: usize) -> bool {
    let positives = table.positive_ids(i);
    tree.evaluate(&|id| positives.iter().any(|p| p == id)) == table.get(i).is_inside()
}

pub fn find_cliques(graph: &IntersectionGraph, cfg: &PipelineConfig) -> Result<Vec<Clique>> {
    match cfg.clique_method {
        CliqueMethod::Bk => Ok(graph::maximal_cliques_bk(graph)),
        CliqueMethod::QuboSaExperimental => qubo::cliques_via_qubo(graph, &cfg.schedule, seed::derive(cfg.solver_seed, &[0]))
            .map_err(|e| e.at(Stage::Cliques)),
    }
}

/// Runs the configured cover solver; returns the solution plus solver metadata.
pub fn solve_cover(instance: &CoverInstance, cfg: &PipelineConfig) -> Result<(CoverSolution, SolverInfo, Vec<String>)> {
    let mut info = SolverInfo {
        mode: cfg.mode.as_str(),
        clique_method: cfg.clique_method.as_str(),
        cover_solver: cfg.cover_solver.as_str(),
        selected: Vec::new(),
        subsets_used: 0,
        total_literals: 0,
        penalty_a: None,
        penalty_b: None,
        energy: None,
        exact_energy: None,
        seed: None,
        sweeps: None,
        restarts: None,
    };
    let mut warnings = Vec::new();
    let solution = match cfg.cover_solver {
        CoverSolver::Dlx => cover::solve_cover_dlx(instance)?,
        CoverSolver::QuboExact | CoverSolver::QuboSa => {
            instance.check_feasible().map_err(|_| Error::Unsatisfiable)?;
            let (da, db) = qubo::default_cover_penalties(instance.universe.len());
            let b = cfg.penalty_b.unwrap_or(db);
            let a = cfg.penalty_a.unwrap_or(if cfg.penalty_b.is_some() { instance.universe.len() as f64 * b + 1.0 } else { da });
            let q = qubo::build_cover_qubo(instance, a, b, cfg.allow_weak_penalty)?;
            info.penalty_a = Some(a);
            info.penalty_b = Some(b);
            let result = if cfg.cover_solver == CoverSolver::QuboExact {
                qubo::solve_exact(&q)?
            } else {
                let schedule = cfg.schedule.resolve(&q);
                let r = qubo::solve_sa(&q, &schedule, cfg.solver_seed)?;
                info.seed = Some(r.seed);
                info.sweeps = Some(r.sweeps);
                info.restarts = Some(r.restarts);
                if q.n <= SA_GAP_CHECK_LIMIT {
                    let exact = qubo::solve_exact(&q)?;
                    info.exact_energy = Some(exact.energy);
                    let gap = r.energy - exact.energy;
                    if gap > 1e-9 {
                        warnings.push(format!("annealer energy {} exceeds exact optimum {} by {gap}", r.energy, exact.energy));
                    }
                }
                r
            };
            info.energy = Some(result.energy);
            let selected = result.selected();
            if !cover::verify_cover(instance, &selected).is_valid() {
                return Err(Error::Verification(format!(
                    "{} minimum (energy {}) is not an exact cover",
                    cfg.cover_solver.as_str(),
                    result.energy
                )));
            }
            instance.solution(selected)
        }
    };
    info.selected = solution.names(instance).into_iter().map(String::from).collect();
    info.subsets_used = solution.subsets_used;
    info.total_literals = solution.total_literals;
    Ok((solution, info, warnings))
}

fn solve_table(graph: &IntersectionGraph, cliques: &[Clique], table: &ProductTable, cfg: &PipelineConfig) -> Result<CompressionReport> {
    let instance = cover::generate_candidates(table, cliques, graph, cfg.mode).map_err(|e| e.at(Stage::Candidates))?;
    let (solution, solver, solver_warnings) = solve_cover(&instance, cfg).map_err(|e| e.at(Stage::CoverSolve))?;
    let tree = cover::assemble_tree(&solution, &instance).map_err(|e| e.at(Stage::Assembly))?;
    if !cover::verify_cover(&instance, &solution.selected).is_valid() {
        return Err(Error::Verification("selected candidates are not an exact cover".into()).at(Stage::Verification));
    }
    if let Some(i) = (0..table.n_f()).find(|&i| !product_agrees(&tree, table, i)) {
        return Err(Error::Verification(format!("tree disagrees with the label of product {}", table.name(i))).at(Stage::Verification));
    }

    let bounds = products::candidate_bounds(table, Some(cliques));
    let mut warnings: Vec<String> = table.warnings().to_vec();
    warnings.extend(solver_warnings);
    let limit = match cfg.mode {
        Mode::Partitioned => bounds.partitioned_bound.clone().expect("cliques given"),
        Mode::Global => bounds.global_bound.clone(),
    };
    if BigUint::from(instance.len()) > limit {
        warnings.push(format!("candidate count {} exceeds the {} bound {limit}", instance.len(), cfg.mode.as_str()));
    }
    let two_level = products::two_level_tree(table, graph).map_or(0, |t| t.leaf_count());
    let leaf_count = tree.leaf_count();
    Ok(CompressionReport {
        schema_version: SCHEMA_VERSION,
        tree_expression: tree.to_string(),
        leaf_count,
        two_level_leaf_count: two_level,
        reduction_pct: reduction_pct(leaf_count, two_level),
        tree,
        primitive_count: graph.vertex_count(),
        edge_count: graph.edge_count(),
        n_f: table.n_f(),
        universe_size: table.universe().len(),
        cliques: cliques.iter().map(|c| c.ids(graph)).collect(),
        global_bound: bounds.global_bound,
        partitioned_bound: bounds.partitioned_bound,
        per_clique_nf: bounds.per_clique_nf,
        candidate_count: instance.len(),
        solver,
        agreement: Agreement { oracle: "product-table", samples: 0, agreeing: table.n_f(), fraction: 1.0 },
        warnings,
        timestamp: None,
    })
}

/// `100 (1 - leaves / baseline)`.
pub fn reduction_pct(leaves: usize, baseline: usize) -> f64 {
    if baseline == 0 {
        return 0.0;
    }
    100.0 * (1.0 - leaves as f64 / baseline as f64)
}

/// Fraction of uniform queries in the scene box on which `tree` and `oracle`
/// agree. Queries within `SURFACE_BAND` of the diagonal from any primitive
/// surface are skipped.
pub fn estimate_agreement(tree: &CsgTree, set: &PrimitiveSet, oracle: &SolidOracle, samples: usize, seed: u64) -> Result<Agreement> {
    let solid = tree.compile(set)?;
    let bounds: Aabb = set.bounds().ok_or_else(|| Error::Input("empty primitive set".into()))?;
    let eps = SURFACE_BAND * bounds.diagonal();
    let region = bounds.expanded(2.0 * eps);
    let mut rng = seed::rng(seed);
    let (mut taken, mut agreeing) = (0, 0);
    for _ in 0..samples.saturating_mul(100) {
        if taken == samples {
            break;
        }
        let p = region.sample(&mut rng);
        if set.iter().any(|prim| prim.signed_distance(&p).abs() < eps) {
            continue;
        }
        taken += 1;
        agreeing += usize::from(solid.contains(&p) == oracle.contains(&p));
    }
    if taken < samples {
        return Err(Error::Sampling(format!("found only {taken} of {samples} off-surface query points")));
    }
    Ok(Agreement { oracle: oracle.kind(), samples: taken, agreeing, fraction: if taken == 0 { 1.0 } else { agreeing as f64 / taken as f64 } })
}

pub fn report_json(report: &CompressionReport) -> String {
    serde_json::to_string_pretty(report).expect("report serializes")
}

/// Human-readable rendering with the same field order as the JSON form.
pub fn report_text(r: &CompressionReport) -> String {
    let mut s = String::new();
    let list = |v: &[String]| format!("[{}]", v.join(", "));
    let _ = writeln!(s, "schema_version: {}", r.schema_version);
    let _ = writeln!(s, "tree: {}", r.tree_expression);
    let _ = writeln!(s, "leaf_count: {}", r.leaf_count);
    let _ = writeln!(s, "two_level_leaf_count: {}", r.two_level_leaf_count);
    let _ = writeln!(s, "reduction_pct: {:.2}", r.reduction_pct);
    let _ = writeln!(s, "primitive_count: {}", r.primitive_count);
    let _ = writeln!(s, "edge_count: {}", r.edge_count);
    let _ = writeln!(s, "n_f: {}", r.n_f);
    let _ = writeln!(s, "universe_size: {}", r.universe_size);
    let cliques: Vec<String> = r.cliques.iter().map(|c| format!("{{{}}}", c.join(","))).collect();
    let _ = writeln!(s, "cliques: {} {}", r.cliques.len(), list(&cliques));
    let _ = writeln!(s, "global_bound: {}", r.global_bound);
    let _ = writeln!(s, "partitioned_bound: {}", r.partitioned_bound.as_ref().map_or("-".into(), |b| b.to_string()));
    let nf: Vec<String> = r.per_clique_nf.iter().map(|n| n.to_string()).collect();
    let _ = writeln!(s, "per_clique_nf: {}", list(&nf));
    let _ = writeln!(s, "candidate_count: {}", r.candidate_count);
    let sv = &r.solver;
    let _ = writeln!(s, "solver: {} (mode {}, cliques {})", sv.cover_solver, sv.mode, sv.clique_method);
    let _ = writeln!(s, "selected: {}", list(&sv.selected));
    let _ = writeln!(s, "subsets_used: {}", sv.subsets_used);
    let _ = writeln!(s, "total_literals: {}", sv.total_literals);
    if let Some(e) = sv.energy {
        let _ = writeln!(s, "energy: {e}");
    }
    if let Some(e) = sv.exact_energy {
        let _ = writeln!(s, "exact_energy: {e}");
    }
    let a = &r.agreement;
    let _ = writeln!(s, "agreement: {:.6} ({} / {} via {})", a.fraction, a.agreeing, if a.samples == 0 { r.n_f } else { a.samples }, a.oracle);
    let _ = writeln!(s, "warnings: {}", list(&r.warnings));
    if let Some(t) = r.timestamp {
        let _ = writeln!(s, "timestamp: {t}");
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::geometry::{sample_surface, Primitive};

    fn fast() -> PipelineConfig {
        PipelineConfig { agreement_samples: 2000, ..PipelineConfig::with_seed(7) }
    }

    #[test]
    fn abstract_scene_report() {
        let r = compress_abstract(&fixtures::scene_abstract(), &fast()).unwrap();
        assert_eq!((r.leaf_count, r.two_level_leaf_count), (10, 25));
        assert!((r.reduction_pct - 60.0).abs() < 1e-9);
        assert_eq!((r.n_f, r.universe_size, r.cliques.len()), (15, 8, 4));
        assert_eq!(r.global_bound, BigUint::from(32767u32));
        assert_eq!(r.partitioned_bound, Some(BigUint::from(268u32)));
        assert!(r.candidate_count <= 268);
        assert_eq!(r.agreement.fraction, 1.0);
        let text = report_text(&r);
        assert!(text.contains("warnings: []"));
        assert!(text.contains("n_f: 15"));
        let json: serde_json::Value = serde_json::from_str(&report_json(&r)).unwrap();
        assert_eq!(json["global_bound"], "32767");
        assert_eq!(json["schema_version"], 1);
    }

    #[test]
    fn solver_paths_share_the_optimum_key() {
        let inst = fixtures::scene_abstract();
        let dlx = compress_abstract(&inst, &fast()).unwrap();
        let cfg = PipelineConfig { cover_solver: CoverSolver::QuboSa, ..fast() };
        let sa = compress_abstract(&inst, &cfg).unwrap();
        assert_eq!((sa.solver.subsets_used, sa.solver.total_literals), (dlx.solver.subsets_used, dlx.solver.total_literals));
        assert!(sa.solver.energy.is_some());
    }

    #[test]
    fn single_sphere_cloud() {
        let set = PrimitiveSet::new(vec![Primitive::sphere("A", [0.0, 0.0, 0.0], 1.0).unwrap()]).unwrap();
        let cloud = sample_surface(&CsgTree::leaf("A"), &set, 4000, 3).unwrap();
        let r = compress(&set, &OracleSource::Cloud(cloud), &fast()).unwrap();
        assert_eq!(r.tree, CsgTree::leaf("A"));
        assert_eq!((r.leaf_count, r.two_level_leaf_count), (1, 1));
        assert_eq!(r.reduction_pct, 0.0);
        assert!(r.agreement.fraction >= 0.999);
    }

    #[test]
    fn parameter_errors_surface() {
        let cfg = PipelineConfig { cover_solver: CoverSolver::QuboExact, penalty_a: Some(1.0), ..fast() };
        let err = compress_abstract(&fixtures::scene_abstract(), &cfg).unwrap_err();
        assert!(err.is_parameter(), "{err}");
        assert!(matches!(err, Error::Stage { stage: Stage::CoverSolve, .. }));
        assert!("fast".parse::<CoverSolver>().unwrap_err().is_parameter());
        assert!("x".parse::<CliqueMethod>().unwrap_err().is_parameter());
    }

    #[test]
    fn empty_universe_fails_at_assembly() {
        let mut inst = fixtures::scene_abstract();
        inst.products.iter_mut().for_each(|p| p.inside = false);
        let err = compress_abstract(&inst, &fast()).unwrap_err();
        assert!(matches!(err, Error::Stage { stage: Stage::Assembly, .. }), "{err}");
    }

    #[test]
    fn report_is_reproducible() {
        let set = fixtures::chain_primitives();
        let src = OracleSource::GroundTruth(fixtures::chain_tree());
        let cfg = PipelineConfig { agreement_samples: 500, products: ProductConfig { samples_per_region: 256, ..fast().products }, ..fast() };
        let a = report_json(&compress(&set, &src, &cfg).unwrap());
        let b = report_json(&compress(&set, &src, &cfg).unwrap());
        assert_eq!(a, b);
    }
}
