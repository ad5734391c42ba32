//! QUBO and Ising models, the exact-cover and max-clique encodings, an
//! exhaustive solver, simulated annealing, and the qbsolv text format.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::str::FromStr;

use rand::Rng;

use crate::cover::CoverInstance;
use crate::error::{Error, Result};
use crate::graph::{Clique, IntersectionGraph};
use crate::seed;

/// Largest model `solve_exact` accepts.
pub const EXACT_MAX_VARIABLES: usize = 30;

/// Minimise `offset + sum l_i x_i + sum_{i<j} q_ij x_i x_j` over `x` in {0,1}^n.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Qubo {
    pub n: usize,
    pub linear: BTreeMap<usize, f64>,
    pub quadratic: BTreeMap<(usize, usize), f64>,
    pub offset: f64,
}

impl Qubo {
    pub fn new(n: usize) -> Self {
        Qubo { n, ..Default::default() }
    }

    pub fn add_linear(&mut self, i: usize, v: f64) {
        *self.linear.entry(i).or_insert(0.0) += v;
    }

    /// Adds to the `(i, j)` coupler; `i == j` folds into the linear term since `x^2 = x`.
    pub fn add_quadratic(&mut self, i: usize, j: usize, v: f64) {
        if i == j {
            self.add_linear(i, v);
        } else {
            *self.quadratic.entry((i.min(j), i.max(j))).or_insert(0.0) += v;
        }
    }

    /// Drops zero-valued entries.
    pub fn canonicalize(&mut self) {
        self.linear.retain(|_, v| *v != 0.0);
        self.quadratic.retain(|_, v| *v != 0.0);
    }

    pub fn validate(&self) -> Result<()> {
        check_terms(self.n, &self.linear, &self.quadratic, self.offset)
    }

    pub fn max_abs_coefficient(&self) -> f64 {
        self.linear.values().chain(self.quadratic.values()).fold(0.0, |m, v| m.max(v.abs()))
    }
}

/// `offset + sum h_i s_i + sum_{i<j} J_ij s_i s_j` over spins in {-1,+1}.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct IsingModel {
    pub n: usize,
    pub h: BTreeMap<usize, f64>,
    pub j: BTreeMap<(usize, usize), f64>,
    pub offset: f64,
}

impl IsingModel {
    pub fn new(n: usize) -> Self {
        IsingModel { n, ..Default::default() }
    }

    pub fn validate(&self) -> Result<()> {
        check_terms(self.n, &self.h, &self.j, self.offset)
    }
}

fn check_terms(n: usize, lin: &BTreeMap<usize, f64>, quad: &BTreeMap<(usize, usize), f64>, offset: f64) -> Result<()> {
    if let Some((&i, _)) = lin.iter().find(|(&i, v)| i >= n || !v.is_finite()) {
        return Err(Error::Input(format!("linear term {i} is out of range or not finite")));
    }
    if let Some((&(i, j), _)) = quad.iter().find(|(&(i, j), v)| i >= j || j >= n || !v.is_finite()) {
        return Err(Error::Input(format!("coupler ({i}, {j}) is not an ordered in-range pair with a finite value")));
    }
    if !offset.is_finite() {
        return Err(Error::Input("offset is not finite".into()));
    }
    Ok(())
}

pub fn qubo_energy(q: &Qubo, x: &[bool]) -> Result<f64> {
    if x.len() != q.n {
        return Err(Error::LengthMismatch { expected: q.n, got: x.len() });
    }
    let lin: f64 = q.linear.iter().filter(|(&i, _)| x[i]).map(|(_, v)| v).sum();
    let quad: f64 = q.quadratic.iter().filter(|(&(i, j), _)| x[i] && x[j]).map(|(_, v)| v).sum();
    Ok(q.offset + lin + quad)
}

pub fn ising_energy(m: &IsingModel, s: &[i8]) -> Result<f64> {
    if s.len() != m.n {
        return Err(Error::LengthMismatch { expected: m.n, got: s.len() });
    }
    if let Some((index, &value)) = s.iter().enumerate().find(|(_, &v)| v != 1 && v != -1) {
        return Err(Error::InvalidSpin { index, value });
    }
    let lin: f64 = m.h.iter().map(|(&i, v)| v * f64::from(s[i])).sum();
    let quad: f64 = m.j.iter().map(|(&(i, j), v)| v * f64::from(s[i] * s[j])).sum();
    Ok(m.offset + lin + quad)
}

/// Spin vector `2x - 1`.
pub fn bits_to_spins(x: &[bool]) -> Vec<i8> {
    x.iter().map(|&b| if b { 1 } else { -1 }).collect()
}

pub fn spins_to_bits(s: &[i8]) -> Vec<bool> {
    s.iter().map(|&v| v > 0).collect()
}

/// Substitutes `x = (1 + s) / 2`.
pub fn qubo_to_ising(q: &Qubo) -> IsingModel {
    let mut m = IsingModel::new(q.n);
    m.offset = q.offset;
    for (&i, &l) in &q.linear {
        *m.h.entry(i).or_insert(0.0) += l / 2.0;
        m.offset += l / 2.0;
    }
    for (&(i, j), &w) in &q.quadratic {
        *m.j.entry((i, j)).or_insert(0.0) += w / 4.0;
        *m.h.entry(i).or_insert(0.0) += w / 4.0;
        *m.h.entry(j).or_insert(0.0) += w / 4.0;
        m.offset += w / 4.0;
    }
    m.h.retain(|_, v| *v != 0.0);
    m.j.retain(|_, v| *v != 0.0);
    m
}

/// Substitutes `s = 2x - 1`.
pub fn ising_to_qubo(m: &IsingModel) -> Qubo {
    let mut q = Qubo::new(m.n);
    q.offset = m.offset;
    for (&i, &h) in &m.h {
        q.add_linear(i, 2.0 * h);
        q.offset -= h;
    }
    for (&(i, j), &w) in &m.j {
        q.add_quadratic(i, j, 4.0 * w);
        q.add_linear(i, -2.0 * w);
        q.add_linear(j, -2.0 * w);
        q.offset += w;
    }
    q.canonicalize();
    q
}

/// Default exact-cover penalties for a universe of `n` elements: `B = 1`, `A = n B + 1`.
pub fn default_cover_penalties(n: usize) -> (f64, f64) {
    (n as f64 + 1.0, 1.0)
}

/// `A sum_elements (1 - sum_{i covers e} x_i)^2 + B sum_i x_i`, one variable per
/// candidate (variable `i` is candidate `i`).
///
/// Requires `A > n B` unless `allow_weak_penalty` is set.
pub fn build_cover_qubo(instance: &CoverInstance, a: f64, b: f64, allow_weak_penalty: bool) -> Result<Qubo> {
    let n = instance.universe.len();
    if !(a.is_finite() && b.is_finite() && a > 0.0 && b > 0.0) {
        return Err(Error::Parameter(format!("penalties must be positive and finite (A = {a}, B = {b})")));
    }
    if !allow_weak_penalty && a <= n as f64 * b {
        return Err(Error::Parameter(format!("A = {a} must exceed n B = {} for a correct encoding", n as f64 * b)));
    }
    let mut q = Qubo::new(instance.len());
    q.offset = a * n as f64;
    for (i, c) in instance.candidates.iter().enumerate() {
        q.add_linear(i, -a * c.covers.len() as f64 + b);
    }
    for (i, ci) in instance.candidates.iter().enumerate() {
        for (j, cj) in instance.candidates.iter().enumerate().skip(i + 1) {
            let overlap = ci.covers.iter().filter(|e| cj.covers.binary_search(e).is_ok()).count();
            if overlap > 0 {
                q.add_quadratic(i, j, 2.0 * a * overlap as f64);
            }
        }
    }
    q.canonicalize();
    Ok(q)
}

/// Constraint and size terms of the cover objective: `(sum_e (1 - sum x_i)^2, sum x_i)`.
pub fn cover_objective_terms(instance: &CoverInstance, x: &[bool]) -> Result<(f64, f64)> {
    if x.len() != instance.len() {
        return Err(Error::LengthMismatch { expected: instance.len(), got: x.len() });
    }
    let mut counts = vec![0i64; instance.universe.len()];
    for (c, _) in instance.candidates.iter().zip(x).filter(|(_, &b)| b) {
        for &e in &c.covers {
            counts[e] += 1;
        }
    }
    let constraint = counts.iter().map(|&c| ((1 - c) * (1 - c)) as f64).sum();
    Ok((constraint, x.iter().filter(|&&b| b).count() as f64))
}

pub const DEFAULT_CLIQUE_PENALTIES: (f64, f64) = (1.0, 2.0);

/// `-A sum_v x_v + B sum_{non-edges uv} x_u x_v`; variable `v` is vertex `v`.
/// With `B > A > 0` the ground states are the maximum-clique indicators.
pub fn build_max_clique_qubo(graph: &IntersectionGraph, a: f64, b: f64) -> Result<Qubo> {
    if !(a > 0.0 && b > a && b.is_finite()) {
        return Err(Error::Parameter(format!("max-clique penalties need B > A > 0 (A = {a}, B = {b})")));
    }
    let n = graph.vertex_count();
    let mut q = Qubo::new(n);
    for v in 0..n {
        q.add_linear(v, -a);
        for u in v + 1..n {
            if !graph.has_edge(v, u) {
                q.add_quadratic(v, u, b);
            }
        }
    }
    Ok(q)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveResult {
    pub assignment: Vec<bool>,
    pub energy: f64,
    pub solver: &'static str,
    pub seed: u64,
    pub sweeps: usize,
    pub restarts: usize,
}

impl SolveResult {
    pub fn selected(&self) -> Vec<usize> {
        self.assignment.iter().enumerate().filter(|(_, &b)| b).map(|(i, _)| i).collect()
    }

    pub fn bitstring(&self) -> String {
        self.assignment.iter().map(|&b| if b { '1' } else { '0' }).collect()
    }
}

/// Sparse adjacency view used by the solvers.
struct Dense {
    linear: Vec<f64>,
    neighbors: Vec<Vec<(usize, f64)>>,
}

impl Dense {
    fn new(q: &Qubo) -> Self {
        let mut linear = vec![0.0; q.n];
        for (&i, &v) in &q.linear {
            linear[i] += v;
        }
        let mut neighbors = vec![Vec::new(); q.n];
        for (&(i, j), &v) in &q.quadratic {
            neighbors[i].push((j, v));
            neighbors[j].push((i, v));
        }
        Dense { linear, neighbors }
    }

    /// `f_i = l_i + sum_j q_ij x_j`; flipping `i` changes the energy by `(1 - 2 x_i) f_i`.
    fn fields(&self, x: &[bool]) -> Vec<f64> {
        (0..x.len())
            .map(|i| self.linear[i] + self.neighbors[i].iter().filter(|(j, _)| x[*j]).map(|(_, v)| v).sum::<f64>())
            .collect()
    }

    fn flip(&self, x: &mut [bool], fields: &mut [f64], i: usize) {
        let sign = if x[i] { -1.0 } else { 1.0 };
        x[i] = !x[i];
        for &(j, v) in &self.neighbors[i] {
            fields[j] += sign * v;
        }
    }
}

/// Exhaustive minimisation in Gray-code order. Ties resolve to the
/// lexicographically smallest bitstring `x_0 x_1 ...`.
pub fn solve_exact(q: &Qubo) -> Result<SolveResult> {
    q.validate()?;
    if q.n > EXACT_MAX_VARIABLES {
        return Err(Error::Parameter(format!("exact solver supports at most {EXACT_MAX_VARIABLES} variables, model has {}", q.n)));
    }
    let n = q.n;
    let d = Dense::new(q);
    let mut x = vec![false; n];
    let mut fields = d.fields(&x);
    let tol = 1e-9 * (1.0 + q.max_abs_coefficient());
    let mut e = 0.0;
    let mut best = (0.0, x.clone());
    for step in 1u64..(1u64 << n) {
        let k = step.trailing_zeros() as usize;
        e += if x[k] { -fields[k] } else { fields[k] };
        d.flip(&mut x, &mut fields, k);
        if e < best.0 - tol || (e <= best.0 + tol && x < best.1) {
            best = (e.min(best.0), x.clone());
        }
    }
    let energy = qubo_energy(q, &best.1)?;
    Ok(SolveResult { assignment: best.1, energy, solver: "exact", seed: 0, sweeps: 0, restarts: 0 })
}

/// Geometric temperature schedule for simulated annealing.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AnnealSchedule {
    pub t_start: f64,
    pub t_end: f64,
    pub sweeps: usize,
    pub restarts: usize,
}

pub const DEFAULT_T_END: f64 = 0.01;
pub const DEFAULT_SWEEPS_PER_VARIABLE: usize = 1000;
pub const DEFAULT_RESTARTS: usize = 32;

impl AnnealSchedule {
    /// `t_start = max |coefficient|`, `t_end = 0.01`, `1000 n` sweeps, 32 restarts.
    pub fn default_for(q: &Qubo) -> Self {
        ScheduleOverrides::default().resolve(q)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.t_start.is_finite() && self.t_start > 0.0) {
            return Err(Error::Parameter(format!("t_start must be positive, got {}", self.t_start)));
        }
        if !(self.t_end > 0.0 && self.t_end < self.t_start) {
            return Err(Error::Parameter(format!("t_end must lie in (0, t_start), got {}", self.t_end)));
        }
        if self.sweeps == 0 || self.restarts == 0 {
            return Err(Error::Parameter("sweeps and restarts must be at least 1".into()));
        }
        Ok(())
    }

    fn temperature(&self, sweep: usize) -> f64 {
        if self.sweeps <= 1 {
            return self.t_end;
        }
        let frac = sweep as f64 / (self.sweeps - 1) as f64;
        self.t_start * (self.t_end / self.t_start).powf(frac)
    }
}

/// Partial schedule, e.g. parsed from `sweeps=200,restarts=8`; unset fields
/// take model-dependent defaults.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct ScheduleOverrides {
    pub t_start: Option<f64>,
    pub t_end: Option<f64>,
    pub sweeps: Option<usize>,
    pub restarts: Option<usize>,
}

impl ScheduleOverrides {
    pub fn resolve(&self, q: &Qubo) -> AnnealSchedule {
        let t_start = self.t_start.unwrap_or_else(|| {
            let m = q.max_abs_coefficient();
            if m > 0.0 { m } else { 1.0 }
        });
        let t_end = self.t_end.unwrap_or(if DEFAULT_T_END < t_start { DEFAULT_T_END } else { t_start / 100.0 });
        AnnealSchedule {
            t_start,
            t_end,
            sweeps: self.sweeps.unwrap_or(DEFAULT_SWEEPS_PER_VARIABLE * q.n.max(1)),
            restarts: self.restarts.unwrap_or(DEFAULT_RESTARTS),
        }
    }
}

impl FromStr for ScheduleOverrides {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let mut o = ScheduleOverrides::default();
        for part in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
            let (key, value) = part
                .split_once('=')
                .ok_or_else(|| Error::Parameter(format!("schedule entry `{part}` is not key=value")))?;
            let bad = || Error::Parameter(format!("invalid value `{value}` for schedule key `{key}`"));
            match key.trim() {
                "t_start" => o.t_start = Some(value.trim().parse().map_err(|_| bad())?),
                "t_end" => o.t_end = Some(value.trim().parse().map_err(|_| bad())?),
                "sweeps" => o.sweeps = Some(value.trim().parse().map_err(|_| bad())?),
                "restarts" => o.restarts = Some(value.trim().parse().map_err(|_| bad())?),
                other => return Err(Error::Parameter(format!("unknown schedule key `{other}`"))),
            }
        }
        Ok(o)
    }
}

fn anneal_once(d: &Dense, schedule: &AnnealSchedule, seed: u64) -> Vec<bool> {
    let n = d.linear.len();
    let mut rng = seed::rng(seed);
    let mut x: Vec<bool> = (0..n).map(|_| rng.random::<bool>()).collect();
    let mut fields = d.fields(&x);
    let (mut e, mut best_e) = (0.0, 0.0);
    let mut best = x.clone();
    for sweep in 0..schedule.sweeps {
        let t = schedule.temperature(sweep);
        for i in 0..n {
            let delta = if x[i] { -fields[i] } else { fields[i] };
            if delta <= 0.0 || rng.random::<f64>() < (-delta / t).exp() {
                d.flip(&mut x, &mut fields, i);
                e += delta;
                if e < best_e {
                    best_e = e;
                    best.clone_from(&x);
                }
            }
        }
    }
    best
}

/// Best of `restarts` independent single-flip Metropolis runs. Restart `r`
/// uses a seed derived from `(seed, r)`; the result is the lowest energy,
/// then the lowest restart index, so it does not depend on execution order.
pub fn solve_sa(q: &Qubo, schedule: &AnnealSchedule, seed: u64) -> Result<SolveResult> {
    q.validate()?;
    schedule.validate()?;
    let d = Dense::new(q);
    let run = |r: usize| {
        let x = anneal_once(&d, schedule, seed::derive(seed, &[r as u64]));
        let e = qubo_energy(q, &x).expect("length matches");
        (e, r, x)
    };
    #[cfg(feature = "parallel")]
    let runs: Vec<(f64, usize, Vec<bool>)> = {
        use rayon::prelude::*;
        (0..schedule.restarts).into_par_iter().map(run).collect()
    };
    #[cfg(not(feature = "parallel"))]
    let runs: Vec<(f64, usize, Vec<bool>)> = (0..schedule.restarts).map(run).collect();
    let (energy, _, assignment) = runs
        .into_iter()
        .min_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)))
        .expect("at least one restart");
    Ok(SolveResult { assignment, energy, solver: "sa", seed, sweeps: schedule.sweeps, restarts: schedule.restarts })
}

/// Maximal cliques found by repeated max-clique annealing: for every edge not
/// yet inside a found clique, anneal a maximum clique of the endpoints'
/// common neighbourhood, add the endpoints, and extend greedily to a maximal
/// clique. Vertices without edges become singleton cliques. Every edge ends
/// up inside some returned clique, but unlike Bron-Kerbosch the list need not
/// contain every maximal clique.
pub fn cliques_via_qubo(graph: &IntersectionGraph, overrides: &ScheduleOverrides, seed: u64) -> Result<Vec<Clique>> {
    let n = graph.vertex_count();
    let mut found: Vec<Vec<usize>> = Vec::new();
    let covered = |found: &[Vec<usize>], u: usize, v: usize| found.iter().any(|c| c.contains(&u) && c.contains(&v));
    for (u, v) in graph.edges() {
        if covered(&found, u, v) {
            continue;
        }
        let common: Vec<usize> = graph.neighbors(u).intersection(graph.neighbors(v)).copied().collect();
        let mut members = vec![u, v];
        if !common.is_empty() {
            let sub = IntersectionGraph::from_indices(
                common.iter().map(|&w| graph.id(w).to_string()).collect(),
                (0..common.len())
                    .flat_map(|a| (a + 1..common.len()).map(move |b| (a, b)))
                    .filter(|&(a, b)| graph.has_edge(common[a], common[b])),
            )?;
            let (a, b) = DEFAULT_CLIQUE_PENALTIES;
            let q = build_max_clique_qubo(&sub, a, b)?;
            let result = solve_sa(&q, &overrides.resolve(&q), seed::derive(seed, &[u as u64, v as u64]))?;
            // Annealing may return a non-clique local minimum; keep a clique prefix.
            for k in result.selected() {
                let w = common[k];
                if members.iter().all(|&m| graph.has_edge(m, w)) {
                    members.push(w);
                }
            }
        }
        for w in 0..n {
            if !members.contains(&w) && members.iter().all(|&m| graph.has_edge(m, w)) {
                members.push(w);
            }
        }
        members.sort_unstable();
        if !found.contains(&members) {
            found.push(members);
        }
    }
    for v in (0..n).filter(|&v| graph.neighbors(v).is_empty()) {
        found.push(vec![v]);
    }
    let mut cliques = found.into_iter().map(|m| Clique::new(m, graph)).collect::<Result<Vec<_>>>()?;
    crate::graph::canonical_sort(&mut cliques, graph);
    Ok(cliques)
}

/// Writes the model in qbsolv text format; the offset goes in a `c offset` comment.
pub fn export_qubo(q: &Qubo) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "c qubo model with {} variables", q.n);
    let _ = writeln!(out, "c offset {:.17e}", q.offset);
    let _ = writeln!(out, "p qubo 0 {} {} {}", q.n, q.linear.len(), q.quadratic.len());
    for (&i, &v) in &q.linear {
        let _ = writeln!(out, "{i} {i} {v:.17e}");
    }
    for (&(i, j), &v) in &q.quadratic {
        let _ = writeln!(out, "{i} {j} {v:.17e}");
    }
    out
}

pub fn import_qubo(text: &str) -> Result<Qubo> {
    let mut q: Option<Qubo> = None;
    let mut offset = 0.0;
    let (mut expected_nodes, mut expected_couplers) = (0usize, 0usize);
    let mut last_line = 0;
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        last_line = line_no;
        let line = raw.trim();
        let err = |message: String| Error::Parse { line: line_no, message };
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        if line.starts_with('c') {
            if fields.len() == 3 && fields[0] == "c" && fields[1] == "offset" {
                offset = fields[2].parse().map_err(|_| err(format!("invalid offset `{}`", fields[2])))?;
            }
            continue;
        }
        if fields[0] == "p" {
            if q.is_some() {
                return Err(err("second program line".into()));
            }
            if fields.len() != 6 || fields[1] != "qubo" {
                return Err(err("expected `p qubo 0 <maxNodes> <nNodes> <nCouplers>`".into()));
            }
            let num = |s: &str| s.parse::<usize>().map_err(|_| err(format!("`{s}` is not a count")));
            let max_nodes = num(fields[3])?;
            expected_nodes = num(fields[4])?;
            expected_couplers = num(fields[5])?;
            q = Some(Qubo::new(max_nodes));
            continue;
        }
        let model = q.as_mut().ok_or_else(|| err("entry before the program line".into()))?;
        if fields.len() != 3 {
            return Err(err(format!("expected `i j value`, found {} fields", fields.len())));
        }
        let i: usize = fields[0].parse().map_err(|_| err(format!("`{}` is not an index", fields[0])))?;
        let j: usize = fields[1].parse().map_err(|_| err(format!("`{}` is not an index", fields[1])))?;
        let v: f64 = fields[2].parse().map_err(|_| err(format!("`{}` is not a number", fields[2])))?;
        if i >= model.n || j >= model.n {
            return Err(err(format!("index out of range for {} nodes", model.n)));
        }
        if i == j {
            if model.linear.insert(i, v).is_some() {
                return Err(err(format!("duplicate node entry {i}")));
            }
        } else if i > j {
            return Err(err(format!("coupler ({i}, {j}) must have i < j")));
        } else if model.quadratic.insert((i, j), v).is_some() {
            return Err(err(format!("duplicate coupler ({i}, {j})")));
        }
    }
    let mut q = q.ok_or_else(|| Error::Parse { line: last_line, message: "missing program line".into() })?;
    if q.linear.len() != expected_nodes || q.quadratic.len() != expected_couplers {
        return Err(Error::Parse {
            line: last_line,
            message: format!(
                "program line declares {expected_nodes} nodes and {expected_couplers} couplers, found {} and {}",
                q.linear.len(),
                q.quadratic.len()
            ),
        });
    }
    q.offset = offset;
    Ok(q)
}

pub fn write_qubo_file(q: &Qubo, path: &std::path::Path) -> Result<()> {
    Ok(std::fs::write(path, export_qubo(q))?)
}

pub fn read_qubo_file(path: &std::path::Path) -> Result<Qubo> {
    import_qubo(&std::fs::read_to_string(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cover::solve_cover_dlx;
    use crate::fixtures;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn all_assignments(n: usize) -> impl Iterator<Item = Vec<bool>> {
        (0u64..(1 << n)).map(move |m| (0..n).map(|i| m >> i & 1 == 1).collect())
    }

    fn lin(n: usize, terms: &[(usize, f64)]) -> Qubo {
        let mut q = Qubo::new(n);
        for &(i, v) in terms {
            q.add_linear(i, v);
        }
        q
    }

    #[test]
    fn energies() {
        let q = lin(1, &[(0, -1.0)]);
        assert_eq!(qubo_energy(&q, &[true]).unwrap(), -1.0);
        let mut q = Qubo::new(2);
        q.add_quadratic(0, 1, 2.0);
        q.offset = 0.5;
        assert_eq!(qubo_energy(&q, &[true, true]).unwrap(), 2.5);
        assert_eq!(qubo_energy(&q, &[false, false]).unwrap(), 0.5);
        assert!(matches!(qubo_energy(&q, &[true]), Err(Error::LengthMismatch { expected: 2, got: 1 })));

        let mut m = IsingModel::new(2);
        m.h.insert(0, 1.0);
        m.h.insert(1, -1.0);
        assert_eq!(ising_energy(&m, &[-1, 1]).unwrap(), -2.0);
        let mut m = IsingModel::new(2);
        m.j.insert((0, 1), 1.0);
        assert_eq!(ising_energy(&m, &[1, 1]).unwrap(), 1.0);
        assert_eq!(ising_energy(&IsingModel::new(3), &[1, -1, 1]).unwrap(), 0.0);
        assert!(matches!(ising_energy(&m, &[1, 0]), Err(Error::InvalidSpin { index: 1, value: 0 })));
    }

    #[test]
    fn single_linear_term_to_ising() {
        let m = qubo_to_ising(&lin(1, &[(0, 1.0)]));
        assert_eq!(m.h.get(&0), Some(&0.5));
        assert_eq!(m.offset, 0.5);
        assert_eq!(qubo_to_ising(&Qubo::new(3)), IsingModel::new(3));
        assert_eq!(ising_to_qubo(&IsingModel::new(3)), Qubo::new(3));
    }

    #[test]
    fn cover_qubo_example_energies() {
        let inst = fixtures::exact_cover_example();
        let q = build_cover_qubo(&inst, 6.0, 1.0, false).unwrap();
        let pick = |sel: &[usize]| (0..7).map(|i| sel.contains(&i)).collect::<Vec<_>>();
        assert_eq!(qubo_energy(&q, &pick(&[0, 4, 6])).unwrap(), 3.0);
        assert_eq!(qubo_energy(&q, &pick(&[])).unwrap(), 30.0);
        let exact = solve_exact(&q).unwrap();
        assert_eq!(exact.selected(), vec![0, 4, 6]);
        assert_eq!(exact.energy, 3.0);
        assert!(build_cover_qubo(&inst, 5.0, 1.0, false).unwrap_err().is_parameter());
        assert!(build_cover_qubo(&inst, 5.0, 1.0, true).is_ok());
    }

    #[test]
    fn max_clique_small_graphs() {
        let tri = IntersectionGraph::new(vec!["a".into(), "b".into(), "c".into()], [("a", "b"), ("b", "c"), ("a", "c")]).unwrap();
        let r = solve_exact(&build_max_clique_qubo(&tri, 1.0, 2.0).unwrap()).unwrap();
        assert_eq!((r.bitstring().as_str(), r.energy), ("111", -3.0));
        let empty = IntersectionGraph::new(vec!["a".into(), "b".into(), "c".into()], Vec::<(&str, &str)>::new()).unwrap();
        let q = build_max_clique_qubo(&empty, 1.0, 2.0).unwrap();
        let ground: Vec<Vec<bool>> = all_assignments(3).filter(|x| qubo_energy(&q, x).unwrap() == -1.0).collect();
        assert_eq!(ground.len(), 3);
        assert!(ground.iter().all(|x| x.iter().filter(|&&b| b).count() == 1));
        assert!(build_max_clique_qubo(&tri, 2.0, 2.0).unwrap_err().is_parameter());
    }

    #[test]
    fn solve_exact_edge_cases() {
        let r = solve_exact(&lin(1, &[(0, -1.0)])).unwrap();
        assert_eq!((r.assignment, r.energy), (vec![true], -1.0));
        let mut zero = Qubo::new(4);
        zero.offset = 2.5;
        let r = solve_exact(&zero).unwrap();
        assert_eq!((r.bitstring().as_str(), r.energy), ("0000", 2.5));
        // Two ground states 10 and 01: lexicographic tie-break prefers 01.
        let mut q = lin(2, &[(0, -1.0), (1, -1.0)]);
        q.add_quadratic(0, 1, 1.0);
        assert_eq!(solve_exact(&q).unwrap().bitstring(), "01");
        assert!(solve_exact(&Qubo::new(31)).unwrap_err().is_parameter());
    }

    #[test]
    fn sa_examples() {
        let q = lin(1, &[(0, -1.0)]);
        let s = AnnealSchedule { t_start: 1.0, t_end: 0.5, sweeps: 1, restarts: 1 };
        assert_eq!(solve_sa(&q, &s, 0).unwrap().energy, -1.0);
        let inst = fixtures::exact_cover_example();
        let q = build_cover_qubo(&inst, 6.0, 1.0, false).unwrap();
        let schedule = AnnealSchedule::default_for(&q);
        assert_eq!(schedule.sweeps, 7000);
        for seed in 0..10 {
            let r = solve_sa(&q, &schedule, seed).unwrap();
            assert_eq!(r.selected(), vec![0, 4, 6]);
            assert_eq!(r.energy, 3.0);
        }
    }

    #[test]
    fn schedule_overrides_parse() {
        let o: ScheduleOverrides = "sweeps=10, restarts=2,t_end=0.1".parse().unwrap();
        assert_eq!(o, ScheduleOverrides { t_start: None, t_end: Some(0.1), sweeps: Some(10), restarts: Some(2) });
        assert!("sweeps".parse::<ScheduleOverrides>().unwrap_err().is_parameter());
        assert!("speed=3".parse::<ScheduleOverrides>().unwrap_err().is_parameter());
        let bad = AnnealSchedule { t_start: 1.0, t_end: 2.0, sweeps: 1, restarts: 1 };
        assert!(solve_sa(&Qubo::new(1), &bad, 0).unwrap_err().is_parameter());
    }

    #[test]
    fn experimental_cliques_on_scene() {
        let g = fixtures::scene_abstract().graph().unwrap();
        let o = ScheduleOverrides { sweeps: Some(200), restarts: Some(4), ..Default::default() };
        let sa = cliques_via_qubo(&g, &o, 5).unwrap();
        assert_eq!(sa, crate::graph::maximal_cliques_bk(&g));
        let lonely = IntersectionGraph::new(vec!["a".into(), "b".into()], Vec::<(&str, &str)>::new()).unwrap();
        assert_eq!(cliques_via_qubo(&lonely, &o, 0).unwrap().len(), 2);
    }

    #[test]
    fn file_format() {
        let mut q = lin(4, &[(0, -1.25), (3, 1.0 / 3.0)]);
        q.add_quadratic(0, 2, 2.0e-7);
        q.offset = 12.5;
        let text = export_qubo(&q);
        assert!(text.contains("p qubo 0 4 2 1"));
        assert_eq!(import_qubo(&text).unwrap(), q);

        let dup = "p qubo 0 3 0 2\n0 1 1.0\n0 1 2.0\n";
        assert!(matches!(import_qubo(dup), Err(Error::Parse { line: 3, .. })));
        assert!(matches!(import_qubo("0 0 1\n"), Err(Error::Parse { line: 1, .. })));
        assert!(matches!(import_qubo("p qubo 0 2 0 1\n1 0 1.0\n"), Err(Error::Parse { line: 2, .. })));
        assert!(matches!(import_qubo("p qubo 0 2 1 0\n"), Err(Error::Parse { .. })));
        assert!(matches!(import_qubo("c comment\n"), Err(Error::Parse { .. })));
    }

    fn random_qubo(max_n: usize) -> impl Strategy<Value = Qubo> {
        (1..=max_n).prop_flat_map(|n| {
            (
                proptest::collection::vec(-5.0f64..5.0, n),
                proptest::collection::vec(proptest::option::of(-5.0f64..5.0), n * (n - 1) / 2),
                -5.0f64..5.0,
            )
                .prop_map(move |(l, couplers, offset)| {
                    let mut q = Qubo::new(n);
                    for (i, v) in l.into_iter().enumerate() {
                        q.add_linear(i, v);
                    }
                    let pairs = (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j)));
                    for ((i, j), v) in pairs.zip(couplers) {
                        if let Some(v) = v {
                            q.add_quadratic(i, j, v);
                        }
                    }
                    q.offset = offset;
                    q.canonicalize();
                    q
                })
        })
    }

    fn random_graph(max_n: usize) -> impl Strategy<Value = IntersectionGraph> {
        (1..=max_n).prop_flat_map(|n| {
            proptest::collection::vec(any::<bool>(), n * (n - 1) / 2).prop_map(move |bits| {
                let pairs = (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j)));
                let edges: Vec<(usize, usize)> = pairs.zip(bits).filter(|(_, b)| *b).map(|(p, _)| p).collect();
                IntersectionGraph::from_indices((0..n).map(|i| format!("v{i}")).collect(), edges).unwrap()
            })
        })
    }

    fn random_cover() -> impl Strategy<Value = CoverInstance> {
        (1usize..=6, 1usize..=8).prop_flat_map(|(elems, subsets)| {
            proptest::collection::vec(proptest::collection::vec(any::<bool>(), elems), subsets).prop_map(move |rows| {
                let sets = rows
                    .into_iter()
                    .enumerate()
                    .map(|(i, bits)| (format!("S{i}"), (0..elems).filter(|&e| bits[e]).collect(), 0))
                    .collect();
                CoverInstance::from_sets((0..elems).map(|e| e.to_string()).collect(), sets).unwrap()
            })
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]

        #[test]
        fn ising_energy_matches_qubo(q in random_qubo(8)) {
            let m = qubo_to_ising(&q);
            let back = ising_to_qubo(&m);
            for x in all_assignments(q.n) {
                let e = qubo_energy(&q, &x).unwrap();
                prop_assert!((e - ising_energy(&m, &bits_to_spins(&x)).unwrap()).abs() < 1e-9);
                prop_assert!((e - qubo_energy(&back, &x).unwrap()).abs() < 1e-9);
            }
        }

        #[test]
        fn export_round_trip(q in random_qubo(10)) {
            let r = import_qubo(&export_qubo(&q)).unwrap();
            prop_assert_eq!(r.n, q.n);
            prop_assert_eq!(r.offset, q.offset);
            prop_assert_eq!(r.linear, q.linear);
            prop_assert_eq!(r.quadratic, q.quadratic);
        }

        #[test]
        fn max_clique_ground_states(g in random_graph(8)) {
            let q = build_max_clique_qubo(&g, 1.0, 2.0).unwrap();
            let omega = crate::graph::maximal_cliques_bk(&g).iter().map(|c| c.len()).max().unwrap();
            let min = solve_exact(&q).unwrap().energy;
            prop_assert_eq!(min, -(omega as f64));
            for x in all_assignments(g.vertex_count()) {
                let members: Vec<usize> = (0..x.len()).filter(|&i| x[i]).collect();
                let is_max_clique = members.len() == omega && g.is_clique(&members);
                prop_assert_eq!(qubo_energy(&q, &x).unwrap() == min, is_max_clique);
            }
        }

        #[test]
        fn cover_qubo_minimum_is_smallest_exact_cover(inst in random_cover()) {
            let (a, b) = default_cover_penalties(inst.universe.len());
            let q = build_cover_qubo(&inst, a, b, false).unwrap();
            let best = solve_exact(&q).unwrap();
            let (constraint, size) = cover_objective_terms(&inst, &best.assignment).unwrap();
            prop_assert!((best.energy - (a * constraint + b * size)).abs() < 1e-9);
            match solve_cover_dlx(&inst) {
                Ok(s) => {
                    prop_assert_eq!(constraint, 0.0);
                    prop_assert_eq!(size as usize, s.subsets_used);
                }
                Err(_) => prop_assert!(best.energy >= a),
            }
        }

        #[test]
        fn sa_never_beats_exact_and_is_deterministic(q in random_qubo(8), seed in any::<u64>()) {
            let schedule = AnnealSchedule { sweeps: 200, restarts: 4, ..AnnealSchedule::default_for(&q) };
            let r = solve_sa(&q, &schedule, seed).unwrap();
            prop_assert!(r.energy >= solve_exact(&q).unwrap().energy - 1e-9);
            assert_abs_diff_eq!(r.energy, qubo_energy(&q, &r.assignment).unwrap(), epsilon = 1e-9);
            prop_assert_eq!(r, solve_sa(&q, &schedule, seed).unwrap());
        }
    }
}
