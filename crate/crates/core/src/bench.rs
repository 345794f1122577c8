//! Benchmark support: random block-structured graphs, adversarial pairs
//! witnessing the lower bounds, structural metrics, and a deterministic
//! trial grid with CSV-friendly records.

use std::collections::BTreeMap;
use std::time::Instant;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::graph::{DirectedGraph, VertexId};
use crate::learner::{learn_bounded, learn_unbounded, SkeletonHint};
use crate::oracle::{scm_from_graph, CiConfig, DataOracle, GraphOracle};
use crate::separation::SeparationFlavor;
use crate::sepsys::{BoundedConfig, ExperimentFamily};
use crate::{stable_seed, Error, Result};

/// Block-structured random directed graph parameters.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SbmConfig {
    pub n: usize,
    pub p: f64,
    pub b: usize,
}

impl SbmConfig {
    pub fn new(n: usize, p: f64, b: usize) -> Result<Self> {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::InvalidInput(format!(
                "edge probability {p} outside [0, 1]"
            )));
        }
        if n == 0 || b == 0 || b > n {
            return Err(Error::InvalidInput(format!(
                "need 1 <= b <= n, got n = {n}, b = {b}"
            )));
        }
        Ok(SbmConfig { n, p, b })
    }
}

/// Vertices are shuffled into ⌈n/b⌉ blocks (all of size b except a
/// possibly smaller last one). Within a block both directions appear
/// independently with probability p; across blocks only the low-to-high
/// direction may appear. Cycles therefore live inside blocks.
pub fn sbm_generate(cfg: &SbmConfig, seed: u64) -> DirectedGraph {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = cfg.n;
    let mut perm: Vec<VertexId> = (0..n).collect();
    for i in (1..n).rev() {
        perm.swap(i, rng.gen_range(0..=i));
    }
    let blocks: Vec<&[VertexId]> = perm.chunks(cfg.b).collect();

    let mut edges = Vec::new();
    for block in &blocks {
        for &u in *block {
            for &v in *block {
                if u != v && rng.gen_bool(cfg.p) {
                    edges.push((u, v));
                }
            }
        }
    }
    for (i, low) in blocks.iter().enumerate() {
        for high in &blocks[i + 1..] {
            for &u in *low {
                for &v in *high {
                    if rng.gen_bool(cfg.p) {
                        edges.push((u, v));
                    }
                }
            }
        }
    }
    DirectedGraph::from_edges(n, &edges).expect("generated edges are valid")
}

/// Which lower-bound family the adversarial pair witnesses: experiments
/// that are individually too small, or families with too few experiments.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum WorstCaseVariant {
    ExperimentSize,
    ExperimentCount,
}

/// A complete two-way graph on the first `c` vertices (rest isolated) and
/// the same graph minus one pinned edge. No family of experiments that
/// stays under the respective bound can tell the two apart.
pub fn worst_case_pair(
    n: usize,
    c: usize,
    variant: WorstCaseVariant,
) -> Result<(DirectedGraph, DirectedGraph)> {
    if c < 2 || c > n {
        return Err(Error::InvalidInput(format!(
            "need 2 <= c <= n, got n = {n}, c = {c}"
        )));
    }
    let mut edges = Vec::new();
    for u in 0..c {
        for v in 0..c {
            if u != v {
                edges.push((u, v));
            }
        }
    }
    let g = DirectedGraph::from_edges(n, &edges)?;
    let removed = match variant {
        WorstCaseVariant::ExperimentSize => (0, 1),
        WorstCaseVariant::ExperimentCount => (1, 0),
    };
    let g_prime = g.without_edge(removed.0, removed.1);
    Ok((g, g_prime))
}

/// For a family with fewer than `c` experiments there is a core member
/// whose leave-one-out set no experiment realizes; dropping one of its
/// incoming core edges is then invisible to the whole family. Returns
/// that edge, or None if the family is large enough to cover every
/// leave-one-out set.
pub fn adversarial_edge_for_family(
    n: usize,
    c: usize,
    family: &ExperimentFamily,
) -> Result<Option<(VertexId, VertexId)>> {
    if c < 2 || c > n {
        return Err(Error::InvalidInput(format!(
            "need 2 <= c <= n, got n = {n}, c = {c}"
        )));
    }
    let core: std::collections::BTreeSet<VertexId> = (0..c).collect();
    for target in 0..c {
        let leave_one_out: std::collections::BTreeSet<VertexId> =
            core.iter().copied().filter(|&v| v != target).collect();
        let realized = family.sets().iter().any(|i| {
            let restricted: std::collections::BTreeSet<VertexId> =
                i.intersection(&core).copied().collect();
            restricted == leave_one_out
        });
        if !realized {
            let source = (0..c).find(|&v| v != target).expect("c >= 2");
            return Ok(Some((source, target)));
        }
    }
    Ok(None)
}

/// False positives plus false negatives over directed edges.
pub fn shd(g_true: &DirectedGraph, g_learned: &DirectedGraph) -> Result<usize> {
    if g_true.n() != g_learned.n() {
        return Err(Error::VertexSetMismatch(g_true.n(), g_learned.n()));
    }
    let fp = g_learned
        .edges()
        .filter(|&(u, v)| !g_true.has_edge(u, v))
        .count();
    let fn_ = g_true
        .edges()
        .filter(|&(u, v)| !g_learned.has_edge(u, v))
        .count();
    Ok(fp + fn_)
}

/// Harmonic mean of directed-edge precision and recall; 1 when both
/// graphs are empty, 0 when nothing true was recovered but errors exist.
pub fn f1(g_true: &DirectedGraph, g_learned: &DirectedGraph) -> Result<f64> {
    if g_true.n() != g_learned.n() {
        return Err(Error::VertexSetMismatch(g_true.n(), g_learned.n()));
    }
    let tp = g_learned
        .edges()
        .filter(|&(u, v)| g_true.has_edge(u, v))
        .count();
    let fp = g_learned.edge_count() - tp;
    let fn_ = g_true.edge_count() - tp;
    if tp == 0 {
        return Ok(if fp + fn_ == 0 { 1.0 } else { 0.0 });
    }
    Ok(2.0 * tp as f64 / (2.0 * tp as f64 + (fp + fn_) as f64))
}

/// A number, or a small formula over n: "log(n)/n" with an optional
/// leading coefficient for probabilities, "200n" style for sample sizes.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Expr {
    Num(f64),
    Form(String),
}

impl Expr {
    pub fn eval_p(&self, n: usize) -> Result<f64> {
        let p = match self {
            Expr::Num(x) => *x,
            Expr::Form(s) => {
                let compact: String = s.chars().filter(|c| !c.is_whitespace() && *c != '*').collect();
                let coeff_str = compact.strip_suffix("log(n)/n").ok_or_else(|| {
                    Error::InvalidInput(format!("cannot parse probability form {s:?}"))
                })?;
                let coeff = if coeff_str.is_empty() {
                    1.0
                } else {
                    coeff_str.parse::<f64>().map_err(|_| {
                        Error::InvalidInput(format!("bad coefficient in {s:?}"))
                    })?
                };
                coeff * (n as f64).ln() / n as f64
            }
        };
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::InvalidInput(format!(
                "probability {p} outside [0, 1] at n = {n}"
            )));
        }
        Ok(p)
    }

    pub fn eval_samples(&self, n: usize) -> Result<usize> {
        match self {
            Expr::Num(x) => {
                if *x < 1.0 || x.fract() != 0.0 {
                    return Err(Error::InvalidInput(format!(
                        "sample count must be a positive integer, got {x}"
                    )));
                }
                Ok(*x as usize)
            }
            Expr::Form(s) => {
                let compact: String = s.chars().filter(|c| !c.is_whitespace() && *c != '*').collect();
                let coeff_str = compact.strip_suffix('n').ok_or_else(|| {
                    Error::InvalidInput(format!("cannot parse sample form {s:?}"))
                })?;
                let coeff = coeff_str.parse::<usize>().map_err(|_| {
                    Error::InvalidInput(format!("bad coefficient in {s:?}"))
                })?;
                Ok(coeff * n)
            }
        }
    }
}

fn default_m_axis() -> Vec<Option<usize>> {
    vec![None]
}

/// Cartesian grid of trial configurations.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct GridSpec {
    pub n: Vec<usize>,
    pub p: Vec<Expr>,
    pub b: Vec<usize>,
    pub flavor: Vec<String>,
    pub mode: Vec<String>,
    #[serde(default = "default_m_axis")]
    pub m: Vec<Option<usize>>,
    #[serde(default)]
    pub samples: Vec<Expr>,
    #[serde(default)]
    pub skeleton: Option<String>,
}

/// One trial's outcome; errors land in `status` instead of aborting.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TrialRecord {
    pub seed: u64,
    pub n: usize,
    pub p: f64,
    pub b: usize,
    pub flavor: String,
    pub mode: String,
    pub m: Option<usize>,
    pub samples: Option<usize>,
    pub experiments: usize,
    pub max_size: usize,
    pub shd: usize,
    pub f1: f64,
    pub wall_ms: u64,
    pub status: String,
}

#[derive(Clone, Debug)]
struct Cell {
    n: usize,
    p: f64,
    b: usize,
    flavor: String,
    mode: String,
    m: Option<usize>,
    samples: Option<usize>,
}

fn skeleton_hint(spec: &Option<String>, mode: &str) -> Result<SkeletonHint> {
    match spec.as_deref() {
        None => Ok(if mode == "exact" {
            SkeletonHint::OracleExact
        } else {
            SkeletonHint::PcSkeleton(SkeletonHint::DEFAULT_PC_DEPTH)
        }),
        Some("oracle") => Ok(SkeletonHint::OracleExact),
        Some("pc") => Ok(SkeletonHint::PcSkeleton(SkeletonHint::DEFAULT_PC_DEPTH)),
        Some("complete") => Ok(SkeletonHint::Complete),
        Some(other) => Err(Error::InvalidInput(format!(
            "unknown skeleton hint {other:?}"
        ))),
    }
}

fn run_trial(cell: &Cell, hint: SkeletonHint, trial: usize, master_seed: u64) -> TrialRecord {
    let mut parts: Vec<u64> = vec![
        cell.n as u64,
        cell.p.to_bits(),
        cell.b as u64,
        cell.flavor.len() as u64,
        if cell.flavor == "d" { 0 } else { 1 },
        if cell.mode == "exact" { 0 } else { 1 },
        cell.m.map(|m| m as u64 + 1).unwrap_or(0),
        cell.samples.map(|s| s as u64 + 1).unwrap_or(0),
        trial as u64,
    ];
    let seed = stable_seed(master_seed, &parts);
    parts.push(1);
    let scm_seed = stable_seed(master_seed, &parts);
    parts.push(2);
    let oracle_seed = stable_seed(master_seed, &parts);

    let mut record = TrialRecord {
        seed,
        n: cell.n,
        p: cell.p,
        b: cell.b,
        flavor: cell.flavor.clone(),
        mode: cell.mode.clone(),
        m: cell.m,
        samples: cell.samples,
        experiments: 0,
        max_size: 0,
        shd: 0,
        f1: 0.0,
        wall_ms: 0,
        status: "ok".into(),
    };

    let run = || -> Result<(usize, usize, usize, f64, u64)> {
        let flavor: SeparationFlavor = cell.flavor.parse()?;
        let cfg = SbmConfig::new(cell.n, cell.p, cell.b)?;
        let g = sbm_generate(&cfg, seed);
        let start = Instant::now();
        let learned = match cell.mode.as_str() {
            "exact" => {
                let mut oracle = GraphOracle::new(g.clone(), flavor);
                match cell.m {
                    None => learn_unbounded(&mut oracle, flavor, hint)?,
                    Some(m) => learn_bounded(&mut oracle, &BoundedConfig::new(m))?,
                }
            }
            "data" => {
                let samples = cell.samples.ok_or_else(|| {
                    Error::InvalidInput("data mode requires a samples axis".into())
                })?;
                let scm = scm_from_graph(&g, scm_seed)?;
                let ci = CiConfig::new(0.01, samples)?;
                let mut oracle = DataOracle::new(scm, ci, oracle_seed)?;
                match cell.m {
                    None => learn_unbounded(&mut oracle, flavor, hint)?,
                    Some(m) => learn_bounded(&mut oracle, &BoundedConfig::new(m))?,
                }
            }
            other => {
                return Err(Error::InvalidInput(format!("unknown mode {other:?}")));
            }
        };
        let wall_ms = start.elapsed().as_millis() as u64;
        Ok((
            learned.experiments_total,
            learned.max_experiment_size,
            shd(&g, &learned.graph)?,
            f1(&g, &learned.graph)?,
            wall_ms,
        ))
    };
    match run() {
        Ok((experiments, max_size, shd, f1, wall_ms)) => {
            record.experiments = experiments;
            record.max_size = max_size;
            record.shd = shd;
            record.f1 = f1;
            record.wall_ms = wall_ms;
        }
        Err(e) => record.status = format!("error: {e}"),
    }
    record
}

/// Runs `trials` per grid cell in parallel. Row order and every row's
/// content are deterministic functions of (spec, trials, master_seed).
pub fn run_grid(spec: &GridSpec, trials: usize, master_seed: u64) -> Result<Vec<TrialRecord>> {
    if spec.n.is_empty() || spec.p.is_empty() || spec.b.is_empty() {
        return Err(Error::InvalidInput("grid axes must be non-empty".into()));
    }
    if spec.flavor.is_empty() || spec.mode.is_empty() {
        return Err(Error::InvalidInput("grid axes must be non-empty".into()));
    }
    for f in &spec.flavor {
        let _: SeparationFlavor = f.parse()?;
    }
    if spec.mode.iter().any(|m| m != "exact" && m != "data") {
        return Err(Error::InvalidInput(
            "mode must be \"exact\" or \"data\"".into(),
        ));
    }
    if spec.mode.iter().any(|m| m == "data") && spec.samples.is_empty() {
        return Err(Error::InvalidInput(
            "data mode requires a samples axis".into(),
        ));
    }
    let m_axis = if spec.m.is_empty() {
        default_m_axis()
    } else {
        spec.m.clone()
    };

    let mut jobs: Vec<(Cell, SkeletonHint, usize)> = Vec::new();
    for &n in &spec.n {
        for p_expr in &spec.p {
            let p = p_expr.eval_p(n)?;
            for &b in &spec.b {
                SbmConfig::new(n, p, b)?;
                for flavor in &spec.flavor {
                    for mode in &spec.mode {
                        let hint = skeleton_hint(&spec.skeleton, mode)?;
                        let samples_axis: Vec<Option<usize>> = if mode == "data" {
                            spec.samples
                                .iter()
                                .map(|e| e.eval_samples(n).map(Some))
                                .collect::<Result<_>>()?
                        } else {
                            vec![None]
                        };
                        for &m in &m_axis {
                            for &samples in &samples_axis {
                                let cell = Cell {
                                    n,
                                    p,
                                    b,
                                    flavor: flavor.clone(),
                                    mode: mode.clone(),
                                    m,
                                    samples,
                                };
                                for trial in 0..trials {
                                    jobs.push((cell.clone(), hint, trial));
                                }
                            }
                        }
                    }
                }
            }
        }
    }
    Ok(jobs
        .par_iter()
        .map(|(cell, hint, trial)| run_trial(cell, *hint, *trial, master_seed))
        .collect())
}

/// Per-cell mean and 90% normal-approximation half-width over ok rows.
#[derive(Clone, Debug, Serialize)]
pub struct CellSummary {
    pub n: usize,
    pub p: f64,
    pub b: usize,
    pub flavor: String,
    pub mode: String,
    pub m: Option<usize>,
    pub samples: Option<usize>,
    pub trials_ok: usize,
    pub mean_experiments: f64,
    pub ci_experiments: f64,
    pub mean_shd: f64,
    pub ci_shd: f64,
    pub mean_f1: f64,
    pub ci_f1: f64,
}

fn mean_ci(values: &[f64]) -> (f64, f64) {
    let k = values.len();
    if k == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = values.iter().sum::<f64>() / k as f64;
    if k < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (k as f64 - 1.0);
    (mean, 1.645 * var.sqrt() / (k as f64).sqrt())
}

pub fn summarize(records: &[TrialRecord]) -> Vec<CellSummary> {
    type Key = (usize, u64, usize, String, String, Option<usize>, Option<usize>);
    let mut groups: BTreeMap<Key, Vec<&TrialRecord>> = BTreeMap::new();
    for r in records.iter().filter(|r| r.status == "ok") {
        let key = (
            r.n,
            r.p.to_bits(),
            r.b,
            r.flavor.clone(),
            r.mode.clone(),
            r.m,
            r.samples,
        );
        groups.entry(key).or_default().push(r);
    }
    groups
        .into_iter()
        .map(|((n, p_bits, b, flavor, mode, m, samples), rows)| {
            let exps: Vec<f64> = rows.iter().map(|r| r.experiments as f64).collect();
            let shds: Vec<f64> = rows.iter().map(|r| r.shd as f64).collect();
            let f1s: Vec<f64> = rows.iter().map(|r| r.f1).collect();
            let (mean_experiments, ci_experiments) = mean_ci(&exps);
            let (mean_shd, ci_shd) = mean_ci(&shds);
            let (mean_f1, ci_f1) = mean_ci(&f1s);
            CellSummary {
                n,
                p: f64::from_bits(p_bits),
                b,
                flavor,
                mode,
                m,
                samples,
                trials_ok: rows.len(),
                mean_experiments,
                ci_experiments,
                mean_shd,
                ci_shd,
                mean_f1,
                ci_f1,
            }
        })
        .collect()
}
