//! Two-stage recovery of a directed graph (cycles allowed) from
//! interventional CI queries.
//!
//! Stage one learns every vertex's descendant set and the component
//! partition: under each intervention set of a separating family, a vertex
//! in the set is marginally dependent exactly on its descendants, and
//! intersecting with an observable-skeleton neighborhood keeps only edges
//! worth testing. Stage two recovers parents per vertex under a
//! leave-one-out witness experiment: component-internal parents by
//! marginal queries, ancestral parents by conditioning on the remaining
//! ancestors.

use std::collections::BTreeSet;

use itertools::Itertools;

use crate::graph::{
    greedy_coloring, DirectedGraph, SccPartition, UndirectedGraph, VertexId, VertexSet,
};
use crate::oracle::{CiQuery, InterventionOracle};
use crate::separation::SeparationFlavor;
use crate::sepsys::{
    bounded_lifted_separating_system, colored_separating_system, lifted_separating_system,
    nm_separating_system, witness_lookup, BoundedConfig, ExperimentFamily,
};
use crate::{Error, Result};

/// How stage one obtains its observational adjacency structure.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SkeletonHint {
    /// Ask the oracle for the exact observable skeleton (graph backends).
    OracleExact,
    /// Bounded-depth CI skeleton search on observational data.
    PcSkeleton(usize),
    /// Skip skeleton learning; use the complete graph.
    Complete,
}

impl SkeletonHint {
    pub const DEFAULT_PC_DEPTH: usize = 2;
}

/// Stage-one output: descendant structure, components, and the experiment
/// sets that were actually queried. `h_graph`'s out-edges are the raw
/// per-vertex dependence sets; `descendant_sets` is its reflexive
/// descendant closure.
#[derive(Clone, Debug)]
pub struct Stage1Result {
    pub descendant_sets: Vec<VertexSet>,
    pub sccs: SccPartition,
    pub h_graph: DirectedGraph,
    pub experiments_used: ExperimentFamily,
}

/// Final pipeline output with experiment accounting. `experiments_total`
/// counts distinct intervention sets actually queried across both stages;
/// `experiments_raw` counts them per stage without dedup. Observational
/// queries spent on skeleton learning are not experiments.
#[derive(Clone, Debug)]
pub struct LearnedGraph {
    pub graph: DirectedGraph,
    pub experiments_total: usize,
    pub experiments_raw: usize,
    pub max_experiment_size: usize,
}

/// Observational adjacency per the hint. Exact mode requires a backend
/// that knows the hidden graph; the search mode issues do(∅) CI queries.
pub fn learn_observable_skeleton(
    oracle: &mut dyn InterventionOracle,
    hint: SkeletonHint,
    flavor: SeparationFlavor,
) -> Result<UndirectedGraph> {
    match hint {
        SkeletonHint::OracleExact => oracle.observable_skeleton(flavor).ok_or_else(|| {
            Error::InvalidInput(
                "exact skeleton hint requires a graph-backed oracle".into(),
            )
        }),
        SkeletonHint::Complete => Ok(UndirectedGraph::complete(oracle.n())),
        SkeletonHint::PcSkeleton(maxdepth) => pc_skeleton(oracle, maxdepth),
    }
}

/// Stable-order bounded-depth skeleton search on observational data.
/// Starts complete; at each depth, for every still-adjacent pair, scans
/// conditioning sets drawn from either endpoint's neighborhood snapshot
/// and deletes the edge on the first independence. Never deletes pairs
/// that no conditioning set separates, so with an exact oracle the result
/// stays a supergraph of the observable skeleton.
pub fn pc_skeleton(
    oracle: &mut dyn InterventionOracle,
    maxdepth: usize,
) -> Result<UndirectedGraph> {
    let n = oracle.n();
    let mut adj: Vec<BTreeSet<VertexId>> = (0..n)
        .map(|v| (0..n).filter(|&w| w != v).collect())
        .collect();
    for depth in 0..=maxdepth {
        let snapshot = adj.clone();
        let mut any_pool = false;
        for x in 0..n {
            for y in (x + 1)..n {
                if !adj[x].contains(&y) {
                    continue;
                }
                let mut separated = false;
                for side in [x, y] {
                    let other = if side == x { y } else { x };
                    let pool: Vec<VertexId> = snapshot[side]
                        .iter()
                        .copied()
                        .filter(|&v| v != other)
                        .collect();
                    if pool.len() < depth {
                        continue;
                    }
                    any_pool = true;
                    for cond in pool.into_iter().combinations(depth) {
                        let q = CiQuery::conditional(x, y, cond, VertexSet::new());
                        if oracle.ci(&q)? {
                            separated = true;
                            break;
                        }
                    }
                    if separated {
                        break;
                    }
                }
                if separated {
                    adj[x].remove(&y);
                    adj[y].remove(&x);
                }
            }
        }
        if !any_pool {
            break;
        }
    }
    let mut edges = Vec::new();
    for x in 0..n {
        for &y in adj[x].iter().filter(|&&y| y > x) {
            edges.push((x, y));
        }
    }
    UndirectedGraph::from_edges(n, &edges)
}

/// Stage one with an explicit experiment family: accumulates, per vertex
/// X in each set I, the neighbors outside I that stay marginally dependent
/// under do(I), which is exactly X's descendants among its candidate
/// neighbors.
pub fn stage1_with_family(
    oracle: &mut dyn InterventionOracle,
    neighbors: &UndirectedGraph,
    family: &ExperimentFamily,
) -> Result<Stage1Result> {
    let n = oracle.n();
    if neighbors.n() != n {
        return Err(Error::VertexSetMismatch(neighbors.n(), n));
    }
    let mut d_sets: Vec<VertexSet> = vec![VertexSet::new(); n];
    let mut used = Vec::new();
    for iset in family.sets() {
        let mut issued = false;
        for &x in iset {
            for &y in neighbors.neighbors(x) {
                if iset.contains(&y) {
                    continue;
                }
                issued = true;
                let dependent = !oracle.ci(&CiQuery::marginal(x, y, iset.clone()))?;
                if dependent {
                    d_sets[x].insert(y);
                }
            }
        }
        if issued {
            used.push(iset.clone());
        }
    }
    let mut edges = Vec::new();
    for (x, targets) in d_sets.iter().enumerate() {
        for &y in targets {
            edges.push((x, y));
        }
    }
    let h_graph = DirectedGraph::from_edges(n, &edges)?;
    let descendant_sets = (0..n).map(|v| h_graph.descendants(v)).collect();
    let sccs = h_graph.scc_partition();
    Ok(Stage1Result {
        descendant_sets,
        sccs,
        h_graph,
        experiments_used: ExperimentFamily::from_sets(used),
    })
}

/// Stage one driven by a coloring of the learned observational skeleton.
pub fn algorithm1(
    oracle: &mut dyn InterventionOracle,
    hint: SkeletonHint,
    flavor: SeparationFlavor,
) -> Result<Stage1Result> {
    let skeleton = learn_observable_skeleton(oracle, hint, flavor)?;
    let coloring = greedy_coloring(&skeleton);
    let family = colored_separating_system(&coloring)?;
    stage1_with_family(oracle, &skeleton, &family)
}

/// Stage two: per vertex, under its leave-one-out witness experiment,
/// recover component-internal parents by marginal queries and ancestral
/// parents by conditioning on the remaining ancestors.
pub fn algorithm2(
    oracle: &mut dyn InterventionOracle,
    stage1: &Stage1Result,
    family: &ExperimentFamily,
) -> Result<LearnedGraph> {
    let n = oracle.n();
    if stage1.sccs.n() != n {
        return Err(Error::VertexSetMismatch(stage1.sccs.n(), n));
    }
    let mut edges: Vec<(VertexId, VertexId)> = Vec::new();
    let mut used = vec![false; family.len()];

    for (i, comp) in stage1.sccs.components().iter().enumerate() {
        let comp_set: VertexSet = comp.iter().copied().collect();
        for &x in comp {
            let wit = witness_lookup(family, &stage1.sccs, i, x)?;
            let iset = &family.sets()[wit];

            for &y in comp.iter().filter(|&&y| y != x) {
                used[wit] = true;
                let dependent = !oracle.ci(&CiQuery::marginal(x, y, iset.clone()))?;
                if dependent {
                    edges.push((y, x));
                }
            }

            let anc_x = stage1.h_graph.ancestors(x);
            for &y in anc_x.difference(&comp_set) {
                let cond: Vec<VertexId> = anc_x
                    .iter()
                    .copied()
                    .filter(|&v| !comp_set.contains(&v) && v != y)
                    .collect();
                used[wit] = true;
                let dependent = !oracle.ci(&CiQuery::conditional(x, y, cond, iset.clone()))?;
                if dependent {
                    edges.push((y, x));
                }
            }
        }
    }

    let graph = DirectedGraph::from_edges(n, &edges)?;
    let stage2_used: Vec<VertexSet> = family
        .sets()
        .iter()
        .zip(&used)
        .filter(|(_, &u)| u)
        .map(|(s, _)| s.clone())
        .collect();
    let raw = stage1.experiments_used.len() + stage2_used.len();
    let mut distinct: BTreeSet<VertexSet> = stage2_used.into_iter().collect();
    distinct.extend(stage1.experiments_used.sets().iter().cloned());
    let max_size = distinct.iter().map(|s| s.len()).max().unwrap_or(0);
    Ok(LearnedGraph {
        graph,
        experiments_total: distinct.len(),
        experiments_raw: raw,
        max_experiment_size: max_size,
    })
}

/// Full pipeline without size constraints: skeleton, coloring, colored
/// family, stage one, leave-one-out family, stage two.
pub fn learn_unbounded(
    oracle: &mut dyn InterventionOracle,
    flavor: SeparationFlavor,
    hint: SkeletonHint,
) -> Result<LearnedGraph> {
    let stage1 = algorithm1(oracle, hint, flavor)?;
    let family = lifted_separating_system(&stage1.sccs);
    algorithm2(oracle, &stage1, &family)
}

/// Full pipeline with every experiment capped at `cfg.m` targets. Stage
/// one separates all ordered pairs with the alphabet construction over the
/// complete graph (no skeleton learning), stage two packs leave-one-out
/// blocks into capped bins. Errors once the discovered largest component
/// shows the cap is infeasible.
pub fn learn_bounded(
    oracle: &mut dyn InterventionOracle,
    cfg: &BoundedConfig,
) -> Result<LearnedGraph> {
    let n = oracle.n();
    let stage1_family = nm_separating_system(n, cfg.m)?;
    let complete = UndirectedGraph::complete(n);
    let stage1 = stage1_with_family(oracle, &complete, &stage1_family)?;
    let smax = stage1.sccs.smax();
    if cfg.m + 1 < smax {
        return Err(Error::InfeasibleBound {
            m: cfg.m,
            floor: smax - 1,
        });
    }
    let family = bounded_lifted_separating_system(&stage1.sccs, cfg, n)?;
    algorithm2(oracle, &stage1, &family)
}
