//! Graphical separation on directed graphs that may contain cycles.
//!
//! Two flavors are supported: classic d-separation, and the weaker σ
//! variant where a conditioned non-collider only blocks a path if the path
//! leaves the vertex's strongly connected component through it. On acyclic
//! graphs the two coincide. σ queries are answered by rewriting the graph
//! to a DAG with the same σ-separations and deciding d-separation there.

use rayon::prelude::*;
use std::collections::BTreeSet;

use crate::graph::{DirectedGraph, VertexId, VertexSet};
use crate::sepsys::ExperimentFamily;
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum SeparationFlavor {
    D,
    Sigma,
}

impl std::fmt::Display for SeparationFlavor {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            SeparationFlavor::D => write!(f, "d"),
            SeparationFlavor::Sigma => write!(f, "sigma"),
        }
    }
}

impl std::str::FromStr for SeparationFlavor {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "d" => Ok(SeparationFlavor::D),
            "sigma" => Ok(SeparationFlavor::Sigma),
            other => Err(Error::InvalidInput(format!(
                "unknown separation flavor {other:?}, expected \"d\" or \"sigma\""
            ))),
        }
    }
}

/// Checks query well-formedness: endpoints distinct and in range, the
/// conditioning list strictly ascending and disjoint from the endpoints.
fn validate_query(
    g: &DirectedGraph,
    x: VertexId,
    y: VertexId,
    cond: &[VertexId],
) -> Result<VertexSet> {
    let n = g.n();
    if x >= n || y >= n {
        return Err(Error::InvalidQuery(format!(
            "endpoint out of range for n = {n}"
        )));
    }
    if x == y {
        return Err(Error::InvalidQuery(format!("x = y = {x}")));
    }
    let mut prev: Option<VertexId> = None;
    for &w in cond {
        if w >= n {
            return Err(Error::InvalidQuery(format!(
                "conditioning vertex {w} out of range for n = {n}"
            )));
        }
        if let Some(p) = prev {
            if w <= p {
                return Err(Error::InvalidQuery(
                    "conditioning set must be strictly ascending".into(),
                ));
            }
        }
        if w == x || w == y {
            return Err(Error::InvalidQuery(format!(
                "conditioning set contains endpoint {w}"
            )));
        }
        prev = Some(w);
    }
    Ok(cond.iter().copied().collect())
}

/// Open-walk search over (vertex, arrival) states. Arrival records whether
/// the last edge pointed into the vertex; together with the conditioning
/// set and the ancestors of it, that determines which moves stay open.
fn d_connected(g: &DirectedGraph, x: VertexId, y: VertexId, s: &VertexSet) -> bool {
    let anc_s = g.ancestors_of_set(s);
    let mut seen = vec![[false; 2]; g.n()];
    let mut stack: Vec<(VertexId, bool)> = Vec::new();
    let push = |stack: &mut Vec<(VertexId, bool)>,
                    seen: &mut Vec<[bool; 2]>,
                    v: VertexId,
                    head: bool| {
        if !seen[v][head as usize] {
            seen[v][head as usize] = true;
            stack.push((v, head));
        }
    };
    for &w in g.children(x) {
        push(&mut stack, &mut seen, w, true);
    }
    for &w in g.parents(x) {
        push(&mut stack, &mut seen, w, false);
    }
    while let Some((v, head)) = stack.pop() {
        if v == y {
            return true;
        }
        let conditioned = s.contains(&v);
        if head {
            // Arrived along an edge into v: passing through makes v a
            // chain (blocked when conditioned), turning back makes it a
            // collider (open only when v is an ancestor of the set).
            if !conditioned {
                for &w in g.children(v) {
                    push(&mut stack, &mut seen, w, true);
                }
            }
            if anc_s.contains(&v) {
                for &w in g.parents(v) {
                    push(&mut stack, &mut seen, w, false);
                }
            }
        } else if !conditioned {
            for &w in g.children(v) {
                push(&mut stack, &mut seen, w, true);
            }
            for &w in g.parents(v) {
                push(&mut stack, &mut seen, w, false);
            }
        }
    }
    false
}

pub fn d_separated(g: &DirectedGraph, x: VertexId, y: VertexId, cond: &[VertexId]) -> Result<bool> {
    let s = validate_query(g, x, y, cond)?;
    Ok(!d_connected(g, x, y, &s))
}

pub fn sigma_separated(
    g: &DirectedGraph,
    x: VertexId,
    y: VertexId,
    cond: &[VertexId],
) -> Result<bool> {
    let s = validate_query(g, x, y, cond)?;
    Ok(!d_connected(&g.sigma_acyclify(), x, y, &s))
}

pub fn r_separated(
    g: &DirectedGraph,
    x: VertexId,
    y: VertexId,
    cond: &[VertexId],
    flavor: SeparationFlavor,
) -> Result<bool> {
    match flavor {
        SeparationFlavor::D => d_separated(g, x, y, cond),
        SeparationFlavor::Sigma => sigma_separated(g, x, y, cond),
    }
}

const SEPARABILITY_SCAN_MAX: usize = 25;
const ENUMERATION_MAX: usize = 12;

/// Whether any conditioning set separates the pair. Exhaustive over the
/// 2^(n−2) candidate sets, so guarded to small graphs.
pub fn r_separable(
    g: &DirectedGraph,
    x: VertexId,
    y: VertexId,
    flavor: SeparationFlavor,
) -> Result<bool> {
    if g.n() > SEPARABILITY_SCAN_MAX {
        return Err(Error::CapacityExceeded {
            what: "separability scan",
            n: g.n(),
            max: SEPARABILITY_SCAN_MAX,
        });
    }
    validate_query(g, x, y, &[])?;
    let work = match flavor {
        SeparationFlavor::D => g.clone(),
        SeparationFlavor::Sigma => g.sigma_acyclify(),
    };
    let others: Vec<VertexId> = (0..g.n()).filter(|&v| v != x && v != y).collect();
    for mask in 0u64..(1u64 << others.len()) {
        let s: VertexSet = others
            .iter()
            .enumerate()
            .filter(|(i, _)| mask >> i & 1 == 1)
            .map(|(_, &v)| v)
            .collect();
        if !d_connected(&work, x, y, &s) {
            return Ok(true);
        }
    }
    Ok(false)
}

/// All separations of a graph: the triples (x, y, s) with x < y and
/// s ⊆ V∖{x,y} whose endpoints the flavor separates.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IndependenceModel {
    triples: BTreeSet<(VertexId, VertexId, VertexSet)>,
}

impl IndependenceModel {
    pub fn contains(&self, x: VertexId, y: VertexId, s: &VertexSet) -> bool {
        self.triples
            .contains(&(x.min(y), x.max(y), s.clone()))
    }

    pub fn len(&self) -> usize {
        self.triples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.triples.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &(VertexId, VertexId, VertexSet)> {
        self.triples.iter()
    }
}

/// Exhaustive separation enumeration; exponential, guarded to n ≤ 12.
pub fn independence_model(
    g: &DirectedGraph,
    flavor: SeparationFlavor,
) -> Result<IndependenceModel> {
    let n = g.n();
    if n > ENUMERATION_MAX {
        return Err(Error::CapacityExceeded {
            what: "independence model enumeration",
            n,
            max: ENUMERATION_MAX,
        });
    }
    let work = match flavor {
        SeparationFlavor::D => g.clone(),
        SeparationFlavor::Sigma => g.sigma_acyclify(),
    };
    let pairs: Vec<(VertexId, VertexId)> = (0..n)
        .flat_map(|x| (x + 1..n).map(move |y| (x, y)))
        .collect();
    let per_pair: Vec<Vec<(VertexId, VertexId, VertexSet)>> = pairs
        .par_iter()
        .map(|&(x, y)| {
            let others: Vec<VertexId> = (0..n).filter(|&v| v != x && v != y).collect();
            let mut found = Vec::new();
            for mask in 0u64..(1u64 << others.len()) {
                let s: VertexSet = others
                    .iter()
                    .enumerate()
                    .filter(|(i, _)| mask >> i & 1 == 1)
                    .map(|(_, &v)| v)
                    .collect();
                if !d_connected(&work, x, y, &s) {
                    found.push((x, y, s));
                }
            }
            found
        })
        .collect();
    Ok(IndependenceModel {
        triples: per_pair.into_iter().flatten().collect(),
    })
}

/// Whether two graphs have identical separations under every intervention
/// in the family. The empty intervention participates only if the family
/// contains it.
pub fn i_r_markov_equivalent(
    g1: &DirectedGraph,
    g2: &DirectedGraph,
    experiments: &ExperimentFamily,
    flavor: SeparationFlavor,
) -> Result<bool> {
    if g1.n() != g2.n() {
        return Err(Error::VertexSetMismatch(g1.n(), g2.n()));
    }
    for i in experiments.sets() {
        if i.iter().any(|&v| v >= g1.n()) {
            return Err(Error::InvalidInput(format!(
                "intervention {i:?} out of range for n = {}",
                g1.n()
            )));
        }
        let im1 = independence_model(&g1.mutilate(i), flavor)?;
        let im2 = independence_model(&g2.mutilate(i), flavor)?;
        if im1 != im2 {
            return Ok(false);
        }
    }
    Ok(true)
}
