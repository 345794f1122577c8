//! Shared fixtures and independent reference implementations used to
//! cross-check the library. Everything here is deliberately naive: path
//! enumeration instead of reachability states, mutual reachability instead
//! of Tarjan. Slow but obviously correct on small inputs.

#![allow(dead_code)]

use std::collections::BTreeSet;

use intervene::graph::{DirectedGraph, VertexId, VertexSet};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn vset(vs: &[VertexId]) -> VertexSet {
    vs.iter().copied().collect()
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

// ---------------------------------------------------------------------------
// Reference separation deciders (path enumeration).

#[derive(Clone, Copy, PartialEq, Eq)]
enum Dir {
    Fwd,
    Bwd,
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Flavor {
    D,
    Sigma,
}

pub fn d_separated_by_paths(g: &DirectedGraph, x: VertexId, y: VertexId, s: &VertexSet) -> bool {
    !exists_open_path(g, x, y, s, Flavor::D)
}

pub fn sigma_separated_by_paths(
    g: &DirectedGraph,
    x: VertexId,
    y: VertexId,
    s: &VertexSet,
) -> bool {
    !exists_open_path(g, x, y, s, Flavor::Sigma)
}

fn reach_fwd(g: &DirectedGraph, x: VertexId) -> VertexSet {
    let mut seen = vset(&[x]);
    let mut stack = vec![x];
    while let Some(v) = stack.pop() {
        for &w in g.children(v) {
            if seen.insert(w) {
                stack.push(w);
            }
        }
    }
    seen
}

fn anc_of_set(g: &DirectedGraph, s: &VertexSet) -> VertexSet {
    let mut seen = s.clone();
    let mut stack: Vec<VertexId> = s.iter().copied().collect();
    while let Some(v) = stack.pop() {
        for &p in g.parents(v) {
            if seen.insert(p) {
                stack.push(p);
            }
        }
    }
    seen
}

/// Mutual-reachability component ids, independent of the library's Tarjan.
pub fn brute_scc_ids(g: &DirectedGraph) -> Vec<usize> {
    let reach: Vec<VertexSet> = (0..g.n()).map(|v| reach_fwd(g, v)).collect();
    let mut id = vec![usize::MAX; g.n()];
    let mut next = 0;
    for v in 0..g.n() {
        if id[v] != usize::MAX {
            continue;
        }
        for w in v..g.n() {
            if reach[v].contains(&w) && reach[w].contains(&v) {
                id[w] = next;
            }
        }
        next += 1;
    }
    id
}

/// DFS over simple paths from `x` to `y`; prunes as soon as an interior
/// vertex is blocked, so reaching `y` means an open path exists.
fn exists_open_path(
    g: &DirectedGraph,
    x: VertexId,
    y: VertexId,
    s: &VertexSet,
    flavor: Flavor,
) -> bool {
    assert!(x != y && !s.contains(&x) && !s.contains(&y));
    let anc_s = anc_of_set(g, s);
    let scc = brute_scc_ids(g);
    let mut visited = vec![false; g.n()];
    visited[x] = true;

    // Step alternatives out of `v`: (next vertex, orientation of the step).
    let steps = |v: VertexId| -> Vec<(VertexId, Dir)> {
        let mut out: Vec<(VertexId, Dir)> = Vec::new();
        for &w in g.children(v) {
            out.push((w, Dir::Fwd));
        }
        for &w in g.parents(v) {
            out.push((w, Dir::Bwd));
        }
        out
    };

    fn interior_open(
        v: VertexId,
        into: Dir,
        out: Dir,
        prev: VertexId,
        next: VertexId,
        s: &VertexSet,
        anc_s: &VertexSet,
        scc: &[usize],
        flavor: Flavor,
    ) -> bool {
        let collider = into == Dir::Fwd && out == Dir::Bwd;
        if collider {
            return anc_s.contains(&v);
        }
        if !s.contains(&v) {
            return true;
        }
        match flavor {
            Flavor::D => false,
            Flavor::Sigma => {
                // Conditioned non-collider stays open only if every path
                // edge leaving it stays inside its own component.
                let mut targets = Vec::new();
                if into == Dir::Bwd {
                    targets.push(prev);
                }
                if out == Dir::Fwd {
                    targets.push(next);
                }
                targets.iter().all(|&t| scc[t] == scc[v])
            }
        }
    }

    fn dfs(
        g: &DirectedGraph,
        v: VertexId,
        into: Option<Dir>,
        y: VertexId,
        prev: VertexId,
        visited: &mut Vec<bool>,
        s: &VertexSet,
        anc_s: &VertexSet,
        scc: &[usize],
        flavor: Flavor,
        steps: &dyn Fn(VertexId) -> Vec<(VertexId, Dir)>,
    ) -> bool {
        if v == y {
            return true;
        }
        for (w, dir) in steps(v) {
            if visited[w] {
                continue;
            }
            if let Some(into) = into {
                if !interior_open(v, into, dir, prev, w, s, anc_s, scc, flavor) {
                    continue;
                }
            }
            visited[w] = true;
            if dfs(g, w, Some(dir), y, v, visited, s, anc_s, scc, flavor, steps) {
                return true;
            }
            visited[w] = false;
        }
        false
    }

    dfs(
        g, x, None, y, usize::MAX, &mut visited, s, &anc_s, &scc, flavor, &steps,
    )
}

// ---------------------------------------------------------------------------
// Random inputs.

pub fn random_dg(rng: &mut ChaCha8Rng, n: usize, p: f64) -> DirectedGraph {
    let mut edges = Vec::new();
    for u in 0..n {
        for v in 0..n {
            if u != v && rng.gen_bool(p) {
                edges.push((u, v));
            }
        }
    }
    DirectedGraph::from_edges(n, &edges).unwrap()
}

pub fn random_dag(rng: &mut ChaCha8Rng, n: usize, p: f64) -> DirectedGraph {
    let mut order: Vec<VertexId> = (0..n).collect();
    for i in (1..n).rev() {
        order.swap(i, rng.gen_range(0..=i));
    }
    let mut edges = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            if rng.gen_bool(p) {
                edges.push((order[i], order[j]));
            }
        }
    }
    DirectedGraph::from_edges(n, &edges).unwrap()
}

pub fn random_subset(rng: &mut ChaCha8Rng, n: usize, p: f64) -> VertexSet {
    (0..n).filter(|_| rng.gen_bool(p)).collect()
}

/// Family of distinct intervention sets, always containing the empty set.
pub fn random_family(rng: &mut ChaCha8Rng, n: usize, k: usize, p: f64) -> Vec<VertexSet> {
    let mut sets: BTreeSet<VertexSet> = BTreeSet::new();
    sets.insert(VertexSet::new());
    while sets.len() < k {
        sets.insert(random_subset(rng, n, p));
    }
    sets.into_iter().collect()
}

pub fn subsets(pool: &[VertexId]) -> Vec<VertexSet> {
    let mut out = Vec::with_capacity(1 << pool.len());
    for mask in 0u32..(1 << pool.len()) {
        out.push(
            pool.iter()
                .enumerate()
                .filter(|(i, _)| mask >> i & 1 == 1)
                .map(|(_, &v)| v)
                .collect(),
        );
    }
    out
}

// ---------------------------------------------------------------------------
// Fixtures.

/// Chain 0 → 1 → 2 → 3 with back edge 3 → 1.
pub fn chain_with_back_edge() -> DirectedGraph {
    DirectedGraph::from_edges(4, &[(0, 1), (3, 1), (1, 2), (2, 3)]).unwrap()
}

/// Root 0 feeding the cycle 1 → 2 → 3 → 4 → 1.
pub fn rooted_four_cycle() -> DirectedGraph {
    DirectedGraph::from_edges(5, &[(0, 1), (1, 2), (2, 3), (3, 4), (4, 1)]).unwrap()
}

/// Three 4-cycles in layers (vertices 0..4, 4..8, 8..12) linked by six
/// cross edges; the running example for the two-stage learner.
pub fn three_linked_four_cycles() -> DirectedGraph {
    let mut edges = vec![];
    for base in [0, 4, 8] {
        for i in 0..4 {
            edges.push((base + i, base + (i + 1) % 4));
        }
    }
    edges.extend([(1, 5), (2, 6), (3, 7), (4, 8), (5, 9), (7, 11)]);
    DirectedGraph::from_edges(12, &edges).unwrap()
}

/// Inseparable non-adjacent pairs of [`three_linked_four_cycles`].
pub fn three_linked_four_cycles_virtual() -> BTreeSet<(VertexId, VertexId)> {
    [(1, 4), (2, 5), (3, 6), (4, 11), (5, 8), (7, 10)]
        .into_iter()
        .collect()
}

/// Expected stage-one output on [`three_linked_four_cycles`]: each vertex
/// points at every descendant it is adjacent to in the observable skeleton.
pub fn three_linked_four_cycles_stage1() -> DirectedGraph {
    let edges = [
        (0, 1),
        (0, 3),
        (1, 0),
        (1, 2),
        (1, 4),
        (1, 5),
        (2, 1),
        (2, 3),
        (2, 5),
        (2, 6),
        (3, 0),
        (3, 2),
        (3, 6),
        (3, 7),
        (4, 5),
        (4, 7),
        (4, 8),
        (4, 11),
        (5, 4),
        (5, 6),
        (5, 8),
        (5, 9),
        (6, 5),
        (6, 7),
        (7, 4),
        (7, 6),
        (7, 10),
        (7, 11),
        (8, 9),
        (8, 11),
        (9, 8),
        (9, 10),
        (10, 9),
        (10, 11),
        (11, 8),
        (11, 10),
    ];
    DirectedGraph::from_edges(12, &edges).unwrap()
}

/// A proper 4-coloring of the dense observable skeleton of
/// [`three_linked_four_cycles`], pinned so set outputs are reproducible.
pub fn three_linked_four_cycles_coloring() -> Vec<usize> {
    vec![2, 1, 2, 1, 3, 4, 3, 4, 2, 1, 2, 1]
}

/// The four intervention sets the pinned coloring induces (two index bits,
/// one set per bit value), as unordered collection.
pub fn three_linked_four_cycles_colored_sets() -> BTreeSet<VertexSet> {
    [
        vset(&[1, 3, 4, 6, 9, 11]),
        vset(&[0, 2, 5, 7, 8, 10]),
        vset(&[0, 2, 4, 6, 8, 10]),
        vset(&[1, 3, 5, 7, 9, 11]),
    ]
    .into_iter()
    .collect()
}

/// Component-wise leave-one-out sets for [`three_linked_four_cycles`],
/// in emission order.
pub fn three_linked_four_cycles_lifted_sets() -> Vec<VertexSet> {
    vec![
        vset(&[1, 2, 3, 5, 6, 7, 9, 10, 11]),
        vset(&[0, 2, 3, 4, 6, 7, 8, 10, 11]),
        vset(&[0, 1, 3, 4, 5, 7, 8, 9, 11]),
        vset(&[0, 1, 2, 4, 5, 6, 8, 9, 10]),
    ]
}

/// Four graphs on {0,1,2} that no family of single-vertex interventions
/// can tell apart, together with that family.
pub fn three_vertex_indistinguishable_family() -> (Vec<DirectedGraph>, Vec<VertexSet>) {
    let g1 = DirectedGraph::from_edges(3, &[(0, 1), (1, 0), (0, 2), (2, 0), (1, 2), (2, 1)]);
    let g2 = DirectedGraph::from_edges(3, &[(0, 2), (2, 0), (2, 1), (1, 2), (0, 1)]);
    let g3 = DirectedGraph::from_edges(3, &[(0, 2), (2, 0), (2, 1), (1, 2), (1, 0)]);
    let g4 = DirectedGraph::from_edges(3, &[(0, 2), (2, 0), (0, 1), (1, 0), (1, 2)]);
    let graphs = vec![g1.unwrap(), g2.unwrap(), g3.unwrap(), g4.unwrap()];
    let family = vec![vset(&[]), vset(&[0]), vset(&[1]), vset(&[2])];
    (graphs, family)
}
