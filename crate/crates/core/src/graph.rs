//! Directed and undirected graph types with the reachability, component,
//! and observable-skeleton operations the rest of the crate builds on.

use std::collections::BTreeSet;

use crate::{Error, Result};

pub type VertexId = usize;
pub type VertexSet = BTreeSet<VertexId>;

/// Directed graph over dense vertex ids `0..n`. No self-loops; both
/// directions of a pair may be present. Immutable after construction.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DirectedGraph {
    n: usize,
    out: Vec<Vec<VertexId>>,
    inn: Vec<Vec<VertexId>>,
    edges: BTreeSet<(VertexId, VertexId)>,
}

impl DirectedGraph {
    pub fn new(n: usize) -> Self {
        DirectedGraph {
            n,
            out: vec![Vec::new(); n],
            inn: vec![Vec::new(); n],
            edges: BTreeSet::new(),
        }
    }

    pub fn from_edges(n: usize, edges: &[(VertexId, VertexId)]) -> Result<Self> {
        let mut set = BTreeSet::new();
        for &(u, v) in edges {
            if u >= n || v >= n {
                return Err(Error::InvalidInput(format!(
                    "edge ({u}, {v}) out of range for n = {n}"
                )));
            }
            if u == v {
                return Err(Error::InvalidInput(format!("self-loop on vertex {u}")));
            }
            set.insert((u, v));
        }
        let mut g = DirectedGraph::new(n);
        for &(u, v) in &set {
            g.out[u].push(v);
            g.inn[v].push(u);
        }
        g.edges = set;
        Ok(g)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn has_edge(&self, u: VertexId, v: VertexId) -> bool {
        self.edges.contains(&(u, v))
    }

    pub fn edges(&self) -> impl Iterator<Item = (VertexId, VertexId)> + '_ {
        self.edges.iter().copied()
    }

    pub fn children(&self, v: VertexId) -> &[VertexId] {
        &self.out[v]
    }

    pub fn parents(&self, v: VertexId) -> &[VertexId] {
        &self.inn[v]
    }

    /// Removes one directed edge; used by the adversarial constructions.
    pub fn without_edge(&self, u: VertexId, v: VertexId) -> Self {
        let edges: Vec<_> = self.edges().filter(|&e| e != (u, v)).collect();
        DirectedGraph::from_edges(self.n, &edges).expect("edges already validated")
    }

    /// Hard intervention on `i`: drops every edge pointing into `i`.
    pub fn mutilate(&self, i: &VertexSet) -> Self {
        assert!(i.iter().all(|&v| v < self.n), "intervention out of range");
        let edges: Vec<_> = self.edges().filter(|&(_, v)| !i.contains(&v)).collect();
        DirectedGraph::from_edges(self.n, &edges).expect("edges already validated")
    }

    /// All vertices reachable from `x` by a directed path, including `x`.
    pub fn descendants(&self, x: VertexId) -> VertexSet {
        self.reach(x, |g, v| &g.out[v])
    }

    /// All vertices that reach `x` by a directed path, including `x`.
    pub fn ancestors(&self, x: VertexId) -> VertexSet {
        self.reach(x, |g, v| &g.inn[v])
    }

    /// Vertices with a directed path into any member of `s`, including `s`.
    pub fn ancestors_of_set(&self, s: &VertexSet) -> VertexSet {
        let mut seen: VertexSet = s.clone();
        let mut stack: Vec<VertexId> = s.iter().copied().collect();
        while let Some(v) = stack.pop() {
            for &p in &self.inn[v] {
                if seen.insert(p) {
                    stack.push(p);
                }
            }
        }
        seen
    }

    fn reach(&self, x: VertexId, step: impl Fn(&Self, VertexId) -> &[VertexId]) -> VertexSet {
        assert!(x < self.n, "vertex out of range");
        let mut seen = VertexSet::new();
        seen.insert(x);
        let mut stack = vec![x];
        while let Some(v) = stack.pop() {
            for &w in step(self, v) {
                if seen.insert(w) {
                    stack.push(w);
                }
            }
        }
        seen
    }

    /// Underlying undirected adjacency.
    pub fn skeleton(&self) -> UndirectedGraph {
        let pairs: Vec<_> = self
            .edges()
            .map(|(u, v)| if u < v { (u, v) } else { (v, u) })
            .collect();
        UndirectedGraph::from_edges(self.n, &pairs).expect("edges already validated")
    }

    /// Non-adjacent pairs sharing a child that is an ancestor of either
    /// endpoint. Such pairs cannot be separated by any conditioning set.
    pub fn virtual_edges(&self) -> BTreeSet<(VertexId, VertexId)> {
        let anc: Vec<VertexSet> = (0..self.n).map(|v| self.ancestors(v)).collect();
        let mut out = BTreeSet::new();
        for x in 0..self.n {
            for z in x + 1..self.n {
                if self.has_edge(x, z) || self.has_edge(z, x) {
                    continue;
                }
                let common_child_is_ancestor = self.out[x]
                    .iter()
                    .filter(|c| self.out[z].binary_search(c).is_ok())
                    .any(|c| anc[x].contains(c) || anc[z].contains(c));
                if common_child_is_ancestor {
                    out.insert((x, z));
                }
            }
        }
        out
    }

    /// Densest skeleton recoverable from observational independences when
    /// they match d-separation: skeleton plus virtual edges.
    pub fn observable_skeleton_d(&self) -> UndirectedGraph {
        let mut pairs: Vec<(VertexId, VertexId)> = self
            .edges()
            .map(|(u, v)| if u < v { (u, v) } else { (v, u) })
            .collect();
        pairs.extend(self.virtual_edges());
        UndirectedGraph::from_edges(self.n, &pairs).expect("edges already validated")
    }

    /// Strongly connected components, members ascending, components ordered
    /// by smallest member.
    pub fn scc_partition(&self) -> SccPartition {
        tarjan(self)
    }

    pub fn is_dag(&self) -> bool {
        self.scc_partition().smax() <= 1
    }

    /// DAG with the same σ-separations: cross-component edge (x, y) whenever
    /// x points anywhere into y's component, components internally ordered
    /// ascending by vertex index.
    pub fn sigma_acyclify(&self) -> DirectedGraph {
        let sccs = self.scc_partition();
        let mut edges = Vec::new();
        for comp in sccs.components() {
            for (a, &x) in comp.iter().enumerate() {
                for &y in &comp[a + 1..] {
                    edges.push((x, y));
                }
            }
        }
        let mut points_into = vec![BTreeSet::new(); self.n];
        for (u, v) in self.edges() {
            if sccs.component_of(u) != sccs.component_of(v) {
                points_into[u].insert(sccs.component_of(v));
            }
        }
        for x in 0..self.n {
            for &c in &points_into[x] {
                for &y in sccs.component(c) {
                    edges.push((x, y));
                }
            }
        }
        DirectedGraph::from_edges(self.n, &edges).expect("edges already validated")
    }

    /// Densest skeleton recoverable when observational independences match
    /// σ-separation: same-component pairs, plus any pair where one endpoint
    /// points into the other's component. Equals the skeleton of
    /// [`sigma_acyclify`](Self::sigma_acyclify).
    pub fn observable_skeleton_sigma(&self) -> UndirectedGraph {
        let sccs = self.scc_partition();
        let mut points_into = vec![BTreeSet::new(); self.n];
        for (u, v) in self.edges() {
            points_into[u].insert(sccs.component_of(v));
        }
        let mut pairs = Vec::new();
        for x in 0..self.n {
            for y in x + 1..self.n {
                let linked = sccs.component_of(x) == sccs.component_of(y)
                    || points_into[x].contains(&sccs.component_of(y))
                    || points_into[y].contains(&sccs.component_of(x));
                if linked {
                    pairs.push((x, y));
                }
            }
        }
        UndirectedGraph::from_edges(self.n, &pairs).expect("edges already validated")
    }
}

/// Undirected graph over dense vertex ids `0..n`; edges stored with the
/// smaller endpoint first.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct UndirectedGraph {
    n: usize,
    adj: Vec<Vec<VertexId>>,
    edges: BTreeSet<(VertexId, VertexId)>,
}

impl UndirectedGraph {
    pub fn from_edges(n: usize, edges: &[(VertexId, VertexId)]) -> Result<Self> {
        let mut set = BTreeSet::new();
        for &(u, v) in edges {
            if u >= n || v >= n {
                return Err(Error::InvalidInput(format!(
                    "edge ({u}, {v}) out of range for n = {n}"
                )));
            }
            if u == v {
                return Err(Error::InvalidInput(format!("self-loop on vertex {u}")));
            }
            set.insert((u.min(v), u.max(v)));
        }
        let mut adj = vec![Vec::new(); n];
        for &(u, v) in &set {
            adj[u].push(v);
            adj[v].push(u);
        }
        for list in &mut adj {
            list.sort_unstable();
        }
        Ok(UndirectedGraph { n, adj, edges: set })
    }

    pub fn complete(n: usize) -> Self {
        let mut pairs = Vec::new();
        for u in 0..n {
            for v in u + 1..n {
                pairs.push((u, v));
            }
        }
        UndirectedGraph::from_edges(n, &pairs).expect("complete graph is valid")
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn has_edge(&self, u: VertexId, v: VertexId) -> bool {
        self.edges.contains(&(u.min(v), u.max(v)))
    }

    pub fn edges(&self) -> impl Iterator<Item = (VertexId, VertexId)> + '_ {
        self.edges.iter().copied()
    }

    pub fn neighbors(&self, v: VertexId) -> &[VertexId] {
        &self.adj[v]
    }

    pub fn degree(&self, v: VertexId) -> usize {
        self.adj[v].len()
    }

    pub fn is_supergraph_of(&self, other: &UndirectedGraph) -> bool {
        self.n == other.n && other.edges.is_subset(&self.edges)
    }
}

/// Partition of the vertices into strongly connected components.
/// Component members ascend; components are ordered by smallest member.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SccPartition {
    components: Vec<Vec<VertexId>>,
    component_of: Vec<usize>,
    smax: usize,
}

impl SccPartition {
    pub fn from_components(n: usize, mut components: Vec<Vec<VertexId>>) -> Result<Self> {
        let mut seen = vec![false; n];
        for comp in &mut components {
            if comp.is_empty() {
                return Err(Error::InvalidInput("empty component".into()));
            }
            comp.sort_unstable();
            for &v in comp.iter() {
                if v >= n {
                    return Err(Error::InvalidInput(format!(
                        "vertex {v} out of range for n = {n}"
                    )));
                }
                if seen[v] {
                    return Err(Error::InvalidInput(format!(
                        "vertex {v} in two components"
                    )));
                }
                seen[v] = true;
            }
        }
        if seen.iter().any(|&s| !s) {
            return Err(Error::InvalidInput("components do not cover V".into()));
        }
        components.sort_by_key(|c| c[0]);
        let mut component_of = vec![0; n];
        for (i, comp) in components.iter().enumerate() {
            for &v in comp {
                component_of[v] = i;
            }
        }
        let smax = components.iter().map(Vec::len).max().unwrap_or(0);
        Ok(SccPartition {
            components,
            component_of,
            smax,
        })
    }

    pub fn k(&self) -> usize {
        self.components.len()
    }

    pub fn components(&self) -> &[Vec<VertexId>] {
        &self.components
    }

    pub fn component(&self, i: usize) -> &[VertexId] {
        &self.components[i]
    }

    pub fn component_of(&self, v: VertexId) -> usize {
        self.component_of[v]
    }

    pub fn same_component(&self, u: VertexId, v: VertexId) -> bool {
        self.component_of[u] == self.component_of[v]
    }

    pub fn smax(&self) -> usize {
        self.smax
    }

    pub fn n(&self) -> usize {
        self.component_of.len()
    }
}

/// Iterative Tarjan; explicit stack so deep cycles cannot overflow.
fn tarjan(g: &DirectedGraph) -> SccPartition {
    const UNSET: usize = usize::MAX;
    let n = g.n();
    let mut index = vec![UNSET; n];
    let mut low = vec![0usize; n];
    let mut on_stack = vec![false; n];
    let mut stack: Vec<VertexId> = Vec::new();
    let mut next_index = 0usize;
    let mut components: Vec<Vec<VertexId>> = Vec::new();
    // (vertex, next child position) frames of the simulated recursion.
    let mut frames: Vec<(VertexId, usize)> = Vec::new();

    for root in 0..n {
        if index[root] != UNSET {
            continue;
        }
        frames.push((root, 0));
        index[root] = next_index;
        low[root] = next_index;
        next_index += 1;
        stack.push(root);
        on_stack[root] = true;

        while let Some(&mut (v, ref mut pos)) = frames.last_mut() {
            if let Some(&w) = g.children(v).get(*pos) {
                *pos += 1;
                if index[w] == UNSET {
                    index[w] = next_index;
                    low[w] = next_index;
                    next_index += 1;
                    stack.push(w);
                    on_stack[w] = true;
                    frames.push((w, 0));
                } else if on_stack[w] {
                    low[v] = low[v].min(index[w]);
                }
            } else {
                frames.pop();
                if let Some(&mut (parent, _)) = frames.last_mut() {
                    low[parent] = low[parent].min(low[v]);
                }
                if low[v] == index[v] {
                    let mut comp = Vec::new();
                    loop {
                        let w = stack.pop().expect("tarjan stack underflow");
                        on_stack[w] = false;
                        comp.push(w);
                        if w == v {
                            break;
                        }
                    }
                    components.push(comp);
                }
            }
        }
    }

    SccPartition::from_components(n, components).expect("tarjan yields a valid partition")
}

/// Proper vertex coloring with colors `1..=chi`, every color used.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Coloring {
    color: Vec<usize>,
    chi: usize,
}

impl Coloring {
    pub fn new(color: Vec<usize>) -> Result<Self> {
        let chi = color.iter().copied().max().unwrap_or(0);
        if color.iter().any(|&c| c == 0) {
            return Err(Error::InvalidInput("colors must start at 1".into()));
        }
        let mut used = vec![false; chi + 1];
        for &c in &color {
            used[c] = true;
        }
        if (1..=chi).any(|c| !used[c]) {
            return Err(Error::InvalidInput(format!(
                "colors 1..={chi} must all be used"
            )));
        }
        Ok(Coloring { color, chi })
    }

    pub fn color_of(&self, v: VertexId) -> usize {
        self.color[v]
    }

    pub fn colors(&self) -> &[usize] {
        &self.color
    }

    pub fn chi(&self) -> usize {
        self.chi
    }

    pub fn n(&self) -> usize {
        self.color.len()
    }

    pub fn is_proper_for(&self, g: &UndirectedGraph) -> bool {
        self.color.len() == g.n() && g.edges().all(|(u, v)| self.color[u] != self.color[v])
    }
}

/// First-fit coloring in descending-degree order (ties by index).
pub fn greedy_coloring(g: &UndirectedGraph) -> Coloring {
    let n = g.n();
    let mut order: Vec<VertexId> = (0..n).collect();
    order.sort_by_key(|&v| (std::cmp::Reverse(g.degree(v)), v));
    let mut color = vec![0usize; n];
    for &v in &order {
        let taken: BTreeSet<usize> = g
            .neighbors(v)
            .iter()
            .map(|&w| color[w])
            .filter(|&c| c != 0)
            .collect();
        let mut c = 1;
        while taken.contains(&c) {
            c += 1;
        }
        color[v] = c;
    }
    Coloring::new(color).expect("first-fit emits contiguous colors")
}
