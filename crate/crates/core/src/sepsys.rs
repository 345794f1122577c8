//! Separating-system constructors: families of intervention targets that
//! guarantee enough ordered pairs can be told apart to recover structure.
//!
//! Four flavors: color-based (two sets per color-index bit), size-bounded
//! alphabet labelings, component-wise leave-one-out, and the size-bounded
//! variant of the latter built by first-fit bin packing.

use serde::{Deserialize, Serialize};

use crate::graph::{Coloring, SccPartition, VertexId, VertexSet};
use crate::{Error, Result};

/// Which constructor produced a family; external files carry no provenance.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Provenance {
    Colored,
    Nm,
    Lifted,
    BoundedLifted,
    #[default]
    External,
}

/// Ordered list of intervention target sets.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExperimentFamily {
    sets: Vec<VertexSet>,
    #[serde(skip)]
    provenance: Provenance,
}

impl ExperimentFamily {
    /// Wraps externally supplied sets verbatim (no dedup).
    pub fn from_sets(sets: Vec<VertexSet>) -> Self {
        ExperimentFamily {
            sets,
            provenance: Provenance::External,
        }
    }

    fn constructed(sets: Vec<VertexSet>, provenance: Provenance) -> Self {
        ExperimentFamily {
            sets: dedup_preserving_order(sets),
            provenance,
        }
    }

    pub fn sets(&self) -> &[VertexSet] {
        &self.sets
    }

    pub fn provenance(&self) -> Provenance {
        self.provenance
    }

    pub fn len(&self) -> usize {
        self.sets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sets.is_empty()
    }

    pub fn max_set_size(&self) -> usize {
        self.sets.iter().map(|s| s.len()).max().unwrap_or(0)
    }
}

fn dedup_preserving_order(sets: Vec<VertexSet>) -> Vec<VertexSet> {
    let mut seen = std::collections::BTreeSet::new();
    sets.into_iter().filter(|s| seen.insert(s.clone())).collect()
}

/// Smallest l with 2^l ≥ x (0 for x ≤ 1).
pub fn ceil_log2(x: usize) -> usize {
    if x <= 1 {
        0
    } else {
        (usize::BITS - (x - 1).leading_zeros()) as usize
    }
}

/// Bound size for the size-bounded leave-one-out construction:
/// smax·(1 + ⌊(n − smax − 1)/(m − smax + 2)⌋).
pub fn bounded_family_limit(n: usize, smax: usize, m: usize) -> usize {
    smax * (1 + packing_bins(n, smax, m).saturating_sub(1))
}

/// Bins available per member index: t + 1 with t clamped at 0.
fn packing_bins(n: usize, smax: usize, m: usize) -> usize {
    debug_assert!(m + 1 >= smax);
    let denom = m + 2 - smax;
    let t = if n > smax { (n - smax - 1) / denom } else { 0 };
    t + 1
}

/// One pair of sets per bit of the color index: vertices whose color has
/// the bit set, and the complementary color classes. Every ordered pair of
/// differently colored vertices lands in some set without the other.
pub fn colored_separating_system(coloring: &Coloring) -> Result<ExperimentFamily> {
    let chi = coloring.chi();
    let l = ceil_log2(chi);
    let mut sets = Vec::with_capacity(2 * l);
    for bit in 0..l {
        let in_side: VertexSet = (0..coloring.n())
            .filter(|&v| coloring.color_of(v) >> bit & 1 == 1)
            .collect();
        let out_side: VertexSet = (0..coloring.n())
            .filter(|&v| coloring.color_of(v) >> bit & 1 == 0)
            .collect();
        sets.push(in_side);
        sets.push(out_side);
    }
    Ok(ExperimentFamily::constructed(sets, Provenance::Colored))
}

pub fn is_colored_separating(family: &ExperimentFamily, coloring: &Coloring) -> bool {
    let n = coloring.n();
    for x in 0..n {
        for y in 0..n {
            if x == y || coloring.color_of(x) == coloring.color_of(y) {
                continue;
            }
            let covered = family
                .sets()
                .iter()
                .any(|i| i.contains(&x) && !i.contains(&y));
            if !covered {
                return false;
            }
        }
    }
    true
}

/// Smallest d ≥ 1 with a^d ≥ n.
fn digits_needed(n: usize, a: usize) -> usize {
    let mut d = 1;
    let mut cap = a;
    while cap < n {
        cap = cap.saturating_mul(a);
        d += 1;
    }
    d
}

/// Size-bounded separating system from base-a positional labels,
/// a = ⌈n/m⌉: one set per (digit position, letter). Plain labels 0..n−1
/// can overload a letter at high positions, in which case every higher
/// digit gets the least significant one added modulo a; that keeps labels
/// distinct and puts at most ⌈n/a⌉ ≤ m vertices on any letter.
pub fn nm_separating_system(n: usize, m: usize) -> Result<ExperimentFamily> {
    if m < 1 || m >= n {
        return Err(Error::InvalidInput(format!(
            "need 1 <= m < n, got n = {n}, m = {m}"
        )));
    }
    let a = n.div_ceil(m);
    let d = digits_needed(n, a);

    let digit = |v: usize, p: usize| v / a.pow(p as u32) % a;
    let plain: Vec<Vec<usize>> = (0..n)
        .map(|v| (0..d).map(|p| digit(v, p)).collect())
        .collect();
    let balanced = |labels: &[Vec<usize>]| {
        let mut count = vec![vec![0usize; a]; d];
        for label in labels {
            for (p, &l) in label.iter().enumerate() {
                count[p][l] += 1;
            }
        }
        count.iter().flatten().all(|&c| c <= m)
    };
    let labels = if balanced(&plain) {
        plain
    } else {
        let mixed: Vec<Vec<usize>> = (0..n)
            .map(|v| {
                (0..d)
                    .map(|p| {
                        if p == 0 {
                            digit(v, 0)
                        } else {
                            (digit(v, p) + digit(v, 0)) % a
                        }
                    })
                    .collect()
            })
            .collect();
        debug_assert!(balanced(&mixed));
        mixed
    };

    let mut sets = Vec::new();
    for p in (0..d).rev() {
        for letter in 0..a {
            let s: VertexSet = (0..n).filter(|&v| labels[v][p] == letter).collect();
            if !s.is_empty() {
                sets.push(s);
            }
        }
    }
    Ok(ExperimentFamily::constructed(sets, Provenance::Nm))
}

/// Exhaustive ordered-pair check: every (x, y) has a set with x, without y.
pub fn is_nm_separating(family: &ExperimentFamily, n: usize, m: usize) -> bool {
    if family.max_set_size() > m {
        return false;
    }
    for x in 0..n {
        for y in 0..n {
            if x == y {
                continue;
            }
            if !family
                .sets()
                .iter()
                .any(|i| i.contains(&x) && !i.contains(&y))
            {
                return false;
            }
        }
    }
    true
}

/// Leave-one-out union over components: the i-th set drops each
/// component's i-th member (ascending order) and keeps the rest.
pub fn lifted_separating_system(sccs: &SccPartition) -> ExperimentFamily {
    let l_max = sccs.smax();
    let mut sets = Vec::with_capacity(l_max);
    for i in 0..l_max {
        let mut set = VertexSet::new();
        for comp in sccs.components() {
            if comp.len() > i {
                set.extend(comp.iter().enumerate().filter(|&(j, _)| j != i).map(|(_, &v)| v));
            }
        }
        sets.push(set);
    }
    ExperimentFamily::constructed(sets, Provenance::Lifted)
}

/// Every component member must have a witness set containing the rest of
/// its component and excluding it.
pub fn is_lifted_separating(family: &ExperimentFamily, sccs: &SccPartition) -> bool {
    sccs.components().iter().all(|comp| {
        comp.iter().all(|&x| {
            family.sets().iter().any(|i| {
                !i.contains(&x) && comp.iter().all(|&w| w == x || i.contains(&w))
            })
        })
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct BoundedConfig {
    pub m: usize,
}

impl BoundedConfig {
    pub fn new(m: usize) -> Self {
        BoundedConfig { m }
    }
}

/// Size-bounded leave-one-out system. Per member index, the component
/// blocks (component minus its i-th member) are first-fit packed into bins
/// of capacity m; each bin becomes one intervention set. Feasible whenever
/// m ≥ smax − 1; the bin budget per index is never exceeded then.
pub fn bounded_lifted_separating_system(
    sccs: &SccPartition,
    cfg: &BoundedConfig,
    n: usize,
) -> Result<ExperimentFamily> {
    if n != sccs.n() {
        return Err(Error::InvalidInput(format!(
            "partition covers {} vertices, expected {n}",
            sccs.n()
        )));
    }
    let smax = sccs.smax();
    if cfg.m + 1 < smax {
        return Err(Error::InfeasibleBound {
            m: cfg.m,
            floor: smax - 1,
        });
    }
    if cfg.m >= n && n > 0 {
        return Err(Error::InvalidInput(format!(
            "size bound m = {} is vacuous for n = {n}; need m < n",
            cfg.m
        )));
    }
    let bin_budget = packing_bins(n, smax, cfg.m);

    let mut sets: Vec<VertexSet> = Vec::new();
    for i in 0..smax {
        let mut bins: Vec<VertexSet> = Vec::new();
        for comp in sccs.components() {
            if comp.len() <= i || comp.len() == 1 {
                continue;
            }
            let block: Vec<VertexId> = comp
                .iter()
                .enumerate()
                .filter(|&(j, _)| j != i)
                .map(|(_, &v)| v)
                .collect();
            let slot = bins
                .iter()
                .position(|b| b.len() + block.len() <= cfg.m);
            match slot {
                Some(k) => bins[k].extend(block),
                None => {
                    if bins.len() >= bin_budget {
                        return Err(Error::BrokenInvariant(format!(
                            "bin budget {bin_budget} exceeded at member index {i}"
                        )));
                    }
                    bins.push(block.into_iter().collect());
                }
            }
        }
        sets.extend(bins);
    }
    if sets.is_empty() {
        // Every component is a singleton: the empty intervention is the
        // universal witness.
        sets.push(VertexSet::new());
    }
    Ok(ExperimentFamily::constructed(
        sets,
        Provenance::BoundedLifted,
    ))
}

/// Index of a set witnessing `x` within its component: the set contains
/// all other members and excludes `x`. Families from the leave-one-out
/// constructors always have one; absence signals misuse.
pub fn witness_lookup(
    family: &ExperimentFamily,
    sccs: &SccPartition,
    scc_index: usize,
    x: VertexId,
) -> Result<usize> {
    if scc_index >= sccs.k() {
        return Err(Error::InvalidInput(format!(
            "component index {scc_index} out of range"
        )));
    }
    let comp = sccs.component(scc_index);
    if !comp.contains(&x) {
        return Err(Error::InvalidInput(format!(
            "vertex {x} not in component {scc_index}"
        )));
    }
    family
        .sets()
        .iter()
        .position(|i| !i.contains(&x) && comp.iter().all(|&w| w == x || i.contains(&w)))
        .ok_or_else(|| {
            Error::BrokenInvariant(format!(
                "no witness set for vertex {x} in component {scc_index}"
            ))
        })
}
