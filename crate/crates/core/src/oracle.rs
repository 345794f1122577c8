//! Conditional-independence oracles under hard interventions.
//!
//! Two interchangeable backends: an exact one that answers by graphical
//! separation in the mutilated hidden graph, and a finite-sample one that
//! draws linear-Gaussian data per intervention and runs partial-correlation
//! tests. Learners only see the common trait.

use std::collections::HashMap;

use nalgebra::DMatrix;
use rand::distributions::Distribution;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use statrs::distribution::{ContinuousCDF, Normal};

use crate::graph::{DirectedGraph, UndirectedGraph, VertexId, VertexSet};
use crate::separation::{self, SeparationFlavor};
use crate::{stable_seed, Error, Result};

const DET_MIN: f64 = 1e-6;
const COND_MAX: f64 = 1e8;
const SCM_RETRY_CAP: usize = 100;

/// One conditional-independence question asked under do(intervention).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CiQuery {
    pub x: VertexId,
    pub y: VertexId,
    pub cond: Vec<VertexId>,
    pub intervention: VertexSet,
}

impl CiQuery {
    pub fn marginal(x: VertexId, y: VertexId, intervention: VertexSet) -> Self {
        CiQuery {
            x,
            y,
            cond: Vec::new(),
            intervention,
        }
    }

    pub fn conditional(
        x: VertexId,
        y: VertexId,
        cond: Vec<VertexId>,
        intervention: VertexSet,
    ) -> Self {
        CiQuery {
            x,
            y,
            cond,
            intervention,
        }
    }

    /// Endpoints distinct and in range, conditioning list strictly
    /// ascending and disjoint from them, intervention in range. Endpoints
    /// may be intervened on.
    pub fn validate(&self, n: usize) -> Result<()> {
        if self.x >= n || self.y >= n {
            return Err(Error::InvalidQuery(format!(
                "endpoint out of range for n = {n}"
            )));
        }
        if self.x == self.y {
            return Err(Error::InvalidQuery(format!("x = y = {}", self.x)));
        }
        let mut prev: Option<VertexId> = None;
        for &w in &self.cond {
            if w >= n {
                return Err(Error::InvalidQuery(format!(
                    "conditioning vertex {w} out of range"
                )));
            }
            if w == self.x || w == self.y {
                return Err(Error::InvalidQuery(format!(
                    "conditioning set contains endpoint {w}"
                )));
            }
            if let Some(p) = prev {
                if w <= p {
                    return Err(Error::InvalidQuery(
                        "conditioning set must be strictly ascending".into(),
                    ));
                }
            }
            prev = Some(w);
        }
        if let Some(&v) = self.intervention.iter().next_back() {
            if v >= n {
                return Err(Error::InvalidQuery(format!(
                    "intervention vertex {v} out of range"
                )));
            }
        }
        Ok(())
    }
}

/// Significance level and per-intervention dataset size for data oracles.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CiConfig {
    pub alpha: f64,
    pub sample_size: usize,
}

impl CiConfig {
    pub fn new(alpha: f64, sample_size: usize) -> Result<Self> {
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(Error::InvalidInput(format!(
                "alpha must lie in (0,1), got {alpha}"
            )));
        }
        if sample_size == 0 {
            return Err(Error::InvalidInput("sample_size must be positive".into()));
        }
        Ok(CiConfig { alpha, sample_size })
    }
}

impl Default for CiConfig {
    fn default() -> Self {
        CiConfig {
            alpha: 0.01,
            sample_size: 10_000,
        }
    }
}

/// Common interface the learners query. `ci` answers "independent?".
pub trait InterventionOracle {
    fn n(&self) -> usize;
    fn ci(&mut self, q: &CiQuery) -> Result<bool>;
    /// Exact observable skeleton, when the backend knows the hidden graph.
    fn observable_skeleton(&self, flavor: SeparationFlavor) -> Option<UndirectedGraph>;
}

/// One-shot exact answer: separation in the mutilated graph.
pub fn graph_oracle_ci(g: &DirectedGraph, flavor: SeparationFlavor, q: &CiQuery) -> Result<bool> {
    q.validate(g.n())?;
    separation::r_separated(&g.mutilate(&q.intervention), q.x, q.y, &q.cond, flavor)
}

/// Exact oracle over a hidden graph; caches one query-ready graph per
/// intervention (the σ flavor pays its rewrite once, not per query).
pub struct GraphOracle {
    g: DirectedGraph,
    flavor: SeparationFlavor,
    cache: HashMap<VertexSet, DirectedGraph>,
    queries: usize,
}

impl GraphOracle {
    pub fn new(g: DirectedGraph, flavor: SeparationFlavor) -> Self {
        GraphOracle {
            g,
            flavor,
            cache: HashMap::new(),
            queries: 0,
        }
    }

    pub fn hidden(&self) -> &DirectedGraph {
        &self.g
    }

    pub fn flavor(&self) -> SeparationFlavor {
        self.flavor
    }

    pub fn queries(&self) -> usize {
        self.queries
    }

    pub fn distinct_interventions(&self) -> usize {
        self.cache.len()
    }
}

impl InterventionOracle for GraphOracle {
    fn n(&self) -> usize {
        self.g.n()
    }

    fn ci(&mut self, q: &CiQuery) -> Result<bool> {
        q.validate(self.g.n())?;
        self.queries += 1;
        let flavor = self.flavor;
        let g = &self.g;
        let work = self.cache.entry(q.intervention.clone()).or_insert_with(|| {
            let cut = g.mutilate(&q.intervention);
            match flavor {
                SeparationFlavor::D => cut,
                SeparationFlavor::Sigma => cut.sigma_acyclify(),
            }
        });
        separation::d_separated(work, q.x, q.y, &q.cond)
    }

    fn observable_skeleton(&self, flavor: SeparationFlavor) -> Option<UndirectedGraph> {
        Some(match flavor {
            SeparationFlavor::D => self.g.observable_skeleton_d(),
            SeparationFlavor::Sigma => self.g.observable_skeleton_sigma(),
        })
    }
}

/// Linear structural model: X = A·X + ε, one weight per edge, independent
/// centered Gaussian noise per vertex.
#[derive(Clone, Debug, PartialEq)]
pub struct LinearScm {
    graph: DirectedGraph,
    weights: std::collections::BTreeMap<(VertexId, VertexId), f64>,
    noise_sd: Vec<f64>,
}

impl LinearScm {
    pub fn new(
        graph: DirectedGraph,
        weights: std::collections::BTreeMap<(VertexId, VertexId), f64>,
        noise_sd: Vec<f64>,
    ) -> Result<Self> {
        if noise_sd.len() != graph.n() {
            return Err(Error::InvalidInput(format!(
                "{} noise scales for {} vertices",
                noise_sd.len(),
                graph.n()
            )));
        }
        if noise_sd.iter().any(|&s| !(s > 0.0) || !s.is_finite()) {
            return Err(Error::InvalidInput(
                "noise scales must be positive and finite".into(),
            ));
        }
        let edge_keys: Vec<_> = graph.edges().collect();
        if weights.len() != edge_keys.len() || edge_keys.iter().any(|e| !weights.contains_key(e)) {
            return Err(Error::InvalidInput(
                "weights must cover exactly the graph's edges".into(),
            ));
        }
        if weights.values().any(|w| !w.is_finite()) {
            return Err(Error::InvalidInput("weights must be finite".into()));
        }
        Ok(LinearScm {
            graph,
            weights,
            noise_sd,
        })
    }

    pub fn n(&self) -> usize {
        self.graph.n()
    }

    pub fn graph(&self) -> &DirectedGraph {
        &self.graph
    }

    pub fn weight(&self, u: VertexId, v: VertexId) -> Option<f64> {
        self.weights.get(&(u, v)).copied()
    }

    pub fn weights(&self) -> impl Iterator<Item = (VertexId, VertexId, f64)> + '_ {
        self.weights.iter().map(|(&(u, v), &w)| (u, v, w))
    }

    pub fn noise_sd(&self) -> &[f64] {
        &self.noise_sd
    }

    /// Id − A with rows of intervened vertices zeroed in A.
    fn system_matrix(&self, intervention: &VertexSet) -> DMatrix<f64> {
        let n = self.n();
        let mut m = DMatrix::<f64>::identity(n, n);
        for (&(u, v), &w) in &self.weights {
            if !intervention.contains(&v) {
                m[(v, u)] -= w;
            }
        }
        m
    }
}

/// Rejects systems that are singular or numerically near-singular.
fn check_solvable(m: &DMatrix<f64>) -> Result<()> {
    let det = m.determinant();
    if !det.is_finite() || det.abs() < DET_MIN {
        return Err(Error::Singular(format!(
            "|det(Id - A)| = {:.3e} below {DET_MIN:.0e}",
            det.abs()
        )));
    }
    let sv = m.clone().svd(false, false).singular_values;
    let smax = sv.max();
    let smin = sv.min();
    if smin <= 0.0 || smax / smin > COND_MAX {
        return Err(Error::Singular(format!(
            "condition number {:.3e} above {COND_MAX:.0e}",
            if smin > 0.0 { smax / smin } else { f64::INFINITY }
        )));
    }
    Ok(())
}

/// Draws edge weights uniformly from [−1.5,−1] ∪ [1,1.5] and noise
/// variances uniformly from [0.5, 1.5], redrawing (bounded retries) until
/// the observational system is well-conditioned. Interventional systems
/// are checked lazily at sampling time.
pub fn scm_from_graph(g: &DirectedGraph, seed: u64) -> Result<LinearScm> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..SCM_RETRY_CAP {
        let mut weights = std::collections::BTreeMap::new();
        for (u, v) in g.edges() {
            let mag = rng.gen_range(1.0..=1.5);
            let w = if rng.gen_bool(0.5) { mag } else { -mag };
            weights.insert((u, v), w);
        }
        let noise_sd: Vec<f64> = (0..g.n())
            .map(|_| rng.gen_range(0.5..=1.5f64).sqrt())
            .collect();
        let scm = LinearScm::new(g.clone(), weights, noise_sd)?;
        if check_solvable(&scm.system_matrix(&VertexSet::new())).is_ok() {
            return Ok(scm);
        }
    }
    Err(Error::Generation(format!(
        "no well-conditioned weight draw in {SCM_RETRY_CAP} attempts"
    )))
}

/// Samples drawn under one intervention; column v is vertex v.
#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    data: DMatrix<f64>,
    intervention: VertexSet,
    seed: u64,
}

impl Dataset {
    pub fn new(data: DMatrix<f64>, intervention: VertexSet, seed: u64) -> Result<Self> {
        if data.nrows() == 0 {
            return Err(Error::InvalidInput("dataset must have rows".into()));
        }
        Ok(Dataset {
            data,
            intervention,
            seed,
        })
    }

    pub fn n_samples(&self) -> usize {
        self.data.nrows()
    }

    pub fn n_vars(&self) -> usize {
        self.data.ncols()
    }

    pub fn value(&self, row: usize, var: VertexId) -> f64 {
        self.data[(row, var)]
    }

    pub fn data(&self) -> &DMatrix<f64> {
        &self.data
    }

    pub fn intervention(&self) -> &VertexSet {
        &self.intervention
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }
}

/// Draws `s` joint samples under do(intervention): intervened vertices are
/// replaced by their own noise (same scale), the rest solve the linear
/// system exactly. Deterministic per seed.
pub fn sample(scm: &LinearScm, intervention: &VertexSet, s: usize, seed: u64) -> Result<Dataset> {
    let n = scm.n();
    if s == 0 {
        return Err(Error::InvalidInput("sample count must be positive".into()));
    }
    if intervention.iter().any(|&v| v >= n) {
        return Err(Error::InvalidInput(format!(
            "intervention out of range for n = {n}"
        )));
    }
    let m = scm.system_matrix(intervention);
    check_solvable(&m)?;
    let inv = m
        .try_inverse()
        .ok_or_else(|| Error::Singular("system matrix not invertible".into()))?;

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let normals: Vec<Normal> = scm
        .noise_sd
        .iter()
        .map(|&sd| Normal::new(0.0, sd).expect("validated positive sd"))
        .collect();
    let mut eps = DMatrix::<f64>::zeros(s, n);
    for r in 0..s {
        for v in 0..n {
            eps[(r, v)] = normals[v].sample(&mut rng);
        }
    }
    // Row-wise x = M⁻¹ ε  ⟺  X = E · (M⁻¹)ᵀ.
    let data = &eps * inv.transpose();
    Dataset::new(data, intervention.clone(), seed)
}

/// Partial-correlation independence test. Computes the correlation of x
/// and y given cond from the precision of the restricted covariance, maps
/// it through the z-transform, and compares against the two-sided normal
/// quantile at `alpha`.
pub fn fisher_z_ci(
    data: &Dataset,
    x: VertexId,
    y: VertexId,
    cond: &[VertexId],
    alpha: f64,
) -> Result<bool> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::InvalidInput(format!(
            "alpha must lie in (0,1), got {alpha}"
        )));
    }
    let q = CiQuery::conditional(x, y, cond.to_vec(), VertexSet::new());
    q.validate(data.n_vars())?;
    let s = data.n_samples();
    if s <= cond.len() + 3 {
        return Err(Error::InsufficientSamples {
            have: s,
            need: cond.len() + 4,
        });
    }

    let mut idx = Vec::with_capacity(2 + cond.len());
    idx.push(x);
    idx.push(y);
    idx.extend_from_slice(cond);
    let k = idx.len();

    let mut centered = DMatrix::<f64>::zeros(s, k);
    for (j, &v) in idx.iter().enumerate() {
        let mean: f64 = (0..s).map(|r| data.value(r, v)).sum::<f64>() / s as f64;
        for r in 0..s {
            centered[(r, j)] = data.value(r, v) - mean;
        }
    }
    let cov = (centered.transpose() * &centered) / (s as f64 - 1.0);
    for j in 0..k {
        if cov[(j, j)] < 1e-12 {
            return Err(Error::DegenerateData(format!(
                "column {} has (near-)zero variance",
                idx[j]
            )));
        }
    }
    let sym = (&cov + cov.transpose()) * 0.5;
    let precision = sym
        .try_inverse()
        .ok_or_else(|| Error::DegenerateData("restricted covariance is singular".into()))?;
    let denom = precision[(0, 0)] * precision[(1, 1)];
    if !(denom > 0.0) || !denom.is_finite() {
        return Err(Error::DegenerateData(
            "precision diagonal not positive".into(),
        ));
    }
    let rho = (-precision[(0, 1)] / denom.sqrt()).clamp(-(1.0 - 1e-12), 1.0 - 1e-12);
    let z = 0.5 * ((1.0 + rho) / (1.0 - rho)).ln() * ((s - cond.len() - 3) as f64).sqrt();
    let threshold = Normal::new(0.0, 1.0)
        .expect("unit normal")
        .inverse_cdf(1.0 - alpha / 2.0);
    Ok(z.abs() <= threshold)
}

/// Finite-sample oracle: one dataset per distinct intervention set,
/// sampled lazily and reused by every query under that intervention.
pub struct DataOracle {
    scm: LinearScm,
    cfg: CiConfig,
    master_seed: u64,
    cache: HashMap<VertexSet, Dataset>,
    queries: usize,
}

impl DataOracle {
    pub fn new(scm: LinearScm, cfg: CiConfig, master_seed: u64) -> Result<Self> {
        CiConfig::new(cfg.alpha, cfg.sample_size)?;
        Ok(DataOracle {
            scm,
            cfg,
            master_seed,
            cache: HashMap::new(),
            queries: 0,
        })
    }

    pub fn datasets_created(&self) -> usize {
        self.cache.len()
    }

    pub fn queries(&self) -> usize {
        self.queries
    }

    pub fn scm(&self) -> &LinearScm {
        &self.scm
    }

    fn dataset_for(&mut self, intervention: &VertexSet) -> Result<&Dataset> {
        if !self.cache.contains_key(intervention) {
            let mut parts: Vec<u64> = vec![intervention.len() as u64];
            parts.extend(intervention.iter().map(|&v| v as u64));
            let seed = stable_seed(self.master_seed, &parts);
            let ds = sample(&self.scm, intervention, self.cfg.sample_size, seed)?;
            self.cache.insert(intervention.clone(), ds);
        }
        Ok(&self.cache[intervention])
    }
}

impl InterventionOracle for DataOracle {
    fn n(&self) -> usize {
        self.scm.n()
    }

    fn ci(&mut self, q: &CiQuery) -> Result<bool> {
        q.validate(self.scm.n())?;
        self.queries += 1;
        let alpha = self.cfg.alpha;
        let (x, y, cond) = (q.x, q.y, q.cond.clone());
        let ds = self.dataset_for(&q.intervention)?;
        fisher_z_ci(ds, x, y, &cond, alpha)
    }

    fn observable_skeleton(&self, _flavor: SeparationFlavor) -> Option<UndirectedGraph> {
        None
    }
}
