//! File formats: JSON graph/family/model files with canonical byte
//! layout, CSV emitters for datasets and benchmark records, and atomic
//! writes (temp file + rename) so readers never see partial output.

use std::collections::BTreeSet;
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::bench::TrialRecord;
use crate::graph::{DirectedGraph, VertexId};
use crate::oracle::{Dataset, LinearScm};
use crate::sepsys::ExperimentFamily;
use crate::{Error, Result};

/// On-disk directed graph. Edges are kept sorted so that load → save
/// reproduces the file byte for byte.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GraphFile {
    pub n: usize,
    pub directed: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub names: Option<Vec<String>>,
    pub edges: Vec<(VertexId, VertexId)>,
}

impl GraphFile {
    pub fn from_graph(g: &DirectedGraph, names: Option<Vec<String>>) -> Result<Self> {
        let file = GraphFile {
            n: g.n(),
            directed: true,
            names,
            edges: g.edges().collect(),
        };
        file.validate_names()?;
        Ok(file)
    }

    fn validate_names(&self) -> Result<()> {
        if let Some(names) = &self.names {
            if names.len() != self.n {
                return Err(Error::InvalidInput(format!(
                    "{} names for {} vertices",
                    names.len(),
                    self.n
                )));
            }
            let distinct: BTreeSet<&String> = names.iter().collect();
            if distinct.len() != names.len() {
                return Err(Error::InvalidInput("vertex names must be distinct".into()));
            }
        }
        Ok(())
    }

    pub fn to_graph(&self) -> Result<DirectedGraph> {
        if !self.directed {
            return Err(Error::InvalidInput(
                "only directed graph files are supported".into(),
            ));
        }
        self.validate_names()?;
        DirectedGraph::from_edges(self.n, &self.edges)
    }

    /// Resolves a vertex given by name or by decimal index.
    pub fn resolve(&self, token: &str) -> Result<VertexId> {
        if let Some(names) = &self.names {
            if let Some(i) = names.iter().position(|n| n == token) {
                return Ok(i);
            }
        }
        match token.parse::<usize>() {
            Ok(i) if i < self.n => Ok(i),
            _ => Err(Error::InvalidInput(format!(
                "unknown vertex {token:?} (expected a name or an index below {})",
                self.n
            ))),
        }
    }

    /// Name of a vertex, falling back to `v{i}` when unnamed.
    pub fn display_name(&self, v: VertexId) -> String {
        match &self.names {
            Some(names) if v < names.len() => names[v].clone(),
            _ => format!("v{v}"),
        }
    }
}

/// On-disk linear model: weighted edges plus per-vertex noise scales.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScmFile {
    pub n: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub names: Option<Vec<String>>,
    pub edges: Vec<(VertexId, VertexId, f64)>,
    pub noise_sd: Vec<f64>,
}

impl ScmFile {
    pub fn from_scm(scm: &LinearScm, names: Option<Vec<String>>) -> Self {
        ScmFile {
            n: scm.n(),
            names,
            edges: scm
                .graph()
                .edges()
                .map(|(u, v)| (u, v, scm.weight(u, v).expect("edge weight exists")))
                .collect(),
            noise_sd: scm.noise_sd().to_vec(),
        }
    }

    pub fn to_scm(&self) -> Result<LinearScm> {
        if let Some(names) = &self.names {
            if names.len() != self.n {
                return Err(Error::InvalidInput(format!(
                    "{} names for {} vertices",
                    names.len(),
                    self.n
                )));
            }
        }
        let plain: Vec<(VertexId, VertexId)> =
            self.edges.iter().map(|&(u, v, _)| (u, v)).collect();
        let graph = DirectedGraph::from_edges(self.n, &plain)?;
        let weights = self.edges.iter().map(|&(u, v, w)| ((u, v), w)).collect();
        LinearScm::new(graph, weights, self.noise_sd.clone())
    }
}

/// Serializes as canonical pretty JSON and writes atomically.
pub fn save_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    write_atomic(path, text.as_bytes())
}

pub fn load_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path)?;
    Ok(serde_json::from_str(&text)?)
}

pub fn load_graph(path: &Path) -> Result<GraphFile> {
    let file: GraphFile = load_json(path)?;
    file.to_graph()?;
    Ok(file)
}

pub fn load_family(path: &Path) -> Result<ExperimentFamily> {
    load_json(path)
}

pub fn load_scm(path: &Path) -> Result<ScmFile> {
    let file: ScmFile = load_json(path)?;
    file.to_scm()?;
    Ok(file)
}

/// Writes sampled data as CSV with one column per vertex.
pub fn write_dataset_csv(path: &Path, data: &Dataset, names: Option<&[String]>) -> Result<()> {
    let n = data.n_vars();
    let mut buf = Vec::new();
    {
        let mut w = csv::Writer::from_writer(&mut buf);
        let header: Vec<String> = match names {
            Some(names) if names.len() == n => names.to_vec(),
            Some(names) => {
                return Err(Error::InvalidInput(format!(
                    "{} names for {} columns",
                    names.len(),
                    n
                )))
            }
            None => (0..n).map(|i| format!("v{i}")).collect(),
        };
        w.write_record(&header).map_err(io_from_csv)?;
        for row in 0..data.n_samples() {
            let record: Vec<String> = (0..n).map(|c| data.value(row, c).to_string()).collect();
            w.write_record(&record).map_err(io_from_csv)?;
        }
        w.flush()?;
    }
    write_atomic(path, &buf)
}

/// Writes benchmark rows with a fixed header order.
pub fn write_records_csv(path: &Path, records: &[TrialRecord]) -> Result<()> {
    let mut buf = Vec::new();
    {
        let mut w = csv::Writer::from_writer(&mut buf);
        for r in records {
            w.serialize(r).map_err(io_from_csv)?;
        }
        w.flush()?;
    }
    write_atomic(path, &buf)
}

fn io_from_csv(e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        other => Error::InvalidInput(format!("csv error: {other:?}")),
    }
}

/// Writes through a sibling temp file and renames into place.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty());
    let mut tmp = match dir {
        Some(dir) => tempfile::NamedTempFile::new_in(dir)?,
        None => tempfile::NamedTempFile::new_in(".")?,
    };
    std::io::Write::write_all(&mut tmp, bytes)?;
    tmp.persist(path).map_err(|e| Error::Io(e.error))?;
    Ok(())
}
