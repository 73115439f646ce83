//! JSON scenario documents.
//!
//! ```json
//! {
//!   "name": "three-box",
//!   "dim": 3,
//!   "in":  [[0.5773502691896258, 0], [0.5773502691896258, 0], [0.5773502691896258, 0]],
//!   "f":   [[0.5773502691896258, 0], [0.5773502691896258, 0], [-0.5773502691896258, 0]],
//!   "basis_labels": ["A", "B", "C"],
//!   "meters": [
//!     { "label": "C", "observable": { "projector_kets": [[[0, 0], [0, 0], [1, 0]]] }, "g": 0.05, "sigma": 1.0 }
//!   ]
//! }
//! ```
//!
//! Complex numbers are `[re, im]` pairs; matrices are lists of rows.
//! `u_pre` and `u_post` default to the identity, `sigma` to 1. A meter's
//! `observable` is either a Hermitian matrix or `{"projector_kets": [...]}`,
//! the projector onto the span of the listed kets. Extra named projectors
//! for `--pair` go under `projectors`.

use std::path::Path;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hilbert::{
    spectral_decompose, validate, LinearOperator, Projector, Role, SpectralDecomposition, StateVector,
    UnnormalizedVector, ROLE_TOL,
};
use crate::meter::{GaussianMeter, DEFAULT_SIGMA};
use crate::scenario::{QuiescentWindow, Scenario};

pub type ComplexPair = [f64; 2];
pub type MatrixRows = Vec<Vec<ComplexPair>>;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioDocument {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    pub dim: usize,
    #[serde(rename = "in")]
    pub preselected: Vec<ComplexPair>,
    #[serde(rename = "f")]
    pub postselected: Vec<ComplexPair>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub u_pre: Option<MatrixRows>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub u_post: Option<MatrixRows>,
    #[serde(default)]
    pub meters: Vec<MeterDocument>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub basis_labels: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub projectors: Vec<ProjectorDocument>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeterDocument {
    pub label: String,
    pub observable: ObservableDocument,
    pub g: f64,
    #[serde(default = "default_sigma")]
    pub sigma: f64,
}

fn default_sigma() -> f64 {
    DEFAULT_SIGMA
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ObservableDocument {
    Matrix(MatrixRows),
    Projector { projector_kets: Vec<Vec<ComplexPair>> },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProjectorDocument {
    pub label: String,
    pub kets: Vec<Vec<ComplexPair>>,
}

/// A validated scenario plus the naming information the CLI needs.
#[derive(Clone, Debug)]
pub struct LoadedScenario {
    pub name: String,
    pub scenario: Scenario,
    /// One label per computational basis ket.
    pub basis_labels: Vec<String>,
    pub projectors: Vec<(String, Projector)>,
}

impl LoadedScenario {
    /// Named projector, or the projector onto a labeled basis ket.
    pub fn projector(&self, label: &str) -> Option<Projector> {
        if let Some((_, p)) = self.projectors.iter().find(|(l, _)| l == label) {
            return Some(p.clone());
        }
        let k = self.basis_labels.iter().position(|l| l == label)?;
        Projector::basis(self.scenario.dim(), k).ok()
    }

    pub fn basis(&self) -> SpectralDecomposition {
        SpectralDecomposition::computational(self.scenario.dim())
    }
}

fn complex(p: &ComplexPair) -> Complex64 {
    Complex64::new(p[0], p[1])
}

fn vector(field: &str, dim: usize, pairs: &[ComplexPair]) -> Result<Vec<Complex64>> {
    if pairs.len() != dim {
        return Err(Error::document(
            field,
            format!("expected {dim} amplitudes, found {}", pairs.len()),
        ));
    }
    if pairs.iter().flatten().any(|x| !x.is_finite()) {
        return Err(Error::document(field, "amplitudes must be finite"));
    }
    Ok(pairs.iter().map(complex).collect())
}

fn state(field: &str, dim: usize, pairs: &[ComplexPair]) -> Result<StateVector> {
    StateVector::new(vector(field, dim, pairs)?).map_err(|e| Error::document(field, e))
}

fn matrix(field: &str, dim: usize, rows: &MatrixRows) -> Result<LinearOperator> {
    if rows.len() != dim {
        return Err(Error::document(field, format!("expected {dim} rows, found {}", rows.len())));
    }
    let mut entries = Vec::with_capacity(dim * dim);
    for (r, row) in rows.iter().enumerate() {
        entries.extend(vector(&format!("{field}[{r}]"), dim, row)?);
    }
    LinearOperator::from_rows(dim, &entries).map_err(|e| Error::document(field, e))
}

fn unitary(field: &str, dim: usize, rows: &Option<MatrixRows>) -> Result<LinearOperator> {
    let Some(rows) = rows else {
        return Ok(LinearOperator::identity(dim));
    };
    let u = matrix(field, dim, rows)?;
    if !validate(&u, Role::Unitary, ROLE_TOL) {
        return Err(Error::document(field, format!("{field} fails unitarity")));
    }
    Ok(u)
}

fn span(field: &str, dim: usize, kets: &[Vec<ComplexPair>]) -> Result<Projector> {
    let kets = kets
        .iter()
        .enumerate()
        .map(|(i, k)| UnnormalizedVector::new(vector(&format!("{field}[{i}]"), dim, k)?))
        .collect::<Result<Vec<_>>>()?;
    Projector::onto_span(&kets).map_err(|e| Error::document(field, e))
}

impl ScenarioDocument {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::document("document", e))
    }

    pub fn to_json_pretty(&self) -> String {
        serde_json::to_string_pretty(self).expect("documents serialize")
    }

    /// Validates every field and assembles the scenario.
    pub fn build(&self) -> Result<LoadedScenario> {
        let dim = self.dim;
        if dim == 0 {
            return Err(Error::document("dim", "must be at least 1"));
        }
        let preselected = state("in", dim, &self.preselected)?;
        let postselected = state("f", dim, &self.postselected)?;
        let u_pre = unitary("u_pre", dim, &self.u_pre)?;
        let u_post = unitary("u_post", dim, &self.u_post)?;

        let mut meters = Vec::with_capacity(self.meters.len());
        for (i, m) in self.meters.iter().enumerate() {
            let field = format!("meters[{i}]");
            if self.meters[..i].iter().any(|other| other.label == m.label) {
                return Err(Error::document(
                    format!("{field}.label"),
                    format!("duplicate meter label {:?}", m.label),
                ));
            }
            let observable = match &m.observable {
                ObservableDocument::Matrix(rows) => {
                    let op = matrix(&format!("{field}.observable"), dim, rows)?;
                    spectral_decompose(&op).map_err(|e| Error::document(format!("{field}.observable"), e))?
                }
                ObservableDocument::Projector { projector_kets } => SpectralDecomposition::of_projector(&span(
                    &format!("{field}.observable.projector_kets"),
                    dim,
                    projector_kets,
                )?),
            };
            meters.push(
                GaussianMeter::new(m.label.clone(), observable, m.g, m.sigma)
                    .map_err(|e| Error::document(&field, e))?,
            );
        }

        let basis_labels = match &self.basis_labels {
            Some(labels) => {
                if labels.len() != dim {
                    return Err(Error::document(
                        "basis_labels",
                        format!("expected {dim} labels, found {}", labels.len()),
                    ));
                }
                labels.clone()
            }
            None => (0..dim).map(|k| k.to_string()).collect(),
        };
        for (i, l) in basis_labels.iter().enumerate() {
            if basis_labels[..i].contains(l) {
                return Err(Error::document("basis_labels", format!("duplicate label {l:?}")));
            }
        }

        let projectors = self
            .projectors
            .iter()
            .enumerate()
            .map(|(i, p)| Ok((p.label.clone(), span(&format!("projectors[{i}].kets"), dim, &p.kets)?)))
            .collect::<Result<Vec<_>>>()?;

        let scenario = Scenario::new(preselected, u_pre, u_post, postselected, QuiescentWindow::new(meters))?;
        Ok(LoadedScenario {
            name: self.name.clone().unwrap_or_else(|| "scenario".to_owned()),
            scenario,
            basis_labels,
            projectors,
        })
    }
}

/// Reads and validates a scenario document from disk.
pub fn load(path: &Path) -> Result<LoadedScenario> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::document("document", format!("cannot read {}: {e}", path.display())))?;
    let mut loaded = ScenarioDocument::from_json(&text)?.build()?;
    if loaded.name == "scenario" {
        if let Some(stem) = path.file_stem() {
            loaded.name = stem.to_string_lossy().into_owned();
        }
    }
    Ok(loaded)
}
