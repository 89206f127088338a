//! Solution documents (JSON): one record per component plus per-layer
//! objective and legality. Numbers are written in shortest round-trip form.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Layer, LegalityReport, ObjectiveValue, Orientation, PlacementProblem, PlacementSolution};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlacedRecord {
    pub id: String,
    pub layer: Layer,
    pub x: f64,
    pub y: f64,
    pub r: Orientation,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayerSummary {
    pub layer: Layer,
    pub objective: ObjectiveValue,
    pub legality: LegalityReport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolutionFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    pub components: Vec<PlacedRecord>,
    #[serde(default)]
    pub layers: Vec<LayerSummary>,
}

impl SolutionFile {
    pub fn new(problem: &PlacementProblem, sol: &PlacementSolution, layers: Vec<LayerSummary>) -> Self {
        let components = problem
            .components()
            .iter()
            .enumerate()
            .map(|(i, c)| PlacedRecord {
                id: c.id.clone(),
                layer: c.layer,
                x: sol.x[i],
                y: sol.y[i],
                r: sol.r[i],
            })
            .collect();
        SolutionFile {
            seed: None,
            components,
            layers,
        }
    }

    /// Coordinates in problem order. Every component of the problem must
    /// appear exactly once.
    pub fn to_solution(&self, problem: &PlacementProblem) -> Result<PlacementSolution> {
        let mut sol = PlacementSolution::from_problem(problem);
        let mut seen = vec![false; problem.components().len()];
        for (k, rec) in self.components.iter().enumerate() {
            let ci = problem.component_index(&rec.id).ok_or_else(|| Error::Reference {
                name: rec.id.clone(),
                context: format!("solution components[{k}]"),
            })?;
            if std::mem::replace(&mut seen[ci], true) {
                return Err(Error::schema(format!("components[{k}].id"), format!("duplicate id `{}`", rec.id)));
            }
            sol.x[ci] = rec.x;
            sol.y[ci] = rec.y;
            sol.r[ci] = rec.r;
        }
        if let Some(ci) = seen.iter().position(|s| !s) {
            return Err(Error::schema(
                "components",
                format!("missing component `{}`", problem.components()[ci].id),
            ));
        }
        Ok(sol)
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("solution documents serialize");
        s.push('\n');
        s
    }

    pub fn parse(text: &str) -> Result<Self> {
        let de = &mut serde_json::Deserializer::from_str(text);
        serde_path_to_error::deserialize(de).map_err(|e| Error::schema(e.path().to_string(), e.into_inner().to_string()))
    }
}

pub fn write_solution(file: &SolutionFile, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, file.to_json()).map_err(|e| Error::io(path, e))
}

pub fn read_solution(path: impl AsRef<Path>) -> Result<SolutionFile> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    SolutionFile::parse(&text)
}
