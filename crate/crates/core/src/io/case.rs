//! PCB case documents (JSON).
//!
//! ```json
//! {
//!   "name": "demo",
//!   "board": { "width": 120, "height": 90 },
//!   "ic": {
//!     "outline": { "width": 40, "height": 30 },
//!     "pins": [ { "id": "P1", "x": 0, "y": 15, "layer": "top" } ]
//!   },
//!   "components": [ { "id": "R1", "w": 2, "h": 1, "layer": "top" } ],
//!   "nets": [ { "id": "N1", "members": ["R1", "P1"], "closetopin": true } ],
//!   "spacing": { "default_gap": 0.5, "pairs": [ { "a": "C*", "b": "U*", "gap": 2 } ] }
//! }
//! ```
//!
//! Components may also carry `x`, `y` (center) and `r` (quarter turns,
//! 0 to 3) as starting values.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Component, IcPin, Layer, Net, Orientation, Outline, PlacementProblem, SpacingRules};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutlineDoc {
    pub width: f64,
    pub height: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IcDoc {
    pub outline: OutlineDoc,
    #[serde(default)]
    pub pins: Vec<IcPin>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ComponentDoc {
    pub id: String,
    pub w: f64,
    pub h: f64,
    pub layer: Layer,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub y: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub r: Option<Orientation>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CaseFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub board: Option<OutlineDoc>,
    pub ic: IcDoc,
    #[serde(default)]
    pub components: Vec<ComponentDoc>,
    #[serde(default)]
    pub nets: Vec<Net>,
    #[serde(default)]
    pub spacing: SpacingRules,
}

fn outline(doc: &OutlineDoc, field: &str) -> Result<Outline> {
    Outline::new(doc.width, doc.height).map_err(|_| Error::schema(field, "width and height must be positive"))
}

impl CaseFile {
    pub fn parse(text: &str) -> Result<Self> {
        let de = &mut serde_json::Deserializer::from_str(text);
        serde_path_to_error::deserialize(de).map_err(|e| {
            let field = e.path().to_string();
            Error::schema(if field == "." { "<root>".into() } else { field }, e.into_inner().to_string())
        })
    }

    pub fn to_problem(&self) -> Result<PlacementProblem> {
        let ic = outline(&self.ic.outline, "ic.outline")?;
        let board = self.board.as_ref().map(|b| outline(b, "board")).transpose()?;
        let mut comps = Vec::with_capacity(self.components.len());
        for (i, d) in self.components.iter().enumerate() {
            for (v, name) in [(d.w, "w"), (d.h, "h")] {
                if !(v > 0.0 && v.is_finite()) {
                    return Err(Error::schema(format!("components[{i}].{name}"), "must be a positive number"));
                }
            }
            let mut c = Component::new(d.id.clone(), d.w, d.h, d.layer);
            c.x = d.x.unwrap_or(ic.width / 2.0);
            c.y = d.y.unwrap_or(ic.height / 2.0);
            c.orientation = d.r.unwrap_or_default();
            comps.push(c);
        }
        PlacementProblem::new(comps, self.nets.clone(), self.ic.pins.clone(), ic, board, self.spacing.clone())
    }

    pub fn from_problem(problem: &PlacementProblem, name: Option<String>) -> Self {
        let ic = problem.ic_outline();
        CaseFile {
            name,
            board: problem.board_outline().map(|b| OutlineDoc {
                width: b.width,
                height: b.height,
            }),
            ic: IcDoc {
                outline: OutlineDoc {
                    width: ic.width,
                    height: ic.height,
                },
                pins: problem.ic_pins().to_vec(),
            },
            components: problem
                .components()
                .iter()
                .map(|c| ComponentDoc {
                    id: c.id.clone(),
                    w: c.width,
                    h: c.height,
                    layer: c.layer,
                    x: None,
                    y: None,
                    r: None,
                })
                .collect(),
            nets: problem.nets().to_vec(),
            spacing: problem.spacing_rules().clone(),
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("case documents serialize");
        s.push('\n');
        s
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_json()).map_err(|e| Error::io(path, e))
    }
}

pub fn read_case_file(path: impl AsRef<Path>) -> Result<CaseFile> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    CaseFile::parse(&text)
}

pub fn load_case(path: impl AsRef<Path>) -> Result<PlacementProblem> {
    read_case_file(path)?.to_problem()
}
