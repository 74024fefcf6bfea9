//! Per-image face sidecar: detector boxes, 468 landmarks and perceived
//! demographic attributes produced by an external extractor.
//!
//! Wire format:
//!
//! ```json
//! {"schema_version": 1, "image_id": "...", "width": 1024, "height": 1024,
//!  "faces": [{"bbox": [x, y, w, h], "confidence": 0.99,
//!             "landmarks": [[x, y], ...],
//!             "attributes": {"gender": {"label": "Woman", "confidence": 0.97},
//!                            "race": {"label": "white", "probs": {"white": 0.9, ...}},
//!                            "age": 27.0, "expression": "neutral"}}]}
//! ```
//!
//! Landmarks are normalized to `[0, 1]`; a third (z) coordinate is accepted
//! and ignored. `bbox` is in pixels.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{BBox, Point};
use crate::mask::{LandmarkSet, LANDMARK_COUNT};

pub const SIDECAR_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FaceSidecar {
    pub schema_version: u32,
    pub image_id: String,
    pub width: usize,
    pub height: usize,
    pub faces: Vec<Face>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub attribute_semantics: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Face {
    pub bbox: BBox,
    pub confidence: f64,
    #[serde(with = "landmark_points")]
    pub landmarks: Vec<Point>,
    #[serde(default)]
    pub attributes: Attributes,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Attributes {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gender: Option<LabelConfidence>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub race: Option<RaceEstimate>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub age: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub expression: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabelConfidence {
    pub label: String,
    pub confidence: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RaceEstimate {
    pub label: String,
    #[serde(default)]
    pub probs: BTreeMap<String, f64>,
}

mod landmark_points {
    use serde::de::Error as _;
    use serde::{Deserialize, Deserializer, Serializer};

    use crate::geometry::Point;

    pub fn serialize<S: Serializer>(pts: &[Point], s: S) -> Result<S::Ok, S::Error> {
        s.collect_seq(pts.iter().map(|p| [p.x, p.y]))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<Point>, D::Error> {
        let raw: Vec<Vec<f64>> = Vec::deserialize(d)?;
        raw.into_iter()
            .enumerate()
            .map(|(i, v)| match v.as_slice() {
                [x, y] | [x, y, _] => Ok(Point::new(*x, *y)),
                _ => Err(D::Error::custom(format!("landmark {i} must have 2 or 3 coordinates"))),
            })
            .collect()
    }
}

impl FaceSidecar {
    pub fn from_json(s: &str) -> Result<Self> {
        let sc: Self = serde_json::from_str(s).map_err(|e| Error::parse("sidecar", e))?;
        sc.validate()?;
        Ok(sc)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let s = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&s)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("sidecar serializes")
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::parse("sidecar", m));
        if self.schema_version != SIDECAR_SCHEMA_VERSION {
            return bad(format!("unsupported schema_version {}", self.schema_version));
        }
        for (i, f) in self.faces.iter().enumerate() {
            if f.landmarks.len() != LANDMARK_COUNT {
                return bad(format!("face {i}: {} landmarks, expected {LANDMARK_COUNT}", f.landmarks.len()));
            }
            if !(0.0..=1.0).contains(&f.confidence) {
                return bad(format!("face {i}: confidence {} outside [0, 1]", f.confidence));
            }
            if let Some(g) = &f.attributes.gender {
                if !(0.0..=1.0).contains(&g.confidence) {
                    return bad(format!("face {i}: gender confidence outside [0, 1]"));
                }
            }
        }
        Ok(())
    }

    /// Largest face by box area; ties go to higher confidence, then to the
    /// earlier entry.
    pub fn primary_face(&self) -> Result<&Face> {
        select_primary_face(&self.faces)
    }
}

pub fn select_primary_face(faces: &[Face]) -> Result<&Face> {
    let mut best: Option<&Face> = None;
    for f in faces {
        best = match best {
            None => Some(f),
            Some(b) => {
                let (fa, ba) = (f.bbox.area(), b.bbox.area());
                if fa > ba || (fa == ba && f.confidence > b.confidence) {
                    Some(f)
                } else {
                    Some(b)
                }
            }
        };
    }
    best.ok_or(Error::NoFaceDetected)
}

impl Face {
    pub fn landmark_set(&self) -> Result<LandmarkSet> {
        LandmarkSet::new(self.landmarks.clone(), self.bbox, self.confidence)
    }
}
