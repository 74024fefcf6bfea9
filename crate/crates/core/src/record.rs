//! Per-image output lines: an analysis record on success, a skip entry
//! otherwise. Files are JSON Lines with a `status` discriminator.

use std::collections::BTreeMap;
use std::fmt;
use std::io::BufRead;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::BBox;
use crate::normalize::WhiteBalanceGains;
use crate::scales::ScaleAssignment;
use crate::sidecar::{LabelConfidence, RaceEstimate};
use crate::tone::ToneEstimate;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalysisRecord {
    pub image_id: String,
    pub model: String,
    pub prompt: String,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub extra: BTreeMap<String, String>,
    pub face_bbox: BBox,
    pub face_confidence: f64,
    pub wb_gains: WhiteBalanceGains,
    pub skin_pixel_count: usize,
    pub mask_coverage: f64,
    pub tone: ToneEstimate,
    pub mst: ScaleAssignment,
    pub perla: ScaleAssignment,
    pub fst: ScaleAssignment,
    pub gender: Option<LabelConfidence>,
    pub race: Option<RaceEstimate>,
    pub age: Option<f64>,
    pub expression: Option<String>,
    #[serde(default)]
    pub flags: Vec<String>,
    pub palette_hash: String,
    pub config_hash: String,
    pub topology_hash: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SkipReason {
    NoFaceDetected,
    InsufficientSkinArea,
    ImageDecodeError,
    SidecarParseError,
    DimensionMismatch,
}

impl SkipReason {
    pub const ALL: [SkipReason; 5] = [
        Self::NoFaceDetected,
        Self::InsufficientSkinArea,
        Self::ImageDecodeError,
        Self::SidecarParseError,
        Self::DimensionMismatch,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Self::NoFaceDetected => "no_face_detected",
            Self::InsufficientSkinArea => "insufficient_skin_area",
            Self::ImageDecodeError => "image_decode_error",
            Self::SidecarParseError => "sidecar_parse_error",
            Self::DimensionMismatch => "dimension_mismatch",
        }
    }
}

impl fmt::Display for SkipReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SkipEntry {
    pub image_id: String,
    pub model: String,
    pub prompt: String,
    pub reason: SkipReason,
    pub detail: String,
    pub palette_hash: String,
    pub config_hash: String,
    pub topology_hash: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum RecordLine {
    Ok(Box<AnalysisRecord>),
    Skipped(SkipEntry),
}

impl RecordLine {
    pub fn image_id(&self) -> &str {
        match self {
            Self::Ok(r) => &r.image_id,
            Self::Skipped(s) => &s.image_id,
        }
    }

    pub fn config_hash(&self) -> &str {
        match self {
            Self::Ok(r) => &r.config_hash,
            Self::Skipped(s) => &s.config_hash,
        }
    }

    pub fn as_record(&self) -> Option<&AnalysisRecord> {
        match self {
            Self::Ok(r) => Some(r),
            Self::Skipped(_) => None,
        }
    }

    pub fn to_json_line(&self) -> String {
        serde_json::to_string(self).expect("record serializes")
    }
}

/// Reads a JSON Lines record file. Blank lines are ignored.
pub fn read_record_lines(path: &Path) -> Result<Vec<RecordLine>> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut out = Vec::new();
    for (n, line) in std::io::BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let rec = serde_json::from_str(&line)
            .map_err(|e| Error::parse("record file", format!("{}:{}: {e}", path.display(), n + 1)))?;
        out.push(rec);
    }
    Ok(out)
}

/// Successful records only.
pub fn read_records(path: &Path) -> Result<Vec<AnalysisRecord>> {
    Ok(read_record_lines(path)?
        .into_iter()
        .filter_map(|l| match l {
            RecordLine::Ok(r) => Some(*r),
            RecordLine::Skipped(_) => None,
        })
        .collect())
}

pub const CSV_COLUMNS: [&str; 25] = [
    "status",
    "image_id",
    "model",
    "prompt",
    "reason",
    "tone_L",
    "tone_a",
    "tone_b",
    "coverage",
    "skin_pixel_count",
    "mst",
    "mst_distance",
    "perla",
    "perla_distance",
    "fst",
    "fst_distance",
    "gender",
    "gender_confidence",
    "race",
    "age",
    "expression",
    "gain_r",
    "gain_g",
    "gain_b",
    "flags",
];

/// Flat CSV projection of a record stream.
pub fn write_csv<W: std::io::Write>(lines: &[RecordLine], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let csv_err = |e: csv::Error| Error::parse("csv output", e);
    w.write_record(CSV_COLUMNS).map_err(csv_err)?;
    for line in lines {
        let row: Vec<String> = match line {
            RecordLine::Ok(r) => {
                let t = r.tone.representative;
                let opt = |v: Option<String>| v.unwrap_or_default();
                vec![
                    "ok".into(),
                    r.image_id.clone(),
                    r.model.clone(),
                    r.prompt.clone(),
                    String::new(),
                    t.l.to_string(),
                    t.a.to_string(),
                    t.b.to_string(),
                    r.tone.coverage.to_string(),
                    r.skin_pixel_count.to_string(),
                    r.mst.label.clone(),
                    r.mst.distance.to_string(),
                    r.perla.label.clone(),
                    r.perla.distance.to_string(),
                    r.fst.label.clone(),
                    r.fst.distance.to_string(),
                    opt(r.gender.as_ref().map(|g| g.label.clone())),
                    opt(r.gender.as_ref().map(|g| g.confidence.to_string())),
                    opt(r.race.as_ref().map(|g| g.label.clone())),
                    opt(r.age.map(|a| a.to_string())),
                    opt(r.expression.clone()),
                    r.wb_gains.r.to_string(),
                    r.wb_gains.g.to_string(),
                    r.wb_gains.b.to_string(),
                    r.flags.join(";"),
                ]
            }
            RecordLine::Skipped(s) => {
                let mut row = vec![String::new(); CSV_COLUMNS.len()];
                row[0] = "skipped".into();
                row[1] = s.image_id.clone();
                row[2] = s.model.clone();
                row[3] = s.prompt.clone();
                row[4] = s.reason.to_string();
                row
            }
        };
        w.write_record(&row).map_err(csv_err)?;
    }
    w.flush().map_err(|e| Error::parse("csv output", e))?;
    Ok(())
}
