//! Corpus orchestration: manifest ingestion, per-image analysis and record
//! emission.

use std::collections::{BTreeMap, BTreeSet};
use std::io::{BufRead, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::color::DeltaMetric;
use crate::digest::sha256_hex;
use crate::error::{Error, Result};
use crate::mask::{build_skin_mask, mask_coverage, LandmarkTopology, MaskParams};
use crate::normalize::{normalize_image, NormalizationParams, WhiteBalanceGains};
use crate::raster::ImageBuffer;
use crate::record::{write_csv, AnalysisRecord, RecordLine, SkipEntry, SkipReason};
use crate::scales::PaletteSet;
use crate::sidecar::FaceSidecar;
use crate::tone::{extract_masked_pixels, representative_tone, ToneParams};

pub const CONFIG_SCHEMA_VERSION: u32 = 1;

/// Every tunable parameter of the analysis. Its hash stamps each record.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub schema_version: u32,
    /// When false the image is measured as decoded (ablation runs).
    pub normalize: bool,
    pub normalization: NormalizationParams,
    pub mask: MaskParams,
    pub tone: ToneParams,
    pub metric: DeltaMetric,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            schema_version: CONFIG_SCHEMA_VERSION,
            normalize: true,
            normalization: NormalizationParams::default(),
            mask: MaskParams::default(),
            tone: ToneParams::default(),
            metric: DeltaMetric::De2000,
        }
    }
}

impl PipelineConfig {
    pub fn from_json(s: &str) -> Result<Self> {
        let c: Self = serde_json::from_str(s).map_err(|e| Error::Config(format!("pipeline config: {e}")))?;
        c.validate()?;
        Ok(c)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let s = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&s)
    }

    pub fn validate(&self) -> Result<()> {
        if self.schema_version != CONFIG_SCHEMA_VERSION {
            return Err(Error::Config(format!("unsupported config schema_version {}", self.schema_version)));
        }
        self.normalization.validate()?;
        self.mask.validate()?;
        self.tone.validate()
    }

    /// Canonical serialization (fixed field order, compact).
    pub fn canonical_json(&self) -> String {
        serde_json::to_string(self).expect("config serializes")
    }

    pub fn to_json_pretty(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn hash(&self) -> String {
        sha256_hex(self.canonical_json().as_bytes())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub image_id: String,
    pub image_path: PathBuf,
    pub sidecar_path: PathBuf,
    pub model: String,
    pub prompt: String,
    #[serde(default)]
    pub extra: BTreeMap<String, String>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct CorpusManifest {
    pub entries: Vec<ManifestEntry>,
}

const REQUIRED_COLUMNS: [&str; 4] = ["image_path", "sidecar_path", "model", "prompt"];

impl CorpusManifest {
    /// Reads a CSV manifest, or JSON Lines when the extension is `.jsonl` or
    /// `.ndjson`. Relative paths resolve against the manifest's directory.
    /// The optional `image_id` column defaults to the image file stem; other
    /// columns are kept as extra metadata.
    pub fn load(path: &Path) -> Result<Self> {
        let base = path.parent().unwrap_or(Path::new("."));
        let rows = match path.extension().and_then(|e| e.to_str()) {
            Some("jsonl" | "ndjson") => read_jsonl_rows(path)?,
            _ => read_csv_rows(path)?,
        };
        let mut entries = Vec::with_capacity(rows.len());
        for (i, mut row) in rows.into_iter().enumerate() {
            let mut take =
                |k: &str| row.remove(k).ok_or_else(|| Error::Manifest(format!("row {}: missing `{k}`", i + 1)));
            let image_path = base.join(take("image_path")?);
            let sidecar_path = base.join(take("sidecar_path")?);
            let model = take("model")?;
            let prompt = take("prompt")?;
            let image_id = match row.remove("image_id").filter(|s| !s.is_empty()) {
                Some(id) => id,
                None => image_path
                    .file_stem()
                    .and_then(|s| s.to_str())
                    .ok_or_else(|| Error::Manifest(format!("row {}: image path has no file name", i + 1)))?
                    .to_string(),
            };
            entries.push(ManifestEntry { image_id, image_path, sidecar_path, model, prompt, extra: row });
        }
        let m = Self { entries };
        m.validate()?;
        Ok(m)
    }

    /// Unique ids and existing files.
    pub fn validate(&self) -> Result<()> {
        let mut seen = BTreeSet::new();
        for e in &self.entries {
            if !seen.insert(e.image_id.as_str()) {
                return Err(Error::Manifest(format!("duplicate image id `{}`", e.image_id)));
            }
            for p in [&e.image_path, &e.sidecar_path] {
                if !p.is_file() {
                    return Err(Error::Manifest(format!("`{}`: no such file {}", e.image_id, p.display())));
                }
            }
        }
        Ok(())
    }
}

fn read_csv_rows(path: &Path) -> Result<Vec<BTreeMap<String, String>>> {
    let mut rdr = csv::Reader::from_path(path).map_err(|e| Error::Manifest(format!("{}: {e}", path.display())))?;
    let headers: Vec<String> = rdr
        .headers()
        .map_err(|e| Error::Manifest(format!("{}: {e}", path.display())))?
        .iter()
        .map(|h| h.trim().to_string())
        .collect();
    if let Some(c) = REQUIRED_COLUMNS.iter().find(|c| !headers.iter().any(|h| h == *c)) {
        return Err(Error::Manifest(format!("{}: missing column `{c}`", path.display())));
    }
    let mut rows = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| Error::Manifest(format!("{}: {e}", path.display())))?;
        rows.push(headers.iter().cloned().zip(rec.iter().map(str::to_string)).collect());
    }
    Ok(rows)
}

fn read_jsonl_rows(path: &Path) -> Result<Vec<BTreeMap<String, String>>> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut rows = Vec::new();
    for (n, line) in std::io::BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let obj: serde_json::Map<String, serde_json::Value> =
            serde_json::from_str(&line).map_err(|e| Error::Manifest(format!("{}:{}: {e}", path.display(), n + 1)))?;
        rows.push(
            obj.into_iter()
                .map(|(k, v)| match v {
                    serde_json::Value::String(s) => (k, s),
                    other => (k, other.to_string()),
                })
                .collect(),
        );
    }
    Ok(rows)
}

/// Immutable state shared by every image of a run.
#[derive(Debug, Clone)]
pub struct Analyzer {
    pub config: PipelineConfig,
    pub palettes: PaletteSet,
    pub topology: LandmarkTopology,
    pub config_hash: String,
    pub palette_hash: String,
    pub topology_hash: String,
}

impl Analyzer {
    pub fn new(config: PipelineConfig, palettes: PaletteSet, topology: LandmarkTopology) -> Result<Self> {
        config.validate()?;
        topology.validate()?;
        let topology_hash = sha256_hex(serde_json::to_string(&topology).expect("topology serializes").as_bytes());
        Ok(Self {
            config_hash: config.hash(),
            palette_hash: palettes.hash.clone(),
            topology_hash,
            config,
            palettes,
            topology,
        })
    }

    /// Built-in palettes and topology with default parameters.
    pub fn with_defaults() -> Self {
        Self::new(PipelineConfig::default(), PaletteSet::builtin(), LandmarkTopology::builtin())
            .expect("built-in configuration is valid")
    }

    fn skip(&self, entry: &ManifestEntry, reason: SkipReason, detail: impl ToString) -> RecordLine {
        RecordLine::Skipped(SkipEntry {
            image_id: entry.image_id.clone(),
            model: entry.model.clone(),
            prompt: entry.prompt.clone(),
            reason,
            detail: detail.to_string(),
            palette_hash: self.palette_hash.clone(),
            config_hash: self.config_hash.clone(),
            topology_hash: self.topology_hash.clone(),
        })
    }

    /// Analyzes one manifest entry. Failures become skip entries.
    pub fn analyze_entry(&self, entry: &ManifestEntry) -> RecordLine {
        let sidecar = match FaceSidecar::load(&entry.sidecar_path) {
            Ok(s) => s,
            Err(e) => return self.skip(entry, SkipReason::SidecarParseError, e),
        };
        let image = match ImageBuffer::load(&entry.image_path) {
            Ok(i) => i,
            Err(e) => return self.skip(entry, SkipReason::ImageDecodeError, e),
        };
        self.analyze(entry, &image, &sidecar)
    }

    /// Analyzes an already decoded image.
    pub fn analyze(&self, entry: &ManifestEntry, image: &ImageBuffer, sidecar: &FaceSidecar) -> RecordLine {
        match self.measure(entry, image, sidecar) {
            Ok(r) => RecordLine::Ok(Box::new(r)),
            Err(e) => {
                let reason = match e {
                    Error::NoFaceDetected => SkipReason::NoFaceDetected,
                    Error::InsufficientSkinArea { .. } | Error::InsufficientPixels { .. } => {
                        SkipReason::InsufficientSkinArea
                    }
                    Error::DimensionMismatch { .. } => SkipReason::DimensionMismatch,
                    _ => SkipReason::SidecarParseError,
                };
                self.skip(entry, reason, e)
            }
        }
    }

    fn measure(&self, entry: &ManifestEntry, image: &ImageBuffer, sidecar: &FaceSidecar) -> Result<AnalysisRecord> {
        if (sidecar.width, sidecar.height) != image.dims() {
            return Err(Error::DimensionMismatch { expected: (sidecar.width, sidecar.height), found: image.dims() });
        }
        let cfg = &self.config;
        let face = sidecar.primary_face()?;
        let lm = face.landmark_set()?;
        let (w, h) = image.dims();
        let mut flags = Vec::new();

        let (normalized, gains) = if cfg.normalize {
            let n = normalize_image(image, face, &cfg.normalization)?;
            if n.no_background_reference {
                flags.push("no_background_reference".to_string());
            }
            (n.image, n.gains)
        } else {
            flags.push("normalization_disabled".to_string());
            (image.clone(), WhiteBalanceGains::IDENTITY)
        };

        let mut mask = build_skin_mask(&lm, w, h, &self.topology, &cfg.mask)?;
        if let Some(floor) = cfg.mask.dark_pixel_floor {
            let dropped = mask.drop_dark_pixels(&normalized, floor)?;
            flags.push(format!("dark_pixels_dropped:{dropped}"));
            let required = cfg.mask.min_skin_pixels_for(w, h);
            if mask.skin_pixel_count() < required {
                return Err(Error::InsufficientSkinArea { found: mask.skin_pixel_count(), required });
            }
        }
        let coverage = match mask_coverage(&mask, &face.bbox) {
            Ok(c) => c,
            Err(_) => {
                flags.push("zero_area_bbox".to_string());
                0.0
            }
        };

        let pixels = extract_masked_pixels(&normalized, &mask)?;
        let tone = representative_tone(&pixels, &cfg.tone)?;
        let t = tone.representative;
        let attrs = &face.attributes;
        Ok(AnalysisRecord {
            image_id: entry.image_id.clone(),
            model: entry.model.clone(),
            prompt: entry.prompt.clone(),
            extra: entry.extra.clone(),
            face_bbox: face.bbox,
            face_confidence: face.confidence,
            wb_gains: gains,
            skin_pixel_count: mask.skin_pixel_count(),
            mask_coverage: coverage,
            mst: self.palettes.mst().classify(t, cfg.metric),
            perla: self.palettes.perla().classify(t, cfg.metric),
            fst: self.palettes.fst().classify(t, cfg.metric),
            tone,
            gender: attrs.gender.clone(),
            race: attrs.race.clone(),
            age: attrs.age,
            expression: attrs.expression.clone(),
            flags,
            palette_hash: self.palette_hash.clone(),
            config_hash: self.config_hash.clone(),
            topology_hash: self.topology_hash.clone(),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Execution {
    Sequential,
    /// Worker pool of the given size. Runs sequentially when the crate is
    /// built without the `parallel` feature.
    Parallel {
        jobs: usize,
    },
}

impl Execution {
    pub fn from_jobs(jobs: usize) -> Self {
        if jobs <= 1 {
            Self::Sequential
        } else {
            Self::Parallel { jobs }
        }
    }
}

/// Applies `f` to every item, preserving input order.
pub fn map_items<T, R, F>(items: &[T], exec: Execution, f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync + Send,
{
    match exec {
        Execution::Sequential => items.iter().map(f).collect(),
        #[cfg(feature = "parallel")]
        Execution::Parallel { jobs } => {
            use rayon::prelude::*;
            match rayon::ThreadPoolBuilder::new().num_threads(jobs).build() {
                Ok(pool) => pool.install(|| items.par_iter().map(&f).collect()),
                Err(_) => items.iter().map(f).collect(),
            }
        }
        #[cfg(not(feature = "parallel"))]
        Execution::Parallel { .. } => items.iter().map(f).collect(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub total: usize,
    pub ok: usize,
    pub skipped: usize,
    pub skipped_by_reason: BTreeMap<String, usize>,
    pub flagged: BTreeMap<String, usize>,
    pub config_hash: String,
    pub palette_hash: String,
    pub topology_hash: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CorpusRun {
    /// One line per manifest entry, ordered by image id.
    pub lines: Vec<RecordLine>,
    pub summary: RunSummary,
}

pub fn run_corpus(manifest: &CorpusManifest, analyzer: &Analyzer, exec: Execution) -> CorpusRun {
    let mut lines = map_items(&manifest.entries, exec, |e| analyzer.analyze_entry(e));
    lines.sort_by(|a, b| a.image_id().cmp(b.image_id()));
    let summary = summarize_run(&lines, analyzer);
    CorpusRun { lines, summary }
}

fn summarize_run(lines: &[RecordLine], analyzer: &Analyzer) -> RunSummary {
    let mut skipped_by_reason: BTreeMap<String, usize> = SkipReason::ALL.iter().map(|r| (r.to_string(), 0)).collect();
    let mut flagged: BTreeMap<String, usize> = BTreeMap::new();
    let mut ok = 0;
    for l in lines {
        match l {
            RecordLine::Ok(r) => {
                ok += 1;
                for f in &r.flags {
                    let name = f.split(':').next().unwrap_or(f);
                    *flagged.entry(name.to_string()).or_default() += 1;
                }
            }
            RecordLine::Skipped(s) => *skipped_by_reason.entry(s.reason.to_string()).or_default() += 1,
        }
    }
    RunSummary {
        total: lines.len(),
        ok,
        skipped: lines.len() - ok,
        skipped_by_reason,
        flagged,
        config_hash: analyzer.config_hash.clone(),
        palette_hash: analyzer.palette_hash.clone(),
        topology_hash: analyzer.topology_hash.clone(),
    }
}

/// Paths of the files written next to a record file.
pub fn companion_paths(records: &Path) -> (PathBuf, PathBuf) {
    (records.with_extension("csv"), records.with_extension("summary.json"))
}

/// Writes the JSON Lines records plus the CSV projection and run summary
/// next to it.
pub fn write_run(run: &CorpusRun, records_path: &Path) -> Result<()> {
    if let Some(dir) = records_path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    let mut buf = Vec::new();
    for l in &run.lines {
        buf.extend_from_slice(l.to_json_line().as_bytes());
        buf.push(b'\n');
    }
    std::fs::write(records_path, &buf).map_err(|e| Error::io(records_path, e))?;

    let (csv_path, summary_path) = companion_paths(records_path);
    let file = std::fs::File::create(&csv_path).map_err(|e| Error::io(&csv_path, e))?;
    write_csv(&run.lines, std::io::BufWriter::new(file))?;

    let mut f = std::fs::File::create(&summary_path).map_err(|e| Error::io(&summary_path, e))?;
    let json = serde_json::to_string_pretty(&run.summary).expect("summary serializes");
    writeln!(f, "{json}").map_err(|e| Error::io(&summary_path, e))?;
    Ok(())
}
