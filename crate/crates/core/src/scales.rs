//! Nearest-reference mapping onto the Monk (MST), PERLA and Fitzpatrick (FST)
//! skin tone scales.

use std::collections::HashSet;
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::color::{lab_to_srgb, srgb_to_lab, DeltaMetric, Lab, Rgb8};
use crate::digest::sha256_hex;
use crate::error::{Error, Result};

const DEFAULT_PALETTES: &str = include_str!("../config/palettes.json");

pub const PALETTE_SCHEMA_VERSION: u32 = 1;

/// Distances closer than this are treated as ties.
const TIE_EPSILON: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Orientation {
    /// Index 1 is the lightest (MST, FST).
    HigherIsDarker,
    /// Index 1 is the darkest (PERLA).
    HigherIsLighter,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PaletteEntry {
    pub label: String,
    pub lab: Lab,
    /// Display swatch; equals the configured hex when one was given.
    pub srgb: Rgb8,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScalePalette {
    pub name: String,
    pub orientation: Orientation,
    pub entries: Vec<PaletteEntry>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScaleAssignment {
    pub scale: String,
    /// 1-based position on the scale.
    pub index: usize,
    pub label: String,
    pub distance: f64,
    pub runner_up_margin: f64,
    pub metric: DeltaMetric,
}

impl fmt::Display for ScaleAssignment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {} (ΔE {:.2})", self.scale, self.label, self.distance)
    }
}

/// Expected entry count for each supported scale.
pub fn expected_size(name: &str) -> Option<usize> {
    match name {
        "MST" => Some(10),
        "PERLA" => Some(11),
        "FST" => Some(6),
        _ => None,
    }
}

impl ScalePalette {
    /// Position of entry `i` (0-based) from lightest to darkest.
    fn lightness_rank(&self, i: usize) -> usize {
        match self.orientation {
            Orientation::HigherIsDarker => i,
            Orientation::HigherIsLighter => self.entries.len() - 1 - i,
        }
    }

    /// Nearest reference under `metric`; on a tie the lighter entry wins.
    pub fn classify(&self, tone: Lab, metric: DeltaMetric) -> ScaleAssignment {
        let mut order: Vec<usize> = (0..self.entries.len()).collect();
        order.sort_by_key(|&i| self.lightness_rank(i));

        let mut best: Option<(usize, f64)> = None;
        let mut second = f64::INFINITY;
        for i in order {
            let d = metric.distance(tone, self.entries[i].lab);
            match best {
                None => best = Some((i, d)),
                Some((_, bd)) if d < bd - TIE_EPSILON => {
                    second = bd;
                    best = Some((i, d));
                }
                Some(_) => second = second.min(d),
            }
        }
        let (i, d) = best.expect("validated palettes are non-empty");
        ScaleAssignment {
            scale: self.name.clone(),
            index: i + 1,
            label: self.entries[i].label.clone(),
            distance: d,
            runner_up_margin: (second - d).max(0.0),
            metric,
        }
    }

    fn validate(&self, tolerance: f64) -> Result<()> {
        let bad = |message: String| Err(Error::InvalidPalette { palette: self.name.clone(), message });
        let Some(expected) = expected_size(&self.name) else {
            return bad("unknown scale (expected MST, PERLA or FST)".into());
        };
        if self.entries.len() != expected {
            return bad(format!("{} entries, expected {expected}", self.entries.len()));
        }
        let mut seen = HashSet::new();
        for e in &self.entries {
            if !seen.insert(e.label.as_str()) {
                return bad(format!("duplicate label `{}`", e.label));
            }
        }
        for (i, w) in self.entries.windows(2).enumerate() {
            let step = match self.orientation {
                Orientation::HigherIsDarker => w[0].lab.l - w[1].lab.l,
                Orientation::HigherIsLighter => w[1].lab.l - w[0].lab.l,
            };
            // `step` is positive when lightness moves the declared way
            let ok = if tolerance > 0.0 { step > -tolerance } else { step > 0.0 };
            if !ok {
                return bad(format!(
                    "entry `{}` breaks L* ordering ({:.2} -> {:.2})",
                    self.entries[i + 1].label,
                    w[0].lab.l,
                    w[1].lab.l
                ));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Deserialize, Serialize)]
struct PaletteFile {
    schema_version: u32,
    #[serde(default)]
    description: Option<String>,
    /// Allowed L* reversal between neighbours; 0 means strictly monotone.
    #[serde(default)]
    monotone_tolerance: f64,
    palettes: Vec<PaletteSpec>,
}

#[derive(Debug, Deserialize, Serialize)]
struct PaletteSpec {
    name: String,
    orientation: Orientation,
    entries: Vec<EntrySpec>,
}

#[derive(Debug, Deserialize, Serialize)]
struct EntrySpec {
    label: String,
    #[serde(default)]
    hex: Option<String>,
    #[serde(default)]
    lab: Option<[f64; 3]>,
}

/// The three validated palettes plus the hash of their source file.
#[derive(Debug, Clone, PartialEq)]
pub struct PaletteSet {
    pub palettes: Vec<ScalePalette>,
    pub hash: String,
}

impl PaletteSet {
    pub fn builtin() -> Self {
        Self::from_json(DEFAULT_PALETTES).expect("shipped palettes are valid")
    }

    pub fn builtin_json() -> &'static str {
        DEFAULT_PALETTES
    }

    pub fn load(path: &Path) -> Result<Self> {
        let s = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&s)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let file: PaletteFile = serde_json::from_str(s).map_err(|e| Error::parse("palette file", e))?;
        if file.schema_version != PALETTE_SCHEMA_VERSION {
            return Err(Error::parse("palette file", format!("unsupported schema_version {}", file.schema_version)));
        }
        if file.monotone_tolerance.is_nan() || file.monotone_tolerance < 0.0 {
            return Err(Error::parse("palette file", "monotone_tolerance must be >= 0"));
        }
        let mut palettes = Vec::with_capacity(file.palettes.len());
        for spec in file.palettes {
            let mut entries = Vec::with_capacity(spec.entries.len());
            for e in spec.entries {
                let (lab, srgb) = match (&e.hex, e.lab) {
                    (Some(h), None) => {
                        let rgb = Rgb8::from_hex(h).ok_or_else(|| Error::InvalidPalette {
                            palette: spec.name.clone(),
                            message: format!("entry `{}`: bad hex `{h}`", e.label),
                        })?;
                        (srgb_to_lab(rgb), rgb)
                    }
                    (None, Some([l, a, b])) => {
                        let lab = Lab::new(l, a, b);
                        (lab, lab_to_srgb(lab))
                    }
                    _ => {
                        return Err(Error::InvalidPalette {
                            palette: spec.name.clone(),
                            message: format!("entry `{}` needs exactly one of hex or lab", e.label),
                        })
                    }
                };
                entries.push(PaletteEntry { label: e.label, lab, srgb });
            }
            let p = ScalePalette { name: spec.name, orientation: spec.orientation, entries };
            p.validate(file.monotone_tolerance)?;
            palettes.push(p);
        }
        for name in ["MST", "PERLA", "FST"] {
            match palettes.iter().filter(|p| p.name == name).count() {
                1 => {}
                0 => return Err(Error::InvalidPalette { palette: name.into(), message: "missing".into() }),
                _ => return Err(Error::InvalidPalette { palette: name.into(), message: "defined twice".into() }),
            }
        }
        Ok(Self { palettes, hash: sha256_hex(s.as_bytes()) })
    }

    pub fn get(&self, name: &str) -> Option<&ScalePalette> {
        self.palettes.iter().find(|p| p.name == name)
    }

    pub fn mst(&self) -> &ScalePalette {
        self.get("MST").expect("validated")
    }

    pub fn perla(&self) -> &ScalePalette {
        self.get("PERLA").expect("validated")
    }

    pub fn fst(&self) -> &ScalePalette {
        self.get("FST").expect("validated")
    }
}

pub fn classify(tone: Lab, palette: &ScalePalette, metric: DeltaMetric) -> ScaleAssignment {
    palette.classify(tone, metric)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mutate(f: impl FnOnce(&mut serde_json::Value)) -> String {
        let mut v: serde_json::Value = serde_json::from_str(DEFAULT_PALETTES).unwrap();
        f(&mut v);
        v.to_string()
    }

    #[test]
    fn builtin_sizes() {
        let set = PaletteSet::builtin();
        let sizes: Vec<usize> = set.palettes.iter().map(|p| p.entries.len()).collect();
        assert_eq!(sizes, vec![10, 11, 6]);
        assert_eq!(set.hash.len(), 64);
        assert_eq!(set.mst().entries[0].srgb, Rgb8::new(0xf6, 0xed, 0xe4));
    }

    #[test]
    fn exact_hit() {
        let set = PaletteSet::builtin();
        let tone = set.mst().entries[2].lab;
        let a = set.mst().classify(tone, DeltaMetric::De2000);
        assert_eq!(a.index, 3);
        assert_eq!(a.distance, 0.0);
        assert!(a.runner_up_margin > 0.0);
    }

    #[test]
    fn self_consistency_all_palettes() {
        let set = PaletteSet::builtin();
        for metric in [DeltaMetric::De2000, DeltaMetric::De76] {
            for p in &set.palettes {
                for (i, e) in p.entries.iter().enumerate() {
                    let a = p.classify(e.lab, metric);
                    assert_eq!(a.index, i + 1, "{} {}", p.name, e.label);
                    assert_eq!(a.label, e.label);
                }
            }
        }
    }

    #[test]
    fn midpoint_tie_goes_lighter() {
        let set = PaletteSet::builtin();
        let fst = set.fst();
        let (a, b) = (fst.entries[1].lab, fst.entries[2].lab);
        let mid = Lab::new((a.l + b.l) / 2.0, (a.a + b.a) / 2.0, (a.b + b.b) / 2.0);
        let d1 = DeltaMetric::De76.distance(mid, a);
        let d2 = DeltaMetric::De76.distance(mid, b);
        assert!((d1 - d2).abs() < 1e-9);
        assert_eq!(fst.classify(mid, DeltaMetric::De76).label, "II");

        // PERLA: higher index is lighter
        let perla = set.perla();
        let (a, b) = (perla.entries[4].lab, perla.entries[5].lab);
        let mid = Lab::new((a.l + b.l) / 2.0, (a.a + b.a) / 2.0, (a.b + b.b) / 2.0);
        assert_eq!(perla.classify(mid, DeltaMetric::De76).index, 6);
    }

    #[test]
    fn neutral_ramp_is_monotone() {
        let set = PaletteSet::builtin();
        let mut prev_mst = 0;
        let mut prev_perla = usize::MAX;
        let mut l = 95.0;
        while l >= 15.0 {
            let tone = Lab::new(l, 0.0, 0.0);
            let m = set.mst().classify(tone, DeltaMetric::De2000).index;
            let p = set.perla().classify(tone, DeltaMetric::De2000).index;
            assert!(m >= prev_mst, "MST went {prev_mst} -> {m} at L={l}");
            assert!(p <= prev_perla, "PERLA went {prev_perla} -> {p} at L={l}");
            prev_mst = m;
            prev_perla = p;
            l -= 0.5;
        }
    }

    #[test]
    fn rejects_wrong_count() {
        let s = mutate(|v| {
            v["palettes"][0]["entries"].as_array_mut().unwrap().pop();
        });
        let err = PaletteSet::from_json(&s).unwrap_err();
        assert!(matches!(err, Error::InvalidPalette { ref palette, .. } if palette == "MST"), "{err}");
    }

    #[test]
    fn rejects_non_monotone() {
        let s = mutate(|v| {
            v["palettes"][2]["entries"][3]["hex"] = "#ffffff".into();
        });
        let err = PaletteSet::from_json(&s).unwrap_err().to_string();
        assert!(err.contains("FST") && err.contains("`IV`"), "{err}");

        // strict ordering when no tolerance is configured
        let s = mutate(|v| {
            v.as_object_mut().unwrap().remove("monotone_tolerance");
        });
        let err = PaletteSet::from_json(&s).unwrap_err().to_string();
        assert!(err.contains("MST") && err.contains("`3`"), "{err}");
    }

    #[test]
    fn rejects_duplicate_labels() {
        let s = mutate(|v| {
            v["palettes"][2]["entries"][5]["label"] = "V".into();
        });
        let err = PaletteSet::from_json(&s).unwrap_err().to_string();
        assert!(err.contains("duplicate label `V`"), "{err}");
    }

    #[test]
    fn lab_entries_accepted() {
        let s = mutate(|v| {
            v["palettes"][2]["entries"][0] = serde_json::json!({"label": "I", "lab": [92.0, 5.0, 8.0]});
        });
        let set = PaletteSet::from_json(&s).unwrap();
        assert_eq!(set.fst().entries[0].lab, Lab::new(92.0, 5.0, 8.0));
        assert_ne!(set.hash, PaletteSet::builtin().hash);
    }
}
