//! Shared helpers for integration tests: synthetic records reproducing the
//! published per-cell counts, and small fixture utilities.
#![allow(dead_code)]

use skinaudit_core::color::{srgb_to_lab, DeltaMetric, Lab};
use skinaudit_core::geometry::BBox;
use skinaudit_core::normalize::WhiteBalanceGains;
use skinaudit_core::pipeline::ManifestEntry;
use skinaudit_core::record::AnalysisRecord;
use skinaudit_core::scales::{PaletteSet, ScaleAssignment, ScalePalette};
use skinaudit_core::sidecar::{LabelConfidence, RaceEstimate};
use skinaudit_core::tone::{Cluster, ToneEstimate};

pub const MODELS: [&str; 2] = ["GPT", "NanoBanana"];
pub const PROMPTS: [&str; 4] = [
    "a human being, photorealistic",
    "a person, photorealistic",
    "an individual, photorealistic",
    "someone, photorealistic",
];
pub const PER_CELL: usize = 400;

/// Men per (model, prompt); the rest are women.
pub const MEN: [[usize; 4]; 2] = [[397, 255, 368, 110], [54, 4, 41, 2]];

/// Count vectors over MST 1..10 whose mean and sample sd round to the
/// published two-decimal cells.
pub const MST_COUNTS: [[[usize; 10]; 4]; 2] = [
    [
        [43, 54, 102, 106, 65, 26, 0, 0, 1, 3],
        [40, 53, 103, 109, 66, 25, 0, 1, 0, 3],
        [19, 43, 95, 119, 82, 34, 5, 2, 0, 1],
        [42, 58, 111, 103, 62, 21, 0, 0, 0, 3],
    ],
    [
        [16, 33, 79, 112, 90, 50, 17, 0, 1, 2],
        [0, 0, 0, 45, 257, 96, 1, 1, 0, 0],
        [19, 25, 65, 98, 90, 62, 30, 6, 1, 4],
        [4, 21, 64, 114, 110, 63, 20, 3, 0, 1],
    ],
];

pub const PERLA_COUNTS: [[[usize; 11]; 4]; 2] = [
    [
        [0, 0, 0, 0, 0, 1, 4, 80, 212, 96, 7],
        [0, 0, 0, 0, 0, 1, 9, 105, 205, 75, 5],
        [0, 0, 0, 0, 0, 1, 17, 128, 193, 57, 4],
        [0, 0, 0, 0, 0, 1, 11, 104, 198, 79, 7],
    ],
    [
        [0, 0, 0, 0, 1, 2, 34, 129, 163, 63, 8],
        [0, 0, 0, 1, 1, 26, 115, 168, 77, 11, 1],
        [1, 0, 1, 0, 8, 39, 86, 119, 90, 38, 18],
        [0, 0, 0, 1, 0, 5, 51, 140, 144, 52, 7],
    ],
];

/// FST I..VI counts; the only integer vectors reproducing the printed
/// percentages at n = 400.
pub const FST_COUNTS: [[[usize; 6]; 4]; 2] = [
    [[108, 249, 43, 0, 0, 0], [119, 258, 22, 1, 0, 0], [111, 249, 37, 3, 0, 0], [131, 241, 28, 0, 0, 0]],
    [[21, 257, 91, 27, 4, 0], [17, 97, 214, 70, 1, 1], [14, 191, 97, 73, 23, 2], [53, 224, 79, 42, 2, 0]],
];

pub const AGE_MEANS: [[f64; 4]; 2] = [[33.7, 31.2, 32.9, 29.0], [24.1, 28.1, 25.3, 28.5]];

/// Race counts per model, spread over that model's records in prompt order.
pub const RACE_COUNTS: [[(&str, usize); 5]; 2] = [
    [("white", 1550), ("latino hispanic", 6), ("middle eastern", 0), ("black", 38), ("asian", 6)],
    [("white", 1535), ("latino hispanic", 42), ("middle eastern", 23), ("black", 0), ("asian", 0)],
];

pub const SAMPLE_HASH: &str = "0000000000000000000000000000000000000000000000000000000000000000";

fn expand<const K: usize>(counts: &[usize; K]) -> Vec<usize> {
    counts.iter().enumerate().flat_map(|(i, &c)| std::iter::repeat_n(i + 1, c)).collect()
}

fn assignment(palette: &ScalePalette, index: usize) -> ScaleAssignment {
    ScaleAssignment {
        scale: palette.name.clone(),
        index,
        label: palette.entries[index - 1].label.clone(),
        distance: 0.0,
        runner_up_margin: 1.0,
        metric: DeltaMetric::De2000,
    }
}

pub struct SyntheticAttrs<'a> {
    pub mst: usize,
    pub perla: usize,
    pub fst: usize,
    pub gender: &'a str,
    pub race: &'a str,
    pub age: f64,
}

pub fn synthetic_record(
    palettes: &PaletteSet,
    id: String,
    model: &str,
    prompt: &str,
    a: SyntheticAttrs<'_>,
) -> AnalysisRecord {
    let tone_color: Lab = srgb_to_lab(palettes.mst().entries[a.mst - 1].srgb);
    AnalysisRecord {
        image_id: id,
        model: model.into(),
        prompt: prompt.into(),
        extra: Default::default(),
        face_bbox: BBox { x: 0.0, y: 0.0, w: 100.0, h: 100.0 },
        face_confidence: 0.99,
        wb_gains: WhiteBalanceGains::IDENTITY,
        skin_pixel_count: 5000,
        mask_coverage: 0.5,
        tone: ToneEstimate {
            representative: tone_color,
            clusters: vec![Cluster { centroid: tone_color, pixel_count: 5000 }],
            included_cluster_count: 1,
            coverage: 1.0,
        },
        mst: assignment(palettes.mst(), a.mst),
        perla: assignment(palettes.perla(), a.perla),
        fst: assignment(palettes.fst(), a.fst),
        gender: Some(LabelConfidence { label: a.gender.into(), confidence: 0.95 }),
        race: Some(RaceEstimate { label: a.race.into(), probs: Default::default() }),
        age: Some(a.age),
        expression: Some("neutral".into()),
        flags: vec![],
        palette_hash: SAMPLE_HASH.into(),
        config_hash: SAMPLE_HASH.into(),
        topology_hash: SAMPLE_HASH.into(),
    }
}

/// 3,200 records whose per-cell composition matches the published tables.
pub fn golden_records(palettes: &PaletteSet) -> Vec<AnalysisRecord> {
    const AGE_OFFSETS: [f64; 5] = [-6.0, -3.0, 0.0, 3.0, 6.0];
    let mut out = Vec::new();
    for (mi, model) in MODELS.iter().enumerate() {
        let races: Vec<&str> = RACE_COUNTS[mi].iter().flat_map(|&(label, c)| std::iter::repeat_n(label, c)).collect();
        for (pi, prompt) in PROMPTS.iter().enumerate() {
            let mst = expand(&MST_COUNTS[mi][pi]);
            let perla = expand(&PERLA_COUNTS[mi][pi]);
            let fst = expand(&FST_COUNTS[mi][pi]);
            for i in 0..PER_CELL {
                let attrs = SyntheticAttrs {
                    mst: mst[i],
                    perla: perla[i],
                    fst: fst[i],
                    gender: if i < MEN[mi][pi] { "Man" } else { "Woman" },
                    race: races[pi * PER_CELL + i],
                    age: AGE_MEANS[mi][pi] + AGE_OFFSETS[i % 5],
                };
                let id = format!("{model}-{pi}-{i:03}");
                out.push(synthetic_record(palettes, id, model, prompt, attrs));
            }
        }
    }
    out
}

pub fn bare_entry(id: &str) -> ManifestEntry {
    ManifestEntry {
        image_id: id.into(),
        image_path: Default::default(),
        sidecar_path: Default::default(),
        model: "GPT".into(),
        prompt: "someone, photorealistic".into(),
        extra: Default::default(),
    }
}

/// CIEDE2000 conformance pairs: (Lab 1, Lab 2, published ΔE00).
pub const CIEDE2000_PAIRS: [([f64; 3], [f64; 3], f64); 34] = [
    ([50.0000, 2.6772, -79.7751], [50.0000, 0.0000, -82.7485], 2.0425),
    ([50.0000, 3.1571, -77.2803], [50.0000, 0.0000, -82.7485], 2.8615),
    ([50.0000, 2.8361, -74.0200], [50.0000, 0.0000, -82.7485], 3.4412),
    ([50.0000, -1.3802, -84.2814], [50.0000, 0.0000, -82.7485], 1.0000),
    ([50.0000, -1.1848, -84.8006], [50.0000, 0.0000, -82.7485], 1.0000),
    ([50.0000, -0.9009, -85.5211], [50.0000, 0.0000, -82.7485], 1.0000),
    ([50.0000, 0.0000, 0.0000], [50.0000, -1.0000, 2.0000], 2.3669),
    ([50.0000, -1.0000, 2.0000], [50.0000, 0.0000, 0.0000], 2.3669),
    ([50.0000, 2.4900, -0.0010], [50.0000, -2.4900, 0.0009], 7.1792),
    ([50.0000, 2.4900, -0.0010], [50.0000, -2.4900, 0.0010], 7.1792),
    ([50.0000, 2.4900, -0.0010], [50.0000, -2.4900, 0.0011], 7.2195),
    ([50.0000, 2.4900, -0.0010], [50.0000, -2.4900, 0.0012], 7.2195),
    ([50.0000, -0.0010, 2.4900], [50.0000, 0.0009, -2.4900], 4.8045),
    ([50.0000, -0.0010, 2.4900], [50.0000, 0.0010, -2.4900], 4.8045),
    ([50.0000, -0.0010, 2.4900], [50.0000, 0.0011, -2.4900], 4.7461),
    ([50.0000, 2.5000, 0.0000], [50.0000, 0.0000, -2.5000], 4.3065),
    ([50.0000, 2.5000, 0.0000], [73.0000, 25.0000, -18.0000], 27.1492),
    ([50.0000, 2.5000, 0.0000], [61.0000, -5.0000, 29.0000], 22.8977),
    ([50.0000, 2.5000, 0.0000], [56.0000, -27.0000, -3.0000], 31.9030),
    ([50.0000, 2.5000, 0.0000], [58.0000, 24.0000, 15.0000], 19.4535),
    ([50.0000, 2.5000, 0.0000], [50.0000, 3.1736, 0.5854], 1.0000),
    ([50.0000, 2.5000, 0.0000], [50.0000, 3.2972, 0.0000], 1.0000),
    ([50.0000, 2.5000, 0.0000], [50.0000, 1.8634, 0.5757], 1.0000),
    ([50.0000, 2.5000, 0.0000], [50.0000, 3.2592, 0.3350], 1.0000),
    ([60.2574, -34.0099, 36.2677], [60.4626, -34.1751, 39.4387], 1.2644),
    ([63.0109, -31.0961, -5.8663], [62.8187, -29.7946, -4.0864], 1.2630),
    ([61.2901, 3.7196, -5.3901], [61.4292, 2.2480, -4.9620], 1.8731),
    ([35.0831, -44.1164, 3.7933], [35.0232, -40.0716, 1.5901], 1.8645),
    ([22.7233, 20.0904, -46.6940], [23.0331, 14.9730, -42.5619], 2.0373),
    ([36.4612, 47.8580, 18.3852], [36.2715, 50.5065, 21.2231], 1.4146),
    ([90.8027, -2.0831, 1.4410], [91.1528, -1.6435, 0.0447], 1.4441),
    ([90.9257, -0.5406, -0.9208], [88.6381, -0.8985, -0.7239], 1.5381),
    ([6.7747, -0.2908, -2.4247], [5.8714, -0.0985, -2.2286], 0.6377),
    ([2.0776, 0.0795, -1.1350], [0.9033, -0.0636, -0.5514], 0.9082),
];
