//! Synthetic face fixtures with known ground-truth skin color.
//!
//! A fixture is a flat skin ellipse with dark eyes/brows/nostrils and red
//! lips on a neutral background, plus a matching sidecar whose landmarks are
//! laid out from a [`LandmarkTopology`]. An optional diagonal cast multiplies
//! every encoded channel, simulating a global color shift in the scene light.

use std::fs;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::color::Rgb8;
use crate::error::{Error, Result};
use crate::geometry::{self, BBox, Point};
use crate::mask::{LandmarkSet, LandmarkTopology, LANDMARK_COUNT};
use crate::raster::ImageBuffer;
use crate::scales::PaletteSet;
use crate::sidecar::{Attributes, Face, FaceSidecar, LabelConfidence, RaceEstimate, SIDECAR_SCHEMA_VERSION};

pub const EYE: Rgb8 = Rgb8::new(58, 44, 40);
pub const BROW: Rgb8 = Rgb8::new(72, 52, 40);
pub const LIPS: Rgb8 = Rgb8::new(172, 82, 88);
pub const NOSTRIL: Rgb8 = Rgb8::new(40, 26, 24);
pub const NEUTRAL_BACKGROUND: Rgb8 = Rgb8::new(200, 200, 200);

/// Frontal face placement in pixel space.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FaceLayout {
    pub width: usize,
    pub height: usize,
    pub center: Point,
    pub face_width: f64,
    pub face_height: f64,
}

impl FaceLayout {
    pub fn centered(width: usize, height: usize) -> Self {
        Self {
            width,
            height,
            center: Point::new(width as f64 * 0.5, height as f64 * 0.55),
            face_width: width as f64 * 0.45,
            face_height: height as f64 * 0.55,
        }
    }

    pub fn bbox(&self) -> BBox {
        BBox {
            x: self.center.x - self.face_width / 2.0,
            y: self.center.y - self.face_height / 2.0,
            w: self.face_width,
            h: self.face_height,
        }
    }

    /// Maps face-relative coordinates (`[-1, 1]` spans the face box) to pixels.
    fn at(&self, u: f64, v: f64) -> Point {
        Point::new(self.center.x + u * self.face_width / 2.0, self.center.y + v * self.face_height / 2.0)
    }

    fn ring(&self, n: usize, cu: f64, cv: f64, ru: f64, rv: f64) -> Vec<Point> {
        (0..n)
            .map(|i| {
                let t = -std::f64::consts::FRAC_PI_2 + i as f64 * std::f64::consts::TAU / n as f64;
                self.at(cu + ru * t.cos(), cv + rv * t.sin())
            })
            .collect()
    }

    /// Pixel positions of all 468 landmarks.
    pub fn landmark_pixels(&self, topo: &LandmarkTopology) -> Vec<Point> {
        let mut pts = vec![self.at(0.0, 0.1); LANDMARK_COUNT];
        let mut place = |set: &[usize], ring: Vec<Point>| {
            for (&i, p) in set.iter().zip(ring) {
                pts[i] = p;
            }
        };
        place(&topo.face_oval, self.ring(topo.face_oval.len(), 0.0, 0.0, 1.0, 1.0));
        // subject's right eye sits on the image's left
        place(&topo.right_eye, self.ring(topo.right_eye.len(), -0.38, -0.18, 0.17, 0.07));
        place(&topo.left_eye, self.ring(topo.left_eye.len(), 0.38, -0.18, 0.17, 0.07));
        place(&topo.right_brow, self.ring(topo.right_brow.len(), -0.38, -0.40, 0.22, 0.05));
        place(&topo.left_brow, self.ring(topo.left_brow.len(), 0.38, -0.40, 0.22, 0.05));
        place(&topo.lips_outer, self.ring(topo.lips_outer.len(), 0.0, 0.52, 0.32, 0.11));
        for (k, nostril) in topo.nostrils.iter().enumerate() {
            let side = if k % 2 == 0 { -0.09 } else { 0.09 };
            place(nostril, self.ring(nostril.len(), side, 0.26, 0.05, 0.03));
        }
        place(&topo.right_cheek, self.ring(topo.right_cheek.len(), -0.5, 0.2, 0.1, 0.1));
        place(&topo.left_cheek, self.ring(topo.left_cheek.len(), 0.5, 0.2, 0.1, 0.1));
        let nb = topo.nasal_bridge.len().max(1);
        let bridge: Vec<Point> =
            (0..nb).map(|i| self.at(0.0, -0.2 + 0.35 * i as f64 / (nb.max(2) - 1) as f64)).collect();
        place(&topo.nasal_bridge, bridge);
        pts
    }

    pub fn landmarks(&self, topo: &LandmarkTopology) -> LandmarkSet {
        let norm = self.normalized_landmarks(topo);
        LandmarkSet::new(norm, self.bbox(), 0.99).expect("layout produces valid landmarks")
    }

    pub fn normalized_landmarks(&self, topo: &LandmarkTopology) -> Vec<Point> {
        self.landmark_pixels(topo)
            .into_iter()
            .map(|p| Point::new(p.x / self.width as f64, p.y / self.height as f64))
            .collect()
    }

    /// Skin region: the face oval grown by 8% of face height, which keeps all
    /// skin inside the background-exclusion zone.
    fn in_skin(&self, p: Point) -> bool {
        let grow = 0.08 * self.face_height;
        let rx = self.face_width / 2.0 + grow;
        let ry = self.face_height / 2.0 + grow;
        let dx = (p.x - self.center.x) / rx;
        let dy = (p.y - self.center.y) / ry;
        dx * dx + dy * dy <= 1.0
    }
}

/// Recipe for one synthetic face image.
#[derive(Debug, Clone, PartialEq)]
pub struct FlatSkinFixture {
    pub layout: FaceLayout,
    pub skin: Rgb8,
    pub background: Rgb8,
    /// Per-channel multiplicative cast applied to encoded values.
    pub cast: [f64; 3],
}

impl FlatSkinFixture {
    pub fn new(size: usize, skin: Rgb8) -> Self {
        Self { layout: FaceLayout::centered(size, size), skin, background: NEUTRAL_BACKGROUND, cast: [1.0; 3] }
    }

    pub fn with_cast(mut self, cast: [f64; 3]) -> Self {
        self.cast = cast;
        self
    }

    pub fn with_background(mut self, bg: Rgb8) -> Self {
        self.background = bg;
        self
    }

    pub fn render(&self, topo: &LandmarkTopology) -> ImageBuffer {
        let l = &self.layout;
        let mut img = ImageBuffer::filled(l.width, l.height, self.background).expect("non-empty layout");
        for y in 0..l.height {
            for x in 0..l.width {
                if l.in_skin(Point::new(x as f64 + 0.5, y as f64 + 0.5)) {
                    img.set(x, y, self.skin);
                }
            }
        }
        let pts = l.landmark_pixels(topo);
        let mut paint = |set: &[usize], c: Rgb8| {
            let poly = geometry::convex_hull(&set.iter().map(|&i| pts[i]).collect::<Vec<_>>());
            geometry::rasterize(&poly, l.width, l.height, 0.0, |x, y| img.set(x, y, c));
        };
        paint(&topo.left_brow, BROW);
        paint(&topo.right_brow, BROW);
        paint(&topo.left_eye, EYE);
        paint(&topo.right_eye, EYE);
        paint(&topo.lips_outer, LIPS);
        for n in &topo.nostrils {
            paint(n, NOSTRIL);
        }
        apply_cast(&img, self.cast)
    }

    pub fn sidecar(&self, image_id: &str, topo: &LandmarkTopology, attributes: Attributes) -> FaceSidecar {
        FaceSidecar {
            schema_version: SIDECAR_SCHEMA_VERSION,
            image_id: image_id.to_string(),
            width: self.layout.width,
            height: self.layout.height,
            faces: vec![Face {
                bbox: self.layout.bbox(),
                confidence: 0.99,
                landmarks: self.layout.normalized_landmarks(topo),
                attributes,
            }],
            attribute_semantics: Some("perceived".into()),
        }
    }
}

/// Multiplies each encoded channel by `cast`, rounding and saturating.
pub fn apply_cast(img: &ImageBuffer, cast: [f64; 3]) -> ImageBuffer {
    if cast == [1.0; 3] {
        return img.clone();
    }
    img.map(|p| {
        let c = p.channels();
        let f = |i: usize| (c[i] as f64 * cast[i]).round().clamp(0.0, 255.0) as u8;
        Rgb8::new(f(0), f(1), f(2))
    })
}

/// `count` casts drawn uniformly from `[lo, hi]³`.
pub fn random_casts(count: usize, lo: f64, hi: f64, seed: u64) -> Vec<[f64; 3]> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count).map(|_| [rng.random_range(lo..=hi), rng.random_range(lo..=hi), rng.random_range(lo..=hi)]).collect()
}

pub const FIXTURE_MODELS: [&str; 2] = ["GPT", "NanoBanana"];
pub const FIXTURE_PROMPTS: [&str; 4] = [
    "a human being, photorealistic",
    "a person, photorealistic",
    "an individual, photorealistic",
    "someone, photorealistic",
];

/// Writes the 10-image synthetic corpus (PNG images, sidecars and
/// `manifest.csv`) into `dir`. Image `i` carries MST reference tone `i + 1`.
pub fn write_fixture_corpus(dir: &Path, palettes: &PaletteSet, topo: &LandmarkTopology) -> Result<Vec<String>> {
    let images = dir.join("images");
    let sidecars = dir.join("sidecars");
    fs::create_dir_all(&images).map_err(|e| Error::io(&images, e))?;
    fs::create_dir_all(&sidecars).map_err(|e| Error::io(&sidecars, e))?;

    let mst = palettes.get("MST").ok_or_else(|| Error::Config("palette set lacks MST".into()))?;
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut manifest = String::from("image_path,sidecar_path,model,prompt\n");
    let mut ids = Vec::new();
    for i in 0..10 {
        let id = format!("fixture_{i:02}");
        let entry = &mst.entries[i % mst.entries.len()];
        let cast = if i % 3 == 1 {
            [rng.random_range(0.95..=1.05), rng.random_range(0.95..=1.05), rng.random_range(0.95..=1.05)]
        } else {
            [1.0; 3]
        };
        let fixture = FlatSkinFixture::new(256, entry.srgb).with_cast(cast);
        let man = i % 2 == 0;
        let attrs = Attributes {
            gender: Some(LabelConfidence { label: if man { "Man" } else { "Woman" }.into(), confidence: 0.9 }),
            race: Some(RaceEstimate {
                label: "white".into(),
                probs: [("white".to_string(), 0.8), ("asian".to_string(), 0.2)].into_iter().collect(),
            }),
            age: Some(20.0 + 2.0 * i as f64),
            expression: Some("neutral".into()),
        };
        let img_path = images.join(format!("{id}.png"));
        fixture.render(topo).save_png(&img_path)?;
        let sc_path = sidecars.join(format!("{id}.json"));
        let sc = fixture.sidecar(&id, topo, attrs);
        fs::write(&sc_path, sc.to_json()).map_err(|e| Error::io(&sc_path, e))?;
        manifest.push_str(&format!(
            "images/{id}.png,sidecars/{id}.json,{},\"{}\"\n",
            FIXTURE_MODELS[i % 2],
            FIXTURE_PROMPTS[(i / 2) % 4]
        ));
        ids.push(id);
    }
    let mpath = dir.join("manifest.csv");
    fs::write(&mpath, manifest).map_err(|e| Error::io(&mpath, e))?;
    Ok(ids)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn layout_landmarks_within_image() {
        let topo = LandmarkTopology::builtin();
        let lm = FaceLayout::centered(128, 128).landmarks(&topo);
        assert!(lm.points().iter().all(|p| (0.0..=1.0).contains(&p.x) && (0.0..=1.0).contains(&p.y)));
    }

    #[test]
    fn cast_is_per_channel() {
        let img = ImageBuffer::filled(2, 2, Rgb8::new(200, 200, 250)).unwrap();
        let c = apply_cast(&img, [1.0, 0.9, 1.2]);
        assert_eq!(c.get(0, 0), Rgb8::new(200, 180, 255));
    }

    #[test]
    fn render_contains_all_parts() {
        let topo = LandmarkTopology::builtin();
        let f = FlatSkinFixture::new(128, Rgb8::new(210, 160, 130));
        let img = f.render(&topo);
        let count = |c: Rgb8| img.pixels().iter().filter(|&&p| p == c).count();
        assert!(count(f.skin) > 2000);
        assert!(count(NEUTRAL_BACKGROUND) > 5000);
        assert!(count(EYE) > 0 && count(LIPS) > 0 && count(BROW) > 0 && count(NOSTRIL) > 0);
    }

    #[test]
    fn casts_are_seeded() {
        assert_eq!(random_casts(5, 0.85, 1.15, 3), random_casts(5, 0.85, 1.15, 3));
        assert!(random_casts(50, 0.85, 1.15, 3).iter().flatten().all(|&v| (0.85..=1.15).contains(&v)));
    }
}
