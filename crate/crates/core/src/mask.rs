//! Skin mask construction from dense face landmarks.
//!
//! The mask is the convex hull of the skin-bearing landmarks united with a
//! tapered forehead trapezoid, minus dilated eye, brow, lip and nostril
//! polygons. Feature subtraction happens after the union, so growing the
//! forehead never re-admits feature pixels.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::color::srgb_to_lab;
use crate::error::{Error, Result};
use crate::geometry::{self, BBox, Point};
use crate::raster::ImageBuffer;

pub const LANDMARK_COUNT: usize = 468;

/// Pixel count at which `min_skin_pixels` is specified; the threshold scales
/// linearly with image area.
pub const REFERENCE_AREA: f64 = 1024.0 * 1024.0;

const DEFAULT_TOPOLOGY: &str = include_str!("../config/topology.json");

/// 468 landmarks normalized to `[0, 1]` image coordinates, plus the face box
/// in pixels.
#[derive(Debug, Clone, PartialEq)]
pub struct LandmarkSet {
    points: Vec<Point>,
    pub face_bbox: BBox,
    pub confidence: f64,
}

impl LandmarkSet {
    pub fn new(points: Vec<Point>, face_bbox: BBox, confidence: f64) -> Result<Self> {
        if points.len() != LANDMARK_COUNT {
            return Err(Error::InvalidLandmarks(format!("expected {LANDMARK_COUNT} points, found {}", points.len())));
        }
        if let Some(i) = points.iter().position(|p| !p.x.is_finite() || !p.y.is_finite()) {
            return Err(Error::InvalidLandmarks(format!("point {i} is not finite")));
        }
        if !(0.0..=1.0).contains(&confidence) {
            return Err(Error::InvalidLandmarks(format!("confidence {confidence} outside [0, 1]")));
        }
        Ok(Self { points, face_bbox, confidence })
    }

    pub fn points(&self) -> &[Point] {
        &self.points
    }

    /// Landmarks scaled to pixel coordinates.
    pub fn to_pixels(&self, width: usize, height: usize) -> Vec<Point> {
        self.points.iter().map(|p| Point::new(p.x * width as f64, p.y * height as f64)).collect()
    }
}

/// Named landmark index sets. Loaded from a versioned JSON file so the
/// geometry can be audited and swapped without recompiling.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LandmarkTopology {
    pub schema_version: u32,
    pub name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub description: Option<String>,
    pub face_oval: Vec<usize>,
    pub left_eye: Vec<usize>,
    pub right_eye: Vec<usize>,
    pub left_brow: Vec<usize>,
    pub right_brow: Vec<usize>,
    pub lips_outer: Vec<usize>,
    pub nostrils: Vec<Vec<usize>>,
    #[serde(default)]
    pub nasal_bridge: Vec<usize>,
    #[serde(default)]
    pub left_cheek: Vec<usize>,
    #[serde(default)]
    pub right_cheek: Vec<usize>,
    pub skin_hull_basis: Vec<usize>,
}

impl LandmarkTopology {
    pub const SCHEMA_VERSION: u32 = 1;

    /// The shipped face-mesh topology.
    pub fn builtin() -> Self {
        Self::from_json(DEFAULT_TOPOLOGY).expect("shipped topology is valid")
    }

    pub fn builtin_json() -> &'static str {
        DEFAULT_TOPOLOGY
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let topo: Self = serde_json::from_str(s).map_err(|e| Error::InvalidTopology(e.to_string()))?;
        topo.validate()?;
        Ok(topo)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let s = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&s)
    }

    /// Feature polygons subtracted from the skin region.
    pub fn features(&self) -> Vec<(String, &[usize])> {
        let mut out: Vec<(String, &[usize])> = vec![
            ("left_eye".into(), &self.left_eye),
            ("right_eye".into(), &self.right_eye),
            ("left_brow".into(), &self.left_brow),
            ("right_brow".into(), &self.right_brow),
            ("lips_outer".into(), &self.lips_outer),
        ];
        for (i, n) in self.nostrils.iter().enumerate() {
            out.push((format!("nostril_{i}"), n));
        }
        out
    }

    pub fn validate(&self) -> Result<()> {
        if self.schema_version != Self::SCHEMA_VERSION {
            return Err(Error::InvalidTopology(format!("unsupported schema_version {}", self.schema_version)));
        }
        let named: Vec<(String, &[usize])> = [
            ("face_oval".to_string(), self.face_oval.as_slice()),
            ("nasal_bridge".to_string(), &self.nasal_bridge),
            ("left_cheek".to_string(), &self.left_cheek),
            ("right_cheek".to_string(), &self.right_cheek),
            ("skin_hull_basis".to_string(), &self.skin_hull_basis),
        ]
        .into_iter()
        .chain(self.features())
        .collect();
        for (name, set) in &named {
            if let Some(&i) = set.iter().find(|&&i| i >= LANDMARK_COUNT) {
                return Err(Error::InvalidTopology(format!("{name}: index {i} out of range")));
            }
        }
        if self.skin_hull_basis.len() < 3 {
            return Err(Error::InvalidTopology("skin_hull_basis needs at least 3 indices".into()));
        }
        for (name, set) in self.features() {
            if set.is_empty() {
                return Err(Error::InvalidTopology(format!("{name} is empty")));
            }
            if let Some(i) = set.iter().find(|i| self.skin_hull_basis.contains(i)) {
                return Err(Error::InvalidTopology(format!("{name} shares index {i} with skin_hull_basis")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MaskParams {
    /// Forehead extension as a fraction of face height.
    pub forehead_scale: f64,
    /// Top-edge width of the forehead trapezoid relative to its base.
    pub forehead_taper: f64,
    pub feature_dilation_px: u32,
    /// Minimum skin pixels at 1024×1024; scaled by image area.
    pub min_skin_pixels: usize,
    /// Drop masked pixels darker than this L* (facial-hair proxy). Off by default.
    pub dark_pixel_floor: Option<f64>,
}

impl Default for MaskParams {
    fn default() -> Self {
        Self {
            forehead_scale: 0.25,
            forehead_taper: 0.70,
            feature_dilation_px: 3,
            min_skin_pixels: 500,
            dark_pixel_floor: None,
        }
    }
}

impl MaskParams {
    pub fn validate(&self) -> Result<()> {
        if self.forehead_scale.is_nan() || self.forehead_scale < 0.0 {
            return Err(Error::Config("forehead_scale must be >= 0".into()));
        }
        if !(self.forehead_taper > 0.0 && self.forehead_taper <= 1.0) {
            return Err(Error::Config("forehead_taper must be in (0, 1]".into()));
        }
        Ok(())
    }

    pub fn min_skin_pixels_for(&self, width: usize, height: usize) -> usize {
        let scaled = self.min_skin_pixels as f64 * (width * height) as f64 / REFERENCE_AREA;
        (scaled.ceil() as usize).max(1)
    }
}

/// Boolean skin raster.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SkinMask {
    width: usize,
    height: usize,
    bits: Vec<bool>,
    skin_pixel_count: usize,
}

impl SkinMask {
    pub fn empty(width: usize, height: usize) -> Self {
        Self { width, height, bits: vec![false; width * height], skin_pixel_count: 0 }
    }

    pub fn from_bits(width: usize, height: usize, bits: Vec<bool>) -> Result<Self> {
        if bits.len() != width * height {
            return Err(Error::DimensionMismatch { expected: (width, height), found: (bits.len(), 1) });
        }
        let skin_pixel_count = bits.iter().filter(|&&b| b).count();
        Ok(Self { width, height, bits, skin_pixel_count })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn skin_pixel_count(&self) -> usize {
        self.skin_pixel_count
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    pub fn contains(&self, x: usize, y: usize) -> bool {
        x < self.width && y < self.height && self.bits[y * self.width + x]
    }

    fn set(&mut self, x: usize, y: usize, on: bool) {
        let i = y * self.width + x;
        if self.bits[i] != on {
            self.bits[i] = on;
            if on {
                self.skin_pixel_count += 1;
            } else {
                self.skin_pixel_count -= 1;
            }
        }
    }

    /// Row-major indices of set pixels.
    pub fn indices(&self) -> impl Iterator<Item = usize> + '_ {
        self.bits.iter().enumerate().filter(|(_, &b)| b).map(|(i, _)| i)
    }

    /// Clears masked pixels whose L* is below `floor`.
    pub fn drop_dark_pixels(&mut self, img: &ImageBuffer, floor: f64) -> Result<usize> {
        if img.dims() != self.dims() {
            return Err(Error::DimensionMismatch { expected: self.dims(), found: img.dims() });
        }
        let before = self.skin_pixel_count;
        for (i, p) in img.pixels().iter().enumerate() {
            if self.bits[i] && srgb_to_lab(*p).l < floor {
                self.bits[i] = false;
                self.skin_pixel_count -= 1;
            }
        }
        Ok(before - self.skin_pixel_count)
    }
}

/// Trapezoid rising from the chord `left`–`right` by `scale × face_height`,
/// with its top edge `taper × base width` wide and centered over the chord.
/// Clipped to `[0, width] × [0, height]`.
pub fn forehead_trapezoid(
    left: Point,
    right: Point,
    face_height: f64,
    params: &MaskParams,
    width: usize,
    height: usize,
) -> Vec<Point> {
    let rise = params.forehead_scale * face_height;
    if rise <= 0.0 {
        return Vec::new();
    }
    let (left, right) = if left.x <= right.x { (left, right) } else { (right, left) };
    let cx = 0.5 * (left.x + right.x);
    let top_y = 0.5 * (left.y + right.y) - rise;
    let half_top = 0.5 * params.forehead_taper * (right.x - left.x);
    let quad = [left, right, Point::new(cx + half_top, top_y), Point::new(cx - half_top, top_y)];
    geometry::clip_to_rect(&quad, width as f64, height as f64)
}

/// Forehead extension anchored on the uppermost skin-hull landmarks: the
/// left- and rightmost of the top 10% (at least two) of `hull_points`.
pub fn forehead_quad(
    hull_points: &[Point],
    face_height: f64,
    params: &MaskParams,
    width: usize,
    height: usize,
) -> Vec<Point> {
    if hull_points.len() < 2 || params.forehead_scale <= 0.0 || face_height <= 0.0 {
        return Vec::new();
    }
    let mut order: Vec<usize> = (0..hull_points.len()).collect();
    order.sort_by(|&i, &j| hull_points[i].y.total_cmp(&hull_points[j].y).then(i.cmp(&j)));
    let take = ((hull_points.len() as f64 * 0.1).ceil() as usize).max(2);
    let top = &order[..take.min(order.len())];
    let pick = |better: fn(f64, f64) -> bool| {
        let mut best = top[0];
        for &i in &top[1..] {
            if better(hull_points[i].x, hull_points[best].x) {
                best = i;
            }
        }
        hull_points[best]
    };
    let left = pick(|a, b| a < b);
    let right = pick(|a, b| a > b);
    forehead_trapezoid(left, right, face_height, params, width, height)
}

fn gather(points: &[Point], indices: &[usize]) -> Vec<Point> {
    indices.iter().map(|&i| points[i]).collect()
}

/// Builds the high-confidence skin mask for one face.
pub fn build_skin_mask(
    lm: &LandmarkSet,
    width: usize,
    height: usize,
    topo: &LandmarkTopology,
    params: &MaskParams,
) -> Result<SkinMask> {
    if width == 0 || height == 0 {
        return Err(Error::EmptyImage);
    }
    params.validate()?;
    let pts = lm.to_pixels(width, height);
    let basis = gather(&pts, &topo.skin_hull_basis);
    let hull = geometry::convex_hull(&basis);
    let forehead = forehead_quad(&basis, lm.face_bbox.h, params, width, height);

    let mut mask = SkinMask::empty(width, height);
    geometry::rasterize(&hull, width, height, 0.0, |x, y| mask.set(x, y, true));
    geometry::rasterize(&forehead, width, height, 0.0, |x, y| mask.set(x, y, true));

    let dilation = params.feature_dilation_px as f64;
    for (_, set) in topo.features() {
        let poly = geometry::convex_hull(&gather(&pts, set));
        geometry::rasterize(&poly, width, height, dilation, |x, y| mask.set(x, y, false));
    }

    let required = params.min_skin_pixels_for(width, height);
    if mask.skin_pixel_count < required {
        return Err(Error::InsufficientSkinArea { found: mask.skin_pixel_count, required });
    }
    Ok(mask)
}

/// Skin pixels per unit of face-box area.
pub fn mask_coverage(mask: &SkinMask, face_bbox: &BBox) -> Result<f64> {
    let area = face_bbox.area();
    if area <= 0.0 {
        return Err(Error::ZeroAreaBox);
    }
    Ok(mask.skin_pixel_count as f64 / area)
}

/// Region excluded from the white-balance background sample: the hull of all
/// landmarks grown by a fraction of the face height.
#[derive(Debug, Clone, PartialEq)]
pub struct FaceHull {
    pub hull: Vec<Point>,
    pub dilation: f64,
}

impl FaceHull {
    pub fn from_landmarks(lm: &LandmarkSet, width: usize, height: usize, dilation_fraction: f64) -> Self {
        let hull = geometry::convex_hull(&lm.to_pixels(width, height));
        Self { hull, dilation: dilation_fraction * lm.face_bbox.h.max(0.0) }
    }

    /// Per-pixel exclusion raster (`true` = face region).
    pub fn rasterize(&self, width: usize, height: usize) -> Vec<bool> {
        let mut bits = vec![false; width * height];
        geometry::rasterize(&self.hull, width, height, self.dilation, |x, y| bits[y * width + x] = true);
        bits
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::FaceLayout;

    fn layout() -> (LandmarkSet, LandmarkTopology) {
        let topo = LandmarkTopology::builtin();
        let lm = FaceLayout::centered(256, 256).landmarks(&topo);
        (lm, topo)
    }

    #[test]
    fn builtin_topology_is_valid() {
        let t = LandmarkTopology::builtin();
        assert_eq!(t.features().len(), 7);
        assert_eq!(t.face_oval.len(), 36);
    }

    #[test]
    fn topology_rejects_overlap_and_range() {
        let mut t = LandmarkTopology::builtin();
        t.left_eye.push(t.skin_hull_basis[0]);
        assert!(matches!(t.validate(), Err(Error::InvalidTopology(_))));

        let mut t = LandmarkTopology::builtin();
        t.lips_outer.push(468);
        assert!(t.validate().is_err());
    }

    #[test]
    fn eye_excluded_cheek_included() {
        let (lm, topo) = layout();
        let mask = build_skin_mask(&lm, 256, 256, &topo, &MaskParams::default()).unwrap();
        let pts = lm.to_pixels(256, 256);
        let eye = geometry::centroid(&gather(&pts, &topo.left_eye));
        assert!(!mask.contains(eye.x as usize, eye.y as usize));
        let cheek = geometry::centroid(&gather(&pts, &topo.left_cheek));
        assert!(mask.contains(cheek.x as usize, cheek.y as usize));
        let rcheek = geometry::centroid(&gather(&pts, &topo.right_cheek));
        assert!(mask.contains(rcheek.x as usize, rcheek.y as usize));
    }

    #[test]
    fn collapsed_landmarks_fail() {
        let topo = LandmarkTopology::builtin();
        let lm = LandmarkSet::new(
            vec![Point::new(0.5, 0.5); LANDMARK_COUNT],
            BBox { x: 100.0, y: 100.0, w: 50.0, h: 50.0 },
            0.9,
        )
        .unwrap();
        let err = build_skin_mask(&lm, 256, 256, &topo, &MaskParams::default()).unwrap_err();
        assert!(matches!(err, Error::InsufficientSkinArea { found: 0, .. }));
    }

    #[test]
    fn landmark_count_enforced() {
        assert!(LandmarkSet::new(vec![Point::default(); 467], BBox::default(), 0.5).is_err());
        let mut pts = vec![Point::default(); LANDMARK_COUNT];
        pts[3].x = f64::NAN;
        assert!(LandmarkSet::new(pts, BBox::default(), 0.5).is_err());
    }

    #[test]
    fn trapezoid_hand_geometry() {
        let p = MaskParams::default();
        let quad = forehead_trapezoid(Point::new(100.0, 200.0), Point::new(300.0, 200.0), 400.0, &p, 1024, 1024);
        assert_eq!(
            quad,
            vec![
                Point::new(100.0, 200.0),
                Point::new(300.0, 200.0),
                Point::new(270.0, 100.0),
                Point::new(130.0, 100.0),
            ]
        );
    }

    #[test]
    fn trapezoid_clipped_at_top_edge() {
        let p = MaskParams::default();
        let quad = forehead_trapezoid(Point::new(100.0, 10.0), Point::new(300.0, 10.0), 400.0, &p, 1024, 1024);
        assert!(!quad.is_empty());
        assert!(quad.iter().all(|q| q.y >= 0.0));
        assert!(quad.iter().any(|q| q.y == 0.0));
    }

    #[test]
    fn zero_scale_disables_forehead() {
        let (lm, topo) = layout();
        let params = MaskParams { forehead_scale: 0.0, ..MaskParams::default() };
        let basis = gather(&lm.to_pixels(256, 256), &topo.skin_hull_basis);
        assert!(forehead_quad(&basis, lm.face_bbox.h, &params, 256, 256).is_empty());

        // plain hull minus features
        let mask = build_skin_mask(&lm, 256, 256, &topo, &params).unwrap();
        let hull = geometry::convex_hull(&basis);
        let mut expected = SkinMask::empty(256, 256);
        geometry::rasterize(&hull, 256, 256, 0.0, |x, y| expected.set(x, y, true));
        for (_, set) in topo.features() {
            let poly = geometry::convex_hull(&gather(&lm.to_pixels(256, 256), set));
            geometry::rasterize(&poly, 256, 256, 3.0, |x, y| expected.set(x, y, false));
        }
        assert_eq!(mask, expected);
    }

    #[test]
    fn forehead_is_monotone_in_scale() {
        let (lm, topo) = layout();
        let mut prev: Option<SkinMask> = None;
        for scale in [0.0, 0.1, 0.25, 0.4] {
            let params = MaskParams { forehead_scale: scale, ..MaskParams::default() };
            let m = build_skin_mask(&lm, 256, 256, &topo, &params).unwrap();
            if let Some(p) = &prev {
                assert!(p.indices().all(|i| m.bits()[i]));
                assert!(m.skin_pixel_count() >= p.skin_pixel_count());
            }
            prev = Some(m);
        }
    }

    #[test]
    fn no_pixel_inside_dilated_features() {
        let (lm, topo) = layout();
        let params = MaskParams::default();
        let mask = build_skin_mask(&lm, 256, 256, &topo, &params).unwrap();
        let pts = lm.to_pixels(256, 256);
        for (name, set) in topo.features() {
            let poly = geometry::convex_hull(&gather(&pts, set));
            for i in mask.indices() {
                let c = Point::new((i % 256) as f64 + 0.5, (i / 256) as f64 + 0.5);
                let inside = geometry::polygon_contains(&poly, c) || geometry::boundary_distance(&poly, c) <= 3.0;
                assert!(!inside, "{name} leaks pixel {i}");
            }
        }
    }

    #[test]
    fn coverage_counts() {
        let bbox = BBox { x: 0.0, y: 0.0, w: 10.0, h: 10.0 };
        let full = SkinMask::from_bits(10, 10, vec![true; 100]).unwrap();
        assert_eq!(mask_coverage(&full, &bbox).unwrap(), 1.0);
        assert_eq!(mask_coverage(&SkinMask::empty(10, 10), &bbox).unwrap(), 0.0);
        let half = SkinMask::from_bits(10, 10, (0..100).map(|i| i < 50).collect()).unwrap();
        assert!((mask_coverage(&half, &bbox).unwrap() - 0.5).abs() <= 0.01);
        assert!(matches!(mask_coverage(&full, &BBox { x: 0.0, y: 0.0, w: 0.0, h: 5.0 }), Err(Error::ZeroAreaBox)));
    }

    #[test]
    fn min_pixels_scale_with_area() {
        let p = MaskParams::default();
        assert_eq!(p.min_skin_pixels_for(1024, 1024), 500);
        assert_eq!(p.min_skin_pixels_for(512, 512), 125);
    }

    #[test]
    fn deterministic_raster() {
        let (lm, topo) = layout();
        let a = build_skin_mask(&lm, 256, 256, &topo, &MaskParams::default()).unwrap();
        let b = build_skin_mask(&lm, 256, 256, &topo, &MaskParams::default()).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn dark_floor_drops_pixels() {
        use crate::color::Rgb8;
        let mut img = ImageBuffer::filled(4, 1, Rgb8::new(200, 160, 140)).unwrap();
        img.set(1, 0, Rgb8::new(20, 15, 10));
        let mut mask = SkinMask::from_bits(4, 1, vec![true; 4]).unwrap();
        assert_eq!(mask.drop_dark_pixels(&img, 25.0).unwrap(), 1);
        assert_eq!(mask.skin_pixel_count(), 3);
        assert!(!mask.contains(1, 0));
    }
}
