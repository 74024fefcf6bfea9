//! Illumination normalization: CLAHE on L*, an equal-weight blend with the
//! original lightness, then white balance referenced to the brightest
//! background pixels outside the face.

use serde::{Deserialize, Serialize};

use crate::color::{lab_to_srgb, srgb_to_lab, Lab, Rgb8};
use crate::error::{Error, Result};
use crate::mask::FaceHull;
use crate::raster::ImageBuffer;
use crate::sidecar::Face;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct NormalizationParams {
    pub clahe_clip_limit: f64,
    /// Tiles across and down.
    pub clahe_tile_grid: (usize, usize),
    pub blend_alpha: f64,
    /// Fraction of background pixels (by luminance) pooled as the white reference.
    pub bright_fraction: f64,
    pub gain_clamp: (f64, f64),
    pub min_background_pixels: usize,
    /// Face-hull growth for background exclusion, as a fraction of face height.
    pub face_dilation_fraction: f64,
}

impl Default for NormalizationParams {
    fn default() -> Self {
        Self {
            clahe_clip_limit: 2.0,
            clahe_tile_grid: (8, 8),
            blend_alpha: 0.5,
            bright_fraction: 0.05,
            gain_clamp: (0.5, 2.0),
            min_background_pixels: 1000,
            face_dilation_fraction: 0.10,
        }
    }
}

impl NormalizationParams {
    pub fn validate(&self) -> Result<()> {
        let fail = |m: &str| Err(Error::Config(m.into()));
        if self.clahe_clip_limit.is_nan() || self.clahe_clip_limit <= 0.0 {
            return fail("clahe_clip_limit must be positive");
        }
        if self.clahe_tile_grid.0 == 0 || self.clahe_tile_grid.1 == 0 {
            return fail("clahe_tile_grid must be at least 1x1");
        }
        if !(0.0..=1.0).contains(&self.blend_alpha) {
            return fail("blend_alpha must be in [0, 1]");
        }
        if !(self.bright_fraction > 0.0 && self.bright_fraction <= 1.0) {
            return fail("bright_fraction must be in (0, 1]");
        }
        let (lo, hi) = self.gain_clamp;
        if !(lo > 0.0 && lo <= 1.0 && hi >= 1.0) {
            return fail("gain_clamp must satisfy 0 < lo <= 1 <= hi");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WhiteBalanceGains {
    pub r: f64,
    pub g: f64,
    pub b: f64,
}

impl WhiteBalanceGains {
    pub const IDENTITY: Self = Self { r: 1.0, g: 1.0, b: 1.0 };

    pub fn as_array(&self) -> [f64; 3] {
        [self.r, self.g, self.b]
    }
}

impl Default for WhiteBalanceGains {
    fn default() -> Self {
        Self::IDENTITY
    }
}

/// Planar CIELAB image.
#[derive(Debug, Clone, PartialEq)]
pub struct LabImage {
    pub width: usize,
    pub height: usize,
    pub l: Vec<f64>,
    pub a: Vec<f64>,
    pub b: Vec<f64>,
}

impl LabImage {
    pub fn from_rgb(img: &ImageBuffer) -> Self {
        let n = img.len();
        let (mut l, mut a, mut b) = (Vec::with_capacity(n), Vec::with_capacity(n), Vec::with_capacity(n));
        for &p in img.pixels() {
            let c = srgb_to_lab(p);
            l.push(c.l);
            a.push(c.a);
            b.push(c.b);
        }
        Self { width: img.width(), height: img.height(), l, a, b }
    }

    pub fn to_rgb(&self) -> ImageBuffer {
        let pixels = (0..self.l.len()).map(|i| lab_to_srgb(Lab::new(self.l[i], self.a[i], self.b[i]))).collect();
        ImageBuffer::new(self.width, self.height, pixels).expect("dimensions preserved")
    }

    /// Mixes lightness planes; chroma is taken from `self` unchanged.
    pub fn blend_lightness(&self, processed: &LabImage, alpha: f64) -> Result<LabImage> {
        if (self.width, self.height) != (processed.width, processed.height) {
            return Err(Error::DimensionMismatch {
                expected: (self.width, self.height),
                found: (processed.width, processed.height),
            });
        }
        let l = self.l.iter().zip(&processed.l).map(|(&x, &y)| (1.0 - alpha) * x + alpha * y).collect();
        Ok(LabImage { width: self.width, height: self.height, l, a: self.a.clone(), b: self.b.clone() })
    }
}

fn l_to_bin(l: f64) -> u8 {
    (l * 255.0 / 100.0).round().clamp(0.0, 255.0) as u8
}

fn reflect101(i: usize, n: usize) -> usize {
    if n == 1 {
        return 0;
    }
    let period = 2 * n - 2;
    let r = i % period;
    if r >= n {
        period - r
    } else {
        r
    }
}

/// Per-tile lookup table: clipped histogram, uniform redistribution of the
/// excess, then the scaled CDF.
fn tile_lut(hist: &mut [u32; 256], area: usize, clip_limit: f64) -> [u8; 256] {
    let limit = ((clip_limit * area as f64 / 256.0) as u32).max(1);
    let mut clipped = 0u32;
    for h in hist.iter_mut() {
        if *h > limit {
            clipped += *h - limit;
            *h = limit;
        }
    }
    let batch = clipped / 256;
    let mut residual = clipped - batch * 256;
    for h in hist.iter_mut() {
        *h += batch;
    }
    if residual > 0 {
        let step = (256 / residual as usize).max(1);
        let mut i = 0;
        while i < 256 && residual > 0 {
            hist[i] += 1;
            residual -= 1;
            i += step;
        }
    }
    let scale = 255.0 / area as f64;
    let mut lut = [0u8; 256];
    let mut sum = 0u64;
    for (v, h) in lut.iter_mut().zip(hist.iter()) {
        sum += *h as u64;
        *v = (sum as f64 * scale).round().clamp(0.0, 255.0) as u8;
    }
    lut
}

/// Contrast-limited adaptive histogram equalization of the lightness plane.
///
/// L* is quantized to 256 bins; tiles that do not divide the image are
/// completed by mirror padding (reflect-101). Each output value is the
/// bilinear blend of the four neighbouring tile LUTs. `a` and `b` are copied.
pub fn clahe_lab(img: &LabImage, params: &NormalizationParams) -> LabImage {
    let (w, h) = (img.width, img.height);
    let tiles_x = params.clahe_tile_grid.0.clamp(1, w);
    let tiles_y = params.clahe_tile_grid.1.clamp(1, h);
    let bins: Vec<u8> = img.l.iter().map(|&l| l_to_bin(l)).collect();

    let tile_w = w.div_ceil(tiles_x);
    let tile_h = h.div_ceil(tiles_y);
    let area = tile_w * tile_h;

    let mut luts = vec![[0u8; 256]; tiles_x * tiles_y];
    for ty in 0..tiles_y {
        for tx in 0..tiles_x {
            let mut hist = [0u32; 256];
            for y in ty * tile_h..(ty + 1) * tile_h {
                let sy = reflect101(y, h);
                for x in tx * tile_w..(tx + 1) * tile_w {
                    hist[bins[sy * w + reflect101(x, w)] as usize] += 1;
                }
            }
            luts[ty * tiles_x + tx] = tile_lut(&mut hist, area, params.clahe_clip_limit);
        }
    }

    let inv_tw = 1.0 / tile_w as f64;
    let inv_th = 1.0 / tile_h as f64;
    let mut out_l = Vec::with_capacity(w * h);
    for y in 0..h {
        let tyf = y as f64 * inv_th - 0.5;
        let ty1 = tyf.floor();
        let ya = tyf - ty1;
        let ty2 = ((ty1 as i64 + 1).min(tiles_y as i64 - 1)).max(0) as usize;
        let ty1 = (ty1 as i64).max(0) as usize;
        for x in 0..w {
            let txf = x as f64 * inv_tw - 0.5;
            let tx1 = txf.floor();
            let xa = txf - tx1;
            let tx2 = ((tx1 as i64 + 1).min(tiles_x as i64 - 1)).max(0) as usize;
            let tx1 = (tx1 as i64).max(0) as usize;
            let v = bins[y * w + x] as usize;
            let lut = |tx: usize, ty: usize| luts[ty * tiles_x + tx][v] as f64;
            let res = (lut(tx1, ty1) * (1.0 - xa) + lut(tx2, ty1) * xa) * (1.0 - ya)
                + (lut(tx1, ty2) * (1.0 - xa) + lut(tx2, ty2) * xa) * ya;
            let q = res.round().clamp(0.0, 255.0);
            out_l.push(q * 100.0 / 255.0);
        }
    }
    LabImage { width: w, height: h, l: out_l, a: img.a.clone(), b: img.b.clone() }
}

/// [`clahe_lab`] on an sRGB image.
pub fn clahe_lightness(img: &ImageBuffer, params: &NormalizationParams) -> ImageBuffer {
    clahe_lab(&LabImage::from_rgb(img), params).to_rgb()
}

/// Per-channel `(1 - alpha) * base + alpha * processed`, rounded half away
/// from zero.
pub fn blend(base: &ImageBuffer, processed: &ImageBuffer, alpha: f64) -> Result<ImageBuffer> {
    if base.dims() != processed.dims() {
        return Err(Error::DimensionMismatch { expected: base.dims(), found: processed.dims() });
    }
    let pixels = base
        .pixels()
        .iter()
        .zip(processed.pixels())
        .map(|(p, q)| {
            let (p, q) = (p.channels(), q.channels());
            let mix = |i: usize| ((1.0 - alpha) * p[i] as f64 + alpha * q[i] as f64).round().clamp(0.0, 255.0) as u8;
            Rgb8::new(mix(0), mix(1), mix(2))
        })
        .collect();
    ImageBuffer::new(base.width(), base.height(), pixels)
}

/// Illuminant from the brightest background pixels outside `face`.
///
/// The top `bright_fraction` of background pixels by relative luminance are
/// mean-pooled per channel. Gains bring each channel up to the illuminant's
/// largest channel, so the max gain is 1 before clamping.
pub fn estimate_illuminant(
    img: &ImageBuffer,
    face: &FaceHull,
    params: &NormalizationParams,
) -> Result<WhiteBalanceGains> {
    let excluded = face.rasterize(img.width(), img.height());
    let mut background: Vec<(f64, usize)> = img
        .pixels()
        .iter()
        .enumerate()
        .filter(|(i, _)| !excluded[*i])
        .map(|(i, p)| (p.relative_luminance(), i))
        .collect();
    if background.len() < params.min_background_pixels.max(1) {
        return Err(Error::NoBackgroundReference {
            found: background.len(),
            required: params.min_background_pixels.max(1),
        });
    }
    background.sort_by(|x, y| y.0.total_cmp(&x.0).then(x.1.cmp(&y.1)));
    let take = ((background.len() as f64 * params.bright_fraction).ceil() as usize).clamp(1, background.len());
    let mut sum = [0.0f64; 3];
    for &(_, i) in &background[..take] {
        let c = img.pixels()[i].channels();
        for k in 0..3 {
            sum[k] += c[k] as f64;
        }
    }
    let illum = sum.map(|s| s / take as f64);
    Ok(gains_from_illuminant(illum, params.gain_clamp))
}

/// Anchor-to-max gains, clamped.
pub fn gains_from_illuminant(illum: [f64; 3], clamp: (f64, f64)) -> WhiteBalanceGains {
    let max = illum.iter().cloned().fold(0.0, f64::max);
    let gain = |c: f64| if c > 0.0 { (max / c).clamp(clamp.0, clamp.1) } else { clamp.1 };
    if max <= 0.0 {
        return WhiteBalanceGains::IDENTITY;
    }
    WhiteBalanceGains { r: gain(illum[0]), g: gain(illum[1]), b: gain(illum[2]) }
}

pub fn apply_white_balance(img: &ImageBuffer, gains: WhiteBalanceGains) -> ImageBuffer {
    if gains == WhiteBalanceGains::IDENTITY {
        return img.clone();
    }
    let g = gains.as_array();
    img.map(|p| {
        let c = p.channels();
        let f = |i: usize| (c[i] as f64 * g[i]).round().clamp(0.0, 255.0) as u8;
        Rgb8::new(f(0), f(1), f(2))
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct Normalized {
    pub image: ImageBuffer,
    pub gains: WhiteBalanceGains,
    /// Set when the background was too small and identity gains were used.
    pub no_background_reference: bool,
}

/// CLAHE → blend → background-referenced white balance.
pub fn normalize_image(img: &ImageBuffer, face: &Face, params: &NormalizationParams) -> Result<Normalized> {
    params.validate()?;
    let lab = LabImage::from_rgb(img);
    let equalized = clahe_lab(&lab, params);
    let mixed = lab.blend_lightness(&equalized, params.blend_alpha)?.to_rgb();

    let lm = face.landmark_set()?;
    let hull = FaceHull::from_landmarks(&lm, img.width(), img.height(), params.face_dilation_fraction);
    match estimate_illuminant(&mixed, &hull, params) {
        Ok(gains) => {
            Ok(Normalized { image: apply_white_balance(&mixed, gains), gains, no_background_reference: false })
        }
        Err(Error::NoBackgroundReference { .. }) => {
            Ok(Normalized { image: mixed, gains: WhiteBalanceGains::IDENTITY, no_background_reference: true })
        }
        Err(e) => Err(e),
    }
}
