//! Row-major 8-bit RGB raster plus PNG/JPEG IO.

use std::path::Path;

use crate::color::Rgb8;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ImageBuffer {
    width: usize,
    height: usize,
    pixels: Vec<Rgb8>,
}

impl ImageBuffer {
    pub fn new(width: usize, height: usize, pixels: Vec<Rgb8>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::EmptyImage);
        }
        if pixels.len() != width * height {
            return Err(Error::DimensionMismatch { expected: (width, height), found: (pixels.len(), 1) });
        }
        Ok(Self { width, height, pixels })
    }

    pub fn filled(width: usize, height: usize, color: Rgb8) -> Result<Self> {
        Self::new(width, height, vec![color; width * height])
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

    pub fn len(&self) -> usize {
        self.pixels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pixels.is_empty()
    }

    pub fn pixels(&self) -> &[Rgb8] {
        &self.pixels
    }

    pub fn pixels_mut(&mut self) -> &mut [Rgb8] {
        &mut self.pixels
    }

    pub fn get(&self, x: usize, y: usize) -> Rgb8 {
        self.pixels[y * self.width + x]
    }

    pub fn set(&mut self, x: usize, y: usize, c: Rgb8) {
        self.pixels[y * self.width + x] = c;
    }

    /// Applies `f` to every pixel, keeping dimensions.
    pub fn map(&self, f: impl Fn(Rgb8) -> Rgb8) -> Self {
        Self { width: self.width, height: self.height, pixels: self.pixels.iter().map(|&p| f(p)).collect() }
    }

    pub fn load(path: &Path) -> Result<Self> {
        let img = image::open(path)
            .map_err(|e| Error::ImageDecode { path: path.display().to_string(), message: e.to_string() })?;
        let rgb = img.to_rgb8();
        let (w, h) = (rgb.width() as usize, rgb.height() as usize);
        let pixels = rgb.pixels().map(|p| Rgb8::from_channels(p.0)).collect();
        Self::new(w, h, pixels)
    }

    /// Writes a PNG (lossless, so fixtures round-trip exactly).
    pub fn save_png(&self, path: &Path) -> Result<()> {
        let raw: Vec<u8> = self.pixels.iter().flat_map(|p| p.channels()).collect();
        let buf = image::RgbImage::from_raw(self.width as u32, self.height as u32, raw)
            .expect("buffer length matches dimensions");
        buf.save_with_format(path, image::ImageFormat::Png)
            .map_err(|e| Error::Io { path: path.display().to_string(), message: e.to_string() })
    }
}
