//! sRGB / CIELAB conversion and color-difference metrics.
//!
//! All conversions assume the sRGB transfer curve with a D65 reference white
//! and the 2° observer. Arithmetic is carried out in `f64`; quantization to
//! 8-bit channels only happens in [`lab_to_srgb`].

use std::fmt;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

/// D65 reference white, 2° observer, Y normalized to 1.
const WHITE_X: f64 = 0.950_47;
const WHITE_Y: f64 = 1.0;
const WHITE_Z: f64 = 1.088_83;

const EPSILON: f64 = 216.0 / 24_389.0;
const KAPPA: f64 = 24_389.0 / 27.0;

/// An 8-bit sRGB-encoded color.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub struct Rgb8 {
    pub r: u8,
    pub g: u8,
    pub b: u8,
}

impl Rgb8 {
    pub const fn new(r: u8, g: u8, b: u8) -> Self {
        Self { r, g, b }
    }

    pub const fn channels(self) -> [u8; 3] {
        [self.r, self.g, self.b]
    }

    pub const fn from_channels(c: [u8; 3]) -> Self {
        Self::new(c[0], c[1], c[2])
    }

    /// Parses `#rrggbb` or `rrggbb`.
    pub fn from_hex(hex: &str) -> Option<Self> {
        let s = hex.strip_prefix('#').unwrap_or(hex);
        if s.len() != 6 || !s.is_ascii() {
            return None;
        }
        let r = u8::from_str_radix(&s[0..2], 16).ok()?;
        let g = u8::from_str_radix(&s[2..4], 16).ok()?;
        let b = u8::from_str_radix(&s[4..6], 16).ok()?;
        Some(Self::new(r, g, b))
    }

    pub fn to_hex(self) -> String {
        format!("#{:02x}{:02x}{:02x}", self.r, self.g, self.b)
    }

    /// Relative luminance (Rec. 709 weights on linearized channels).
    pub fn relative_luminance(self) -> f64 {
        let [r, g, b] = self.linear();
        0.2126 * r + 0.7152 * g + 0.0722 * b
    }

    /// Linear-light channel values in [0, 1].
    pub fn linear(self) -> [f64; 3] {
        let lut = decode_lut();
        [lut[self.r as usize], lut[self.g as usize], lut[self.b as usize]]
    }
}

impl fmt::Display for Rgb8 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_hex())
    }
}

/// A CIELAB color (D65). `l` is lightness in [0, 100].
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Lab {
    #[serde(rename = "L")]
    pub l: f64,
    pub a: f64,
    pub b: f64,
}

impl Lab {
    pub const fn new(l: f64, a: f64, b: f64) -> Self {
        Self { l, a, b }
    }

    pub fn chroma(self) -> f64 {
        self.a.hypot(self.b)
    }
}

/// Color-difference metric used for palette matching.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DeltaMetric {
    #[default]
    De2000,
    De76,
}

impl DeltaMetric {
    pub fn distance(self, x: Lab, y: Lab) -> f64 {
        match self {
            DeltaMetric::De2000 => delta_e_2000(x, y),
            DeltaMetric::De76 => delta_e_76(x, y),
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            DeltaMetric::De2000 => "de2000",
            DeltaMetric::De76 => "de76",
        }
    }
}

impl std::str::FromStr for DeltaMetric {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "de2000" | "ciede2000" => Ok(Self::De2000),
            "de76" | "cie76" => Ok(Self::De76),
            other => Err(format!("unknown color metric `{other}`")),
        }
    }
}

fn srgb_decode(v: f64) -> f64 {
    if v <= 0.040_45 {
        v / 12.92
    } else {
        ((v + 0.055) / 1.055).powf(2.4)
    }
}

fn srgb_encode(v: f64) -> f64 {
    if v <= 0.003_130_8 {
        v * 12.92
    } else {
        1.055 * v.powf(1.0 / 2.4) - 0.055
    }
}

fn decode_lut() -> &'static [f64; 256] {
    static LUT: OnceLock<[f64; 256]> = OnceLock::new();
    LUT.get_or_init(|| {
        let mut lut = [0.0; 256];
        for (i, v) in lut.iter_mut().enumerate() {
            *v = srgb_decode(i as f64 / 255.0);
        }
        lut
    })
}

fn lab_f(t: f64) -> f64 {
    if t > EPSILON {
        t.cbrt()
    } else {
        (KAPPA * t + 16.0) / 116.0
    }
}

fn lab_f_inv(f: f64) -> f64 {
    let f3 = f * f * f;
    if f3 > EPSILON {
        f3
    } else {
        (116.0 * f - 16.0) / KAPPA
    }
}

/// Converts linear-light sRGB to CIELAB.
pub fn linear_rgb_to_lab(rgb: [f64; 3]) -> Lab {
    let [r, g, b] = rgb;
    let x = 0.412_456_4 * r + 0.357_576_1 * g + 0.180_437_5 * b;
    let y = 0.212_672_9 * r + 0.715_152_2 * g + 0.072_175_0 * b;
    let z = 0.019_333_9 * r + 0.119_192_0 * g + 0.950_304_1 * b;

    let fx = lab_f(x / WHITE_X);
    let fy = lab_f(y / WHITE_Y);
    let fz = lab_f(z / WHITE_Z);

    let l = (116.0 * fy - 16.0).clamp(0.0, 100.0);
    Lab::new(l, 500.0 * (fx - fy), 200.0 * (fy - fz))
}

/// Converts CIELAB to unclamped linear-light sRGB.
pub fn lab_to_linear_rgb(c: Lab) -> [f64; 3] {
    let fy = (c.l + 16.0) / 116.0;
    let fx = fy + c.a / 500.0;
    let fz = fy - c.b / 200.0;

    let x = WHITE_X * lab_f_inv(fx);
    let y = if c.l > KAPPA * EPSILON { fy * fy * fy } else { c.l / KAPPA } * WHITE_Y;
    let z = WHITE_Z * lab_f_inv(fz);

    [
        3.240_454_2 * x - 1.537_138_5 * y - 0.498_531_4 * z,
        -0.969_266_0 * x + 1.876_010_8 * y + 0.041_556_0 * z,
        0.055_643_4 * x - 0.204_025_9 * y + 1.057_225_2 * z,
    ]
}

pub fn srgb_to_lab(c: Rgb8) -> Lab {
    linear_rgb_to_lab(c.linear())
}

/// Inverse of [`srgb_to_lab`]. Out-of-gamut results are clamped per channel.
pub fn lab_to_srgb(c: Lab) -> Rgb8 {
    let lin = lab_to_linear_rgb(c);
    let q = |v: f64| -> u8 {
        let e = srgb_encode(v.clamp(0.0, 1.0)) * 255.0;
        e.round().clamp(0.0, 255.0) as u8
    };
    Rgb8::new(q(lin[0]), q(lin[1]), q(lin[2]))
}

/// CIE76 color difference: Euclidean distance in CIELAB.
pub fn delta_e_76(x: Lab, y: Lab) -> f64 {
    let dl = x.l - y.l;
    let da = x.a - y.a;
    let db = x.b - y.b;
    (dl * dl + da * da + db * db).sqrt()
}

/// CIEDE2000 color difference with unit parametric factors (kL = kC = kH = 1).
pub fn delta_e_2000(x: Lab, y: Lab) -> f64 {
    const POW25_7: f64 = 6_103_515_625.0; // 25^7

    let c1 = x.chroma();
    let c2 = y.chroma();
    let c_bar = 0.5 * (c1 + c2);
    let c_bar7 = c_bar.powi(7);
    let g = 0.5 * (1.0 - (c_bar7 / (c_bar7 + POW25_7)).sqrt());

    let a1p = (1.0 + g) * x.a;
    let a2p = (1.0 + g) * y.a;
    let c1p = a1p.hypot(x.b);
    let c2p = a2p.hypot(y.b);

    let hue = |b: f64, ap: f64| -> f64 {
        if b == 0.0 && ap == 0.0 {
            0.0
        } else {
            let h = b.atan2(ap).to_degrees();
            if h < 0.0 {
                h + 360.0
            } else {
                h
            }
        }
    };
    let h1p = hue(x.b, a1p);
    let h2p = hue(y.b, a2p);

    let dlp = y.l - x.l;
    let dcp = c2p - c1p;

    let chroma_product = c1p * c2p;
    let dhp = if chroma_product == 0.0 {
        0.0
    } else {
        let d = h2p - h1p;
        if d > 180.0 {
            d - 360.0
        } else if d < -180.0 {
            d + 360.0
        } else {
            d
        }
    };
    let d_hp = 2.0 * chroma_product.sqrt() * (dhp.to_radians() / 2.0).sin();

    let l_bar = 0.5 * (x.l + y.l);
    let cp_bar = 0.5 * (c1p + c2p);
    let hp_bar = if chroma_product == 0.0 {
        h1p + h2p
    } else if (h1p - h2p).abs() <= 180.0 {
        0.5 * (h1p + h2p)
    } else if h1p + h2p < 360.0 {
        0.5 * (h1p + h2p + 360.0)
    } else {
        0.5 * (h1p + h2p - 360.0)
    };

    let t = 1.0 - 0.17 * (hp_bar - 30.0).to_radians().cos()
        + 0.24 * (2.0 * hp_bar).to_radians().cos()
        + 0.32 * (3.0 * hp_bar + 6.0).to_radians().cos()
        - 0.20 * (4.0 * hp_bar - 63.0).to_radians().cos();

    let d_theta = 30.0 * (-((hp_bar - 275.0) / 25.0).powi(2)).exp();
    let cp_bar7 = cp_bar.powi(7);
    let r_c = 2.0 * (cp_bar7 / (cp_bar7 + POW25_7)).sqrt();
    let l50 = (l_bar - 50.0).powi(2);
    let s_l = 1.0 + 0.015 * l50 / (20.0 + l50).sqrt();
    let s_c = 1.0 + 0.045 * cp_bar;
    let s_h = 1.0 + 0.015 * cp_bar * t;
    let r_t = -(2.0 * d_theta).to_radians().sin() * r_c;

    let tl = dlp / s_l;
    let tc = dcp / s_c;
    let th = d_hp / s_h;
    (tl * tl + tc * tc + th * th + r_t * tc * th).max(0.0).sqrt()
}
