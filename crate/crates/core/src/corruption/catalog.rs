//! The 20 corruption types, their enumeration order and the per-severity
//! parameter table.
//!
//! Enumeration order is category order (noise, blur, weather, digital) and,
//! within a category, the conventional listing order. Cell index of
//! `(type, severity)` is `type.index() * 5 + severity - 1`.
//!
//! Parameters are on a [0, 1] pixel scale unless noted. Eighteen types carry
//! the common-corruptions reference constants unchanged; `elastic` and `rain`
//! use repo-defined schedules (see their tables) and `spatter`'s water
//! branch uses a simplified edge model.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const SEVERITY_LEVELS: u8 = 5;
pub const CELL_COUNT: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Category {
    Noise,
    Blur,
    Weather,
    Digital,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum CorruptionType {
    GaussianNoise,
    Shot,
    Impulse,
    Speckle,
    Defocus,
    Glass,
    Motion,
    Zoom,
    GaussianBlur,
    Snow,
    Frost,
    Fog,
    Brightness,
    Spatter,
    Rain,
    Contrast,
    Elastic,
    Pixelate,
    Jpeg,
    Saturate,
}

impl CorruptionType {
    pub const ALL: [CorruptionType; 20] = [
        CorruptionType::GaussianNoise,
        CorruptionType::Shot,
        CorruptionType::Impulse,
        CorruptionType::Speckle,
        CorruptionType::Defocus,
        CorruptionType::Glass,
        CorruptionType::Motion,
        CorruptionType::Zoom,
        CorruptionType::GaussianBlur,
        CorruptionType::Snow,
        CorruptionType::Frost,
        CorruptionType::Fog,
        CorruptionType::Brightness,
        CorruptionType::Spatter,
        CorruptionType::Rain,
        CorruptionType::Contrast,
        CorruptionType::Elastic,
        CorruptionType::Pixelate,
        CorruptionType::Jpeg,
        CorruptionType::Saturate,
    ];

    pub fn name(self) -> &'static str {
        use CorruptionType::*;
        match self {
            GaussianNoise => "gaussian-noise",
            Shot => "shot",
            Impulse => "impulse",
            Speckle => "speckle",
            Defocus => "defocus",
            Glass => "glass",
            Motion => "motion",
            Zoom => "zoom",
            GaussianBlur => "gaussian-blur",
            Snow => "snow",
            Frost => "frost",
            Fog => "fog",
            Brightness => "brightness",
            Spatter => "spatter",
            Rain => "rain",
            Contrast => "contrast",
            Elastic => "elastic",
            Pixelate => "pixelate",
            Jpeg => "jpeg",
            Saturate => "saturate",
        }
    }

    pub fn category(self) -> Category {
        use CorruptionType::*;
        match self {
            GaussianNoise | Shot | Impulse | Speckle => Category::Noise,
            Defocus | Glass | Motion | Zoom | GaussianBlur => Category::Blur,
            Snow | Frost | Fog | Brightness | Spatter | Rain => Category::Weather,
            Contrast | Elastic | Pixelate | Jpeg | Saturate => Category::Digital,
        }
    }

    /// Position in the fixed enumeration order.
    pub fn index(self) -> usize {
        self as usize
    }

    /// Types whose output depends on the seed.
    pub fn is_stochastic(self) -> bool {
        use CorruptionType::*;
        matches!(
            self,
            GaussianNoise | Shot | Impulse | Speckle | Glass | Motion | Snow | Frost | Fog | Spatter | Rain | Elastic
        )
    }

    /// True if `name` (canonical or alias) names one of the test corruptions.
    pub fn is_corruption_name(name: &str) -> bool {
        name.parse::<CorruptionType>().is_ok()
    }
}

impl fmt::Display for CorruptionType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for CorruptionType {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let norm = s.trim().to_ascii_lowercase().replace('_', "-");
        if let Some(t) = CorruptionType::ALL.iter().find(|t| t.name() == norm) {
            return Ok(*t);
        }
        use CorruptionType::*;
        let t = match norm.as_str() {
            "gaussian" | "gaussian noise" => GaussianNoise,
            "shot-noise" => Shot,
            "impulse-noise" => Impulse,
            "speckle-noise" => Speckle,
            "defocus-blur" => Defocus,
            "glass-blur" | "frosted-glass" => Glass,
            "motion-blur" => Motion,
            "zoom-blur" => Zoom,
            "pixel" => Pixelate,
            "jpeg-compression" => Jpeg,
            "elastic-transform" => Elastic,
            _ => return Err(Error::UnknownCorruption(s.to_string())),
        };
        Ok(t)
    }
}

impl Serialize for CorruptionType {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(self.name())
    }
}

impl<'de> Deserialize<'de> for CorruptionType {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// One deterministic corruption instance. Severity 0 is the clean identity.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct CorruptionSpec {
    #[serde(rename = "type")]
    pub ctype: CorruptionType,
    pub severity: u8,
    pub seed: u64,
}

impl CorruptionSpec {
    pub fn new(ctype: CorruptionType, severity: u8, seed: u64) -> Result<Self> {
        if severity > SEVERITY_LEVELS {
            return Err(Error::InvalidSeverity(severity));
        }
        Ok(CorruptionSpec { ctype, severity, seed })
    }

    /// Index into the 100-cell grid, `None` for severity 0.
    pub fn cell(&self) -> Option<usize> {
        (self.severity >= 1).then(|| cell_index(self.ctype, self.severity))
    }
}

pub fn cell_index(ctype: CorruptionType, severity: u8) -> usize {
    ctype.index() * SEVERITY_LEVELS as usize + severity as usize - 1
}

pub fn cell_at(index: usize) -> (CorruptionType, u8) {
    assert!(index < CELL_COUNT, "cell index {index} out of range");
    (
        CorruptionType::ALL[index / SEVERITY_LEVELS as usize],
        (index % SEVERITY_LEVELS as usize) as u8 + 1,
    )
}

/// All 20 types with their severity grid `1..=5`, in enumeration order.
pub fn list_corruptions() -> Vec<(CorruptionType, [u8; 5])> {
    CorruptionType::ALL.iter().map(|&t| (t, [1, 2, 3, 4, 5])).collect()
}

/// All 100 `(type, severity)` cells in cell-index order.
pub fn corruption_cells() -> Vec<(CorruptionType, u8)> {
    (0..CELL_COUNT).map(cell_at).collect()
}

// Severity tables, index = severity - 1.

/// Additive Gaussian noise standard deviation.
pub const GAUSSIAN_NOISE_SIGMA: [f32; 5] = [0.08, 0.12, 0.18, 0.26, 0.38];
/// Poisson photon count scale; larger is cleaner.
pub const SHOT_NOISE_LAMBDA: [f64; 5] = [60.0, 25.0, 12.0, 5.0, 3.0];
/// Fraction of channel values replaced by salt or pepper.
pub const IMPULSE_AMOUNT: [f64; 5] = [0.03, 0.06, 0.09, 0.17, 0.27];
/// Multiplicative noise standard deviation.
pub const SPECKLE_SIGMA: [f32; 5] = [0.15, 0.2, 0.35, 0.45, 0.6];

/// (disk radius px, alias blur sigma)
pub const DEFOCUS: [(f32, f32); 5] = [(3.0, 0.1), (4.0, 0.5), (6.0, 0.5), (8.0, 0.5), (10.0, 0.5)];
/// (sigma, max pixel displacement, iterations)
pub const GLASS: [(f32, i64, usize); 5] = [(0.7, 1, 2), (0.9, 2, 1), (1.0, 2, 3), (1.1, 3, 2), (1.5, 4, 2)];
/// (radius px, sigma)
pub const MOTION: [(usize, f32); 5] = [(10, 3.0), (15, 5.0), (15, 8.0), (15, 12.0), (20, 15.0)];
/// Zoom factors `1 + step * i` for `i in 0..count`, i.e. 1.00..=1.10 step
/// 0.01 at severity 1 up to 1.00..=1.30 step 0.03 at severity 5.
pub const ZOOM: [(f32, usize); 5] = [(0.01, 11), (0.01, 16), (0.02, 11), (0.02, 13), (0.03, 11)];
pub const GAUSSIAN_BLUR_SIGMA: [f32; 5] = [1.0, 2.0, 3.0, 4.0, 6.0];

/// Snow layer parameters.
#[derive(Debug, Clone, Copy)]
pub struct SnowParams {
    pub loc: f32,
    pub scale: f32,
    pub zoom: f32,
    pub threshold: f32,
    pub blur_radius: usize,
    pub blur_sigma: f32,
    pub blend: f32,
}

pub const SNOW: [SnowParams; 5] = [
    SnowParams {
        loc: 0.1,
        scale: 0.3,
        zoom: 3.0,
        threshold: 0.5,
        blur_radius: 10,
        blur_sigma: 4.0,
        blend: 0.8,
    },
    SnowParams {
        loc: 0.2,
        scale: 0.3,
        zoom: 2.0,
        threshold: 0.5,
        blur_radius: 12,
        blur_sigma: 4.0,
        blend: 0.7,
    },
    SnowParams {
        loc: 0.55,
        scale: 0.3,
        zoom: 4.0,
        threshold: 0.9,
        blur_radius: 12,
        blur_sigma: 8.0,
        blend: 0.7,
    },
    SnowParams {
        loc: 0.55,
        scale: 0.3,
        zoom: 4.5,
        threshold: 0.85,
        blur_radius: 12,
        blur_sigma: 8.0,
        blend: 0.65,
    },
    SnowParams {
        loc: 0.55,
        scale: 0.3,
        zoom: 2.5,
        threshold: 0.85,
        blur_radius: 12,
        blur_sigma: 12.0,
        blend: 0.55,
    },
];
/// (image weight, frost weight)
pub const FROST: [(f32, f32); 5] = [(1.0, 0.4), (0.8, 0.6), (0.7, 0.7), (0.65, 0.7), (0.6, 0.75)];
/// (fog strength, plasma wibble decay)
pub const FOG: [(f32, f32); 5] = [(1.5, 2.0), (2.0, 2.0), (2.5, 1.7), (2.5, 1.5), (3.0, 1.4)];
/// Added to HSV value.
pub const BRIGHTNESS_SHIFT: [f32; 5] = [0.1, 0.2, 0.3, 0.4, 0.5];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SpatterKind {
    Water,
    Mud,
}

#[derive(Debug, Clone, Copy)]
pub struct SpatterParams {
    pub loc: f32,
    pub scale: f32,
    pub sigma: f32,
    pub threshold: f32,
    pub intensity: f32,
    pub kind: SpatterKind,
}

pub const SPATTER: [SpatterParams; 5] = [
    SpatterParams {
        loc: 0.65,
        scale: 0.3,
        sigma: 4.0,
        threshold: 0.69,
        intensity: 0.6,
        kind: SpatterKind::Water,
    },
    SpatterParams {
        loc: 0.65,
        scale: 0.3,
        sigma: 3.0,
        threshold: 0.68,
        intensity: 0.6,
        kind: SpatterKind::Water,
    },
    SpatterParams {
        loc: 0.65,
        scale: 0.3,
        sigma: 2.0,
        threshold: 0.68,
        intensity: 0.5,
        kind: SpatterKind::Water,
    },
    SpatterParams {
        loc: 0.65,
        scale: 0.3,
        sigma: 1.0,
        threshold: 0.65,
        intensity: 1.5,
        kind: SpatterKind::Mud,
    },
    SpatterParams {
        loc: 0.67,
        scale: 0.4,
        sigma: 1.0,
        threshold: 0.65,
        intensity: 1.5,
        kind: SpatterKind::Mud,
    },
];

/// Repo-defined rain: bright one-pixel streaks.
#[derive(Debug, Clone, Copy)]
pub struct RainParams {
    /// Streaks per pixel column.
    pub density: f32,
    /// Streak length in px for a 256-px-high image; scales with height.
    pub length: f32,
    pub alpha: f32,
}

pub const RAIN: [RainParams; 5] = [
    RainParams {
        density: 0.02,
        length: 20.0,
        alpha: 0.3,
    },
    RainParams {
        density: 0.04,
        length: 25.0,
        alpha: 0.35,
    },
    RainParams {
        density: 0.06,
        length: 30.0,
        alpha: 0.4,
    },
    RainParams {
        density: 0.08,
        length: 35.0,
        alpha: 0.45,
    },
    RainParams {
        density: 0.10,
        length: 40.0,
        alpha: 0.5,
    },
];
/// Streak angle from vertical, degrees, sampled once per image.
pub const RAIN_ANGLE_DEG: (f64, f64) = (-30.0, -10.0);

pub const CONTRAST_FACTOR: [f32; 5] = [0.4, 0.3, 0.2, 0.1, 0.05];

/// Repo-defined elastic schedule, lengths as fractions of the shorter side.
#[derive(Debug, Clone, Copy)]
pub struct ElasticParams {
    /// RMS of the smooth displacement field.
    pub displacement: f32,
    /// Gaussian smoothing of the random field.
    pub smoothing: f32,
    /// Max jitter of each affine control point.
    pub affine: f32,
}

pub const ELASTIC: [ElasticParams; 5] = [
    ElasticParams {
        displacement: 0.008,
        smoothing: 0.05,
        affine: 0.005,
    },
    ElasticParams {
        displacement: 0.016,
        smoothing: 0.05,
        affine: 0.010,
    },
    ElasticParams {
        displacement: 0.024,
        smoothing: 0.05,
        affine: 0.015,
    },
    ElasticParams {
        displacement: 0.032,
        smoothing: 0.05,
        affine: 0.020,
    },
    ElasticParams {
        displacement: 0.040,
        smoothing: 0.05,
        affine: 0.025,
    },
];

/// Downscale factor before nearest-neighbour upscaling.
pub const PIXELATE_SCALE: [f32; 5] = [0.6, 0.5, 0.4, 0.3, 0.25];
pub const JPEG_QUALITY: [u8; 5] = [25, 18, 15, 10, 7];
/// (saturation multiplier, saturation offset). Over-saturation ramp; the
/// reference set's two desaturating levels are not ordered by strength and
/// are replaced by milder boosts.
pub const SATURATE: [(f32, f32); 5] = [(1.5, 0.0), (2.0, 0.0), (3.0, 0.05), (5.0, 0.1), (20.0, 0.1)];

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn twenty_types_hundred_cells() {
        let list = list_corruptions();
        assert_eq!(list.len(), 20);
        assert_eq!(list.iter().map(|(_, s)| s.len()).sum::<usize>(), 100);
        assert_eq!(corruption_cells().len(), CELL_COUNT);
    }

    #[test]
    fn documented_order() {
        let list = list_corruptions();
        assert_eq!(list[0].0, CorruptionType::GaussianNoise);
        assert_eq!(list[0].0.category(), Category::Noise);
        assert_eq!(list[9].0, CorruptionType::Snow);
        assert_eq!(list[9].0.category(), Category::Weather);
        let cats: Vec<Category> = list.iter().map(|(t, _)| t.category()).collect();
        let mut sorted = cats.clone();
        sorted.sort();
        assert_eq!(cats, sorted);
    }

    #[test]
    fn category_sizes() {
        let count = |c| CorruptionType::ALL.iter().filter(|t| t.category() == c).count();
        assert_eq!(count(Category::Noise), 4);
        assert_eq!(count(Category::Blur), 5);
        assert_eq!(count(Category::Weather), 6);
        assert_eq!(count(Category::Digital), 5);
    }

    #[test]
    fn names_parse_back() {
        for t in CorruptionType::ALL {
            assert_eq!(t.name().parse::<CorruptionType>().unwrap(), t);
        }
        assert_eq!(
            "JPEG_compression".parse::<CorruptionType>().unwrap(),
            CorruptionType::Jpeg
        );
        assert!("autocontrast".parse::<CorruptionType>().is_err());
    }

    #[test]
    fn cell_index_round_trip() {
        for i in 0..CELL_COUNT {
            let (t, s) = cell_at(i);
            assert_eq!(cell_index(t, s), i);
        }
    }

    #[test]
    fn severity_bounds() {
        assert!(CorruptionSpec::new(CorruptionType::Fog, 5, 0).is_ok());
        assert!(matches!(
            CorruptionSpec::new(CorruptionType::Fog, 6, 0),
            Err(Error::InvalidSeverity(6))
        ));
    }
}
