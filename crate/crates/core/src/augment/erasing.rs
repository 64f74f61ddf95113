use serde::{Deserialize, Serialize};

use super::{check_range, check_unit, sample_block, Rect};
use crate::error::Result;
use crate::image::Image;
use crate::rng::Stream;

/// Per-channel fill used by the mean-value mode (ImageNet channel means).
pub const MEAN_FILL: [u8; 3] = [125, 123, 114];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EraseFill {
    /// Independent uniform byte per channel per pixel.
    PerPixelRandom,
    MeanValue,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EraseParams {
    pub probability: f64,
    pub area_ratio_range: (f64, f64),
    /// Height over width.
    pub aspect_ratio_range: (f64, f64),
    /// Soft variant only: chance that an in-region pixel keeps its value.
    pub retain_ratio: f64,
    pub fill: EraseFill,
}

impl Default for EraseParams {
    fn default() -> Self {
        EraseParams {
            probability: 0.5,
            area_ratio_range: (0.02, 0.4),
            aspect_ratio_range: (0.3, 3.33),
            retain_ratio: 0.5,
            fill: EraseFill::PerPixelRandom,
        }
    }
}

impl EraseParams {
    pub fn validate(&self) -> Result<()> {
        check_unit("probability", self.probability)?;
        check_unit("retain_ratio", self.retain_ratio)?;
        check_range("area_ratio", self.area_ratio_range, Some(1.0))?;
        check_range("aspect_ratio", self.aspect_ratio_range, None)
    }
}

fn erase(img: &Image, p: &EraseParams, seed: u64, retain: f64) -> Result<(Image, Option<Rect>)> {
    p.validate()?;
    let mut rng = Stream::new(seed);
    if !rng.chance(p.probability) {
        return Ok((img.clone(), None));
    }
    let Some((w, h)) = sample_block(
        &mut rng,
        img.width(),
        img.height(),
        p.area_ratio_range,
        p.aspect_ratio_range,
        true,
    ) else {
        return Ok((img.clone(), None));
    };
    let rect = Rect {
        x: rng.below((img.width() - w + 1) as u64) as u32,
        y: rng.below((img.height() - h + 1) as u64) as u32,
        width: w,
        height: h,
    };
    let mut out = img.clone();
    for y in rect.y..rect.y + h {
        for x in rect.x..rect.x + w {
            if retain > 0.0 && rng.chance(retain) {
                continue;
            }
            let fill = match p.fill {
                EraseFill::PerPixelRandom => {
                    let v = rng.next_u64();
                    [v as u8, (v >> 8) as u8, (v >> 16) as u8]
                }
                EraseFill::MeanValue => MEAN_FILL,
            };
            out.put(x, y, fill);
        }
    }
    Ok((out, Some(rect)))
}

/// With probability `p.probability`, replaces one random rectangle with fill
/// values. Pixels outside the rectangle are untouched.
pub fn random_erasing(img: &Image, p: &EraseParams, seed: u64) -> Result<Image> {
    Ok(random_erasing_with_region(img, p, seed)?.0)
}

/// [`random_erasing`] that also reports the erased rectangle.
pub fn random_erasing_with_region(img: &Image, p: &EraseParams, seed: u64) -> Result<(Image, Option<Rect>)> {
    erase(img, p, seed, 0.0)
}

/// Like [`random_erasing`], but each pixel inside the rectangle independently
/// keeps its original value with probability `p.retain_ratio`.
pub fn soft_random_erasing(img: &Image, p: &EraseParams, seed: u64) -> Result<Image> {
    Ok(soft_random_erasing_with_region(img, p, seed)?.0)
}

pub fn soft_random_erasing_with_region(img: &Image, p: &EraseParams, seed: u64) -> Result<(Image, Option<Rect>)> {
    erase(img, p, seed, p.retain_ratio)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::person_image;

    #[test]
    fn zero_probability_is_identity() {
        let img = person_image(32, 64, 1, 0);
        let p = EraseParams {
            probability: 0.0,
            ..Default::default()
        };
        for seed in 0..20 {
            assert_eq!(random_erasing(&img, &p, seed).unwrap(), img);
        }
    }

    #[test]
    fn full_retention_is_identity() {
        let img = person_image(32, 64, 1, 0);
        let p = EraseParams {
            probability: 1.0,
            retain_ratio: 1.0,
            ..Default::default()
        };
        for seed in 0..20 {
            assert_eq!(soft_random_erasing(&img, &p, seed).unwrap(), img);
        }
    }

    #[test]
    fn invalid_params_rejected() {
        let img = person_image(32, 64, 1, 0);
        let bad = EraseParams {
            area_ratio_range: (0.5, 0.1),
            ..Default::default()
        };
        assert!(random_erasing(&img, &bad, 0).is_err());
        let bad = EraseParams {
            probability: 1.5,
            ..Default::default()
        };
        assert!(random_erasing(&img, &bad, 0).is_err());
        let bad = EraseParams {
            aspect_ratio_range: (0.0, 2.0),
            ..Default::default()
        };
        assert!(random_erasing(&img, &bad, 0).is_err());
    }

    #[test]
    fn degenerate_geometry_returns_input() {
        // An area fraction of 1.0 can never fit strictly inside the image.
        let img = person_image(16, 16, 3, 0);
        let p = EraseParams {
            probability: 1.0,
            area_ratio_range: (0.999, 1.0),
            ..Default::default()
        };
        let (out, rect) = random_erasing_with_region(&img, &p, 4).unwrap();
        assert_eq!(out, img);
        assert!(rect.is_none());
    }

    #[test]
    fn mean_fill_rectangle() {
        let img = Image::filled(40, 80, [0, 0, 0]).unwrap();
        let p = EraseParams {
            probability: 1.0,
            fill: EraseFill::MeanValue,
            ..Default::default()
        };
        let (out, rect) = random_erasing_with_region(&img, &p, 3).unwrap();
        let rect = rect.unwrap();
        for y in 0..80 {
            for x in 0..40 {
                let expect = if rect.contains(x, y) { MEAN_FILL } else { [0, 0, 0] };
                assert_eq!(out.get(x, y), expect);
            }
        }
    }
}
