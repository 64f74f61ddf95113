//! Deterministic, seeded image corruptions.
//!
//! [`apply_corruption`] is a pure function of `(image, spec)`: all randomness
//! comes from a [`Stream`] keyed by `spec.seed`, arithmetic is `f32` on a
//! [0, 1] scale, and results are quantized with [`crate::image::quantize`].

mod blur;
pub mod catalog;
mod digital;
mod noise;
pub mod texture;
mod weather;

pub use catalog::{
    cell_at, cell_index, corruption_cells, list_corruptions, Category, CorruptionSpec, CorruptionType, CELL_COUNT,
    SEVERITY_LEVELS,
};

use crate::error::{Error, Result};
use crate::image::Image;
use crate::raster::Raster;
use crate::rng::Stream;

/// Applies one corruption. Severity 0 returns an identical copy.
pub fn apply_corruption(img: &Image, spec: &CorruptionSpec) -> Result<Image> {
    if spec.severity > SEVERITY_LEVELS {
        return Err(Error::InvalidSeverity(spec.severity));
    }
    // Re-validate in case the caller built the image through a path that skipped checks.
    let img = Image::new(img.width(), img.height(), img.pixels().to_vec())?;
    if spec.severity == 0 {
        return Ok(img);
    }
    let level = (spec.severity - 1) as usize;
    let mut rng = Stream::new(spec.seed);

    if spec.ctype == CorruptionType::Jpeg {
        return digital::jpeg(&img, catalog::JPEG_QUALITY[level]);
    }

    let x = Raster::from_image(&img);
    use CorruptionType::*;
    let mut out = match spec.ctype {
        GaussianNoise => noise::gaussian(x, catalog::GAUSSIAN_NOISE_SIGMA[level], &mut rng),
        Shot => noise::shot(x, catalog::SHOT_NOISE_LAMBDA[level], &mut rng),
        Impulse => noise::impulse(x, catalog::IMPULSE_AMOUNT[level], &mut rng),
        Speckle => noise::speckle(x, catalog::SPECKLE_SIGMA[level], &mut rng),
        Defocus => blur::defocus(&x, catalog::DEFOCUS[level]),
        Glass => blur::glass(&x, catalog::GLASS[level], &mut rng),
        Motion => blur::motion(&x, catalog::MOTION[level], &mut rng),
        Zoom => blur::zoom(&x, catalog::ZOOM[level]),
        GaussianBlur => x.gaussian_blur(catalog::GAUSSIAN_BLUR_SIGMA[level]),
        Snow => weather::snow(&x, &catalog::SNOW[level], &mut rng),
        Frost => weather::frost(&x, catalog::FROST[level], &mut rng),
        Fog => weather::fog(x, catalog::FOG[level], &mut rng),
        Brightness => weather::brightness(x, catalog::BRIGHTNESS_SHIFT[level]),
        Spatter => weather::spatter(x, &catalog::SPATTER[level], &mut rng),
        Rain => weather::rain(x, &catalog::RAIN[level], &mut rng),
        Contrast => digital::contrast(x, catalog::CONTRAST_FACTOR[level]),
        Elastic => digital::elastic(&x, &catalog::ELASTIC[level], &mut rng),
        Pixelate => digital::pixelate(&x, catalog::PIXELATE_SCALE[level]),
        Saturate => digital::saturate(x, catalog::SATURATE[level]),
        Jpeg => unreachable!("handled above"),
    };
    out.clamp01();
    Ok(out.to_image())
}

/// Mean absolute per-channel difference on a [0, 1] scale.
pub fn distortion_score(clean: &Image, corrupted: &Image) -> Result<f64> {
    if !clean.same_dimensions(corrupted) {
        return Err(Error::DimensionMismatch(format!(
            "{}x{} vs {}x{}",
            clean.width(),
            clean.height(),
            corrupted.width(),
            corrupted.height()
        )));
    }
    let total: u64 = clean
        .pixels()
        .iter()
        .zip(corrupted.pixels())
        .map(|(&a, &b)| a.abs_diff(b) as u64)
        .sum();
    Ok(total as f64 / (clean.pixels().len() as f64 * 255.0))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn checker() -> Image {
        Image::from_fn(32, 48, |x, y| {
            if (x / 4 + y / 4) % 2 == 0 {
                [200, 60, 40]
            } else {
                [30, 90, 220]
            }
        })
        .unwrap()
    }

    #[test]
    fn severity_zero_is_identity_for_every_type() {
        let img = checker();
        for t in CorruptionType::ALL {
            let spec = CorruptionSpec {
                ctype: t,
                severity: 0,
                seed: 123,
            };
            assert_eq!(apply_corruption(&img, &spec).unwrap(), img, "{t}");
        }
    }

    #[test]
    fn rejects_out_of_range_severity() {
        let spec = CorruptionSpec {
            ctype: CorruptionType::Fog,
            severity: 6,
            seed: 0,
        };
        assert!(matches!(
            apply_corruption(&checker(), &spec),
            Err(Error::InvalidSeverity(6))
        ));
    }

    #[test]
    fn every_cell_preserves_shape() {
        let img = checker();
        for (t, s) in corruption_cells() {
            let out = apply_corruption(
                &img,
                &CorruptionSpec {
                    ctype: t,
                    severity: s,
                    seed: 5,
                },
            )
            .unwrap();
            assert!(out.same_dimensions(&img), "{t} {s}");
        }
    }

    #[test]
    fn distortion_extremes() {
        let black = Image::filled(8, 8, [0, 0, 0]).unwrap();
        let white = Image::filled(8, 8, [255, 255, 255]).unwrap();
        assert_eq!(distortion_score(&black, &black).unwrap(), 0.0);
        assert_eq!(distortion_score(&black, &white).unwrap(), 1.0);
        let other = Image::filled(9, 8, [0, 0, 0]).unwrap();
        assert!(matches!(
            distortion_score(&black, &other),
            Err(Error::DimensionMismatch(_))
        ));
    }
}
