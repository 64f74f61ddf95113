//! Training-time augmentation operators: random erasing and its soft
//! variant, random patch pasting, self patch mixing and AugMix-style chain
//! mixing.
//!
//! Every operator is a pure function of its inputs and a 64-bit seed. The
//! random patch pool is explicit state passed in and returned.

mod augmix;
mod erasing;
mod patch;

pub use augmix::{augmix, augmix_trace, AugMixParams, AugMixTrace, AugOp, ChainDepth};
pub use erasing::{
    random_erasing, random_erasing_with_region, soft_random_erasing, soft_random_erasing_with_region, EraseFill,
    EraseParams,
};
pub use patch::{
    random_patch, self_patch_mixing, self_patch_mixing_with_regions, Patch, PatchMixParams, PatchOutcome, PatchPool,
};

use serde::{Deserialize, Serialize};

use crate::rng::Stream;

/// Axis-aligned pixel rectangle.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Rect {
    pub x: u32,
    pub y: u32,
    pub width: u32,
    pub height: u32,
}

impl Rect {
    pub fn area(&self) -> u64 {
        self.width as u64 * self.height as u64
    }

    pub fn contains(&self, x: u32, y: u32) -> bool {
        x >= self.x && y >= self.y && x < self.x + self.width && y < self.y + self.height
    }
}

/// Samples a block size with area fraction in `area_range` and aspect
/// (height / width) in `aspect_range` that fits strictly inside
/// `width`x`height`. Gives up after 100 attempts.
pub(crate) fn sample_block(
    rng: &mut Stream,
    width: u32,
    height: u32,
    area_range: (f64, f64),
    aspect_range: (f64, f64),
    strict: bool,
) -> Option<(u32, u32)> {
    let total = width as f64 * height as f64;
    for _ in 0..100 {
        let target = rng.uniform(area_range.0, area_range.1) * total;
        let aspect = rng.uniform(aspect_range.0, aspect_range.1);
        let h = (target * aspect).sqrt().round();
        let w = (target / aspect).sqrt().round();
        if w < 1.0 || h < 1.0 {
            continue;
        }
        let fits = if strict {
            w < width as f64 && h < height as f64
        } else {
            w <= width as f64 && h <= height as f64
        };
        let frac = w * h / total;
        if fits && frac >= area_range.0 && frac <= area_range.1 {
            return Some((w as u32, h as u32));
        }
    }
    None
}

pub(crate) fn check_range(name: &str, (lo, hi): (f64, f64), max: Option<f64>) -> crate::Result<()> {
    let ok = lo > 0.0 && lo <= hi && lo.is_finite() && hi.is_finite() && max.is_none_or(|m| hi <= m);
    if ok {
        Ok(())
    } else {
        Err(crate::Error::InvalidParameter(format!("{name} range ({lo}, {hi})")))
    }
}

pub(crate) fn check_unit(name: &str, v: f64) -> crate::Result<()> {
    if (0.0..=1.0).contains(&v) {
        Ok(())
    } else {
        Err(crate::Error::InvalidParameter(format!("{name} = {v} outside [0, 1]")))
    }
}
