use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use super::{check_range, check_unit, sample_block, Rect};
use crate::error::{Error, Result};
use crate::image::Image;
use crate::raster::Raster;
use crate::rng::Stream;

/// Aspect range (height / width) for patch blocks.
const BLOCK_ASPECT: (f64, f64) = (0.5, 2.0);

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PatchMixParams {
    pub block_area_range: (f64, f64),
    pub mix_coef: f64,
    pub pool_capacity: usize,
}

impl Default for PatchMixParams {
    fn default() -> Self {
        PatchMixParams {
            block_area_range: (0.05, 0.2),
            mix_coef: 0.5,
            pool_capacity: 50_000,
        }
    }
}

impl PatchMixParams {
    pub fn validate(&self) -> Result<()> {
        check_range("block_area", self.block_area_range, Some(1.0))?;
        check_unit("mix_coef", self.mix_coef)?;
        if self.pool_capacity == 0 {
            return Err(Error::InvalidParameter("pool_capacity must be at least 1".into()));
        }
        Ok(())
    }
}

/// A block of RGB pixels cut from an image. May be smaller than 8x8.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Patch {
    pub width: u32,
    pub height: u32,
    pub pixels: Vec<u8>,
}

impl Patch {
    pub fn cut(img: &Image, rect: Rect) -> Patch {
        let mut pixels = Vec::with_capacity(rect.area() as usize * 3);
        for y in rect.y..rect.y + rect.height {
            for x in rect.x..rect.x + rect.width {
                pixels.extend_from_slice(&img.get(x, y));
            }
        }
        Patch {
            width: rect.width,
            height: rect.height,
            pixels,
        }
    }

    #[inline]
    pub fn get(&self, x: u32, y: u32) -> [u8; 3] {
        let i = (y as usize * self.width as usize + x as usize) * 3;
        [self.pixels[i], self.pixels[i + 1], self.pixels[i + 2]]
    }

    /// Bilinear downscale, aspect preserved, so the patch fits `max_w`x`max_h`.
    fn fit_within(&self, max_w: u32, max_h: u32) -> Patch {
        if self.width <= max_w && self.height <= max_h {
            return self.clone();
        }
        let scale = (max_w as f64 / self.width as f64).min(max_h as f64 / self.height as f64);
        let w = ((self.width as f64 * scale).floor() as u32).clamp(1, max_w);
        let h = ((self.height as f64 * scale).floor() as u32).clamp(1, max_h);
        let src = Raster {
            width: self.width as usize,
            height: self.height as usize,
            channels: 3,
            data: self.pixels.iter().map(|&v| v as f32 / 255.0).collect(),
        };
        let (fx, fy) = (self.width as f32 / w as f32, self.height as f32 / h as f32);
        let mut pixels = Vec::with_capacity((w * h * 3) as usize);
        for y in 0..h {
            for x in 0..w {
                let sx = (x as f32 + 0.5) * fx - 0.5;
                let sy = (y as f32 + 0.5) * fy - 0.5;
                for c in 0..3 {
                    pixels.push(crate::image::quantize(src.sample(sx, sy, c)));
                }
            }
        }
        Patch {
            width: w,
            height: h,
            pixels,
        }
    }
}

/// Bounded FIFO of patches; the oldest entry is evicted past capacity.
/// Single-writer: callers serialize updates or keep one pool per worker.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PatchPool {
    capacity: usize,
    patches: VecDeque<Patch>,
}

impl PatchPool {
    pub fn new(capacity: usize) -> Self {
        PatchPool {
            capacity: capacity.max(1),
            patches: VecDeque::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.patches.len()
    }

    pub fn is_empty(&self) -> bool {
        self.patches.is_empty()
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn get(&self, i: usize) -> Option<&Patch> {
        self.patches.get(i)
    }

    pub fn push(&mut self, patch: Patch) {
        self.patches.push_back(patch);
        while self.patches.len() > self.capacity {
            self.patches.pop_front();
        }
    }
}

#[derive(Debug, Clone)]
pub struct PatchOutcome {
    pub image: Image,
    pub pool: PatchPool,
    /// Where a stored patch was pasted, if any.
    pub pasted: Option<Rect>,
    /// Which stored patch (index into the pool as passed in) was pasted.
    pub pasted_index: Option<usize>,
}

/// Cuts a random block from `img` into the pool and, if the pool already
/// held patches, pastes one of those opaquely at a random position. Patches
/// larger than the image are downscaled to fit.
pub fn random_patch(img: &Image, pool: PatchPool, p: &PatchMixParams, seed: u64) -> Result<PatchOutcome> {
    p.validate()?;
    let mut pool = pool;
    pool.capacity = p.pool_capacity;
    let mut rng = Stream::new(seed);
    let prior_len = pool.len();

    let cut = sample_block(
        &mut rng,
        img.width(),
        img.height(),
        p.block_area_range,
        BLOCK_ASPECT,
        false,
    )
    .map(|(w, h)| Rect {
        x: rng.below((img.width() - w + 1) as u64) as u32,
        y: rng.below((img.height() - h + 1) as u64) as u32,
        width: w,
        height: h,
    });

    let mut out = img.clone();
    let mut pasted = None;
    let mut pasted_index = None;
    if prior_len > 0 {
        let idx = rng.below(prior_len as u64) as usize;
        let patch = pool.patches[idx].fit_within(img.width(), img.height());
        let x0 = rng.below((img.width() - patch.width + 1) as u64) as u32;
        let y0 = rng.below((img.height() - patch.height + 1) as u64) as u32;
        for y in 0..patch.height {
            for x in 0..patch.width {
                out.put(x0 + x, y0 + y, patch.get(x, y));
            }
        }
        pasted = Some(Rect {
            x: x0,
            y: y0,
            width: patch.width,
            height: patch.height,
        });
        pasted_index = Some(idx);
    }
    if let Some(rect) = cut {
        pool.push(Patch::cut(img, rect));
    }
    Ok(PatchOutcome {
        image: out,
        pool,
        pasted,
        pasted_index,
    })
}

/// Alpha-blends a random block of `img` (weight `mix_coef`) onto a different
/// random position of the same image, reading only pre-modification pixels.
pub fn self_patch_mixing(img: &Image, p: &PatchMixParams, seed: u64) -> Result<Image> {
    Ok(self_patch_mixing_with_regions(img, p, seed)?.0)
}

/// [`self_patch_mixing`] that also reports `(source, target)` rectangles.
pub fn self_patch_mixing_with_regions(
    img: &Image,
    p: &PatchMixParams,
    seed: u64,
) -> Result<(Image, Option<(Rect, Rect)>)> {
    p.validate()?;
    let mut rng = Stream::new(seed);
    let Some((w, h)) = sample_block(
        &mut rng,
        img.width(),
        img.height(),
        p.block_area_range,
        BLOCK_ASPECT,
        false,
    ) else {
        return Ok((img.clone(), None));
    };
    let span_x = (img.width() - w + 1) as u64;
    let span_y = (img.height() - h + 1) as u64;
    if span_x * span_y < 2 {
        return Ok((img.clone(), None));
    }
    let src = (rng.below(span_x) as u32, rng.below(span_y) as u32);
    let mut dst = src;
    for _ in 0..100 {
        dst = (rng.below(span_x) as u32, rng.below(span_y) as u32);
        if dst != src {
            break;
        }
    }
    if dst == src {
        return Ok((img.clone(), None));
    }
    let mix = p.mix_coef as f32;
    let mut out = img.clone();
    for y in 0..h {
        for x in 0..w {
            let s = img.get(src.0 + x, src.1 + y);
            let t = img.get(dst.0 + x, dst.1 + y);
            let blended = [0, 1, 2].map(|c| {
                let v = mix * s[c] as f32 + (1.0 - mix) * t[c] as f32;
                v.round().clamp(0.0, 255.0) as u8
            });
            out.put(dst.0 + x, dst.1 + y, blended);
        }
    }
    let rect = |(x, y): (u32, u32)| Rect {
        x,
        y,
        width: w,
        height: h,
    };
    Ok((out, Some((rect(src), rect(dst)))))
}
