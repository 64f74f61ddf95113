use std::fmt;
use std::str::FromStr;

use rand_distr::{Beta, Distribution, Gamma};
use serde::{Deserialize, Serialize};

use crate::corruption::CorruptionType;
use crate::error::{Error, Result};
use crate::image::{quantize, Image};
use crate::rng::Stream;

/// Primitive ops for AugMix chains. None of them overlaps the test
/// corruptions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum AugOp {
    Identity,
    AutoContrast,
    Equalize,
    Posterize,
    Rotate,
    Solarize,
    ShearX,
    ShearY,
    TranslateX,
    TranslateY,
}

impl AugOp {
    pub const DEFAULT_SET: [AugOp; 9] = [
        AugOp::AutoContrast,
        AugOp::Equalize,
        AugOp::Posterize,
        AugOp::Rotate,
        AugOp::Solarize,
        AugOp::ShearX,
        AugOp::ShearY,
        AugOp::TranslateX,
        AugOp::TranslateY,
    ];

    pub fn name(self) -> &'static str {
        match self {
            AugOp::Identity => "identity",
            AugOp::AutoContrast => "autocontrast",
            AugOp::Equalize => "equalize",
            AugOp::Posterize => "posterize",
            AugOp::Rotate => "rotate",
            AugOp::Solarize => "solarize",
            AugOp::ShearX => "shear_x",
            AugOp::ShearY => "shear_y",
            AugOp::TranslateX => "translate_x",
            AugOp::TranslateY => "translate_y",
        }
    }

    /// Applies the op at strength `m` in (0, 1]; `sign` picks the direction
    /// of geometric ops.
    fn apply(self, img: &Image, m: f32, sign: f32) -> Image {
        let (w, h) = (img.width() as f32, img.height() as f32);
        match self {
            AugOp::Identity => img.clone(),
            AugOp::AutoContrast => per_channel_lut(img, autocontrast_lut),
            AugOp::Equalize => per_channel_lut(img, equalize_lut),
            AugOp::Posterize => {
                let bits = (4 - (4.0 * m) as i32).max(1) as u32;
                let mask = !((1u8 << (8 - bits)) - 1);
                map_bytes(img, |v| v & mask)
            }
            AugOp::Solarize => {
                let threshold = 256 - (256.0 * m) as i32;
                map_bytes(img, |v| if v as i32 >= threshold { 255 - v } else { v })
            }
            AugOp::Rotate => {
                let (s, c) = (sign * 15.0 * m).to_radians().sin_cos();
                let (cx, cy) = (w / 2.0, h / 2.0);
                warp(img, |x, y| {
                    let (dx, dy) = (x - cx, y - cy);
                    (c * dx + s * dy + cx, -s * dx + c * dy + cy)
                })
            }
            AugOp::ShearX => {
                let k = sign * 0.1 * m;
                warp(img, |x, y| (x + k * y, y))
            }
            AugOp::ShearY => {
                let k = sign * 0.1 * m;
                warp(img, |x, y| (x, y + k * x))
            }
            AugOp::TranslateX => {
                let t = sign * 0.1 * m * w;
                warp(img, |x, y| (x + t, y))
            }
            AugOp::TranslateY => {
                let t = sign * 0.1 * m * h;
                warp(img, |x, y| (x, y + t))
            }
        }
    }
}

impl fmt::Display for AugOp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for AugOp {
    type Err = Error;

    /// Rejects names of the held-out test corruptions with
    /// [`Error::ForbiddenAugOp`].
    fn from_str(s: &str) -> Result<Self> {
        let norm = s.trim().to_ascii_lowercase().replace('-', "_");
        let all = [AugOp::Identity].into_iter().chain(AugOp::DEFAULT_SET);
        if let Some(op) = all.into_iter().find(|op| op.name() == norm) {
            return Ok(op);
        }
        if CorruptionType::is_corruption_name(s) || ["color", "sharpness"].contains(&norm.as_str()) {
            return Err(Error::ForbiddenAugOp(s.to_string()));
        }
        Err(Error::UnknownAugOp(s.to_string()))
    }
}

impl Serialize for AugOp {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(self.name())
    }
}

impl<'de> Deserialize<'de> for AugOp {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        String::deserialize(d)?.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ChainDepth {
    Fixed(u32),
    /// Uniform in the inclusive range, drawn per chain.
    Random {
        min: u32,
        max: u32,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AugMixParams {
    /// Number of chains.
    pub width: usize,
    pub depth: ChainDepth,
    pub dirichlet_alpha: f64,
    pub beta_alpha: f64,
    pub ops: Vec<AugOp>,
    /// Op strength cap on a 1..=10 scale; each op draws U(0.1, severity)/10.
    pub severity: f32,
    /// Pins the skip-connection weight instead of drawing it from Beta.
    pub fixed_skip: Option<f64>,
}

impl Default for AugMixParams {
    fn default() -> Self {
        AugMixParams {
            width: 3,
            depth: ChainDepth::Random { min: 1, max: 3 },
            dirichlet_alpha: 1.0,
            beta_alpha: 1.0,
            ops: AugOp::DEFAULT_SET.to_vec(),
            severity: 3.0,
            fixed_skip: None,
        }
    }
}

impl AugMixParams {
    /// Builds the op set from names, rejecting any test-corruption name.
    pub fn with_op_names<S: AsRef<str>>(mut self, names: &[S]) -> Result<Self> {
        self.ops = names.iter().map(|n| n.as_ref().parse()).collect::<Result<_>>()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidParameter(m));
        if self.width == 0 {
            return bad("augmix width must be at least 1".into());
        }
        match self.depth {
            ChainDepth::Fixed(0) => return bad("augmix depth must be at least 1".into()),
            ChainDepth::Random { min, max } if min == 0 || min > max => {
                return bad(format!("augmix depth range [{min}, {max}]"))
            }
            _ => {}
        }
        if !(self.dirichlet_alpha > 0.0 && self.beta_alpha > 0.0) {
            return bad("augmix alphas must be positive".into());
        }
        if self.ops.is_empty() {
            return bad("augmix op set is empty".into());
        }
        if !(self.severity > 0.0 && self.severity <= 10.0) {
            return bad(format!("augmix severity {} outside (0, 10]", self.severity));
        }
        if let Some(m) = self.fixed_skip {
            crate::augment::check_unit("fixed_skip", m)?;
        }
        Ok(())
    }
}

/// Intermediate values of one AugMix call.
#[derive(Debug, Clone)]
pub struct AugMixTrace {
    pub chains: Vec<Image>,
    pub weights: Vec<f64>,
    pub skip: f64,
    /// Pre-quantization output on a [0, 1] scale.
    pub mixed: Vec<f32>,
    pub image: Image,
}

/// `m * img + (1 - m) * sum_i w_i * chain_i(img)` with `m ~ Beta(a, a)` and
/// `w ~ Dirichlet(alpha)`, computed in float then quantized.
pub fn augmix(img: &Image, p: &AugMixParams, seed: u64) -> Result<Image> {
    Ok(augmix_trace(img, p, seed)?.image)
}

pub fn augmix_trace(img: &Image, p: &AugMixParams, seed: u64) -> Result<AugMixTrace> {
    p.validate()?;
    let mut rng = Stream::new(seed);
    let gamma = Gamma::new(p.dirichlet_alpha, 1.0).map_err(|e| Error::InvalidParameter(e.to_string()))?;
    let mut weights: Vec<f64> = (0..p.width).map(|_| gamma.sample(&mut rng)).collect();
    let total: f64 = weights.iter().sum();
    if total > 0.0 {
        weights.iter_mut().for_each(|w| *w /= total);
    } else {
        weights.iter_mut().for_each(|w| *w = 1.0 / p.width as f64);
    }
    let skip = match p.fixed_skip {
        Some(m) => m,
        None => Beta::new(p.beta_alpha, p.beta_alpha)
            .map_err(|e| Error::InvalidParameter(e.to_string()))?
            .sample(&mut rng),
    };

    let mut chains = Vec::with_capacity(p.width);
    for _ in 0..p.width {
        let depth = match p.depth {
            ChainDepth::Fixed(d) => d,
            ChainDepth::Random { min, max } => rng.range_inclusive(min as i64, max as i64) as u32,
        };
        let mut aug = img.clone();
        for _ in 0..depth {
            let op = p.ops[rng.below(p.ops.len() as u64) as usize];
            let m = rng.uniform(0.1, p.severity as f64) as f32 / 10.0;
            let sign = if rng.chance(0.5) { 1.0 } else { -1.0 };
            aug = op.apply(&aug, m, sign);
        }
        chains.push(aug);
    }

    let n = img.pixels().len();
    let mut mix = vec![0.0f32; n];
    for (chain, &w) in chains.iter().zip(&weights) {
        let w = w as f32;
        for (acc, &v) in mix.iter_mut().zip(chain.pixels()) {
            *acc += w * (v as f32 / 255.0);
        }
    }
    let m = skip as f32;
    let mixed: Vec<f32> = img
        .pixels()
        .iter()
        .zip(&mix)
        .map(|(&v, &c)| m * (v as f32 / 255.0) + (1.0 - m) * c)
        .collect();
    let image = Image::new(img.width(), img.height(), mixed.iter().map(|&v| quantize(v)).collect())?;
    Ok(AugMixTrace {
        chains,
        weights,
        skip,
        mixed,
        image,
    })
}

fn map_bytes(img: &Image, f: impl Fn(u8) -> u8) -> Image {
    let mut out = img.clone();
    out.pixels_mut().iter_mut().for_each(|v| *v = f(*v));
    out
}

fn per_channel_lut(img: &Image, make: fn(&[u32; 256]) -> [u8; 256]) -> Image {
    let mut hist = [[0u32; 256]; 3];
    for (i, &v) in img.pixels().iter().enumerate() {
        hist[i % 3][v as usize] += 1;
    }
    let luts = hist.map(|h| make(&h));
    let mut out = img.clone();
    for (i, v) in out.pixels_mut().iter_mut().enumerate() {
        *v = luts[i % 3][*v as usize];
    }
    out
}

fn autocontrast_lut(h: &[u32; 256]) -> [u8; 256] {
    let lo = h.iter().position(|&c| c > 0);
    let hi = h.iter().rposition(|&c| c > 0);
    let mut lut = [0u8; 256];
    for (i, l) in lut.iter_mut().enumerate() {
        *l = i as u8;
    }
    if let (Some(lo), Some(hi)) = (lo, hi) {
        if hi > lo {
            let scale = 255.0 / (hi - lo) as f32;
            let offset = -(lo as f32) * scale;
            for (i, l) in lut.iter_mut().enumerate() {
                *l = ((i as f32 * scale + offset) as i32).clamp(0, 255) as u8;
            }
        }
    }
    lut
}

fn equalize_lut(h: &[u32; 256]) -> [u8; 256] {
    let mut lut = [0u8; 256];
    for (i, l) in lut.iter_mut().enumerate() {
        *l = i as u8;
    }
    let nonzero: Vec<u32> = h.iter().copied().filter(|&c| c > 0).collect();
    if nonzero.len() <= 1 {
        return lut;
    }
    let step = (nonzero.iter().sum::<u32>() - nonzero[nonzero.len() - 1]) / 255;
    if step == 0 {
        return lut;
    }
    let mut n = step / 2;
    for (i, l) in lut.iter_mut().enumerate() {
        *l = (n / step).min(255) as u8;
        n += h[i];
    }
    lut
}

/// Inverse-mapped bilinear warp; samples outside the image are black.
fn warp(img: &Image, source: impl Fn(f32, f32) -> (f32, f32)) -> Image {
    let (w, h) = (img.width(), img.height());
    Image::from_fn(w, h, |x, y| {
        let (sx, sy) = source(x as f32 + 0.5, y as f32 + 0.5);
        let (sx, sy) = (sx - 0.5, sy - 0.5);
        let x0 = sx.floor();
        let y0 = sy.floor();
        let (fx, fy) = (sx - x0, sy - y0);
        let tap = |xi: f32, yi: f32| -> [f32; 3] {
            if xi < 0.0 || yi < 0.0 || xi >= w as f32 || yi >= h as f32 {
                [0.0; 3]
            } else {
                img.get(xi as u32, yi as u32).map(|v| v as f32)
            }
        };
        let a = tap(x0, y0);
        let b = tap(x0 + 1.0, y0);
        let c = tap(x0, y0 + 1.0);
        let d = tap(x0 + 1.0, y0 + 1.0);
        [0, 1, 2].map(|k| {
            let top = a[k] * (1.0 - fx) + b[k] * fx;
            let bottom = c[k] * (1.0 - fx) + d[k] * fx;
            (top * (1.0 - fy) + bottom * fy).round().clamp(0.0, 255.0) as u8
        })
    })
    .expect("warp keeps the input dimensions")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::person_image;

    #[test]
    fn rejects_corruption_names() {
        for name in ["contrast", "brightness", "jpeg", "gaussian-noise", "fog"] {
            let r = AugMixParams::default().with_op_names(&[name]);
            assert!(matches!(r, Err(Error::ForbiddenAugOp(_))), "{name}");
        }
        assert!(matches!(
            AugMixParams::default().with_op_names(&["teleport"]),
            Err(Error::UnknownAugOp(_))
        ));
        assert!(AugMixParams::default().with_op_names(&["rotate", "equalize"]).is_ok());
    }

    #[test]
    fn skip_weight_one_is_identity() {
        let img = person_image(32, 64, 4, 0);
        let p = AugMixParams {
            fixed_skip: Some(1.0),
            ..Default::default()
        };
        assert_eq!(augmix(&img, &p, 17).unwrap(), img);
    }

    #[test]
    fn identity_ops_reproduce_input_within_one_level() {
        let img = person_image(32, 64, 4, 0);
        let p = AugMixParams::default().with_op_names(&["identity"]).unwrap();
        for seed in 0..10 {
            let out = augmix(&img, &p, seed).unwrap();
            let worst = img
                .pixels()
                .iter()
                .zip(out.pixels())
                .map(|(a, b)| a.abs_diff(*b))
                .max()
                .unwrap();
            assert!(worst <= 1);
        }
    }

    #[test]
    fn equalize_matches_reference_lut_on_two_levels() {
        let mut h = [0u32; 256];
        h[10] = 50;
        h[200] = 50;
        let lut = equalize_lut(&h);
        // step = (100 - 50) / 255 = 0 -> identity
        assert_eq!(lut[10], 10);
        let mut h = [0u32; 256];
        h[0] = 1000;
        h[100] = 1000;
        h[255] = 1000;
        let lut = equalize_lut(&h);
        assert_eq!(lut[0], 0);
        assert!(lut[100] > 100);
    }

    #[test]
    fn geometric_ops_preserve_shape() {
        let img = person_image(24, 48, 4, 0);
        for op in AugOp::DEFAULT_SET {
            let out = op.apply(&img, 1.0, -1.0);
            assert!(out.same_dimensions(&img));
        }
    }
}
