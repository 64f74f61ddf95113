use rand_distr::{Distribution, StandardNormal};

use super::blur::motion_blur;
use super::catalog::{RainParams, SnowParams, SpatterKind, SpatterParams, RAIN_ANGLE_DEG};
use super::texture::{frost_textures, plasma_fractal};
use crate::raster::{hsv_to_rgb, luma, rgb_to_hsv, Raster};
use crate::rng::Stream;

fn normal_plane(width: usize, height: usize, loc: f32, scale: f32, rng: &mut Stream) -> Raster {
    let mut p = Raster::zeros(width, height, 1);
    for v in p.data.iter_mut() {
        let z: f64 = StandardNormal.sample(rng);
        *v = loc + scale * z as f32;
    }
    p
}

pub(super) fn snow(x: &Raster, p: &SnowParams, rng: &mut Stream) -> Raster {
    let (w, h) = (x.width, x.height);
    let mut layer = normal_plane(w, h, p.loc, p.scale, rng).zoom_center(p.zoom);
    layer.map(|v| if v < p.threshold { 0.0 } else { v.clamp(0.0, 1.0) });
    let angle = rng.uniform(-135.0, -45.0) as f32;
    let layer = motion_blur(&layer, p.blur_radius, p.blur_sigma, angle);
    let flipped = layer.rot180();

    let mut out = x.clone();
    for yy in 0..h {
        for xx in 0..w {
            let i = x.idx(xx, yy, 0);
            let (r, g, b) = (x.data[i], x.data[i + 1], x.data[i + 2]);
            let lifted = luma(r, g, b) * 1.5 + 0.5;
            let flake = layer.data[yy * w + xx] + flipped.data[yy * w + xx];
            for c in 0..3 {
                let v = x.data[i + c];
                out.data[i + c] = p.blend * v + (1.0 - p.blend) * v.max(lifted) + flake;
            }
        }
    }
    out
}

/// Overlays a random crop of one of the five frost textures (tiled if the
/// image is larger than the texture).
pub(super) fn frost(x: &Raster, (img_w, frost_w): (f32, f32), rng: &mut Stream) -> Raster {
    let textures = frost_textures();
    let tex = &textures[rng.below(textures.len() as u64) as usize];
    let max_x = tex.width.saturating_sub(x.width);
    let max_y = tex.height.saturating_sub(x.height);
    let ox = rng.below(max_x as u64 + 1) as usize;
    let oy = rng.below(max_y as u64 + 1) as usize;
    let mut out = x.clone();
    for yy in 0..x.height {
        for xx in 0..x.width {
            let tx = (ox + xx) % tex.width;
            let ty = (oy + yy) % tex.height;
            for c in 0..3 {
                let i = out.idx(xx, yy, c);
                out.data[i] = img_w * x.data[i] + frost_w * tex.at(tx, ty, c);
            }
        }
    }
    out
}

pub(super) fn fog(mut x: Raster, (strength, decay): (f32, f32), rng: &mut Stream) -> Raster {
    let size = x.width.max(x.height).next_power_of_two();
    let plasma = plasma_fractal(size, decay, rng);
    let max_val = x.max_value();
    let scale = max_val / (max_val + strength);
    let w = x.width;
    for (i, v) in x.data.iter_mut().enumerate() {
        let pix = i / 3;
        let (px, py) = (pix % w, pix / w);
        *v = (*v + strength * plasma[py * size + px]) * scale;
    }
    x
}

pub(super) fn brightness(mut x: Raster, shift: f32) -> Raster {
    for px in x.data.chunks_mut(3) {
        let (h, s, v) = rgb_to_hsv(px[0], px[1], px[2]);
        let (r, g, b) = hsv_to_rgb(h, s, (v + shift).clamp(0.0, 1.0));
        px.copy_from_slice(&[r, g, b]);
    }
    x
}

/// Water droplets (pale turquoise highlights) at low severities, mud
/// splashes (opaque brown) at high severities.
pub(super) fn spatter(mut x: Raster, p: &SpatterParams, rng: &mut Stream) -> Raster {
    let (w, h) = (x.width, x.height);
    let mut liquid = normal_plane(w, h, p.loc, p.scale, rng).gaussian_blur(p.sigma);
    liquid.map(|v| if v < p.threshold { 0.0 } else { v });
    match p.kind {
        SpatterKind::Water => {
            // Droplet rims: gradient magnitude of the liquid layer inside drops,
            // sharpened to a fourth power so highlights stay thin.
            let mut rim = Raster::zeros(w, h, 1);
            for yy in 0..h {
                for xx in 0..w {
                    if liquid.at(xx, yy, 0) <= 0.0 {
                        continue;
                    }
                    let gx = liquid.at_clamped(xx as isize + 1, yy as isize, 0)
                        - liquid.at_clamped(xx as isize - 1, yy as isize, 0);
                    let gy = liquid.at_clamped(xx as isize, yy as isize + 1, 0)
                        - liquid.at_clamped(xx as isize, yy as isize - 1, 0);
                    rim.data[yy * w + xx] = (gx * gx + gy * gy).sqrt();
                }
            }
            let rim = rim.gaussian_blur(0.5);
            let peak = rim.max_value();
            if peak > 0.0 {
                let color = [175.0 / 255.0, 238.0 / 255.0, 238.0 / 255.0];
                for (i, v) in x.data.iter_mut().enumerate() {
                    let r = rim.data[i / 3] / peak;
                    let m = r.powi(4) * p.intensity;
                    *v += m * color[i % 3];
                }
            }
        }
        SpatterKind::Mud => {
            let mut mask = Raster::zeros(w, h, 1);
            for (m, l) in mask.data.iter_mut().zip(&liquid.data) {
                *m = if *l > p.threshold { 1.0 } else { 0.0 };
            }
            let mut mask = mask.gaussian_blur(p.intensity);
            mask.map(|v| if v < 0.8 { 0.0 } else { v });
            let color = [63.0 / 255.0, 42.0 / 255.0, 20.0 / 255.0];
            for (i, v) in x.data.iter_mut().enumerate() {
                let m = mask.data[i / 3];
                *v = *v * (1.0 - m) + color[i % 3] * m;
            }
        }
    }
    x
}

/// Bright one-pixel streaks at a shared slant, softened along the streak
/// direction, alpha-composited towards white.
pub(super) fn rain(mut x: Raster, p: &RainParams, rng: &mut Stream) -> Raster {
    let (w, h) = (x.width, x.height);
    let angle = rng.uniform(RAIN_ANGLE_DEG.0, RAIN_ANGLE_DEG.1) as f32;
    let (sin, cos) = angle.to_radians().sin_cos();
    let length = p.length * h as f32 / 256.0;
    let count = (p.density * w as f32).round().max(1.0) as usize;
    let reach = length * sin.abs();

    let mut layer = Raster::zeros(w, h, 1);
    for _ in 0..count {
        let x0 = rng.uniform(0.0, (w as f32 + reach) as f64) as f32;
        let y0 = rng.uniform(-(length as f64), h as f64) as f32;
        let steps = length.ceil() as usize;
        for t in 0..=steps {
            let px = (x0 + t as f32 * sin).round();
            let py = (y0 + t as f32 * cos).round();
            if px >= 0.0 && py >= 0.0 && (px as usize) < w && (py as usize) < h {
                layer.data[py as usize * w + px as usize] = 1.0;
            }
        }
    }
    // Streak direction measured from the x axis for line_blur.
    let dir = 90.0 - angle;
    let layer = layer.line_blur(&[(-1.0, 1.0 / 3.0), (0.0, 1.0 / 3.0), (1.0, 1.0 / 3.0)], dir);

    for (i, v) in x.data.iter_mut().enumerate() {
        let a = p.alpha * layer.data[i / 3].min(1.0);
        *v = *v * (1.0 - a) + a;
    }
    x
}
