use image::codecs::jpeg::JpegEncoder;
use image::{ExtendedColorType, ImageFormat};

use super::catalog::ElasticParams;
use crate::error::{Error, Result};
use crate::image::Image;
use crate::raster::{hsv_to_rgb, rgb_to_hsv, Raster};
use crate::rng::Stream;

pub(super) fn contrast(mut x: Raster, factor: f32) -> Raster {
    let n = (x.width * x.height) as f64;
    let mut means = [0.0f64; 3];
    for px in x.data.chunks(3) {
        for c in 0..3 {
            means[c] += px[c] as f64;
        }
    }
    let means = means.map(|m| (m / n) as f32);
    for px in x.data.chunks_mut(3) {
        for c in 0..3 {
            px[c] = (px[c] - means[c]) * factor + means[c];
        }
    }
    x
}

pub(super) fn saturate(mut x: Raster, (mul, add): (f32, f32)) -> Raster {
    for px in x.data.chunks_mut(3) {
        let (h, s, v) = rgb_to_hsv(px[0], px[1], px[2]);
        let (r, g, b) = hsv_to_rgb(h, (s * mul + add).clamp(0.0, 1.0), v);
        px.copy_from_slice(&[r, g, b]);
    }
    x
}

/// Encode at `quality`, decode, keep the decoded pixels.
pub(super) fn jpeg(img: &Image, quality: u8) -> Result<Image> {
    let mut buf = Vec::new();
    JpegEncoder::new_with_quality(&mut buf, quality)
        .encode(img.pixels(), img.width(), img.height(), ExtendedColorType::Rgb8)
        .map_err(|e| Error::Invariant(format!("jpeg encode: {e}")))?;
    let decoded = image::load_from_memory_with_format(&buf, ImageFormat::Jpeg)
        .map_err(|e| Error::Invariant(format!("jpeg decode: {e}")))?
        .to_rgb8();
    Image::from_rgb_image(decoded)
}

/// Area-average weights mapping `src` samples onto `dst` cells.
fn box_weights(src: usize, dst: usize) -> Vec<Vec<(usize, f32)>> {
    let scale = src as f64 / dst as f64;
    (0..dst)
        .map(|i| {
            let lo = i as f64 * scale;
            let hi = (i + 1) as f64 * scale;
            let mut taps = Vec::new();
            let mut j = lo.floor() as usize;
            while (j as f64) < hi && j < src {
                let overlap = (hi.min(j as f64 + 1.0) - lo.max(j as f64)).max(0.0);
                if overlap > 0.0 {
                    taps.push((j, (overlap / scale) as f32));
                }
                j += 1;
            }
            taps
        })
        .collect()
}

/// Area-average downscale by `scale`, then bilinear upscale back.
pub(super) fn pixelate(x: &Raster, scale: f32) -> Raster {
    let (w, h) = (x.width, x.height);
    let dw = ((w as f32 * scale).round() as usize).max(1);
    let dh = ((h as f32 * scale).round() as usize).max(1);
    let wx = box_weights(w, dw);
    let wy = box_weights(h, dh);
    let mut small = Raster::zeros(dw, dh, 3);
    for (sy, ty) in wy.iter().enumerate() {
        for (sx, tx) in wx.iter().enumerate() {
            for c in 0..3 {
                let mut acc = 0.0;
                for &(yy, wyv) in ty {
                    for &(xx, wxv) in tx {
                        acc += wyv * wxv * x.at(xx, yy, c);
                    }
                }
                let i = small.idx(sx, sy, c);
                small.data[i] = acc;
            }
        }
    }
    let (fx, fy) = (dw as f32 / w as f32, dh as f32 / h as f32);
    let mut out = Raster::zeros(w, h, 3);
    for yy in 0..h {
        let sy = (yy as f32 + 0.5) * fy - 0.5;
        for xx in 0..w {
            let sx = (xx as f32 + 0.5) * fx - 0.5;
            for c in 0..3 {
                let i = out.idx(xx, yy, c);
                out.data[i] = small.sample(sx, sy, c);
            }
        }
    }
    out
}

/// 2x3 affine map taking the `from` triangle onto the `to` triangle.
fn affine_from_points(from: [(f32, f32); 3], to: [(f32, f32); 3]) -> [f32; 6] {
    let [(x0, y0), (x1, y1), (x2, y2)] = from.map(|(a, b)| (a as f64, b as f64));
    let det = x0 * (y1 - y2) - y0 * (x1 - x2) + (x1 * y2 - x2 * y1);
    let solve = |v0: f64, v1: f64, v2: f64| {
        let a = (v0 * (y1 - y2) - y0 * (v1 - v2) + (v1 * y2 - v2 * y1)) / det;
        let b = (x0 * (v1 - v2) - v0 * (x1 - x2) + (x1 * v2 - x2 * v1)) / det;
        let c = (x0 * (y1 * v2 - y2 * v1) - y0 * (x1 * v2 - x2 * v1) + v0 * (x1 * y2 - x2 * y1)) / det;
        (a, b, c)
    };
    let (a, b, c) = solve(to[0].0 as f64, to[1].0 as f64, to[2].0 as f64);
    let (d, e, f) = solve(to[0].1 as f64, to[1].1 as f64, to[2].1 as f64);
    [a, b, c, d, e, f].map(|v| v as f32)
}

fn smooth_field(w: usize, h: usize, sigma: f32, rms_target: f32, rng: &mut Stream) -> Vec<f32> {
    let mut field = Raster::zeros(w, h, 1);
    for v in field.data.iter_mut() {
        *v = rng.next_f32() * 2.0 - 1.0;
    }
    let field = field.gaussian_blur(sigma);
    let rms = (field.data.iter().map(|v| (*v as f64).powi(2)).sum::<f64>() / field.data.len() as f64).sqrt() as f32;
    let gain = if rms > 0.0 { rms_target / rms } else { 0.0 };
    field.data.iter().map(|v| v * gain).collect()
}

/// Random affine jitter of three control points composed with a smooth
/// random displacement field; bilinear resampling.
pub(super) fn elastic(x: &Raster, p: &ElasticParams, rng: &mut Stream) -> Raster {
    let (w, h) = (x.width, x.height);
    let side = w.min(h) as f32;
    let (cx, cy) = (w as f32 / 2.0, h as f32 / 2.0);
    let sq = (w.min(h) / 3) as f32;
    let from = [(cx + sq, cy + sq), (cx + sq, cy - sq), (cx - sq, cy - sq)];
    let jitter = p.affine * side;
    let mut to = from;
    for pt in to.iter_mut() {
        pt.0 += rng.uniform(-jitter as f64, jitter as f64) as f32;
        pt.1 += rng.uniform(-jitter as f64, jitter as f64) as f32;
    }
    // Output pixel q samples the source at inverse_affine(q + displacement(q)).
    let inv = affine_from_points(to, from);
    let sigma = p.smoothing * side;
    let amp = p.displacement * side;
    let dx = smooth_field(w, h, sigma, amp, rng);
    let dy = smooth_field(w, h, sigma, amp, rng);
    x.remap(|xx, yy| {
        let i = yy * w + xx;
        let qx = xx as f32 + dx[i];
        let qy = yy as f32 + dy[i];
        (inv[0] * qx + inv[1] * qy + inv[2], inv[3] * qx + inv[4] * qy + inv[5])
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn affine_solver_recovers_translation() {
        let from = [(0.0, 0.0), (1.0, 0.0), (0.0, 1.0)];
        let to = [(2.0, 3.0), (3.0, 3.0), (2.0, 4.0)];
        let m = affine_from_points(from, to);
        let expect = [1.0, 0.0, 2.0, 0.0, 1.0, 3.0];
        for (a, b) in m.iter().zip(expect) {
            assert!((a - b).abs() < 1e-5);
        }
    }

    #[test]
    fn box_weights_partition_unity() {
        for (src, dst) in [(64, 38), (128, 32), (10, 10), (7, 3)] {
            for taps in box_weights(src, dst) {
                let s: f32 = taps.iter().map(|t| t.1).sum();
                assert!((s - 1.0).abs() < 1e-5);
            }
        }
    }

    #[test]
    fn full_contrast_is_identity() {
        let img = Image::from_fn(8, 8, |x, y| [(x * 30) as u8, (y * 30) as u8, 9]).unwrap();
        let r = contrast(Raster::from_image(&img), 1.0);
        assert_eq!(r.to_image(), img);
    }
}
