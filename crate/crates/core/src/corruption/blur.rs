use crate::raster::{Kernel, Raster};
use crate::rng::Stream;

/// Disk kernel of the given radius, anti-aliased with a small Gaussian.
fn disk_kernel(radius: f32, alias_sigma: f32) -> Kernel {
    let half = radius.max(8.0) as isize;
    let size = (2 * half + 1) as usize;
    let r2 = radius * radius;
    let mut disk = vec![0.0f32; size * size];
    for y in -half..=half {
        for x in -half..=half {
            if (x * x + y * y) as f32 <= r2 {
                disk[((y + half) as usize) * size + (x + half) as usize] = 1.0;
            }
        }
    }
    // Fixed-size anti-alias kernel: 3 taps up to radius 8, 5 beyond.
    let taps: isize = if radius <= 8.0 { 1 } else { 2 };
    let g: Vec<f32> = (-taps..=taps)
        .map(|i| (-((i * i) as f32) / (2.0 * alias_sigma * alias_sigma)).exp())
        .collect();
    let gs: f32 = g.iter().sum();
    let g: Vec<f32> = g.iter().map(|v| v / gs).collect();
    let mut smoothed = vec![0.0f32; size * size];
    for y in 0..size as isize {
        for x in 0..size as isize {
            let mut acc = 0.0;
            for (j, gy) in g.iter().enumerate() {
                for (i, gx) in g.iter().enumerate() {
                    let sx = x + i as isize - taps;
                    let sy = y + j as isize - taps;
                    if sx >= 0 && sy >= 0 && (sx as usize) < size && (sy as usize) < size {
                        acc += gx * gy * disk[sy as usize * size + sx as usize];
                    }
                }
            }
            smoothed[y as usize * size + x as usize] = acc;
        }
    }
    Kernel {
        size,
        weights: smoothed,
    }
    .normalized()
}

pub(super) fn defocus(x: &Raster, (radius, alias): (f32, f32)) -> Raster {
    x.convolve(&disk_kernel(radius, alias))
}

/// Blur, then locally shuffle pixels by swapping each with a random
/// neighbour within `max_delta`, then blur again.
pub(super) fn glass(x: &Raster, (sigma, max_delta, iterations): (f32, i64, usize), rng: &mut Stream) -> Raster {
    let mut b = x.gaussian_blur(sigma);
    let (w, h) = (b.width as i64, b.height as i64);
    for _ in 0..iterations {
        let mut y = h - max_delta;
        while y > max_delta {
            let mut xx = w - max_delta;
            while xx > max_delta {
                let dx = rng.range_inclusive(-max_delta, max_delta - 1);
                let dy = rng.range_inclusive(-max_delta, max_delta - 1);
                let (y2, x2) = (y + dy, xx + dx);
                if y < h && xx < w && (0..h).contains(&y2) && (0..w).contains(&x2) {
                    for c in 0..3 {
                        let a = b.idx(xx as usize, y as usize, c);
                        let bidx = b.idx(x2 as usize, y2 as usize, c);
                        b.data.swap(a, bidx);
                    }
                }
                xx -= 1;
            }
            y -= 1;
        }
    }
    b.clamp01();
    b.gaussian_blur(sigma)
}

/// One-sided Gaussian-weighted streak blur along `angle_deg`, integer taps.
pub(crate) fn motion_blur_taps(radius: usize, sigma: f32, angle_deg: f32) -> Vec<(isize, isize, f32)> {
    let width = radius * 2 + 1;
    let weights: Vec<f32> = (0..width)
        .map(|i| (-((i * i) as f32) / (2.0 * sigma * sigma)).exp())
        .collect();
    let total: f32 = weights.iter().sum();
    let (s, c) = angle_deg.to_radians().sin_cos();
    (0..width)
        .map(|i| {
            let dy = -((i as f32 * s) - 0.5).ceil() as isize;
            let dx = -((i as f32 * c) - 0.5).ceil() as isize;
            (dx, dy, weights[i] / total)
        })
        .collect()
}

pub(crate) fn motion_blur(x: &Raster, radius: usize, sigma: f32, angle_deg: f32) -> Raster {
    let taps: Vec<(isize, isize, f32)> = motion_blur_taps(radius, sigma, angle_deg)
        .into_iter()
        .take_while(|&(dx, dy, _)| dx.unsigned_abs() < x.width && dy.unsigned_abs() < x.height)
        .collect();
    let norm: f32 = taps.iter().map(|t| t.2).sum();
    let mut out = Raster::zeros(x.width, x.height, x.channels);
    for yy in 0..x.height {
        for xx in 0..x.width {
            for c in 0..x.channels {
                let mut acc = 0.0;
                for &(dx, dy, wt) in &taps {
                    acc += wt * x.at_clamped(xx as isize - dx, yy as isize - dy, c);
                }
                let i = out.idx(xx, yy, c);
                out.data[i] = acc / norm;
            }
        }
    }
    out
}

pub(super) fn motion(x: &Raster, (radius, sigma): (usize, f32), rng: &mut Stream) -> Raster {
    let angle = rng.uniform(-45.0, 45.0) as f32;
    motion_blur(x, radius, sigma, angle)
}

pub(super) fn zoom_factors((step, count): (f32, usize)) -> Vec<f32> {
    (0..count).map(|i| 1.0 + step * i as f32).collect()
}

/// Average of the image with centre zooms at each factor.
pub(super) fn zoom(x: &Raster, range: (f32, usize)) -> Raster {
    let factors = zoom_factors(range);
    let mut acc = x.clone();
    for &f in &factors {
        let z = x.zoom_center(f);
        for (a, b) in acc.data.iter_mut().zip(&z.data) {
            *a += b;
        }
    }
    let n = (factors.len() + 1) as f32;
    acc.map(|v| v / n);
    acc
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zoom_factor_counts() {
        use crate::corruption::catalog::ZOOM;
        let counts: Vec<usize> = ZOOM.iter().map(|&r| zoom_factors(r).len()).collect();
        assert_eq!(counts, vec![11, 16, 11, 13, 11]);
    }

    #[test]
    fn disk_kernel_is_normalized_and_symmetric() {
        let k = disk_kernel(6.0, 0.5);
        assert!((k.weights.iter().sum::<f32>() - 1.0).abs() < 1e-5);
        let n = k.size;
        for y in 0..n {
            for x in 0..n {
                let a = k.weights[y * n + x];
                let b = k.weights[(n - 1 - y) * n + (n - 1 - x)];
                assert!((a - b).abs() < 1e-7);
            }
        }
    }

    #[test]
    fn motion_taps_start_at_origin() {
        let taps = motion_blur_taps(10, 3.0, 30.0);
        assert_eq!(taps.len(), 21);
        assert_eq!((taps[0].0, taps[0].1), (0, 0));
        assert!((taps.iter().map(|t| t.2).sum::<f32>() - 1.0).abs() < 1e-5);
    }
}
