//! Float rasters on the [0, 1] scale and the filtering/resampling kernels the
//! corruptions are built from. All boundary handling is edge-clamp.

use rayon::prelude::*;

use crate::image::{quantize, Image};

/// Interleaved float raster with 1 or 3 channels.
#[derive(Debug, Clone, PartialEq)]
pub struct Raster {
    pub width: usize,
    pub height: usize,
    pub channels: usize,
    pub data: Vec<f32>,
}

impl Raster {
    pub fn zeros(width: usize, height: usize, channels: usize) -> Self {
        Raster {
            width,
            height,
            channels,
            data: vec![0.0; width * height * channels],
        }
    }

    pub fn from_image(img: &Image) -> Self {
        Raster {
            width: img.width() as usize,
            height: img.height() as usize,
            channels: 3,
            data: img.pixels().iter().map(|&v| v as f32 / 255.0).collect(),
        }
    }

    /// Clamp, round half away from zero, 8-bit. Requires 3 channels.
    pub fn to_image(&self) -> Image {
        assert_eq!(self.channels, 3, "to_image needs an RGB raster");
        let pixels = self.data.iter().map(|&v| quantize(v)).collect();
        Image::new(self.width as u32, self.height as u32, pixels).expect("raster dimensions come from a valid image")
    }

    #[inline]
    pub fn idx(&self, x: usize, y: usize, c: usize) -> usize {
        (y * self.width + x) * self.channels + c
    }

    #[inline]
    pub fn at(&self, x: usize, y: usize, c: usize) -> f32 {
        self.data[self.idx(x, y, c)]
    }

    #[inline]
    pub fn at_clamped(&self, x: isize, y: isize, c: usize) -> f32 {
        let xc = x.clamp(0, self.width as isize - 1) as usize;
        let yc = y.clamp(0, self.height as isize - 1) as usize;
        self.at(xc, yc, c)
    }

    /// Bilinear sample at continuous pixel coordinates (pixel centres at
    /// integers), edge-clamped.
    #[inline]
    pub fn sample(&self, x: f32, y: f32, c: usize) -> f32 {
        let x = x.clamp(0.0, (self.width - 1) as f32);
        let y = y.clamp(0.0, (self.height - 1) as f32);
        let x0 = x.floor();
        let y0 = y.floor();
        let fx = x - x0;
        let fy = y - y0;
        let x0 = x0 as usize;
        let y0 = y0 as usize;
        let x1 = (x0 + 1).min(self.width - 1);
        let y1 = (y0 + 1).min(self.height - 1);
        let top = self.at(x0, y0, c) * (1.0 - fx) + self.at(x1, y0, c) * fx;
        let bottom = self.at(x0, y1, c) * (1.0 - fx) + self.at(x1, y1, c) * fx;
        top * (1.0 - fy) + bottom * fy
    }

    pub fn map(&mut self, f: impl Fn(f32) -> f32 + Sync) {
        self.data.par_iter_mut().for_each(|v| *v = f(*v));
    }

    pub fn clamp01(&mut self) {
        self.map(|v| v.clamp(0.0, 1.0));
    }

    pub fn max_value(&self) -> f32 {
        self.data.iter().copied().fold(f32::NEG_INFINITY, f32::max)
    }

    /// Builds a new raster by sampling `self` at `source(x, y)` for every
    /// output pixel (bilinear, edge clamp).
    pub fn remap(&self, source: impl Fn(usize, usize) -> (f32, f32) + Sync) -> Raster {
        let mut out = Raster::zeros(self.width, self.height, self.channels);
        let ch = self.channels;
        out.data
            .par_chunks_mut(self.width * ch)
            .enumerate()
            .for_each(|(y, row)| {
                for x in 0..self.width {
                    let (sx, sy) = source(x, y);
                    for c in 0..ch {
                        row[x * ch + c] = self.sample(sx, sy, c);
                    }
                }
            });
        out
    }

    /// Centre zoom by `factor` (> 1 magnifies), cropped back to the original size.
    pub fn zoom_center(&self, factor: f32) -> Raster {
        let cx = (self.width as f32 - 1.0) / 2.0;
        let cy = (self.height as f32 - 1.0) / 2.0;
        self.remap(|x, y| (cx + (x as f32 - cx) / factor, cy + (y as f32 - cy) / factor))
    }

    /// Rotation by 180 degrees.
    pub fn rot180(&self) -> Raster {
        let mut out = Raster::zeros(self.width, self.height, self.channels);
        for y in 0..self.height {
            for x in 0..self.width {
                for c in 0..self.channels {
                    let v = self.at(self.width - 1 - x, self.height - 1 - y, c);
                    let i = out.idx(x, y, c);
                    out.data[i] = v;
                }
            }
        }
        out
    }

    /// Separable Gaussian blur, kernel truncated at 4 sigma.
    pub fn gaussian_blur(&self, sigma: f32) -> Raster {
        if sigma <= 0.0 {
            return self.clone();
        }
        let kernel = gaussian_kernel_1d(sigma);
        let r = (kernel.len() / 2) as isize;
        let ch = self.channels;
        let w = self.width;
        let mut tmp = Raster::zeros(self.width, self.height, ch);
        tmp.data.par_chunks_mut(w * ch).enumerate().for_each(|(y, row)| {
            for x in 0..w {
                for c in 0..ch {
                    let mut acc = 0.0f32;
                    for (k, &wt) in kernel.iter().enumerate() {
                        acc += wt * self.at_clamped(x as isize + k as isize - r, y as isize, c);
                    }
                    row[x * ch + c] = acc;
                }
            }
        });
        let mut out = Raster::zeros(self.width, self.height, ch);
        out.data.par_chunks_mut(w * ch).enumerate().for_each(|(y, row)| {
            for x in 0..w {
                for c in 0..ch {
                    let mut acc = 0.0f32;
                    for (k, &wt) in kernel.iter().enumerate() {
                        acc += wt * tmp.at_clamped(x as isize, y as isize + k as isize - r, c);
                    }
                    row[x * ch + c] = acc;
                }
            }
        });
        out
    }

    /// Dense 2-D correlation with a square odd-sized kernel.
    pub fn convolve(&self, kernel: &Kernel) -> Raster {
        let r = kernel.size / 2;
        let ch = self.channels;
        let (w, h) = (self.width, self.height);
        let pw = w + 2 * r;
        let mut padded = vec![0.0f32; pw * (h + 2 * r) * ch];
        for py in 0..h + 2 * r {
            let sy = (py as isize - r as isize).clamp(0, h as isize - 1) as usize;
            for px in 0..pw {
                let sx = (px as isize - r as isize).clamp(0, w as isize - 1) as usize;
                let src = self.idx(sx, sy, 0);
                let dst = (py * pw + px) * ch;
                padded[dst..dst + ch].copy_from_slice(&self.data[src..src + ch]);
            }
        }
        let taps: Vec<(usize, usize, f32)> = (0..kernel.size)
            .flat_map(|ky| (0..kernel.size).map(move |kx| (kx, ky)))
            .filter_map(|(kx, ky)| {
                let wt = kernel.weights[ky * kernel.size + kx];
                (wt != 0.0).then_some((kx, ky, wt))
            })
            .collect();
        let mut out = Raster::zeros(w, h, ch);
        out.data.par_chunks_mut(w * ch).enumerate().for_each(|(y, row)| {
            for &(kx, ky, wt) in &taps {
                let base = ((y + ky) * pw + kx) * ch;
                let src = &padded[base..base + w * ch];
                for (o, s) in row.iter_mut().zip(src) {
                    *o += wt * s;
                }
            }
        });
        out
    }

    /// Line blur: weighted sum of samples at `offsets[i] * (cos, sin)(angle)`.
    pub fn line_blur(&self, offsets: &[(f32, f32)], angle_deg: f32) -> Raster {
        let (s, c) = angle_deg.to_radians().sin_cos();
        self.weighted_shift_sum(offsets.iter().map(|&(d, w)| (d * c, d * s, w)))
    }

    fn weighted_shift_sum(&self, taps: impl Iterator<Item = (f32, f32, f32)>) -> Raster {
        let taps: Vec<(f32, f32, f32)> = taps.collect();
        let ch = self.channels;
        let w = self.width;
        let mut out = Raster::zeros(self.width, self.height, ch);
        out.data.par_chunks_mut(w * ch).enumerate().for_each(|(y, row)| {
            for x in 0..w {
                for c in 0..ch {
                    let mut acc = 0.0f32;
                    for &(dx, dy, wt) in &taps {
                        acc += wt * self.sample(x as f32 + dx, y as f32 + dy, c);
                    }
                    row[x * ch + c] = acc;
                }
            }
        });
        out
    }
}

/// Square correlation kernel.
#[derive(Debug, Clone)]
pub struct Kernel {
    pub size: usize,
    pub weights: Vec<f32>,
}

impl Kernel {
    pub fn normalized(mut self) -> Self {
        let sum: f32 = self.weights.iter().sum();
        if sum != 0.0 {
            self.weights.iter_mut().for_each(|w| *w /= sum);
        }
        self
    }
}

pub fn gaussian_kernel_1d(sigma: f32) -> Vec<f32> {
    let radius = (4.0 * sigma).ceil().max(1.0) as isize;
    let denom = 2.0 * sigma * sigma;
    let mut k: Vec<f32> = (-radius..=radius).map(|i| (-((i * i) as f32) / denom).exp()).collect();
    let sum: f32 = k.iter().sum();
    k.iter_mut().for_each(|v| *v /= sum);
    k
}

/// Rec. 601 luma of an RGB triple.
#[inline]
pub fn luma(r: f32, g: f32, b: f32) -> f32 {
    0.299 * r + 0.587 * g + 0.114 * b
}

pub fn rgb_to_hsv(r: f32, g: f32, b: f32) -> (f32, f32, f32) {
    let max = r.max(g).max(b);
    let min = r.min(g).min(b);
    let delta = max - min;
    let v = max;
    let s = if max > 0.0 { delta / max } else { 0.0 };
    let h = if delta <= 0.0 {
        0.0
    } else if max == r {
        (((g - b) / delta) / 6.0).rem_euclid(1.0)
    } else if max == g {
        ((b - r) / delta + 2.0) / 6.0
    } else {
        ((r - g) / delta + 4.0) / 6.0
    };
    (h, s, v)
}

pub fn hsv_to_rgb(h: f32, s: f32, v: f32) -> (f32, f32, f32) {
    if s <= 0.0 {
        return (v, v, v);
    }
    let h6 = (h.rem_euclid(1.0)) * 6.0;
    let sector = h6.floor();
    let f = h6 - sector;
    let p = v * (1.0 - s);
    let q = v * (1.0 - s * f);
    let t = v * (1.0 - s * (1.0 - f));
    match sector as i32 {
        0 => (v, t, p),
        1 => (q, v, p),
        2 => (p, v, t),
        3 => (p, q, v),
        4 => (t, p, v),
        _ => (v, p, q),
    }
}
