//! Procedural textures: diamond-square plasma for fog and the five frost
//! overlays (fractal Perlin noise with fixed seeds).

use std::sync::OnceLock;

use crate::raster::Raster;
use crate::rng::Stream;

/// Diamond-square plasma on a toroidal `size`×`size` grid (`size` a power of
/// two), normalized to [0, 1]. Roughness shrinks by `decay` per octave.
pub fn plasma_fractal(size: usize, decay: f32, rng: &mut Stream) -> Vec<f32> {
    assert!(size.is_power_of_two() && size >= 2);
    let mut map = vec![0.0f32; size * size];
    let at = |y: usize, x: usize| (y % size) * size + (x % size);
    let mut step = size;
    let mut wibble = 100.0f32;
    while step >= 2 {
        let half = step / 2;
        // squares: centre of each cell from its four corners
        for y in (0..size).step_by(step) {
            for x in (0..size).step_by(step) {
                let sum = map[at(y, x)] + map[at(y + step, x)] + map[at(y, x + step)] + map[at(y + step, x + step)];
                let jitter = wibble * (rng.next_f32() * 2.0 - 1.0) * wibble;
                map[at(y + half, x + half)] = sum / 4.0 + jitter;
            }
        }
        // diamonds: edge midpoints from the two corners and two centres
        for y in (0..size).step_by(step) {
            for x in (0..size).step_by(step) {
                let sum = map[at(y, x)]
                    + map[at(y, x + step)]
                    + map[at(y + half, x + half)]
                    + map[at(y + size - half, x + half)];
                let jitter = wibble * (rng.next_f32() * 2.0 - 1.0) * wibble;
                map[at(y, x + half)] = sum / 4.0 + jitter;
            }
        }
        for y in (0..size).step_by(step) {
            for x in (0..size).step_by(step) {
                let sum = map[at(y, x)]
                    + map[at(y + step, x)]
                    + map[at(y + half, x + half)]
                    + map[at(y + half, x + size - half)];
                let jitter = wibble * (rng.next_f32() * 2.0 - 1.0) * wibble;
                map[at(y + half, x)] = sum / 4.0 + jitter;
            }
        }
        step /= 2;
        wibble /= decay;
    }
    let min = map.iter().copied().fold(f32::INFINITY, f32::min);
    let max = map.iter().copied().fold(f32::NEG_INFINITY, f32::max);
    let span = (max - min).max(f32::MIN_POSITIVE);
    map.iter_mut().for_each(|v| *v = (*v - min) / span);
    map
}

/// Tileable 2-D gradient noise with a lattice period of `period` cells.
struct Perlin {
    perm: Vec<usize>,
    grads: Vec<(f32, f32)>,
    period: usize,
}

impl Perlin {
    fn new(period: usize, rng: &mut Stream) -> Self {
        let mut perm: Vec<usize> = (0..256).collect();
        for i in (1..perm.len()).rev() {
            let j = rng.below(i as u64 + 1) as usize;
            perm.swap(i, j);
        }
        let grads = (0..256)
            .map(|_| {
                let a = rng.next_f32() * std::f32::consts::TAU;
                (a.cos(), a.sin())
            })
            .collect();
        Perlin { perm, grads, period }
    }

    fn grad(&self, ix: usize, iy: usize) -> (f32, f32) {
        let h = self.perm[(self.perm[ix % self.period % 256] + iy % self.period) % 256];
        self.grads[h]
    }

    fn sample(&self, x: f32, y: f32) -> f32 {
        let x0 = x.floor();
        let y0 = y.floor();
        let (fx, fy) = (x - x0, y - y0);
        let (ix, iy) = (x0 as usize, y0 as usize);
        let fade = |t: f32| t * t * t * (t * (t * 6.0 - 15.0) + 10.0);
        let dot = |gx: usize, gy: usize, dx: f32, dy: f32| {
            let g = self.grad(gx, gy);
            g.0 * dx + g.1 * dy
        };
        let n00 = dot(ix, iy, fx, fy);
        let n10 = dot(ix + 1, iy, fx - 1.0, fy);
        let n01 = dot(ix, iy + 1, fx, fy - 1.0);
        let n11 = dot(ix + 1, iy + 1, fx - 1.0, fy - 1.0);
        let u = fade(fx);
        let v = fade(fy);
        let a = n00 + u * (n10 - n00);
        let b = n01 + u * (n11 - n01);
        a + v * (b - a)
    }
}

pub const FROST_TEXTURE_SIZE: usize = 256;
pub const FROST_TEXTURE_COUNT: usize = 5;
const FROST_SEEDS: [u64; FROST_TEXTURE_COUNT] = [0xF805_7001, 0xF805_7002, 0xF805_7003, 0xF805_7004, 0xF805_7005];

/// Icy overlay: ridged fractal noise thresholded into bright crystal veins
/// over a dark, faintly blue ground.
fn frost_texture(seed: u64) -> Raster {
    let size = FROST_TEXTURE_SIZE;
    let mut rng = Stream::new(seed);
    let octaves: Vec<(Perlin, f32, f32)> = (0..6)
        .map(|o| {
            let cells = 4usize << o;
            let p = Perlin::new(cells, &mut rng);
            (p, cells as f32 / size as f32, 0.55f32.powi(o))
        })
        .collect();
    let norm: f32 = octaves.iter().map(|o| o.2).sum();
    let smoothstep = |lo: f32, hi: f32, v: f32| {
        let t = ((v - lo) / (hi - lo)).clamp(0.0, 1.0);
        t * t * (3.0 - 2.0 * t)
    };
    let mut out = Raster::zeros(size, size, 3);
    for y in 0..size {
        for x in 0..size {
            let mut v = 0.0;
            for (p, freq, amp) in &octaves {
                let n = p.sample(x as f32 * freq, y as f32 * freq);
                v += amp * (1.0 - (n * 1.6).abs());
            }
            let crystal = smoothstep(0.7, 0.82, v / norm);
            let base = 0.03 + 0.95 * crystal;
            let i = out.idx(x, y, 0);
            out.data[i] = base * 0.88;
            out.data[i + 1] = base * 0.95;
            out.data[i + 2] = base;
        }
    }
    out
}

/// The five fixed frost overlays, generated once per process.
pub fn frost_textures() -> &'static [Raster; FROST_TEXTURE_COUNT] {
    static TEXTURES: OnceLock<[Raster; FROST_TEXTURE_COUNT]> = OnceLock::new();
    TEXTURES.get_or_init(|| FROST_SEEDS.map(frost_texture))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn plasma_is_normalized_and_deterministic() {
        let a = plasma_fractal(64, 2.0, &mut Stream::new(3));
        let b = plasma_fractal(64, 2.0, &mut Stream::new(3));
        assert_eq!(a, b);
        let min = a.iter().copied().fold(f32::INFINITY, f32::min);
        let max = a.iter().copied().fold(f32::NEG_INFINITY, f32::max);
        assert_eq!(min, 0.0);
        assert_eq!(max, 1.0);
    }

    #[test]
    fn frost_textures_differ_and_stay_in_range() {
        let t = frost_textures();
        assert_ne!(t[0].data, t[1].data);
        for tex in t.iter() {
            assert!(tex.data.iter().all(|v| (0.0..=1.0).contains(v)));
            let mean = tex.data.iter().sum::<f32>() / tex.data.len() as f32;
            assert!(mean > 0.1 && mean < 0.6, "mean {mean}");
        }
    }
}
