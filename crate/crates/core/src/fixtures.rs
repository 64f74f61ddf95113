//! Procedural pedestrian-like images for tests, demos and the synthetic
//! end-to-end protocol.
//!
//! Each image has a textured background, a head, a torso and legs. Clothing
//! colours depend only on the identity key; background, pose offset and
//! texture depend on the view key.

use crate::image::Image;
use crate::rng::{child_seed, Stream};

fn palette(rng: &mut Stream) -> [f32; 3] {
    [rng.uniform(0.1, 0.95), rng.uniform(0.1, 0.95), rng.uniform(0.1, 0.95)].map(|v| v as f32)
}

/// One pedestrian-like image. `identity` fixes clothing, `view` the rest.
pub fn person_image(width: u32, height: u32, identity: u64, view: u64) -> Image {
    let mut id_rng = Stream::new(child_seed(identity, 0x1D));
    let shirt = palette(&mut id_rng);
    let trousers = palette(&mut id_rng);
    let stripe = id_rng.chance(0.5);
    let skin = [0.85f32, 0.68, 0.55].map(|v| v * id_rng.uniform(0.6, 1.05) as f32);

    let mut view_rng = Stream::new(child_seed(child_seed(identity, 0x71E3), view));
    let bg_a = palette(&mut view_rng).map(|v| v * 0.7);
    let bg_b = palette(&mut view_rng).map(|v| v * 0.7);
    let shift_x = view_rng.uniform(-0.08, 0.08) as f32;
    let shift_y = view_rng.uniform(-0.04, 0.04) as f32;
    let grain_seed = view_rng.next_u64();

    let (w, h) = (width as f32, height as f32);
    let cx = 0.5 + shift_x;
    let mut grain = Stream::new(grain_seed);
    Image::from_fn(width, height, |x, y| {
        let u = (x as f32 + 0.5) / w;
        let v = (y as f32 + 0.5) / h - shift_y;
        let t = (y as f32) / h;
        let mut c = [0.0f32; 3];
        for k in 0..3 {
            c[k] = bg_a[k] * (1.0 - t) + bg_b[k] * t;
        }
        // brick-ish background texture
        if ((x / 6) + (y / 4)) % 5 == 0 {
            c = c.map(|v| v * 0.8);
        }
        let dx = (u - cx) / 0.09;
        let dy = (v - 0.13) / 0.065;
        if dx * dx + dy * dy <= 1.0 {
            c = skin;
        } else if (0.2..0.55).contains(&v) && (u - cx).abs() < 0.22 - (v - 0.2) * 0.1 {
            c = shirt;
            if stripe && ((v * h) as u32 / 3).is_multiple_of(3) {
                c = c.map(|v| 1.0 - v);
            }
        } else if (0.55..0.95).contains(&v) && (u - cx).abs() < 0.17 && (u - cx).abs() > 0.015 {
            c = trousers.map(|v| v * (1.0 - 0.3 * (v - 0.55)));
        }
        let n = (grain.next_f32() - 0.5) * 0.06;
        c.map(|v| crate::image::quantize(v + n))
    })
    .expect("fixture dimensions are at least 8x8")
}

/// `count` images with distinct identities, deterministic in `seed`.
pub fn corpus(count: usize, width: u32, height: u32, seed: u64) -> Vec<Image> {
    (0..count as u64)
        .map(|i| person_image(width, height, child_seed(seed, i), 0))
        .collect()
}
