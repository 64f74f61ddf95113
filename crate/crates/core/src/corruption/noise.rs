use rand_distr::{Distribution, Poisson, StandardNormal};

use crate::raster::Raster;
use crate::rng::Stream;

fn normal(rng: &mut Stream) -> f32 {
    let z: f64 = StandardNormal.sample(rng);
    z as f32
}

pub(super) fn gaussian(mut x: Raster, sigma: f32, rng: &mut Stream) -> Raster {
    for v in x.data.iter_mut() {
        *v += sigma * normal(rng);
    }
    x
}

pub(super) fn shot(mut x: Raster, lambda: f64, rng: &mut Stream) -> Raster {
    for v in x.data.iter_mut() {
        let rate = (*v as f64).max(0.0) * lambda;
        let count = if rate > 0.0 {
            Poisson::new(rate).expect("positive finite rate").sample(rng)
        } else {
            0.0
        };
        *v = (count / lambda) as f32;
    }
    x
}

/// Salt-and-pepper on individual channel values, salt and pepper equally likely.
pub(super) fn impulse(mut x: Raster, amount: f64, rng: &mut Stream) -> Raster {
    for v in x.data.iter_mut() {
        if rng.chance(amount) {
            *v = if rng.chance(0.5) { 1.0 } else { 0.0 };
        }
    }
    x
}

pub(super) fn speckle(mut x: Raster, sigma: f32, rng: &mut Stream) -> Raster {
    for v in x.data.iter_mut() {
        *v += *v * sigma * normal(rng);
    }
    x
}
