use std::path::PathBuf;

use anyhow::Result;
use clap::{Args, ValueEnum};
use reidc::augment::*;
use reidc::fixtures::person_image;
use reidc::rng::child_seed;
use reidc::Image;

use crate::config::Settings;
use crate::Usage;

const GAP: u32 = 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum PreviewOp {
    Erasing,
    SoftErasing,
    RandomPatch,
    SelfPatch,
    Augmix,
}

#[derive(Debug, Args)]
pub struct PreviewArgs {
    /// Source image (default: a generated pedestrian-like fixture).
    #[arg(long)]
    image: Option<PathBuf>,
    /// Operators, one sheet row each.
    #[arg(
        long,
        value_delimiter = ',',
        default_value = "erasing,soft-erasing,random-patch,self-patch,augmix"
    )]
    ops: Vec<PreviewOp>,
    /// Augmented samples per row, shown after the original.
    #[arg(long, default_value_t = 6)]
    samples: u32,
    /// Erasing probability (1 always erases).
    #[arg(long, default_value_t = 1.0)]
    probability: f64,
}

fn row(img: &Image, op: PreviewOp, n: u32, probability: f64, seed: u64) -> Result<Vec<Image>> {
    let erase = EraseParams {
        probability,
        ..Default::default()
    };
    let mix = PatchMixParams::default();
    // Seed the pool with blocks from other fixtures so the first sample pastes too.
    let mut pool = PatchPool::new(mix.pool_capacity);
    for k in 0..4 {
        let donor = person_image(img.width(), img.height(), 1000 + k, k);
        pool = random_patch(&donor, pool, &mix, child_seed(seed, 100 + k))?.pool;
    }
    let mut out = vec![img.clone()];
    for i in 0..n {
        let s = child_seed(seed, i as u64);
        out.push(match op {
            PreviewOp::Erasing => random_erasing(img, &erase, s)?,
            PreviewOp::SoftErasing => soft_random_erasing(img, &erase, s)?,
            PreviewOp::RandomPatch => {
                let o = random_patch(img, pool, &mix, s)?;
                pool = o.pool;
                o.image
            }
            PreviewOp::SelfPatch => self_patch_mixing(img, &mix, s)?,
            PreviewOp::Augmix => augmix(img, &AugMixParams::default(), s)?,
        });
    }
    Ok(out)
}

pub fn preview(s: &Settings, a: PreviewArgs) -> Result<()> {
    let out = s.out.as_deref().ok_or_else(|| Usage("--out is required".into()))?;
    if a.ops.is_empty() {
        return Err(Usage("--ops is empty".into()).into());
    }
    let img = match &a.image {
        Some(p) => Image::load(p)?,
        None => person_image(64, 128, 7, 0),
    };
    let (w, h) = (img.width(), img.height());
    let cols = a.samples + 1;
    let rows = a.ops.len() as u32;
    let mut sheet = Image::filled(cols * (w + GAP) + GAP, rows * (h + GAP) + GAP, [255; 3])?;
    for (r, &op) in a.ops.iter().enumerate() {
        for (c, tile) in row(&img, op, a.samples, a.probability, child_seed(s.seed, r as u64))?
            .iter()
            .enumerate()
        {
            let (x0, y0) = (GAP + c as u32 * (w + GAP), GAP + r as u32 * (h + GAP));
            for y in 0..h {
                for x in 0..w {
                    sheet.put(x0 + x, y0 + y, tile.get(x, y));
                }
            }
        }
    }
    sheet.save_png(out)?;
    eprintln!("wrote {} ({} rows x {} columns)", out.display(), rows, cols);
    Ok(())
}
