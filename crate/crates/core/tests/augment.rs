use proptest::prelude::*;
use reidc::augment::*;
use reidc::fixtures::person_image;
use reidc::Image;

fn diff_mask(a: &Image, b: &Image) -> Vec<(u32, u32)> {
    let mut out = Vec::new();
    for y in 0..a.height() {
        for x in 0..a.width() {
            if a.get(x, y) != b.get(x, y) {
                out.push((x, y));
            }
        }
    }
    out
}

fn bounding_box(points: &[(u32, u32)]) -> Rect {
    let x0 = points.iter().map(|p| p.0).min().unwrap();
    let x1 = points.iter().map(|p| p.0).max().unwrap();
    let y0 = points.iter().map(|p| p.1).min().unwrap();
    let y1 = points.iter().map(|p| p.1).max().unwrap();
    Rect {
        x: x0,
        y: y0,
        width: x1 - x0 + 1,
        height: y1 - y0 + 1,
    }
}

fn img() -> Image {
    person_image(64, 128, 12, 3)
}

#[test]
fn erasing_probability_zero_is_identity() {
    let p = EraseParams {
        probability: 0.0,
        ..Default::default()
    };
    for seed in 0..20 {
        assert_eq!(random_erasing(&img(), &p, seed).unwrap(), img());
    }
}

#[test]
fn erasing_changes_exactly_one_rectangle() {
    let p = EraseParams {
        probability: 1.0,
        ..Default::default()
    };
    let (out, rect) = random_erasing_with_region(&img(), &p, 3).unwrap();
    let rect = rect.expect("a rectangle is sampled");
    let diff = diff_mask(&img(), &out);
    let bb = bounding_box(&diff);
    // Random fill can coincide with the original on a few pixels, so the
    // diff box is compared with the reported region and must be dense.
    assert!(diff.iter().all(|&(x, y)| rect.contains(x, y)));
    assert!(diff.len() as f64 > 0.99 * rect.area() as f64);
    assert_eq!(bb, rect);
    let frac = rect.area() as f64 / (64.0 * 128.0);
    assert!(p.area_ratio_range.0 <= frac && frac <= p.area_ratio_range.1);
}

#[test]
fn erasing_is_local_over_seeds() {
    let p = EraseParams {
        probability: 1.0,
        ..Default::default()
    };
    for seed in 0..100 {
        for soft in [false, true] {
            let (out, rect) = if soft {
                soft_random_erasing_with_region(&img(), &p, seed).unwrap()
            } else {
                random_erasing_with_region(&img(), &p, seed).unwrap()
            };
            let diff = diff_mask(&img(), &out);
            match rect {
                Some(r) => assert!(diff.iter().all(|&(x, y)| r.contains(x, y))),
                None => assert!(diff.is_empty()),
            }
        }
    }
}

#[test]
fn soft_erasing_retain_one_is_identity() {
    let p = EraseParams {
        probability: 1.0,
        retain_ratio: 1.0,
        ..Default::default()
    };
    assert_eq!(soft_random_erasing(&img(), &p, 5).unwrap(), img());
}

#[test]
fn soft_erasing_retains_requested_fraction() {
    let big = person_image(128, 256, 4, 4);
    let p = EraseParams {
        probability: 1.0,
        retain_ratio: 0.5,
        area_ratio_range: (0.1, 0.4),
        ..Default::default()
    };
    for seed in 0..20 {
        let (out, rect) = soft_random_erasing_with_region(&big, &p, seed).unwrap();
        let r = rect.unwrap();
        assert!(r.area() >= 2000);
        let changed = diff_mask(&big, &out).len() as f64;
        let kept = 1.0 - changed / r.area() as f64;
        assert!((kept - 0.5).abs() <= 0.05, "seed {seed}: {kept}");
    }
}

#[test]
fn random_patch_pool_behaviour() {
    let p = PatchMixParams {
        pool_capacity: 3,
        ..Default::default()
    };
    let first = random_patch(&img(), PatchPool::new(3), &p, 1).unwrap();
    assert_eq!(first.image, img());
    assert_eq!(first.pool.len(), 1);

    let other = person_image(64, 128, 99, 0);
    let stored = first.pool.get(0).unwrap().clone();
    let second = random_patch(&other, first.pool, &p, 2).unwrap();
    let r = second.pasted.unwrap();
    let diff = diff_mask(&other, &second.image);
    assert!(diff.iter().all(|&(x, y)| r.contains(x, y)));
    for y in 0..r.height {
        for x in 0..r.width {
            assert_eq!(second.image.get(r.x + x, r.y + y), stored.get(x, y));
        }
    }

    let mut pool = second.pool;
    for seed in 3..10 {
        pool = random_patch(&img(), pool, &p, seed).unwrap().pool;
        assert!(pool.len() <= 3);
    }
    assert_eq!(pool.len(), 3);
}

#[test]
fn oversized_patches_are_scaled_to_fit() {
    let p = PatchMixParams {
        block_area_range: (0.8, 1.0),
        ..Default::default()
    };
    let big = person_image(128, 256, 1, 1);
    let pool = random_patch(&big, PatchPool::new(4), &p, 0).unwrap().pool;
    let small = person_image(16, 16, 2, 2);
    let out = random_patch(&small, pool, &p, 1).unwrap();
    let r = out.pasted.unwrap();
    assert!(r.width <= 16 && r.height <= 16);
}

#[test]
fn self_patch_mixing_blend_rule() {
    let src = img();
    let zero = PatchMixParams {
        mix_coef: 0.0,
        ..Default::default()
    };
    assert_eq!(self_patch_mixing(&src, &zero, 4).unwrap(), src);

    for mix in [0.5, 1.0] {
        let p = PatchMixParams {
            mix_coef: mix,
            ..Default::default()
        };
        for seed in 0..100 {
            let (out, regions) = self_patch_mixing_with_regions(&src, &p, seed).unwrap();
            let (s, t) = regions.unwrap();
            assert_ne!((s.x, s.y), (t.x, t.y));
            assert!(diff_mask(&src, &out).iter().all(|&(x, y)| t.contains(x, y)));
            for y in 0..t.height {
                for x in 0..t.width {
                    let a = src.get(s.x + x, s.y + y);
                    let b = src.get(t.x + x, t.y + y);
                    let want = [0, 1, 2].map(|c| (mix * a[c] as f64 + (1.0 - mix) * b[c] as f64).round() as u8);
                    assert_eq!(out.get(t.x + x, t.y + y), want);
                }
            }
        }
    }
}

#[test]
fn augmix_output_is_quantized_mixture() {
    let src = person_image(32, 64, 8, 8);
    let p = AugMixParams::default();
    for seed in 0..10 {
        let t = augmix_trace(&src, &p, seed).unwrap();
        assert!((t.weights.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert!((0.0..=1.0).contains(&t.skip));
        assert_eq!(t.image, augmix(&src, &p, seed).unwrap());
        for (i, &v) in t.image.pixels().iter().enumerate() {
            let chain: f64 = t
                .chains
                .iter()
                .zip(&t.weights)
                .map(|(c, w)| w * c.pixels()[i] as f64 / 255.0)
                .sum();
            let want = t.skip * src.pixels()[i] as f64 / 255.0 + (1.0 - t.skip) * chain;
            assert!((v as f64 - 255.0 * want).abs() <= 0.51, "pixel {i}");
        }
    }
}

#[test]
fn augmix_rejects_test_corruptions() {
    for t in reidc::corruption::CorruptionType::ALL {
        let r = AugMixParams::default().with_op_names(&[t.name()]);
        assert!(matches!(r, Err(reidc::Error::ForbiddenAugOp(_))), "{t}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn augmentations_are_deterministic(seed in any::<u64>(), id in any::<u64>()) {
        let src = person_image(24, 48, id, 0);
        let e = EraseParams { probability: 1.0, ..Default::default() };
        prop_assert_eq!(random_erasing(&src, &e, seed).unwrap(), random_erasing(&src, &e, seed).unwrap());
        prop_assert_eq!(soft_random_erasing(&src, &e, seed).unwrap(), soft_random_erasing(&src, &e, seed).unwrap());
        let m = PatchMixParams::default();
        prop_assert_eq!(self_patch_mixing(&src, &m, seed).unwrap(), self_patch_mixing(&src, &m, seed).unwrap());
        let a = AugMixParams::default();
        prop_assert_eq!(augmix(&src, &a, seed).unwrap(), augmix(&src, &a, seed).unwrap());
    }

    #[test]
    fn erased_area_fraction_within_range(seed in any::<u64>(), lo in 0.02f64..0.2, span in 0.0f64..0.2) {
        let p = EraseParams { probability: 1.0, area_ratio_range: (lo, lo + span), ..Default::default() };
        if let (_, Some(r)) = random_erasing_with_region(&img(), &p, seed).unwrap() {
            let f = r.area() as f64 / (64.0 * 128.0);
            prop_assert!(lo <= f && f <= lo + span);
        }
    }
}
