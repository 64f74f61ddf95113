//! Naive reference formulas for the loss kernels, evaluated in f64.

use proptest::prelude::*;
use reidc::loss::{
    combined_objective, consistent_id_loss, identity_loss, identity_loss_grad, kl_divergence, BatchLabels,
    PosteriorTriple,
};
use reidc::rng::Stream;

fn naive_identity_loss(logits: &[Vec<f64>], labels: &[usize]) -> f64 {
    let mut total = 0.0;
    for (row, &y) in logits.iter().zip(labels) {
        let z: f64 = row.iter().map(|v| v.exp()).sum();
        total -= (row[y].exp() / z).ln();
    }
    total / logits.len() as f64
}

fn naive_kl(p: &[f64], q: &[f64]) -> f64 {
    p.iter()
        .zip(q)
        .filter(|(a, _)| **a > 0.0)
        .map(|(a, b)| a * (a / b).ln())
        .sum()
}

fn random_batch(rng: &mut Stream, n: usize, classes: usize, scale: f64) -> (Vec<Vec<f64>>, Vec<usize>) {
    let logits = (0..n)
        .map(|_| (0..classes).map(|_| rng.uniform(-scale, scale)).collect())
        .collect();
    let labels = (0..n).map(|_| rng.below(classes as u64) as usize).collect();
    (logits, labels)
}

fn random_simplex(rng: &mut Stream, k: usize) -> Vec<f64> {
    let raw: Vec<f64> = (0..k).map(|_| rng.next_f64() + 1e-3).collect();
    let s: f64 = raw.iter().sum();
    raw.iter().map(|v| v / s).collect()
}

fn batch(logits: &[Vec<f64>], labels: &[usize]) -> BatchLabels {
    BatchLabels::from_rows(logits, labels.to_vec()).unwrap()
}

#[test]
fn identity_loss_matches_naive_formula() {
    let mut rng = Stream::new(11);
    for _ in 0..50 {
        let (logits, labels) = random_batch(&mut rng, 4, 10, 5.0);
        let got = identity_loss(&batch(&logits, &labels)).unwrap();
        assert!((got - naive_identity_loss(&logits, &labels)).abs() < 1e-9);
    }
}

#[test]
fn gradient_matches_central_differences() {
    let mut rng = Stream::new(12);
    let h = 1e-5;
    for _ in 0..20 {
        let n = 1 + rng.below(6) as usize;
        let c = 2 + rng.below(9) as usize;
        let (logits, labels) = random_batch(&mut rng, n, c, 3.0);
        let grad = identity_loss_grad(&batch(&logits, &labels)).unwrap();
        let mut worst: f64 = 0.0;
        for i in 0..n {
            for j in 0..c {
                let mut up = logits.clone();
                up[i][j] += h;
                let mut down = logits.clone();
                down[i][j] -= h;
                let fd = (naive_identity_loss(&up, &labels) - naive_identity_loss(&down, &labels)) / (2.0 * h);
                worst = worst.max((fd - grad[i * c + j]).abs());
            }
        }
        assert!(worst < 1e-6, "max abs gradient error {worst}");
    }
}

#[test]
fn kl_matches_direct_sum() {
    let mut rng = Stream::new(13);
    for _ in 0..50 {
        let p = random_simplex(&mut rng, 7);
        let q = random_simplex(&mut rng, 7);
        assert!((kl_divergence(&p, &q).unwrap() - naive_kl(&p, &q)).abs() < 1e-12);
    }
}

#[test]
fn consistent_loss_matches_mean_of_kls() {
    let mut rng = Stream::new(14);
    for _ in 0..50 {
        let v: Vec<Vec<f64>> = (0..3).map(|_| random_simplex(&mut rng, 5)).collect();
        let m: Vec<f64> = (0..5).map(|i| (v[0][i] + v[1][i] + v[2][i]) / 3.0).collect();
        let want = v.iter().map(|p| naive_kl(p, &m)).sum::<f64>() / 3.0;
        let t = PosteriorTriple::new(v[0].clone(), v[1].clone(), v[2].clone()).unwrap();
        assert!((consistent_id_loss(&t) - want).abs() < 1e-12);
    }
}

#[test]
fn combined_objective_adds_parts() {
    let mut rng = Stream::new(15);
    let (logits, labels) = random_batch(&mut rng, 3, 4, 2.0);
    let b = batch(&logits, &labels);
    let triples: Vec<PosteriorTriple> = (0..3)
        .map(|_| {
            PosteriorTriple::new(
                random_simplex(&mut rng, 4),
                random_simplex(&mut rng, 4),
                random_simplex(&mut rng, 4),
            )
            .unwrap()
        })
        .collect();
    let a = identity_loss(&b).unwrap();
    let c = triples.iter().map(consistent_id_loss).sum::<f64>() / 3.0;
    assert!((combined_objective(&b, &triples, 1.0).unwrap() - (a + c)).abs() < 1e-12);
    assert_eq!(combined_objective(&b, &triples, 0.0).unwrap(), a);
}

proptest! {
    #[test]
    fn consistent_loss_is_bounded_and_symmetric(seed in any::<u64>(), k in 2usize..12) {
        let mut rng = Stream::new(seed);
        let a = random_simplex(&mut rng, k);
        let b = random_simplex(&mut rng, k);
        let c = random_simplex(&mut rng, k);
        let l = consistent_id_loss(&PosteriorTriple::new(a.clone(), b.clone(), c.clone()).unwrap());
        prop_assert!((0.0..=3f64.ln()).contains(&l));
        for (x, y, z) in [(&b, &a, &c), (&c, &b, &a), (&a, &c, &b), (&b, &c, &a), (&c, &a, &b)] {
            let p = consistent_id_loss(&PosteriorTriple::new(x.clone(), y.clone(), z.clone()).unwrap());
            prop_assert!((p - l).abs() < 1e-12);
        }
        let same = consistent_id_loss(&PosteriorTriple::new(a.clone(), a.clone(), a.clone()).unwrap());
        prop_assert_eq!(same, 0.0);
    }

    #[test]
    fn kl_is_nonnegative(seed in any::<u64>(), k in 2usize..12) {
        let mut rng = Stream::new(seed);
        let p = random_simplex(&mut rng, k);
        let q = random_simplex(&mut rng, k);
        prop_assert!(kl_divergence(&p, &q).unwrap() >= 0.0);
        prop_assert_eq!(kl_divergence(&p, &p).unwrap(), 0.0);
    }

    #[test]
    fn row_shift_leaves_identity_loss_unchanged(seed in any::<u64>(), shift in -50.0f64..50.0) {
        let mut rng = Stream::new(seed);
        let (logits, labels) = random_batch(&mut rng, 4, 6, 4.0);
        let shifted: Vec<Vec<f64>> = logits.iter().map(|r| r.iter().map(|v| v + shift).collect()).collect();
        let a = identity_loss(&batch(&logits, &labels)).unwrap();
        let b = identity_loss(&batch(&shifted, &labels)).unwrap();
        prop_assert!((a - b).abs() < 1e-12);
    }
}
