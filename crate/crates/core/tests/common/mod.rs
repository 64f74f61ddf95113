//! Brute-force reference for the ranking metrics. Ranks are counted directly
//! from pairwise comparisons instead of sorting.

use reidc::metrics::{GalleryMeta, QueryMeta};
use reidc::rng::Stream;

pub struct Oracle {
    pub map: f64,
    pub minp: f64,
    pub cmc: Vec<f64>,
    pub skipped: usize,
}

pub fn oracle(dist: &[Vec<f64>], q: &[QueryMeta], g: &[GalleryMeta], k: usize) -> Option<Oracle> {
    let mut aps = Vec::new();
    let mut inps = Vec::new();
    let mut firsts = Vec::new();
    let mut skipped = 0;
    for (i, qm) in q.iter().enumerate() {
        let valid: Vec<usize> = (0..g.len())
            .filter(|&j| !g[j].junk && !(g[j].person_id == qm.person_id && g[j].camera_id == qm.camera_id))
            .collect();
        let rank = |j: usize| -> usize {
            1 + valid
                .iter()
                .filter(|&&l| dist[i][l] < dist[i][j] || (dist[i][l] == dist[i][j] && l < j))
                .count()
        };
        let matches: Vec<usize> = valid
            .iter()
            .copied()
            .filter(|&j| g[j].person_id == qm.person_id)
            .collect();
        if matches.is_empty() {
            skipped += 1;
            continue;
        }
        let ranks: Vec<usize> = matches.iter().map(|&j| rank(j)).collect();
        let mut ap = 0.0;
        for &r in &ranks {
            let hits_above = ranks.iter().filter(|&&s| s <= r).count();
            ap += hits_above as f64 / r as f64;
        }
        aps.push(ap / ranks.len() as f64);
        let hardest = *ranks.iter().max().unwrap();
        inps.push(ranks.len() as f64 / hardest as f64);
        firsts.push(*ranks.iter().min().unwrap());
    }
    if aps.is_empty() {
        return None;
    }
    let n = aps.len() as f64;
    let cmc = (1..=k)
        .map(|kk| firsts.iter().filter(|&&f| f <= kk).count() as f64 / n)
        .collect();
    Some(Oracle {
        map: aps.iter().sum::<f64>() / n,
        minp: inps.iter().sum::<f64>() / n,
        cmc,
        skipped,
    })
}

pub fn random_instance(seed: u64) -> (Vec<Vec<f64>>, Vec<QueryMeta>, Vec<GalleryMeta>) {
    let mut rng = Stream::new(seed);
    let nq = 1 + rng.below(8) as usize;
    let ng = 1 + rng.below(20) as usize;
    let ids = 1 + rng.below(5);
    let cams = 1 + rng.below(3) as u32;
    // Coarse distances so ties are common.
    let coarse = rng.chance(0.5);
    let meta = |rng: &mut Stream, id: u64| QueryMeta {
        image_id: id,
        person_id: rng.below(ids),
        camera_id: rng.below(cams as u64) as u32,
        junk: false,
    };
    let q: Vec<QueryMeta> = (0..nq as u64).map(|i| meta(&mut rng, i)).collect();
    let g: Vec<GalleryMeta> = (0..ng as u64)
        .map(|i| {
            let mut m = meta(&mut rng, 100 + i);
            m.junk = rng.chance(0.1);
            m
        })
        .collect();
    let dist = (0..nq)
        .map(|_| {
            (0..ng)
                .map(|_| if coarse { rng.below(4) as f64 } else { rng.next_f64() })
                .collect()
        })
        .collect();
    (dist, q, g)
}

pub fn flat(dist: &[Vec<f64>]) -> Vec<f64> {
    dist.iter().flatten().copied().collect()
}
