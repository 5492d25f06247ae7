//! Cross-method comparison scheduling.

use std::collections::{BTreeMap, BTreeSet};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::aqs::Dimension;
use crate::error::EvalError;

/// Every image takes part in at least this many comparisons.
pub const MIN_COMPARISONS: usize = 10;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScheduledPair {
    pub pair_id: String,
    pub dimension: Dimension,
    pub image_a: String,
    pub image_b: String,
}

struct Image {
    method: usize,
    id: String,
    count: usize,
    rank: u64,
}

/// Builds a comparison list in which every image appears in at least
/// [`MIN_COMPARISONS`] pairs, both sides of every pair come from different
/// methods, and the busiest method pair is compared at most twice as often
/// as the least busy one.
///
/// Greedy phase: repeatedly take the least-compared image, pair it against
/// the method it has met least often (by method-pair count) and, within
/// that method, the least-compared image. Ties fall to a seeded random
/// rank. Balancing phase: while some method pair has fewer than half the
/// comparisons of the busiest, add a pair between its least-compared
/// images. Sides are assigned by a seeded coin.
pub fn schedule_comparisons(
    images: &BTreeMap<String, Vec<String>>,
    dimension: Dimension,
    seed: u64,
) -> Result<Vec<ScheduledPair>, EvalError> {
    let methods: Vec<&String> = images.iter().filter(|(_, v)| !v.is_empty()).map(|(k, _)| k).collect();
    if methods.len() < 2 {
        return Err(EvalError::TooFewMethods);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ (dimension as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    let mut all: Vec<Image> = Vec::new();
    let mut seen = BTreeSet::new();
    for (m, name) in methods.iter().enumerate() {
        for id in &images[*name] {
            if !seen.insert(id.as_str()) {
                return Err(EvalError::InvalidRecord(format!("image {id} listed more than once")));
            }
            all.push(Image {
                method: m,
                id: id.clone(),
                count: 0,
                rank: 0,
            });
        }
    }
    let mut order: Vec<usize> = (0..all.len()).collect();
    order.shuffle(&mut rng);
    for (r, &i) in order.iter().enumerate() {
        all[i].rank = r as u64;
    }
    // Per-method queues keyed by (count, rank, index).
    let mut queues: Vec<BTreeSet<(usize, u64, usize)>> = vec![BTreeSet::new(); methods.len()];
    for (i, img) in all.iter().enumerate() {
        queues[img.method].insert((0, img.rank, i));
    }
    let m = methods.len();
    let mut pair_counts = vec![vec![0usize; m]; m];
    let mut out: Vec<(usize, usize)> = Vec::new();

    let bump = |i: usize, all: &mut Vec<Image>, queues: &mut Vec<BTreeSet<(usize, u64, usize)>>| {
        let img = &mut all[i];
        queues[img.method].remove(&(img.count, img.rank, i));
        img.count += 1;
        queues[img.method].insert((img.count, img.rank, i));
    };

    loop {
        let (count, _, x) = *queues
            .iter()
            .filter_map(|q| q.first())
            .min()
            .expect("at least two nonempty methods");
        if count >= MIN_COMPARISONS {
            break;
        }
        let mx = all[x].method;
        let partner_method = (0..m)
            .filter(|&k| k != mx)
            .min_by_key(|&k| (pair_counts[mx][k], queues[k].first().map(|e| (e.0, e.1))))
            .expect("another method");
        let y = queues[partner_method].first().expect("nonempty method").2;
        pair_counts[mx][partner_method] += 1;
        pair_counts[partner_method][mx] += 1;
        bump(x, &mut all, &mut queues);
        bump(y, &mut all, &mut queues);
        out.push((x, y));
    }

    let max_pair = (0..m).flat_map(|a| (a + 1..m).map(move |b| (a, b))).map(|(a, b)| pair_counts[a][b]).max().unwrap_or(0);
    loop {
        let (a, b) = (0..m)
            .flat_map(|a| (a + 1..m).map(move |b| (a, b)))
            .min_by_key(|&(a, b)| pair_counts[a][b])
            .expect("at least one method pair");
        if 2 * pair_counts[a][b] >= max_pair {
            break;
        }
        let x = queues[a].first().expect("nonempty").2;
        let y = queues[b].first().expect("nonempty").2;
        pair_counts[a][b] += 1;
        pair_counts[b][a] += 1;
        bump(x, &mut all, &mut queues);
        bump(y, &mut all, &mut queues);
        out.push((x, y));
    }

    Ok(out
        .into_iter()
        .enumerate()
        .map(|(k, (x, y))| {
            let (a, b) = if rng.random_bool(0.5) { (x, y) } else { (y, x) };
            ScheduledPair {
                pair_id: format!("{}-{k:05}", dimension.code()),
                dimension,
                image_a: all[a].id.clone(),
                image_b: all[b].id.clone(),
            }
        })
        .collect())
}
