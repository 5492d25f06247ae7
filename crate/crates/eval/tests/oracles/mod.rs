//! Independent references shared by the eval and acceptance suites.
#![allow(dead_code)]

use std::collections::BTreeMap;

use majutsu_eval::{schedule_comparisons, ComparisonRecord, Dimension, FeatureSet, Rating, Side, TrueSkill, MIN_COMPARISONS};
use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

/// Standard-normal density.
pub fn phi(x: f64) -> f64 {
    (-0.5 * x * x).exp() / (2.0 * std::f64::consts::PI).sqrt()
}

/// Zeroth, first and second moments of N(0, 1) restricted to [lo, ∞),
/// by composite Simpson quadrature.
pub fn tail_moments(lo: f64) -> (f64, f64, f64) {
    let a = lo.max(-15.0);
    let b = (lo + 15.0).max(15.0);
    let n = 6000;
    let h = (b - a) / n as f64;
    let (mut z, mut m1, mut m2) = (0.0, 0.0, 0.0);
    for i in 0..=n {
        let x = a + i as f64 * h;
        let wgt = if i == 0 || i == n {
            1.0
        } else if i % 2 == 1 {
            4.0
        } else {
            2.0
        };
        let f = phi(x) * wgt;
        z += f;
        m1 += f * x;
        m2 += f * x * x;
    }
    (z * h / 3.0, m1 * h / 3.0, m2 * h / 3.0)
}

/// Two-player factor-graph update with Gaussian messages in natural
/// parameters (precision π, precision-mean τ). The win factor is
/// moment-matched from quadrature of the truncated difference.
pub fn reference_update(w: Rating, l: Rating, p: &TrueSkill) -> (Rating, Rating) {
    let skill_var = |r: Rating| r.sigma * r.sigma + p.tau * p.tau;
    let (vw, vl) = (skill_var(w), skill_var(l));
    let (perf_w, perf_l) = (vw + p.beta * p.beta, vl + p.beta * p.beta);
    let (m, v) = (w.mu - l.mu, perf_w + perf_l);
    let c = v.sqrt();
    let (z, m1, m2) = tail_moments(-m / c);
    let mean_std = m1 / z;
    let var_std = m2 / z - mean_std * mean_std;
    let (post_mean, post_var) = (m + c * mean_std, v * var_std);
    // Message from the win factor: posterior ÷ incoming.
    let pi_msg = 1.0 / post_var - 1.0 / v;
    let tau_msg = post_mean / post_var - m / v;
    let to_perf = |other_mu: f64, other_var: f64, sign: f64| {
        // d = p_w − p_l: shift the difference message by the other performance.
        let pi = pi_msg / (1.0 + pi_msg * other_var);
        let tau = (sign * tau_msg + pi_msg * other_mu) / (1.0 + pi_msg * other_var);
        (pi, tau)
    };
    let to_skill = |(pi, tau): (f64, f64)| {
        let pi2 = pi / (1.0 + pi * p.beta * p.beta);
        (pi2, tau / (1.0 + pi * p.beta * p.beta))
    };
    let posterior = |prior_mu: f64, prior_var: f64, (pi, tau): (f64, f64)| {
        let pi_post = 1.0 / prior_var + pi;
        let tau_post = prior_mu / prior_var + tau;
        Rating {
            mu: tau_post / pi_post,
            sigma: (1.0 / pi_post).sqrt(),
        }
    };
    let nw = posterior(w.mu, vw, to_skill(to_perf(l.mu, perf_l, 1.0)));
    let nl = posterior(l.mu, vl, to_skill(to_perf(w.mu, perf_w, -1.0)));
    (nw, nl)
}

pub fn record(dim: Dimension, ma: &str, mb: &str, winner: Side, ts: u64) -> ComparisonRecord {
    ComparisonRecord {
        dimension: dim,
        image_a: format!("{ma}/img{ts}"),
        image_b: format!("{mb}/img{ts}"),
        method_a: ma.into(),
        method_b: mb.into(),
        winner,
        judge: "j".into(),
        timestamp: ts,
        pair_id: None,
    }
}

pub fn planted_records(methods: &[String], per_pair: usize, rng: &mut ChaCha8Rng) -> Vec<ComparisonRecord> {
    let mut recs = Vec::new();
    for i in 0..methods.len() {
        for j in i + 1..methods.len() {
            for _ in 0..per_pair {
                // methods[i] is stronger; random sides.
                let (a, b, w) = if rng.random_bool(0.5) { (i, j, Side::A) } else { (j, i, Side::B) };
                recs.push(record(Dimension::Svc, &methods[a], &methods[b], w, 0));
            }
        }
    }
    recs.shuffle(rng);
    for (t, r) in recs.iter_mut().enumerate() {
        r.timestamp = t as u64 + 1;
        r.image_a = format!("{}/{t}", r.method_a);
        r.image_b = format!("{}/{t}", r.method_b);
    }
    recs
}

pub fn gaussian(rng: &mut ChaCha8Rng) -> f64 {
    let u1: f64 = rng.random::<f64>().max(1e-300);
    let u2: f64 = rng.random();
    (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
}

pub fn random_set(rng: &mut ChaCha8Rng, n: usize, d: usize, scale: f64, shift: f64) -> FeatureSet {
    let rows: Vec<Vec<f64>> = (0..n)
        .map(|_| (0..d).map(|_| gaussian(rng) * scale + shift).collect())
        .collect();
    FeatureSet::from_rows("r", &rows).unwrap()
}

/// Unbiased MMD² assembled from explicit kernel matrices.
pub fn kid_oracle(a: &FeatureSet, b: &FeatureSet) -> f64 {
    let d = a.d as f64;
    let k = |x: &[f64], y: &[f64]| (x.iter().zip(y).map(|(p, q)| p * q).sum::<f64>() / d + 1.0).powi(3);
    let gram = |s: &FeatureSet, t: &FeatureSet| -> Vec<Vec<f64>> {
        (0..s.n).map(|i| (0..t.n).map(|j| k(s.row(i), t.row(j))).collect()).collect()
    };
    let (kaa, kbb, kab) = (gram(a, a), gram(b, b), gram(a, b));
    let (m, n) = (a.n as f64, b.n as f64);
    let off = |g: &Vec<Vec<f64>>| {
        let total: f64 = g.iter().flatten().sum();
        let trace: f64 = (0..g.len()).map(|i| g[i][i]).sum();
        total - trace
    };
    off(&kaa) / (m * (m - 1.0)) + off(&kbb) / (n * (n - 1.0)) - 2.0 * kab.iter().flatten().sum::<f64>() / (m * n)
}

pub fn images(counts: &[usize]) -> BTreeMap<String, Vec<String>> {
    counts
        .iter()
        .enumerate()
        .map(|(m, &n)| (format!("m{m}"), (0..n).map(|i| format!("m{m}/{i}")).collect()))
        .collect()
}

pub fn check_schedule(imgs: &BTreeMap<String, Vec<String>>, seed: u64) {
    let pairs = schedule_comparisons(imgs, Dimension::Mtf, seed).unwrap();
    let method_of: BTreeMap<&str, &str> = imgs
        .iter()
        .flat_map(|(m, ids)| ids.iter().map(move |i| (i.as_str(), m.as_str())))
        .collect();
    let mut participation: BTreeMap<&str, usize> = method_of.keys().map(|k| (*k, 0)).collect();
    let mut pair_counts: BTreeMap<(&str, &str), usize> = BTreeMap::new();
    for p in &pairs {
        let (ma, mb) = (method_of[p.image_a.as_str()], method_of[p.image_b.as_str()]);
        assert_ne!(ma, mb, "pair within one method");
        *participation.get_mut(p.image_a.as_str()).unwrap() += 1;
        *participation.get_mut(p.image_b.as_str()).unwrap() += 1;
        *pair_counts.entry(if ma < mb { (ma, mb) } else { (mb, ma) }).or_default() += 1;
    }
    let min = participation.values().min().unwrap();
    assert!(*min >= MIN_COMPARISONS, "min participation {min} for {imgs:?}");
    let methods: Vec<&str> = imgs.keys().map(String::as_str).collect();
    let mut counts = Vec::new();
    for i in 0..methods.len() {
        for j in i + 1..methods.len() {
            counts.push(pair_counts.get(&(methods[i], methods[j])).copied().unwrap_or(0));
        }
    }
    let (lo, hi) = (*counts.iter().min().unwrap(), *counts.iter().max().unwrap());
    assert!(lo > 0 && hi <= 2 * lo, "method-pair coverage {counts:?}");
    assert_eq!(pairs, schedule_comparisons(imgs, Dimension::Mtf, seed).unwrap());
}
