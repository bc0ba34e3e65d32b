//! Independent reference implementations shared by the integration tests.
#![allow(dead_code)]

use gwr_core::datasets::{self, Dataset, Split, SyntheticSpec};
use gwr_core::network::{ContextState, Neuron};
use gwr_core::{HyperParams, Mode, Network, NeuronId};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn sq(a: &[f64], b: &[f64]) -> f64 {
    let mut s = 0.0;
    for i in 0..a.len() {
        let d = a[i] - b[i];
        s += d * d;
    }
    s
}

/// Context-weighted distance written out term by term.
pub fn oracle_distance(alpha: &[f64], global: &[Vec<f64>], n: &Neuron, x: &[f64]) -> f64 {
    let mut d = alpha[0] * sq(x, &n.weight);
    for k in 0..global.len() {
        d += alpha[k + 1] * sq(&global[k], &n.contexts[k]);
    }
    d
}

/// Exhaustive scan: all distances, then sort by (distance, id).
pub fn oracle_bmu(alpha: &[f64], global: &[Vec<f64>], neurons: &[Neuron], x: &[f64]) -> (u32, u32, f64) {
    let mut all: Vec<(f64, u32)> = neurons
        .iter()
        .map(|n| (oracle_distance(alpha, global, n, x), n.id.0))
        .collect();
    all.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap().then(a.1.cmp(&b.1)));
    (all[0].1, all[1].1, all[0].0)
}

/// Predecessor walk from `source`: at each step pick the neuron with the
/// largest positive count into the current tail, smallest id on ties,
/// skipping neurons already on the walk.
pub fn oracle_rnat(n: usize, counts: &[Vec<u64>], source: usize, lambda: usize) -> Vec<u32> {
    let mut walk = vec![source];
    while walk.len() <= lambda {
        let tail = *walk.last().unwrap();
        let mut best: Option<(u64, usize)> = None;
        for cand in 0..n {
            if walk.contains(&cand) || counts[cand][tail] == 0 {
                continue;
            }
            if best.is_none_or(|(c, _)| counts[cand][tail] > c) {
                best = Some((counts[cand][tail], cand));
            }
        }
        match best {
            Some((_, id)) => walk.push(id),
            None => break,
        }
    }
    walk.into_iter().map(|i| i as u32).collect()
}

pub fn random_vec(r: &mut ChaCha8Rng, dim: usize, scale: f64) -> Vec<f64> {
    (0..dim).map(|_| r.random_range(-scale..scale)).collect()
}

/// Random alpha vector of length `depth + 1`, positive, summing to 1.
pub fn random_alpha(r: &mut ChaCha8Rng, depth: usize) -> Vec<f64> {
    let raw: Vec<f64> = (0..=depth).map(|_| r.random_range(0.05..1.0)).collect();
    let s: f64 = raw.iter().sum();
    raw.iter().map(|v| v / s).collect()
}

/// Network with random weights, descriptors, and habituation. Some weights
/// are duplicated so that ties occur.
pub fn random_network(r: &mut ChaCha8Rng, n: usize, dim: usize, depth: usize) -> Network {
    let hyper = HyperParams {
        alpha: random_alpha(r, depth),
        n_max: n.max(2) + 5,
        ..HyperParams::default()
    };
    let mut neurons: Vec<Neuron> = (0..n)
        .map(|i| Neuron {
            id: NeuronId(i as u32),
            weight: random_vec(r, dim, 2.0),
            contexts: (0..depth).map(|_| random_vec(r, dim, 2.0)).collect(),
            habituation: r.random_range(0.0..=1.0),
        })
        .collect();
    if n > 3 && r.random_bool(0.3) {
        let (a, b) = (r.random_range(0..n), r.random_range(0..n));
        neurons[b].weight = neurons[a].weight.clone();
        neurons[b].contexts = neurons[a].contexts.clone();
    }
    let mut edges = Vec::new();
    for _ in 0..n {
        let (a, b) = (r.random_range(0..n), r.random_range(0..n));
        if a != b {
            edges.push((NeuronId(a as u32), NeuronId(b as u32)));
        }
    }
    let mut ctx = ContextState::new(depth, dim);
    for g in &mut ctx.global {
        *g = random_vec(r, dim, 2.0);
    }
    Network::from_parts(dim, hyper, Mode::Growing, neurons, &edges, ctx, 0, 0).unwrap()
}

/// The default benchmark: 10 categories, 5 instances, 11 sessions, 16
/// dimensions, 20 frames per sequence; test sessions 3, 7, 10.
pub fn default_split(seed: u64) -> Split {
    let data = datasets::generate_synthetic(&SyntheticSpec::default(), seed).unwrap();
    datasets::split_by_sessions(&data, &[3, 7, 10]).unwrap()
}

pub fn small_spec() -> SyntheticSpec {
    SyntheticSpec {
        categories: 4,
        instances: 2,
        sessions: 4,
        dim: 4,
        frames_per_seq: 8,
        ..SyntheticSpec::default()
    }
}

pub fn small_split(seed: u64) -> Split {
    let data = datasets::generate_synthetic(&small_spec(), seed).unwrap();
    datasets::split_by_sessions(&data, &[3]).unwrap()
}

/// Sorted union of the categories of both splits.
pub fn categories(split: &Split) -> Vec<String> {
    let mut c = split.train.categories();
    for x in split.test.categories() {
        if !c.contains(&x) {
            c.push(x);
        }
    }
    c.sort();
    c
}

/// Frames of `data` as `(features, instance, sequence start)` in order.
pub fn stream(data: &Dataset) -> Vec<(Vec<f64>, String, bool)> {
    let mut out = Vec::new();
    for s in data.sequences() {
        for (i, f) in data.sequence_frames(s).iter().enumerate() {
            out.push((f.features.clone(), f.instance.clone(), i == 0));
        }
    }
    out
}

pub fn median(v: &mut [f64]) -> f64 {
    v.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}
