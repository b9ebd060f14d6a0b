#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand::seq::SliceRandom;
use rand_xoshiro::Xoshiro256PlusPlus;
use tacnet::design::Evaluator;
use tacnet::stats::average_ranks;
use tacnet::topology::Tree;

pub fn rng(seed: u64) -> Xoshiro256PlusPlus {
    Xoshiro256PlusPlus::seed_from_u64(seed)
}

/// Edges of the labelled tree with Prüfer sequence `seq` on `seq.len() + 2` nodes.
pub fn prufer_decode(seq: &[usize]) -> Vec<(usize, usize)> {
    let n = seq.len() + 2;
    let mut degree = vec![1usize; n];
    for &s in seq {
        degree[s] += 1;
    }
    let mut edges = Vec::with_capacity(n - 1);
    for &s in seq {
        let leaf = (0..n).find(|&v| degree[v] == 1).unwrap();
        edges.push((leaf, s));
        degree[leaf] -= 1;
        degree[s] -= 1;
    }
    let rest: Vec<usize> = (0..n).filter(|&v| degree[v] == 1).collect();
    edges.push((rest[0], rest[1]));
    edges
}

/// All `n^(n-2)` labelled trees on `n >= 2` nodes.
pub fn all_trees(n: usize) -> Vec<Vec<(usize, usize)>> {
    if n == 2 {
        return vec![vec![(0, 1)]];
    }
    let len = n - 2;
    let total = n.pow(len as u32);
    (0..total)
        .map(|mut code| {
            let seq: Vec<usize> = (0..len)
                .map(|_| {
                    let d = code % n;
                    code /= n;
                    d
                })
                .collect();
            prufer_decode(&seq)
        })
        .collect()
}

pub fn random_tree(n: usize, r: &mut impl Rng) -> Vec<(usize, usize)> {
    if n == 2 {
        return vec![(0, 1)];
    }
    let seq: Vec<usize> = (0..n - 2).map(|_| r.random_range(0..n)).collect();
    prufer_decode(&seq)
}

pub fn adjacency(n: usize, edges: &[(usize, usize)]) -> Vec<Vec<usize>> {
    let mut adj = vec![Vec::new(); n];
    for &(a, b) in edges {
        adj[a].push(b);
        adj[b].push(a);
    }
    adj
}

/// Path between two nodes by depth-first search.
pub fn path(adj: &[Vec<usize>], from: usize, to: usize) -> Vec<usize> {
    fn go(adj: &[Vec<usize>], cur: usize, to: usize, prev: usize, acc: &mut Vec<usize>) -> bool {
        acc.push(cur);
        if cur == to {
            return true;
        }
        for &w in &adj[cur] {
            if w != prev && go(adj, w, to, cur, acc) {
                return true;
            }
        }
        acc.pop();
        false
    }
    let mut acc = Vec::new();
    go(adj, from, to, usize::MAX, &mut acc);
    acc
}

/// Two-sided exact p by listing every sign pattern.
pub fn wilcoxon_enumerated(x: &[f64], y: &[f64]) -> f64 {
    let d: Vec<f64> = x.iter().zip(y).map(|(a, b)| a - b).filter(|d| *d != 0.0).collect();
    if d.is_empty() {
        return 1.0;
    }
    let ranks = average_ranks(&d.iter().map(|v| v.abs()).collect::<Vec<_>>());
    let total: f64 = ranks.iter().sum();
    let w_plus: f64 = d.iter().zip(&ranks).filter(|(v, _)| **v > 0.0).map(|(_, r)| r).sum();
    let w = w_plus.min(total - w_plus);
    let n = d.len();
    let mut hits = 0u64;
    for mask in 0u64..(1 << n) {
        let s: f64 = (0..n).filter(|i| mask >> i & 1 == 1).map(|i| ranks[i]).sum();
        if s.min(total - s) <= w + 1e-9 {
            hits += 1;
        }
    }
    hits as f64 / (1u64 << n) as f64
}

pub fn friedman_stat(rows: &[Vec<f64>]) -> f64 {
    let n = rows.len() as f64;
    let k = rows[0].len();
    let kf = k as f64;
    let ranks: Vec<Vec<f64>> = rows.iter().map(|r| average_ranks(r)).collect();
    let mut ties = 0.0;
    for r in rows {
        let mut v = r.clone();
        v.sort_by(f64::total_cmp);
        let mut i = 0;
        while i < v.len() {
            let mut j = i;
            while j + 1 < v.len() && v[j + 1] == v[i] {
                j += 1;
            }
            let t = (j - i + 1) as f64;
            ties += t * t * t - t;
            i = j + 1;
        }
    }
    let sum_sq: f64 = (0..k).map(|j| ranks.iter().map(|r| r[j]).sum::<f64>().powi(2)).sum();
    let chi = 12.0 / (n * kf * (kf + 1.0)) * sum_sq - 3.0 * n * (kf + 1.0);
    chi / (1.0 - ties / (n * (kf * kf * kf - kf)))
}

pub fn friedman_permutation_oracle(rows: &[Vec<f64>], draws: usize, seed: u64) -> f64 {
    let observed = friedman_stat(rows);
    let mut r = rng(seed);
    let mut work = rows.to_vec();
    let mut hits = 0usize;
    for _ in 0..draws {
        for row in work.iter_mut() {
            row.shuffle(&mut r);
        }
        if friedman_stat(&work) >= observed - 1e-9 {
            hits += 1;
        }
    }
    hits as f64 / draws as f64
}

/// Best total over every labelled tree and every hub.
pub fn exhaustive_optimum(ev: &Evaluator<f64>, n: usize) -> f64 {
    let mut best = f64::NEG_INFINITY;
    for edges in all_trees(n) {
        let tree = Tree::new(n, edges).unwrap();
        for hub in 0..n {
            if let Ok(e) = ev.evaluate(&tree, hub) {
                best = best.max(e.total());
            }
        }
    }
    best
}
