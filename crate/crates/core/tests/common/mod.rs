#![allow(dead_code)]

use conflict_grid::evidence::BeliefMass;
use conflict_grid::simworld::Environment;
use rand::Rng;

/// Random valid belief. With `with_conflict`, some mass also lands on ∅.
pub fn random_mass<R: Rng>(rng: &mut R, with_conflict: bool) -> BeliefMass {
    let mut w = [rng.gen::<f64>(), rng.gen::<f64>(), rng.gen::<f64>(), 0.0];
    if with_conflict {
        w[3] = rng.gen::<f64>();
    }
    let s: f64 = w.iter().sum();
    let occupied = w[0] / s;
    let empty = w[1] / s;
    let conflict = w[3] / s;
    BeliefMass {
        occupied,
        empty,
        theta: 1.0 - occupied - empty - conflict,
        conflict,
    }
}

// Subsets of {O, E} as bitmasks: 0 = ∅, 1 = {O}, 2 = {E}, 3 = Θ.
fn to_table(m: &BeliefMass) -> [f64; 4] {
    [m.conflict, m.occupied, m.empty, m.theta]
}

/// Unnormalized conjunctive combination by enumerating every pair of focal sets.
pub fn powerset_conjunction(a: &BeliefMass, b: &BeliefMass) -> [f64; 4] {
    let (ta, tb) = (to_table(a), to_table(b));
    let mut out = [0.0; 4];
    for (x, &ma) in ta.iter().enumerate() {
        for (y, &mb) in tb.iter().enumerate() {
            out[x & y] += ma * mb;
        }
    }
    out
}

pub fn oracle_smets(a: &BeliefMass, b: &BeliefMass) -> BeliefMass {
    let t = powerset_conjunction(a, b);
    BeliefMass {
        occupied: t[1],
        empty: t[2],
        theta: t[3],
        conflict: t[0],
    }
}

pub fn oracle_dempster(a: &BeliefMass, b: &BeliefMass) -> BeliefMass {
    let t = powerset_conjunction(a, b);
    let norm = 1.0 - t[0];
    BeliefMass {
        occupied: t[1] / norm,
        empty: t[2] / norm,
        theta: t[3] / norm,
        conflict: 0.0,
    }
}

pub fn max_abs_diff(a: &BeliefMass, b: &BeliefMass) -> f64 {
    [
        a.occupied - b.occupied,
        a.empty - b.empty,
        a.theta - b.theta,
        a.conflict - b.conflict,
    ]
    .iter()
    .fold(0.0f64, |m, d| m.max(d.abs()))
}

/// Optimal within-cluster sum of squares for 1-D k-means, by dynamic
/// programming over the sorted values. Returns the cost and the ascending
/// centroids.
pub fn kmeans_dp(values: &[f64], k: usize) -> (f64, Vec<f64>) {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    let mut pre = vec![0.0; n + 1];
    let mut pre2 = vec![0.0; n + 1];
    for i in 0..n {
        pre[i + 1] = pre[i] + v[i];
        pre2[i + 1] = pre2[i] + v[i] * v[i];
    }
    // Cost of putting v[i..j] in one cluster.
    let cost = |i: usize, j: usize| {
        let m = (j - i) as f64;
        let s = pre[j] - pre[i];
        (pre2[j] - pre2[i] - s * s / m).max(0.0)
    };
    let inf = f64::INFINITY;
    let mut dp = vec![vec![inf; n + 1]; k + 1];
    let mut cut = vec![vec![0usize; n + 1]; k + 1];
    dp[0][0] = 0.0;
    for c in 1..=k {
        for j in c..=n {
            for i in (c - 1)..j {
                let cand = dp[c - 1][i] + cost(i, j);
                if cand < dp[c][j] {
                    dp[c][j] = cand;
                    cut[c][j] = i;
                }
            }
        }
    }
    let mut centroids = Vec::with_capacity(k);
    let mut j = n;
    for c in (1..=k).rev() {
        let i = cut[c][j];
        centroids.push((pre[j] - pre[i]) / (j - i) as f64);
        j = i;
    }
    centroids.reverse();
    (dp[k][n], centroids)
}

/// Otsu by brute force: try every cut, compute both class variances directly,
/// keep the cut with the smallest weighted within-class variance.
pub fn otsu_exhaustive(levels: &[u8]) -> Option<u8> {
    let distinct: std::collections::BTreeSet<u8> = levels.iter().copied().collect();
    if distinct.len() < 2 {
        return None;
    }
    let var = |xs: &[f64]| {
        let m = xs.iter().sum::<f64>() / xs.len() as f64;
        xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / xs.len() as f64
    };
    let mut best: Option<(f64, u8)> = None;
    for t in 0..255u8 {
        let lo: Vec<f64> = levels.iter().filter(|&&l| l <= t).map(|&l| l as f64).collect();
        let hi: Vec<f64> = levels.iter().filter(|&&l| l > t).map(|&l| l as f64).collect();
        if lo.is_empty() || hi.is_empty() {
            continue;
        }
        let within = lo.len() as f64 * var(&lo) + hi.len() as f64 * var(&hi);
        if best.is_none_or(|(b, _)| within < b - 1e-9) {
            best = Some((within, t));
        }
    }
    best.map(|b| b.1)
}

/// Winding-number point-in-polygon test over the environment's walls.
pub fn winding_inside(env: &Environment, x: f64, y: f64) -> bool {
    let mut winding = 0i32;
    for w in &env.walls {
        let (a, b) = (w.a, w.b);
        let side = (b.x - a.x) * (y - a.y) - (x - a.x) * (b.y - a.y);
        if a.y <= y {
            if b.y > y && side > 0.0 {
                winding += 1;
            }
        } else if b.y <= y && side < 0.0 {
            winding -= 1;
        }
    }
    winding != 0
}
