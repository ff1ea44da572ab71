//! Independent oracles shared by the integration tests. Nothing here calls
//! into the library's numerical routines.

#![allow(dead_code)]

use rand::Rng;

/// Euclidean projection onto the simplex by enumerating every support set:
/// on support `S` the minimizer is `y_S - tau` with `tau` fixed by the sum
/// constraint; the best feasible candidate is the projection.
pub fn brute_simplex_projection(y: &[f64]) -> Vec<f64> {
    let n = y.len();
    let mut best: Option<(f64, Vec<f64>)> = None;
    for mask in 1u32..(1 << n) {
        let support: Vec<usize> = (0..n).filter(|i| mask & (1 << i) != 0).collect();
        let tau = (support.iter().map(|&i| y[i]).sum::<f64>() - 1.0) / support.len() as f64;
        let mut x = vec![0.0; n];
        let mut feasible = true;
        for &i in &support {
            x[i] = y[i] - tau;
            if x[i] < -1e-15 {
                feasible = false;
            }
        }
        if !feasible {
            continue;
        }
        let d = dist2(&x, y);
        if best.as_ref().map_or(true, |(b, _)| d < *b) {
            best = Some((d, x));
        }
    }
    best.expect("some support is feasible").1
}

/// Projection onto `{v : sum v = 0, v_i >= 0 for i in active}` by
/// enumerating which active coordinates are pinned at zero.
pub fn brute_tangent_cone(p: &[f64], active: &[usize]) -> Vec<f64> {
    let n = p.len();
    let mut best: Option<(f64, Vec<f64>)> = None;
    for mask in 0u32..(1 << active.len()) {
        let pinned: Vec<usize> = active
            .iter()
            .enumerate()
            .filter(|(k, _)| mask & (1 << k) != 0)
            .map(|(_, &i)| i)
            .collect();
        let free: Vec<usize> = (0..n).filter(|i| !pinned.contains(i)).collect();
        if free.is_empty() {
            continue;
        }
        let mu = free.iter().map(|&i| p[i]).sum::<f64>() / free.len() as f64;
        let mut v = vec![0.0; n];
        for &i in &free {
            v[i] = p[i] - mu;
        }
        if active.iter().any(|&i| v[i] < -1e-15) {
            continue;
        }
        let d = dist2(&v, p);
        if best.as_ref().map_or(true, |(b, _)| d < *b) {
            best = Some((d, v));
        }
    }
    best.expect("zero vector is feasible").1
}

pub fn dist2(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

pub fn sup_norm(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Uniform sample from the simplex via normalized exponentials.
pub fn random_simplex<R: Rng>(rng: &mut R, n: usize) -> Vec<f64> {
    let e: Vec<f64> = (0..n).map(|_| -(1.0 - rng.gen::<f64>()).ln()).collect();
    let s: f64 = e.iter().sum();
    e.iter().map(|v| v / s).collect()
}

/// Random simplex point with a random subset of coordinates set to zero.
pub fn random_face_point<R: Rng>(rng: &mut R, n: usize) -> Vec<f64> {
    loop {
        let mut x = random_simplex(rng, n);
        for v in x.iter_mut() {
            if rng.gen_bool(0.4) {
                *v = 0.0;
            }
        }
        let s: f64 = x.iter().sum();
        if s > 0.0 {
            return x.iter().map(|v| v / s).collect();
        }
    }
}

/// `log(sum(exp(z)))` with max subtraction, and the softmax built from it.
pub fn softmax(z: &[f64]) -> Vec<f64> {
    let m = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let s: f64 = z.iter().map(|v| (v - m).exp()).sum();
    z.iter().map(|v| (v - m).exp() / s).collect()
}

pub fn kl(target: &[f64], x: &[f64]) -> f64 {
    target
        .iter()
        .zip(x)
        .filter(|(t, _)| **t > 0.0)
        .map(|(t, xi)| t * (t / xi).ln())
        .sum()
}

/// Least-squares slope of `v` against `t` over the second half of the samples.
pub fn last_half_slope(t: &[f64], v: &[f64]) -> f64 {
    let k = t.len() / 2;
    let (t, v) = (&t[k..], &v[k..]);
    let m = t.len() as f64;
    let tm = t.iter().sum::<f64>() / m;
    let vm = v.iter().sum::<f64>() / m;
    let num: f64 = t.iter().zip(v).map(|(a, b)| (a - tm) * (b - vm)).sum();
    let den: f64 = t.iter().map(|a| (a - tm) * (a - tm)).sum();
    num / den
}

/// Composite Simpson rule on `[a, b]` with `m` (even) panels.
pub fn simpson<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, m: usize) -> f64 {
    let h = (b - a) / m as f64;
    let mut s = f(a) + f(b);
    for k in 1..m {
        let w = if k % 2 == 1 { 4.0 } else { 2.0 };
        s += w * f(a + k as f64 * h);
    }
    s * h / 3.0
}

/// Cumulative regret against `anchor` recomputed from the sampled payoffs
/// and strategies with the trapezoid rule.
pub fn regret_curve(times: &[f64], payoffs: &[Vec<f64>], strategies: &[Vec<f64>], anchor: &[f64]) -> Vec<f64> {
    let g: Vec<f64> = payoffs
        .iter()
        .zip(strategies)
        .map(|(p, x)| dot(p, anchor) - dot(p, x))
        .collect();
    let mut out = vec![0.0; g.len()];
    for k in 1..g.len() {
        out[k] = out[k - 1] + 0.5 * (times[k] - times[k - 1]) * (g[k] + g[k - 1]);
    }
    out
}

/// Largest value of `V(x0, e_i)` over vertices for the storage functions
/// certifying finite regret, written out independently per model.
pub fn storage_bound_oracle(model: &str, x0: &[f64]) -> f64 {
    let n = x0.len();
    let kl_max = x0.iter().map(|v| -v.ln()).fold(f64::NEG_INFINITY, f64::max);
    let half_sq_max = (0..n)
        .map(|i| {
            0.5 * x0
                .iter()
                .enumerate()
                .map(|(j, v)| {
                    let e = if i == j { 1.0 } else { 0.0 };
                    (v - e) * (v - e)
                })
                .sum::<f64>()
        })
        .fold(f64::NEG_INFINITY, f64::max);
    match model {
        "rd" | "ftrl" => kl_max,
        "dp" => half_sq_max,
        // aux state starts at x0, so the auxiliary term equals the same
        // half squared distance to the vertex
        "sho-ftrl" => (0..n)
            .map(|i| {
                let hs = 0.5
                    * x0.iter()
                        .enumerate()
                        .map(|(j, v)| {
                            let e = if i == j { 1.0 } else { 0.0 };
                            (v - e) * (v - e)
                        })
                        .sum::<f64>();
                -x0[i].ln() + hs
            })
            .fold(f64::NEG_INFINITY, f64::max),
        "sho-dp" => 2.0 * half_sq_max,
        other => panic!("no storage bound for {other}"),
    }
}
