//! Independent oracles shared by the integration tests. Nothing here calls the
//! library's solvers.
#![allow(dead_code)]

use bulkq_core::AdmissionPolicy;

/// Pool law for `v = 1` with exponential postings: a birth–death chain on
/// `0..=w` with up rate `1/a` and down rate `λ`, so `π¹_k ∝ (1/(λa))^k`.
pub fn birth_death_pool(w: usize, lambda: f64, mean: f64) -> Vec<f64> {
    let r = 1.0 / (lambda * mean);
    let raw: Vec<f64> = (0..=w).map(|k| r.powi(k as i32)).collect();
    let total: f64 = raw.iter().sum();
    raw.into_iter().map(|x| x / total).collect()
}

/// Exact stationary pool law when postings are exponential, for either
/// admission rule: a CTMC with `k → k−1` at rate `λ` and a batch jump at rate `1/a`.
pub fn exponential_pool_ctmc(
    v: usize,
    w: usize,
    lambda: f64,
    mean: f64,
    policy: AdmissionPolicy,
) -> Vec<f64> {
    let n = w + 1;
    let mut q = vec![vec![0.0; n]; n];
    for k in 0..n {
        if k > 0 {
            q[k][k - 1] += lambda;
        }
        let to = match policy {
            AdmissionPolicy::Clip => (k + v).min(w),
            AdmissionPolicy::RejectIfNoFullRoom => {
                if k + v <= w {
                    k + v
                } else {
                    k
                }
            }
        };
        if to != k {
            q[k][to] += 1.0 / mean;
        }
    }
    gth(q)
}

/// Grassmann–Taylor–Heyman elimination on a rate (or probability) matrix; the
/// diagonal is ignored.
pub fn gth(mut a: Vec<Vec<f64>>) -> Vec<f64> {
    let n = a.len();
    let mut pivot = vec![0.0; n];
    for k in (1..n).rev() {
        let s: f64 = (0..k).map(|j| a[k][j]).sum();
        pivot[k] = s;
        for i in 0..k {
            let f = a[i][k] / s;
            for j in 0..k {
                a[i][j] += f * a[k][j];
            }
        }
    }
    let mut x = vec![0.0; n];
    x[0] = 1.0;
    for j in 1..n {
        x[j] = (0..j).map(|i| x[i] * a[i][j]).sum::<f64>() / pivot[j];
    }
    let t: f64 = x.iter().sum();
    x.into_iter().map(|y| y / t).collect()
}

/// Long-run cost rate of a pool law under linear costs.
pub fn linear_cost(
    pi1: &[f64],
    v: usize,
    lambda: f64,
    mean: f64,
    ch: f64,
    cr: f64,
    cd: f64,
) -> f64 {
    let holding: f64 = pi1.iter().enumerate().map(|(k, p)| ch * k as f64 * p).sum();
    let reserve: f64 = pi1
        .iter()
        .enumerate()
        .filter(|(k, _)| *k > v)
        .map(|(k, p)| cr * (k - v) as f64 * p)
        .sum();
    holding + reserve + cd * lambda / v as f64 / mean
}

pub fn max_abs(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

pub fn tv(a: &[f64], b: &[f64]) -> f64 {
    0.5 * a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum::<f64>()
}
