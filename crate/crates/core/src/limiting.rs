//! Continuous-time stationary distributions.
//!
//! With `π_k(0) = P_k / a` and `B̂_l = (1/a) Σ_{i=1}^{l} P_i`, the customer
//! distribution is built as the ladder `π_n = 𝒢_n + π_0` with
//! `π_0 = (1 − Σ 𝒢_n)/(1 + w)`. The ladder has three bands whose limits depend
//! on the model type:
//!
//! ```text
//! Type 1 (w ≥ 2v)
//!   λ𝒢_n = (1/a) Σ_{j=1}^{n} P_{v+j−1} − B̂_n               n = 1..v
//!   λ𝒢_n = (1/a) Σ_{j=v+1}^{n−v} P_{v+j} − B̂_{v−1}          n = v+1..w−v
//!   λ𝒢_n = (1/a)(n − w + v) P_w − B̂_{v−1}                   n = w−v+1..w
//!
//! Type 2 (w < 2v)
//!   λ𝒢_n = (1/a) Σ_{j=1}^{n} P_{v+j−1} − B̂_n                              n = 1..w−v
//!   λ𝒢_n = (1/a) Σ_{j=1}^{w−v} P_{v+j} + (1/a)(n − w + v) P_w − B̂_n       n = w−v+1..v
//!   λ𝒢_n = (1/a) Σ_{j=n−v+1}^{w−v} P_{v+j} + (1/a)(n − w + v) P_w − B̂_{v−1}  n = v+1..w
//! ```
//!
//! Sums with an empty or reversed range are zero and `P_i` beyond `w` is zero.
//! The contractor distribution is the flip `π¹_k = π_{w−k}`.
//!
//! These bands are applied exactly as written. They do not reduce to the
//! birth–death law when `v = 1` and can go negative for small loads; negative
//! entries are flagged, never clamped, and the simulator quantifies the gap.

use alloc::vec;
use alloc::vec::Vec;

use crate::embedded::{EmbeddedSolution, ModelType, SystemParams};
use crate::error::{Error, Result};

/// Entries below this are reported as negative.
pub const NEGATIVE_TOLERANCE: f64 = -1e-9;

#[derive(Clone, Debug, PartialEq)]
pub struct LimitingDistribution {
    /// Customer view, `π_0..π_w`.
    pub pi: Vec<f64>,
    /// Contractor pool, `π¹_k = π_{w−k}`.
    pub pi1: Vec<f64>,
    /// `𝒢_1..𝒢_w`.
    pub g: Vec<f64>,
    pub valid: bool,
    /// `(k, π_k)` for every entry of `pi` below [`NEGATIVE_TOLERANCE`].
    pub negative_entries: Vec<(usize, f64)>,
}

/// `B̂_l = (1/a) Σ_{i=1}^{l} P_i`.
pub fn bhat(p: &[f64], mean: f64, l: usize) -> Result<f64> {
    if l >= p.len() {
        return Err(Error::domain(alloc::format!(
            "B̂ index {l} out of range 0..{}",
            p.len() - 1
        )));
    }
    Ok(p[1..=l].iter().sum::<f64>() / mean)
}

fn at(p: &[f64], i: usize) -> f64 {
    p.get(i).copied().unwrap_or(0.0)
}

// Σ_{j=lo}^{hi} P_{off+j}; zero when lo > hi
fn range_sum(p: &[f64], off: usize, lo: i64, hi: i64) -> f64 {
    if lo > hi {
        return 0.0;
    }
    (lo..=hi).map(|j| at(p, (off as i64 + j) as usize)).sum()
}

/// `𝒢_1..𝒢_w` for the given embedded vector `P` (length `w + 1`).
pub fn g_vector(params: &SystemParams, p: &[f64]) -> Result<Vec<f64>> {
    let w = params.w() as usize;
    if p.len() != w + 1 {
        return Err(Error::domain(alloc::format!(
            "embedded vector has length {} but w + 1 = {}",
            p.len(),
            w + 1
        )));
    }
    let v = params.v() as usize;
    let s = w - v;
    let a = params.posting().mean();
    let lambda = params.lambda();
    let (vi, wi) = (v as i64, w as i64);
    // prefix sums: cum[l] = Σ_{i=1}^{l} P_i
    let mut cum = vec![0.0; w + 1];
    for l in 1..=w {
        cum[l] = cum[l - 1] + p[l];
    }
    let b = |l: usize| cum[l] / a;
    let pw = p[w];

    let mut g = Vec::with_capacity(w);
    for n in 1..=w {
        let ni = n as i64;
        let scaled = match params.model_type() {
            ModelType::Type1 => {
                if n <= v {
                    range_sum(p, v - 1, 1, ni) / a - b(n)
                } else if n <= s {
                    range_sum(p, v, vi + 1, ni - vi) / a - b(v - 1)
                } else {
                    (ni - wi + vi) as f64 * pw / a - b(v - 1)
                }
            }
            ModelType::Type2 => {
                if n <= s {
                    range_sum(p, v - 1, 1, ni) / a - b(n)
                } else if n <= v {
                    range_sum(p, v, 1, (w - v) as i64) / a + (ni - wi + vi) as f64 * pw / a - b(n)
                } else {
                    range_sum(p, v, ni - vi + 1, (w - v) as i64) / a
                        + (ni - wi + vi) as f64 * pw / a
                        - b(v - 1)
                }
            }
        };
        g.push(scaled / lambda);
    }
    Ok(g)
}

/// `π`, `π¹` and the validity flag for one instance.
pub fn limiting_pi(
    params: &SystemParams,
    embedded: &EmbeddedSolution,
) -> Result<LimitingDistribution> {
    let g = g_vector(params, &embedded.p)?;
    let w = params.w() as usize;
    let pi0 = (1.0 - g.iter().sum::<f64>()) / (1.0 + w as f64);
    let mut pi = Vec::with_capacity(w + 1);
    pi.push(pi0);
    pi.extend(g.iter().map(|gn| gn + pi0));
    let pi1: Vec<f64> = pi.iter().rev().copied().collect();
    let negative_entries: Vec<(usize, f64)> = pi
        .iter()
        .enumerate()
        .filter(|(_, x)| **x < NEGATIVE_TOLERANCE)
        .map(|(k, x)| (k, *x))
        .collect();
    Ok(LimitingDistribution {
        valid: negative_entries.is_empty(),
        pi,
        pi1,
        g,
        negative_entries,
    })
}
