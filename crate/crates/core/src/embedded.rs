//! Embedded chain of the customer view at posting epochs.
//!
//! `X_n` is the number of customers just before the `n`-th posting. Between
//! postings the customer count grows by `V ~ ψ`; a posting serves up to `v`
//! customers. The infinite-waiting-room vector `Q` is obtained either from the
//! characteristic root (exponential postings, geometric closed form) or from a
//! truncated level-`N` solve. The finite-capacity vector `P` keeps
//! `Q_0..Q_{w−v}` and renormalises them:
//!
//! ```text
//! P_k = κ·Q_k,   k = 0..w−v,        κ⁻¹ = Σ_{i ≤ w−v} Q_i
//! P_k = 0,       k = w−v+1..w
//! ```

use alloc::vec;
use alloc::vec::Vec;

use crate::dist::{DistKind, PostingDistribution, PsiRow};
use crate::error::{Error, Result};

/// Hard cap on the truncation level of the general-distribution solve.
pub const MAX_TRUNCATION_LEVEL: usize = 1 << 16;
const MIN_TRUNCATION_LEVEL: usize = 64;

/// One platform instance: batch size `v`, capacity `w`, consumption rate `λ`
/// and the posting distribution.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SystemParams {
    v: u32,
    w: u32,
    lambda: f64,
    posting: PostingDistribution,
}

impl SystemParams {
    pub fn new(v: u32, w: u32, lambda: f64, posting: PostingDistribution) -> Result<Self> {
        if v == 0 {
            return Err(Error::invalid("batch size v must be at least 1"));
        }
        if v > w {
            return Err(Error::invalid(alloc::format!(
                "batch size v = {v} exceeds capacity w = {w} (need 1 ≤ v ≤ w)"
            )));
        }
        if !(lambda.is_finite() && lambda > 0.0) {
            return Err(Error::invalid(alloc::format!(
                "consumption rate λ must be positive (got {lambda})"
            )));
        }
        Ok(Self {
            v,
            w,
            lambda,
            posting,
        })
    }

    /// Same instance with a different batch size.
    pub fn with_v(&self, v: u32) -> Result<Self> {
        Self::new(v, self.w, self.lambda, self.posting)
    }

    pub fn v(&self) -> u32 {
        self.v
    }

    pub fn w(&self) -> u32 {
        self.w
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn posting(&self) -> &PostingDistribution {
        &self.posting
    }

    /// Company-reserved slots `s = w − v`.
    pub fn reserved(&self) -> u32 {
        self.w - self.v
    }

    /// Offered load `ρ = λa/v`.
    pub fn load(&self) -> f64 {
        self.lambda * self.posting.mean() / self.v as f64
    }

    pub fn model_type(&self) -> ModelType {
        if self.w >= 2 * self.v {
            ModelType::Type1
        } else {
            ModelType::Type2
        }
    }

    fn require_stable(&self) -> Result<()> {
        let load = self.load();
        if load < 1.0 {
            Ok(())
        } else {
            Err(Error::NoRoot { load })
        }
    }
}

/// `Type1` when `w ≥ 2v`, `Type2` otherwise.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ModelType {
    Type1,
    Type2,
}

/// Dense row-major square matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct Tpm {
    n: usize,
    data: Vec<f64>,
}

impl Tpm {
    fn zeros(n: usize) -> Self {
        Self {
            n,
            data: vec![0.0; n * n],
        }
    }

    pub fn size(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    fn set(&mut self, i: usize, j: usize, x: f64) {
        self.data[i * self.n + j] = x;
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.n..(i + 1) * self.n]
    }

    pub fn row_sums(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.row(i).iter().sum()).collect()
    }
}

/// Transition matrix of the finite embedded chain on `0..=w`.
///
/// Rows `j ≤ v` carry `ψ(k)`, the Type 1 middle rows `v < j ≤ w−v` carry the
/// band `ψ(k − (j − v))`, and in every such row column `w − v` absorbs the
/// remaining mass. Rows the finite chain can never reach get a self-loop.
pub fn build_tpm(params: &SystemParams) -> Result<Tpm> {
    let v = params.v as usize;
    let w = params.w as usize;
    let s = w - v;
    let row = params.posting.psi_row(params.lambda, s)?;
    let mut m = Tpm::zeros(w + 1);
    for j in 0..=w {
        let shift = if j <= v {
            Some(0)
        } else if j <= s {
            Some(j - v)
        } else {
            None
        };
        match shift {
            Some(d) => {
                let mut head = 0.0;
                for k in d..s {
                    let p = row.get(k - d);
                    m.set(j, k, p);
                    head += p;
                }
                m.set(j, s, (1.0 - head).max(0.0));
            }
            None => m.set(j, j, 1.0),
        }
    }
    Ok(m)
}

/// The real root `z₀ > 1` of `z^v (1 + λa(1 − z)) − 1 = 0`.
///
/// With `c = λa`, the left side `z^v(1 + c − cz)` rises from 1 at `z = 1` up
/// to its maximum at `z* = v(1+c)/(c(v+1))` and then falls without bound, so
/// for `c < v` there is exactly one crossing beyond 1, bracketed by
/// `[z*, (1+c)/c]`.
pub fn characteristic_root(v: u32, lambda: f64, mean: f64) -> Result<f64> {
    if v == 0 {
        return Err(Error::invalid("batch size v must be at least 1"));
    }
    if !(lambda > 0.0 && mean > 0.0) {
        return Err(Error::domain("λ and a must be positive"));
    }
    let c = lambda * mean;
    let vf = v as f64;
    if c >= vf {
        return Err(Error::NoRoot { load: c / vf });
    }
    let f = |z: f64| root_residual(v, c, z);
    let mut lo = vf * (1.0 + c) / (c * (vf + 1.0));
    let mut hi = (1.0 + c) / c;
    if f(lo) <= 0.0 {
        // z* rounded onto the root itself
        return Ok(lo);
    }
    loop {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if f(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(if f(lo).abs() <= f(hi).abs() { lo } else { hi })
}

/// `z^v (1 + c(1 − z)) − 1`; zero at the characteristic root.
pub fn root_residual(v: u32, c: f64, z: f64) -> f64 {
    libm::pow(z, v as f64) * (1.0 + c * (1.0 - z)) - 1.0
}

/// `Q_i = (1 − 1/z₀) z₀^{−i}`, extended until both the last term and the
/// remaining tail are below `eps` (and at least `min_len` entries exist).
pub fn geometric_q(z0: f64, eps: f64, min_len: usize) -> Vec<f64> {
    let r = 1.0 / z0;
    let mut q = Vec::new();
    let mut term = 1.0 - r;
    let mut tail = r; // Σ_{j > i} Q_j after pushing Q_i
    loop {
        q.push(term);
        if q.len() >= min_len && term < eps && tail < eps {
            break;
        }
        term *= r;
        tail *= r;
    }
    q
}

/// Infinite-waiting-room embedded vector `Q`.
///
/// Exponential postings use the geometric closed form; the other kinds use
/// [`truncated_q`]. The returned vector has at least `w − v + 1` entries.
pub fn infinite_queue_q(params: &SystemParams, eps: f64) -> Result<Vec<f64>> {
    Ok(solve_q(params, eps)?.q)
}

struct QSolution {
    q: Vec<f64>,
    root: Option<f64>,
    level: usize,
}

fn solve_q(params: &SystemParams, eps: f64) -> Result<QSolution> {
    check_eps(eps)?;
    params.require_stable()?;
    let min_len = params.reserved() as usize + 1;
    match params.posting.kind() {
        DistKind::Exponential => {
            let z0 = characteristic_root(params.v, params.lambda, params.posting.mean())?;
            let q = geometric_q(z0, eps, min_len);
            let level = q.len() - 1;
            Ok(QSolution {
                q,
                root: Some(z0),
                level,
            })
        }
        _ => {
            let (q, level) = truncated_q(params, eps)?;
            Ok(QSolution {
                q,
                root: None,
                level,
            })
        }
    }
}

fn check_eps(eps: f64) -> Result<()> {
    if eps > 0.0 && eps < 1.0 {
        Ok(())
    } else {
        Err(Error::domain(alloc::format!(
            "tolerance ε must lie in (0, 1) (got {eps})"
        )))
    }
}

/// `Q` from the level-`N` truncation of the infinite chain, for any posting kind.
///
/// The level doubles until the mass above `N/2` and the change of
/// `Q_0..Q_{w−v}` between successive levels are both below `eps`. Returns the
/// vector cut at `N/2` and the final level `N`.
pub fn truncated_q(params: &SystemParams, eps: f64) -> Result<(Vec<f64>, usize)> {
    check_eps(eps)?;
    params.require_stable()?;
    let keep = params.reserved() as usize + 1;
    let mut level = MIN_TRUNCATION_LEVEL.max((2 * keep).next_power_of_two());
    let mut prev: Option<Vec<f64>> = None;
    while level <= MAX_TRUNCATION_LEVEL {
        let q = stationary_truncated(params, level)?;
        let half = level / 2;
        let tail: f64 = q[half + 1..].iter().sum();
        if let Some(p) = &prev {
            let change = (0..keep).map(|k| (q[k] - p[k]).abs()).fold(0.0, f64::max);
            if change < eps && tail < eps {
                let mut q = q;
                q.truncate(half + 1);
                return Ok((q, level));
            }
        }
        prev = Some(q);
        level *= 2;
    }
    Err(Error::Truncation {
        level: MAX_TRUNCATION_LEVEL,
    })
}

/// Stationary vector of the chain `X' = min((X − v)⁺ + V, N)` on `0..=N`.
///
/// Grassmann–Taksar–Heyman elimination in ascending state order. A row can
/// only move down by `v`, and elimination preserves that, so eliminating state
/// `n` touches just rows `n+1..=n+v`. Rows are materialised from `ψ` on first
/// touch, which keeps memory at `O(vN)` and work at `O(vN²)`.
fn stationary_truncated(params: &SystemParams, level: usize) -> Result<Vec<f64>> {
    let v = params.v as usize;
    let n_states = level + 1;
    let psi = params.posting.psi_row(params.lambda, 2 * level)?;
    let suffix = suffix_sums(&psi);

    let original_row = |j: usize| -> Vec<f64> {
        let d = j.saturating_sub(v);
        let mut r = vec![0.0; n_states];
        for k in d..level {
            r[k] = psi.get(k - d);
        }
        r[level] = suffix[level - d];
        r
    };

    // window[t] holds row n + t
    let mut window: alloc::collections::VecDeque<Vec<f64>> = alloc::collections::VecDeque::new();
    let mut exits = vec![0.0; level];
    let mut inflow: Vec<Vec<f64>> = Vec::with_capacity(level);

    for n in 0..level {
        while window.len() < (v + 1).min(n_states - n) {
            let j = n + window.len();
            window.push_back(original_row(j));
        }
        let row_n = window.pop_front().expect("window holds row n");
        let exit: f64 = row_n[n + 1..].iter().sum();
        exits[n] = exit;
        let mut col = Vec::with_capacity(window.len());
        for row_i in window.iter_mut() {
            let f = row_i[n];
            col.push(f);
            if f != 0.0 {
                let scale = f / exit;
                for j in n + 1..n_states {
                    row_i[j] += scale * row_n[j];
                }
            }
        }
        inflow.push(col);
    }

    let mut x = vec![0.0; n_states];
    x[level] = 1.0;
    for n in (0..level).rev() {
        let acc: f64 = inflow[n]
            .iter()
            .enumerate()
            .map(|(t, p)| x[n + 1 + t] * p)
            .sum();
        x[n] = acc / exits[n];
    }
    let total: f64 = x.iter().sum();
    for xi in &mut x {
        *xi /= total;
    }
    Ok(x)
}

// suffix[k] = Σ_{i ≥ k} ψ(i), summed upward from the far end. The row's own
// tail `1 − Σψ` is a cancellation and only trusted while it is not rounding
// noise; past that it would leak O(ulp) mass into the top state from every row.
fn suffix_sums(psi: &PsiRow) -> Vec<f64> {
    let n = psi.len();
    let mut suffix = vec![0.0; n + 1];
    suffix[n] = if psi.tail > 1e3 * f64::EPSILON {
        psi.tail
    } else {
        0.0
    };
    for k in (0..n).rev() {
        suffix[k] = suffix[k + 1] + psi.probs[k];
    }
    suffix
}

/// Finite-capacity embedded distribution.
#[derive(Clone, Debug, PartialEq)]
pub struct EmbeddedSolution {
    pub model_type: ModelType,
    /// `P_0..P_w`.
    pub p: Vec<f64>,
    /// `κ = 1 / Σ_{i ≤ w−v} Q_i`.
    pub norm_constant: f64,
    /// Characteristic root, exponential postings only.
    pub root: Option<f64>,
    /// Last index of the `Q` vector used (geometric) or the truncation level `N`.
    pub truncation_level: usize,
}

impl EmbeddedSolution {
    /// Embedded law of the contractor pool just before postings: `P¹_k = P_{w−k}`.
    pub fn flipped(&self) -> Vec<f64> {
        self.p.iter().rev().copied().collect()
    }
}

/// Truncate-and-renormalise `Q` into the finite-capacity vector `P`.
pub fn embedded_p(params: &SystemParams, eps: f64) -> Result<EmbeddedSolution> {
    let sol = solve_q(params, eps)?;
    Ok(truncate_renormalize(params, &sol.q, sol.root, sol.level))
}

/// Applies the truncation rule to an already computed `Q`.
pub fn truncate_renormalize(
    params: &SystemParams,
    q: &[f64],
    root: Option<f64>,
    truncation_level: usize,
) -> EmbeddedSolution {
    let w = params.w as usize;
    let s = params.reserved() as usize;
    let head: f64 = q[..=s].iter().sum();
    let kappa = 1.0 / head;
    let mut p = vec![0.0; w + 1];
    for k in 0..=s {
        p[k] = kappa * q[k];
    }
    EmbeddedSolution {
        model_type: params.model_type(),
        p,
        norm_constant: kappa,
        root,
        truncation_level,
    }
}

/// Stationary vector of [`build_tpm`] restricted to its closed class `0..=w−v`
/// (padded with zeros to length `w + 1`). Diagnostic only: it is not the `P` of
/// [`embedded_p`], and the gap between the two is reported, not assumed zero.
pub fn finite_tpm_stationary(params: &SystemParams) -> Result<Vec<f64>> {
    let m = build_tpm(params)?;
    let s = params.reserved() as usize;
    let n = s + 1;
    let mut a: Vec<Vec<f64>> = (0..n).map(|i| m.row(i)[..n].to_vec()).collect();
    let mut exits = vec![0.0; n];
    // GTH, eliminating from the top state down
    for k in (1..n).rev() {
        let exit: f64 = a[k][..k].iter().sum();
        exits[k] = exit;
        for i in 0..k {
            let f = a[i][k];
            if f != 0.0 {
                for j in 0..k {
                    let add = f * a[k][j] / exit;
                    a[i][j] += add;
                }
            }
        }
    }
    let mut x = vec![0.0; params.w as usize + 1];
    x[0] = 1.0;
    for k in 1..n {
        let acc: f64 = (0..k).map(|i| x[i] * a[i][k]).sum();
        x[k] = acc / exits[k];
    }
    let total: f64 = x.iter().sum();
    for xi in &mut x {
        *xi /= total;
    }
    Ok(x)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn exp_params(v: u32, w: u32, load_total: f64) -> SystemParams {
        SystemParams::new(
            v,
            w,
            load_total,
            PostingDistribution::exponential(1.0).unwrap(),
        )
        .unwrap()
    }

    #[test]
    fn model_type_examples() {
        assert_eq!(exp_params(3, 10, 0.5).model_type(), ModelType::Type1);
        assert_eq!(exp_params(33, 35, 0.5).model_type(), ModelType::Type2);
        assert_eq!(exp_params(5, 10, 0.5).model_type(), ModelType::Type1);
    }

    #[test]
    fn params_validation_names_the_constraint() {
        let d = PostingDistribution::exponential(1.0).unwrap();
        let e = SystemParams::new(6, 5, 1.0, d).unwrap_err();
        assert!(alloc::format!("{e}").contains("v = 6 exceeds capacity w = 5"));
        assert!(SystemParams::new(0, 5, 1.0, d).is_err());
        assert!(SystemParams::new(1, 5, 0.0, d).is_err());
    }

    #[test]
    fn root_examples() {
        assert!((characteristic_root(1, 0.5, 1.0).unwrap() - 2.0).abs() < 1e-12);
        assert!((characteristic_root(1, 0.8, 1.0).unwrap() - 1.25).abs() < 1e-12);
        assert!(matches!(
            characteristic_root(1, 1.0, 1.0),
            Err(Error::NoRoot { .. })
        ));
    }

    #[test]
    fn root_residual_small_on_grid() {
        for v in [1u32, 2, 5, 10] {
            for rho in [0.1, 0.5, 0.9] {
                let c = rho * v as f64;
                let z = characteristic_root(v, c, 1.0).unwrap();
                assert!(z > 1.0);
                let direct =
                    (1.0 + c) * libm::pow(z, v as f64) - c * libm::pow(z, v as f64 + 1.0) - 1.0;
                assert!(direct.abs() < 1e-12, "v={v} ρ={rho}: {direct}");
            }
        }
    }

    #[test]
    fn mm1_reduction_of_q() {
        let q = infinite_queue_q(&exp_params(1, 5, 0.5), 1e-14).unwrap();
        for (i, qi) in q.iter().enumerate() {
            assert!((qi - libm::pow(0.5, i as f64 + 1.0)).abs() < 1e-15);
        }
        let q = infinite_queue_q(&exp_params(1, 5, 0.9), 1e-12).unwrap();
        assert!((q[0] - 0.1).abs() < 1e-12);
        assert!((q.iter().sum::<f64>() - 1.0).abs() < 1e-11);
    }

    #[test]
    fn unstable_load_is_rejected() {
        let p = exp_params(2, 5, 2.5);
        assert!(matches!(embedded_p(&p, 1e-12), Err(Error::NoRoot { .. })));
        let d =
            SystemParams::new(2, 5, 2.0, PostingDistribution::deterministic(1.0).unwrap()).unwrap();
        assert!(matches!(truncated_q(&d, 1e-12), Err(Error::NoRoot { .. })));
    }

    #[test]
    fn p_example_geometric_partial_sum() {
        let sol = embedded_p(&exp_params(1, 5, 0.5), 1e-14).unwrap();
        for k in 0..5 {
            let want = libm::pow(0.5, k as f64 + 1.0) / 0.96875;
            assert!((sol.p[k] - want).abs() < 1e-14);
        }
        assert_eq!(sol.p[5], 0.0);
        assert!((sol.norm_constant - 1.032_258_064_516_129).abs() < 1e-12);
        assert!((sol.root.unwrap() - 2.0).abs() < 1e-12);
    }

    #[test]
    fn v_equals_w_collapses_to_single_state() {
        let sol = embedded_p(&exp_params(4, 4, 2.0), 1e-12).unwrap();
        assert_eq!(sol.p, vec![1.0, 0.0, 0.0, 0.0, 0.0]);
    }

    #[test]
    fn tpm_type2_rows_share_the_kernel() {
        let p = exp_params(2, 5, 0.7);
        let m = build_tpm(&p).unwrap();
        let row = p.posting().psi_row(0.7, 3).unwrap();
        for j in 0..=2 {
            for k in 0..3 {
                assert_eq!(m.get(j, k), row.probs[k]);
            }
            let tail = 1.0 - row.probs[0] - row.probs[1] - row.probs[2];
            assert!((m.get(j, 3) - tail).abs() < 1e-15);
            assert_eq!(m.get(j, 4), 0.0);
            assert_eq!(m.get(j, 5), 0.0);
        }
        // unreachable rows are self-loops
        assert_eq!(m.get(4, 4), 1.0);
        assert_eq!(m.get(5, 5), 1.0);
    }

    #[test]
    fn tpm_type1_band() {
        let p = exp_params(2, 6, 0.7);
        let m = build_tpm(&p).unwrap();
        let psi0 = p.posting().psi(0.7, 0).unwrap();
        assert_eq!(m.get(3, 1), psi0);
        assert_eq!(m.get(3, 0), 0.0);
        assert_eq!(m.get(4, 2), psi0);
        for s in m.row_sums() {
            assert!((s - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn truncated_route_matches_geometric_for_mm1() {
        let p = exp_params(1, 8, 0.5);
        let (q, level) = truncated_q(&p, 1e-12).unwrap();
        assert!(level >= 64);
        for (i, qi) in q.iter().take(30).enumerate() {
            assert!((qi - libm::pow(0.5, i as f64 + 1.0)).abs() < 1e-12, "{i}");
        }
    }

    #[test]
    fn truncated_route_deterministic_sums_to_one() {
        let p = SystemParams::new(3, 12, 2.0, PostingDistribution::deterministic(1.0).unwrap())
            .unwrap();
        let sol = embedded_p(&p, 1e-12).unwrap();
        assert!(sol.root.is_none());
        assert!((sol.p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert!(sol.p[10..].iter().all(|&x| x == 0.0));
        assert!(sol.norm_constant >= 1.0);
    }

    #[test]
    fn finite_tpm_stationary_is_invariant() {
        let p = exp_params(2, 7, 1.1);
        let m = build_tpm(&p).unwrap();
        let x = finite_tpm_stationary(&p).unwrap();
        for k in 0..m.size() {
            let y: f64 = (0..m.size()).map(|j| x[j] * m.get(j, k)).sum();
            assert!((y - x[k]).abs() < 1e-13);
        }
    }

    #[test]
    fn bad_tolerance_is_rejected() {
        assert!(matches!(
            embedded_p(&exp_params(1, 3, 0.5), 0.0),
            Err(Error::Domain(_))
        ));
    }
}
