//! Long-run operating cost rate and batch-size optimization.
//!
//! ```text
//! φ = Σ_k h(k) π¹_k + Σ_{k>v} g(k − v) π¹_k + c_D (λ/v)(1/a)
//! ```
//!
//! with linear defaults `h(n) = c_H n` and `g(n) = c_R n`. The posting term is
//! the long-run rate form: postings occur at rate `1/a`.

use alloc::vec::Vec;
use core::ops::RangeInclusive;

use crate::dist::PostingDistribution;
use crate::embedded::{embedded_p, EmbeddedSolution, SystemParams};
use crate::error::{Error, Result};
use crate::limiting::{limiting_pi, LimitingDistribution};

/// Cost coefficients, optionally with per-state tables overriding the linear
/// holding and reserve costs.
#[derive(Clone, Debug, PartialEq)]
pub struct CostParams {
    /// `c_H`, per contractor in the pool per unit time.
    pub holding: f64,
    /// `c_R`, per company-reserved contractor per unit time.
    pub reserve: f64,
    /// `c_D`, posting cost coefficient.
    pub posting: f64,
    /// `h(k)` for `k = 0..=w`.
    pub holding_table: Option<Vec<f64>>,
    /// `g(n)` for reserved counts `n = 0..=w − v`.
    pub reserve_table: Option<Vec<f64>>,
}

impl CostParams {
    pub fn linear(holding: f64, reserve: f64, posting: f64) -> Result<Self> {
        let c = Self {
            holding,
            reserve,
            posting,
            holding_table: None,
            reserve_table: None,
        };
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, x) in [
            ("c_H", self.holding),
            ("c_R", self.reserve),
            ("c_D", self.posting),
        ] {
            if !(x.is_finite() && x >= 0.0) {
                return Err(Error::invalid(alloc::format!(
                    "cost coefficient {name} must be non-negative (got {x})"
                )));
            }
        }
        Ok(())
    }

    pub(crate) fn h(&self, k: usize) -> Result<f64> {
        match &self.holding_table {
            None => Ok(self.holding * k as f64),
            Some(t) => t.get(k).copied().ok_or_else(|| {
                Error::domain(alloc::format!("holding table has no entry for state {k}"))
            }),
        }
    }

    pub(crate) fn g(&self, n: usize) -> Result<f64> {
        match &self.reserve_table {
            None => Ok(self.reserve * n as f64),
            Some(t) => t.get(n).copied().ok_or_else(|| {
                Error::domain(alloc::format!(
                    "reserve table has no entry for {n} reserved"
                ))
            }),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ObjectiveBreakdown {
    pub holding: f64,
    pub reserve: f64,
    pub posting: f64,
    /// `holding + reserve + posting`.
    pub total: f64,
    /// `E[Z¹∞] = Σ k π¹_k`.
    pub expected_pool: f64,
    pub valid: bool,
    /// `ϱ = [λa/w − 1]⁺`.
    pub capability: f64,
}

/// Capability factor `ϱ = max(λa/w − 1, 0)`.
pub fn capability(lambda: f64, mean: f64, w: u32) -> f64 {
    (lambda * mean / w as f64 - 1.0).max(0.0)
}

/// Cost rate for a solved limiting distribution.
pub fn objective(
    params: &SystemParams,
    cost: &CostParams,
    dist: &LimitingDistribution,
) -> Result<ObjectiveBreakdown> {
    let v = params.v() as usize;
    let a = params.posting().mean();
    let lambda = params.lambda();
    let mut holding = 0.0;
    let mut expected_pool = 0.0;
    let mut reserve = 0.0;
    for (k, &p) in dist.pi1.iter().enumerate() {
        holding += cost.h(k)? * p;
        expected_pool += k as f64 * p;
        if k > v {
            reserve += cost.g(k - v)? * p;
        }
    }
    let posting = cost.posting * (lambda / params.v() as f64) * (1.0 / a);
    Ok(ObjectiveBreakdown {
        holding,
        reserve,
        posting,
        total: holding + reserve + posting,
        expected_pool,
        valid: dist.valid,
        capability: capability(lambda, a, params.w()),
    })
}

/// Every stage of the analytic pipeline for one instance.
#[derive(Clone, Debug, PartialEq)]
pub struct Evaluation {
    pub params: SystemParams,
    pub embedded: EmbeddedSolution,
    pub limiting: LimitingDistribution,
    pub objective: ObjectiveBreakdown,
}

/// Runs `embedded_p → limiting_pi → objective`.
pub fn evaluate(params: &SystemParams, cost: &CostParams, eps: f64) -> Result<Evaluation> {
    let embedded = embedded_p(params, eps)?;
    let limiting = limiting_pi(params, &embedded)?;
    let objective = objective(params, cost, &limiting)?;
    Ok(Evaluation {
        params: *params,
        embedded,
        limiting,
        objective,
    })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OptimizeOptions {
    pub eps: f64,
    /// Treat points with `ϱ > 0` as ineligible.
    pub enforce_capability: bool,
}

impl Default for OptimizeOptions {
    fn default() -> Self {
        Self {
            eps: crate::DEFAULT_EPSILON,
            enforce_capability: false,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct CurvePoint {
    pub v: u32,
    /// The breakdown, or why this `v` could not be evaluated (e.g. `λa/v ≥ 1`).
    pub result: core::result::Result<ObjectiveBreakdown, Error>,
}

impl CurvePoint {
    /// Whether this point may be the optimum.
    pub fn eligible(&self, enforce_capability: bool) -> bool {
        match &self.result {
            Ok(b) => b.valid && b.total.is_finite() && !(enforce_capability && b.capability > 0.0),
            Err(_) => false,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct OptimizationResult {
    pub v0: u32,
    pub phi_min: f64,
    /// One point per `v = 1..=v_max`, eligible or not.
    pub curve: Vec<CurvePoint>,
    /// Some point failed to evaluate or carried a negative probability.
    pub any_invalid: bool,
}

impl OptimizationResult {
    pub fn at(&self, v: u32) -> Option<&CurvePoint> {
        self.curve.iter().find(|p| p.v == v)
    }
}

/// Exhaustive search over `v = 1..=v_max` at fixed `w`, `λ` and posting law.
/// Ties go to the smallest `v`.
pub fn optimize_v(
    w: u32,
    lambda: f64,
    posting: PostingDistribution,
    cost: &CostParams,
    v_max: u32,
    opts: OptimizeOptions,
) -> Result<OptimizationResult> {
    cost.validate()?;
    if v_max == 0 || v_max > w {
        return Err(Error::invalid(alloc::format!(
            "v_max = {v_max} must satisfy 1 ≤ v_max ≤ w = {w}"
        )));
    }
    // validates λ and w once for the whole curve
    SystemParams::new(1, w, lambda, posting)?;

    let mut curve = Vec::with_capacity(v_max as usize);
    for v in 1..=v_max {
        let params = SystemParams::new(v, w, lambda, posting)?;
        let result = evaluate(&params, cost, opts.eps).map(|e| e.objective);
        curve.push(CurvePoint { v, result });
    }
    let any_invalid = curve.iter().any(|p| !p.eligible(false));
    let mut best: Option<(u32, f64)> = None;
    for p in curve.iter().filter(|p| p.eligible(opts.enforce_capability)) {
        let total = p.result.as_ref().map(|b| b.total).unwrap_or(f64::INFINITY);
        if best.is_none_or(|(_, t)| total < t) {
            best = Some((p.v, total));
        }
    }
    let (v0, phi_min) = best.ok_or(Error::NoValidPoint)?;
    Ok(OptimizationResult {
        v0,
        phi_min,
        curve,
        any_invalid,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub enum SweepOutcome {
    /// `v > w`; not evaluated.
    Infeasible,
    Failed(Error),
    Evaluated(ObjectiveBreakdown),
    /// Evaluated but `ϱ > 0` while the capability constraint is enforced.
    CapabilityRejected(ObjectiveBreakdown),
}

impl SweepOutcome {
    pub fn breakdown(&self) -> Option<&ObjectiveBreakdown> {
        match self {
            SweepOutcome::Evaluated(b) | SweepOutcome::CapabilityRejected(b) => Some(b),
            _ => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepCell {
    pub v: u32,
    pub w: u32,
    pub outcome: SweepOutcome,
}

/// Cost surface over `(v, w)`, row-major by `w` then `v`.
pub fn sweep(
    lambda: f64,
    posting: PostingDistribution,
    cost: &CostParams,
    v_range: RangeInclusive<u32>,
    w_range: RangeInclusive<u32>,
    opts: OptimizeOptions,
) -> Result<Vec<SweepCell>> {
    cost.validate()?;
    if v_range.is_empty() || w_range.is_empty() {
        return Err(Error::invalid("sweep ranges must be non-empty"));
    }
    if *v_range.start() == 0 || *w_range.start() == 0 {
        return Err(Error::invalid("sweep ranges must start at 1 or above"));
    }
    let mut cells = Vec::new();
    for w in w_range {
        for v in v_range.clone() {
            let outcome = if v > w {
                SweepOutcome::Infeasible
            } else {
                let params = SystemParams::new(v, w, lambda, posting)?;
                match evaluate(&params, cost, opts.eps) {
                    Err(e) => SweepOutcome::Failed(e),
                    Ok(e) if opts.enforce_capability && e.objective.capability > 0.0 => {
                        SweepOutcome::CapabilityRejected(e.objective)
                    }
                    Ok(e) => SweepOutcome::Evaluated(e.objective),
                }
            };
            cells.push(SweepCell { v, w, outcome });
        }
    }
    Ok(cells)
}
