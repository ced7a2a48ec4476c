//! Analytic solution of a bulk-input `G^v/M/1/w` queue describing the
//! contractor pool of a sharing-economy platform.
//!
//! Contractors are vetted in batches of `v` and posted at renewal epochs with
//! inter-posting distribution `A(x)` (mean `a`); customers consume pool capacity
//! at exponential rate `λ`; the pool holds at most `w` contractors. The pool is
//! analysed through its flipped twin, the `M/G^v/1/w` customer queue, whose
//! state `k` corresponds to pool level `w − k`.
//!
//! The pipeline is:
//!
//! 1. [`dist`]: posting distributions, their transforms and the Poisson-mixture
//!    kernel `ψ(k)`.
//! 2. [`embedded`]: the embedded chain at posting epochs, the infinite-queue
//!    vector `Q` and the truncated, renormalised vector `P`.
//! 3. [`limiting`]: the continuous-time distributions `π` (customers) and
//!    `π¹` (contractors).
//! 4. [`cost`]: the long-run cost rate, batch-size optimization and sweeps.
//! 5. [`sim`]: a seeded discrete-event simulator of the pool used as an
//!    independent check on every analytic output.
#![no_std]
#![deny(missing_debug_implementations)]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod cost;
pub mod dist;
pub mod embedded;
mod error;
pub mod limiting;
pub mod quadrature;
pub mod sim;

pub use cost::{
    capability, evaluate, objective, optimize_v, sweep, CostParams, CurvePoint, Evaluation,
    ObjectiveBreakdown, OptimizationResult, OptimizeOptions, SweepCell, SweepOutcome,
};
pub use dist::{DistKind, PostingDistribution, PsiRow};
pub use embedded::{
    build_tpm, characteristic_root, embedded_p, infinite_queue_q, EmbeddedSolution, ModelType,
    SystemParams, Tpm,
};
pub use error::{Error, Result};
pub use limiting::{bhat, g_vector, limiting_pi, LimitingDistribution};
pub use sim::{
    compare, run_sim, AdmissionPolicy, ComparisonReport, SimConfig, SimResult, Tolerances,
};

/// Default accuracy target for the embedded solves.
pub const DEFAULT_EPSILON: f64 = 1e-12;

/// Total-variation distance: half the L1 distance between two vectors of equal length.
pub fn total_variation(p: &[f64], q: &[f64]) -> f64 {
    debug_assert_eq!(p.len(), q.len());
    0.5 * p.iter().zip(q).map(|(a, b)| (a - b).abs()).sum::<f64>()
}
