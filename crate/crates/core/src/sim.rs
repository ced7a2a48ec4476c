//! Seeded discrete-event simulation of the contractor pool, and the
//! differential comparison against the analytic pipeline.
//!
//! The pool level `Z ∈ {0..w}` changes through two autonomous event streams:
//! consumption events at exponential(λ) gaps take one contractor (or lose the
//! customer when the pool is empty), and posting epochs with gaps drawn from
//! `A` add a batch of `v` under the configured [`AdmissionPolicy`]. Neither
//! stream depends on the state, so runs that share a seed see the same event
//! times whatever the policy.
//!
//! The random source is `ChaCha8Rng` from `rand_chacha` 0.9, seeded with
//! `seed_from_u64`; its output stream is fixed by that algorithm, so results
//! are reproducible across builds.

use alloc::vec;
use alloc::vec::Vec;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp};

use crate::cost::{CostParams, Evaluation, ObjectiveBreakdown};
use crate::embedded::SystemParams;
use crate::error::{Error, Result};
use crate::total_variation;

/// What happens to a posted batch that does not fit in the pool.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Default)]
pub enum AdmissionPolicy {
    /// Admit what fits: `Z ← min(Z + v, w)`.
    #[default]
    Clip,
    /// Admit the whole batch only if it fits (`Z ≤ w − v`), otherwise none of it.
    RejectIfNoFullRoom,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SimConfig {
    pub seed: u64,
    /// Horizon in posting epochs.
    pub num_postings: u64,
    /// Leading fraction of postings excluded from every statistic.
    pub warmup_fraction: f64,
    pub policy: AdmissionPolicy,
}

impl SimConfig {
    pub fn new(seed: u64, num_postings: u64) -> Self {
        Self {
            seed,
            num_postings,
            warmup_fraction: 0.1,
            policy: AdmissionPolicy::Clip,
        }
    }

    pub fn with_policy(mut self, policy: AdmissionPolicy) -> Self {
        self.policy = policy;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.num_postings == 0 {
            return Err(Error::invalid("simulation needs at least one posting"));
        }
        if !(self.warmup_fraction >= 0.0 && self.warmup_fraction < 1.0) {
            return Err(Error::invalid(alloc::format!(
                "warm-up fraction must lie in [0, 1) (got {})",
                self.warmup_fraction
            )));
        }
        Ok(())
    }

    pub fn warmup_postings(&self) -> u64 {
        libm::floor(self.warmup_fraction * self.num_postings as f64) as u64
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SimResult {
    /// Fraction of post-warm-up time with `Z = k`.
    pub time_avg_dist: Vec<f64>,
    /// Empirical law of `Z` just before post-warm-up postings.
    pub embedded_dist: Vec<f64>,
    /// Customers arriving to an empty pool, per unit time.
    pub lost_customer_rate: f64,
    /// All customer arrivals per unit time; estimates `λ` and bounds the lost rate.
    pub customer_rate: f64,
    pub avg_cost_rate: f64,
    pub holding_rate: f64,
    pub reserve_rate: f64,
    pub posting_rate: f64,
    /// Length of the observation window, from the last warm-up posting to the final one.
    pub total_sim_time: f64,
    /// Sum of the per-state sojourn times.
    pub sojourn_total: f64,
    pub postings_observed: u64,
    pub seed: u64,
    pub policy: AdmissionPolicy,
}

impl SimResult {
    pub fn mean_pool(&self) -> f64 {
        self.time_avg_dist
            .iter()
            .enumerate()
            .map(|(k, p)| k as f64 * p)
            .sum()
    }
}

/// Runs one simulation. The pool starts empty at time 0, which is itself not a
/// posting epoch; postings 1..=N follow.
pub fn run_sim(params: &SystemParams, cost: &CostParams, config: &SimConfig) -> Result<SimResult> {
    config.validate()?;
    cost.validate()?;
    let v = params.v() as usize;
    let w = params.w() as usize;
    let lambda = params.lambda();
    let posting = *params.posting();
    let warm = config.warmup_postings();

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let consume = Exp::new(lambda).map_err(|_| Error::invalid("λ must be positive"))?;

    let mut sojourn = vec![0.0f64; w + 1];
    let mut embedded = vec![0u64; w + 1];
    let mut lost = 0u64;
    let mut arrivals = 0u64;
    let mut z = 0usize;
    let mut t = 0.0f64;
    let mut window_start = 0.0f64;
    let mut observing = warm == 0;
    let mut postings = 0u64;

    let mut next_consume = consume.sample(&mut rng);
    let mut next_post = posting.sample(&mut rng);

    while postings < config.num_postings {
        if next_consume < next_post {
            if observing {
                sojourn[z] += next_consume - t;
            }
            t = next_consume;
            if observing {
                arrivals += 1;
            }
            if z > 0 {
                z -= 1;
            } else if observing {
                lost += 1;
            }
            next_consume = t + consume.sample(&mut rng);
        } else {
            if observing {
                sojourn[z] += next_post - t;
            }
            t = next_post;
            postings += 1;
            if observing {
                embedded[z] += 1;
            }
            z = match config.policy {
                AdmissionPolicy::Clip => (z + v).min(w),
                AdmissionPolicy::RejectIfNoFullRoom => {
                    if z + v <= w {
                        z + v
                    } else {
                        z
                    }
                }
            };
            if !observing && postings == warm {
                observing = true;
                window_start = t;
            }
            next_post = t + posting.sample(&mut rng);
        }
    }

    let total_sim_time = t - window_start;
    let sojourn_total: f64 = sojourn.iter().sum();
    let observed = config.num_postings - warm;
    let time_avg_dist: Vec<f64> = sojourn.iter().map(|s| s / sojourn_total).collect();
    let embedded_dist: Vec<f64> = embedded
        .iter()
        .map(|&c| c as f64 / observed as f64)
        .collect();

    let mut holding_integral = 0.0;
    let mut reserve_integral = 0.0;
    for (k, s) in sojourn.iter().enumerate() {
        holding_integral += cost.h(k)? * s;
        if k > v {
            reserve_integral += cost.g(k - v)? * s;
        }
    }
    let holding_rate = holding_integral / total_sim_time;
    let reserve_rate = reserve_integral / total_sim_time;
    let posting_rate = cost.posting * (lambda / v as f64) * observed as f64 / total_sim_time;

    Ok(SimResult {
        time_avg_dist,
        embedded_dist,
        lost_customer_rate: lost as f64 / total_sim_time,
        customer_rate: arrivals as f64 / total_sim_time,
        avg_cost_rate: holding_rate + reserve_rate + posting_rate,
        holding_rate,
        reserve_rate,
        posting_rate,
        total_sim_time,
        sojourn_total,
        postings_observed: observed,
        seed: config.seed,
        policy: config.policy,
    })
}

/// Verdict thresholds for [`compare`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Tolerances {
    /// Bound on the total-variation distance between `π¹` and the time average.
    pub tv: f64,
    /// Bound on the relative cost-rate error.
    pub cost_rel: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            tv: 0.01,
            cost_rel: 0.05,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ComparisonReport {
    pub policy: AdmissionPolicy,
    /// TV distance between analytic `π¹` and the simulated time average.
    pub tv_time_avg: f64,
    /// Largest per-state gap between the same two vectors.
    pub max_abs_delta: f64,
    /// TV distance between the flipped `P` and the simulated pre-posting law.
    pub tv_embedded: f64,
    /// `|sim − analytic| / |analytic|` on the total cost rate.
    pub cost_rel_error: f64,
    pub analytic: ObjectiveBreakdown,
    pub sim_holding: f64,
    pub sim_reserve: f64,
    pub sim_posting: f64,
    pub sim_total: f64,
    pub analytic_valid: bool,
    pub tolerances: Tolerances,
    pub passed: bool,
}

/// Measures how far the analytic solution and a simulation of the same
/// instance disagree.
pub fn compare(
    analytic: &Evaluation,
    sim: &SimResult,
    tol: Tolerances,
) -> Result<ComparisonReport> {
    let pi1 = &analytic.limiting.pi1;
    let flipped = analytic.embedded.flipped();
    if pi1.len() != sim.time_avg_dist.len() || flipped.len() != sim.embedded_dist.len() {
        return Err(Error::domain(alloc::format!(
            "dimension mismatch: analytic has {} states, simulation {}",
            pi1.len(),
            sim.time_avg_dist.len()
        )));
    }
    let tv_time_avg = total_variation(pi1, &sim.time_avg_dist);
    let max_abs_delta = pi1
        .iter()
        .zip(&sim.time_avg_dist)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    let tv_embedded = total_variation(&flipped, &sim.embedded_dist);
    let a = analytic.objective;
    let cost_rel_error = if a.total == 0.0 {
        sim.avg_cost_rate.abs()
    } else {
        (sim.avg_cost_rate - a.total).abs() / a.total.abs()
    };
    Ok(ComparisonReport {
        policy: sim.policy,
        tv_time_avg,
        max_abs_delta,
        tv_embedded,
        cost_rel_error,
        analytic: a,
        sim_holding: sim.holding_rate,
        sim_reserve: sim.reserve_rate,
        sim_posting: sim.posting_rate,
        sim_total: sim.avg_cost_rate,
        analytic_valid: analytic.limiting.valid,
        tolerances: tol,
        passed: tv_time_avg < tol.tv && cost_rel_error < tol.cost_rel,
    })
}
