//! Posting-interval distributions and the Poisson-mixture kernel.
//!
//! The kernel `ψ(k)` is the probability that exactly `k` exponential(λ)
//! consumption events fall inside one posting interval:
//!
//! ```text
//! ψ(k) = ∫ e^{−λx} (λx)^k / k! dA(x)
//! ```
//!
//! Note the `x^k` factor: without it the kernel would not sum to one.
//!
//! Every kind has a closed form (geometric, Poisson, negative binomial). The
//! quadrature routes ([`PostingDistribution::psi_quadrature`],
//! [`PostingDistribution::lst_quadrature`]) integrate directly against `A` and
//! serve as the fallback and as an independent cross-check.

use alloc::vec::Vec;
use rand::Rng;
use rand_distr::{Distribution, Exp, Gamma};

use crate::error::{Error, Result};
use crate::quadrature;

/// Absolute tolerance of the quadrature routes.
pub const QUADRATURE_TOL: f64 = 1e-10;
/// Integration is cut off where the survival function of `A` drops below this.
pub const QUADRATURE_TAIL: f64 = 1e-13;

/// Family of a posting distribution.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum DistKind {
    Exponential,
    Deterministic,
    Erlang,
}

/// Inter-posting time distribution `A(x)` with mean `a`.
///
/// Erlang distributions are parameterised by shape `m` and the mean, so the
/// rate is `m/a`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PostingDistribution {
    kind: DistKind,
    mean: f64,
    shape: u32,
}

fn check_mean(mean: f64) -> Result<()> {
    if mean.is_finite() && mean > 0.0 {
        Ok(())
    } else {
        Err(Error::invalid(alloc::format!(
            "posting mean must be a positive finite number (got {mean})"
        )))
    }
}

fn check_lambda(lambda: f64) -> Result<()> {
    if lambda.is_finite() && lambda > 0.0 {
        Ok(())
    } else {
        Err(Error::domain(alloc::format!(
            "consumption rate λ must be positive (got {lambda})"
        )))
    }
}

impl PostingDistribution {
    pub fn exponential(mean: f64) -> Result<Self> {
        check_mean(mean)?;
        Ok(Self {
            kind: DistKind::Exponential,
            mean,
            shape: 1,
        })
    }

    pub fn deterministic(mean: f64) -> Result<Self> {
        check_mean(mean)?;
        Ok(Self {
            kind: DistKind::Deterministic,
            mean,
            shape: 1,
        })
    }

    pub fn erlang(shape: u32, mean: f64) -> Result<Self> {
        check_mean(mean)?;
        if shape == 0 {
            return Err(Error::invalid("Erlang shape must be at least 1"));
        }
        Ok(Self {
            kind: DistKind::Erlang,
            mean,
            shape,
        })
    }

    pub fn kind(&self) -> DistKind {
        self.kind
    }

    /// Mean posting interval `a`.
    pub fn mean(&self) -> f64 {
        self.mean
    }

    /// Erlang shape `m`; 1 for the other kinds.
    pub fn shape(&self) -> u32 {
        self.shape
    }

    pub fn variance(&self) -> f64 {
        match self.kind {
            DistKind::Exponential => self.mean * self.mean,
            DistKind::Deterministic => 0.0,
            DistKind::Erlang => self.mean * self.mean / self.shape as f64,
        }
    }

    /// `A(x) = P{D ≤ x}`.
    pub fn cdf(&self, x: f64) -> f64 {
        if x < 0.0 {
            return 0.0;
        }
        match self.kind {
            DistKind::Deterministic => {
                if x >= self.mean {
                    1.0
                } else {
                    0.0
                }
            }
            _ => 1.0 - self.survival(x),
        }
    }

    fn survival(&self, x: f64) -> f64 {
        if x <= 0.0 {
            return 1.0;
        }
        match self.kind {
            DistKind::Exponential => libm::exp(-x / self.mean),
            DistKind::Deterministic => {
                if x >= self.mean {
                    0.0
                } else {
                    1.0
                }
            }
            DistKind::Erlang => {
                let mx = self.shape as f64 * x / self.mean;
                let mut term = 1.0;
                let mut sum = 1.0;
                for i in 1..self.shape {
                    term *= mx / i as f64;
                    sum += term;
                }
                (libm::exp(-mx) * sum).min(1.0)
            }
        }
    }

    /// Lebesgue density of `A`; `None` for the point mass.
    pub fn density(&self, x: f64) -> Option<f64> {
        match self.kind {
            DistKind::Deterministic => None,
            _ if x < 0.0 => Some(0.0),
            DistKind::Exponential => Some(libm::exp(-x / self.mean) / self.mean),
            DistKind::Erlang => {
                let m = self.shape as f64;
                let rate = m / self.mean;
                if x == 0.0 {
                    return Some(if self.shape == 1 { rate } else { 0.0 });
                }
                let ln =
                    m * libm::log(rate) + (m - 1.0) * libm::log(x) - rate * x - libm::lgamma(m);
                Some(libm::exp(ln))
            }
        }
    }

    /// Laplace–Stieltjes transform `α(θ) = E[e^{−θD}]`.
    pub fn lst(&self, theta: f64) -> Result<f64> {
        check_theta(theta)?;
        let a = self.mean;
        Ok(match self.kind {
            DistKind::Exponential => 1.0 / (1.0 + a * theta),
            DistKind::Deterministic => libm::exp(-a * theta),
            DistKind::Erlang => {
                let m = self.shape as f64;
                libm::pow(m / (m + a * theta), m)
            }
        })
    }

    /// `α(θ)` by integrating `e^{−θx}` against `A`.
    pub fn lst_quadrature(&self, theta: f64) -> Result<f64> {
        check_theta(theta)?;
        Ok(self.integrate_against(|x| libm::exp(-theta * x)))
    }

    /// Kernel `ψ(k)` from the closed form of the distribution kind.
    pub fn psi(&self, lambda: f64, k: u32) -> Result<f64> {
        check_lambda(lambda)?;
        Ok(libm::exp(self.ln_psi(lambda, k)))
    }

    fn ln_psi(&self, lambda: f64, k: u32) -> f64 {
        let c = lambda * self.mean;
        let kf = k as f64;
        match self.kind {
            DistKind::Exponential => {
                // (1/(1+c)) (c/(1+c))^k
                -libm::log1p(c) + kf * (libm::log(c) - libm::log1p(c))
            }
            DistKind::Deterministic => -c + kf * libm::log(c) - libm::lgamma(kf + 1.0),
            DistKind::Erlang => {
                let m = self.shape as f64;
                let ln_p = libm::log(m) - libm::log(m + c);
                let ln_q = libm::log(c) - libm::log(m + c);
                libm::lgamma(kf + m) - libm::lgamma(kf + 1.0) - libm::lgamma(m)
                    + m * ln_p
                    + kf * ln_q
            }
        }
    }

    /// Kernel `ψ(k)` by integrating the Poisson pmf against `A`.
    pub fn psi_quadrature(&self, lambda: f64, k: u32) -> Result<f64> {
        check_lambda(lambda)?;
        let kf = k as f64;
        let ln_kfact = libm::lgamma(kf + 1.0);
        Ok(self.integrate_against(|x| {
            if x <= 0.0 {
                return if k == 0 { 1.0 } else { 0.0 };
            }
            let lx = lambda * x;
            libm::exp(-lx + kf * libm::log(lx) - ln_kfact)
        }))
    }

    /// `∫ g dA`. Continuous kinds integrate `g·a(x)` up to the point where the
    /// survival function falls below [`QUADRATURE_TAIL`]; the point mass is a
    /// single evaluation.
    pub fn integrate_against<G: Fn(f64) -> f64>(&self, g: G) -> f64 {
        match self.kind {
            DistKind::Deterministic => g(self.mean),
            _ => {
                let upper = self.tail_cutoff();
                let integrand = |x: f64| g(x) * self.density(x).unwrap_or(0.0);
                // Split at the mean so the bulk and the tail are refined separately.
                let left = quadrature::integrate(integrand, 0.0, self.mean, QUADRATURE_TOL / 2.0);
                let right =
                    quadrature::integrate(integrand, self.mean, upper, QUADRATURE_TOL / 2.0);
                left.value + right.value
            }
        }
    }

    fn tail_cutoff(&self) -> f64 {
        let mut x = self.mean;
        while self.survival(x) >= QUADRATURE_TAIL {
            x *= 2.0;
        }
        x
    }

    /// `ψ(0..=kmax)` plus the remaining mass `1 − Σ ψ(k)`.
    pub fn psi_row(&self, lambda: f64, kmax: usize) -> Result<PsiRow> {
        check_lambda(lambda)?;
        let mut probs = Vec::with_capacity(kmax + 1);
        let mut ln = self.ln_psi(lambda, 0);
        let (ln_q, m) = self.ratio_terms(lambda);
        for k in 0..=kmax {
            if k > 0 {
                let kf = k as f64;
                ln += match self.kind {
                    DistKind::Exponential => ln_q,
                    DistKind::Deterministic => ln_q - libm::log(kf),
                    DistKind::Erlang => ln_q + libm::log((kf - 1.0 + m) / kf),
                };
            }
            probs.push(libm::exp(ln));
        }
        Ok(PsiRow::from_probs(probs))
    }

    /// Extends the row until the tail mass is below `tail_tol`.
    pub fn psi_row_until(&self, lambda: f64, tail_tol: f64) -> Result<PsiRow> {
        let mut kmax = 32usize.max(libm::ceil(4.0 * lambda * self.mean) as usize);
        loop {
            let row = self.psi_row(lambda, kmax)?;
            // Past the mode the terms decay at least geometrically, so a tiny
            // last term plus a tiny tail means the rest is negligible.
            if row.tail < tail_tol && *row.probs.last().unwrap_or(&0.0) < tail_tol {
                return Ok(row);
            }
            if kmax > 1 << 22 {
                return Ok(row);
            }
            kmax *= 2;
        }
    }

    // (ln of the per-step multiplier shared by all terms, Erlang shape)
    fn ratio_terms(&self, lambda: f64) -> (f64, f64) {
        let c = lambda * self.mean;
        match self.kind {
            DistKind::Exponential => (libm::log(c) - libm::log1p(c), 1.0),
            DistKind::Deterministic => (libm::log(c), 1.0),
            DistKind::Erlang => {
                let m = self.shape as f64;
                (libm::log(c) - libm::log(m + c), m)
            }
        }
    }

    /// Draws one posting interval.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match self.kind {
            DistKind::Deterministic => self.mean,
            DistKind::Exponential => Exp::new(1.0 / self.mean)
                .expect("validated mean")
                .sample(rng),
            DistKind::Erlang => {
                let m = self.shape as f64;
                Gamma::new(m, self.mean / m)
                    .expect("validated shape and mean")
                    .sample(rng)
            }
        }
    }
}

fn check_theta(theta: f64) -> Result<()> {
    if theta >= 0.0 && theta.is_finite() {
        Ok(())
    } else {
        Err(Error::domain(alloc::format!(
            "transform argument θ must be non-negative (got {theta})"
        )))
    }
}

/// Leading kernel values and the mass beyond them.
#[derive(Clone, Debug, PartialEq)]
pub struct PsiRow {
    pub probs: Vec<f64>,
    pub tail: f64,
}

impl PsiRow {
    fn from_probs(probs: Vec<f64>) -> Self {
        let head: f64 = probs.iter().sum();
        Self {
            tail: (1.0 - head).max(0.0),
            probs,
        }
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    /// `ψ(k)`, zero past the computed prefix.
    pub fn get(&self, k: usize) -> f64 {
        self.probs.get(k).copied().unwrap_or(0.0)
    }

    /// `Σ_{i ≥ k} ψ(i)`.
    pub fn upper_tail(&self, k: usize) -> f64 {
        if k >= self.probs.len() {
            return self.tail;
        }
        self.tail + self.probs[k..].iter().sum::<f64>()
    }
}
