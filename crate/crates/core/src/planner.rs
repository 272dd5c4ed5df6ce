//! Sampling-plan construction and validation.
//!
//! A plan is a tuple `(rho, m, k, gamma)` under which the sensitivity
//! sampler's order statistic yields `(epsilon, delta, gamma)`-random
//! differential privacy, together with the closed-form Lambert-W operating
//! points that optimise sampling effort, order-statistic index, or privacy
//! confidence.

use crate::error::{Error, Result};
use crate::numerics::{dkw_deviation, lambert_w, BranchId};

/// Relative slack for re-checking closed-form equalities in floating point.
const VALIDATE_SLACK: f64 = 1e-9;

/// Privacy parameters carried alongside a release.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PrivacyBudget {
    /// DP multiplicative level, > 0.
    pub epsilon: f64,
    /// DP additive slack, in [0, 1].
    pub delta: f64,
    /// RDP confidence, in (0, 1).
    pub gamma: f64,
}

impl PrivacyBudget {
    pub fn new(epsilon: f64, delta: f64, gamma: f64) -> Result<Self> {
        if !(epsilon > 0.0) {
            return Err(Error::Domain(format!("epsilon must be > 0, got {epsilon}")));
        }
        if !(0.0..=1.0).contains(&delta) {
            return Err(Error::Domain(format!("delta must lie in [0, 1], got {delta}")));
        }
        if !(gamma > 0.0 && gamma < 1.0) {
            return Err(Error::Domain(format!("gamma must lie in (0, 1), got {gamma}")));
        }
        Ok(Self { epsilon, delta, gamma })
    }
}

/// Which objective produced a plan.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PlanObjective {
    MinM,
    MinK,
    MinGamma,
    Manual,
}

impl PlanObjective {
    pub fn id(&self) -> &'static str {
        match self {
            PlanObjective::MinM => "min_m",
            PlanObjective::MinK => "min_k",
            PlanObjective::MinGamma => "min_gamma",
            PlanObjective::Manual => "manual",
        }
    }

    pub fn from_id(s: &str) -> Result<Self> {
        match s {
            "min_m" | "min-m" => Ok(PlanObjective::MinM),
            "min_k" | "min-k" => Ok(PlanObjective::MinK),
            "min_gamma" | "min-gamma" => Ok(PlanObjective::MinGamma),
            "manual" => Ok(PlanObjective::Manual),
            other => Err(Error::Parse(format!("unknown plan objective {other:?}"))),
        }
    }
}

/// A `(rho, m, k, gamma)` operating point for the sensitivity sampler.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SamplingPlan {
    /// CDF-approximation confidence, 0 < rho < min(gamma, 1/2).
    pub rho: f64,
    /// Sample size.
    pub m: u64,
    /// Order-statistic index, 1-based, 1 <= k <= m.
    pub k: u64,
    /// RDP confidence in (0, 1).
    pub gamma: f64,
    pub objective: PlanObjective,
}

/// First condition violated by an invalid plan.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PlanViolation {
    /// rho outside (0, min(gamma, 1/2)).
    RhoRange,
    /// gamma outside (0, 1).
    GammaRange,
    /// m below the bound log(1/rho) / (2 (gamma - rho)^2).
    SampleSizeTooSmall { required: u64 },
    /// k outside 1..=m.
    OrderIndexRange,
    /// k below the bound m (1 - gamma + rho + rho').
    OrderIndexTooSmall { required: u64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PlanVerdict {
    Valid,
    Invalid(PlanViolation),
}

impl PlanVerdict {
    pub fn is_valid(&self) -> bool {
        matches!(self, PlanVerdict::Valid)
    }
}

fn check_gamma(gamma: f64) -> Result<()> {
    if !(gamma > 0.0 && gamma < 1.0) {
        return Err(Error::Domain(format!("gamma must lie in (0, 1), got {gamma}")));
    }
    Ok(())
}

fn check_m(m: u64) -> Result<()> {
    if m < 1 {
        return Err(Error::Domain("sample size m must be >= 1".into()));
    }
    Ok(())
}

/// The bound of Eq. (1): minimal real-valued m for given gamma and rho.
pub fn sample_size_bound(gamma: f64, rho: f64) -> f64 {
    (1.0 / rho).ln() / (2.0 * (gamma - rho) * (gamma - rho))
}

/// The bound of Eq. (2): minimal real-valued k for given plan parameters.
pub fn order_index_bound(m: u64, gamma: f64, rho: f64) -> Result<f64> {
    Ok(m as f64 * (1.0 - gamma + rho + dkw_deviation(m, rho)?))
}

fn clamp_k(m: u64, bound: f64) -> u64 {
    (bound.ceil().max(1.0) as u64).min(m)
}

/// Effort-optimal operating point: the rho minimising the Eq. (1) bound on m.
pub fn plan_min_m(gamma: f64) -> Result<SamplingPlan> {
    check_gamma(gamma)?;
    let arg = -gamma / (2.0 * std::f64::consts::E.sqrt());
    let rho = (lambert_w(BranchId::Secondary, arg)? + 0.5).exp();
    let m = sample_size_bound(gamma, rho).ceil() as u64;
    let k = clamp_k(m, order_index_bound(m, gamma, rho)?);
    Ok(SamplingPlan { rho, m, k, gamma, objective: PlanObjective::MinM })
}

/// The rho shared by the min-k and min-gamma operating points.
fn budgeted_rho(m: u64) -> Result<f64> {
    Ok((lambert_w(BranchId::Secondary, -1.0 / (4.0 * m as f64))? / 2.0).exp())
}

/// Utility-optimal operating point: minimal k for a budgeted m and gamma.
///
/// Errors with the minimal feasible gamma attached when the proviso
/// `gamma >= rho + rho'` fails.
pub fn plan_min_k(m: u64, gamma: f64) -> Result<SamplingPlan> {
    check_m(m)?;
    check_gamma(gamma)?;
    let rho = budgeted_rho(m)?;
    let min_gamma = rho + dkw_deviation(m, rho)?;
    if gamma < min_gamma {
        return Err(Error::InfeasiblePlan { m, gamma, min_gamma });
    }
    let k = clamp_k(m, order_index_bound(m, gamma, rho)?);
    Ok(SamplingPlan { rho, m, k, gamma, objective: PlanObjective::MinK })
}

/// Confidence-optimal operating point: minimal gamma for a budgeted m.
pub fn plan_min_gamma(m: u64) -> Result<SamplingPlan> {
    check_m(m)?;
    let rho = budgeted_rho(m)?;
    let gamma = rho + dkw_deviation(m, rho)?;
    if gamma >= 1.0 {
        // Too few samples for any nontrivial confidence (happens for m <= 2).
        return Err(Error::InfeasiblePlan { m, gamma: 1.0, min_gamma: gamma });
    }
    Ok(SamplingPlan { rho, m, k: m, gamma, objective: PlanObjective::MinGamma })
}

/// Checks the Theorem-1 invariants, reporting the first violated condition.
pub fn validate_plan(plan: &SamplingPlan) -> PlanVerdict {
    if !(plan.gamma > 0.0 && plan.gamma < 1.0) {
        return PlanVerdict::Invalid(PlanViolation::GammaRange);
    }
    if !(plan.rho > 0.0 && plan.rho < plan.gamma.min(0.5)) {
        return PlanVerdict::Invalid(PlanViolation::RhoRange);
    }
    let m_bound = sample_size_bound(plan.gamma, plan.rho);
    if (plan.m as f64) < m_bound * (1.0 - VALIDATE_SLACK) - VALIDATE_SLACK {
        return PlanVerdict::Invalid(PlanViolation::SampleSizeTooSmall {
            required: m_bound.ceil() as u64,
        });
    }
    if plan.k < 1 || plan.k > plan.m {
        return PlanVerdict::Invalid(PlanViolation::OrderIndexRange);
    }
    let k_bound = order_index_bound(plan.m, plan.gamma, plan.rho)
        .expect("rho and m already validated");
    // k is clamped to m by construction, so a bound marginally above m is
    // satisfied by k = m.
    let k_required = k_bound.min(plan.m as f64);
    if (plan.k as f64) < k_required * (1.0 - VALIDATE_SLACK) - VALIDATE_SLACK {
        return PlanVerdict::Invalid(PlanViolation::OrderIndexTooSmall {
            required: k_bound.ceil() as u64,
        });
    }
    PlanVerdict::Valid
}

/// Confidence transferred under Proposition 1.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransferredConfidence {
    /// `gamma + sqrt((n+1) tau / 2)`, capped at 1.
    pub gamma: f64,
    /// True when the cap was hit and the guarantee is vacuous.
    pub vacuous: bool,
}

/// RDP confidence transfer from sampling distribution P to a distribution Q
/// with `KL(P || Q) <= tau`.
pub fn transfer_confidence(gamma: f64, tau: f64, n: u64) -> Result<TransferredConfidence> {
    check_gamma(gamma)?;
    if !(tau >= 0.0) {
        return Err(Error::Domain(format!("tau must be >= 0, got {tau}")));
    }
    if n < 1 {
        return Err(Error::Domain("n must be >= 1".into()));
    }
    let raw = gamma + ((n + 1) as f64 * tau / 2.0).sqrt();
    if raw >= 1.0 {
        Ok(TransferredConfidence { gamma: 1.0, vacuous: true })
    } else {
        Ok(TransferredConfidence { gamma: raw, vacuous: false })
    }
}
