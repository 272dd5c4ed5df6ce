//! Sensitivity-induced differentially private mechanisms and their
//! composition with the sensitivity sampler (sample-then-respond).

mod bernstein;

pub use bernstein::{bernstein_evaluate_lattice, lattice_points};

use std::io::{BufRead, Write};

use rand::{Rng, RngCore};
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::planner::{validate_plan, SamplingPlan};
use crate::sampler::{estimate_delta, sample_sensitivity, substream, Record, RecordSampler, TargetFunction};

/// Safety factor keeping the Gaussian calibration strictly above the
/// boundary sigma^2 = 2 delta^2 log(1.25/dp_delta) / epsilon^2.
const GAUSSIAN_SAFETY: f64 = 1.0 + 1e-6;

/// What to do when the sensitivity estimate is exactly zero.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DegeneratePolicy {
    /// Refuse to release (the noise scale would be zero).
    Reject,
    /// Release the value unnoised, flagged non-private-degenerate.
    ReleaseUnnoised,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ReleasePayload {
    /// Noisy output vector.
    Vector(Vec<f64>),
    /// Sampled index into a finite response list.
    Choice(usize),
    /// Noisy lattice with evaluation capability.
    Bernstein {
        noisy_lattice: Vec<f64>,
        lattice_size: usize,
        dims: usize,
        order: usize,
    },
}

/// A mechanism output plus the budget and sensitivity it was run with.
#[derive(Debug, Clone, PartialEq)]
pub struct Release {
    pub payload: ReleasePayload,
    pub epsilon: f64,
    /// DP additive slack; only the Gaussian mechanism uses a nonzero value.
    pub dp_delta: f64,
    /// RDP confidence of the sensitivity estimate, when known.
    pub gamma: Option<f64>,
    /// Sensitivity the mechanism was calibrated with.
    pub delta_hat: f64,
    /// Set when the degenerate override released an unnoised value.
    pub degenerate: bool,
}

fn check_epsilon(epsilon: f64) -> Result<()> {
    if !(epsilon > 0.0) {
        return Err(Error::Domain(format!("epsilon must be > 0, got {epsilon}")));
    }
    Ok(())
}

fn check_sensitivity(delta: f64, policy: DegeneratePolicy) -> Result<bool> {
    if !(delta >= 0.0) || !delta.is_finite() {
        return Err(Error::Domain(format!("sensitivity must be finite and >= 0, got {delta}")));
    }
    if delta == 0.0 {
        return match policy {
            DegeneratePolicy::Reject => Err(Error::DegenerateSensitivity),
            DegeneratePolicy::ReleaseUnnoised => Ok(true),
        };
    }
    Ok(false)
}

/// One Laplace(0, scale) variate by inverse-CDF of a uniform, so that the
/// draw is reproducible across implementations given the same RNG stream:
/// u ~ U(0,1), v = u - 1/2, x = -scale * sign(v) * ln(1 - 2|v|).
pub fn laplace_noise(rng: &mut dyn RngCore, scale: f64) -> f64 {
    let u = loop {
        let u: f64 = rng.gen();
        if u > 0.0 {
            break u;
        }
    };
    let v = u - 0.5;
    -scale * v.signum() * (1.0 - 2.0 * v.abs()).ln()
}

/// Laplace mechanism: i.i.d. Laplace(delta/epsilon) noise per coordinate.
pub fn laplace_release(
    value: &[f64],
    delta: f64,
    epsilon: f64,
    rng: &mut dyn RngCore,
    policy: DegeneratePolicy,
) -> Result<Release> {
    check_epsilon(epsilon)?;
    let degenerate = check_sensitivity(delta, policy)?;
    let scale = delta / epsilon;
    let noisy = value
        .iter()
        .map(|v| if degenerate { *v } else { v + laplace_noise(rng, scale) })
        .collect();
    Ok(Release {
        payload: ReleasePayload::Vector(noisy),
        epsilon,
        dp_delta: 0.0,
        gamma: None,
        delta_hat: delta,
        degenerate,
    })
}

/// Noise scale used by the Gaussian mechanism.
pub fn gaussian_sigma(delta: f64, epsilon: f64, dp_delta: f64) -> Result<f64> {
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(Error::Domain(format!(
            "gaussian mechanism requires 0 < epsilon < 1, got {epsilon}"
        )));
    }
    if !(dp_delta > 0.0 && dp_delta < 1.0) {
        return Err(Error::Domain(format!(
            "gaussian mechanism requires dp_delta in (0, 1), got {dp_delta}"
        )));
    }
    Ok(delta * (2.0 * (1.25 / dp_delta).ln()).sqrt() / epsilon * GAUSSIAN_SAFETY)
}

/// Gaussian mechanism: i.i.d. N(0, sigma^2) noise per coordinate with
/// sigma just above the (epsilon, dp_delta) calibration boundary.
pub fn gaussian_release(
    value: &[f64],
    delta: f64,
    epsilon: f64,
    dp_delta: f64,
    rng: &mut dyn RngCore,
    policy: DegeneratePolicy,
) -> Result<Release> {
    let sigma = gaussian_sigma(delta, epsilon, dp_delta)?;
    let degenerate = check_sensitivity(delta, policy)?;
    let noisy = value
        .iter()
        .map(|v| {
            if degenerate {
                *v
            } else {
                let z: f64 = rng.sample(StandardNormal);
                v + sigma * z
            }
        })
        .collect();
    Ok(Release {
        payload: ReleasePayload::Vector(noisy),
        epsilon,
        dp_delta,
        gamma: None,
        delta_hat: delta,
        degenerate,
    })
}

/// Analytic selection probabilities of the exponential mechanism, computed
/// with max-subtraction for overflow safety.
pub fn exponential_probabilities(scores: &[f64], delta: f64, epsilon: f64) -> Result<Vec<f64>> {
    if scores.is_empty() {
        return Err(Error::Domain("exponential mechanism needs a non-empty response list".into()));
    }
    if scores.iter().any(|s| !s.is_finite()) {
        return Err(Error::Domain("exponential mechanism scores must be finite".into()));
    }
    let max = scores.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let weights: Vec<f64> = scores
        .iter()
        .map(|s| (epsilon * (s - max) / (2.0 * delta)).exp())
        .collect();
    let total: f64 = weights.iter().sum();
    // The max-score entry contributes weight 1, so the total cannot underflow.
    assert!(total >= 1.0);
    Ok(weights.into_iter().map(|w| w / total).collect())
}

/// Exponential mechanism over a finite response list: samples index r with
/// probability proportional to exp(epsilon * score(r) / (2 delta)).
pub fn exponential_release(
    scores: &[f64],
    delta: f64,
    epsilon: f64,
    rng: &mut dyn RngCore,
    policy: DegeneratePolicy,
) -> Result<Release> {
    check_epsilon(epsilon)?;
    let degenerate = check_sensitivity(delta, policy)?;
    let index = if degenerate {
        // Deterministic argmax stands in for the zero-sensitivity limit.
        scores
            .iter()
            .enumerate()
            .max_by(|(_, a), (_, b)| a.total_cmp(b))
            .map(|(i, _)| i)
            .ok_or_else(|| Error::Domain("empty response list".into()))?
    } else {
        let probs = exponential_probabilities(scores, delta, epsilon)?;
        let u: f64 = rng.gen();
        let mut acc = 0.0;
        let mut chosen = probs.len() - 1;
        for (i, p) in probs.iter().enumerate() {
            acc += p;
            if u < acc {
                chosen = i;
                break;
            }
        }
        chosen
    };
    Ok(Release {
        payload: ReleasePayload::Choice(index),
        epsilon,
        dp_delta: 0.0,
        gamma: None,
        delta_hat: delta,
        degenerate,
    })
}

/// Per-entry Laplace scale of the Bernstein mechanism,
/// `delta (k+1)^dims / epsilon`.
pub fn bernstein_noise_scale(delta: f64, k: usize, dims: usize, epsilon: f64) -> f64 {
    delta * ((k + 1) as f64).powi(dims as i32) / epsilon
}

/// Bernstein mechanism: Laplace noise on every lattice value of a
/// lattice-restricted function release.
pub fn bernstein_release(
    lattice_values: &[f64],
    k: usize,
    dims: usize,
    order: usize,
    delta: f64,
    epsilon: f64,
    rng: &mut dyn RngCore,
    policy: DegeneratePolicy,
) -> Result<Release> {
    check_epsilon(epsilon)?;
    if k < 1 || dims < 1 || order < 1 {
        return Err(Error::Domain("bernstein: k, dims and order must be >= 1".into()));
    }
    let expected = (k + 1).pow(dims as u32);
    if lattice_values.len() != expected {
        return Err(Error::DimensionMismatch { expected, got: lattice_values.len() });
    }
    let degenerate = check_sensitivity(delta, policy)?;
    let scale = bernstein_noise_scale(delta, k, dims, epsilon);
    let noisy = lattice_values
        .iter()
        .map(|v| if degenerate { *v } else { v + laplace_noise(rng, scale) })
        .collect();
    Ok(Release {
        payload: ReleasePayload::Bernstein { noisy_lattice: noisy, lattice_size: k, dims, order },
        epsilon,
        dp_delta: 0.0,
        gamma: None,
        delta_hat: delta,
        degenerate,
    })
}

/// Evaluates a Bernstein release at a query point in [0,1]^dims.
pub fn bernstein_evaluate(release: &Release, y: &[f64]) -> Result<f64> {
    match &release.payload {
        ReleasePayload::Bernstein { noisy_lattice, lattice_size, dims, order } => {
            bernstein_evaluate_lattice(noisy_lattice, *lattice_size, *dims, *order, y)
        }
        _ => Err(Error::Domain("release is not a Bernstein lattice".into())),
    }
}

/// Mechanism selector plus its budget, for sample-then-respond.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MechanismSpec {
    Laplace { epsilon: f64 },
    Gaussian { epsilon: f64, dp_delta: f64 },
    /// Target output is read as a score vector over a finite response list.
    Exponential { epsilon: f64 },
    /// Target output is read as lattice values over {0,1/k,...,1}^dims.
    Bernstein { epsilon: f64, order: usize, lattice_size: usize, dims: usize },
}

/// RNG substream index reserved for mechanism noise; sampler iterations use
/// indices 0..m.
const NOISE_STREAM: u64 = u64::MAX;

/// Algorithm 2: estimate sensitivity on privacy-insensitive samples from P,
/// then respond to the sensitive database with the selected mechanism at the
/// estimated sensitivity. The sampler never touches `database`.
pub fn sample_then_respond(
    database: &[Record],
    target: &dyn TargetFunction,
    mech: MechanismSpec,
    plan: &SamplingPlan,
    p: &dyn RecordSampler,
    seed: u64,
    policy: DegeneratePolicy,
) -> Result<Release> {
    if database.len() != target.arity() {
        return Err(Error::DimensionMismatch { expected: target.arity(), got: database.len() });
    }
    if !validate_plan(plan).is_valid() {
        return Err(Error::Domain("sampling plan fails validation".into()));
    }
    let sample = sample_sensitivity(target, p, plan.m, seed)?;
    let delta_hat = estimate_delta(&sample, plan.k)?;
    let value = target.eval(database)?;
    let mut rng = substream(seed, NOISE_STREAM);
    let mut release = match mech {
        MechanismSpec::Laplace { epsilon } => {
            laplace_release(&value, delta_hat, epsilon, &mut rng, policy)?
        }
        MechanismSpec::Gaussian { epsilon, dp_delta } => {
            gaussian_release(&value, delta_hat, epsilon, dp_delta, &mut rng, policy)?
        }
        MechanismSpec::Exponential { epsilon } => {
            exponential_release(&value, delta_hat, epsilon, &mut rng, policy)?
        }
        MechanismSpec::Bernstein { epsilon, order, lattice_size, dims } => bernstein_release(
            &value,
            lattice_size,
            dims,
            order,
            delta_hat,
            epsilon,
            &mut rng,
            policy,
        )?,
    };
    release.gamma = Some(plan.gamma);
    Ok(release)
}

impl Release {
    /// Tagged structured-text serialization: one `key=value` line per field,
    /// payload as space-separated shortest-representation decimals.
    pub fn write_to<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "sensikit-release v1")?;
        let variant = match &self.payload {
            ReleasePayload::Vector(_) => "vector",
            ReleasePayload::Choice(_) => "choice",
            ReleasePayload::Bernstein { .. } => "bernstein",
        };
        writeln!(w, "variant={variant}")?;
        writeln!(w, "epsilon={}", self.epsilon)?;
        writeln!(w, "dp_delta={}", self.dp_delta)?;
        match self.gamma {
            Some(g) => writeln!(w, "gamma={g}")?,
            None => writeln!(w, "gamma=none")?,
        }
        writeln!(w, "delta_hat={}", self.delta_hat)?;
        writeln!(w, "degenerate={}", self.degenerate)?;
        match &self.payload {
            ReleasePayload::Vector(values) => {
                writeln!(w, "payload={}", join_decimals(values))?;
            }
            ReleasePayload::Choice(index) => {
                writeln!(w, "payload={index}")?;
            }
            ReleasePayload::Bernstein { noisy_lattice, lattice_size, dims, order } => {
                writeln!(w, "lattice_size={lattice_size}")?;
                writeln!(w, "dims={dims}")?;
                writeln!(w, "order={order}")?;
                writeln!(w, "payload={}", join_decimals(noisy_lattice))?;
            }
        }
        Ok(())
    }

    pub fn read_from<R: BufRead>(r: R) -> Result<Self> {
        let mut fields = std::collections::HashMap::new();
        let mut lines = r.lines();
        let magic = lines.next().ok_or_else(|| Error::Parse("empty release file".into()))??;
        if magic != "sensikit-release v1" {
            return Err(Error::Parse(format!("bad release header: {magic:?}")));
        }
        for line in lines {
            let line = line?;
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::Parse(format!("bad release line {line:?}")))?;
            fields.insert(key.to_string(), value.to_string());
        }
        let get = |key: &str| {
            fields
                .get(key)
                .cloned()
                .ok_or_else(|| Error::Parse(format!("release missing field {key}")))
        };
        let parse_f64 = |s: String| s.parse::<f64>().map_err(|e| Error::Parse(e.to_string()));
        let epsilon = parse_f64(get("epsilon")?)?;
        let dp_delta = parse_f64(get("dp_delta")?)?;
        let gamma = match get("gamma")?.as_str() {
            "none" => None,
            s => Some(s.parse::<f64>().map_err(|e| Error::Parse(e.to_string()))?),
        };
        let delta_hat = parse_f64(get("delta_hat")?)?;
        let degenerate = get("degenerate")? == "true";
        let payload = match get("variant")?.as_str() {
            "vector" => ReleasePayload::Vector(parse_decimals(&get("payload")?)?),
            "choice" => ReleasePayload::Choice(
                get("payload")?.parse::<usize>().map_err(|e| Error::Parse(e.to_string()))?,
            ),
            "bernstein" => ReleasePayload::Bernstein {
                noisy_lattice: parse_decimals(&get("payload")?)?,
                lattice_size: get("lattice_size")?
                    .parse()
                    .map_err(|e: std::num::ParseIntError| Error::Parse(e.to_string()))?,
                dims: get("dims")?
                    .parse()
                    .map_err(|e: std::num::ParseIntError| Error::Parse(e.to_string()))?,
                order: get("order")?
                    .parse()
                    .map_err(|e: std::num::ParseIntError| Error::Parse(e.to_string()))?,
            },
            other => return Err(Error::Parse(format!("unknown release variant {other:?}"))),
        };
        Ok(Release { payload, epsilon, dp_delta, gamma, delta_hat, degenerate })
    }
}

fn join_decimals(values: &[f64]) -> String {
    values.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(" ")
}

fn parse_decimals(s: &str) -> Result<Vec<f64>> {
    s.split_whitespace()
        .map(|t| t.parse::<f64>().map_err(|e| Error::Parse(e.to_string())))
        .collect()
}
