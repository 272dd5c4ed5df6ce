//! Record distributions used in the experiments.

use rand::{Rng, RngCore};
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::sampler::{Record, RecordSampler};

fn standard_normal(rng: &mut dyn RngCore) -> f64 {
    rng.sample(StandardNormal)
}

/// Scalar Exp(lambda) records (e.g. loan default times), by inverse CDF.
#[derive(Debug, Clone, Copy)]
pub struct ExponentialSampler {
    lambda: f64,
}

pub fn gen_exponential(lambda: f64) -> Result<ExponentialSampler> {
    if !(lambda > 0.0) {
        return Err(Error::Domain(format!("exponential rate must be > 0, got {lambda}")));
    }
    Ok(ExponentialSampler { lambda })
}

impl RecordSampler for ExponentialSampler {
    fn draw(&self, rng: &mut dyn RngCore) -> Record {
        let u: f64 = rng.gen();
        vec![-(1.0 - u).ln() / self.lambda]
    }

    fn description(&self) -> String {
        format!("exp:{}", self.lambda)
    }
}

/// Uniform records on [0,1]^d.
#[derive(Debug, Clone, Copy)]
pub struct UniformCubeSampler {
    dim: usize,
}

pub fn gen_uniform_cube(dim: usize) -> Result<UniformCubeSampler> {
    if dim < 1 {
        return Err(Error::Domain("uniform cube dimension must be >= 1".into()));
    }
    Ok(UniformCubeSampler { dim })
}

impl RecordSampler for UniformCubeSampler {
    fn draw(&self, rng: &mut dyn RngCore) -> Record {
        (0..self.dim).map(|_| rng.gen::<f64>()).collect()
    }

    fn description(&self) -> String {
        format!("uniform:{}", self.dim)
    }
}

/// Two-class Gaussian data for the SVM experiments: with equal probability a
/// positive record N(0.2*1, 0.01 I) with label +1 or a negative record
/// N(0.8*1, 0.01 I) with label -1, features clipped to [0,1]^d so the
/// global-sensitivity bound's domain assumption holds. Record layout is
/// [features..., label].
#[derive(Debug, Clone, Copy)]
pub struct TwoGaussianSampler {
    dim: usize,
}

pub fn gen_two_gaussians(dim: usize) -> Result<TwoGaussianSampler> {
    if dim < 1 {
        return Err(Error::Domain("feature dimension must be >= 1".into()));
    }
    Ok(TwoGaussianSampler { dim })
}

impl RecordSampler for TwoGaussianSampler {
    fn draw(&self, rng: &mut dyn RngCore) -> Record {
        let positive = rng.gen::<f64>() < 0.5;
        let (mean, label) = if positive { (0.2, 1.0) } else { (0.8, -1.0) };
        let mut record: Record = (0..self.dim)
            .map(|_| (mean + 0.1 * standard_normal(rng)).clamp(0.0, 1.0))
            .collect();
        record.push(label);
        record
    }

    fn description(&self) -> String {
        format!("twogauss:{}", self.dim)
    }
}

/// Scalar mixture 0.4 N(0.5, 0.02) + 0.6 N(0.75, 0.005) (variances), clipped
/// to [0,1], for the KDE experiments.
#[derive(Debug, Clone, Copy)]
pub struct GaussianMixtureSampler;

pub fn gen_gaussian_mixture() -> GaussianMixtureSampler {
    GaussianMixtureSampler
}

impl RecordSampler for GaussianMixtureSampler {
    fn draw(&self, rng: &mut dyn RngCore) -> Record {
        let (mean, sd) = if rng.gen::<f64>() < 0.4 {
            (0.5, 0.02f64.sqrt())
        } else {
            (0.75, 0.005f64.sqrt())
        };
        vec![(mean + sd * standard_normal(rng)).clamp(0.0, 1.0)]
    }

    fn description(&self) -> String {
        "mixture".into()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sampler::substream;
    use statrs::function::erf::erfc;

    fn normal_cdf(z: f64) -> f64 {
        0.5 * erfc(-z / std::f64::consts::SQRT_2)
    }

    fn draws(sampler: &dyn RecordSampler, count: usize, seed: u64) -> Vec<Record> {
        let mut rng = substream(seed, 0);
        (0..count).map(|_| sampler.draw(&mut rng)).collect()
    }

    #[test]
    fn exponential_mean() {
        let s = gen_exponential(1.0).unwrap();
        let mean: f64 =
            draws(&s, 100_000, 1).iter().map(|r| r[0]).sum::<f64>() / 100_000.0;
        assert!((mean - 1.0).abs() < 0.02, "mean={mean}");
    }

    #[test]
    fn two_gaussian_class_balance() {
        let s = gen_two_gaussians(3).unwrap();
        let records = draws(&s, 100_000, 2);
        let positives = records.iter().filter(|r| r[3] == 1.0).count() as f64 / 100_000.0;
        assert!((positives - 0.5).abs() < 0.01, "balance={positives}");
        assert!(records
            .iter()
            .all(|r| r[..3].iter().all(|v| (0.0..=1.0).contains(v))));
    }

    #[test]
    fn mixture_central_mass() {
        let s = gen_gaussian_mixture();
        let records = draws(&s, 100_000, 3);
        let in_band =
            records.iter().filter(|r| (0.7..=0.8).contains(&r[0])).count() as f64 / 100_000.0;
        // Normal CDF oracle for the band mass.
        let sd2 = 0.005f64.sqrt();
        let sd1 = 0.02f64.sqrt();
        let expected = 0.6 * (normal_cdf(0.05 / sd2) - normal_cdf(-0.05 / sd2))
            + 0.4 * (normal_cdf((0.8 - 0.5) / sd1) - normal_cdf((0.7 - 0.5) / sd1));
        assert!((in_band - expected).abs() < 0.01, "band={in_band} expected={expected}");
    }

    #[test]
    fn parameter_domain_errors() {
        assert!(gen_exponential(0.0).is_err());
        assert!(gen_uniform_cube(0).is_err());
        assert!(gen_two_gaussians(0).is_err());
    }
}
