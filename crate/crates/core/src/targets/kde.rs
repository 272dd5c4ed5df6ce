//! One-dimensional Gaussian kernel density estimation restricted to the
//! Bernstein lattice {0, 1/k, ..., 1}, with the kernel truncated to [0,1]
//! and renormalised so each kernel integrates to one over the domain.

use statrs::function::erf::erfc;

use crate::error::{Error, Result};
use crate::sampler::{OutputNorm, Record, TargetFunction};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KdeConfig {
    /// Gaussian kernel bandwidth (standard deviation).
    pub bandwidth: f64,
    /// Lattice size k; the density is evaluated at {0, 1/k, ..., 1}.
    pub lattice_size: usize,
}

impl KdeConfig {
    pub fn new(bandwidth: f64, lattice_size: usize) -> Result<Self> {
        if !(bandwidth > 0.0) {
            return Err(Error::Domain(format!("bandwidth must be > 0, got {bandwidth}")));
        }
        if lattice_size < 1 {
            return Err(Error::Domain("lattice size must be >= 1".into()));
        }
        Ok(Self { bandwidth, lattice_size })
    }
}

impl Default for KdeConfig {
    fn default() -> Self {
        Self { bandwidth: 0.05, lattice_size: 10 }
    }
}

fn normal_cdf(z: f64) -> f64 {
    0.5 * erfc(-z / std::f64::consts::SQRT_2)
}

fn normal_pdf(z: f64) -> f64 {
    (-0.5 * z * z).exp() / (2.0 * std::f64::consts::PI).sqrt()
}

/// Mass of the untruncated kernel centred at x that falls inside [0,1].
fn truncation_mass(x: f64, bandwidth: f64) -> f64 {
    normal_cdf((1.0 - x) / bandwidth) - normal_cdf(-x / bandwidth)
}

/// Truncated-renormalised kernel value at p for a record at x.
fn kernel(p: f64, x: f64, bandwidth: f64) -> f64 {
    normal_pdf((p - x) / bandwidth) / bandwidth / truncation_mass(x, bandwidth)
}

/// KDE as a sampler target: scalar records in [0,1], output the (k+1)-vector
/// of lattice density values, measured in sup norm over the lattice.
#[derive(Debug, Clone)]
pub struct KdeTarget {
    config: KdeConfig,
    n: usize,
}

pub fn kde_target(config: KdeConfig, n: usize) -> KdeTarget {
    KdeTarget { config, n }
}

impl KdeTarget {
    /// Sup-sensitivity bound: replacing one record moves each lattice value
    /// by at most the largest attainable kernel value over n.
    fn kernel_sup(&self) -> f64 {
        // The truncation mass is minimised at the domain endpoints.
        let z_min = truncation_mass(0.0, self.config.bandwidth);
        normal_pdf(0.0) / self.config.bandwidth / z_min
    }
}

impl TargetFunction for KdeTarget {
    fn arity(&self) -> usize {
        self.n
    }

    fn output_norm(&self) -> OutputNorm {
        OutputNorm::LatticeSup
    }

    fn label(&self) -> String {
        format!(
            "kde n={} bandwidth={} k={}",
            self.n, self.config.bandwidth, self.config.lattice_size
        )
    }

    fn eval(&self, records: &[Record]) -> Result<Vec<f64>> {
        let k = self.config.lattice_size;
        let mut xs = Vec::with_capacity(records.len());
        for record in records {
            if record.len() != 1 {
                return Err(Error::DimensionMismatch { expected: 1, got: record.len() });
            }
            let x = record[0];
            if !(0.0..=1.0).contains(&x) {
                return Err(Error::Domain(format!("KDE record {x} outside [0,1]")));
            }
            xs.push(x);
        }
        let n = xs.len() as f64;
        Ok((0..=k)
            .map(|j| {
                let p = j as f64 / k as f64;
                xs.iter().map(|&x| kernel(p, x, self.config.bandwidth)).sum::<f64>() / n
            })
            .collect())
    }

    fn global_bound(&self) -> Option<f64> {
        Some(self.kernel_sup() / self.n as f64)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_record_peak() {
        let target = kde_target(KdeConfig::new(0.05, 10).unwrap(), 1);
        let values = target.eval(&[vec![0.5]]).unwrap();
        // Lattice value at 0.5 equals the truncated-kernel mode.
        let expected = normal_pdf(0.0) / 0.05 / truncation_mass(0.5, 0.05);
        assert!((values[5] - expected).abs() < 1e-12);
    }

    #[test]
    fn identical_datasets_zero_sensitivity() {
        let target = kde_target(KdeConfig::default(), 3);
        let db = vec![vec![0.2], vec![0.5], vec![0.9]];
        let a = target.eval(&db).unwrap();
        let b = target.eval(&db).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn riemann_sum_near_one() {
        // Numerical integration oracle: trapezoid on a fine grid should give
        // mass ~1; the coarse lattice Riemann sum is within 0.05.
        let target = kde_target(KdeConfig::new(0.05, 10).unwrap(), 2);
        let db = vec![vec![0.4], vec![0.6]];
        let values = target.eval(&db).unwrap();
        let riemann: f64 = values.iter().sum::<f64>() / 10.0;
        assert!((riemann - 1.0).abs() < 0.05, "riemann={riemann}");

        let fine = kde_target(KdeConfig::new(0.05, 2000).unwrap(), 2);
        let fine_values = fine.eval(&db).unwrap();
        let trapezoid: f64 = (0..2000)
            .map(|i| 0.5 * (fine_values[i] + fine_values[i + 1]) / 2000.0)
            .sum();
        assert!((trapezoid - 1.0).abs() < 1e-6, "trapezoid={trapezoid}");
    }

    #[test]
    fn nonnegative_and_symmetric() {
        let target = kde_target(KdeConfig::new(0.05, 10).unwrap(), 2);
        let values = target.eval(&[vec![0.3], vec![0.7]]).unwrap();
        assert!(values.iter().all(|v| *v >= 0.0));
        for j in 0..=10 {
            assert!((values[j] - values[10 - j]).abs() < 1e-12, "asymmetry at {j}");
        }
    }

    #[test]
    fn rejects_out_of_domain_records() {
        let target = kde_target(KdeConfig::default(), 1);
        assert!(target.eval(&[vec![1.5]]).is_err());
        assert!(target.eval(&[vec![-0.1]]).is_err());
    }

    #[test]
    fn global_bound_dominates_lattice_values() {
        let target = kde_target(KdeConfig::new(0.05, 10).unwrap(), 1);
        let bound = target.global_bound().unwrap();
        for x in [0.0, 0.013, 0.5, 0.97, 1.0] {
            let values = target.eval(&[vec![x]]).unwrap();
            for v in values {
                assert!(v <= bound + 1e-12, "x={x} v={v} bound={bound}");
            }
        }
    }
}
