//! Example target functions and data generators: sample means, a
//! deterministic linear SVM with its analytic global bound, and a
//! lattice-valued kernel density estimate.

mod generators;
mod kde;
mod svm;

pub use generators::{
    gen_exponential, gen_gaussian_mixture, gen_two_gaussians, gen_uniform_cube, ExponentialSampler,
    GaussianMixtureSampler, TwoGaussianSampler, UniformCubeSampler,
};
pub use kde::{kde_target, KdeConfig, KdeTarget};
pub use svm::{svm_global_sensitivity, svm_target, svm_train, SvmConfig, SvmModel, SvmTarget};

use crate::error::{Error, Result};
use crate::sampler::{OutputNorm, Record, TargetFunction};

/// Coordinatewise sample mean of n records in R^d, measured in L1.
#[derive(Debug, Clone)]
pub struct MeanTarget {
    dim: usize,
    n: usize,
    bound: Option<f64>,
}

/// Sample-mean target without a declared global bound (e.g. for unbounded
/// record domains such as exponential default times).
pub fn mean_target(dim: usize, n: usize) -> MeanTarget {
    MeanTarget { dim, n, bound: None }
}

impl MeanTarget {
    /// Declares the sharp global bound d/n valid for records in [0,1]^d.
    pub fn with_unit_cube_bound(mut self) -> Self {
        self.bound = Some(self.dim as f64 / self.n as f64);
        self
    }
}

impl TargetFunction for MeanTarget {
    fn arity(&self) -> usize {
        self.n
    }

    fn output_norm(&self) -> OutputNorm {
        OutputNorm::L1
    }

    fn label(&self) -> String {
        format!("mean d={} n={}", self.dim, self.n)
    }

    fn eval(&self, records: &[Record]) -> Result<Vec<f64>> {
        let mut acc = vec![0.0; self.dim];
        for record in records {
            if record.len() != self.dim {
                return Err(Error::DimensionMismatch { expected: self.dim, got: record.len() });
            }
            for (a, v) in acc.iter_mut().zip(record) {
                *a += v;
            }
        }
        let n = records.len() as f64;
        for a in &mut acc {
            *a /= n;
        }
        Ok(acc)
    }

    fn global_bound(&self) -> Option<f64> {
        self.bound
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mean_of_two_scalars() {
        let t = mean_target(1, 2);
        assert_eq!(t.eval(&[vec![0.0], vec![1.0]]).unwrap(), vec![0.5]);
    }

    #[test]
    fn permutation_invariant() {
        let t = mean_target(2, 3);
        let a = vec![vec![1.0, 2.0], vec![3.0, 4.0], vec![5.0, 6.0]];
        let b = vec![vec![5.0, 6.0], vec![1.0, 2.0], vec![3.0, 4.0]];
        assert_eq!(t.eval(&a).unwrap(), t.eval(&b).unwrap());
    }

    #[test]
    fn unit_cube_bound() {
        let t = mean_target(3, 500).with_unit_cube_bound();
        assert_eq!(t.global_bound(), Some(3.0 / 500.0));
    }

    #[test]
    fn dimension_mismatch() {
        let t = mean_target(2, 1);
        assert!(t.eval(&[vec![1.0]]).is_err());
    }
}
