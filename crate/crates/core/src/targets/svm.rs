//! Deterministic linear SVM with hinge loss, solved in the dual, plus the
//! analytic L1 global sensitivity bound for the released (w, b) vector.
//!
//! Primal objective: (1/2)||w||^2 + (C/n) sum_i hinge(y_i (w.x_i + b)),
//! with an unregularised bias, so the dual carries the equality constraint
//! sum_i alpha_i y_i = 0 and box constraints 0 <= alpha_i <= C/n. The solver
//! sweeps indices cyclically and pairs each violator with the extreme
//! partner, which keeps results deterministic under any thread count.

use crate::error::{Error, Result};
use crate::sampler::{OutputNorm, Record, TargetFunction};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SvmConfig {
    /// Regularisation trade-off C > 0.
    pub c: f64,
    /// Feature dimension.
    pub dim: usize,
    /// Maximal KKT violation tolerated at convergence.
    pub tolerance: f64,
    /// Cap on full cyclic sweeps.
    pub max_passes: usize,
}

impl SvmConfig {
    pub fn new(c: f64, dim: usize) -> Result<Self> {
        if !(c > 0.0) {
            return Err(Error::Domain(format!("SVM C must be > 0, got {c}")));
        }
        if dim < 1 {
            return Err(Error::Domain("SVM feature dimension must be >= 1".into()));
        }
        Ok(Self { c, dim, tolerance: 1e-8, max_passes: 10_000 })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SvmModel {
    pub w: Vec<f64>,
    pub b: f64,
    /// False when the pass cap was hit before reaching the tolerance; the
    /// result is still returned.
    pub converged: bool,
    pub passes: usize,
}

impl SvmModel {
    pub fn decision(&self, x: &[f64]) -> f64 {
        dot(&self.w, x) + self.b
    }

    /// Released parameter vector (w, b).
    pub fn parameters(&self) -> Vec<f64> {
        let mut out = self.w.clone();
        out.push(self.b);
        out
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Splits records laid out as [features..., label] and validates them.
fn split_records(records: &[Record], dim: usize) -> Result<(Vec<&[f64]>, Vec<f64>)> {
    let mut xs = Vec::with_capacity(records.len());
    let mut ys = Vec::with_capacity(records.len());
    for record in records {
        if record.len() != dim + 1 {
            return Err(Error::DimensionMismatch { expected: dim + 1, got: record.len() });
        }
        let (x, y) = record.split_at(dim);
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::Domain("non-finite SVM feature".into()));
        }
        let y = y[0];
        if y != 1.0 && y != -1.0 {
            return Err(Error::Domain(format!("SVM label must be +1 or -1, got {y}")));
        }
        xs.push(x);
        ys.push(y);
    }
    Ok((xs, ys))
}

/// Trains on records laid out as [features..., label in {-1,+1}].
pub fn svm_train(records: &[Record], config: &SvmConfig) -> Result<SvmModel> {
    if records.is_empty() {
        return Err(Error::Domain("SVM training set must be non-empty".into()));
    }
    let (xs, ys) = split_records(records, config.dim)?;
    let n = xs.len();
    let cap = config.c / n as f64;
    let bound_eps = cap * 1e-12;
    let mut alpha = vec![0.0f64; n];
    let mut w = vec![0.0f64; config.dim];

    // r_i = y_i - w.x_i is the bias value point i votes for. At the optimum
    // every i in LOW demands b >= r_i and every i in UP demands b <= r_i.
    let r = |w: &[f64], i: usize| ys[i] - dot(w, xs[i]);
    let in_low = |alpha: &[f64], i: usize| {
        (ys[i] > 0.0 && alpha[i] < cap - bound_eps) || (ys[i] < 0.0 && alpha[i] > bound_eps)
    };
    let in_up = |alpha: &[f64], i: usize| {
        (ys[i] > 0.0 && alpha[i] > bound_eps) || (ys[i] < 0.0 && alpha[i] < cap - bound_eps)
    };

    let mut converged = false;
    let mut passes = 0;
    while passes < config.max_passes {
        passes += 1;
        // Convergence check on the bias bracket.
        let mut b_low = f64::NEG_INFINITY;
        let mut b_up = f64::INFINITY;
        for i in 0..n {
            let ri = r(&w, i);
            if in_low(&alpha, i) {
                b_low = b_low.max(ri);
            }
            if in_up(&alpha, i) {
                b_up = b_up.min(ri);
            }
        }
        if b_low - b_up <= config.tolerance {
            converged = true;
            break;
        }

        let mut progressed = false;
        for i in 0..n {
            let ri = r(&w, i);
            // Pair a violating index with the extreme partner on the other side.
            let j = if in_low(&alpha, i) {
                let (mut j_best, mut r_best) = (usize::MAX, f64::INFINITY);
                for j in 0..n {
                    if j != i && in_up(&alpha, j) {
                        let rj = r(&w, j);
                        if rj < r_best {
                            r_best = rj;
                            j_best = j;
                        }
                    }
                }
                if j_best == usize::MAX || ri - r_best <= config.tolerance {
                    continue;
                }
                j_best
            } else if in_up(&alpha, i) {
                let (mut j_best, mut r_best) = (usize::MAX, f64::NEG_INFINITY);
                for j in 0..n {
                    if j != i && in_low(&alpha, j) {
                        let rj = r(&w, j);
                        if rj > r_best {
                            r_best = rj;
                            j_best = j;
                        }
                    }
                }
                if j_best == usize::MAX || r_best - ri <= config.tolerance {
                    continue;
                }
                j_best
            } else {
                continue;
            };

            // Pairwise update preserving sum alpha_i y_i = 0.
            let eta = dot(xs[i], xs[i]) + dot(xs[j], xs[j]) - 2.0 * dot(xs[i], xs[j]);
            if eta <= 1e-12 {
                continue;
            }
            let e_i = dot(&w, xs[i]) - ys[i];
            let e_j = dot(&w, xs[j]) - ys[j];
            let (lo, hi) = if ys[i] != ys[j] {
                ((alpha[j] - alpha[i]).max(0.0), (cap + alpha[j] - alpha[i]).min(cap))
            } else {
                ((alpha[i] + alpha[j] - cap).max(0.0), (alpha[i] + alpha[j]).min(cap))
            };
            if hi - lo <= 0.0 {
                continue;
            }
            let aj_new = (alpha[j] + ys[j] * (e_i - e_j) / eta).clamp(lo, hi);
            let dj = aj_new - alpha[j];
            if dj.abs() <= bound_eps {
                continue;
            }
            let ai_new = alpha[i] - ys[i] * ys[j] * dj;
            for d in 0..config.dim {
                w[d] += ys[i] * (ai_new - alpha[i]) * xs[i][d] + ys[j] * dj * xs[j][d];
            }
            alpha[i] = ai_new;
            alpha[j] = aj_new;
            progressed = true;
        }
        if !progressed {
            // No admissible pair can move; typically duplicate points pinned
            // at bounds. The bracket check above decides the converged flag
            // on the next sweep, so only bail out here.
            let mut b_low = f64::NEG_INFINITY;
            let mut b_up = f64::INFINITY;
            for i in 0..n {
                let ri = r(&w, i);
                if in_low(&alpha, i) {
                    b_low = b_low.max(ri);
                }
                if in_up(&alpha, i) {
                    b_up = b_up.min(ri);
                }
            }
            converged = b_low - b_up <= config.tolerance;
            break;
        }
    }

    // Bias: average over free support vectors; with only bound support
    // vectors, the midpoint of the feasible bracket; with no support vectors
    // at all, the minimal-|b| zero-loss solution is the common label.
    let free: Vec<usize> =
        (0..n).filter(|&i| alpha[i] > bound_eps && alpha[i] < cap - bound_eps).collect();
    let b = if !free.is_empty() {
        free.iter().map(|&i| r(&w, i)).sum::<f64>() / free.len() as f64
    } else if alpha.iter().any(|&a| a > bound_eps) {
        let mut b_low = f64::NEG_INFINITY;
        let mut b_up = f64::INFINITY;
        for i in 0..n {
            let ri = r(&w, i);
            if in_low(&alpha, i) {
                b_low = b_low.max(ri);
            }
            if in_up(&alpha, i) {
                b_up = b_up.min(ri);
            }
        }
        match (b_low.is_finite(), b_up.is_finite()) {
            (true, true) => 0.5 * (b_low + b_up),
            (true, false) => b_low,
            (false, true) => b_up,
            (false, false) => 0.0,
        }
    } else if ys.iter().all(|&y| y == ys[0]) {
        ys[0]
    } else {
        let mut b_low = f64::NEG_INFINITY;
        let mut b_up = f64::INFINITY;
        for i in 0..n {
            let ri = r(&w, i);
            if in_low(&alpha, i) {
                b_low = b_low.max(ri);
            }
            if in_up(&alpha, i) {
                b_up = b_up.min(ri);
            }
        }
        0.5 * (b_low + b_up)
    };

    Ok(SvmModel { w, b, converged, passes })
}

/// L1 global sensitivity bound for the (w, b) release over records in
/// [0,1]^d: 2 + 2 C sqrt(d) + 4 C d / n.
pub fn svm_global_sensitivity(c: f64, d: usize, n: usize) -> f64 {
    2.0 + 2.0 * c * (d as f64).sqrt() + 4.0 * c * d as f64 / n as f64
}

/// SVM as a sampler target: records [x..., y], output (w, b), norm L1.
#[derive(Debug, Clone)]
pub struct SvmTarget {
    config: SvmConfig,
    n: usize,
}

pub fn svm_target(config: SvmConfig, n: usize) -> SvmTarget {
    SvmTarget { config, n }
}

impl TargetFunction for SvmTarget {
    fn arity(&self) -> usize {
        self.n
    }

    fn output_norm(&self) -> OutputNorm {
        OutputNorm::L1
    }

    fn label(&self) -> String {
        format!("svm d={} n={} C={}", self.config.dim, self.n, self.config.c)
    }

    fn eval(&self, records: &[Record]) -> Result<Vec<f64>> {
        Ok(svm_train(records, &self.config)?.parameters())
    }

    fn global_bound(&self) -> Option<f64> {
        Some(svm_global_sensitivity(self.config.c, self.config.dim, self.n))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn primal_objective(records: &[Record], config: &SvmConfig, w: &[f64], b: f64) -> f64 {
        let (xs, ys) = split_records(records, config.dim).unwrap();
        let n = xs.len() as f64;
        let reg = 0.5 * dot(w, w);
        let loss: f64 =
            xs.iter().zip(&ys).map(|(x, y)| (1.0 - y * (dot(w, x) + b)).max(0.0)).sum();
        reg + config.c / n * loss
    }

    /// Brute-force oracle: nested grid refinement of the primal over (w, b).
    fn brute_force_primal(records: &[Record], config: &SvmConfig, radius: f64) -> (Vec<f64>, f64, f64) {
        assert!(config.dim <= 2);
        let dims = config.dim + 1; // w coordinates plus b
        let mut center = vec![0.0; dims];
        let mut half = radius;
        let steps = 10i64;
        let mut best = (center.clone(), f64::INFINITY);
        for _ in 0..40 {
            let mut local_best = best.clone();
            let mut idx = vec![-steps; dims];
            loop {
                let point: Vec<f64> = idx
                    .iter()
                    .zip(&center)
                    .map(|(&i, &c)| c + i as f64 * half / steps as f64)
                    .collect();
                let (w, b) = point.split_at(config.dim);
                let obj = primal_objective(records, config, w, b[0]);
                // Prefer minimal |b| on ties (flat directions in b).
                if obj < local_best.1 - 1e-15
                    || (obj < local_best.1 + 1e-15
                        && b[0].abs() < local_best.0[config.dim].abs() - 1e-15)
                {
                    local_best = (point, obj);
                }
                let mut d = 0;
                loop {
                    if d == dims {
                        break;
                    }
                    idx[d] += 1;
                    if idx[d] <= steps {
                        break;
                    }
                    idx[d] = -steps;
                    d += 1;
                }
                if d == dims {
                    break;
                }
            }
            best = local_best;
            center = best.0.clone();
            half *= 0.5;
        }
        let (w, b) = best.0.split_at(config.dim);
        (w.to_vec(), b[0], best.1)
    }

    fn rec(x: &[f64], y: f64) -> Record {
        let mut r = x.to_vec();
        r.push(y);
        r
    }

    #[test]
    fn two_point_boundary_at_half() {
        let records = vec![rec(&[0.0], -1.0), rec(&[1.0], 1.0)];
        let config = SvmConfig::new(100.0, 1).unwrap();
        let model = svm_train(&records, &config).unwrap();
        assert!(model.converged);
        // Decision flips at x = 0.5.
        let crossing = -model.b / model.w[0];
        assert!((crossing - 0.5).abs() < 1e-3, "crossing={crossing}");
        // Objective matches the brute-force primal optimum.
        let (_, _, obj) = brute_force_primal(&records, &config, 8.0);
        let got = primal_objective(&records, &config, &model.w, model.b);
        assert!((got - obj).abs() < 1e-4, "objective {got} vs oracle {obj}");
    }

    #[test]
    fn all_positive_labels() {
        let records = vec![rec(&[0.1], 1.0), rec(&[0.4], 1.0), rec(&[0.9], 1.0)];
        let config = SvmConfig::new(3.0, 1).unwrap();
        let model = svm_train(&records, &config).unwrap();
        assert_eq!(model.w, vec![0.0]);
        assert_eq!(model.b, 1.0);
        // Brute-force oracle with minimal-|b| tie break agrees.
        let (w, b, _) = brute_force_primal(&records, &config, 4.0);
        assert!(w[0].abs() < 1e-6 && (b - 1.0).abs() < 1e-6);
    }

    #[test]
    fn matches_brute_force_on_small_sets() {
        let cases: Vec<(Vec<Record>, usize)> = vec![
            (vec![rec(&[0.2], -1.0), rec(&[0.3], -1.0), rec(&[0.8], 1.0)], 1),
            (
                vec![
                    rec(&[0.1, 0.2], -1.0),
                    rec(&[0.2, 0.1], -1.0),
                    rec(&[0.8, 0.9], 1.0),
                    rec(&[0.9, 0.7], 1.0),
                ],
                2,
            ),
            (vec![rec(&[0.4, 0.6], 1.0), rec(&[0.6, 0.4], -1.0)], 2),
        ];
        for (records, dim) in cases {
            let config = SvmConfig::new(3.0, dim).unwrap();
            let model = svm_train(&records, &config).unwrap();
            let (_, _, oracle_obj) = brute_force_primal(&records, &config, 8.0);
            let got = primal_objective(&records, &config, &model.w, model.b);
            assert!(
                got - oracle_obj <= 1e-4,
                "dim={dim}: objective {got} vs oracle {oracle_obj}"
            );
        }
    }

    #[test]
    fn duplicated_dataset_invariance() {
        let records = vec![
            rec(&[0.2, 0.3], -1.0),
            rec(&[0.1, 0.4], -1.0),
            rec(&[0.9, 0.8], 1.0),
            rec(&[0.7, 0.6], 1.0),
        ];
        let doubled: Vec<Record> = records.iter().chain(records.iter()).cloned().collect();
        let config = SvmConfig::new(3.0, 2).unwrap();
        let a = svm_train(&records, &config).unwrap();
        let b = svm_train(&doubled, &config).unwrap();
        for (x, y) in a.parameters().iter().zip(b.parameters()) {
            assert!((x - y).abs() < 1e-5, "{:?} vs {:?}", a.parameters(), b.parameters());
        }
    }

    #[test]
    fn deterministic() {
        let records = vec![
            rec(&[0.2, 0.3], -1.0),
            rec(&[0.9, 0.8], 1.0),
            rec(&[0.4, 0.5], 1.0),
            rec(&[0.5, 0.1], -1.0),
        ];
        let config = SvmConfig::new(3.0, 2).unwrap();
        let a = svm_train(&records, &config).unwrap();
        let b = svm_train(&records, &config).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn global_sensitivity_values() {
        assert!((svm_global_sensitivity(3.0, 2, 1000) - 10.509).abs() < 1e-3);
        assert!((svm_global_sensitivity(0.0, 5, 100) - 2.0).abs() < 1e-12);
        assert!((svm_global_sensitivity(3.0, 16, 1000) - 26.192).abs() < 1e-3);
    }

    #[test]
    fn rejects_bad_labels_and_features() {
        let config = SvmConfig::new(1.0, 1).unwrap();
        assert!(svm_train(&[rec(&[0.1], 0.5)], &config).is_err());
        assert!(svm_train(&[rec(&[f64::NAN], 1.0)], &config).is_err());
        assert!(svm_train(&[], &config).is_err());
    }

    #[test]
    fn irrelevant_extra_record_gives_zero_sensitivity() {
        // Neighbours that replace a duplicate record with another duplicate
        // leave the solution untouched.
        let base = vec![rec(&[0.2], -1.0), rec(&[0.8], 1.0), rec(&[0.2], -1.0)];
        let mut other = base.clone();
        other[2] = rec(&[0.2], -1.0);
        let config = SvmConfig::new(3.0, 1).unwrap();
        let a = svm_train(&base, &config).unwrap();
        let b = svm_train(&other, &config).unwrap();
        let diff: f64 = a
            .parameters()
            .iter()
            .zip(b.parameters())
            .map(|(x, y)| (x - y).abs())
            .sum();
        assert!(diff < 1e-9);
    }
}
