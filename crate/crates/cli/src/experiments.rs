//! Experiment harness: each experiment is a pure function of its
//! configuration (including the master seed) that produces a versioned CSV
//! table, byte-identical across runs and thread counts.

use rayon::prelude::*;

use sensikit::mechanisms::{
    bernstein_evaluate_lattice, bernstein_noise_scale, laplace_noise, laplace_release,
    DegeneratePolicy, ReleasePayload,
};
use sensikit::planner::{plan_min_k, plan_min_m};
use sensikit::sampler::{estimate_delta, sample_sensitivity, substream};
use sensikit::targets::{
    gen_exponential, gen_gaussian_mixture, gen_two_gaussians, gen_uniform_cube, kde_target,
    mean_target, svm_global_sensitivity, svm_target, svm_train, KdeConfig, SvmConfig,
};
use sensikit::{Error, Record, RecordSampler, Result, TargetFunction};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExperimentKind {
    AnalyticVsSampled,
    BoundedMean,
    SvmSensitivity,
    SvmUtility,
    KdeUtility,
}

impl ExperimentKind {
    pub fn id(&self) -> &'static str {
        match self {
            ExperimentKind::AnalyticVsSampled => "analytic_vs_sampled",
            ExperimentKind::BoundedMean => "bounded_mean",
            ExperimentKind::SvmSensitivity => "svm_sensitivity",
            ExperimentKind::SvmUtility => "svm_utility",
            ExperimentKind::KdeUtility => "kde_utility",
        }
    }

    pub fn from_id(s: &str) -> Result<Self> {
        match s {
            "analytic_vs_sampled" => Ok(ExperimentKind::AnalyticVsSampled),
            "bounded_mean" => Ok(ExperimentKind::BoundedMean),
            "svm_sensitivity" => Ok(ExperimentKind::SvmSensitivity),
            "svm_utility" => Ok(ExperimentKind::SvmUtility),
            "kde_utility" => Ok(ExperimentKind::KdeUtility),
            other => Err(Error::Parse(format!("unknown experiment {other:?}"))),
        }
    }
}

#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub kind: ExperimentKind,
    pub master_seed: u64,
    pub repeats: u64,
    pub gammas: Vec<f64>,
    pub epsilons: Vec<f64>,
    pub dims: Vec<usize>,
    pub ms: Vec<u64>,
    pub paper_scale: bool,
}

impl ExperimentConfig {
    /// Desk-scale defaults per experiment; `paper_scale` restores the
    /// full-size budgets.
    pub fn new(kind: ExperimentKind, master_seed: u64, paper_scale: bool) -> Self {
        let mut config = Self {
            kind,
            master_seed,
            repeats: 1,
            gammas: Vec::new(),
            epsilons: Vec::new(),
            dims: Vec::new(),
            ms: Vec::new(),
            paper_scale,
        };
        match kind {
            ExperimentKind::AnalyticVsSampled => {
                config.gammas = vec![0.05, 0.1, 0.2, 0.3];
                config.repeats = 50;
            }
            ExperimentKind::BoundedMean => {
                config.ms = vec![100, 1500, 5000];
                config.repeats = 5;
            }
            ExperimentKind::SvmSensitivity => {
                config.dims = vec![2, 4, 8];
                config.ms = vec![1500];
                config.repeats = 1;
            }
            ExperimentKind::SvmUtility => {
                config.epsilons = vec![0.1, 0.3, 1.0, 3.0, 10.0];
                config.gammas = vec![0.05];
                config.ms = vec![1500];
                config.repeats = if paper_scale { 500 } else { 100 };
            }
            ExperimentKind::KdeUtility => {
                config.epsilons = vec![0.1, 1.0, 100.0];
                config.gammas = vec![0.1];
                config.ms = vec![if paper_scale { 50_000 } else { 5_000 }];
                config.repeats = 20;
            }
        }
        config
    }

    fn validate(&self) -> Result<()> {
        if self.repeats < 1 {
            return Err(Error::Domain("repeats must be >= 1".into()));
        }
        Ok(())
    }

    /// Database size n per experiment.
    fn n(&self) -> usize {
        match self.kind {
            ExperimentKind::AnalyticVsSampled => 1000,
            ExperimentKind::BoundedMean => 500,
            ExperimentKind::SvmSensitivity | ExperimentKind::SvmUtility => {
                if self.paper_scale {
                    1000
                } else {
                    200
                }
            }
            ExperimentKind::KdeUtility => 1000,
        }
    }
}

/// Splitmix64 step, used to fold grid coordinates into per-task seeds so
/// that no two tasks share an RNG stream family.
fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e3779b97f4a7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
    z ^ (z >> 31)
}

pub fn derive_seed(master: u64, parts: &[u64]) -> u64 {
    let mut state = splitmix64(master);
    for part in parts {
        state = splitmix64(state ^ *part);
    }
    state
}

fn draw_database(p: &dyn RecordSampler, n: usize, seed: u64) -> Vec<Record> {
    let mut rng = substream(seed, 0);
    (0..n).map(|_| p.draw(&mut rng)).collect()
}

struct Csv {
    text: String,
}

impl Csv {
    fn new(kind: ExperimentKind, columns: &[&str]) -> Self {
        let mut text = format!("# sensikit-experiment v1 {}\n", kind.id());
        text.push_str(&columns.join(","));
        text.push('\n');
        Csv { text }
    }

    fn row(&mut self, cells: &[String]) {
        self.text.push_str(&cells.join(","));
        self.text.push('\n');
    }
}

fn fmt(v: f64) -> String {
    v.to_string()
}

pub fn run_experiment(config: &ExperimentConfig) -> Result<String> {
    config.validate()?;
    match config.kind {
        ExperimentKind::AnalyticVsSampled => analytic_vs_sampled(config),
        ExperimentKind::BoundedMean => bounded_mean(config),
        ExperimentKind::SvmSensitivity => svm_sensitivity(config),
        ExperimentKind::SvmUtility => svm_utility(config),
        ExperimentKind::KdeUtility => kde_utility(config),
    }
}

/// Scalar mean of Exp(1) records: the neighbour sensitivity is |X - Y|/n
/// with |X - Y| again Exp(1), so the exact (1-gamma)-quantile is
/// log(1/gamma)/n. Compare the planned estimator against it.
fn analytic_vs_sampled(config: &ExperimentConfig) -> Result<String> {
    let n = config.n();
    let target = mean_target(1, n);
    let p = gen_exponential(1.0)?;
    let mut csv = Csv::new(
        config.kind,
        &["gamma", "m", "k", "delta_analytic", "delta_sampled_mean", "delta_sampled_sd"],
    );
    for (gi, &gamma) in config.gammas.iter().enumerate() {
        let plan = plan_min_m(gamma)?;
        let deltas: Vec<f64> = (0..config.repeats)
            .into_par_iter()
            .map(|r| {
                let seed = derive_seed(config.master_seed, &[gi as u64, r]);
                let sample = sample_sensitivity(&target, &p, plan.m, seed)?;
                estimate_delta(&sample, plan.k)
            })
            .collect::<Result<_>>()?;
        let mean = deltas.iter().sum::<f64>() / deltas.len() as f64;
        let var = deltas.iter().map(|d| (d - mean) * (d - mean)).sum::<f64>()
            / deltas.len() as f64;
        csv.row(&[
            fmt(gamma),
            plan.m.to_string(),
            plan.k.to_string(),
            fmt((1.0 / gamma).ln() / n as f64),
            fmt(mean),
            fmt(var.sqrt()),
        ]);
    }
    Ok(csv.text)
}

/// Mean of uniform records on [0,1]: every sampled sensitivity must sit
/// below the analytic global bound 1/n.
fn bounded_mean(config: &ExperimentConfig) -> Result<String> {
    let n = config.n();
    let target = mean_target(1, n).with_unit_cube_bound();
    let p = gen_uniform_cube(1)?;
    let bound = target.global_bound().expect("unit cube bound");
    let mut csv = Csv::new(config.kind, &["m", "repeat", "g_max", "delta_global"]);
    for (mi, &m) in config.ms.iter().enumerate() {
        for r in 0..config.repeats {
            let seed = derive_seed(config.master_seed, &[mi as u64, r]);
            let sample = sample_sensitivity(&target, &p, m, seed)?;
            let g_max = *sample.values().last().expect("nonempty sample");
            csv.row(&[m.to_string(), r.to_string(), fmt(g_max), fmt(bound)]);
        }
    }
    Ok(csv.text)
}

/// Sampled SVM sensitivity against the analytic global bound across
/// dimensions.
fn svm_sensitivity(config: &ExperimentConfig) -> Result<String> {
    let n = config.n();
    let c = 3.0;
    let m = *config.ms.first().ok_or_else(|| Error::Domain("m grid empty".into()))?;
    let mut csv =
        Csv::new(config.kind, &["d", "n", "c", "m", "g_median", "g_max", "delta_global"]);
    for (di, &d) in config.dims.iter().enumerate() {
        let target = svm_target(SvmConfig::new(c, d)?, n);
        let p = gen_two_gaussians(d)?;
        let seed = derive_seed(config.master_seed, &[di as u64]);
        let sample = sample_sensitivity(&target, &p, m, seed)?;
        let values = sample.values();
        csv.row(&[
            d.to_string(),
            n.to_string(),
            fmt(c),
            m.to_string(),
            fmt(values[values.len() / 2]),
            fmt(*values.last().expect("nonempty sample")),
            fmt(svm_global_sensitivity(c, d, n)),
        ]);
    }
    Ok(csv.text)
}

fn misclassification(w: &[f64], b: f64, test: &[Record]) -> f64 {
    let errors = test
        .iter()
        .filter(|record| {
            let (features, label) = record.split_at(record.len() - 1);
            let score: f64 = w.iter().zip(features).map(|(wi, xi)| wi * xi).sum::<f64>() + b;
            score * label[0] <= 0.0
        })
        .count();
    errors as f64 / test.len() as f64
}

/// Private SVM release: misclassification error of the Laplace-noised
/// parameters under the sampled sensitivity vs the global bound.
fn svm_utility(config: &ExperimentConfig) -> Result<String> {
    let n = config.n();
    let d = 2;
    let c = 3.0;
    let gamma =
        *config.gammas.first().ok_or_else(|| Error::Domain("gamma grid empty".into()))?;
    let m = *config.ms.first().ok_or_else(|| Error::Domain("m grid empty".into()))?;
    let plan = plan_min_k(m, gamma)?;
    let svm_config = SvmConfig::new(c, d)?;
    let target = svm_target(svm_config, n);
    let p = gen_two_gaussians(d)?;

    let sample =
        sample_sensitivity(&target, &p, plan.m, derive_seed(config.master_seed, &[0]))?;
    let delta_hat = estimate_delta(&sample, plan.k)?;
    let delta_global = svm_global_sensitivity(c, d, n);
    let test = draw_database(&p, 2000, derive_seed(config.master_seed, &[1]));

    let mut csv = Csv::new(
        config.kind,
        &[
            "epsilon",
            "gamma",
            "m",
            "k",
            "delta_hat",
            "delta_global",
            "error_nonprivate",
            "error_sampled",
            "error_global",
        ],
    );
    for (ei, &epsilon) in config.epsilons.iter().enumerate() {
        let errors: Vec<(f64, f64, f64)> = (0..config.repeats)
            .into_par_iter()
            .map(|r| -> Result<(f64, f64, f64)> {
                let seed = derive_seed(config.master_seed, &[2, ei as u64, r]);
                let train = draw_database(&p, n, seed);
                let model = svm_train(&train, &svm_config)?;
                let params = model.parameters();
                let noised = |delta: f64, stream: u64| -> Result<Vec<f64>> {
                    let mut rng = substream(seed, stream);
                    let release = laplace_release(
                        &params,
                        delta,
                        epsilon,
                        &mut rng,
                        DegeneratePolicy::Reject,
                    )?;
                    match release.payload {
                        ReleasePayload::Vector(v) => Ok(v),
                        _ => unreachable!("laplace releases vectors"),
                    }
                };
                let sampled = noised(delta_hat, 1)?;
                let global = noised(delta_global, 2)?;
                Ok((
                    misclassification(&model.w, model.b, &test),
                    misclassification(&sampled[..d], sampled[d], &test),
                    misclassification(&global[..d], global[d], &test),
                ))
            })
            .collect::<Result<_>>()?;
        let reps = errors.len() as f64;
        let (non, samp, glob) = errors.iter().fold((0.0, 0.0, 0.0), |acc, e| {
            (acc.0 + e.0, acc.1 + e.1, acc.2 + e.2)
        });
        csv.row(&[
            fmt(epsilon),
            fmt(gamma),
            plan.m.to_string(),
            plan.k.to_string(),
            fmt(delta_hat),
            fmt(delta_global),
            fmt(non / reps),
            fmt(samp / reps),
            fmt(glob / reps),
        ]);
    }
    Ok(csv.text)
}

/// Private KDE release via the Bernstein mechanism: sup-error over a fine
/// grid against the non-private density estimate, with sampled vs global
/// noise calibration, at Bernstein orders 1 and 3.
fn kde_utility(config: &ExperimentConfig) -> Result<String> {
    let n = config.n();
    let lattice = 10;
    let fine = 200;
    let kde_config = KdeConfig::new(0.05, lattice)?;
    let coarse = kde_target(kde_config, n);
    let truth = kde_target(KdeConfig::new(0.05, fine)?, n);
    let p = gen_gaussian_mixture();
    let gamma =
        *config.gammas.first().ok_or_else(|| Error::Domain("gamma grid empty".into()))?;
    let m = *config.ms.first().ok_or_else(|| Error::Domain("m grid empty".into()))?;
    let plan = plan_min_k(m, gamma)?;

    let sample =
        sample_sensitivity(&coarse, &p, plan.m, derive_seed(config.master_seed, &[0]))?;
    let delta_hat = estimate_delta(&sample, plan.k)?;
    let delta_global = coarse.global_bound().expect("kde global bound");

    let grid: Vec<Vec<f64>> = (0..=fine).map(|j| vec![j as f64 / fine as f64]).collect();
    let sup = |a: &[f64], b: &[f64]| -> f64 {
        a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
    };

    let mut csv = Csv::new(
        config.kind,
        &[
            "epsilon",
            "order",
            "m",
            "k",
            "delta_hat",
            "delta_global",
            "error_noiseless",
            "error_sampled",
            "error_global",
        ],
    );
    for order in [1usize, 3] {
        for (ei, &epsilon) in config.epsilons.iter().enumerate() {
            let errors: Vec<(f64, f64, f64)> = (0..config.repeats)
                .into_par_iter()
                .map(|r| -> Result<(f64, f64, f64)> {
                    let seed =
                        derive_seed(config.master_seed, &[1, order as u64, ei as u64, r]);
                    let db = draw_database(&p, n, seed);
                    let g = coarse.eval(&db)?;
                    let reference = truth.eval(&db)?;

                    // Common random numbers: one unit noise vector per
                    // repeat, scaled by each calibration, so the error
                    // comparison reflects the noise scales and not the
                    // luck of independent draws.
                    let unit_noise: Vec<f64> = {
                        let mut rng = substream(seed, 1);
                        (0..g.len()).map(|_| laplace_noise(&mut rng, 1.0)).collect()
                    };
                    let evaluate = |values: &[f64]| -> Result<Vec<f64>> {
                        grid.iter()
                            .map(|x| bernstein_evaluate_lattice(values, lattice, 1, order, x))
                            .collect()
                    };
                    let released = |delta: f64| -> Result<Vec<f64>> {
                        let scale = bernstein_noise_scale(delta, lattice, 1, epsilon);
                        let noisy: Vec<f64> =
                            g.iter().zip(&unit_noise).map(|(v, z)| v + scale * z).collect();
                        evaluate(&noisy)
                    };
                    let noiseless = evaluate(&g)?;
                    let sampled = released(delta_hat)?;
                    let global = released(delta_global)?;
                    Ok((
                        sup(&noiseless, &reference),
                        sup(&sampled, &reference),
                        sup(&global, &reference),
                    ))
                })
                .collect::<Result<_>>()?;
            let reps = errors.len() as f64;
            let (noiseless, samp, glob) = errors.iter().fold((0.0, 0.0, 0.0), |acc, e| {
                (acc.0 + e.0, acc.1 + e.1, acc.2 + e.2)
            });
            csv.row(&[
                fmt(epsilon),
                order.to_string(),
                plan.m.to_string(),
                plan.k.to_string(),
                fmt(delta_hat),
                fmt(delta_global),
                fmt(noiseless / reps),
                fmt(samp / reps),
                fmt(glob / reps),
            ]);
        }
    }
    Ok(csv.text)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn derived_seeds_do_not_collide_trivially() {
        let a = derive_seed(1, &[0, 0]);
        let b = derive_seed(1, &[0, 1]);
        let c = derive_seed(2, &[0, 0]);
        assert_ne!(a, b);
        assert_ne!(a, c);
        assert_eq!(a, derive_seed(1, &[0, 0]));
    }

    #[test]
    fn experiment_ids_round_trip() {
        for kind in [
            ExperimentKind::AnalyticVsSampled,
            ExperimentKind::BoundedMean,
            ExperimentKind::SvmSensitivity,
            ExperimentKind::SvmUtility,
            ExperimentKind::KdeUtility,
        ] {
            assert_eq!(ExperimentKind::from_id(kind.id()).unwrap(), kind);
        }
        assert!(ExperimentKind::from_id("fig4").is_err());
    }

    #[test]
    fn bounded_mean_stays_under_the_bound() {
        let mut config = ExperimentConfig::new(ExperimentKind::BoundedMean, 11, false);
        config.ms = vec![200];
        config.repeats = 2;
        let csv = run_experiment(&config).unwrap();
        let mut rows = 0;
        for line in csv.lines().skip(2) {
            let cells: Vec<&str> = line.split(',').collect();
            let g_max: f64 = cells[2].parse().unwrap();
            let bound: f64 = cells[3].parse().unwrap();
            assert!(g_max <= bound, "{line}");
            rows += 1;
        }
        assert_eq!(rows, 2);
    }

    #[test]
    fn csv_header_and_determinism() {
        let mut config = ExperimentConfig::new(ExperimentKind::AnalyticVsSampled, 3, false);
        config.gammas = vec![0.3];
        config.repeats = 3;
        let a = run_experiment(&config).unwrap();
        let b = run_experiment(&config).unwrap();
        assert_eq!(a, b);
        let mut lines = a.lines();
        assert_eq!(lines.next().unwrap(), "# sensikit-experiment v1 analytic_vs_sampled");
        assert_eq!(
            lines.next().unwrap(),
            "gamma,m,k,delta_analytic,delta_sampled_mean,delta_sampled_sd"
        );
    }
}
