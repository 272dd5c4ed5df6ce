//! Distributional and calibration checks for the release mechanisms.

use sensikit::mechanisms::{
    bernstein_evaluate, bernstein_noise_scale, bernstein_release, exponential_probabilities,
    exponential_release, gaussian_release, gaussian_sigma, laplace_noise, laplace_release,
    DegeneratePolicy, Release, ReleasePayload,
};
use sensikit::sampler::substream;

#[test]
fn laplace_noise_variance() {
    let mut rng = substream(1, 0);
    let scale = 2.0;
    let m = 100_000;
    let draws: Vec<f64> = (0..m).map(|_| laplace_noise(&mut rng, scale)).collect();
    let mean = draws.iter().sum::<f64>() / m as f64;
    let var = draws.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / m as f64;
    // Laplace(scale) has variance 2 scale^2 = 8.
    assert!(mean.abs() < 0.05, "mean={mean}");
    assert!((var - 8.0).abs() / 8.0 < 0.05, "var={var}");
}

#[test]
fn laplace_noise_matches_analytic_cdf() {
    let mut rng = substream(2, 0);
    let scale = 1.0;
    let m = 200_000;
    let mut draws: Vec<f64> = (0..m).map(|_| laplace_noise(&mut rng, scale)).collect();
    draws.sort_by(f64::total_cmp);
    for q in [-2.0, -1.0, -0.5, 0.0, 0.5, 1.0, 2.0] {
        let analytic = if q < 0.0 { 0.5 * (q / scale).exp() } else { 1.0 - 0.5 * (-q / scale).exp() };
        let empirical = draws.partition_point(|x| *x <= q) as f64 / m as f64;
        assert!((empirical - analytic).abs() < 0.005, "q={q} emp={empirical} ana={analytic}");
    }
}

#[test]
fn tiny_sensitivity_means_tiny_noise() {
    let mut rng = substream(3, 0);
    let value = vec![10.0, -3.0];
    let release =
        laplace_release(&value, 1e-12, 1.0, &mut rng, DegeneratePolicy::Reject).unwrap();
    let ReleasePayload::Vector(noisy) = &release.payload else { panic!() };
    for (v, nv) in value.iter().zip(noisy) {
        assert!((v - nv).abs() < 1e-9);
    }
}

#[test]
fn gaussian_sigma_value_and_domain() {
    // sqrt(2 ln(1.25/1e-5)) / 0.5, within the deliberate safety factor.
    let sigma = gaussian_sigma(1.0, 0.5, 1e-5).unwrap();
    let boundary = (2.0 * (1.25e5f64).ln()).sqrt() / 0.5;
    assert!(sigma > boundary);
    assert!((sigma - boundary) / boundary < 1e-5, "sigma={sigma}");

    assert!(gaussian_sigma(1.0, 1.0, 1e-5).is_err());
    assert!(gaussian_sigma(1.0, 0.5, 0.0).is_err());
    assert!(gaussian_sigma(1.0, 0.5, 1.0).is_err());
}

#[test]
fn gaussian_noise_variance() {
    let mut rng = substream(4, 0);
    let m = 100_000;
    let sigma = gaussian_sigma(0.01, 0.5, 1e-4).unwrap();
    let mut sum = 0.0;
    let mut sumsq = 0.0;
    for _ in 0..m {
        let release =
            gaussian_release(&[0.0], 0.01, 0.5, 1e-4, &mut rng, DegeneratePolicy::Reject).unwrap();
        let ReleasePayload::Vector(v) = release.payload else { panic!() };
        sum += v[0];
        sumsq += v[0] * v[0];
    }
    let mean = sum / m as f64;
    let var = sumsq / m as f64 - mean * mean;
    assert!((var - sigma * sigma).abs() / (sigma * sigma) < 0.05, "var={var}");
}

#[test]
fn exponential_probabilities_two_point() {
    // scores (1, 0), delta = 1, epsilon = 2: weights (e, 1).
    let probs = exponential_probabilities(&[1.0, 0.0], 1.0, 2.0).unwrap();
    let e = std::f64::consts::E;
    assert!((probs[0] - e / (1.0 + e)).abs() < 1e-12);
    assert!((probs[1] - 1.0 / (1.0 + e)).abs() < 1e-12);
}

#[test]
fn exponential_probabilities_survive_extreme_scores() {
    let probs = exponential_probabilities(&[1e6, 0.0, -1e6], 1e-3, 1.0).unwrap();
    assert!((probs.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    assert!((probs[0] - 1.0).abs() < 1e-12);
}

#[test]
fn exponential_release_frequencies() {
    let scores = [1.0, 0.0];
    let mut rng = substream(5, 0);
    let m = 50_000;
    let mut hits = 0;
    for _ in 0..m {
        let release =
            exponential_release(&scores, 1.0, 2.0, &mut rng, DegeneratePolicy::Reject).unwrap();
        let ReleasePayload::Choice(i) = release.payload else { panic!() };
        if i == 0 {
            hits += 1;
        }
    }
    let freq = hits as f64 / m as f64;
    let e = std::f64::consts::E;
    assert!((freq - e / (1.0 + e)).abs() < 0.01, "freq={freq}");
}

#[test]
fn exponential_degenerate_takes_argmax() {
    let mut rng = substream(6, 0);
    let release = exponential_release(
        &[0.2, 0.9, 0.4],
        0.0,
        1.0,
        &mut rng,
        DegeneratePolicy::ReleaseUnnoised,
    )
    .unwrap();
    assert!(release.degenerate);
    assert_eq!(release.payload, ReleasePayload::Choice(1));
}

#[test]
fn bernstein_scale_and_release() {
    assert_eq!(bernstein_noise_scale(0.5, 3, 2, 0.25), 0.5 * 16.0 / 0.25);

    let lattice: Vec<f64> = (0..=4).map(|i| i as f64 / 4.0).collect(); // identity on [0,1]
    let mut rng = substream(7, 0);
    let release = bernstein_release(
        &lattice,
        4,
        1,
        1,
        1e-12,
        1.0,
        &mut rng,
        DegeneratePolicy::Reject,
    )
    .unwrap();
    // Near-zero noise: evaluation reproduces the affine function.
    let at = bernstein_evaluate(&release, &[0.3]).unwrap();
    assert!((at - 0.3).abs() < 1e-9, "at={at}");

    // Size validation.
    let mut rng = substream(7, 1);
    assert!(bernstein_release(&lattice, 5, 1, 1, 1.0, 1.0, &mut rng, DegeneratePolicy::Reject)
        .is_err());
}

#[test]
fn degenerate_reject_fires_for_all_mechanisms() {
    let mut rng = substream(8, 0);
    assert!(laplace_release(&[1.0], 0.0, 1.0, &mut rng, DegeneratePolicy::Reject).is_err());
    assert!(
        gaussian_release(&[1.0], 0.0, 0.5, 1e-5, &mut rng, DegeneratePolicy::Reject).is_err()
    );
    assert!(exponential_release(&[1.0], 0.0, 1.0, &mut rng, DegeneratePolicy::Reject).is_err());
}

#[test]
fn release_serialization_round_trips() {
    let mut rng = substream(9, 0);
    let vector =
        laplace_release(&[1.5, -2.0], 0.1, 1.0, &mut rng, DegeneratePolicy::Reject).unwrap();
    let choice =
        exponential_release(&[0.1, 0.7], 0.1, 1.0, &mut rng, DegeneratePolicy::Reject).unwrap();
    let lattice: Vec<f64> = vec![0.0, 0.5, 1.0];
    let bern = bernstein_release(&lattice, 2, 1, 2, 0.1, 1.0, &mut rng, DegeneratePolicy::Reject)
        .unwrap();

    for release in [vector, choice, bern] {
        let mut bytes = Vec::new();
        release.write_to(&mut bytes).unwrap();
        let reread = Release::read_from(&bytes[..]).unwrap();
        assert_eq!(reread, release);
    }
}
