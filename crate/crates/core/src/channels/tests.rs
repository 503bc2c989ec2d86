use super::oracle::{quadrature_middle_denoise, quadrature_output_denoise, quadrature_prior_denoise};
use super::*;
use crate::special::LN_SQRT_2PI;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn close(a: f64, b: f64, rel: f64) -> bool {
    (a - b).abs() <= rel * b.abs().max(1e-3)
}

#[test]
fn gaussian_prior_symmetric_point() {
    let (h, s) = prior_denoise(&Prior::Gaussian { mean: 0.0, var: 1.0 }, 1.0, 0.0).unwrap();
    assert_eq!(h, 0.0);
    assert!((s - 0.5).abs() < 1e-15);
}

#[test]
fn full_slab_equals_gaussian() {
    let gb = Prior::GaussBernoulli { rho: 1.0 };
    for &(a, b) in &[(0.0, 0.3), (2.0, -1.0), (10.0, 4.0)] {
        let (h, s) = prior_denoise(&gb, a, b).unwrap();
        assert!((h - b / (a + 1.0)).abs() < 1e-14);
        assert!((s - 1.0 / (a + 1.0)).abs() < 1e-14);
    }
}

#[test]
fn gauss_bernoulli_matches_quadrature() {
    let prior = Prior::GaussBernoulli { rho: 0.25 };
    let (h, s) = prior_denoise(&prior, 2.0, 1.5).unwrap();
    let (hq, sq) = quadrature_prior_denoise(&prior, 2.0, 1.5).unwrap();
    assert!((h - hq).abs() < 1e-8, "{h} {hq}");
    assert!((s - sq).abs() < 1e-8, "{s} {sq}");
    let lz = quadrature_log_partition(&PartitionArgs::Prior { prior, a: 2.0, b: 1.5 }).unwrap();
    assert!((lz - prior.log_partition(2.0, 1.5)).abs() < 1e-8);
}

#[test]
fn rejects_negative_precision() {
    assert!(prior_denoise(&Prior::Gaussian { mean: 0.0, var: 1.0 }, -0.1, 0.0).is_err());
    assert!(output_denoise(&Channel::Awgn { sigma2: 0.1 }, 0.0, 0.0, 0.0).is_err());
    assert!(middle_denoise(&Channel::Relu, -1.0, 0.0, 1.0, 0.0).is_err());
    assert!(middle_denoise(&Channel::Relu, 1.0, 0.0, 0.0, 0.0).is_err());
    assert!(output_denoise(&Channel::Relu, -0.5, 1.0, 0.0).is_err());
    assert!(prior_denoise(&Prior::GaussBernoulli { rho: 1.5 }, 0.0, 0.0).is_err());
}

#[test]
fn awgn_output_examples() {
    let (g, _) = output_denoise(&Channel::Awgn { sigma2: 0.0 }, 0.7, 0.3, 0.7).unwrap();
    assert_eq!(g, 0.0);
    let (g, eta) = output_denoise(&Channel::Awgn { sigma2: 1e-4 }, 1.0, 0.5, 0.0).unwrap();
    assert!((g - 1.0 / 0.5001).abs() < 1e-12);
    assert!((eta + 1.0 / 0.5001).abs() < 1e-12);
}

#[test]
fn relu_output_matches_quadrature() {
    for &(y, v, w) in &[(0.3, 0.7, -0.2), (0.0, 0.7, -0.2), (0.0, 0.2, 1.5), (0.0, 1.0, -4.0)] {
        let (g, eta) = output_denoise(&Channel::Relu, y, v, w).unwrap();
        let (gq, etaq) = quadrature_output_denoise(&Channel::Relu, y, v, w).unwrap();
        assert!((g - gq).abs() < 1e-6, "g at {y},{v},{w}: {g} vs {gq}");
        assert!((eta - etaq).abs() < 1e-6, "eta at {y},{v},{w}: {eta} vs {etaq}");
    }
}

#[test]
fn noiseless_identity_middle() {
    let d = middle_denoise(&Channel::Awgn { sigma2: 0.0 }, 1.0, 0.0, 1.0, 0.0).unwrap();
    assert_eq!(d.h_hat, 0.0);
    assert!((d.sigma - 0.5).abs() < 1e-15);
    assert_eq!(d, middle_denoise(&Channel::Identity, 1.0, 0.0, 1.0, 0.0).unwrap());
}

#[test]
fn relu_deep_positive_region_is_identity() {
    let relu = middle_denoise(&Channel::Relu, 0.5, 0.2, 0.1, 10.0).unwrap();
    let lin = middle_denoise(&Channel::Identity, 0.5, 0.2, 0.1, 10.0).unwrap();
    assert!((relu.h_hat - lin.h_hat).abs() < 1e-6);
    assert!((relu.sigma - lin.sigma).abs() < 1e-6);
    assert!((relu.g - lin.g).abs() < 1e-6);
    assert!((relu.eta - lin.eta).abs() < 1e-6);
}

#[test]
fn relu_middle_matches_quadrature() {
    let (a, b, v, w) = (0.8, -0.3, 0.6, 0.1);
    let d = middle_denoise(&Channel::Relu, a, b, v, w).unwrap();
    let q = quadrature_middle_denoise(&Channel::Relu, a, b, v, w).unwrap();
    for (x, y) in [(d.h_hat, q.h_hat), (d.sigma, q.sigma), (d.g, q.g), (d.eta, q.eta)] {
        assert!((x - y).abs() < 1e-6, "{d:?} vs {q:?}");
    }
}

#[test]
fn awgn_middle_nested_quadrature() {
    let ch = Channel::Awgn { sigma2: 0.3 };
    let (a, b, v, w) = (1.3, 0.4, 0.5, -0.2);
    let d = middle_denoise(&ch, a, b, v, w).unwrap();
    let q = quadrature_middle_denoise(&ch, a, b, v, w).unwrap();
    for (x, y) in [(d.h_hat, q.h_hat), (d.sigma, q.sigma), (d.g, q.g), (d.eta, q.eta)] {
        assert!((x - y).abs() < 1e-7, "{d:?} vs {q:?}");
    }
}

#[test]
fn log_partition_oracle_examples() {
    let lz = quadrature_log_partition(&PartitionArgs::Prior {
        prior: Prior::Gaussian { mean: 0.0, var: 1.0 },
        a: 0.0,
        b: 0.0,
    })
    .unwrap();
    assert!(lz.abs() < 1e-10);

    let (y, v, w, s): (f64, f64, f64, f64) = (0.4, 0.3, -0.1, 0.01);
    let closed = -(y - w) * (y - w) / (2.0 * (v + s)) - 0.5 * (v + s).ln() - LN_SQRT_2PI;
    let lz = quadrature_log_partition(&PartitionArgs::Output { channel: Channel::Awgn { sigma2: s }, y, v, omega: w })
        .unwrap();
    assert!((lz - closed).abs() < 1e-9, "{lz} vs {closed}");

    // ReLU hidden layer at (A, B, V, ω) = (1, 0, 1, 0): half the mass has
    // h = 0 (weight 1/2); the other half is ∫_0^∞ N(z;0,1) e^{-z²/2} dz
    // = (1/√2)·(1/2).
    let analytic = (0.5 + 0.5 / 2f64.sqrt()).ln();
    let lz = quadrature_log_partition(&PartitionArgs::Middle { channel: Channel::Relu, a: 1.0, b: 0.0, v: 1.0, omega: 0.0 })
        .unwrap();
    assert!((lz - analytic).abs() < 1e-8);
    assert!((Channel::Relu.middle_log_partition(1.0, 0.0, 1.0, 0.0) - analytic).abs() < 1e-12);
}

#[test]
fn sampling_examples() {
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    assert_eq!(sample_channel(&Channel::Awgn { sigma2: 0.0 }, &[1.0, -2.0], &mut rng), vec![1.0, -2.0]);
    assert_eq!(sample_channel(&Channel::Relu, &[1.5, -0.7, 0.0], &mut rng), vec![1.5, 0.0, 0.0]);
    let h = sample_channel(&Channel::Awgn { sigma2: 1e-4 }, &vec![0.0; 1_000_000], &mut rng);
    let mean = h.iter().sum::<f64>() / h.len() as f64;
    let var = h.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / h.len() as f64;
    assert!((var - 1e-4).abs() / 1e-4 < 0.02, "{var}");
}

#[test]
fn recorded_noise_regenerates_sample() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let ch = Channel::Awgn { sigma2: 0.2 };
    let z: Vec<f64> = (0..50).map(|i| i as f64 * 0.1).collect();
    let (h, noise) = sample_channel_with_noise(&ch, &z, &mut rng);
    assert_eq!(apply_channel(&ch, &z, &noise), h);
}

#[test]
fn second_moments() {
    assert_eq!(Prior::GaussBernoulli { rho: 0.25 }.second_moment(), 0.25);
    assert_eq!(Channel::Relu.output_second_moment(1.0), 0.5);
    assert_eq!(Channel::Awgn { sigma2: 1e-4 }.output_second_moment(1.0), 1.0 + 1e-4);
    // Monte-Carlo check of E[max(Z,0)^2] = τ/2.
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let tau = 1.7;
    let z = Prior::Gaussian { mean: 0.0, var: tau }.sample(200_000, &mut rng);
    let m = z.iter().map(|x| x.max(0.0).powi(2)).sum::<f64>() / z.len() as f64;
    assert!((m - tau / 2.0).abs() / (tau / 2.0) < 0.02);
}

#[test]
fn config_json_shapes() {
    let c: Channel = serde_json::from_str(r#"{"type": "awgn", "sigma2": 1e-4}"#).unwrap();
    assert_eq!(c, Channel::Awgn { sigma2: 1e-4 });
    let c: Channel = serde_json::from_str(r#"{"type": "relu"}"#).unwrap();
    assert_eq!(c, Channel::Relu);
    let p: Prior = serde_json::from_str(r#"{"type": "gauss_bernoulli", "rho": 0.25}"#).unwrap();
    assert_eq!(p, Prior::GaussBernoulli { rho: 0.25 });
    let p: Prior = serde_json::from_str(r#"{"type": "gaussian", "mean": 0, "var": 1}"#).unwrap();
    assert_eq!(p, Prior::Gaussian { mean: 0.0, var: 1.0 });
    assert!(serde_json::from_str::<Channel>(r#"{"type": "awgn", "sigma2": 0.1, "x": 1}"#).is_err());
}

fn fd(f: impl Fn(f64) -> f64, x: f64) -> f64 {
    let h = 1e-5 * x.abs().max(1.0);
    (f(x + h) - f(x - h)) / (2.0 * h)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn prior_derivatives_consistent(rho in 0.05f64..1.0, a in 0.0f64..20.0, b in -5.0f64..5.0) {
        let prior = Prior::GaussBernoulli { rho };
        let (h, s) = prior.denoise_raw(a, b);
        prop_assert!(close(h, fd(|bb| prior.log_partition(a, bb), b), 1e-5));
        prop_assert!(close(s, fd(|bb| prior.denoise_raw(a, bb).0, b), 1e-5));
        prop_assert!(s >= 0.0);
        prop_assert!(prior.denoise_raw(a, b + 0.1).0 >= h);
    }

    #[test]
    fn relu_middle_derivatives_consistent(a in 0.0f64..5.0, b in -3.0f64..3.0, v in 0.05f64..3.0, w in -3.0f64..3.0) {
        let ch = Channel::Relu;
        let d = ch.middle_denoise_raw(a, b, v, w);
        prop_assert!(close(d.h_hat, fd(|bb| ch.middle_log_partition(a, bb, v, w), b), 1e-5));
        prop_assert!(close(d.sigma, fd(|bb| ch.middle_denoise_raw(a, bb, v, w).h_hat, b), 1e-5));
        prop_assert!(close(d.g, fd(|ww| ch.middle_log_partition(a, b, v, ww), w), 1e-5));
        prop_assert!(close(d.eta, fd(|ww| ch.middle_denoise_raw(a, b, v, ww).g, w), 1e-5));
        prop_assert!(d.sigma >= 0.0);
        if b <= 0.0 {
            prop_assert!(d.eta <= 0.0);
        }
    }

    #[test]
    fn relu_output_derivatives_consistent(v in 0.05f64..3.0, w in -4.0f64..4.0, y in prop_oneof![Just(0.0), 0.01f64..3.0]) {
        let ch = Channel::Relu;
        let (g, eta) = ch.output_denoise_raw(y, v, w);
        prop_assert!(close(g, fd(|ww| ch.output_log_partition(y, v, ww), w), 1e-5));
        prop_assert!(close(eta, fd(|ww| ch.output_denoise_raw(y, v, ww).0, w), 1e-5));
        prop_assert!(eta <= 0.0);
    }
}
