use approx::assert_abs_diff_eq;

use equidisp::numerics::{integrate_real_line, QuadConfig, RandomStream};
use equidisp::univariate::*;
use equidisp::Error;

#[test]
fn logpdf_examples() {
    let one = Tau::new(1.0).unwrap();
    assert_abs_diff_eq!(
        ueq_logpdf(1.0, one),
        -0.918_938_533_204_672_8,
        epsilon = 1e-12
    );
    assert_abs_diff_eq!(
        ueq_logpdf(0.0, one),
        -1.418_938_533_204_672,
        epsilon = 1e-12
    );
}

#[test]
fn density_is_normalized() {
    for t in [0.1, 1.0, 2.0, 10.0] {
        let tau = Tau::new(t).unwrap();
        let v = integrate_real_line(
            |x| ueq_logpdf(x, tau).exp(),
            t,
            t.sqrt(),
            &QuadConfig::default(),
        )
        .unwrap();
        assert_abs_diff_eq!(v, 1.0, epsilon = 1e-8);
    }
}

#[test]
fn mle_examples() {
    let r2 = 2f64.sqrt();
    assert_abs_diff_eq!(ueq_mle(&[r2, -r2]).unwrap().get(), 1.0, epsilon = 1e-12);
    assert_abs_diff_eq!(ueq_mle(&[0.0, 2.0]).unwrap().get(), 1.0, epsilon = 1e-12);
    assert!(matches!(
        ueq_mle(&[0.0, 0.0]),
        Err(Error::DegenerateSample(_))
    ));
    assert!(ueq_mle(&[]).is_err());
}

#[test]
fn invalid_tau_rejected() {
    assert!(Tau::new(0.0).is_err());
    assert!(Tau::new(-1.0).is_err());
    assert!(Tau::new(f64::NAN).is_err());
}

#[test]
fn lrt_exact_case() {
    let r = ueq_lrt(&[0.0, 2.0]).unwrap();
    assert_abs_diff_eq!(r.tau_hat, 1.0, epsilon = 1e-12);
    assert_abs_diff_eq!(r.lambda, 1.0, epsilon = 1e-12);
    assert_abs_diff_eq!(r.stat, 0.0, epsilon = 1e-12);
    assert_abs_diff_eq!(r.p_value, 1.0, epsilon = 1e-6);
}

#[test]
fn lrt_constant_sample_is_degenerate() {
    assert!(matches!(
        ueq_lrt(&[3.0, 3.0, 3.0]),
        Err(Error::DegenerateSample(_))
    ));
    assert!(ueq_lrt(&[3.0]).is_err());
}

#[test]
fn lrt_rejects_overdispersion_violation() {
    let mut rng = RandomStream::new(11, 0);
    let xs: Vec<f64> = (0..2000).map(|_| rng.normal(5.0, 1.0)).collect();
    assert!(ueq_lrt(&xs).unwrap().p_value < 1e-3);
}

#[test]
fn sample_moments_and_determinism() {
    let tau = Tau::new(1.0).unwrap();
    let n = 100_000;
    let xs = ueq_sample(tau, n, &mut RandomStream::new(5, 0));
    let mean = xs.iter().sum::<f64>() / n as f64;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    assert!((mean - 1.0).abs() < 3.0 * (1.0 / n as f64).sqrt());
    assert!((var - 1.0).abs() < 0.05);
    assert_eq!(xs, ueq_sample(tau, n, &mut RandomStream::new(5, 0)));
}

mod props {
    use super::*;
    use proptest::prelude::*;

    proptest! {
        #[test]
        fn mle_solves_the_quadratic(xs in prop::collection::vec(-50.0f64..50.0, 1..40)) {
            prop_assume!(xs.iter().any(|x| x.abs() > 1e-3));
            let tau = ueq_mle(&xs).unwrap().get();
            let m2 = xs.iter().map(|x| x * x).sum::<f64>() / xs.len() as f64;
            prop_assert!((tau * tau + tau - m2).abs() <= 1e-12 * m2.max(1.0));
            let score = ueq_score(&xs, Tau::new(tau).unwrap());
            let scale = xs.len() as f64 * (1.0 + m2 / (tau * tau));
            prop_assert!(score.abs() <= 1e-8 * scale);
        }

        #[test]
        fn lambda_never_exceeds_one(xs in prop::collection::vec(-20.0f64..20.0, 2..40)) {
            let mean = xs.iter().sum::<f64>() / xs.len() as f64;
            prop_assume!(xs.iter().any(|x| (x - mean).abs() > 1e-6));
            let r = ueq_lrt(&xs).unwrap();
            prop_assert!(r.lambda <= 1.0 && r.lambda > 0.0 || r.lambda == 0.0);
            prop_assert!(r.stat >= 0.0);
        }
    }
}
