use approx::assert_abs_diff_eq;

use equidisp::conditionals::*;
use equidisp::model::EquiDispParams;
use equidisp::Error;

fn equidisp(alpha: f64, beta: f64, gamma: f64) -> NcMatrix {
    NcMatrix::from_equidisp(&EquiDispParams::new(alpha, beta, gamma).unwrap())
}

#[test]
fn classification_examples() {
    let general = NcMatrix::zeros()
        .with(2, 2, 1.0)
        .with(0, 2, 1.0)
        .with(2, 0, 1.0);
    assert_eq!(validate_nc(&general), Classification::GeneralNc);

    let breach = NcMatrix::zeros()
        .with(2, 2, 1.0)
        .with(1, 2, 3.0)
        .with(0, 2, 1.0);
    match validate_nc(&breach) {
        Classification::Invalid(r) => assert!(r.contains("4 a22 a02 > a12^2")),
        other => panic!("unexpected {other:?}"),
    }
    assert!(matches!(
        validate_nc(&NcMatrix::zeros()),
        Classification::Invalid(_)
    ));

    let classical = NcMatrix::zeros()
        .with(2, 0, 1.0)
        .with(0, 2, 1.0)
        .with(1, 1, 0.5);
    assert_eq!(
        validate_nc(&classical),
        Classification::ClassicalBivariateNormal
    );
    let indefinite = classical.with(1, 1, 3.0);
    assert!(matches!(
        validate_nc(&indefinite),
        Classification::Invalid(_)
    ));
}

#[test]
fn conditional_moments_of_equidisp_embedding() {
    let m = equidisp(1.0, 4.0, 5.0);
    let (mean, var) = nc_conditional_moments(&m, Axis::XGivenY, 0.0).unwrap();
    assert_abs_diff_eq!(mean, 0.5, epsilon = 1e-15);
    assert_abs_diff_eq!(var, 0.5, epsilon = 1e-15);
    let (mean, var) = nc_conditional_moments(&m, Axis::YGivenX, 1.0).unwrap();
    assert_abs_diff_eq!(mean, 1.0 / 18.0, epsilon = 1e-15);
    assert_abs_diff_eq!(var, 1.0 / 18.0, epsilon = 1e-15);
}

#[test]
fn classical_variance_is_constant() {
    let m = NcMatrix::zeros()
        .with(2, 0, 1.5)
        .with(0, 2, 0.7)
        .with(1, 1, 0.3)
        .with(1, 0, 0.2);
    let v0 = nc_conditional_moments(&m, Axis::XGivenY, -3.0).unwrap().1;
    for t in [-1.0, 0.0, 2.0, 10.0] {
        assert_eq!(nc_conditional_moments(&m, Axis::XGivenY, t).unwrap().1, v0);
    }
}

#[test]
fn nonpositive_denominator_is_an_error() {
    let m = NcMatrix::zeros().with(2, 0, -1.0);
    assert!(matches!(
        nc_conditional_moments(&m, Axis::XGivenY, 0.0),
        Err(Error::ConditionalVariance { .. })
    ));
}

#[test]
fn equidisp_reduction() {
    let m = equidisp(1.0, 4.0, 5.0);
    match nc_equidisp_reduce(&m) {
        EquiDispReduction::EquiDispersed(p) => {
            assert_eq!((p.alpha(), p.beta(), p.gamma()), (1.0, 4.0, 5.0))
        }
        other => panic!("unexpected {other:?}"),
    }
    assert_eq!(
        nc_equidisp_reduce(&m.with(1, 0, 0.0)),
        EquiDispReduction::NotEquiDispersed("a10 != -1".into())
    );
    assert_eq!(
        nc_equidisp_reduce(&m.with(1, 1, 0.5)),
        EquiDispReduction::NotEquiDispersed("a11 != 0".into())
    );
}

#[test]
fn var_eq_meansq_examples() {
    let m = NcMatrix::zeros()
        .with(1, 0, -2.0)
        .with(2, 0, 2.0)
        .with(0, 1, -2.0)
        .with(0, 2, 2.0);
    assert_eq!(
        nc_check_var_eq_meansq(&m),
        VarMeanSqCheck::IndependentSolution {
            tau_x: 0.5,
            tau_y: 0.5
        }
    );
    for t in [-3.0, 0.0, 1.5] {
        let (mean, var) = nc_conditional_moments(&m, Axis::XGivenY, t).unwrap();
        assert_abs_diff_eq!(var, mean * mean, epsilon = 1e-15);
    }

    let with_a22 = m.with(2, 2, 1.0).with(1, 2, 0.3);
    assert_eq!(
        nc_check_var_eq_meansq(&with_a22),
        VarMeanSqCheck::NotAdmissible("a22 != 0".into())
    );
    let a11 = NcMatrix::zeros().with(1, 1, 1.0);
    assert!(matches!(
        nc_check_var_eq_meansq(&a11),
        VarMeanSqCheck::NotAdmissible(r) if r.starts_with("a11")
    ));
}

#[test]
fn worked_examples() {
    let example = NcMatrix::zeros()
        .with(1, 2, -1.0)
        .with(2, 1, -1.0)
        .with(1, 0, -2.0)
        .with(0, 1, -2.0)
        .with(2, 2, 1.0)
        .with(2, 0, 1.0)
        .with(0, 2, 1.0);
    assert_eq!(
        nc_mean_variance_order(&example).unwrap(),
        MeanVarianceOrder::MeanExceedsVariance
    );
    let mirror = example.with(1, 2, 1.0).with(2, 1, 1.0);
    assert_eq!(
        nc_mean_variance_order(&mirror).unwrap(),
        MeanVarianceOrder::Neither
    );
    assert_eq!(
        nc_mean_variance_order(&equidisp(1.0, 4.0, 5.0)).unwrap(),
        MeanVarianceOrder::Neither
    );
    assert!(matches!(
        nc_mean_variance_order(&NcMatrix::zeros()),
        Err(Error::InvalidModel(_))
    ));

    // Spot-check the ordering on a grid.
    for i in -40..=40 {
        let t = i as f64 * 0.5;
        let (mean, var) = nc_conditional_moments(&example, Axis::XGivenY, t).unwrap();
        assert!(mean > var);
    }
}

#[test]
fn variance_exceeds_mean_branch() {
    // a12 = a21 = 1, a10 = a01 = 0: 4 * 1 * 1 > 0 and a12^2 < 4 a22 a02.
    let m = NcMatrix::zeros()
        .with(1, 2, 1.0)
        .with(2, 1, 1.0)
        .with(2, 2, 1.0)
        .with(2, 0, 1.0)
        .with(0, 2, 1.0);
    assert_eq!(
        nc_mean_variance_order(&m).unwrap(),
        MeanVarianceOrder::VarianceExceedsMean
    );
    for i in -40..=40 {
        let t = i as f64 * 0.5;
        let (mean, var) = nc_conditional_moments(&m, Axis::YGivenX, t).unwrap();
        assert!(var > mean);
    }
}

mod props {
    use super::*;
    use proptest::prelude::*;

    proptest! {
        #[test]
        fn equidisp_embedding_has_equal_moments(alpha in 0.01f64..10.0, beta in 0.01f64..10.0,
                                              gamma in 0.0f64..10.0, t in -100.0f64..100.0) {
            let m = equidisp(alpha, beta, gamma);
            prop_assert!(matches!(nc_equidisp_reduce(&m), EquiDispReduction::EquiDispersed(_)));
            for axis in [Axis::XGivenY, Axis::YGivenX] {
                let (mean, var) = nc_conditional_moments(&m, axis, t).unwrap();
                prop_assert!((mean - var).abs() < 1e-12);
            }
        }

        #[test]
        fn general_nc_variances_positive(a22 in 0.01f64..5.0, r1 in -0.99f64..0.99, r2 in -0.99f64..0.99,
                                         a02 in 0.01f64..5.0, a20 in 0.01f64..5.0,
                                         a11 in -5.0f64..5.0, a10 in -5.0f64..5.0, a01 in -5.0f64..5.0) {
            let a12 = r1 * 2.0 * (a22 * a02).sqrt();
            let a21 = r2 * 2.0 * (a22 * a20).sqrt();
            let m = NcMatrix::zeros().with(2, 2, a22).with(0, 2, a02).with(2, 0, a20)
                .with(1, 2, a12).with(2, 1, a21).with(1, 1, a11).with(1, 0, a10).with(0, 1, a01);
            prop_assert_eq!(validate_nc(&m), Classification::GeneralNc);
            for i in -200..=200 {
                let t = i as f64 * 0.5;
                for axis in [Axis::XGivenY, Axis::YGivenX] {
                    let (_, var) = nc_conditional_moments(&m, axis, t).unwrap();
                    prop_assert!(var > 0.0);
                }
            }
        }
    }
}
