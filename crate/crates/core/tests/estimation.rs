use approx::assert_abs_diff_eq;

use equidisp::estimation::*;
use equidisp::model::{normalize, EquiDispParams};
use equidisp::numerics::{QuadConfig, RandomStream};
use equidisp::sample::Sample2D;
use equidisp::Error;

fn simulate(a: f64, b: f64, g: f64, n: usize, seed: u64) -> Sample2D {
    let p = EquiDispParams::new(a, b, g).unwrap();
    normalize(&p, &QuadConfig::default())
        .unwrap()
        .sample(n, &mut RandomStream::new(seed, 0))
        .unwrap()
}

#[test]
fn aic_arithmetic() {
    let r = FitReport::new("m", &[("a", 1.0), ("b", 2.0)], -10.0);
    assert_eq!(r.n_params, 2);
    assert_eq!(r.aic, 24.0);
}

#[test]
fn pmle_solves_estimating_equations() {
    let s = simulate(1.0, 4.0, 5.0, 500, 3);
    let r = fit_pmle(&s).unwrap();
    assert!(r.converged, "{r:?}");
    let p = r.equidisp_params().unwrap();
    for v in pseudo_score(&s, &p) {
        assert!(v.abs() < 1e-6, "residual {v}");
    }
    let kkt = pl_alpha_residual(&s, p.alpha(), p.gamma())
        .abs()
        .max(pl_beta_residual(&s, p.beta(), p.gamma()).abs())
        .max(if p.gamma() == 0.0 {
            pl_gamma_residual(&s, p.alpha(), p.beta(), 0.0).max(0.0)
        } else {
            pl_gamma_residual(&s, p.alpha(), p.beta(), p.gamma()).abs()
        });
    assert_eq!(r.gradient_norm, kkt);
}

#[test]
fn pmle_score_matches_finite_differences() {
    let s = simulate(1.0, 4.0, 5.0, 200, 4);
    let mut rng = RandomStream::new(99, 0);
    for _ in 0..20 {
        let p = [
            0.3 + 2.0 * rng.uniform(),
            1.0 + 6.0 * rng.uniform(),
            10.0 * rng.uniform() + 0.01,
        ];
        let at = |q: [f64; 3]| pseudo_loglik(&s, &EquiDispParams::new(q[0], q[1], q[2]).unwrap());
        let score = pseudo_score(&s, &EquiDispParams::new(p[0], p[1], p[2]).unwrap());
        for k in 0..3 {
            let h = 1e-5 * p[k];
            let (mut up, mut dn) = (p, p);
            up[k] += h;
            dn[k] -= h;
            let fd = (at(up) - at(dn)) / (2.0 * h);
            assert!(
                (fd - score[k]).abs() <= 1e-5 * score[k].abs().max(1.0),
                "k={k} fd={fd} analytic={}",
                score[k]
            );
        }
    }
}

#[test]
fn pmle_boundary_at_independence() {
    let mut zeros = 0;
    for seed in 0..20 {
        let s = simulate(1.0, 4.0, 0.0, 20, seed);
        let r = fit_pmle(&s).unwrap();
        assert!(r.converged);
        if r.estimate("gamma") == Some(0.0) {
            zeros += 1;
            assert!(r.notes.contains("boundary"));
        }
    }
    assert!(zeros > 0);
}

#[test]
fn pmle_rejects_all_zero_coordinates() {
    let s = Sample2D::new(vec![(0.0, 1.0), (0.0, 2.0), (0.0, 0.5)]).unwrap();
    assert!(matches!(fit_pmle(&s), Err(Error::DegenerateSample(_))));
    let s = Sample2D::new(vec![(1.0, 1.0), (2.0, 2.0)]).unwrap();
    assert!(fit_pmle(&s).is_err());
}

#[test]
fn independent_fit_symmetry() {
    let xs = [0.3, 1.2, 0.7, 2.1, 0.1];
    let s = Sample2D::from_columns(&xs, &xs).unwrap();
    let r = fit_independent_equidisp(&s).unwrap();
    assert_eq!(r.estimate("alpha"), r.estimate("beta"));
    assert_eq!(r.n_params, 2);
}

#[test]
fn independent_fit_agrees_with_joint_likelihood() {
    let s = simulate(0.8, 1.7, 0.0, 300, 8);
    let r = fit_independent_equidisp(&s).unwrap();
    let p = r.equidisp_params().unwrap();
    let ll = loglik(&s, &p, &QuadConfig::default()).unwrap();
    assert_abs_diff_eq!(ll, r.log_likelihood, epsilon = 1e-7);
}

#[test]
fn bivariate_normal_nesting_and_singularity() {
    let s = simulate(1.0, 4.0, 5.0, 200, 2);
    let dep = fit_bivariate_normal(&s, false).unwrap();
    let ind = fit_bivariate_normal(&s, true).unwrap();
    assert!(dep.log_likelihood >= ind.log_likelihood);
    assert_eq!((dep.n_params, ind.n_params), (5, 4));
    let line = Sample2D::new((0..10).map(|i| (i as f64, 2.0 * i as f64)).collect()).unwrap();
    assert!(matches!(
        fit_bivariate_normal(&line, false),
        Err(Error::DegenerateSample(_))
    ));
    assert!(fit_bivariate_normal(&line, true).is_ok());
}

#[test]
fn mle_improves_on_its_start_and_nests_independence() {
    let s = simulate(1.0, 4.0, 5.0, 400, 12);
    let quad = QuadConfig::fitting();
    let r = fit_mle(&s, None, &quad, &mle_optim_config()).unwrap();
    assert!(r.converged, "{r:?}");
    let pmle = fit_pmle(&s).unwrap().equidisp_params().unwrap();
    assert!(r.log_likelihood >= loglik(&s, &pmle, &quad).unwrap());
    let ind = fit_independent_equidisp(&s).unwrap();
    assert!(r.log_likelihood >= ind.log_likelihood - 1e-6);
}

#[test]
fn mle_on_independent_data_beats_pmle_start() {
    let s = simulate(1.0, 4.0, 0.0, 100, 21);
    let quad = QuadConfig::fitting();
    let pmle = fit_pmle(&s).unwrap().equidisp_params().unwrap();
    let r = fit_mle(&s, Some(pmle), &quad, &mle_optim_config()).unwrap();
    assert!(r.log_likelihood >= loglik(&s, &pmle, &quad).unwrap());
}

#[test]
fn compare_smoke() {
    let mut rng = RandomStream::new(4, 0);
    let s = Sample2D::new(
        (0..10)
            .map(|_| (rng.standard_normal(), rng.standard_normal()))
            .collect(),
    )
    .unwrap();
    let c = compare_models(&s, &CompareConfig::default());
    assert_eq!(c.ranked.len() + c.failures.len(), 4);
    assert!(c.ranked.iter().all(|r| r.aic.is_finite()));
    assert!(c.ranked.windows(2).all(|w| w[0].aic <= w[1].aic));
}

#[test]
fn report_json_field_names() {
    let r = FitReport::new(MODEL_BVN_INDEP, &[("mu1", 1.0)], -3.0);
    let v = serde_json::to_value(&r).unwrap();
    for key in [
        "model",
        "estimates",
        "loglik",
        "aic",
        "n_params",
        "converged",
        "iterations",
        "notes",
    ] {
        assert!(v.get(key).is_some(), "missing {key}");
    }
}

#[test]
fn estimators_recover_truth_at_n1000() {
    let s = simulate(1.0, 4.0, 5.0, 1000, 2024);
    let truth = [1.0, 4.0, 5.0];
    let mle = fit_mle(&s, None, &QuadConfig::fitting(), &mle_optim_config()).unwrap();
    assert!(mle.converged, "{mle:?}");
    let pmle = fit_pmle(&s).unwrap();
    assert!(pmle.converged, "{pmle:?}");
    let cases = [
        (&mle, [0.044, 0.268, 0.536]),
        (&pmle, [0.048, 0.250, 0.671]),
    ];
    for (r, sd) in cases {
        let est = r.equidisp_params().unwrap().as_array();
        for k in 0..3 {
            assert!(
                (est[k] - truth[k]).abs() <= 3.0 * sd[k],
                "{} parameter {k}: {} vs {}",
                r.model_name,
                est[k],
                truth[k]
            );
        }
    }
}

#[test]
fn log_kappa_slope_in_alpha_is_the_second_moment() {
    let quad = QuadConfig::default();
    for (a, b, g) in [(1.0, 4.0, 5.0), (0.5, 0.8, 0.3), (2.0, 1.0, 0.0)] {
        let p = EquiDispParams::new(a, b, g).unwrap();
        let m = normalize(&p, &quad).unwrap();
        let mo = m.moments().unwrap();
        let ex2 = mo.var_x + mo.ex * mo.ex;
        let h = 1e-4 * a;
        let lk = |alpha: f64| {
            normalize(&EquiDispParams::new(alpha, b, g).unwrap(), &quad)
                .unwrap()
                .log_kappa()
        };
        let n = 250.0;
        let slope = n * (lk(a + h) - lk(a - h)) / (2.0 * h);
        // log_kappa is minus the log of the integral, hence the sign.
        assert!(
            (slope - n * ex2).abs() <= 1e-4 * n * ex2,
            "({a}, {b}, {g}): {slope} vs {}",
            n * ex2
        );
    }
}
