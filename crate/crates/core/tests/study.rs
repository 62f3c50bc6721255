use equidisp::model::EquiDispParams;
use equidisp::study::*;

#[test]
fn two_point_sd() {
    let (m, s) = mean_sd(&[1.0, 3.0]);
    assert_eq!(m, 2.0);
    assert_eq!(s, 2f64.sqrt());
}

#[test]
fn quantile_type7() {
    let v = [4.0, 1.0, 3.0, 2.0, 5.0];
    assert_eq!(quantile(&v, 0.0), 1.0);
    assert_eq!(quantile(&v, 0.5), 3.0);
    assert_eq!(quantile(&v, 1.0), 5.0);
    assert!((quantile(&v, 0.025) - 1.1).abs() < 1e-12);
}

#[test]
fn sig6_rounding() {
    assert_eq!(sig6(1.0340004), "1.034");
    assert_eq!(sig6(0.1234567), "0.123457");
    assert_eq!(sig6(0.0), "0");
}

fn cfg(reps: usize, par: usize) -> StudyConfig {
    StudyConfig {
        truth: EquiDispParams::new(1.0, 4.0, 5.0).unwrap(),
        sample_size: 50,
        replicates: reps,
        base_seed: 17,
        estimators: vec![Estimator::Pmle, Estimator::Mle],
        parallelism: par,
    }
}

#[test]
fn deterministic_across_parallelism() {
    let a = run_study(&cfg(6, 1)).unwrap();
    let b = run_study(&cfg(6, 4)).unwrap();
    assert_eq!(a.rows, b.rows);
    assert_eq!(a.rows.len(), 6);
}

#[test]
fn csv_round_trip() {
    let s = run_study(&cfg(3, 0)).unwrap();
    let text = summary_table(std::slice::from_ref(&s), TableFormat::Csv);
    assert_eq!(text.lines().count(), 1 + s.rows.len());
    let back = parse_summary_csv(&text).unwrap();
    for (a, b) in back.iter().zip(&s.rows) {
        assert_eq!(a.param, b.param);
        assert_eq!(a.estimator, b.estimator);
        assert_eq!(a.converged, b.converged);
        assert!((a.mean - b.mean).abs() <= 1e-5 * b.mean.abs());
        assert!(a.ci_lo <= a.ci_hi);
    }
}

#[test]
fn invalid_configs() {
    assert!(run_study(&cfg(1, 0)).is_err());
    let mut c = cfg(2, 0);
    c.sample_size = 4;
    assert!(run_study(&c).is_err());
    assert!(parse_summary_csv("a,b\n").is_err());
}

#[test]
fn estimates_concentrate_as_n_grows() {
    let sd_alpha = |n: usize| {
        let cfg = StudyConfig {
            truth: EquiDispParams::new(1.0, 4.0, 5.0).unwrap(),
            sample_size: n,
            replicates: 100,
            base_seed: 31,
            estimators: vec![Estimator::Mle],
            parallelism: 0,
        };
        let sum = run_study(&cfg).unwrap();
        for r in &sum.rows {
            assert!(r.sd >= 0.0 && r.ci_lo <= r.ci_hi, "{r:?}");
        }
        sum.row(Estimator::Mle, "alpha").unwrap().sd
    };
    let (small, large) = (sd_alpha(50), sd_alpha(500));
    assert!(large < small, "sd at 500 = {large}, at 50 = {small}");
}
