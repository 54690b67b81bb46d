mod common;

use common::{integrate, ln_gamma};
use fxjump::esscher::{
    calibration_report, esscher_dynamics, martingale_residual, mean_jump_size, risk_neutral_intensity,
    solve_esscher, to_risk_neutral, EsscherParams, JumpSpec,
};
use fxjump::markov_regime::{RegimeParams, RegimeSet};
use fxjump::Error;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn regime(mu: f64, sigma: f64, lambda: f64, rd: f64, rf: f64) -> RegimeParams {
    RegimeParams { mu, sigma, lambda, rd, rf }
}

/// `E[Z^a]` for `Z ~ Exp(theta)` by quadrature in `x = ln z`.
fn exp_moment_by_quadrature(theta: f64, a: f64) -> f64 {
    let f = |x: f64| ((a + 1.0) * x - theta * x.exp()).exp() * theta;
    let lo = -40.0 / (a + 1.0) - 5.0;
    let mode = ((a + 1.0) / theta).ln();
    integrate(f, lo, mode, 1e-15) + integrate(f, mode, mode + 6.0, 1e-15)
}

#[test]
fn exponential_moments_match_quadrature() {
    for theta in [2.5, 5.0, 9.0] {
        let spec = JumpSpec::exponential(theta).unwrap();
        for a in [-0.7, 0.0, 0.5, 1.0, 3.0, 7.5] {
            let want = exp_moment_by_quadrature(theta, a);
            let got = spec.moment(a).unwrap();
            assert!((got / want - 1.0).abs() < 1e-12, "theta={theta} a={a}: {got} vs {want}");
        }
        assert!(matches!(spec.moment(-1.0), Err(Error::Domain { .. })));
    }
}

#[test]
fn zero_k0_balances_the_jump_moments() {
    // M(t+1) = M(t) for Z ~ Exp(θ) at t = θ - 1, i.e. a unit tilted rate
    let regimes = RegimeSet::new(vec![regime(0.03, 0.12, 0.7, 0.02, 0.01), regime(-0.02, 0.2, 1.4, 0.05, 0.0)]).unwrap();
    for theta in [2.5, 3.5, 5.0] {
        let spec = JumpSpec::exponential(theta).unwrap();
        let p = solve_esscher(&regimes, &spec, 0.0).unwrap();
        let rn = to_risk_neutral(&regimes, &p, &spec).unwrap();
        for s in &rn.states {
            assert!((s.theta_j - (theta - 1.0)).abs() < 1e-12);
            assert_eq!(s.tilted, JumpSpec::exponential(theta / (s.theta_j + 1.0)).unwrap());
            assert!(s.k_star.abs() < 1e-12);
            assert!(s.residual.abs() <= 1e-12);
        }
    }
}

#[test]
fn continuous_tilt_absorbs_the_drift_gap() {
    let r = regime(0.07, 0.15, 0.9, 0.04, 0.01);
    let regimes = RegimeSet::new(vec![r]).unwrap();
    let spec = JumpSpec::exponential(4.0).unwrap();
    let k0 = 0.12;
    let p = solve_esscher(&regimes, &spec, k0).unwrap();
    let rn = to_risk_neutral(&regimes, &p, &spec).unwrap();
    let s = rn.state(0);
    assert!((s.drift - (r.rd - r.rf - s.lambda_star * s.k_star)).abs() < 1e-12);
    assert!((s.lambda_star * s.k_star - k0).abs() < 1e-12);
    assert!(martingale_residual(&regimes, &p, &spec, 0).unwrap().abs() < 1e-12);
}

#[test]
fn point_mass_with_positive_k0_is_unattainable() {
    let regimes = RegimeSet::new(vec![regime(0.0, 0.1, 1.0, 0.02, 0.01)]).unwrap();
    let spec = JumpSpec::point_mass(0.95).unwrap();
    match solve_esscher(&regimes, &spec, 0.2) {
        Err(e @ Error::Unbracketable { .. }) => {
            assert!(e.is_calibration());
            assert!(e.to_string().contains("attainable range"));
        }
        other => panic!("expected Unbracketable, got {other:?}"),
    }
    let p = solve_esscher(&regimes, &spec, -0.02).unwrap();
    let rn = to_risk_neutral(&regimes, &p, &spec).unwrap();
    assert!((rn.state(0).lambda_star * rn.state(0).k_star + 0.02).abs() < 1e-12);
}

#[test]
fn zero_intensity_only_supports_zero_k0() {
    let regimes = RegimeSet::new(vec![regime(0.0, 0.1, 0.0, 0.02, 0.01)]).unwrap();
    let spec = JumpSpec::exponential(5.0).unwrap();
    assert!(matches!(solve_esscher(&regimes, &spec, 0.1), Err(Error::ZeroIntensity { state: 0, .. })));
    let p = solve_esscher(&regimes, &spec, 0.0).unwrap();
    assert_eq!(p.theta_j, vec![0.0]);
    assert!(to_risk_neutral(&regimes, &p, &spec).is_ok());
}

#[test]
fn miscalibrated_parameters_are_rejected_but_inspectable() {
    let regimes = RegimeSet::new(vec![regime(0.05, 0.1, 1.0, 0.02, 0.01)]).unwrap();
    let spec = JumpSpec::exponential(5.0).unwrap();
    let mut p = solve_esscher(&regimes, &spec, 0.0).unwrap();
    p.theta_c[0] += 1.0;
    assert!(matches!(to_risk_neutral(&regimes, &p, &spec), Err(Error::NotMartingale { .. })));
    let rn = esscher_dynamics(&regimes, &p, &spec).unwrap();
    assert!((rn.state(0).residual.abs() - 0.01).abs() < 1e-12);

    let bad = EsscherParams { theta_c: vec![0.0], theta_j: vec![-1.5], k0: 0.0 };
    assert!(matches!(esscher_dynamics(&regimes, &bad, &spec), Err(Error::Domain { .. })));
}

#[test]
fn report_lists_every_state() {
    let regimes = RegimeSet::new(vec![regime(0.05, 0.1, 1.0, 0.02, 0.01), regime(0.0, 0.2, 0.5, 0.03, 0.03)]).unwrap();
    let spec = JumpSpec::exponential(5.0).unwrap();
    let rn = to_risk_neutral(&regimes, &solve_esscher(&regimes, &spec, 0.1).unwrap(), &spec).unwrap();
    let text = calibration_report(&spec, &rn);
    for key in ["state.0.theta_c", "state.1.theta_j", "state.1.residual", "max_abs_residual"] {
        assert!(text.contains(key), "{key} missing from\n{text}");
    }
}

#[test]
fn sampled_log_jumps_have_the_right_mean() {
    // E[ln Z] = -γ - ln θ
    let spec = JumpSpec::exponential(3.0).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let n = 200_000;
    let xs: Vec<f64> = (0..n).map(|_| spec.sample_log(&mut rng)).collect();
    let mean = xs.iter().sum::<f64>() / n as f64;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    let want = -0.577_215_664_901_532_9 - 3f64.ln();
    assert!((mean - want).abs() < 3.0 * (var / n as f64).sqrt());
    assert!((var - std::f64::consts::PI.powi(2) / 6.0).abs() < 0.02);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn tilted_mean_is_the_moment_ratio(theta in 1.2f64..12.0, tj in -0.95f64..25.0) {
        let spec = JumpSpec::exponential(theta).unwrap();
        let ratio = (ln_gamma(2.0 + tj) - ln_gamma(1.0 + tj)).exp() / theta;
        let tilted = spec.tilted(tj).unwrap();
        prop_assert!((tilted.mean() - ratio).abs() <= 1e-12 * ratio.max(1.0));
        prop_assert!((mean_jump_size(tj, &spec).unwrap() + 1.0 - ratio).abs() <= 1e-12 * ratio.max(1.0));
    }

    #[test]
    fn calibration_hits_k0(
        mu in -0.2f64..0.2,
        sigma in 0.02f64..0.6,
        lambda in 0.05f64..4.0,
        rd in 0.0f64..0.1,
        rf in 0.0f64..0.1,
        theta in 1.5f64..10.0,
        k0 in -1.0f64..1.0,
    ) {
        let regimes = RegimeSet::new(vec![regime(mu, sigma, lambda, rd, rf)]).unwrap();
        let spec = JumpSpec::exponential(theta).unwrap();
        let p = solve_esscher(&regimes, &spec, k0).unwrap();
        let rn = to_risk_neutral(&regimes, &p, &spec).unwrap();
        let s = rn.state(0);
        prop_assert!(s.residual.abs() <= 1e-10);
        prop_assert!((s.k_star * s.lambda_star - k0).abs() <= 1e-10);
        prop_assert!((risk_neutral_intensity(lambda, s.theta_j, &spec).unwrap() - s.lambda_star).abs() <= 1e-14 * s.lambda_star.max(1.0));
    }
}
