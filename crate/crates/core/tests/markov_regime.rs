mod common;

use common::{expm_taylor, synthetic_opens, EURUSD};
use fxjump::markov_regime::expm::expm;
use fxjump::markov_regime::{
    classify_counts, counts_csv, estimate_transition_matrix, occupation_mgf, occupation_times, parse_matrix_csv,
    parse_open_prices, simulate_chain_path, EstimatorWindows, RateMatrix, TransitionMatrix, Trend,
};
use fxjump::simulation::occupation_mgf_estimate;
use fxjump::Error;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn fixture(name: &str) -> String {
    std::fs::read_to_string(format!("{}/tests/fixtures/{name}", env!("CARGO_MANIFEST_DIR"))).unwrap()
}

fn random_generator(n: usize, rng: &mut ChaCha8Rng) -> RateMatrix {
    let mut rows = vec![vec![0.0; n]; n];
    for (i, row) in rows.iter_mut().enumerate() {
        for (j, x) in row.iter_mut().enumerate() {
            if i != j {
                *x = rng.random_range(0.0..3.0);
            }
        }
        row[i] = -row.iter().sum::<f64>();
    }
    RateMatrix::new(rows).unwrap()
}

fn step_windows() -> EstimatorWindows {
    EstimatorWindows::from_positional([1.0, 1.0, 10.0, 10.0, 1.0, 1.0, 10.0, 10.0]).unwrap()
}

#[test]
fn pade_expm_matches_taylor_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for n in 1..=5 {
        for scale in [0.01, 1.0, 30.0] {
            let g = random_generator(n, &mut rng);
            let a = g.matrix() * scale;
            let rows: Vec<Vec<f64>> = (0..n).map(|i| (0..n).map(|j| a[(i, j)]).collect()).collect();
            let want = expm_taylor(&rows);
            let got = expm(&a);
            for i in 0..n {
                for j in 0..n {
                    assert!((got[(i, j)] - want[i][j]).abs() < 1e-12, "n={n} scale={scale}");
                }
            }
        }
    }
}

#[test]
fn fixture_matrix_round_trips_to_a_generator() {
    let p = parse_matrix_csv(&fixture("eurusd_transition.csv"), 1.0 / 252.0).unwrap();
    for (i, row) in EURUSD.iter().enumerate() {
        for (j, &x) in row.iter().enumerate() {
            assert_eq!(p.get(i, j), x);
        }
    }
    let g = p.to_rate().unwrap();
    for i in 0..3 {
        let s: f64 = (0..3).map(|j| g.get(i, j)).sum();
        assert!(s.abs() < 1e-9, "row {i} sums to {s}");
        for j in 0..3 {
            if i != j {
                assert!(g.get(i, j) >= 0.0);
            }
        }
    }
    // exp(Π dt) = exp(P - I) differs from P by the series tail A²/2! + ...
    let a: Vec<Vec<f64>> = (0..3).map(|i| (0..3).map(|j| EURUSD[i][j] - if i == j { 1.0 } else { 0.0 }).collect()).collect();
    let norm_a = (0..3).map(|j| (0..3).map(|i| a[i][j].abs()).sum::<f64>()).fold(0.0, f64::max);
    let want = expm_taylor(&a);
    let back = expm(&(g.matrix() * (1.0 / 252.0)));
    let mut err = [0.0f64; 3];
    for i in 0..3 {
        for j in 0..3 {
            assert!((back[(i, j)] - want[i][j]).abs() < 1e-12);
            err[j] += (back[(i, j)] - EURUSD[i][j]).abs();
        }
    }
    let bound = norm_a.exp() - 1.0 - norm_a;
    assert!(err.iter().all(|&e| e <= bound), "{err:?} vs {bound}");
    let again = parse_matrix_csv(&p.to_csv(), 1.0 / 252.0).unwrap();
    assert_eq!(again, p);
}

#[test]
fn transition_matrix_validation() {
    assert!(TransitionMatrix::new(vec![vec![0.5, 0.6], vec![0.5, 0.5]], 1.0).is_err());
    assert!(TransitionMatrix::new(vec![vec![1.2, -0.2], vec![0.5, 0.5]], 1.0).is_err());
    assert!(TransitionMatrix::new(vec![vec![0.5, 0.5], vec![0.5, 0.5]], 0.0).is_err());
    assert!(RateMatrix::new(vec![vec![-1.0, 1.0], vec![2.0, -1.0]]).is_err());
}

#[test]
fn occupation_times_add_up_to_the_horizon() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let g = random_generator(4, &mut rng);
    for seed in 0..50 {
        let path = simulate_chain_path(&g, (seed % 4) as usize, 2.5, seed).unwrap();
        let occ = occupation_times(&path);
        let total: f64 = occ.times().iter().sum();
        assert!((total - 2.5).abs() < 1e-12);
        assert!(occ.times().iter().all(|&x| x >= 0.0));
        assert_eq!(path.initial_state(), (seed % 4) as usize);
    }
}

#[test]
fn occupation_mgf_matches_taylor_oracle_and_simulation() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for n in 2..=4 {
        let g = random_generator(n, &mut rng);
        let u: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..0.5)).collect();
        let t = 1.3;
        let a: Vec<Vec<f64>> =
            (0..n).map(|i| (0..n).map(|j| (g.get(i, j) + if i == j { u[i] } else { 0.0 }) * t).collect()).collect();
        let e = expm_taylor(&a);
        let want: f64 = e[0].iter().sum();
        let mut p0 = vec![0.0; n];
        p0[0] = 1.0;
        let got = occupation_mgf(&g, &u, t, &p0).unwrap();
        assert!((got - want).abs() < 1e-12 * want, "{got} vs {want}");

        let mc = occupation_mgf_estimate(&g, &u, t, 0, 50_000, 9).unwrap();
        assert!((mc.mean - want).abs() <= 3.0 * mc.std_error, "{mc:?} vs {want}");
    }
}

#[test]
fn absorbing_chain_has_deterministic_occupation() {
    let g = RateMatrix::new(vec![vec![0.0, 0.0], vec![1.0, -1.0]]).unwrap();
    let mc = occupation_mgf_estimate(&g, &[0.3, -0.2], 2.0, 0, 100, 1).unwrap();
    assert_eq!(mc.std_error, 0.0);
    assert!((mc.mean - 0.6f64.exp()).abs() < 1e-14);
    let dense = occupation_mgf(&g, &[0.3, -0.2], 2.0, &[1.0, 0.0]).unwrap();
    assert!((dense - 0.6f64.exp()).abs() < 1e-13);
}

#[test]
fn constant_prices_only_see_sideway() {
    let opens = parse_open_prices(&fixture("constant_prices.csv")).unwrap();
    assert_eq!(opens.len(), 200);
    match estimate_transition_matrix(&opens, &EstimatorWindows::default(), 1.0 / 252.0) {
        Err(Error::UnobservedRegimes { names, counts }) => {
            assert_eq!(names, vec!["up", "down"]);
            assert_eq!(counts.row_probabilities(Trend::Sideway), Some([0.0, 0.0, 1.0]));
        }
        other => panic!("expected unobserved regimes, got {other:?}"),
    }
}

#[test]
fn monotone_prices_go_up_to_up() {
    let opens = parse_open_prices(&fixture("monotone_prices.csv")).unwrap();
    let counts = classify_counts(&opens, &EstimatorWindows::default()).unwrap();
    assert_eq!(counts.row_probabilities(Trend::Up), Some([1.0, 0.0, 0.0]));
    // warm-up bars count as sideway priors
    assert_eq!(counts.row(Trend::Sideway), [30, 0, 0]);
    assert_eq!(counts.row(Trend::Down), [0, 0, 0]);
}

#[test]
fn counts_csv_echoes_the_eight_parameters() {
    let w = EstimatorWindows::from_positional([30.0, 30.0, 10.0, 10.0, 30.0, 30.0, 10.0, 10.0]).unwrap();
    let opens = synthetic_opens(&EURUSD, 3000, 5);
    let counts = classify_counts(&opens, &w).unwrap();
    let text = counts_csv(&counts, &w);
    assert!(text.starts_with(
        "# candles_back_up=30,candles_back_down=30,delta_back_up=10,delta_back_down=10,\
         candles_up=30,candles_down=30,delta_up=10,delta_down=10\n"
    ));
    assert_eq!(text.lines().nth(1), Some("state,up,down,sideway"));
}

#[test]
fn recovers_generating_frequencies() {
    let opens = synthetic_opens(&EURUSD, 60_000, 11);
    let est = estimate_transition_matrix(&opens, &step_windows(), 1.0 / 252.0).unwrap();
    for (i, row) in EURUSD.iter().enumerate() {
        for (j, &p) in row.iter().enumerate() {
            assert!((est.matrix.get(i, j) - p).abs() <= 0.05, "({i},{j}) {} vs {p}", est.matrix.get(i, j));
        }
    }
}

#[test]
fn short_series_is_rejected() {
    let opens = vec![1.0; 40];
    assert!(classify_counts(&opens, &EstimatorWindows::default()).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn estimated_rows_sum_to_exactly_one(seed in 0u64..10_000, drift in -0.0005f64..0.0005) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut x = 1.2;
        let opens: Vec<f64> = (0..800).map(|_| { x += drift + rng.random_range(-0.003..0.003); x }).collect();
        let w = EstimatorWindows::from_positional([5.0, 7.0, 10.0, 10.0, 4.0, 6.0, 15.0, 12.0]).unwrap();
        let counts = classify_counts(&opens, &w).unwrap();
        for t in Trend::ALL {
            if let Some(p) = counts.row_probabilities(t) {
                prop_assert_eq!(p[0] + p[1] + p[2], 1.0);
                prop_assert!(p.iter().all(|&v| (0.0..=1.0).contains(&v)));
            }
        }
    }

    #[test]
    fn generator_rows_sum_to_zero(seed in 0u64..1000, n in 1usize..6) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g = random_generator(n, &mut rng);
        let p = expm(&(g.matrix() * 0.7));
        for i in 0..n {
            let s: f64 = (0..n).map(|j| p[(i, j)]).sum();
            prop_assert!((s - 1.0).abs() < 1e-12);
        }
    }
}
